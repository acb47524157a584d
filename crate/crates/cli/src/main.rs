use std::path::PathBuf;
use std::process::ExitCode;

use bellctx::coincidence::MatchPolicy;
use bellctx::feasibility::FeasibilityResult;
use bellctx::Dims;
use bellctx_cli::config::AnalysisConfig;
use bellctx_cli::pipeline::Analysis;
use bellctx_cli::{analyze, exit, run, AnalyzeRequest, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bellctx", version, about = "Simulate and analyze two-arm Bell-type experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline from a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `schedule.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze one pair-set file or two arm-record files.
    Analyze {
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
        /// Coincidence window (required for arm files).
        #[arg(long)]
        tau: Option<f64>,
        /// greedy-nearest, first-within-window, or optimal.
        #[arg(long)]
        policy: Option<MatchPolicy>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = bellctx::statistics::DEFAULT_Z_THRESHOLD)]
        z_threshold: f64,
        #[arg(long, default_value_t = bellctx::feasibility::DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Average single-arm marginals over remote settings before solving.
        #[arg(long)]
        project_singles: bool,
        /// Expected S_A,S_B,d_A,d_B; inputs declaring other sizes are rejected.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<Dims>,
    },
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let v: Vec<usize> = s.split(',').map(|x| x.trim().parse::<usize>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v.as_slice() {
        &[sa, sb, da, db] => Dims::new(sa, sb, da, db).map_err(|e| e.to_string()),
        _ => Err("expected S_A,S_B,d_A,d_B".into()),
    }
}

fn report(analysis: &Analysis) {
    let d = &analysis.pairs.diagnostics;
    println!("pairs: {} matched, {} unmatched A, {} unmatched B", d.matched, d.unmatched_a, d.unmatched_b);
    println!(
        "no-signaling: {} (max |z| = {:.3})",
        if analysis.no_signaling.pass { "pass" } else { "FAIL" },
        analysis.no_signaling.max_abs_z
    );
    if let Some(c) = &analysis.chsh {
        println!("CHSH: S = {:.6} +/- {:.6}", c.s, c.sigma);
    }
    match analysis.feasibility.outcome.result() {
        Some(FeasibilityResult::Feasible { .. }) => println!("joint distribution: exists"),
        Some(FeasibilityResult::Infeasible { witness_value, classical_bound, .. }) => {
            println!("joint distribution: none (witness {witness_value:.6} > bound {classical_bound:.6})")
        }
        Some(FeasibilityResult::InconsistentMarginals { report }) => {
            println!("joint distribution: none, single-arm marginals differ by {:.3e}", report.max_discrepancy)
        }
        None => println!("joint distribution: undetermined, no coincidences for setting pairs {:?}", analysis.missing_setting_pairs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Run { config, seed } => run(&config, seed).map(|outcome| {
            report(&outcome.analysis);
            println!("outputs: {}", outcome.output_dir.display());
        }),
        Command::Analyze { inputs, tau, policy, out, z_threshold, tolerance, project_singles, dims } => {
            let req = AnalyzeRequest {
                inputs,
                tau,
                policy,
                out: out.clone(),
                analysis: AnalysisConfig { z_threshold, tolerance, project_singles },
                dims,
            };
            analyze(&req).map(|analysis| {
                report(&analysis);
                println!("outputs: {}", out.display());
            })
        }
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
