//! `run` and `analyze`.
//!
//! Output directory layout:
//!
//! | file | contents |
//! |------|----------|
//! | `arm_a.jsonl`, `arm_b.jsonl` | raw arm records (`run` only) |
//! | `pairs.csv` | matched pairs with diagnostics header |
//! | `summary.csv` | counts `N(a, b, A, B)` |
//! | `conditionals.json` | `p(A, B \| a, b)` per setting pair |
//! | `no_signaling.json` | per-comparison z scores |
//! | `chsh.json` | CHSH value (2x2x2 only) |
//! | `feasibility.json` | joint-feasibility verdict |
//! | `manifest.txt` | resolved settings and output digests |
//!
//! Every file is written to a temporary name and renamed into place.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bellctx::coincidence::{match_events, read_pair_set, write_pair_set, MatchPolicy};
use bellctx::events::{read_arm_record, write_arm_record, Arm, ArmRecord, PairSet};
use bellctx::feasibility::{fine_check_problem, solve_joint_feasibility, FeasibilityResult, FineVerdict, MarginalProblem};
use bellctx::models::{apply_detector, simulate_box, simulate_lhv};
use bellctx::rng::derive_seed;
use bellctx::statistics::{chsh, conditionals, no_signaling_check, tabulate_pair_set, ChshValue, ConditionalTable, NoSignalingReport, SummaryTable};
use bellctx::Dims;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{validate_matching, AnalysisConfig, PipelineConfig, Resolved, Source};
use crate::error::{CliError, Result, WithPath};

pub const ARM_A_FILE: &str = "arm_a.jsonl";
pub const ARM_B_FILE: &str = "arm_b.jsonl";
pub const PAIRS_FILE: &str = "pairs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONDITIONALS_FILE: &str = "conditionals.json";
pub const NO_SIGNALING_FILE: &str = "no_signaling.json";
pub const CHSH_FILE: &str = "chsh.json";
pub const FEASIBILITY_FILE: &str = "feasibility.json";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Manifest key whose value differs between otherwise identical runs.
pub const TIMESTAMP_KEY: &str = "created_unix";

/// Seed tags for the per-arm detector streams.
const DETECTOR_TAG_A: u64 = 0xA;
const DETECTOR_TAG_B: u64 = 0xB;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub tolerance: f64,
    pub project_singles: bool,
    pub fine_check: FineVerdict,
    #[serde(flatten)]
    pub outcome: FeasibilityOutcome,
}

/// The solver verdict, or why there is none.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FeasibilityOutcome {
    Solved(FeasibilityResult),
    /// Some setting pair has no coincidences, so its table is unknown.
    Undetermined { status: Undetermined, missing_setting_pairs: Vec<(usize, usize)> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Undetermined {
    Undetermined,
}

impl FeasibilityOutcome {
    pub fn result(&self) -> Option<&FeasibilityResult> {
        match self {
            FeasibilityOutcome::Solved(r) => Some(r),
            FeasibilityOutcome::Undetermined { .. } => None,
        }
    }
}

#[derive(Serialize)]
struct UndeterminedChsh<'a> {
    status: Undetermined,
    missing_setting_pairs: &'a [(usize, usize)],
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub pairs: PairSet,
    /// Setting pairs without any coincidence.
    pub missing_setting_pairs: Vec<(usize, usize)>,
    pub summary: SummaryTable,
    pub conditionals: Vec<ConditionalTable>,
    pub no_signaling: NoSignalingReport,
    pub chsh: Option<ChshValue>,
    pub feasibility: FeasibilityReport,
}

/// Collects output files and their digests.
struct OutputDir {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).at(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> bellctx::Result<()>) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let path = self.dir.join(name);
        let result = (|| {
            let mut sink = HashingWriter { inner: BufWriter::new(fs::File::create(&tmp)?), hasher: Sha256::new() };
            body(&mut sink)?;
            sink.flush()?;
            let digest = hex::encode(sink.hasher.finalize());
            fs::rename(&tmp, &path)?;
            Ok::<_, bellctx::Error>(digest)
        })();
        match result {
            Ok(digest) => {
                self.written.push((name.to_string(), digest));
                Ok(())
            }
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                Err(CliError::File { path, source: e })
            }
        }
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    fn write_manifest(&mut self, mut entries: Vec<(String, String)>) -> Result<()> {
        for (name, digest) in &self.written {
            entries.push((format!("output.{name}.sha256"), digest.clone()));
        }
        self.write(MANIFEST_FILE, |w| {
            for (k, v) in &entries {
                writeln!(w, "{k}={v}")?;
            }
            Ok(())
        })
    }
}

struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).at(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn timestamp() -> String {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string()
}

fn preamble(command: &str) -> Vec<(String, String)> {
    vec![
        ("bellctx.version".into(), bellctx::VERSION.into()),
        ("command".into(), command.into()),
        (TIMESTAMP_KEY.into(), timestamp()),
    ]
}

/// Simulates both arms and passes them through their detectors.
pub fn simulate(resolved: &Resolved) -> Result<(ArmRecord, ArmRecord)> {
    let (a, b) = match &resolved.source {
        Source::Box(nsbox) => simulate_box(nsbox, &resolved.schedule)?,
        Source::Lhv { model, .. } => simulate_lhv(model, &resolved.schedule)?,
    };
    let seed = resolved.schedule.seed;
    let da = &resolved.detector_a;
    let db = &resolved.detector_b;
    let a = apply_detector(&a, &da.model, Some(&da.dark_setting_law), derive_seed(seed, DETECTOR_TAG_A))?;
    let b = apply_detector(&b, &db.model, Some(&db.dark_setting_law), derive_seed(seed, DETECTOR_TAG_B))?;
    Ok((a, b))
}

/// Tabulates a pair set and runs every check.
pub fn analyze_pairs(pairs: PairSet, opts: &AnalysisConfig) -> Result<Analysis> {
    opts.validate()?;
    let summary = tabulate_pair_set(&pairs)?;
    let conditionals = conditionals(&summary);
    let no_signaling = no_signaling_check(&summary, opts.z_threshold);
    let missing_setting_pairs: Vec<(usize, usize)> =
        conditionals.iter().filter(|t| t.is_empty()).map(|t| (t.setting_a, t.setting_b)).collect();
    // Empty slices are flagged, not fatal: CHSH and feasibility are then
    // reported as undetermined.
    let complete = missing_setting_pairs.is_empty();
    let chsh = if complete && summary.dims().is_binary_pair() { Some(chsh(&conditionals)?) } else { None };
    let (fine_check, outcome) = if complete {
        let mut problem = MarginalProblem::from_conditionals(&conditionals, opts.tolerance)?;
        if opts.project_singles {
            problem = problem.project_singles();
        }
        (fine_check_problem(&problem), FeasibilityOutcome::Solved(solve_joint_feasibility(&problem)?))
    } else {
        (
            FineVerdict::NotApplicable,
            FeasibilityOutcome::Undetermined { status: Undetermined::Undetermined, missing_setting_pairs: missing_setting_pairs.clone() },
        )
    };
    let feasibility = FeasibilityReport { tolerance: opts.tolerance, project_singles: opts.project_singles, fine_check, outcome };
    Ok(Analysis { pairs, missing_setting_pairs, summary, conditionals, no_signaling, chsh, feasibility })
}

fn write_analysis(out: &mut OutputDir, analysis: &Analysis) -> Result<()> {
    out.write(PAIRS_FILE, |w| write_pair_set(&analysis.pairs, w))?;
    out.write(SUMMARY_FILE, |w| analysis.summary.write_csv(w))?;
    out.write_json(CONDITIONALS_FILE, &analysis.conditionals)?;
    out.write_json(NO_SIGNALING_FILE, &analysis.no_signaling)?;
    if let Some(c) = &analysis.chsh {
        out.write_json(CHSH_FILE, c)?;
    } else if analysis.summary.dims().is_binary_pair() {
        let missing = UndeterminedChsh { status: Undetermined::Undetermined, missing_setting_pairs: &analysis.missing_setting_pairs };
        out.write_json(CHSH_FILE, &missing)?;
    }
    out.write_json(FEASIBILITY_FILE, &analysis.feasibility)?;
    Ok(())
}

fn result_entries(analysis: &Analysis) -> Vec<(String, String)> {
    let d = &analysis.pairs.diagnostics;
    let status = match analysis.feasibility.outcome.result() {
        Some(FeasibilityResult::Feasible { .. }) => "feasible",
        Some(FeasibilityResult::Infeasible { .. }) => "infeasible",
        Some(FeasibilityResult::InconsistentMarginals { .. }) => "inconsistent-marginals",
        None => "undetermined",
    };
    let mut out = vec![
        ("result.matched".to_string(), d.matched.to_string()),
        ("result.unmatched_a".to_string(), d.unmatched_a.to_string()),
        ("result.unmatched_b".to_string(), d.unmatched_b.to_string()),
        ("result.multi_candidate_events".to_string(), d.multi_candidate_events.to_string()),
        ("result.no_signaling_pass".to_string(), analysis.no_signaling.pass.to_string()),
    ];
    if let Some(c) = &analysis.chsh {
        out.push(("result.chsh".to_string(), format!("{:?}", c.s)));
    }
    out.push(("result.feasibility".to_string(), status.to_string()));
    out
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub analysis: Analysis,
}

/// Runs the pipeline described by a config file.
pub fn run(config_path: &Path, seed_override: Option<u64>) -> Result<RunOutcome> {
    let (config, bytes) = PipelineConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let resolved = config.resolve(base, seed_override)?;
    run_resolved(&resolved, &hex::encode(Sha256::digest(&bytes)))
}

/// Runs an already validated config. Nothing is written before this point.
pub fn run_resolved(resolved: &Resolved, config_sha256: &str) -> Result<RunOutcome> {
    let (a, b) = simulate(resolved)?;
    let mut out = OutputDir::create(&resolved.output_dir)?;
    out.write(ARM_A_FILE, |w| write_arm_record(&a, w))?;
    out.write(ARM_B_FILE, |w| write_arm_record(&b, w))?;
    let pairs = match_events(&a, &b, resolved.tau, resolved.policy)?;
    drop((a, b));
    let analysis = analyze_pairs(pairs, &resolved.analysis)?;
    write_analysis(&mut out, &analysis)?;

    let mut entries = preamble("run");
    entries.push(("config.sha256".into(), config_sha256.into()));
    entries.push(("seed".into(), resolved.schedule.seed.to_string()));
    entries.push(("detector.a.seed".into(), derive_seed(resolved.schedule.seed, DETECTOR_TAG_A).to_string()));
    entries.push(("detector.b.seed".into(), derive_seed(resolved.schedule.seed, DETECTOR_TAG_B).to_string()));
    entries.extend(resolved.manifest_entries());
    entries.extend(result_entries(&analysis));
    out.write_manifest(entries)?;
    Ok(RunOutcome { output_dir: resolved.output_dir.clone(), analysis })
}

/// Inputs and options for [`analyze`].
#[derive(Clone, Debug)]
pub struct AnalyzeRequest {
    /// One pair-set file, or two arm-record files.
    pub inputs: Vec<PathBuf>,
    /// Required for arm files. For a pair-set file it must agree with the
    /// window recorded in the file.
    pub tau: Option<f64>,
    pub policy: Option<MatchPolicy>,
    pub out: PathBuf,
    pub analysis: AnalysisConfig,
    /// Expected alphabet sizes; inputs declaring others are rejected.
    pub dims: Option<Dims>,
}

fn looks_like_arm_record(path: &Path) -> Result<bool> {
    let f = fs::File::open(path).at(path)?;
    for line in BufReader::new(f).lines() {
        let line = line.at(path)?;
        let t = line.trim();
        if !t.is_empty() {
            return Ok(t.starts_with('{'));
        }
    }
    Ok(true)
}

fn read_arm(path: &Path) -> Result<ArmRecord> {
    let f = fs::File::open(path).at(path)?;
    read_arm_record(BufReader::new(f), None).at(path)
}

fn check_arm_dims(path: &Path, record: &ArmRecord, dims: Option<Dims>) -> Result<()> {
    let Some(d) = dims else { return Ok(()) };
    let (s, o) = match record.arm() {
        Arm::A => (d.settings_a, d.outcomes_a),
        Arm::B => (d.settings_b, d.outcomes_b),
    };
    if record.num_settings() != s || record.num_outcomes() != o {
        return Err(CliError::File {
            path: path.to_path_buf(),
            source: bellctx::Error::DimensionMismatch(format!(
                "arm {} declares S={}, d={}; expected S={s}, d={o}",
                record.arm(),
                record.num_settings(),
                record.num_outcomes()
            )),
        });
    }
    Ok(())
}

/// Analyzes externally produced files.
pub fn analyze(req: &AnalyzeRequest) -> Result<Analysis> {
    req.analysis.validate()?;
    if let Some(tau) = req.tau {
        validate_matching(tau)?;
    }
    let mut input_entries = Vec::new();
    for (i, path) in req.inputs.iter().enumerate() {
        input_entries.push((format!("input.{i}.path"), path.display().to_string()));
        input_entries.push((format!("input.{i}.sha256"), sha256_file(path)?));
    }

    let pairs = match req.inputs.as_slice() {
        [single] if !looks_like_arm_record(single)? => {
            let f = fs::File::open(single).at(single)?;
            let set = read_pair_set(BufReader::new(f)).at(single)?;
            if req.tau.is_some_and(|t| t != set.tau) {
                return Err(CliError::config(format!("--tau disagrees with the window {} recorded in {}", set.tau, single.display())));
            }
            if req.policy.is_some_and(|p| p != set.policy) {
                return Err(CliError::config(format!("--policy disagrees with {} recorded in {}", set.policy, single.display())));
            }
            if let Some(d) = req.dims {
                if d != set.dims {
                    return Err(CliError::File {
                        path: single.clone(),
                        source: bellctx::Error::DimensionMismatch(format!("pair set declares {:?}, expected {d:?}", set.dims)),
                    });
                }
            }
            set
        }
        [first, second] => {
            let tau = req.tau.ok_or_else(|| CliError::config("--tau is required when matching arm files"))?;
            let (ra, rb) = (read_arm(first)?, read_arm(second)?);
            check_arm_dims(first, &ra, req.dims)?;
            check_arm_dims(second, &rb, req.dims)?;
            let (a, b) = match (ra.arm(), rb.arm()) {
                (Arm::A, Arm::B) => (ra, rb),
                (Arm::B, Arm::A) => (rb, ra),
                _ => return Err(CliError::config("expected one arm-A file and one arm-B file")),
            };
            match_events(&a, &b, tau, req.policy.unwrap_or_default())?
        }
        _ => return Err(CliError::config("analyze takes one pair-set file or two arm-record files")),
    };

    let analysis = analyze_pairs(pairs, &req.analysis)?;
    let mut out = OutputDir::create(&req.out)?;
    write_analysis(&mut out, &analysis)?;
    let mut entries = preamble("analyze");
    entries.extend(input_entries);
    entries.push(("matching.tau".into(), format!("{:?}", analysis.pairs.tau)));
    entries.push(("matching.policy".into(), analysis.pairs.policy.label().into()));
    let d = analysis.pairs.dims;
    entries.push(("dims".into(), format!("{},{},{},{}", d.settings_a, d.settings_b, d.outcomes_a, d.outcomes_b)));
    entries.push(("analysis.z_threshold".into(), format!("{:?}", req.analysis.z_threshold)));
    entries.push(("analysis.tolerance".into(), format!("{:?}", req.analysis.tolerance)));
    entries.push(("analysis.project_singles".into(), req.analysis.project_singles.to_string()));
    entries.push(("output.dir".into(), req.out.display().to_string()));
    entries.extend(result_entries(&analysis));
    out.write_manifest(entries)?;
    Ok(analysis)
}
