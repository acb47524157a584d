//! Pipeline configuration (TOML).
//!
//! ```toml
//! [model]
//! kind = "singlet"            # singlet | pr | box | lhv
//! angles_a = [0.0, 1.5707963267948966]
//! angles_b = [0.7853981633974483, 2.356194490192345]
//!
//! [schedule]
//! num_trials = 1000000
//! trial_period = 1.0
//! seed = 42
//!
//! [matching]
//! tau = 0.25
//! policy = "greedy-nearest"   # greedy-nearest | first-within-window | optimal
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths (`model.file`, `output.dir`) resolve against the directory
//! holding the config file. Everything except `matching.tau` has a default;
//! [`Resolved::manifest_entries`] lists every resolved value.

use std::fs;
use std::path::{Path, PathBuf};

use bellctx::coincidence::MatchPolicy;
use bellctx::events::Arm;
use bellctx::models::{pr_box, read_box_table, singlet_box, DetectorModel, LambdaLaw, LhvModel, NoSignalingBox, Response, TrialSchedule};
use bellctx::{feasibility, statistics, Dims};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub detector: DetectorsConfig,
    pub matching: MatchingConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Spin singlet measured along the given angles, `E = −cos(θ_a − θ_b)`.
    Singlet { angles_a: Vec<f64>, angles_b: Vec<f64> },
    /// The 2x2x2 PR box.
    Pr,
    /// A box table file.
    Box { file: PathBuf },
    Lhv {
        settings_a: usize,
        settings_b: usize,
        outcomes_a: usize,
        outcomes_b: usize,
        lambda: LambdaLaw,
        response_a: Response,
        response_b: Response,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub num_trials: u64,
    #[serde(default = "one")]
    pub trial_period: f64,
    /// Defaults to uniform over the model's settings.
    pub setting_law_a: Option<Vec<f64>>,
    pub setting_law_b: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorsConfig {
    #[serde(default)]
    pub a: DetectorConfig,
    #[serde(default)]
    pub b: DetectorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub jitter_sigma: f64,
    #[serde(default)]
    pub dark_rate: f64,
    #[serde(default)]
    pub time_offset: f64,
    /// Setting law for dark counts; defaults to the arm's setting law.
    pub dark_setting_law: Option<Vec<f64>>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let ideal = DetectorModel::ideal();
        DetectorConfig {
            efficiency: ideal.efficiency,
            jitter_sigma: ideal.jitter_sigma,
            dark_rate: ideal.dark_rate,
            time_offset: ideal.time_offset,
            dark_setting_law: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingConfig {
    pub tau: f64,
    #[serde(default)]
    pub policy: MatchPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub project_singles: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { z_threshold: default_z(), tolerance: default_tolerance(), project_singles: false }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_threshold.is_finite() && self.z_threshold > 0.0) {
            return Err(CliError::config(format!("analysis.z_threshold must be positive, got {}", self.z_threshold)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(CliError::config(format!("analysis.tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out() }
    }
}

fn one() -> f64 {
    1.0
}

fn default_z() -> f64 {
    statistics::DEFAULT_Z_THRESHOLD
}

fn default_tolerance() -> f64 {
    feasibility::DEFAULT_TOLERANCE
}

fn default_out() -> PathBuf {
    PathBuf::from("bellctx-out")
}

pub fn validate_matching(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(CliError::config(format!("matching.tau must be positive and finite, got {tau}")));
    }
    Ok(())
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    /// Reads and parses a config file, returning it with its raw bytes.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Ok((PipelineConfig::parse(text)?, bytes))
    }

    /// Validates everything and fills in defaults. `base_dir` anchors
    /// relative paths.
    pub fn resolve(&self, base_dir: &Path, seed_override: Option<u64>) -> Result<Resolved> {
        let source = match &self.model {
            ModelConfig::Singlet { angles_a, angles_b } => {
                Source::Box(singlet_box(angles_a, angles_b).map_err(|e| CliError::config(format!("model: {e}")))?)
            }
            ModelConfig::Pr => Source::Box(pr_box()),
            ModelConfig::Box { file } => {
                let path = base_dir.join(file);
                let f = fs::File::open(&path).map_err(|e| CliError::config(format!("model.file {}: {e}", path.display())))?;
                let nsbox = read_box_table(std::io::BufReader::new(f))
                    .map_err(|e| CliError::config(format!("model.file {}: {e}", path.display())))?;
                Source::Box(nsbox)
            }
            ModelConfig::Lhv { settings_a, settings_b, outcomes_a, outcomes_b, lambda, response_a, response_b } => {
                let model = LhvModel {
                    lambda: lambda.clone(),
                    response_a: response_a.clone(),
                    response_b: response_b.clone(),
                    outcomes_a: *outcomes_a,
                    outcomes_b: *outcomes_b,
                };
                model.validate(*settings_a, *settings_b).map_err(|e| CliError::config(format!("model: {e}")))?;
                let dims = Dims::new(*settings_a, *settings_b, *outcomes_a, *outcomes_b).map_err(|e| CliError::config(format!("model: {e}")))?;
                Source::Lhv { model, dims }
            }
        };
        let dims = source.dims();

        let s = &self.schedule;
        let uniform = |n: usize| vec![1.0 / n as f64; n];
        let schedule = TrialSchedule {
            num_trials: s.num_trials,
            trial_period: s.trial_period,
            setting_law_a: s.setting_law_a.clone().unwrap_or_else(|| uniform(dims.settings_a)),
            setting_law_b: s.setting_law_b.clone().unwrap_or_else(|| uniform(dims.settings_b)),
            seed: seed_override.unwrap_or(s.seed),
        };
        schedule.validate().map_err(|e| CliError::config(format!("schedule: {e}")))?;
        if schedule.setting_law_a.len() != dims.settings_a || schedule.setting_law_b.len() != dims.settings_b {
            return Err(CliError::config(format!(
                "schedule: setting laws have {} and {} entries, model has {} and {} settings",
                schedule.setting_law_a.len(),
                schedule.setting_law_b.len(),
                dims.settings_a,
                dims.settings_b
            )));
        }

        let detector = |cfg: &DetectorConfig, arm: Arm, law: &[f64]| -> Result<ResolvedDetector> {
            let model = DetectorModel {
                efficiency: cfg.efficiency,
                jitter_sigma: cfg.jitter_sigma,
                dark_rate: cfg.dark_rate,
                time_offset: cfg.time_offset,
            };
            model.validate().map_err(|e| CliError::config(format!("detector.{}: {e}", arm.to_string().to_lowercase())))?;
            let dark_setting_law = cfg.dark_setting_law.clone().unwrap_or_else(|| law.to_vec());
            let total: f64 = dark_setting_law.iter().sum();
            if dark_setting_law.len() != law.len()
                || dark_setting_law.iter().any(|p| !(p.is_finite() && *p >= 0.0))
                || (total - 1.0).abs() > bellctx::models::PROBABILITY_TOLERANCE
            {
                return Err(CliError::config(format!(
                    "detector.{}.dark_setting_law must be a distribution over {} settings",
                    arm.to_string().to_lowercase(),
                    law.len()
                )));
            }
            Ok(ResolvedDetector { model, dark_setting_law })
        };
        let detector_a = detector(&self.detector.a, Arm::A, &schedule.setting_law_a)?;
        let detector_b = detector(&self.detector.b, Arm::B, &schedule.setting_law_b)?;

        validate_matching(self.matching.tau)?;
        self.analysis.validate()?;

        Ok(Resolved {
            model: self.model.clone(),
            source,
            schedule,
            detector_a,
            detector_b,
            tau: self.matching.tau,
            policy: self.matching.policy,
            analysis: self.analysis,
            output_dir: base_dir.join(&self.output.dir),
        })
    }
}

/// What generates the trials.
#[derive(Clone, Debug)]
pub enum Source {
    Box(NoSignalingBox),
    Lhv { model: LhvModel, dims: Dims },
}

impl Source {
    pub fn dims(&self) -> Dims {
        match self {
            Source::Box(b) => b.dims(),
            Source::Lhv { dims, .. } => *dims,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolvedDetector {
    pub model: DetectorModel,
    pub dark_setting_law: Vec<f64>,
}

/// A validated config with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: ModelConfig,
    pub source: Source,
    pub schedule: TrialSchedule,
    pub detector_a: ResolvedDetector,
    pub detector_b: ResolvedDetector,
    pub tau: f64,
    pub policy: MatchPolicy,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("config values serialize")
}

impl Resolved {
    /// Every resolved setting as flat `key=value` pairs in a fixed order.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let d = self.source.dims();
        match &self.model {
            ModelConfig::Singlet { angles_a, angles_b } => {
                push("model.kind", "singlet".into());
                push("model.angles_a", json(angles_a));
                push("model.angles_b", json(angles_b));
            }
            ModelConfig::Pr => push("model.kind", "pr".into()),
            ModelConfig::Box { file } => {
                push("model.kind", "box".into());
                push("model.file", file.display().to_string());
            }
            ModelConfig::Lhv { lambda, response_a, response_b, .. } => {
                push("model.kind", "lhv".into());
                push("model.lambda", json(lambda));
                push("model.response_a", json(response_a));
                push("model.response_b", json(response_b));
            }
        }
        push("model.settings_a", d.settings_a.to_string());
        push("model.settings_b", d.settings_b.to_string());
        push("model.outcomes_a", d.outcomes_a.to_string());
        push("model.outcomes_b", d.outcomes_b.to_string());
        if let Source::Box(b) = &self.source {
            push("model.box", json(&b.probs()));
        }
        let s = &self.schedule;
        push("schedule.num_trials", s.num_trials.to_string());
        push("schedule.trial_period", format!("{:?}", s.trial_period));
        push("schedule.setting_law_a", json(&s.setting_law_a));
        push("schedule.setting_law_b", json(&s.setting_law_b));
        push("schedule.seed", s.seed.to_string());
        for (name, det) in [("a", &self.detector_a), ("b", &self.detector_b)] {
            let m = det.model;
            push(&format!("detector.{name}.efficiency"), format!("{:?}", m.efficiency));
            push(&format!("detector.{name}.jitter_sigma"), format!("{:?}", m.jitter_sigma));
            push(&format!("detector.{name}.dark_rate"), format!("{:?}", m.dark_rate));
            push(&format!("detector.{name}.time_offset"), format!("{:?}", m.time_offset));
            push(&format!("detector.{name}.dark_setting_law"), json(&det.dark_setting_law));
        }
        push("matching.tau", format!("{:?}", self.tau));
        push("matching.policy", self.policy.label().into());
        push("analysis.z_threshold", format!("{:?}", self.analysis.z_threshold));
        push("analysis.tolerance", format!("{:?}", self.analysis.tolerance));
        push("analysis.project_singles", self.analysis.project_singles.to_string());
        push("output.dir", self.output_dir.display().to_string());
        out
    }
}
