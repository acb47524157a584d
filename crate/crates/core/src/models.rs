//! Synthetic two-arm experiments.
//!
//! Trials are independent and identically distributed: trial `k` happens at
//! nominal time `k * trial_period` on both arms, draws its settings from the
//! per-arm setting laws and its outcomes from either a local hidden-variable
//! model or a no-signaling box. Each trial consumes its own random substream
//! (see [`crate::rng`]), so output is a pure function of the seed.
//!
//! Per-trial draw order is fixed: setting `a`, setting `b`, then either the
//! hidden variable (one uniform for a circle or discrete law, two for the
//! sphere) or a single uniform selecting the joint outcome cell.

use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::events::{sort_by_time, Arm, ArmHeader, ArmRecord, DetectionEvent};
use crate::rng::{cumulative, sample_cdf, streams, RandomStream, StreamFactory};
use crate::{Dims, Error, Result};

/// Tolerance for probability-vector normalization and no-signaling.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(format!("{name}: empty probability vector")));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::invalid(format!("{name}: entry {x} is not a nonnegative probability")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::invalid(format!("{name}: probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// When and how settings are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSchedule {
    pub num_trials: u64,
    pub trial_period: f64,
    pub setting_law_a: Vec<f64>,
    pub setting_law_b: Vec<f64>,
    pub seed: u64,
}

impl TrialSchedule {
    /// Uniform setting laws over `settings_a` and `settings_b` choices.
    pub fn uniform(num_trials: u64, trial_period: f64, settings_a: usize, settings_b: usize, seed: u64) -> Self {
        TrialSchedule {
            num_trials,
            trial_period,
            setting_law_a: vec![1.0 / settings_a as f64; settings_a],
            setting_law_b: vec![1.0 / settings_b as f64; settings_b],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.trial_period.is_finite() && self.trial_period > 0.0) {
            return Err(Error::invalid(format!("trial_period must be positive, got {}", self.trial_period)));
        }
        check_distribution("setting_law_a", &self.setting_law_a)?;
        check_distribution("setting_law_b", &self.setting_law_b)?;
        Ok(())
    }

    pub fn trial_time(&self, k: u64) -> f64 {
        k as f64 * self.trial_period
    }
}

/// Law of the hidden variable λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum LambdaLaw {
    /// Uniform angle on `[0, 2π)`.
    Circle,
    /// Uniform direction on the unit sphere.
    Sphere,
    /// Finite law over indices `0..weights.len()`.
    Discrete { weights: Vec<f64> },
}

/// A realized hidden variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    Angle(f64),
    Direction([f64; 3]),
    Index(usize),
}

impl LambdaLaw {
    fn validate(&self) -> Result<()> {
        match self {
            LambdaLaw::Discrete { weights } => check_distribution("lambda weights", weights),
            _ => Ok(()),
        }
    }

    /// Draws λ. `cdf` is the cumulative weight vector for discrete laws.
    fn sample(&self, cdf: &[f64], rng: &mut RandomStream) -> Lambda {
        match self {
            LambdaLaw::Circle => Lambda::Angle(TAU * rng.uniform()),
            LambdaLaw::Sphere => {
                let z = 2.0 * rng.uniform() - 1.0;
                let phi = TAU * rng.uniform();
                let r = (1.0 - z * z).max(0.0).sqrt();
                Lambda::Direction([r * phi.cos(), r * phi.sin(), z])
            }
            LambdaLaw::Discrete { .. } => Lambda::Index(rng.categorical(cdf)),
        }
    }
}

/// Deterministic response `outcome = f(setting, λ)` for one arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Response {
    /// Same outcome for every setting and λ.
    Constant { outcome: usize },
    /// For a circle law: outcome is `[cos(λ − θ_s) < 0]`, or its complement
    /// when `flipped`.
    HalfCircle { angles: Vec<f64>, #[serde(default)] flipped: bool },
    /// For a sphere law: outcome is `[λ · n_s < 0]`, or its complement when
    /// `flipped`. Axes need not be normalized.
    Hemisphere { axes: Vec<[f64; 3]>, #[serde(default)] flipped: bool },
    /// For a discrete law: `outcomes[setting][λ]`.
    Table { outcomes: Vec<Vec<usize>> },
}

impl Response {
    /// Number of settings the response is defined for; `None` if any.
    pub fn num_settings(&self) -> Option<usize> {
        match self {
            Response::Constant { .. } => None,
            Response::HalfCircle { angles, .. } => Some(angles.len()),
            Response::Hemisphere { axes, .. } => Some(axes.len()),
            Response::Table { outcomes } => Some(outcomes.len()),
        }
    }

    fn validate(&self, law: &LambdaLaw, settings: usize, outcomes: usize, arm: Arm) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(format!("response_{}: {msg}", arm.to_string().to_lowercase())));
        if let Some(s) = self.num_settings() {
            if s != settings {
                return fail(format!("defined for {s} settings, setting law has {settings}"));
            }
        }
        match (self, law) {
            (Response::Constant { outcome }, _) => {
                if *outcome >= outcomes {
                    return fail(format!("outcome {outcome} out of range"));
                }
            }
            (Response::HalfCircle { angles, .. }, LambdaLaw::Circle) => {
                if angles.iter().any(|x| !x.is_finite()) {
                    return fail("non-finite angle".into());
                }
            }
            (Response::Hemisphere { axes, .. }, LambdaLaw::Sphere) => {
                if axes.iter().any(|n| n.iter().any(|x| !x.is_finite()) || n.iter().all(|x| *x == 0.0)) {
                    return fail("axes must be finite and nonzero".into());
                }
            }
            (Response::Table { outcomes: table }, LambdaLaw::Discrete { weights }) => {
                for row in table {
                    if row.len() != weights.len() {
                        return fail(format!("table row has {} entries, lambda law has {}", row.len(), weights.len()));
                    }
                    if let Some(o) = row.iter().find(|o| **o >= outcomes) {
                        return fail(format!("outcome {o} out of range"));
                    }
                }
            }
            _ => return fail(format!("response kind incompatible with lambda law {law:?}")),
        }
        Ok(())
    }

    #[inline]
    pub fn outcome(&self, setting: usize, lambda: &Lambda) -> usize {
        match (self, lambda) {
            (Response::Constant { outcome }, _) => *outcome,
            (Response::HalfCircle { angles, flipped }, Lambda::Angle(l)) => {
                ((l - angles[setting]).cos() < 0.0) as usize ^ *flipped as usize
            }
            (Response::Hemisphere { axes, flipped }, Lambda::Direction(v)) => {
                let n = axes[setting];
                let dot = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
                (dot < 0.0) as usize ^ *flipped as usize
            }
            (Response::Table { outcomes }, Lambda::Index(i)) => outcomes[setting][*i],
            _ => unreachable!("response validated against lambda law"),
        }
    }
}

/// Local hidden-variable model: a law for λ and one deterministic response
/// function per arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhvModel {
    pub lambda: LambdaLaw,
    pub response_a: Response,
    pub response_b: Response,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
}

impl LhvModel {
    pub fn validate(&self, settings_a: usize, settings_b: usize) -> Result<()> {
        if self.outcomes_a < 2 || self.outcomes_b < 2 {
            return Err(Error::invalid("LHV model needs at least two outcomes per arm"));
        }
        self.lambda.validate()?;
        self.response_a.validate(&self.lambda, settings_a, self.outcomes_a, Arm::A)?;
        self.response_b.validate(&self.lambda, settings_b, self.outcomes_b, Arm::B)?;
        Ok(())
    }

    /// The box `p(A, B | a, b)` obtained by summing over a discrete λ.
    /// Continuous laws have no exact finite marginal and are rejected.
    pub fn marginal_box(&self, settings_a: usize, settings_b: usize) -> Result<NoSignalingBox> {
        self.validate(settings_a, settings_b)?;
        let LambdaLaw::Discrete { weights } = &self.lambda else {
            return Err(Error::invalid("exact marginal box needs a discrete lambda law"));
        };
        let dims = Dims::new(settings_a, settings_b, self.outcomes_a, self.outcomes_b)?;
        let mut probs = vec![0.0; dims.num_cells()];
        for a in 0..settings_a {
            for b in 0..settings_b {
                for (i, w) in weights.iter().enumerate() {
                    let l = Lambda::Index(i);
                    let cell = dims.cell(a, b, self.response_a.outcome(a, &l), self.response_b.outcome(b, &l));
                    probs[cell] += w;
                }
            }
        }
        NoSignalingBox::new(dims, probs)
    }
}

/// A conditional law `p(A, B | a, b)` with no-signaling marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingBox {
    dims: Dims,
    probs: Vec<f64>,
}

impl NoSignalingBox {
    /// `probs` is indexed by [`Dims::cell`]. Each `(a, b)` slice must be a
    /// distribution and the single-arm marginals must not depend on the
    /// remote setting, both within [`PROBABILITY_TOLERANCE`].
    pub fn new(dims: Dims, probs: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        if probs.len() != dims.num_cells() {
            return Err(Error::invalid(format!("box table has {} entries, expected {}", probs.len(), dims.num_cells())));
        }
        let b = NoSignalingBox { dims, probs };
        for a in 0..dims.settings_a {
            for bb in 0..dims.settings_b {
                check_distribution(&format!("box slice (a={a}, b={bb})"), b.slice(a, bb))?;
            }
        }
        let gap = b.signaling_gap();
        if gap > PROBABILITY_TOLERANCE {
            return Err(Error::invalid(format!("box signals: single-arm marginals differ by {gap:e}")));
        }
        Ok(b)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: usize, b: usize, oa: usize, ob: usize) -> f64 {
        self.probs[self.dims.cell(a, b, oa, ob)]
    }

    /// The `d_A × d_B` table for setting pair `(a, b)`, row-major in `A`.
    pub fn slice(&self, a: usize, b: usize) -> &[f64] {
        let start = self.dims.cell(a, b, 0, 0);
        &self.probs[start..start + self.dims.table_len()]
    }

    /// Largest difference of a single-arm marginal across remote settings.
    pub fn signaling_gap(&self) -> f64 {
        let d = self.dims;
        let marginal_a = |a: usize, b: usize, oa: usize| (0..d.outcomes_b).map(|ob| self.prob(a, b, oa, ob)).sum::<f64>();
        let marginal_b = |a: usize, b: usize, ob: usize| (0..d.outcomes_a).map(|oa| self.prob(a, b, oa, ob)).sum::<f64>();
        let mut gap: f64 = 0.0;
        for a in 0..d.settings_a {
            for oa in 0..d.outcomes_a {
                let ref_val = marginal_a(a, 0, oa);
                for b in 1..d.settings_b {
                    gap = gap.max((marginal_a(a, b, oa) - ref_val).abs());
                }
            }
        }
        for b in 0..d.settings_b {
            for ob in 0..d.outcomes_b {
                let ref_val = marginal_b(0, b, ob);
                for a in 1..d.settings_a {
                    gap = gap.max((marginal_b(a, b, ob) - ref_val).abs());
                }
            }
        }
        gap
    }

    /// `Σ s_A s_B p(A, B | a, b)` with outcome 0 ↦ +1 and 1 ↦ −1.
    pub fn correlator(&self, a: usize, b: usize) -> Result<f64> {
        if self.dims.outcomes_a != 2 || self.dims.outcomes_b != 2 {
            return Err(Error::UnsupportedAlphabet { outcomes_a: self.dims.outcomes_a, outcomes_b: self.dims.outcomes_b });
        }
        let s = self.slice(a, b);
        Ok(s[0] - s[1] - s[2] + s[3])
    }

    /// `(1 − w) · self + w · other`.
    pub fn mix(&self, other: &NoSignalingBox, w: f64) -> Result<NoSignalingBox> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("cannot mix boxes of different dimensions".into()));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!("mixing weight {w} outside [0, 1]")));
        }
        let probs = self.probs.iter().zip(&other.probs).map(|(p, q)| (1.0 - w) * p + w * q).collect();
        NoSignalingBox::new(self.dims, probs)
    }

    /// Uniform outcomes for every setting pair.
    pub fn uniform(dims: Dims) -> Result<Self> {
        NoSignalingBox::new(dims, vec![1.0 / dims.table_len() as f64; dims.num_cells()])
    }

    /// Independent outcomes: `p(A, B | a, b) = u_a(A) · v_b(B)`.
    pub fn product(u: &[Vec<f64>], v: &[Vec<f64>]) -> Result<Self> {
        if u.is_empty() || v.is_empty() {
            return Err(Error::invalid("product box needs at least one setting per arm"));
        }
        let da = u[0].len();
        let db = v[0].len();
        if u.iter().any(|x| x.len() != da) || v.iter().any(|x| x.len() != db) {
            return Err(Error::invalid("product box marginals must share one outcome alphabet per arm"));
        }
        for x in u.iter().chain(v) {
            check_distribution("product marginal", x)?;
        }
        let dims = Dims::new(u.len(), v.len(), da, db)?;
        let mut probs = vec![0.0; dims.num_cells()];
        for (a, ua) in u.iter().enumerate() {
            for (b, vb) in v.iter().enumerate() {
                for (oa, pa) in ua.iter().enumerate() {
                    for (ob, pb) in vb.iter().enumerate() {
                        probs[dims.cell(a, b, oa, ob)] = pa * pb;
                    }
                }
            }
        }
        NoSignalingBox::new(dims, probs)
    }

    /// Binary box with unbiased single-arm marginals and the given
    /// correlators `e[a][b]`, i.e. `p(A, B | a, b) = (1 + s_A s_B e_ab) / 4`.
    ///
    /// Each slice is built as `{big, small}` with `big = 1/4 + |e|/4` and
    /// `small = 1/2 − big`; the subtraction is exact for `big ∈ [1/4, 1/2]`,
    /// so every single-arm marginal is exactly 1/2 in floating point.
    pub fn binary_from_correlators(e: &[Vec<f64>]) -> Result<Self> {
        let sa = e.len();
        let sb = e.first().map_or(0, Vec::len);
        if sa == 0 || sb == 0 || e.iter().any(|row| row.len() != sb) {
            return Err(Error::invalid("correlator matrix must be nonempty and rectangular"));
        }
        let dims = Dims::new(sa, sb, 2, 2)?;
        let mut probs = vec![0.0; dims.num_cells()];
        for (a, row) in e.iter().enumerate() {
            for (b, &corr) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&corr) {
                    return Err(Error::invalid(format!("correlator {corr} outside [-1, 1]")));
                }
                let big = 0.25 + corr.abs() / 4.0;
                let small = 0.5 - big;
                let (same, diff) = if corr >= 0.0 { (big, small) } else { (small, big) };
                probs[dims.cell(a, b, 0, 0)] = same;
                probs[dims.cell(a, b, 1, 1)] = same;
                probs[dims.cell(a, b, 0, 1)] = diff;
                probs[dims.cell(a, b, 1, 0)] = diff;
            }
        }
        NoSignalingBox::new(dims, probs)
    }
}

/// Spin-singlet statistics: `E(a, b) = −cos(θ_a − θ_b)` with unbiased
/// outcomes on each arm.
pub fn singlet_box(angles_a: &[f64], angles_b: &[f64]) -> Result<NoSignalingBox> {
    if angles_a.is_empty() || angles_b.is_empty() {
        return Err(Error::invalid("singlet box needs at least one angle per arm"));
    }
    if angles_a.iter().chain(angles_b).any(|x| !x.is_finite()) {
        return Err(Error::invalid("angles must be finite"));
    }
    let e: Vec<Vec<f64>> = angles_a
        .iter()
        .map(|ta| angles_b.iter().map(|tb| -(ta - tb).cos()).collect())
        .collect();
    NoSignalingBox::binary_from_correlators(&e)
}

/// Popescu–Rohrlich box: uniform marginals with `A ⊕ B = a · b`.
pub fn pr_box() -> NoSignalingBox {
    let dims = Dims::binary_pair();
    let mut probs = vec![0.0; dims.num_cells()];
    for a in 0..2 {
        for b in 0..2 {
            for oa in 0..2 {
                probs[dims.cell(a, b, oa, oa ^ (a & b))] = 0.5;
            }
        }
    }
    NoSignalingBox::new(dims, probs).expect("PR box is a valid no-signaling box")
}

fn trial_headers(schedule: &TrialSchedule, outcomes_a: usize, outcomes_b: usize) -> (ArmHeader, ArmHeader) {
    (
        ArmHeader { arm: Arm::A, num_settings: schedule.setting_law_a.len(), num_outcomes: outcomes_a },
        ArmHeader { arm: Arm::B, num_settings: schedule.setting_law_b.len(), num_outcomes: outcomes_b },
    )
}

fn run_trials<F>(schedule: &TrialSchedule, header_a: ArmHeader, header_b: ArmHeader, trial: F) -> (ArmRecord, ArmRecord)
where
    F: Fn(&mut RandomStream, usize, usize) -> (usize, usize) + Sync,
{
    let factory = StreamFactory::new(schedule.seed, streams::TRIALS);
    let cdf_a = cumulative(&schedule.setting_law_a);
    let cdf_b = cumulative(&schedule.setting_law_b);
    let (events_a, events_b): (Vec<_>, Vec<_>) = (0..schedule.num_trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = factory.substream(k);
            let a = rng.categorical(&cdf_a);
            let b = rng.categorical(&cdf_b);
            let (oa, ob) = trial(&mut rng, a, b);
            let time = schedule.trial_time(k);
            (
                DetectionEvent { time, setting: a, outcome: oa },
                DetectionEvent { time, setting: b, outcome: ob },
            )
        })
        .unzip();
    (
        ArmRecord::from_sorted_unchecked(header_a, events_a),
        ArmRecord::from_sorted_unchecked(header_b, events_b),
    )
}

/// Runs `schedule` against a local hidden-variable model: fresh λ per
/// trial, outcomes from the response functions.
pub fn simulate_lhv(model: &LhvModel, schedule: &TrialSchedule) -> Result<(ArmRecord, ArmRecord)> {
    schedule.validate()?;
    model.validate(schedule.setting_law_a.len(), schedule.setting_law_b.len())?;
    let lambda_cdf = match &model.lambda {
        LambdaLaw::Discrete { weights } => cumulative(weights),
        _ => Vec::new(),
    };
    let (ha, hb) = trial_headers(schedule, model.outcomes_a, model.outcomes_b);
    Ok(run_trials(schedule, ha, hb, |rng, a, b| {
        let lambda = model.lambda.sample(&lambda_cdf, rng);
        (model.response_a.outcome(a, &lambda), model.response_b.outcome(b, &lambda))
    }))
}

/// Runs `schedule` against a no-signaling box: `(A, B)` drawn jointly from
/// `p(· | a, b)`.
pub fn simulate_box(nsbox: &NoSignalingBox, schedule: &TrialSchedule) -> Result<(ArmRecord, ArmRecord)> {
    schedule.validate()?;
    let d = nsbox.dims();
    if schedule.setting_law_a.len() != d.settings_a || schedule.setting_law_b.len() != d.settings_b {
        return Err(Error::DimensionMismatch(format!(
            "setting laws cover {}x{} settings, box has {}x{}",
            schedule.setting_law_a.len(),
            schedule.setting_law_b.len(),
            d.settings_a,
            d.settings_b
        )));
    }
    let slice_cdfs: Vec<Vec<f64>> = (0..d.settings_a)
        .flat_map(|a| (0..d.settings_b).map(move |b| (a, b)))
        .map(|(a, b)| cumulative(nsbox.slice(a, b)))
        .collect();
    let (ha, hb) = trial_headers(schedule, d.outcomes_a, d.outcomes_b);
    Ok(run_trials(schedule, ha, hb, |rng, a, b| {
        let cell = rng.categorical(&slice_cdfs[a * d.settings_b + b]);
        (cell / d.outcomes_b, cell % d.outcomes_b)
    }))
}

/// Per-arm detector imperfections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub jitter_sigma: f64,
    pub dark_rate: f64,
    pub time_offset: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel::ideal()
    }
}

impl DetectorModel {
    pub const fn ideal() -> Self {
        DetectorModel { efficiency: 1.0, jitter_sigma: 0.0, dark_rate: 0.0, time_offset: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(format!("efficiency {} outside [0, 1]", self.efficiency)));
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::invalid(format!("jitter_sigma {} must be finite and >= 0", self.jitter_sigma)));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::invalid(format!("dark_rate {} must be finite and >= 0", self.dark_rate)));
        }
        if !self.time_offset.is_finite() {
            return Err(Error::invalid("time_offset must be finite"));
        }
        Ok(())
    }
}

/// Passes a record through a detector.
///
/// Each event survives with probability `efficiency`; survivors are shifted
/// by `time_offset` plus Gaussian jitter. Dark counts arrive as a Poisson
/// process over the input record's time span, with uniform outcome and a
/// setting drawn from `dark_setting_law` (or, when `None`, from the record's
/// empirical setting frequencies). The result is re-sorted by time.
pub fn apply_detector(
    record: &ArmRecord,
    det: &DetectorModel,
    dark_setting_law: Option<&[f64]>,
    seed: u64,
) -> Result<ArmRecord> {
    det.validate()?;
    let header = record.header();
    let mut rng = StreamFactory::new(seed, streams::DETECTOR).sequential();
    let jitter = Normal::new(0.0, det.jitter_sigma).map_err(|e| Error::invalid(e.to_string()))?;

    let mut out = Vec::with_capacity(record.len());
    for ev in record.events() {
        if rng.uniform() < det.efficiency {
            let noise = if det.jitter_sigma > 0.0 { jitter.sample(rng.inner()) } else { 0.0 };
            out.push(DetectionEvent { time: ev.time + det.time_offset + noise, ..*ev });
        }
    }

    if det.dark_rate > 0.0 && !record.is_empty() {
        let law = match dark_setting_law {
            Some(law) => {
                if law.len() != header.num_settings {
                    return Err(Error::DimensionMismatch(format!(
                        "dark setting law has {} entries, arm has {} settings",
                        law.len(),
                        header.num_settings
                    )));
                }
                check_distribution("dark setting law", law)?;
                law.to_vec()
            }
            None => empirical_setting_law(record),
        };
        let cdf = cumulative(&law);
        let gaps = Exp::new(det.dark_rate).map_err(|e| Error::invalid(e.to_string()))?;
        let start = record.events()[0].time;
        let end = record.events()[record.len() - 1].time;
        let mut t = start + gaps.sample(rng.inner());
        while t <= end {
            let setting = sample_cdf(&cdf, rng.uniform());
            let outcome = ((rng.uniform() * header.num_outcomes as f64) as usize).min(header.num_outcomes - 1);
            out.push(DetectionEvent { time: t + det.time_offset, setting, outcome });
            t += gaps.sample(rng.inner());
        }
    }

    sort_by_time(&mut out);
    Ok(ArmRecord::from_sorted_unchecked(header, out))
}

fn empirical_setting_law(record: &ArmRecord) -> Vec<f64> {
    let s = record.num_settings();
    let mut counts = vec![0usize; s];
    for ev in record.events() {
        counts[ev.setting] += 1;
    }
    let n = record.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Reads a box table.
///
/// Format: `#` comments and blank lines are ignored; the first data line is
/// `S_A S_B d_A d_B`; then one line per setting pair `(a, b)` in order
/// `a = 0, b = 0..S_B; a = 1, ...`, each holding the `d_A · d_B`
/// probabilities `p(A, B | a, b)` with `A` varying slowest.
pub fn read_box_table<R: BufRead>(reader: R) -> Result<NoSignalingBox> {
    let mut dims: Option<Dims> = None;
    let mut probs = Vec::new();
    let mut rows = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        match dims {
            None => {
                let v: Vec<usize> = text
                    .split_whitespace()
                    .map(|x| x.parse::<usize>().map_err(|e| parse_err(format!("bad dimension {x:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if v.len() != 4 {
                    return Err(parse_err(format!("expected 4 dimensions, found {}", v.len())));
                }
                dims = Some(Dims::new(v[0], v[1], v[2], v[3]).map_err(|e| parse_err(e.to_string()))?);
            }
            Some(d) => {
                let row: Vec<f64> = text
                    .split_whitespace()
                    .map(|x| x.parse::<f64>().map_err(|e| parse_err(format!("bad probability {x:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if row.len() != d.table_len() {
                    return Err(parse_err(format!("expected {} probabilities, found {}", d.table_len(), row.len())));
                }
                if rows == d.setting_pairs() {
                    return Err(parse_err("more rows than setting pairs".into()));
                }
                probs.extend(row);
                rows += 1;
            }
        }
    }
    let dims = dims.ok_or_else(|| Error::Parse { line: 1, message: "missing dimension line".into() })?;
    if rows != dims.setting_pairs() {
        return Err(Error::invalid(format!("box table has {rows} rows, expected {}", dims.setting_pairs())));
    }
    NoSignalingBox::new(dims, probs)
}

pub fn write_box_table<W: Write>(nsbox: &NoSignalingBox, mut sink: W) -> Result<()> {
    let d = nsbox.dims();
    writeln!(sink, "# S_A S_B d_A d_B")?;
    writeln!(sink, "{} {} {} {}", d.settings_a, d.settings_b, d.outcomes_a, d.outcomes_b)?;
    for a in 0..d.settings_a {
        for b in 0..d.settings_b {
            let row: Vec<String> = nsbox.slice(a, b).iter().map(|p| format!("{p:?}")).collect();
            writeln!(sink, "{}", row.join(" "))?;
        }
    }
    sink.flush()?;
    Ok(())
}
