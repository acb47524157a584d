//! Does a single noncontextual joint distribution over all outcomes
//! `p(A_1, …, A_SA, B_1, …, B_SB)` reproduce the observed conditional tables
//! as its pairwise marginals?
//!
//! The question is a linear feasibility problem over the
//! `d_A^SA · d_B^SB` deterministic assignments: one equality per marginal
//! cell plus normalization. [`solve_joint_feasibility`] decides it with a
//! phase-1 simplex and re-verifies the verdict before returning:
//!
//! * **feasible**: the basic solution is replayed against every input cell;
//! * **infeasible**: the Farkas multipliers become a linear witness over the
//!   marginal cells. Its maximum over deterministic assignments is computed
//!   by exhaustive enumeration and must be strictly below its value on the
//!   data, so the witness is a genuine Bell-type inequality.
//!
//! Witnesses are reported in a canonical scale. The raw Farkas direction is
//! replaced by the witness dual to the white-noise robustness program
//! (largest `v` such that `v·p + (1 − v)·uniform` is feasible), shifted to
//! vanish on uniform data. For binary two-setting problems it is then scaled
//! so the classical bound is 2, which makes its value on the data `2 / v`:
//! 4 for the PR box and `2√2` for the singlet at CHSH angles. Other
//! alphabets are scaled to unit largest coefficient.

use serde::{Deserialize, Serialize};

use crate::models::NoSignalingBox;
use crate::simplex::{LinearProgram, PhaseOne, PhaseTwo, Tableau};
use crate::statistics::ConditionalTable;
use crate::{Dims, Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest number of deterministic assignments that will be enumerated.
pub const MAX_ASSIGNMENTS: usize = 10_000_000;

/// Largest dense simplex tableau (in `f64` entries) that will be allocated.
pub const MAX_TABLEAU_ENTRIES: usize = 50_000_000;

/// Certificate cells must reproduce the inputs within this many tolerances.
pub const CERTIFICATE_SLACK: f64 = 10.0;

/// Observed conditional tables for every setting pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalProblem {
    dims: Dims,
    /// `p(A, B | a, b)` indexed by [`Dims::cell`].
    marginals: Vec<f64>,
    tolerance: f64,
}

impl MarginalProblem {
    /// Each `(a, b)` table must be a probability distribution within
    /// `tolerance`.
    pub fn new(dims: Dims, marginals: Vec<f64>, tolerance: f64) -> Result<Self> {
        dims.validate()?;
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {tolerance}")));
        }
        if marginals.len() != dims.num_cells() {
            return Err(Error::invalid(format!("expected {} marginal cells, got {}", dims.num_cells(), marginals.len())));
        }
        if let Some(x) = marginals.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::invalid(format!("marginal entry {x} is not a probability")));
        }
        let problem = MarginalProblem { dims, marginals, tolerance };
        for a in 0..dims.settings_a {
            for b in 0..dims.settings_b {
                let total: f64 = problem.table(a, b).iter().sum();
                if (total - 1.0).abs() > tolerance {
                    return Err(Error::invalid(format!("table (a={a}, b={b}) sums to {total}")));
                }
            }
        }
        Ok(problem)
    }

    /// Collects conditional tables; every setting pair must be present and
    /// nonempty.
    pub fn from_conditionals(tables: &[ConditionalTable], tolerance: f64) -> Result<Self> {
        let first = tables.first().ok_or_else(|| Error::invalid("no conditional tables"))?;
        let settings_a = tables.iter().map(|t| t.setting_a + 1).max().unwrap_or(0);
        let settings_b = tables.iter().map(|t| t.setting_b + 1).max().unwrap_or(0);
        let dims = Dims::new(settings_a, settings_b, first.outcomes_a, first.outcomes_b)?;
        let mut marginals = vec![0.0; dims.num_cells()];
        let mut seen = vec![false; dims.setting_pairs()];
        for t in tables {
            if t.outcomes_a != dims.outcomes_a || t.outcomes_b != dims.outcomes_b || t.probs.len() != dims.table_len() {
                return Err(Error::DimensionMismatch(format!(
                    "table (a={}, b={}) has alphabet {}x{}, expected {}x{}",
                    t.setting_a, t.setting_b, t.outcomes_a, t.outcomes_b, dims.outcomes_a, dims.outcomes_b
                )));
            }
            if t.is_empty() {
                continue;
            }
            let k = t.setting_a * settings_b + t.setting_b;
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid(format!("duplicate table for (a={}, b={})", t.setting_a, t.setting_b)));
            }
            let start = dims.cell(t.setting_a, t.setting_b, 0, 0);
            marginals[start..start + dims.table_len()].copy_from_slice(&t.probs);
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::MissingSettingPair { a: k / settings_b, b: k % settings_b });
        }
        MarginalProblem::new(dims, marginals, tolerance)
    }

    pub fn from_box(nsbox: &NoSignalingBox, tolerance: f64) -> Result<Self> {
        MarginalProblem::new(nsbox.dims(), nsbox.probs().to_vec(), tolerance)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn table(&self, a: usize, b: usize) -> &[f64] {
        let start = self.dims.cell(a, b, 0, 0);
        &self.marginals[start..start + self.dims.table_len()]
    }

    fn single_a(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.dims;
        let t = self.table(a, b);
        (0..d.outcomes_a).map(|oa| t[oa * d.outcomes_b..(oa + 1) * d.outcomes_b].iter().sum()).collect()
    }

    fn single_b(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.dims;
        let t = self.table(a, b);
        (0..d.outcomes_b).map(|ob| (0..d.outcomes_a).map(|oa| t[oa * d.outcomes_b + ob]).sum()).collect()
    }

    /// Replaces every single-arm marginal by its average over the remote
    /// settings.
    ///
    /// Each table is moved to the nearest (least-squares) table with the
    /// averaged marginals; if that leaves negative entries, it is mixed with
    /// the product of the averaged marginals just enough to restore
    /// nonnegativity, which keeps the marginals fixed.
    pub fn project_singles(&self) -> MarginalProblem {
        let d = self.dims;
        let avg_a: Vec<Vec<f64>> = (0..d.settings_a)
            .map(|a| {
                let mut acc = vec![0.0; d.outcomes_a];
                for b in 0..d.settings_b {
                    for (x, y) in acc.iter_mut().zip(self.single_a(a, b)) {
                        *x += y / d.settings_b as f64;
                    }
                }
                acc
            })
            .collect();
        let avg_b: Vec<Vec<f64>> = (0..d.settings_b)
            .map(|b| {
                let mut acc = vec![0.0; d.outcomes_b];
                for a in 0..d.settings_a {
                    for (x, y) in acc.iter_mut().zip(self.single_b(a, b)) {
                        *x += y / d.settings_a as f64;
                    }
                }
                acc
            })
            .collect();

        let mut marginals = self.marginals.clone();
        for a in 0..d.settings_a {
            for b in 0..d.settings_b {
                let (ra, rb) = (self.single_a(a, b), self.single_b(a, b));
                let (ta, tb) = (&avg_a[a], &avg_b[b]);
                let start = d.cell(a, b, 0, 0);
                let cells = &mut marginals[start..start + d.table_len()];
                for oa in 0..d.outcomes_a {
                    for ob in 0..d.outcomes_b {
                        cells[oa * d.outcomes_b + ob] +=
                            (ta[oa] - ra[oa]) / d.outcomes_b as f64 + (tb[ob] - rb[ob]) / d.outcomes_a as f64;
                    }
                }
                // Smallest t with (1 - t) * cell + t * product >= 0 everywhere.
                let mut t: f64 = 0.0;
                for oa in 0..d.outcomes_a {
                    for ob in 0..d.outcomes_b {
                        let x = cells[oa * d.outcomes_b + ob];
                        let q = ta[oa] * tb[ob];
                        if x < 0.0 {
                            t = t.max(if q - x > 0.0 { -x / (q - x) } else { 1.0 });
                        }
                    }
                }
                for oa in 0..d.outcomes_a {
                    for ob in 0..d.outcomes_b {
                        let cell = &mut cells[oa * d.outcomes_b + ob];
                        *cell = ((1.0 - t) * *cell + t * ta[oa] * tb[ob]).max(0.0);
                    }
                }
            }
        }
        MarginalProblem { dims: d, marginals, tolerance: self.tolerance }
    }

    fn singles_status(&self) -> Singles {
        let report = check_marginal_consistency(self);
        if !report.pass {
            return Singles::Inconsistent;
        }
        let d = self.dims;
        let unbiased = (0..d.settings_a).all(|a| self.single_a(a, 0).iter().all(|p| (p - 1.0 / d.outcomes_a as f64).abs() <= self.tolerance))
            && (0..d.settings_b).all(|b| self.single_b(0, b).iter().all(|p| (p - 1.0 / d.outcomes_b as f64).abs() <= self.tolerance));
        if unbiased {
            Singles::Unbiased
        } else {
            Singles::Biased
        }
    }
}

/// Where the single-arm marginals disagree most.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `(arm, local setting, outcome)` of the largest discrepancy.
    pub worst: Option<(crate::events::Arm, usize, usize)>,
}

/// Spread (max − min over remote settings) of every single-arm marginal.
pub fn check_marginal_consistency(problem: &MarginalProblem) -> ConsistencyReport {
    use crate::events::Arm;
    let d = problem.dims;
    let mut max_discrepancy = 0.0;
    let mut worst = None;
    let mut consider = |values: &mut dyn Iterator<Item = f64>, at: (Arm, usize, usize)| {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi - lo > max_discrepancy {
            max_discrepancy = hi - lo;
            worst = Some(at);
        }
    };
    for a in 0..d.settings_a {
        let singles: Vec<Vec<f64>> = (0..d.settings_b).map(|b| problem.single_a(a, b)).collect();
        for oa in 0..d.outcomes_a {
            consider(&mut singles.iter().map(|s| s[oa]), (Arm::A, a, oa));
        }
    }
    for b in 0..d.settings_b {
        let singles: Vec<Vec<f64>> = (0..d.settings_a).map(|a| problem.single_b(a, b)).collect();
        for ob in 0..d.outcomes_b {
            consider(&mut singles.iter().map(|s| s[ob]), (Arm::B, b, ob));
        }
    }
    ConsistencyReport { max_discrepancy, tolerance: problem.tolerance, pass: max_discrepancy <= problem.tolerance, worst }
}

/// Outcome digits of deterministic assignment `index`: arm A's outcome for
/// every setting, then arm B's. Assignment indices run with the A block
/// slowest and, within a block, setting 0 fastest.
#[derive(Clone, Copy, Debug)]
struct AssignmentCodec {
    dims: Dims,
    per_b: usize,
}

impl AssignmentCodec {
    fn new(dims: Dims) -> Result<Self> {
        let total = dims.num_assignments().filter(|&n| n <= MAX_ASSIGNMENTS).ok_or_else(|| {
            Error::ResourceLimit(format!(
                "{}^{} * {}^{} deterministic assignments exceed the limit of {MAX_ASSIGNMENTS}",
                dims.outcomes_a, dims.settings_a, dims.outcomes_b, dims.settings_b
            ))
        })?;
        let per_b = total / dims.outcomes_a.pow(dims.settings_a as u32);
        Ok(AssignmentCodec { dims, per_b })
    }

    fn len(&self) -> usize {
        self.per_b * self.dims.outcomes_a.pow(self.dims.settings_a as u32)
    }

    fn decode(&self, index: usize, out_a: &mut [usize], out_b: &mut [usize]) {
        let mut ia = index / self.per_b;
        for x in out_a.iter_mut() {
            *x = ia % self.dims.outcomes_a;
            ia /= self.dims.outcomes_a;
        }
        let mut ib = index % self.per_b;
        for x in out_b.iter_mut() {
            *x = ib % self.dims.outcomes_b;
            ib /= self.dims.outcomes_b;
        }
    }
}

/// A distribution over deterministic assignments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub dims: Dims,
    /// Probability of each assignment; see [`JointDistribution::assignment`].
    pub probs: Vec<f64>,
}

impl JointDistribution {
    /// `(A_1..A_SA, B_1..B_SB)` for assignment `index`.
    pub fn assignment(&self, index: usize) -> (Vec<usize>, Vec<usize>) {
        let codec = AssignmentCodec { dims: self.dims, per_b: self.dims.outcomes_b.pow(self.dims.settings_b as u32) };
        let mut oa = vec![0; self.dims.settings_a];
        let mut ob = vec![0; self.dims.settings_b];
        codec.decode(index, &mut oa, &mut ob);
        (oa, ob)
    }

    /// Pairwise marginals `p(A_a = A, B_b = B)` indexed by [`Dims::cell`].
    pub fn pairwise_marginals(&self) -> Vec<f64> {
        let d = self.dims;
        let mut out = vec![0.0; d.num_cells()];
        for (j, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (oa, ob) = self.assignment(j);
            for a in 0..d.settings_a {
                for b in 0..d.settings_b {
                    out[d.cell(a, b, oa[a], ob[b])] += p;
                }
            }
        }
        out
    }
}

/// Linear functional `constant + Σ coefficient(a, b, A, B) · p(A, B | a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "WitnessRepr", try_from = "WitnessRepr")]
pub struct Witness {
    pub dims: Dims,
    pub constant: f64,
    /// Indexed by [`Dims::cell`].
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub a: usize,
    pub b: usize,
    #[serde(rename = "A")]
    pub outcome_a: usize,
    #[serde(rename = "B")]
    pub outcome_b: usize,
    pub coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct WitnessRepr {
    dims: Dims,
    constant: f64,
    rows: Vec<WitnessRow>,
}

impl From<Witness> for WitnessRepr {
    fn from(w: Witness) -> Self {
        WitnessRepr { dims: w.dims, constant: w.constant, rows: w.rows() }
    }
}

impl TryFrom<WitnessRepr> for Witness {
    type Error = Error;

    fn try_from(r: WitnessRepr) -> Result<Self> {
        r.dims.validate()?;
        let mut coefficients = vec![0.0; r.dims.num_cells()];
        for row in &r.rows {
            if row.a >= r.dims.settings_a || row.b >= r.dims.settings_b || row.outcome_a >= r.dims.outcomes_a || row.outcome_b >= r.dims.outcomes_b {
                return Err(Error::invalid("witness row outside its dimensions"));
            }
            coefficients[r.dims.cell(row.a, row.b, row.outcome_a, row.outcome_b)] = row.coefficient;
        }
        Ok(Witness { dims: r.dims, constant: r.constant, coefficients })
    }
}

impl Witness {
    pub fn zero(dims: Dims) -> Self {
        Witness { dims, constant: 0.0, coefficients: vec![0.0; dims.num_cells()] }
    }

    /// The CHSH functional `E11 + E12 + E21 − E22` written over probability
    /// cells, with outcome 0 ↦ +1.
    pub fn chsh() -> Self {
        let dims = Dims::binary_pair();
        let mut w = Witness::zero(dims);
        for a in 0..2 {
            for b in 0..2 {
                let sign = if a == 1 && b == 1 { -1.0 } else { 1.0 };
                for oa in 0..2 {
                    for ob in 0..2 {
                        let s = if oa == ob { 1.0 } else { -1.0 };
                        w.coefficients[dims.cell(a, b, oa, ob)] = sign * s;
                    }
                }
            }
        }
        w
    }

    pub fn coefficient(&self, a: usize, b: usize, oa: usize, ob: usize) -> f64 {
        self.coefficients[self.dims.cell(a, b, oa, ob)]
    }

    /// `(a, b, A, B, coefficient)` for every cell, in cell order.
    pub fn rows(&self) -> Vec<WitnessRow> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &coefficient)| {
                let (a, b, outcome_a, outcome_b) = self.dims.cell_coords(i);
                WitnessRow { a, b, outcome_a, outcome_b, coefficient }
            })
            .collect()
    }

    pub fn evaluate(&self, marginals: &[f64]) -> f64 {
        self.constant + self.coefficients.iter().zip(marginals).map(|(w, p)| w * p).sum::<f64>()
    }

    fn scale(&mut self, factor: f64) {
        self.constant *= factor;
        for c in &mut self.coefficients {
            *c *= factor;
        }
    }
}

/// Exact maximum of `witness` over every deterministic assignment.
///
/// For each arm-A assignment the per-`(b, B)` partial sums are formed once,
/// then every arm-B assignment is scored against them; all
/// `d_A^SA · d_B^SB` assignments are visited.
pub fn enumerate_deterministic_bound(witness: &Witness) -> Result<f64> {
    let d = witness.dims;
    let codec = AssignmentCodec::new(d)?;
    let count_a = codec.len() / codec.per_b;
    let mut oa = vec![0usize; d.settings_a];
    let mut ob = vec![0usize; d.settings_b];
    let mut partial = vec![0.0; d.settings_b * d.outcomes_b];
    let mut best = f64::NEG_INFINITY;
    for ia in 0..count_a {
        codec.decode(ia * codec.per_b, &mut oa, &mut ob);
        for b in 0..d.settings_b {
            for y in 0..d.outcomes_b {
                partial[b * d.outcomes_b + y] = (0..d.settings_a).map(|a| witness.coefficient(a, b, oa[a], y)).sum();
            }
        }
        for ib in 0..codec.per_b {
            let mut rest = ib;
            let mut v = 0.0;
            for b in 0..d.settings_b {
                v += partial[b * d.outcomes_b + rest % d.outcomes_b];
                rest /= d.outcomes_b;
            }
            best = best.max(v);
        }
    }
    Ok(witness.constant + best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FeasibilityResult {
    Feasible {
        certificate: JointDistribution,
        /// Largest `|certificate marginal − input|` over all cells.
        max_residual: f64,
    },
    Infeasible {
        witness: Witness,
        witness_value: f64,
        classical_bound: f64,
        /// Largest weight `v` with `v·p + (1 − v)·uniform` feasible, when the
        /// robustness program was solved.
        local_fraction: Option<f64>,
    },
    InconsistentMarginals {
        report: ConsistencyReport,
    },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, FeasibilityResult::Infeasible { .. })
    }
}

/// Rows: every marginal cell, then normalization. Columns: assignments.
fn marginal_system(problem: &MarginalProblem, codec: &AssignmentCodec, extra_cols: usize) -> Result<LinearProgram> {
    let d = problem.dims;
    let n = codec.len();
    let rows = d.num_cells() + 1;
    let cols = n + extra_cols;
    if rows.saturating_mul(cols + rows + 1) > MAX_TABLEAU_ENTRIES {
        return Err(Error::ResourceLimit(format!(
            "simplex tableau of {rows} x {} exceeds {MAX_TABLEAU_ENTRIES} entries",
            cols + rows + 1
        )));
    }
    let mut a = vec![0.0; rows * cols];
    let mut oa = vec![0; d.settings_a];
    let mut ob = vec![0; d.settings_b];
    for j in 0..n {
        codec.decode(j, &mut oa, &mut ob);
        for x in 0..d.settings_a {
            for y in 0..d.settings_b {
                a[d.cell(x, y, oa[x], ob[y]) * cols + j] = 1.0;
            }
        }
        a[(rows - 1) * cols + j] = 1.0;
    }
    let mut b = problem.marginals.clone();
    b.push(1.0);
    Ok(LinearProgram { rows, cols, a, b })
}

/// Decides joint feasibility; see the module documentation.
pub fn solve_joint_feasibility(problem: &MarginalProblem) -> Result<FeasibilityResult> {
    let report = check_marginal_consistency(problem);
    if !report.pass {
        return Ok(FeasibilityResult::InconsistentMarginals { report });
    }
    let d = problem.dims;
    let codec = AssignmentCodec::new(d)?;
    let lp = marginal_system(problem, &codec, 0)?;
    let mut tableau = Tableau::new(&lp);
    match tableau.phase_one(problem.tolerance)? {
        PhaseOne::Feasible => {
            let mut x = tableau.primal();
            if let Some(v) = x.iter().find(|v| **v < -CERTIFICATE_SLACK * problem.tolerance) {
                return Err(Error::Verification(format!("certificate has negative mass {v}")));
            }
            for v in &mut x {
                *v = v.max(0.0);
            }
            let certificate = JointDistribution { dims: d, probs: x };
            let replay = certificate.pairwise_marginals();
            let max_residual = replay.iter().zip(&problem.marginals).map(|(r, p)| (r - p).abs()).fold(0.0, f64::max);
            if max_residual > CERTIFICATE_SLACK * problem.tolerance {
                return Err(Error::Verification(format!("certificate misses the marginals by {max_residual:e}")));
            }
            Ok(FeasibilityResult::Feasible { certificate, max_residual })
        }
        PhaseOne::Infeasible { y, infeasibility } => {
            let farkas = Witness { dims: d, constant: 0.0, coefficients: y[..d.num_cells()].to_vec() };
            let robust = robustness_witness(problem, &codec).ok().flatten();
            let candidates = robust
                .into_iter()
                .map(|(w, v)| (w, Some(v)))
                .chain(std::iter::once((farkas, None)));
            let mut last_failure = String::new();
            for (raw, local_fraction) in candidates {
                match normalize_and_verify(raw, problem) {
                    Ok((witness, witness_value, classical_bound)) => {
                        return Ok(FeasibilityResult::Infeasible { witness, witness_value, classical_bound, local_fraction });
                    }
                    Err(e) => last_failure = e.to_string(),
                }
            }
            Err(Error::Verification(format!(
                "phase-1 residual {infeasibility:e}, but no infeasibility witness survived verification: {last_failure}"
            )))
        }
    }
}

/// Shifts the witness to vanish on uniform tables, rescales it, and checks
/// that it separates the data from every deterministic assignment.
fn normalize_and_verify(mut w: Witness, problem: &MarginalProblem) -> Result<(Witness, f64, f64)> {
    let d = problem.dims;
    let uniform = vec![1.0 / d.table_len() as f64; d.num_cells()];
    w.constant -= w.evaluate(&uniform);
    let bound = enumerate_deterministic_bound(&w)?;
    let largest = w.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if largest == 0.0 {
        return Err(Error::Verification("witness has no nonzero coefficient".into()));
    }
    let factor = if d.is_binary_pair() && bound > 1e-12 * largest { 2.0 / bound } else { 1.0 / largest };
    w.scale(factor);
    let classical_bound = enumerate_deterministic_bound(&w)?;
    let witness_value = w.evaluate(&problem.marginals);
    if !(witness_value > classical_bound + problem.tolerance) {
        return Err(Error::Verification(format!(
            "witness value {witness_value} does not exceed its classical bound {classical_bound}"
        )));
    }
    Ok((w, witness_value, classical_bound))
}

/// Maximizes `v` subject to `v·p + (1 − v)·u` having a joint, with `u` the
/// uniform tables. Returns the dual witness `W` (with `W ≤ bound` on every
/// assignment and `W(p) − W(u) ≥ 1`) and the optimal `v`.
fn robustness_witness(problem: &MarginalProblem, codec: &AssignmentCodec) -> Result<Option<(Witness, f64)>> {
    let d = problem.dims;
    let cells = d.num_cells();
    let u = 1.0 / d.table_len() as f64;
    let mut lp = marginal_system(problem, codec, 1)?;
    let v_col = lp.cols - 1;
    for c in 0..cells {
        lp.a[c * lp.cols + v_col] = -(problem.marginals[c] - u);
        lp.b[c] = u;
    }
    let mut costs = vec![0.0; lp.cols];
    costs[v_col] = -1.0;
    let mut tableau = Tableau::new(&lp);
    if !matches!(tableau.phase_one(problem.tolerance)?, PhaseOne::Feasible) {
        return Ok(None);
    }
    match tableau.minimize(&costs)? {
        PhaseTwo::Optimal { x, y, objective } => {
            let v = -objective;
            if (x[v_col] - v).abs() > 1e-9 {
                return Ok(None);
            }
            if !(v > 0.0 && v < 1.0) {
                return Ok(None);
            }
            Ok(Some((Witness { dims: d, constant: 0.0, coefficients: y[..cells].to_vec() }, v)))
        }
        PhaseTwo::Unbounded => Ok(None),
    }
}

/// Status of the single-arm marginals for [`fine_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Singles {
    /// Consistent, and every single-outcome probability is 1/2.
    Unbiased,
    /// Consistent but not all 1/2.
    Biased,
    Inconsistent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FineVerdict {
    JointExists,
    JointDoesNotExist,
    /// Outside the unbiased binary two-setting case; use
    /// [`solve_joint_feasibility`].
    NotApplicable,
}

/// Closed-form decision for two binary settings per arm with unbiased
/// singles: a joint exists iff all eight CHSH combinations of the
/// correlators `(E11, E12, E21, E22)` are at most 2 in absolute value.
pub fn fine_check(correlators: [f64; 4], singles: Singles, tolerance: f64) -> FineVerdict {
    if singles != Singles::Unbiased {
        return FineVerdict::NotApplicable;
    }
    let [e11, e12, e21, e22] = correlators;
    let combos = [
        e11 + e12 + e21 - e22,
        e11 + e12 - e21 + e22,
        e11 - e12 + e21 + e22,
        -e11 + e12 + e21 + e22,
    ];
    if combos.iter().all(|c| c.abs() <= 2.0 + tolerance) {
        FineVerdict::JointExists
    } else {
        FineVerdict::JointDoesNotExist
    }
}

/// [`fine_check`] applied to a marginal problem.
pub fn fine_check_problem(problem: &MarginalProblem) -> FineVerdict {
    if !problem.dims.is_binary_pair() {
        return FineVerdict::NotApplicable;
    }
    let e = |a: usize, b: usize| {
        let t = problem.table(a, b);
        t[0] - t[1] - t[2] + t[3]
    };
    fine_check([e(0, 0), e(0, 1), e(1, 0), e(1, 1)], problem.singles_status(), problem.tolerance)
}
