//! From matched pairs to the empirical contextual distribution `p̂(A, a, B, b)`,
//! its per-setting conditional tables, no-signaling z-checks and CHSH values.
//!
//! Correlators use the ±1 view of binary outcomes: outcome 0 ↦ +1,
//! outcome 1 ↦ −1.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::events::{Arm, CoincidencePair, PairSet};
use crate::{Dims, Error, Result};

/// Default z threshold for [`no_signaling_check`].
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;

/// Counts `N[a][b][A][B]` of matched pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryTable {
    dims: Dims,
    counts: Vec<u64>,
    total: u64,
}

impl SummaryTable {
    pub fn zeros(dims: Dims) -> Self {
        SummaryTable { dims, counts: vec![0; dims.num_cells()], total: 0 }
    }

    /// Builds a table from explicit counts indexed by [`Dims::cell`].
    pub fn from_counts(dims: Dims, counts: Vec<u64>) -> Result<Self> {
        dims.validate()?;
        if counts.len() != dims.num_cells() {
            return Err(Error::invalid(format!("expected {} counts, got {}", dims.num_cells(), counts.len())));
        }
        let total = counts.iter().sum();
        Ok(SummaryTable { dims, counts, total })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, a: usize, b: usize, oa: usize, ob: usize) -> u64 {
        self.counts[self.dims.cell(a, b, oa, ob)]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of pairs with settings `(a, b)`.
    pub fn setting_pair_count(&self, a: usize, b: usize) -> u64 {
        let start = self.dims.cell(a, b, 0, 0);
        self.counts[start..start + self.dims.table_len()].iter().sum()
    }

    /// Empirical `p̂(A, a, B, b)`, all zeros when the table is empty.
    pub fn joint_probabilities(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Adds `other` into `self`. Counting is associative and commutative, so
    /// partial tables from disjoint chunks may be merged in any order.
    pub fn merge(&mut self, other: &SummaryTable) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("cannot merge summary tables of different dimensions".into()));
        }
        for (x, y) in self.counts.iter_mut().zip(&other.counts) {
            *x += y;
        }
        self.total += other.total;
        Ok(())
    }

    /// Comma-separated `a,b,A,B,count`, one row per cell including zeros.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "a,b,A,B,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b, oa, ob) = self.dims.cell_coords(i);
            writeln!(sink, "{a},{b},{oa},{ob},{c}")?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads the format of [`SummaryTable::write_csv`]. Dimensions are the
    /// largest indices plus one; every cell must appear exactly once.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<[u64; 5]> = Vec::new();
        let mut header_seen = false;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if !header_seen {
                if text != "a,b,A,B,count" {
                    return Err(Error::Parse { line: line_no, message: format!("unexpected header {text:?}") });
                }
                header_seen = true;
                continue;
            }
            let v: Vec<u64> = text
                .split(',')
                .map(|x| x.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            let row: [u64; 5] = v
                .try_into()
                .map_err(|_| Error::Parse { line: line_no, message: "expected 5 fields".into() })?;
            rows.push(row);
        }
        let max = |k: usize| rows.iter().map(|r| r[k] as usize + 1).max().unwrap_or(0);
        let dims = Dims::new(max(0), max(1), max(2).max(2), max(3).max(2))?;
        let mut counts = vec![None; dims.num_cells()];
        for r in &rows {
            let cell = dims.cell(r[0] as usize, r[1] as usize, r[2] as usize, r[3] as usize);
            if counts[cell].replace(r[4]).is_some() {
                return Err(Error::invalid(format!("duplicate cell ({}, {}, {}, {})", r[0], r[1], r[2], r[3])));
            }
        }
        let counts = counts
            .into_iter()
            .collect::<Option<Vec<u64>>>()
            .ok_or_else(|| Error::invalid("summary table is missing cells"))?;
        SummaryTable::from_counts(dims, counts)
    }
}

/// Counts pairs into a [`SummaryTable`], in parallel over chunks.
pub fn tabulate(pairs: &[CoincidencePair], dims: Dims) -> Result<SummaryTable> {
    dims.validate()?;
    if let Some((index, p)) = pairs.iter().enumerate().find(|(_, p)| {
        p.setting_a >= dims.settings_a
            || p.setting_b >= dims.settings_b
            || p.outcome_a >= dims.outcomes_a
            || p.outcome_b >= dims.outcomes_b
    }) {
        return Err(Error::PairOutOfRange {
            index,
            message: format!(
                "(A={}, a={}, B={}, b={}) outside S_A={}, S_B={}, d_A={}, d_B={}",
                p.outcome_a, p.setting_a, p.outcome_b, p.setting_b, dims.settings_a, dims.settings_b, dims.outcomes_a, dims.outcomes_b
            ),
        });
    }
    let table = pairs
        .par_chunks(1 << 16)
        .map(|chunk| {
            let mut t = SummaryTable::zeros(dims);
            for p in chunk {
                t.counts[dims.cell(p.setting_a, p.setting_b, p.outcome_a, p.outcome_b)] += 1;
            }
            t.total = chunk.len() as u64;
            t
        })
        .reduce(
            || SummaryTable::zeros(dims),
            |mut x, y| {
                x.merge(&y).expect("chunks share dimensions");
                x
            },
        );
    Ok(table)
}

/// [`tabulate`] with the dimensions recorded in the pair set.
pub fn tabulate_pair_set(set: &PairSet) -> Result<SummaryTable> {
    tabulate(&set.pairs, set.dims)
}

/// `p̂(A, B | a, b)` for one setting pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub setting_a: usize,
    pub setting_b: usize,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    /// Number of pairs behind the table; zero flags an empty slice.
    pub n: u64,
    /// Row-major in `A`; all zeros when `n == 0`.
    pub probs: Vec<f64>,
}

impl ConditionalTable {
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn prob(&self, oa: usize, ob: usize) -> f64 {
        self.probs[oa * self.outcomes_b + ob]
    }
}

/// One conditional table per setting pair, in `(a, b)` order.
pub fn conditionals(table: &SummaryTable) -> Vec<ConditionalTable> {
    let d = table.dims;
    let mut out = Vec::with_capacity(d.setting_pairs());
    for a in 0..d.settings_a {
        for b in 0..d.settings_b {
            let start = d.cell(a, b, 0, 0);
            let counts = &table.counts[start..start + d.table_len()];
            let n: u64 = counts.iter().sum();
            let probs = if n == 0 {
                vec![0.0; d.table_len()]
            } else {
                counts.iter().map(|&c| c as f64 / n as f64).collect()
            };
            out.push(ConditionalTable { setting_a: a, setting_b: b, outcomes_a: d.outcomes_a, outcomes_b: d.outcomes_b, n, probs });
        }
    }
    out
}

/// Two-proportion comparison of one single-arm marginal across two remote
/// settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZComparison {
    pub arm: Arm,
    /// Local setting (`a` for arm A, `b` for arm B).
    pub setting: usize,
    pub outcome: usize,
    /// The two remote settings compared.
    pub remote: (usize, usize),
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    pub threshold: f64,
    pub comparisons: Vec<ZComparison>,
    pub max_abs_z: f64,
    pub pass: bool,
    /// Setting pairs `(a, b)` with no data; comparisons touching them are
    /// skipped.
    pub skipped: Vec<(usize, usize)>,
}

/// Pooled-variance z statistic for `c1/n1` versus `c2/n2`. Zero when both
/// proportions sit at the same boundary.
fn two_proportion_z(c1: u64, n1: u64, c2: u64, n2: u64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (c1 + c2) as f64 / (n1f + n2f);
    let var = pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f);
    if var <= 0.0 {
        return 0.0;
    }
    (c1 as f64 / n1f - c2 as f64 / n2f) / var.sqrt()
}

/// Tests `p(A | a, b) = p(A | a, b′)` and `p(B | a, b) = p(B | a′, b)` for
/// every local setting, outcome and pair of remote settings.
pub fn no_signaling_check(table: &SummaryTable, z_threshold: f64) -> NoSignalingReport {
    let d = table.dims;
    let n = |a: usize, b: usize| table.setting_pair_count(a, b);
    let count_a = |a: usize, b: usize, oa: usize| (0..d.outcomes_b).map(|ob| table.count(a, b, oa, ob)).sum::<u64>();
    let count_b = |a: usize, b: usize, ob: usize| (0..d.outcomes_a).map(|oa| table.count(a, b, oa, ob)).sum::<u64>();

    let mut skipped = Vec::new();
    for a in 0..d.settings_a {
        for b in 0..d.settings_b {
            if n(a, b) == 0 {
                skipped.push((a, b));
            }
        }
    }

    let mut comparisons = Vec::new();
    for a in 0..d.settings_a {
        for b1 in 0..d.settings_b {
            for b2 in b1 + 1..d.settings_b {
                let (n1, n2) = (n(a, b1), n(a, b2));
                if n1 == 0 || n2 == 0 {
                    continue;
                }
                for oa in 0..d.outcomes_a {
                    let z = two_proportion_z(count_a(a, b1, oa), n1, count_a(a, b2, oa), n2);
                    comparisons.push(ZComparison { arm: Arm::A, setting: a, outcome: oa, remote: (b1, b2), z });
                }
            }
        }
    }
    for b in 0..d.settings_b {
        for a1 in 0..d.settings_a {
            for a2 in a1 + 1..d.settings_a {
                let (n1, n2) = (n(a1, b), n(a2, b));
                if n1 == 0 || n2 == 0 {
                    continue;
                }
                for ob in 0..d.outcomes_b {
                    let z = two_proportion_z(count_b(a1, b, ob), n1, count_b(a2, b, ob), n2);
                    comparisons.push(ZComparison { arm: Arm::B, setting: b, outcome: ob, remote: (a1, a2), z });
                }
            }
        }
    }
    let max_abs_z = comparisons.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    NoSignalingReport { threshold: z_threshold, pass: max_abs_z <= z_threshold, max_abs_z, comparisons, skipped }
}

/// `E = Σ s_A s_B p(A, B)` for a binary conditional table.
pub fn correlator(cond: &ConditionalTable) -> Result<f64> {
    if cond.outcomes_a != 2 || cond.outcomes_b != 2 {
        return Err(Error::UnsupportedAlphabet { outcomes_a: cond.outcomes_a, outcomes_b: cond.outcomes_b });
    }
    if cond.is_empty() {
        return Err(Error::invalid(format!("setting pair ({}, {}) has no data", cond.setting_a, cond.setting_b)));
    }
    let p = &cond.probs;
    Ok((p[0] - p[1] - p[2] + p[3]).clamp(-1.0, 1.0))
}

/// The eight sign patterns with an odd number of minus signs, in a fixed
/// order (bit `k` set ⇒ term `k` negated, patterns in increasing bit value).
pub fn chsh_patterns() -> impl Iterator<Item = [i8; 4]> {
    (0u8..16).filter(|m| m.count_ones() % 2 == 1).map(|m| {
        let mut s = [1i8; 4];
        for (k, sk) in s.iter_mut().enumerate() {
            if m & (1 << k) != 0 {
                *sk = -1;
            }
        }
        s
    })
}

/// Largest CHSH combination `Σ s_k E_k` over the odd-minus patterns; the
/// pattern set is closed under negation, so this is also the largest
/// absolute value. Correlators are ordered `(a1,b1), (a1,b2), (a2,b1),
/// (a2,b2)`.
pub fn chsh_from_correlators(e: [f64; 4]) -> (f64, [i8; 4]) {
    let mut best = (f64::NEG_INFINITY, [1i8; 4]);
    for pattern in chsh_patterns() {
        let v: f64 = pattern.iter().zip(&e).map(|(s, x)| f64::from(*s) * x).sum();
        if v > best.0 {
            best = (v, pattern);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshValue {
    pub s: f64,
    pub pattern: [i8; 4],
    pub correlators: [f64; 4],
    pub counts: [u64; 4],
    /// Conservative standard error `Σ sqrt((1 − E²) / n)`.
    pub sigma: f64,
}

/// CHSH statistic of the four binary tables for settings `{0,1} × {0,1}`.
pub fn chsh(tables: &[ConditionalTable]) -> Result<ChshValue> {
    let order = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut correlators = [0.0; 4];
    let mut counts = [0u64; 4];
    for (k, &(a, b)) in order.iter().enumerate() {
        let t = tables
            .iter()
            .find(|t| t.setting_a == a && t.setting_b == b && !t.is_empty())
            .ok_or(Error::MissingSettingPair { a, b })?;
        correlators[k] = correlator(t)?;
        counts[k] = t.n;
    }
    let (s, pattern) = chsh_from_correlators(correlators);
    let sigma = correlators.iter().zip(&counts).map(|(e, &n)| ((1.0 - e * e) / n as f64).sqrt()).sum();
    Ok(ChshValue { s, pattern, correlators, counts, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::MatchPolicy;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn pair(oa: usize, a: usize, ob: usize, b: usize) -> CoincidencePair {
        CoincidencePair { outcome_a: oa, setting_a: a, outcome_b: ob, setting_b: b, time_a: 0.0, time_b: 0.0, index_a: 0, index_b: 0 }
    }

    fn table_from(dims: Dims, f: impl Fn(usize, usize, usize, usize) -> u64) -> SummaryTable {
        let counts = (0..dims.num_cells())
            .map(|i| {
                let (a, b, oa, ob) = dims.cell_coords(i);
                f(a, b, oa, ob)
            })
            .collect();
        SummaryTable::from_counts(dims, counts).unwrap()
    }

    #[test]
    fn empty_pairs_tabulate_to_zero() {
        let t = tabulate(&[], Dims::binary_pair()).unwrap();
        assert_eq!(t.total(), 0);
        assert!(t.counts().iter().all(|&c| c == 0));
        assert!(conditionals(&t).iter().all(ConditionalTable::is_empty));
    }

    #[test]
    fn counts_multiplicities() {
        let pairs = vec![pair(0, 0, 1, 1); 5];
        let t = tabulate(&pairs, Dims::binary_pair()).unwrap();
        assert_eq!(t.count(0, 1, 0, 1), 5);
        assert_eq!(t.total(), 5);
        assert_eq!(t.counts().iter().sum::<u64>(), 5);
    }

    #[test]
    fn out_of_range_pair_is_identified() {
        let pairs = vec![pair(0, 0, 0, 0), pair(0, 0, 2, 0)];
        match tabulate(&pairs, Dims::binary_pair()) {
            Err(Error::PairOutOfRange { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected out-of-range error, got {other:?}"),
        }
    }

    #[test]
    fn parallel_tabulation_matches_sequential() {
        let dims = Dims::new(3, 2, 2, 3).unwrap();
        let pairs: Vec<CoincidencePair> =
            (0..300_000usize).map(|k| pair(k % 2, (k / 7) % 3, (k / 3) % 3, (k / 11) % 2)).collect();
        let t = tabulate(&pairs, dims).unwrap();
        let mut seq = SummaryTable::zeros(dims);
        for p in &pairs {
            seq.counts[dims.cell(p.setting_a, p.setting_b, p.outcome_a, p.outcome_b)] += 1;
            seq.total += 1;
        }
        assert_eq!(t, seq);
    }

    #[test]
    fn point_mass_and_uniform_conditionals() {
        let dims = Dims::binary_pair();
        let t = table_from(dims, |a, b, oa, ob| u64::from((a, b, oa, ob) == (1, 0, 1, 0)) * 7);
        let conds = conditionals(&t);
        let c = &conds[2];
        assert_eq!((c.setting_a, c.setting_b, c.n), (1, 0, 7));
        assert_eq!(c.probs, vec![0.0, 0.0, 1.0, 0.0]);
        assert!(conds[0].is_empty() && conds[1].is_empty() && conds[3].is_empty());

        let u = table_from(dims, |_, _, _, _| 3);
        for c in conditionals(&u) {
            assert_eq!(c.probs, vec![0.25; 4]);
            assert_eq!(correlator(&c).unwrap(), 0.0);
        }
    }

    #[test]
    fn correlator_examples() {
        let mut c = ConditionalTable { setting_a: 0, setting_b: 0, outcomes_a: 2, outcomes_b: 2, n: 1, probs: vec![1.0, 0.0, 0.0, 0.0] };
        assert_eq!(correlator(&c).unwrap(), 1.0);
        c.probs = vec![0.0, 0.5, 0.5, 0.0];
        assert_eq!(correlator(&c).unwrap(), -1.0);
        c.n = 0;
        assert!(correlator(&c).is_err());
        let ternary = ConditionalTable { setting_a: 0, setting_b: 0, outcomes_a: 3, outcomes_b: 2, n: 1, probs: vec![1.0 / 6.0; 6] };
        assert!(matches!(correlator(&ternary), Err(Error::UnsupportedAlphabet { .. })));
    }

    #[test]
    fn chsh_examples() {
        assert_eq!(chsh_from_correlators([0.0; 4]).0, 0.0);
        let h = FRAC_1_SQRT_2;
        let (s, pattern) = chsh_from_correlators([-h, h, -h, -h]);
        assert!((s - 2.0 * SQRT_2).abs() < 1e-15);
        assert_eq!(pattern, [-1, 1, -1, -1]);
        let (s, pattern) = chsh_from_correlators([1.0, 1.0, 1.0, -1.0]);
        assert_eq!(s, 4.0);
        assert_eq!(pattern, [1, 1, 1, -1]);
        assert_eq!(chsh_patterns().count(), 8);
    }

    #[test]
    fn chsh_requires_all_four_pairs() {
        let dims = Dims::binary_pair();
        let t = table_from(dims, |a, b, _, _| u64::from((a, b) != (1, 1)));
        assert!(matches!(chsh(&conditionals(&t)), Err(Error::MissingSettingPair { a: 1, b: 1 })));
    }

    #[test]
    fn gross_signaling_fails() {
        // p(A=0 | a0, b0) = 0.9, p(A=0 | a0, b1) = 0.1, 10^4 pairs each.
        let dims = Dims::binary_pair();
        let t = table_from(dims, |a, b, oa, ob| match (a, b, oa, ob) {
            (0, 0, 0, 0) => 9000,
            (0, 0, 1, 0) => 1000,
            (0, 1, 0, 0) => 1000,
            (0, 1, 1, 0) => 9000,
            (1, _, _, 0) => 5000,
            _ => 0,
        });
        let report = no_signaling_check(&t, DEFAULT_Z_THRESHOLD);
        assert!(!report.pass);
        // z = 0.8 / sqrt(0.25 * 2e-4)
        let expected = 0.8 / (0.25f64 * 2.0e-4).sqrt();
        assert!((report.max_abs_z - expected).abs() < 1e-9);
        assert!(report.max_abs_z > 50.0);
    }

    #[test]
    fn empty_slice_is_skipped_and_listed() {
        let dims = Dims::binary_pair();
        let t = table_from(dims, |a, b, _, _| if (a, b) == (0, 1) { 0 } else { 10 });
        let report = no_signaling_check(&t, DEFAULT_Z_THRESHOLD);
        assert_eq!(report.skipped, vec![(0, 1)]);
        assert!(report.pass);
        // Arm A at a=0 and arm B at b=1 both lose their only comparison.
        assert_eq!(report.comparisons.len(), 4);
    }

    #[test]
    fn summary_csv_round_trip() {
        let dims = Dims::new(2, 3, 2, 3).unwrap();
        let t = table_from(dims, |a, b, oa, ob| (a * 7 + b * 5 + oa * 3 + ob) as u64);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("a,b,A,B,count\n0,0,0,0,0\n"));
        assert_eq!(SummaryTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn summary_csv_rejects_gaps() {
        let text = "a,b,A,B,count\n0,0,0,0,1\n1,1,1,1,2\n";
        assert!(SummaryTable::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn tabulate_pair_set_uses_recorded_dims() {
        let set = PairSet {
            tau: 1.0,
            policy: MatchPolicy::GreedyNearest,
            dims: Dims::new(1, 2, 2, 2).unwrap(),
            pairs: vec![pair(1, 0, 0, 1)],
            diagnostics: crate::coincidence::MatchDiagnostics {
                matched: 1,
                unmatched_a: 0,
                unmatched_b: 0,
                multi_candidate_events: 0,
                tau: 1.0,
                policy: MatchPolicy::GreedyNearest,
            },
        };
        let t = tabulate_pair_set(&set).unwrap();
        assert_eq!(t.count(0, 1, 1, 0), 1);
    }

    fn arb_table() -> impl Strategy<Value = SummaryTable> {
        (1usize..4, 1usize..4, 2usize..4, 2usize..4).prop_flat_map(|(sa, sb, da, db)| {
            let dims = Dims::new(sa, sb, da, db).unwrap();
            prop::collection::vec(0u64..50, dims.num_cells())
                .prop_map(move |counts| SummaryTable::from_counts(dims, counts).unwrap())
        })
    }

    fn arb_binary_table() -> impl Strategy<Value = SummaryTable> {
        prop::collection::vec(0u64..200, 16).prop_map(|mut counts| {
            // Keep every setting pair populated.
            for k in 0..4 {
                counts[4 * k] += 1;
            }
            SummaryTable::from_counts(Dims::binary_pair(), counts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn conditionals_reassemble_the_joint(t in arb_table()) {
            let d = t.dims();
            let conds = conditionals(&t);
            let mut slice_total = 0;
            for c in &conds {
                let n_ab = t.setting_pair_count(c.setting_a, c.setting_b);
                prop_assert_eq!(c.n, n_ab);
                slice_total += n_ab;
                if c.n > 0 {
                    prop_assert!((c.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
                for oa in 0..d.outcomes_a {
                    for ob in 0..d.outcomes_b {
                        // p(A,B|a,b) * n_ab recovers the integer count.
                        let back = (c.prob(oa, ob) * c.n as f64).round() as u64;
                        prop_assert_eq!(back, t.count(c.setting_a, c.setting_b, oa, ob));
                    }
                }
            }
            prop_assert_eq!(slice_total, t.total());
        }

        #[test]
        fn correlator_and_chsh_ranges(t in arb_binary_table()) {
            let conds = conditionals(&t);
            for c in &conds {
                let e = correlator(c).unwrap();
                prop_assert!((-1.0..=1.0).contains(&e));
            }
            let v = chsh(&conds).unwrap();
            prop_assert!((0.0..=4.0).contains(&v.s));
        }

        #[test]
        fn chsh_is_invariant_under_outcome_relabeling(t in arb_binary_table(), arm_a in any::<bool>(), setting in 0usize..2) {
            let before = chsh(&conditionals(&t)).unwrap();
            let d = t.dims();
            // Swap outcome labels at one setting of one arm.
            let relabeled = table_from(d, |a, b, oa, ob| {
                if arm_a && a == setting {
                    t.count(a, b, 1 - oa, ob)
                } else if !arm_a && b == setting {
                    t.count(a, b, oa, 1 - ob)
                } else {
                    t.count(a, b, oa, ob)
                }
            });
            let after = chsh(&conditionals(&relabeled)).unwrap();
            prop_assert!((before.s - after.s).abs() < 1e-12);
            for k in 0..4 {
                let flipped = if arm_a { k / 2 == setting } else { k % 2 == setting };
                let expected = if flipped { -before.correlators[k] } else { before.correlators[k] };
                prop_assert!((after.correlators[k] - expected).abs() < 1e-12);
            }
        }

        #[test]
        fn merge_is_associative(x in arb_binary_table(), y in arb_binary_table(), z in arb_binary_table()) {
            let mut left = x.clone();
            left.merge(&y).unwrap();
            left.merge(&z).unwrap();
            let mut yz = y.clone();
            yz.merge(&z).unwrap();
            let mut right = x.clone();
            right.merge(&yz).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
