//! Pairing events across the two arms by approximate time coincidence.
//!
//! Every policy produces a one-to-one matching in which each pair satisfies
//! `|t_A − t_B| ≤ tau`. Unmatched events are dropped from the pair list and
//! counted in [`MatchDiagnostics`].
//!
//! PairSet files are a comment header of `# key=value` lines followed by a
//! comma-separated table:
//!
//! ```text
//! # tau=2.5e-7
//! # policy=greedy-nearest
//! # num_settings_a=2
//! ...
//! A,a,B,b,t_A,t_B,idx_A,idx_B
//! 0,1,1,0,0.0,0.0,0,0
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::events::{Arm, ArmRecord, CoincidencePair, PairSet};
use crate::{Dims, Error, Result};

/// Largest combined stream length accepted by [`MatchPolicy::Optimal`].
pub const OPTIMAL_MAX_EVENTS: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchPolicy {
    /// Sweep both streams in time order. The earlier of the two head events
    /// is paired with the other head when they are within `tau`, unless the
    /// next event on its own stream is strictly closer to that head; ties go
    /// to the earlier candidate. Pairs never cross.
    #[default]
    GreedyNearest,
    /// Each A event, in time order, takes the earliest unmatched B event
    /// within `tau`.
    FirstWithinWindow,
    /// Maximum number of pairs, then minimum total `|t_A − t_B|`. Quadratic
    /// time and memory; limited to [`OPTIMAL_MAX_EVENTS`] events.
    Optimal,
}

impl MatchPolicy {
    pub fn label(&self) -> &'static str {
        match self {
            MatchPolicy::GreedyNearest => "greedy-nearest",
            MatchPolicy::FirstWithinWindow => "first-within-window",
            MatchPolicy::Optimal => "optimal",
        }
    }
}

impl fmt::Display for MatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MatchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy-nearest" => Ok(MatchPolicy::GreedyNearest),
            "first-within-window" => Ok(MatchPolicy::FirstWithinWindow),
            "optimal" => Ok(MatchPolicy::Optimal),
            other => Err(Error::invalid(format!("unknown matching policy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchDiagnostics {
    pub matched: usize,
    pub unmatched_a: usize,
    pub unmatched_b: usize,
    /// Events (on either arm) with two or more events of the other arm
    /// within `tau`, counted on the raw streams.
    pub multi_candidate_events: usize,
    pub tau: f64,
    pub policy: MatchPolicy,
}

/// Pairs the events of two arm records.
pub fn match_events(arm_a: &ArmRecord, arm_b: &ArmRecord, tau: f64, policy: MatchPolicy) -> Result<PairSet> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("coincidence window tau must be positive, got {tau}")));
    }
    if arm_a.arm() != Arm::A || arm_b.arm() != Arm::B {
        return Err(Error::DimensionMismatch(format!(
            "expected records for arms A and B, got {} and {}",
            arm_a.arm(),
            arm_b.arm()
        )));
    }
    let dims = Dims::new(arm_a.num_settings(), arm_b.num_settings(), arm_a.num_outcomes(), arm_b.num_outcomes())?;
    let ta: Vec<f64> = arm_a.events().iter().map(|e| e.time).collect();
    let tb: Vec<f64> = arm_b.events().iter().map(|e| e.time).collect();

    let index_pairs = match policy {
        MatchPolicy::GreedyNearest => greedy_nearest(&ta, &tb, tau),
        MatchPolicy::FirstWithinWindow => first_within_window(&ta, &tb, tau),
        MatchPolicy::Optimal => {
            if ta.len() + tb.len() > OPTIMAL_MAX_EVENTS {
                return Err(Error::ResourceLimit(format!(
                    "optimal matching is limited to {OPTIMAL_MAX_EVENTS} events, got {}",
                    ta.len() + tb.len()
                )));
            }
            optimal(&ta, &tb, tau)
        }
    };

    let pairs: Vec<CoincidencePair> = index_pairs
        .into_iter()
        .map(|(i, j)| {
            let ea = arm_a.events()[i];
            let eb = arm_b.events()[j];
            CoincidencePair {
                outcome_a: ea.outcome,
                setting_a: ea.setting,
                outcome_b: eb.outcome,
                setting_b: eb.setting,
                time_a: ea.time,
                time_b: eb.time,
                index_a: i,
                index_b: j,
            }
        })
        .collect();

    let diagnostics = MatchDiagnostics {
        matched: pairs.len(),
        unmatched_a: ta.len() - pairs.len(),
        unmatched_b: tb.len() - pairs.len(),
        multi_candidate_events: multi_candidates(&ta, &tb, tau) + multi_candidates(&tb, &ta, tau),
        tau,
        policy,
    };
    Ok(PairSet { tau, policy, dims, pairs, diagnostics })
}

fn greedy_nearest(ta: &[f64], tb: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(ta.len().min(tb.len()));
    let (mut i, mut j) = (0, 0);
    while i < ta.len() && j < tb.len() {
        let gap = (ta[i] - tb[j]).abs();
        if gap > tau {
            if ta[i] < tb[j] {
                i += 1;
            } else {
                j += 1;
            }
            continue;
        }
        if ta[i] <= tb[j] {
            if i + 1 < ta.len() && (ta[i + 1] - tb[j]).abs() < gap {
                i += 1;
                continue;
            }
        } else if j + 1 < tb.len() && (tb[j + 1] - ta[i]).abs() < gap {
            j += 1;
            continue;
        }
        pairs.push((i, j));
        i += 1;
        j += 1;
    }
    pairs
}

fn first_within_window(ta: &[f64], tb: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(ta.len().min(tb.len()));
    let mut j = 0;
    for (i, &t) in ta.iter().enumerate() {
        while j < tb.len() && t - tb[j] > tau {
            j += 1;
        }
        if j < tb.len() && (t - tb[j]).abs() <= tau {
            pairs.push((i, j));
            j += 1;
        }
    }
    pairs
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Match,
    SkipA,
    SkipB,
}

/// Maximum-cardinality, minimum-cost matching by dynamic programming over
/// prefixes. On a line some optimal matching never crosses (uncrossing two
/// pairs keeps both within the window and does not raise the cost), so the
/// prefix recursion is exact.
fn optimal(ta: &[f64], tb: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let (na, nb) = (ta.len(), tb.len());
    let width = nb + 1;
    let mut steps = vec![Step::SkipA; (na + 1) * width];
    let mut prev: Vec<(u32, f64)> = vec![(0, 0.0); width];
    let mut cur = prev.clone();
    let better = |x: (u32, f64), y: (u32, f64)| x.0 > y.0 || (x.0 == y.0 && x.1 < y.1);

    for j in 1..=nb {
        steps[j] = Step::SkipB;
    }
    for i in 1..=na {
        cur[0] = (0, 0.0);
        steps[i * width] = Step::SkipA;
        for j in 1..=nb {
            let mut best = prev[j];
            let mut step = Step::SkipA;
            if better(cur[j - 1], best) {
                best = cur[j - 1];
                step = Step::SkipB;
            }
            let gap = (ta[i - 1] - tb[j - 1]).abs();
            if gap <= tau {
                let cand = (prev[j - 1].0 + 1, prev[j - 1].1 + gap);
                if !better(best, cand) {
                    best = cand;
                    step = Step::Match;
                }
            }
            cur[j] = best;
            steps[i * width + j] = step;
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut pairs = Vec::new();
    let (mut i, mut j) = (na, nb);
    while i > 0 && j > 0 {
        match steps[i * width + j] {
            Step::Match => {
                pairs.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
            Step::SkipA => i -= 1,
            Step::SkipB => j -= 1,
        }
    }
    pairs.reverse();
    pairs
}

/// Number of events in `xs` with at least two events of `ys` within `tau`.
fn multi_candidates(xs: &[f64], ys: &[f64], tau: f64) -> usize {
    let (mut lo, mut hi) = (0, 0);
    let mut count = 0;
    for &t in xs {
        while lo < ys.len() && t - ys[lo] > tau {
            lo += 1;
        }
        hi = hi.max(lo);
        while hi < ys.len() && ys[hi] - t <= tau {
            hi += 1;
        }
        if hi - lo >= 2 {
            count += 1;
        }
    }
    count
}

pub fn write_pair_set<W: Write>(set: &PairSet, mut sink: W) -> Result<()> {
    let d = set.dims;
    let diag = &set.diagnostics;
    writeln!(sink, "# tau={:?}", set.tau)?;
    writeln!(sink, "# policy={}", set.policy)?;
    writeln!(sink, "# num_settings_a={}", d.settings_a)?;
    writeln!(sink, "# num_settings_b={}", d.settings_b)?;
    writeln!(sink, "# num_outcomes_a={}", d.outcomes_a)?;
    writeln!(sink, "# num_outcomes_b={}", d.outcomes_b)?;
    writeln!(sink, "# matched={}", diag.matched)?;
    writeln!(sink, "# unmatched_a={}", diag.unmatched_a)?;
    writeln!(sink, "# unmatched_b={}", diag.unmatched_b)?;
    writeln!(sink, "# multi_candidate_events={}", diag.multi_candidate_events)?;
    writeln!(sink, "A,a,B,b,t_A,t_B,idx_A,idx_B")?;
    for p in &set.pairs {
        writeln!(
            sink,
            "{},{},{},{},{:?},{:?},{},{}",
            p.outcome_a, p.setting_a, p.outcome_b, p.setting_b, p.time_a, p.time_b, p.index_a, p.index_b
        )?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_pair_set<R: BufRead>(reader: R) -> Result<PairSet> {
    let mut meta: Vec<(String, String, usize)> = Vec::new();
    let mut columns_seen = false;
    let mut rows: Vec<(usize, CoincidencePair)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            let (k, v) = rest.trim().split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "header lines must be `# key=value`".into(),
            })?;
            meta.push((k.trim().to_string(), v.trim().to_string(), line_no));
            continue;
        }
        if !columns_seen {
            if text != "A,a,B,b,t_A,t_B,idx_A,idx_B" {
                return Err(Error::Parse { line: line_no, message: format!("unexpected column header {text:?}") });
            }
            columns_seen = true;
            continue;
        }
        rows.push((line_no, parse_pair_row(text).map_err(|message| Error::Parse { line: line_no, message })?));
    }

    let get = |key: &str| -> Result<(&str, usize)> {
        meta.iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
            .ok_or_else(|| Error::Parse { line: 1, message: format!("missing header key {key}") })
    };
    fn num<T: FromStr>(v: (&str, usize), key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        v.0.parse().map_err(|e| Error::Parse { line: v.1, message: format!("bad {key}: {e}") })
    }
    let tau: f64 = num(get("tau")?, "tau")?;
    let (policy_text, policy_line) = get("policy")?;
    let policy = MatchPolicy::from_str(policy_text).map_err(|e| Error::Parse { line: policy_line, message: e.to_string() })?;
    let dims = Dims::new(
        num(get("num_settings_a")?, "num_settings_a")?,
        num(get("num_settings_b")?, "num_settings_b")?,
        num(get("num_outcomes_a")?, "num_outcomes_a")?,
        num(get("num_outcomes_b")?, "num_outcomes_b")?,
    )?;
    let diagnostics = MatchDiagnostics {
        matched: num(get("matched")?, "matched")?,
        unmatched_a: num(get("unmatched_a")?, "unmatched_a")?,
        unmatched_b: num(get("unmatched_b")?, "unmatched_b")?,
        multi_candidate_events: num(get("multi_candidate_events")?, "multi_candidate_events")?,
        tau,
        policy,
    };
    if !columns_seen && !meta.is_empty() {
        return Err(Error::Parse { line: meta.len() + 1, message: "missing column header".into() });
    }
    if diagnostics.matched != rows.len() {
        return Err(Error::invalid(format!("header says {} pairs, found {}", diagnostics.matched, rows.len())));
    }
    for (line, p) in &rows {
        if p.setting_a >= dims.settings_a
            || p.setting_b >= dims.settings_b
            || p.outcome_a >= dims.outcomes_a
            || p.outcome_b >= dims.outcomes_b
        {
            return Err(Error::Parse { line: *line, message: "pair field out of declared range".into() });
        }
        if !(p.delta() <= tau) {
            return Err(Error::Parse { line: *line, message: format!("|t_A - t_B| = {} exceeds tau", p.delta()) });
        }
    }
    Ok(PairSet { tau, policy, dims, pairs: rows.into_iter().map(|(_, p)| p).collect(), diagnostics })
}

fn parse_pair_row(text: &str) -> std::result::Result<CoincidencePair, String> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    }
    let int = |k: usize| fields[k].trim().parse::<usize>().map_err(|e| format!("field {}: {e}", k + 1));
    let real = |k: usize| {
        fields[k]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("field {}: {e}", k + 1))
            .and_then(|x| if x.is_finite() { Ok(x) } else { Err(format!("field {}: non-finite time", k + 1)) })
    };
    Ok(CoincidencePair {
        outcome_a: int(0)?,
        setting_a: int(1)?,
        outcome_b: int(2)?,
        setting_b: int(3)?,
        time_a: real(4)?,
        time_b: real(5)?,
        index_a: int(6)?,
        index_b: int(7)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{ArmHeader, DetectionEvent};
    use proptest::prelude::*;

    fn record(arm: Arm, times: &[f64]) -> ArmRecord {
        let events = times.iter().map(|&time| DetectionEvent { time, setting: 0, outcome: 0 }).collect();
        ArmRecord::new(ArmHeader { arm, num_settings: 1, num_outcomes: 2 }, events).unwrap()
    }

    fn pairs_of(ta: &[f64], tb: &[f64], tau: f64, policy: MatchPolicy) -> PairSet {
        match_events(&record(Arm::A, ta), &record(Arm::B, tb), tau, policy).unwrap()
    }

    fn times(set: &PairSet) -> Vec<(f64, f64)> {
        set.pairs.iter().map(|p| (p.time_a, p.time_b)).collect()
    }

    /// Every matching of small streams, scored by (cardinality, -cost).
    fn brute_force_best(ta: &[f64], tb: &[f64], tau: f64) -> (usize, f64) {
        fn go(i: usize, ta: &[f64], tb: &[f64], used: &mut Vec<bool>, tau: f64, acc: (usize, f64), best: &mut (usize, f64)) {
            if i == ta.len() {
                if acc.0 > best.0 || (acc.0 == best.0 && acc.1 < best.1) {
                    *best = acc;
                }
                return;
            }
            go(i + 1, ta, tb, used, tau, acc, best);
            for j in 0..tb.len() {
                let gap = (ta[i] - tb[j]).abs();
                if !used[j] && gap <= tau {
                    used[j] = true;
                    go(i + 1, ta, tb, used, tau, (acc.0 + 1, acc.1 + gap), best);
                    used[j] = false;
                }
            }
        }
        let mut best = (0, f64::INFINITY);
        go(0, ta, tb, &mut vec![false; tb.len()], tau, (0, 0.0), &mut best);
        if best.0 == 0 {
            best.1 = 0.0;
        }
        best
    }

    #[test]
    fn identical_timestamps_pair_in_order() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        for policy in [MatchPolicy::GreedyNearest, MatchPolicy::FirstWithinWindow, MatchPolicy::Optimal] {
            let set = pairs_of(&t, &t, 0.1, policy);
            assert_eq!(set.diagnostics.matched, 50);
            assert_eq!(set.diagnostics.unmatched_a, 0);
            assert_eq!(set.diagnostics.unmatched_b, 0);
            assert!(set.pairs.iter().enumerate().all(|(k, p)| p.index_a == k && p.index_b == k));
        }
    }

    #[test]
    fn window_arithmetic() {
        let set = pairs_of(&[0.0, 10.0], &[4.0], 5.0, MatchPolicy::GreedyNearest);
        assert_eq!(times(&set), vec![(0.0, 4.0)]);
        assert_eq!(set.diagnostics.unmatched_a, 1);
        assert_eq!(set.diagnostics.unmatched_b, 0);
    }

    #[test]
    fn nearest_candidate_wins() {
        let set = pairs_of(&[0.0, 3.0], &[2.0], 5.0, MatchPolicy::GreedyNearest);
        assert_eq!(times(&set), vec![(3.0, 2.0)]);
        assert_eq!(set.diagnostics.unmatched_a, 1);
        assert_eq!(set.pairs[0].index_a, 1);
        // Brute force: both matchings have one pair; (3, 2) has the smaller gap.
        assert_eq!(brute_force_best(&[0.0, 3.0], &[2.0], 5.0), (1, 1.0));
        let opt = pairs_of(&[0.0, 3.0], &[2.0], 5.0, MatchPolicy::Optimal);
        assert_eq!(times(&opt), vec![(3.0, 2.0)]);
        // First-within-window takes the first A event instead.
        let first = pairs_of(&[0.0, 3.0], &[2.0], 5.0, MatchPolicy::FirstWithinWindow);
        assert_eq!(times(&first), vec![(0.0, 2.0)]);
    }

    #[test]
    fn ties_go_to_the_earlier_candidate() {
        let set = pairs_of(&[1.0, 3.0], &[2.0], 5.0, MatchPolicy::GreedyNearest);
        assert_eq!(times(&set), vec![(1.0, 2.0)]);
        let set = pairs_of(&[2.0], &[1.0, 3.0], 5.0, MatchPolicy::GreedyNearest);
        assert_eq!(times(&set), vec![(2.0, 1.0)]);
    }

    #[test]
    fn empty_inputs() {
        let set = pairs_of(&[], &[1.0, 2.0], 1.0, MatchPolicy::GreedyNearest);
        assert!(set.pairs.is_empty());
        assert_eq!(set.diagnostics.unmatched_b, 2);
    }

    #[test]
    fn rejects_bad_window_and_swapped_arms() {
        let a = record(Arm::A, &[0.0]);
        let b = record(Arm::B, &[0.0]);
        assert!(match_events(&a, &b, 0.0, MatchPolicy::GreedyNearest).is_err());
        assert!(match_events(&a, &b, -1.0, MatchPolicy::GreedyNearest).is_err());
        assert!(match_events(&a, &b, f64::NAN, MatchPolicy::GreedyNearest).is_err());
        assert!(match_events(&b, &a, 1.0, MatchPolicy::GreedyNearest).is_err());
    }

    #[test]
    fn optimal_policy_size_guard() {
        let t: Vec<f64> = (0..6000).map(|k| k as f64).collect();
        let err = match_events(&record(Arm::A, &t), &record(Arm::B, &t), 0.5, MatchPolicy::Optimal).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn multi_candidate_count() {
        // A at 0 sees B at -1 and 1; B at -1 and 1 each see only A at 0.
        let set = pairs_of(&[0.0], &[-1.0, 1.0], 1.5, MatchPolicy::GreedyNearest);
        assert_eq!(set.diagnostics.multi_candidate_events, 1);
    }

    #[test]
    fn pair_set_file_round_trip() {
        let set = pairs_of(&[0.1, 0.35, 0.9], &[0.12, 0.3, 2.0], 0.1, MatchPolicy::GreedyNearest);
        let mut buf = Vec::new();
        write_pair_set(&set, &mut buf).unwrap();
        let back = read_pair_set(buf.as_slice()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn pair_set_file_errors() {
        let set = pairs_of(&[0.1], &[0.12], 0.1, MatchPolicy::GreedyNearest);
        let mut buf = Vec::new();
        write_pair_set(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let missing = text.replace("# tau=0.1\n", "");
        assert!(read_pair_set(missing.as_bytes()).is_err());
        let outside = text.replace("0,0,0,0,0.1,0.12", "0,0,0,0,0.1,0.5");
        assert!(matches!(read_pair_set(outside.as_bytes()), Err(Error::Parse { line: 12, .. })));
        let range = text.replace("0,0,0,0,0.1", "0,3,0,0,0.1");
        assert!(read_pair_set(range.as_bytes()).is_err());
    }

    fn stream() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0u32..400, 0..40).prop_map(|mut v| {
            v.sort_unstable();
            v.into_iter().map(|x| x as f64 * 0.25).collect()
        })
    }

    fn check_invariants(set: &PairSet, na: usize, nb: usize) -> std::result::Result<(), TestCaseError> {
        let mut seen_a = vec![false; na];
        let mut seen_b = vec![false; nb];
        for p in &set.pairs {
            prop_assert!(!seen_a[p.index_a] && !seen_b[p.index_b]);
            seen_a[p.index_a] = true;
            seen_b[p.index_b] = true;
            prop_assert!(p.delta() <= set.tau);
        }
        prop_assert!(set.pairs.windows(2).all(|w| w[0].time_a <= w[1].time_a));
        let d = &set.diagnostics;
        prop_assert_eq!(d.matched + d.unmatched_a, na);
        prop_assert_eq!(d.matched + d.unmatched_b, nb);
        Ok(())
    }

    proptest! {
        #[test]
        fn all_policies_keep_invariants(ta in stream(), tb in stream(), tau in 0.05f64..20.0) {
            for policy in [MatchPolicy::GreedyNearest, MatchPolicy::FirstWithinWindow, MatchPolicy::Optimal] {
                let set = pairs_of(&ta, &tb, tau, policy);
                check_invariants(&set, ta.len(), tb.len())?;
            }
        }

        #[test]
        fn greedy_matched_count_is_monotone_in_tau(ta in stream(), tb in stream(), t1 in 0.05f64..10.0, t2 in 0.05f64..10.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let small = pairs_of(&ta, &tb, lo, MatchPolicy::GreedyNearest).diagnostics.matched;
            let large = pairs_of(&ta, &tb, hi, MatchPolicy::GreedyNearest).diagnostics.matched;
            prop_assert!(small <= large, "tau {} -> {}, tau {} -> {}", lo, small, hi, large);
        }

        #[test]
        fn optimal_policy_agrees_with_brute_force(
            ta in prop::collection::vec(0u32..40, 0..6),
            tb in prop::collection::vec(0u32..40, 0..6),
            tau in 0.5f64..8.0,
        ) {
            let mut ta: Vec<f64> = ta.into_iter().map(f64::from).collect();
            let mut tb: Vec<f64> = tb.into_iter().map(f64::from).collect();
            ta.sort_by(f64::total_cmp);
            tb.sort_by(f64::total_cmp);
            let set = pairs_of(&ta, &tb, tau, MatchPolicy::Optimal);
            let cost: f64 = set.pairs.iter().map(|p| p.delta()).sum();
            let (n, best) = brute_force_best(&ta, &tb, tau);
            prop_assert_eq!(set.pairs.len(), n);
            prop_assert!((cost - best).abs() < 1e-9);
            let greedy = pairs_of(&ta, &tb, tau, MatchPolicy::GreedyNearest);
            prop_assert!(greedy.pairs.len() <= n);
        }
    }
}
