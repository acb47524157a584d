//! Stages chained together: simulate, serialize, match, tabulate.

use std::io::BufReader;

use bellctx::coincidence::{match_events, read_pair_set, write_pair_set, MatchPolicy};
use bellctx::events::{read_arm_record, write_arm_record};
use bellctx::models::{simulate_box, simulate_lhv, singlet_box, LambdaLaw, LhvModel, NoSignalingBox, Response, TrialSchedule};
use bellctx::statistics::{conditionals, tabulate_pair_set, SummaryTable};

/// Largest |p̂ − p| / sqrt(p(1 − p) / n) over all cells.
fn max_cell_z(table: &SummaryTable, expected: &NoSignalingBox) -> f64 {
    let d = table.dims();
    let mut worst = 0.0f64;
    for t in conditionals(table) {
        for oa in 0..d.outcomes_a {
            for ob in 0..d.outcomes_b {
                let p = expected.prob(t.setting_a, t.setting_b, oa, ob);
                let se = (p * (1.0 - p) / t.n as f64).sqrt();
                let diff = (t.prob(oa, ob) - p).abs();
                let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
            }
        }
    }
    worst
}

#[test]
fn singlet_conditionals_match_the_box() {
    let nsbox = singlet_box(&[0.0, 0.9, 2.1], &[0.4, 1.7]).unwrap();
    let schedule = TrialSchedule::uniform(300_000, 1.0, 3, 2, 21);
    let (a, b) = simulate_box(&nsbox, &schedule).unwrap();
    let table = tabulate_pair_set(&match_events(&a, &b, 0.3, MatchPolicy::GreedyNearest).unwrap()).unwrap();
    assert_eq!(table.total(), 300_000);
    let z = max_cell_z(&table, &nsbox);
    assert!(z < 5.0, "max cell z = {z}");
}

#[test]
fn discrete_lhv_conditionals_match_its_marginal_box() {
    let model = LhvModel {
        lambda: LambdaLaw::Discrete { weights: vec![0.1, 0.2, 0.3, 0.4] },
        response_a: Response::Table { outcomes: vec![vec![0, 1, 2, 0], vec![1, 1, 0, 2]] },
        response_b: Response::Table { outcomes: vec![vec![0, 1, 1, 0], vec![1, 0, 0, 1], vec![0, 0, 1, 1]] },
        outcomes_a: 3,
        outcomes_b: 2,
    };
    let expected = model.marginal_box(2, 3).unwrap();
    let schedule = TrialSchedule::uniform(200_000, 1.0, 2, 3, 4);
    let (a, b) = simulate_lhv(&model, &schedule).unwrap();
    let table = tabulate_pair_set(&match_events(&a, &b, 0.3, MatchPolicy::FirstWithinWindow).unwrap()).unwrap();
    let z = max_cell_z(&table, &expected);
    assert!(z < 5.0, "max cell z = {z}");
}

#[test]
fn serialized_stages_give_the_same_table() {
    let nsbox = singlet_box(&[0.0, 1.0], &[0.5, 1.5]).unwrap();
    let (a, b) = simulate_box(&nsbox, &TrialSchedule::uniform(5_000, 1e-6, 2, 2, 9)).unwrap();
    let direct = match_events(&a, &b, 2e-7, MatchPolicy::GreedyNearest).unwrap();

    let mut bytes_a = Vec::new();
    let mut bytes_b = Vec::new();
    write_arm_record(&a, &mut bytes_a).unwrap();
    write_arm_record(&b, &mut bytes_b).unwrap();
    let a2 = read_arm_record(BufReader::new(&bytes_a[..]), None).unwrap();
    let b2 = read_arm_record(BufReader::new(&bytes_b[..]), None).unwrap();
    assert_eq!((&a2, &b2), (&a, &b));
    let rematched = match_events(&a2, &b2, 2e-7, MatchPolicy::GreedyNearest).unwrap();
    assert_eq!(rematched, direct);

    let mut pair_bytes = Vec::new();
    write_pair_set(&direct, &mut pair_bytes).unwrap();
    let reread = read_pair_set(BufReader::new(&pair_bytes[..])).unwrap();
    assert_eq!(reread, direct);
    assert_eq!(tabulate_pair_set(&reread).unwrap(), tabulate_pair_set(&direct).unwrap());
}
