use mivs_core::selector::{
    backward_step, build_candidate_set, exhaustive_search, forward_step, rank_option1, run_option2, select, Decision,
    Option2Config, Provenance, StepKind,
};
use mivs_core::{Dataset, MiConfig, MiEstimator, VariableSubset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_columns(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn estimator(columns: &[Vec<f64>], y: Vec<f64>) -> MiEstimator {
    MiEstimator::new(&Dataset::from_columns(columns, y).unwrap(), MiConfig::default()).unwrap()
}

fn subset(indices: &[usize]) -> VariableSubset {
    VariableSubset::new(indices.to_vec(), Provenance::Option2).unwrap()
}

#[test]
fn informative_variable_ranks_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cols = uniform_columns(&mut rng, 10, 200);
    let y: Vec<f64> = cols[0].iter().map(|v| v + 0.01 * rng.gen_range(-1.0..1.0)).collect();
    let est = estimator(&cols, y);
    let (top, ranking) = rank_option1(&est, 10).unwrap();
    assert_eq!(top.indices()[0], 0);
    let mut all = top.sorted();
    all.dedup();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
    assert_eq!(ranking.len(), 10);
    assert!(rank_option1(&est, 11).is_err());
}

#[test]
fn duplicate_ranks_next_to_original() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cols = uniform_columns(&mut rng, 5, 150);
    cols.push(cols[1].clone());
    let y: Vec<f64> = (0..150).map(|i| cols[1][i] + 0.3 * cols[3][i]).collect();
    let (_, ranking) = rank_option1(&estimator(&cols, y), 0).unwrap();
    assert_eq!((ranking[0].column, ranking[1].column), (1, 5));
    assert_eq!(ranking[0].mi, ranking[1].mi);
}

#[test]
fn forward_from_empty_is_top_ranked() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cols = uniform_columns(&mut rng, 6, 120);
    let y: Vec<f64> = (0..120).map(|i| cols[4][i].powi(2) + 0.2 * cols[2][i]).collect();
    let est = estimator(&cols, y);
    let (grown, _) = forward_step(&est, &VariableSubset::empty(Provenance::Option2)).unwrap();
    let (top, _) = rank_option1(&est, 1).unwrap();
    assert_eq!(grown.indices(), top.indices());
}

#[test]
fn forward_matches_candidate_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cols = uniform_columns(&mut rng, 4, 30);
    let y: Vec<f64> = (0..30).map(|i| cols[0][i] * cols[2][i] + 0.5 * cols[3][i]).collect();
    let est = estimator(&cols, y);
    for start in [vec![], vec![1], vec![3, 0]] {
        let current = subset(&start);
        let mut best: Option<(usize, f64)> = None;
        for j in (0..4).filter(|j| !start.contains(j)) {
            let mut s = start.clone();
            s.push(j);
            let v = est.estimate(&s).unwrap().value;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        let (grown, mi) = forward_step(&est, &current).unwrap();
        let (j, v) = best.unwrap();
        assert_eq!(*grown.indices().last().unwrap(), j);
        assert_eq!(mi.value, v);
    }
    assert!(forward_step(&est, &subset(&[0, 1, 2, 3])).is_err());
}

fn xor_data(seed: u64, n: usize, decoys: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = uniform_columns(&mut rng, 2 + decoys, n);
    let y = (0..n).map(|i| (cols[0][i] * cols[1][i]).signum() + 0.1 * rng.gen_range(-1.0..1.0)).collect();
    (cols, y)
}

#[test]
fn xor_partner_is_found() {
    let (cols, y) = xor_data(5, 400, 4);
    let est = estimator(&cols, y);
    let (grown, _) = forward_step(&est, &subset(&[0])).unwrap();
    assert_eq!(grown.indices(), &[0, 1]);
    // Neither variable alone says much.
    assert!(est.estimate(&[1]).unwrap().value < 0.1);
    assert!(est.estimate(&[0, 1]).unwrap().value > 0.4);
    // Both are needed: protecting X2 leaves the pair alone.
    let out = backward_step(&est, &subset(&[0, 1]), 1).unwrap();
    assert_eq!(out.removed, None);
    assert_eq!(out.subset.indices(), &[0, 1]);
}

#[test]
fn backward_step_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cols = uniform_columns(&mut rng, 2, 200);
    cols.push(cols[0].clone());
    let y: Vec<f64> = (0..200).map(|i| cols[0][i] + cols[1][i]).collect();
    let est = estimator(&cols, y);
    let current = subset(&[0, 2, 1]);
    let out = backward_step(&est, &current, 1).unwrap();
    // Dropping either copy gives the same data, so the lower index is the
    // candidate; it goes only if that strictly raises the MI.
    assert_eq!(out.best_candidate.0, 0);
    let without = est.estimate(&[2, 1]).unwrap();
    assert_eq!(out.best_candidate.1.value, without.value);
    let full = est.estimate(&[0, 2, 1]).unwrap();
    if without.value > full.value {
        assert_eq!(out.removed, Some(0));
        assert_eq!(out.subset.indices(), &[2, 1]);
    } else {
        assert_eq!(out.removed, None);
    }
    assert!(out.subset.contains(1));
    assert!(current.len() - out.subset.len() <= 1);
    assert!(backward_step(&est, &subset(&[0, 2]), 1).is_err());
}

#[test]
fn option2_single_variable() {
    let est = estimator(&[vec![0.1, 0.5, 0.2, 0.9, 0.4, 0.7, 0.3, 0.8, 0.6, 0.0]], (0..10).map(f64::from).collect());
    let out = run_option2(&est, Option2Config::default()).unwrap();
    assert_eq!(out.subset.indices(), &[0]);
    assert_eq!(out.trace.steps.last().unwrap().decision, Decision::Exhausted);
}

#[test]
fn option2_trace_and_stop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cols = uniform_columns(&mut rng, 8, 300);
    let y: Vec<f64> = (0..300).map(|i| cols[0][i] + cols[1][i].powi(2) + 0.05 * rng.gen_range(-1.0..1.0)).collect();
    let est = estimator(&cols, y);
    let out = run_option2(&est, Option2Config::default()).unwrap();
    assert!(out.subset.contains(0) && out.subset.contains(1));
    let steps = &out.trace.steps;
    let last_forward = steps.iter().rev().find(|s| s.kind == StepKind::Forward).unwrap();
    let stop = steps.last().unwrap();
    assert_eq!(stop.kind, StepKind::Stop);
    if last_forward.decision == Decision::Rejected {
        assert!(!out.subset.contains(last_forward.candidate.unwrap()));
        assert!(last_forward.mi.unwrap() < out.mi.value);
    }
    // Logged values are the estimator's values for the logged subsets.
    for s in steps.iter().filter(|s| s.kind == StepKind::Forward) {
        assert_eq!(s.mi.unwrap(), est.estimate(&s.subset).unwrap().value);
    }
    assert_eq!(out.mi.value, est.estimate(out.subset.indices()).unwrap().value);
}

#[test]
fn candidate_set_rules() {
    let b = subset(&[3, 1]);
    let c = build_candidate_set(&[1, 3, 0, 2, 4], &b, 4).unwrap();
    assert_eq!(c.indices(), &[3, 1, 0, 2]);
    assert_eq!(c.sorted(), vec![0, 1, 2, 3]);
    let c = build_candidate_set(&[0, 4, 1, 2, 3], &b, 4).unwrap();
    assert_eq!(c.indices(), &[3, 1, 0, 4]);
    assert_eq!(build_candidate_set(&[0, 1, 2, 3], &b, 2).unwrap().indices(), b.indices());
    assert!(build_candidate_set(&[0, 1, 2, 3], &b, 1).is_err());
}

#[test]
fn exhaustive_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cols = uniform_columns(&mut rng, 5, 80);
    let y: Vec<f64> = (0..80).map(|i| cols[1][i] - cols[4][i] * cols[2][i]).collect();
    let est = estimator(&cols, y);
    let pool = [4usize, 1, 2];
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 1u32..8 {
        let mut s: Vec<usize> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| pool[b]).collect();
        s.sort_unstable();
        let v = est.estimate(&s).unwrap().value;
        let better = match &best {
            None => true,
            Some((bs, bv)) => v > *bv || (v == *bv && (s.len(), &s) < (bs.len(), bs)),
        };
        if better {
            best = Some((s, v));
        }
    }
    let (winner, mi) = exhaustive_search(&est, &subset(&pool)).unwrap();
    let (s, v) = best.unwrap();
    assert_eq!(winner.sorted(), s);
    assert_eq!(mi.value, v);
    assert_eq!(winner.provenance(), Provenance::Exhaustive);
}

#[test]
fn selection_nothing_to_lose() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cols = uniform_columns(&mut rng, 12, 250);
    let y: Vec<f64> = (0..250).map(|i| cols[2][i] + cols[7][i].powi(2) + 0.05 * rng.gen_range(-1.0..1.0)).collect();
    let est = estimator(&cols, y);
    let s = select(&est, 6, Option2Config::default()).unwrap();
    assert_eq!(s.c.len(), 6);
    assert!(s.b.is_subset_of(&s.c));
    assert!(s.winner.is_subset_of(&s.c));
    assert!(s.winner_mi.value >= s.b_mi.value);
    let top: Vec<usize> = s.ranking.iter().take(s.b.len()).map(|r| r.column).collect();
    if top.iter().all(|&c| s.c.contains(c)) {
        assert!(s.winner_mi.value >= est.estimate(&top).unwrap().value);
    }
    // A is the Option 1 prefix; whatever it adds to B follows that order.
    for (i, col) in s.a.indices().iter().enumerate() {
        assert_eq!(*col, s.ranking[i].column);
    }
    assert!(select(&est, 21, Option2Config::default()).is_err());
}
