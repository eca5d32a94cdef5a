use super::tree::{split_threshold, MIN_RELATIVE_GAIN};
use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, PartialEq)]
enum Oracle {
    Leaf(f64),
    Split(usize, f64, Box<Oracle>, Box<Oracle>),
}

/// Recursive exhaustive search over every feature and every midpoint.
fn oracle(cols: &[Vec<f64>], y: &[f64], rows: &[usize], depth: usize, msl: usize) -> Oracle {
    let cnt = rows.len();
    let sum: f64 = rows.iter().map(|&r| y[r]).sum();
    let leaf = Oracle::Leaf(sum / cnt as f64);
    if depth == 0 || cnt < 2 * msl {
        return leaf;
    }
    let sumsq: f64 = rows.iter().map(|&r| y[r] * y[r]).sum();
    let mut bar = MIN_RELATIVE_GAIN * sumsq;
    let mut best = None;
    for (f, col) in cols.iter().enumerate() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| col[r]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = split_threshold(w[0], w[1]);
            let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| col[r] < thr);
            if left.len() < msl || right.len() < msl {
                continue;
            }
            let ls: f64 = left.iter().map(|&r| y[r]).sum();
            let rs: f64 = right.iter().map(|&r| y[r]).sum();
            let gain = ls * ls / left.len() as f64 + rs * rs / right.len() as f64
                - sum * sum / cnt as f64;
            if gain > bar {
                bar = gain;
                best = Some((f, thr, left, right));
            }
        }
    }
    match best {
        None => leaf,
        Some((f, thr, left, right)) => Oracle::Split(
            f,
            thr,
            Box::new(oracle(cols, y, &left, depth - 1, msl)),
            Box::new(oracle(cols, y, &right, depth - 1, msl)),
        ),
    }
}

fn assert_matches(tree: &RegressionTree, id: usize, expected: &Oracle) {
    match (&tree.nodes()[id], expected) {
        (TreeNode::Leaf { value }, Oracle::Leaf(v)) => {
            assert!((value - v).abs() <= 1e-12 * (1.0 + v.abs()), "leaf {value} vs {v}")
        }
        (TreeNode::Split { feature, threshold, left, right }, Oracle::Split(f, t, l, r)) => {
            assert_eq!((*feature, *threshold), (*f, *t));
            assert_matches(tree, *left, l);
            assert_matches(tree, *right, r);
        }
        (got, want) => panic!("node {id}: got {got:?}, oracle {want:?}"),
    }
}

fn mixed_data(n: usize, seed: u64) -> (DesignMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cont: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let small: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
    let binary: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.2) as u8 as f64).collect();
    let y = (0..n)
        .map(|i| cont[i] * cont[i] + 0.5 * small[i] - 2.0 * binary[i] + rng.random_range(-0.3..0.3))
        .collect();
    let x = DesignMatrix::from_columns(n, [("c", cont), ("s", small), ("b", binary)]).unwrap();
    (x, y)
}

fn cfg_depth(depth: usize, msl: usize) -> BoostConfig {
    BoostConfig { max_depth: depth, min_samples_leaf: msl, ..BoostConfig::default() }
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn constant_target_is_a_single_leaf() {
    let x = DesignMatrix::from_columns(4, [("a", vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
    let tree = fit_tree(&x, &[2.5; 4], &BoostConfig::default()).unwrap();
    assert_eq!(tree.nodes(), &[TreeNode::Leaf { value: 2.5 }]);
}

#[test]
fn separating_binary_feature_gives_a_perfect_stump() {
    let x = DesignMatrix::from_columns(
        6,
        [("noise", vec![0.3, 0.1, 0.5, 0.2, 0.6, 0.4]), ("z", vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0])],
    )
    .unwrap();
    let y = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
    let tree = fit_tree(&x, &y, &BoostConfig::default()).unwrap();
    assert_eq!(tree.depth(), 1);
    assert_eq!(
        tree.nodes()[0],
        TreeNode::Split { feature: 1, threshold: 0.5, left: 1, right: 2 }
    );
    assert_eq!(rmse(&tree.predict(&x).unwrap(), &y), 0.0);
}

#[test]
fn stump_threshold_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..10.0)).collect();
    let y: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin() + rng.random_range(-0.1..0.1)).collect();
    let x = DesignMatrix::from_columns(20, [("x", xs.clone())]).unwrap();
    let tree = fit_tree(&x, &y, &cfg_depth(1, 1)).unwrap();

    // Independent search: every midpoint, SSE of both sides.
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let (mut best_thr, mut best_sse) = (f64::NAN, f64::INFINITY);
    for w in sorted.windows(2) {
        let thr = (w[0] + w[1]) / 2.0;
        let (l, r): (Vec<usize>, Vec<usize>) = (0..20).partition(|&i| xs[i] < thr);
        let total = sse(&l) + sse(&r);
        if total < best_sse {
            best_sse = total;
            best_thr = thr;
        }
    }
    match tree.nodes()[0] {
        TreeNode::Split { threshold, .. } => assert_eq!(threshold, best_thr),
        ref other => panic!("expected a split, got {other:?}"),
    }
}

#[test]
fn deep_trees_match_the_recursive_oracle() {
    for (seed, depth, msl) in [(1, 4, 1), (2, 6, 1), (3, 5, 4), (4, 3, 10)] {
        let (x, y) = mixed_data(150, seed);
        let tree = fit_tree(&x, &y, &cfg_depth(depth, msl)).unwrap();
        let rows: Vec<usize> = (0..150).collect();
        let expected = oracle(x.columns(), &y, &rows, depth, msl);
        assert_matches(&tree, 0, &expected);
        assert!(tree.depth() <= depth);
    }
}

#[test]
fn identical_inputs_give_identical_trees() {
    let (x, y) = mixed_data(120, 9);
    let a = fit_tree(&x, &y, &BoostConfig::default()).unwrap();
    let b = fit_tree(&x, &y, &BoostConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exact_ties_go_to_the_lowest_feature_and_threshold() {
    // Both features split the targets identically.
    let x = DesignMatrix::from_columns(
        4,
        [("a", vec![0.0, 0.0, 1.0, 1.0]), ("b", vec![5.0, 5.0, 7.0, 7.0])],
    )
    .unwrap();
    let tree = fit_tree(&x, &[1.0, 1.0, 3.0, 3.0], &cfg_depth(1, 1)).unwrap();
    assert!(matches!(tree.nodes()[0], TreeNode::Split { feature: 0, .. }));

    // Symmetric targets: thresholds 0.5 and 2.5 tie; the lower one wins.
    let x = DesignMatrix::from_columns(4, [("a", vec![0.0, 1.0, 2.0, 3.0])]).unwrap();
    let tree = fit_tree(&x, &[1.0, 0.0, 0.0, 1.0], &cfg_depth(1, 1)).unwrap();
    assert!(matches!(tree.nodes()[0], TreeNode::Split { threshold, .. } if threshold == 0.5));
}

#[test]
fn min_samples_leaf_is_respected() {
    let (x, y) = mixed_data(100, 5);
    let tree = fit_tree(&x, &y, &cfg_depth(6, 7)).unwrap();
    let mut counts = std::collections::HashMap::new();
    for r in 0..100 {
        let mut id = 0;
        while let TreeNode::Split { feature, threshold, left, right } = tree.nodes()[id] {
            id = if x.get(r, feature) < threshold { left } else { right };
        }
        *counts.entry(id).or_insert(0) += 1;
    }
    assert!(counts.values().all(|&c| c >= 7));
}

#[test]
fn empty_and_invalid_inputs_are_rejected() {
    let empty = DesignMatrix::new(0);
    assert!(fit_tree(&empty, &[], &BoostConfig::default()).is_err());
    let x = DesignMatrix::from_columns(3, [("a", vec![1.0, 2.0, 3.0])]).unwrap();
    assert!(fit_tree(&x, &[1.0, 2.0], &BoostConfig::default()).is_err());
    for bad in [
        BoostConfig { learning_rate: 0.0, ..BoostConfig::default() },
        BoostConfig { learning_rate: 1.5, ..BoostConfig::default() },
        BoostConfig { max_depth: 0, ..BoostConfig::default() },
        BoostConfig { max_rounds: 0, ..BoostConfig::default() },
    ] {
        assert!(matches!(fit_tree(&x, &[1.0, 2.0, 3.0], &bad), Err(Error::Config(_))));
    }
    assert!(fit_boosted(&x, &[1.0, 2.0, 3.0], &BoostConfig::default(), Some(&[0, 1, 2])).is_err());
    let few = BoostConfig { cv_folds: 4, ..BoostConfig::default() };
    assert!(matches!(cv_tune_rounds(&x, &[1.0, 2.0, 3.0], &few), Err(Error::Config(_))));
}

#[test]
fn stump_targets_stop_early_with_a_tiny_validation_error() {
    let n = 60;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let y: Vec<f64> = xs.iter().map(|&v| if v < 0.5 { -1.0 } else { 2.0 }).collect();
    let x = DesignMatrix::from_columns(n, [("x", xs)]).unwrap();
    let val: Vec<usize> = (0..n).filter(|i| i % 4 == 0).collect();
    let cfg = BoostConfig { learning_rate: 1.0, ..BoostConfig::default() };
    let model = fit_boosted(&x, &y, &cfg, Some(&val)).unwrap();
    assert!(model.rounds_used <= 2, "rounds {}", model.rounds_used);
    let pred = model.predict_rows(&x, &val).unwrap();
    let truth: Vec<f64> = val.iter().map(|&i| y[i]).collect();
    assert!(rmse(&pred, &truth) < 1e-12);
}

#[test]
fn boosting_a_parabola_beats_a_single_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 500;
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let x = DesignMatrix::from_columns(n, [("x", xs)]).unwrap();
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|i| i % 5 != 0);
    let sub = |rows: &[usize]| {
        (
            x.select_rows(rows),
            rows.iter().map(|&r| y[r]).collect::<Vec<f64>>(),
        )
    };
    let (xtr, ytr) = sub(&train);
    let (xte, yte) = sub(&test);
    let cfg = BoostConfig::default();
    let model = tune_and_fit(&xtr, &ytr, &cfg).unwrap();
    let boosted = rmse(&model.predict(&xte).unwrap(), &yte);
    let single = rmse(&fit_tree(&xtr, &ytr, &cfg).unwrap().predict(&xte).unwrap(), &yte);
    assert!(boosted < 0.2 * std_dev(&y), "boosted rmse {boosted}");
    assert!(boosted <= single, "boosted {boosted} vs single tree {single}");
}

#[test]
fn noise_needs_fewer_rounds_than_structure() {
    let mut fewer_or_equal = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let signal: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 3.0 * x * x + 0.3 * e).collect();
        let x = DesignMatrix::from_columns(n, [("x", xs)]).unwrap();
        let cfg = BoostConfig { seed, ..BoostConfig::default() };
        let r_noise = cv_tune_rounds(&x, &noise, &cfg).unwrap();
        let r_signal = cv_tune_rounds(&x, &signal, &cfg).unwrap();
        if r_noise <= r_signal {
            fewer_or_equal += 1;
        }
        assert!(r_noise <= 5, "seed {seed}: {r_noise} rounds on pure noise");
    }
    assert!(fewer_or_equal > 10, "{fewer_or_equal}/20");
}

#[test]
fn tuning_is_deterministic_and_seed_dependent() {
    let (x, y) = mixed_data(200, 7);
    let cfg = BoostConfig::default();
    assert_eq!(cv_tune_rounds(&x, &y, &cfg).unwrap(), cv_tune_rounds(&x, &y, &cfg).unwrap());
    assert_eq!(tune_and_fit(&x, &y, &cfg).unwrap(), tune_and_fit(&x, &y, &cfg).unwrap());
    assert_ne!(cv_assignment(50, 5, 1), cv_assignment(50, 5, 2));
}

#[test]
fn cv_folds_partition_rows_even_when_each_fold_is_one_row() {
    for (n, k) in [(10, 10), (23, 5), (7, 2)] {
        let folds = cv_assignment(n, k, 3);
        let mut sizes = vec![0; k];
        for &f in &folds {
            sizes[f] += 1;
        }
        assert_eq!(sizes.iter().sum::<usize>(), n);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
    let x = DesignMatrix::from_columns(8, [("a", (0..8).map(f64::from).collect())]).unwrap();
    let y: Vec<f64> = (0..8).map(|i| (i % 3) as f64).collect();
    let loo = BoostConfig { cv_folds: 8, ..BoostConfig::default() };
    assert!(cv_tune_rounds(&x, &y, &loo).unwrap() >= 1);
}

#[test]
fn zero_tree_model_predicts_the_base_score() {
    let x = DesignMatrix::from_columns(3, [("a", vec![1.0, 2.0, 3.0])]).unwrap();
    let model = BoostedModel {
        base_score: 1.25,
        learning_rate: 0.3,
        n_features: 1,
        trees: vec![],
        rounds_used: 0,
    };
    assert_eq!(predict(&model, &x).unwrap(), vec![1.25; 3]);
}

#[test]
fn hand_built_stump_predictions() {
    let x = DesignMatrix::from_columns(3, [("a", vec![0.0, 1.0, 2.0]), ("b", vec![5.0, -1.0, 3.0])])
        .unwrap();
    let tree = RegressionTree::stump(2, 1, 2.0, -1.0, 4.0);
    assert_eq!(tree.predict(&x).unwrap(), vec![4.0, -1.0, 4.0]);
    let model = BoostedModel {
        base_score: 10.0,
        learning_rate: 0.5,
        n_features: 2,
        trees: vec![tree.clone(), tree],
        rounds_used: 2,
    };
    assert_eq!(model.predict(&x).unwrap(), vec![14.0, 9.0, 14.0]);
    let narrow = DesignMatrix::from_columns(3, [("a", vec![0.0, 1.0, 2.0])]).unwrap();
    assert!(matches!(model.predict(&narrow), Err(Error::Dimension(_))));
}

#[test]
fn ensemble_is_exactly_additive_and_beats_the_base_score() {
    let (x, y) = mixed_data(150, 21);
    let cfg = BoostConfig { max_rounds: 25, ..BoostConfig::default() };
    let model = fit_boosted(&x, &y, &cfg, None).unwrap();
    assert_eq!(model.rounds_used, 25);
    let pred = model.predict(&x).unwrap();
    let per_tree: Vec<Vec<f64>> = model.trees.iter().map(|t| t.predict(&x).unwrap()).collect();
    for r in 0..150 {
        let total: f64 = per_tree.iter().map(|p| p[r]).sum();
        assert_eq!(pred[r], model.base_score + model.learning_rate * total);
    }
    let base = vec![model.base_score; 150];
    assert!(rmse(&pred, &y) <= rmse(&base, &y));
    let json = model.to_json().unwrap();
    let back: BoostedModel = serde_json::from_str(&json).unwrap();
    assert_eq!(back, model);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn training_loss_never_increases(
        seed in any::<u64>(),
        n in 5usize..60,
        lr in 0.05f64..=1.0,
        depth in 1usize..5,
    ) {
        let (x, y) = mixed_data(n, seed);
        let cfg = BoostConfig { learning_rate: lr, max_depth: depth, max_rounds: 15, ..BoostConfig::default() };
        let mut model = fit_boosted(&x, &y, &cfg, None).unwrap();
        let trees = std::mem::take(&mut model.trees);
        let mut prev = rmse(&model.predict(&x).unwrap(), &y);
        for t in trees {
            model.trees.push(t);
            let cur = rmse(&model.predict(&x).unwrap(), &y);
            prop_assert!(cur <= prev * (1.0 + 1e-12) + 1e-14, "{cur} > {prev}");
            prev = cur;
        }
    }

    #[test]
    fn stumps_match_brute_force(seed in any::<u64>(), n in 2usize..40) {
        let (x, y) = mixed_data(n, seed);
        let tree = fit_tree(&x, &y, &cfg_depth(1, 1)).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        assert_matches(&tree, 0, &oracle(x.columns(), &y, &rows, 1, 1));
    }
}
