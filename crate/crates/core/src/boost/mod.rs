//! Least-squares gradient boosted regression trees.
//!
//! Trees are grown level by level with exact greedy splits: every midpoint
//! between consecutive distinct values present in a node is a candidate.
//! Leaves predict the mean residual of their rows. Ties in gain go to the
//! lowest feature index and then the lowest threshold.
//!
//! [`cv_tune_rounds`] picks the number of rounds by K-fold cross-validation
//! with early stopping, and [`tune_and_fit`] refits on all rows with that
//! count.

mod binned;
mod tree;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use binned::BinnedMatrix;
pub use tree::{RegressionTree, TreeNode};

use crate::paneldata::DesignMatrix;
use crate::rng::{self, Stream};
use crate::{Error, Result};
use tree::{check_width, Grower, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub early_stopping_rounds: usize,
    pub max_rounds: usize,
    pub cv_folds: usize,
    pub min_samples_leaf: usize,
    /// Seeds the cross-validation shuffle.
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.3,
            max_depth: 6,
            early_stopping_rounds: 10,
            max_rounds: 200,
            cv_folds: 5,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must lie in (0, 1], got {}", self.learning_rate));
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1".into());
        }
        if self.max_rounds < 1 {
            return bad("max_rounds must be >= 1".into());
        }
        if self.early_stopping_rounds < 1 {
            return bad("early_stopping_rounds must be >= 1".into());
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be >= 2, got {}", self.cv_folds));
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be >= 1".into());
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<RegressionTree>,
    pub rounds_used: usize,
}

impl BoostedModel {
    /// `base_score + learning_rate * sum of tree outputs`, per row.
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        Ok((0..x.n_rows()).map(|r| self.predict_row(x, r)).collect())
    }

    /// Predictions for a subset of rows of `x`, in the given order.
    pub fn predict_rows(&self, x: &DesignMatrix, rows: &[usize]) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        if let Some(&r) = rows.iter().find(|&&r| r >= x.n_rows()) {
            return Err(Error::Dimension(format!("row {r} out of range")));
        }
        Ok(rows.iter().map(|&r| self.predict_row(x, r)).collect())
    }

    fn predict_row(&self, x: &DesignMatrix, row: usize) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict_row(x, row)).sum();
        self.base_score + self.learning_rate * total
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn predict(model: &BoostedModel, x: &DesignMatrix) -> Result<Vec<f64>> {
    model.predict(x)
}

fn check_targets(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows but {} targets",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() == 0 {
        return Err(Error::Data("cannot fit on an empty training set".into()));
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite target at row {pos}")));
    }
    Ok(())
}

/// A single least-squares tree fitted directly to `targets`.
pub fn fit_tree(features: &DesignMatrix, targets: &[f64], cfg: &BoostConfig) -> Result<RegressionTree> {
    cfg.validate()?;
    check_targets(features, targets)?;
    let bm = BinnedMatrix::new(features);
    let rows: Vec<u32> = (0..bm.n_rows() as u32).collect();
    Ok(Grower::new(bm.n_rows())
        .grow(&bm, targets, &rows, cfg.tree_params())
        .tree)
}

/// Boosting state over a fixed training subset of a binned matrix.
/// Predictions are kept for every row so held-out rows can be scored.
struct Booster<'a> {
    bm: &'a BinnedMatrix,
    y: &'a [f64],
    train: Vec<u32>,
    base: f64,
    lr: f64,
    params: TreeParams,
    tree_sum: Vec<f64>,
    residual: Vec<f64>,
    trees: Vec<RegressionTree>,
    grower: Grower,
}

impl<'a> Booster<'a> {
    fn new(bm: &'a BinnedMatrix, y: &'a [f64], train: Vec<u32>, cfg: &BoostConfig) -> Self {
        let base = train.iter().map(|&r| y[r as usize]).sum::<f64>() / train.len() as f64;
        let n = bm.n_rows();
        Self {
            bm,
            y,
            train,
            base,
            lr: cfg.learning_rate,
            params: cfg.tree_params(),
            tree_sum: vec![0.0; n],
            residual: vec![0.0; n],
            trees: Vec::new(),
            grower: Grower::new(n),
        }
    }

    #[inline]
    fn prediction(&self, row: usize) -> f64 {
        self.base + self.lr * self.tree_sum[row]
    }

    fn step(&mut self) {
        for &r in &self.train {
            let r = r as usize;
            self.residual[r] = self.y[r] - self.prediction(r);
        }
        let grown = self.grower.grow(self.bm, &self.residual, &self.train, self.params);
        for (r, acc) in self.tree_sum.iter_mut().enumerate() {
            *acc += grown.route(self.bm, r);
        }
        self.trees.push(grown.tree);
    }

    fn rmse(&self, rows: &[u32]) -> f64 {
        let sse: f64 = rows
            .iter()
            .map(|&r| (self.y[r as usize] - self.prediction(r as usize)).powi(2))
            .sum();
        (sse / rows.len() as f64).sqrt()
    }

    fn into_model(mut self, rounds: usize) -> BoostedModel {
        self.trees.truncate(rounds);
        BoostedModel {
            base_score: self.base,
            learning_rate: self.lr,
            n_features: self.bm.n_cols(),
            rounds_used: self.trees.len(),
            trees: self.trees,
        }
    }
}

/// Stagewise boosting. Without a validation set, runs `max_rounds` rounds.
/// With one, trains on the remaining rows, stops once validation RMSE has
/// not improved for `early_stopping_rounds` rounds, and keeps the best
/// prefix.
pub fn fit_boosted(
    features: &DesignMatrix,
    targets: &[f64],
    cfg: &BoostConfig,
    validation: Option<&[usize]>,
) -> Result<BoostedModel> {
    cfg.validate()?;
    check_targets(features, targets)?;
    let bm = BinnedMatrix::new(features);
    let n = bm.n_rows();
    let Some(val) = validation else {
        let rows = (0..n as u32).collect();
        return Ok(fit_rounds(&bm, targets, rows, cfg, cfg.max_rounds));
    };
    let mut in_val = vec![false; n];
    for &r in val {
        if r >= n {
            return Err(Error::Dimension(format!("validation row {r} out of range")));
        }
        if in_val[r] {
            return Err(Error::Data(format!("validation row {r} listed twice")));
        }
        in_val[r] = true;
    }
    if val.is_empty() {
        return Err(Error::Data("validation set is empty".into()));
    }
    let train: Vec<u32> = (0..n as u32).filter(|&r| !in_val[r as usize]).collect();
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let val: Vec<u32> = val.iter().map(|&r| r as u32).collect();
    let mut booster = Booster::new(&bm, targets, train, cfg);
    let mut best = (f64::INFINITY, 0usize);
    for round in 1..=cfg.max_rounds {
        booster.step();
        let score = booster.rmse(&val);
        if score < best.0 {
            best = (score, round);
        } else if round - best.1 >= cfg.early_stopping_rounds {
            break;
        }
    }
    Ok(booster.into_model(best.1.max(1)))
}

fn fit_rounds(
    bm: &BinnedMatrix,
    y: &[f64],
    rows: Vec<u32>,
    cfg: &BoostConfig,
    rounds: usize,
) -> BoostedModel {
    let mut booster = Booster::new(bm, y, rows, cfg);
    for _ in 0..rounds {
        booster.step();
    }
    booster.into_model(rounds)
}

/// Fold id in `0..k` for each of `n` rows: a seeded shuffle dealt round-robin.
pub(crate) fn cv_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Stream::Tuning));
    let mut fold = vec![0; n];
    for (i, &r) in order.iter().enumerate() {
        fold[r] = i % k;
    }
    fold
}

/// Number of rounds minimizing the mean validation RMSE over `cv_folds`
/// random folds. All fold models advance one round at a time and tuning
/// stops once the mean has not improved for `early_stopping_rounds` rounds.
pub fn cv_tune_rounds(features: &DesignMatrix, targets: &[f64], cfg: &BoostConfig) -> Result<usize> {
    cfg.validate()?;
    check_targets(features, targets)?;
    let bm = BinnedMatrix::new(features);
    tune_binned(&bm, targets, cfg)
}

fn tune_binned(bm: &BinnedMatrix, y: &[f64], cfg: &BoostConfig) -> Result<usize> {
    let n = bm.n_rows();
    let k = cfg.cv_folds;
    if n < k {
        return Err(Error::Config(format!(
            "cross-validation needs at least cv_folds = {k} rows, got {n}"
        )));
    }
    let fold = cv_assignment(n, k, cfg.seed);
    let mut boosters = Vec::with_capacity(k);
    let mut held_out = Vec::with_capacity(k);
    for f in 0..k {
        let (val, train): (Vec<u32>, Vec<u32>) = (0..n as u32).partition(|&r| fold[r as usize] == f);
        if train.is_empty() {
            // Only possible with a single row per fold and k == n == 1,
            // which validate() already excludes.
            return Err(Error::Config("a cross-validation fold has no training rows".into()));
        }
        boosters.push(Booster::new(bm, y, train, cfg));
        held_out.push(val);
    }
    let mut best = (f64::INFINITY, 1usize);
    for round in 1..=cfg.max_rounds {
        let mut total = 0.0;
        for (b, val) in boosters.iter_mut().zip(&held_out) {
            b.step();
            total += b.rmse(val);
        }
        let score = total / k as f64;
        if score < best.0 {
            best = (score, round);
        } else if round - best.1 >= cfg.early_stopping_rounds {
            break;
        }
    }
    Ok(best.1)
}

/// Tunes the round count by cross-validation and refits on all rows.
pub fn tune_and_fit(features: &DesignMatrix, targets: &[f64], cfg: &BoostConfig) -> Result<BoostedModel> {
    cfg.validate()?;
    check_targets(features, targets)?;
    let bm = BinnedMatrix::new(features);
    tune_and_fit_binned(&bm, targets, cfg)
}

/// As [`tune_and_fit`] on a prebuilt binned matrix, so several targets can
/// share one binning pass.
pub fn tune_and_fit_binned(bm: &BinnedMatrix, targets: &[f64], cfg: &BoostConfig) -> Result<BoostedModel> {
    cfg.validate()?;
    if targets.len() != bm.n_rows() || targets.is_empty() {
        return Err(Error::Dimension(format!(
            "{} feature rows but {} targets",
            bm.n_rows(),
            targets.len()
        )));
    }
    let rounds = tune_binned(bm, targets, cfg)?;
    let rows = (0..bm.n_rows() as u32).collect();
    Ok(fit_rounds(bm, targets, rows, cfg, rounds))
}

#[cfg(test)]
mod tests;
