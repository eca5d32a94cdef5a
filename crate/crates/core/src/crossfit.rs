//! Sample-splitting strategies for cross-fitting.
//!
//! Fold ids are 1-based. Time-blocked plans give the earlier folds the
//! extra periods when `K` does not divide `T`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::paneldata::PanelDataset;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Rows shuffled into folds, ignoring the panel structure.
    #[serde(rename = "random")]
    Random,
    /// Whole units shuffled into folds.
    #[serde(rename = "by-unit")]
    ByUnit,
    /// Whole periods shuffled into folds.
    #[serde(rename = "by-period")]
    ByPeriod,
    /// Contiguous blocks of periods.
    #[serde(rename = "time-folds")]
    TimeFolds,
    /// Contiguous blocks of periods; blocks next to the prediction fold are
    /// left out of training.
    #[serde(rename = "nlo")]
    NeighborsLeftOut,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Random,
        Strategy::ByUnit,
        Strategy::ByPeriod,
        Strategy::TimeFolds,
        Strategy::NeighborsLeftOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::ByUnit => "by-unit",
            Strategy::ByPeriod => "by-period",
            Strategy::TimeFolds => "time-folds",
            Strategy::NeighborsLeftOut => "nlo",
        }
    }

    pub fn default_folds(self) -> usize {
        match self {
            Strategy::NeighborsLeftOut => 10,
            _ => 5,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "split strategy", name: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    strategy: Strategy,
    k: usize,
    n_periods: usize,
    fold_of: Vec<usize>,
    neighbor_width: usize,
}

impl FoldPlan {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbor_width(&self) -> usize {
        self.neighbor_width
    }

    /// Fold id in `1..=K` for every row.
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn n_rows(&self) -> usize {
        self.fold_of.len()
    }

    fn check_fold(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.k {
            return Err(Error::Config(format!("fold {k} outside 1..={}", self.k)));
        }
        Ok(())
    }

    pub fn fold_rows(&self, k: usize) -> Result<Vec<usize>> {
        self.check_fold(k)?;
        Ok((0..self.n_rows()).filter(|&r| self.fold_of[r] == k).collect())
    }

    /// Folds whose rows train the models that predict fold `k`.
    pub fn training_folds(&self, k: usize) -> Result<Vec<usize>> {
        self.check_fold(k)?;
        let w = match self.strategy {
            Strategy::NeighborsLeftOut => self.neighbor_width,
            _ => 0,
        };
        Ok((1..=self.k).filter(|&j| j.abs_diff(k) > w).collect())
    }

    /// One plan with every row in a single fold, used to check identities
    /// that hold without sample splitting.
    #[cfg(test)]
    pub(crate) fn single_fold(n_units: usize, n_periods: usize) -> Self {
        Self {
            strategy: Strategy::Random,
            k: 1,
            n_periods,
            fold_of: vec![1; n_units * n_periods],
            neighbor_width: 0,
        }
    }
}

pub fn training_rows(plan: &FoldPlan, k: usize) -> Result<Vec<usize>> {
    let mut keep = vec![false; plan.k + 1];
    for j in plan.training_folds(k)? {
        keep[j] = true;
    }
    Ok((0..plan.n_rows()).filter(|&r| keep[plan.fold_of[r]]).collect())
}

/// Assigns every row of the panel to one of `k` folds.
pub fn make_folds(
    dataset: &PanelDataset,
    strategy: Strategy,
    k: usize,
    seed: u64,
    neighbor_width: usize,
) -> Result<FoldPlan> {
    make_folds_for(dataset.n_units(), dataset.n_periods(), strategy, k, seed, neighbor_width)
}

pub fn make_folds_for(
    n_units: usize,
    n_periods: usize,
    strategy: Strategy,
    k: usize,
    seed: u64,
    neighbor_width: usize,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need K >= 2 folds, got {k}")));
    }
    let need = |what: &str, have: usize| -> Result<()> {
        if have < k {
            return Err(Error::Config(format!(
                "{strategy} split needs {what} >= K = {k}, got {have}"
            )));
        }
        Ok(())
    };
    let rows = n_units * n_periods;
    let mut rng = rng::stream(seed, Stream::Folds);
    let fold_of = match strategy {
        Strategy::Random => {
            need("N*T", rows)?;
            deal(rows, k, &mut rng)
        }
        Strategy::ByUnit => {
            need("N", n_units)?;
            let unit_fold = deal(n_units, k, &mut rng);
            (0..rows).map(|r| unit_fold[r / n_periods]).collect()
        }
        Strategy::ByPeriod => {
            need("T", n_periods)?;
            let period_fold = deal(n_periods, k, &mut rng);
            (0..rows).map(|r| period_fold[r % n_periods]).collect()
        }
        Strategy::TimeFolds | Strategy::NeighborsLeftOut => {
            need("T", n_periods)?;
            if strategy == Strategy::NeighborsLeftOut && k < 2 * neighbor_width + 2 {
                return Err(Error::Config(format!(
                    "nlo split needs K >= 2*width + 2 = {}, got K = {k}",
                    2 * neighbor_width + 2
                )));
            }
            let period_fold = time_blocks(n_periods, k);
            (0..rows).map(|r| period_fold[r % n_periods]).collect()
        }
    };
    Ok(FoldPlan {
        strategy,
        k,
        n_periods,
        fold_of,
        neighbor_width: if strategy == Strategy::NeighborsLeftOut { neighbor_width } else { 0 },
    })
}

fn deal(n: usize, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold = vec![0; n];
    for (i, &item) in order.iter().enumerate() {
        fold[item] = i % k + 1;
    }
    fold
}

/// Fold of each period: `T mod K` blocks of `ceil(T/K)` then blocks of
/// `floor(T/K)`.
fn time_blocks(n_periods: usize, k: usize) -> Vec<usize> {
    let short = n_periods / k;
    let extra = n_periods % k;
    let mut fold = Vec::with_capacity(n_periods);
    for j in 0..k {
        let len = short + usize::from(j < extra);
        fold.extend(std::iter::repeat_n(j + 1, len));
    }
    fold
}
