//! Balanced panel data and the deterministic linear algebra shared by all
//! estimators.
//!
//! Rows are laid out unit-major: the observation of unit `i` in period `t`
//! (both zero-based) lives at row `i * n_periods + t`. Use
//! [`PanelDataset::row`], [`PanelDataset::unit_of`] and
//! [`PanelDataset::period_of`] instead of re-deriving the mapping.

mod design;
mod io;
mod ols;
mod transform;

pub use design::DesignMatrix;
pub use io::{read_csv, write_csv};
pub use ols::{ols_fit, OlsFit, RANK_TOLERANCE};
pub use transform::{
    period_dummy_columns, period_means, unit_dummy_columns, unit_means, within_demean_twoway,
    within_demean_unit,
};

use crate::{Error, Result};

/// A balanced panel of outcome `y`, treatment `w` and confounders `x1..xJ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    n_units: usize,
    n_periods: usize,
    outcome: Vec<f64>,
    treatment: Vec<f64>,
    confounders: Vec<Vec<f64>>,
}

impl PanelDataset {
    /// Builds a dataset from unit-major vectors. `confounders` holds one
    /// vector per confounder; it may be empty.
    pub fn new(
        n_units: usize,
        n_periods: usize,
        outcome: Vec<f64>,
        treatment: Vec<f64>,
        confounders: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n_units == 0 || n_periods == 0 {
            return Err(Error::Dimension(format!(
                "panel needs at least one unit and one period, got N={n_units}, T={n_periods}"
            )));
        }
        let rows = n_units * n_periods;
        let check = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != rows {
                return Err(Error::Dimension(format!(
                    "{name} has length {} but N*T = {rows}",
                    v.len()
                )));
            }
            if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(format!("{name} has a non-finite entry at row {pos}")));
            }
            Ok(())
        };
        check("y", &outcome)?;
        check("w", &treatment)?;
        for (j, col) in confounders.iter().enumerate() {
            check(&format!("x{}", j + 1), col)?;
        }
        Ok(Self {
            n_units,
            n_periods,
            outcome,
            treatment,
            confounders,
        })
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn n_rows(&self) -> usize {
        self.n_units * self.n_periods
    }

    pub fn n_confounders(&self) -> usize {
        self.confounders.len()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn confounders(&self) -> &[Vec<f64>] {
        &self.confounders
    }

    pub fn confounder(&self, j: usize) -> &[f64] {
        &self.confounders[j]
    }

    /// Row index of (unit, period), both zero-based.
    #[inline]
    pub fn row(&self, unit: usize, period: usize) -> usize {
        debug_assert!(unit < self.n_units && period < self.n_periods);
        unit * self.n_periods + period
    }

    #[inline]
    pub fn unit_of(&self, row: usize) -> usize {
        row / self.n_periods
    }

    #[inline]
    pub fn period_of(&self, row: usize) -> usize {
        row % self.n_periods
    }

    /// Applies `f` to the outcome, the treatment and every confounder,
    /// returning a new dataset with the same shape.
    pub fn map_columns<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let outcome = f(&self.outcome)?;
        let treatment = f(&self.treatment)?;
        let confounders = self
            .confounders
            .iter()
            .map(|c| f(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n_units, self.n_periods, outcome, treatment, confounders)
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_rows() {
            return Err(Error::Dimension(format!(
                "vector has length {} but the panel has {} rows",
                v.len(),
                self.n_rows()
            )));
        }
        Ok(())
    }
}
