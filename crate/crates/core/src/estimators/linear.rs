use crate::dgp::SimulationTruth;
use crate::paneldata::{
    ols_fit, within_demean_twoway, within_demean_unit, DesignMatrix, PanelDataset,
};
use crate::{Error, Result};

fn slope(x: &DesignMatrix, y: &[f64]) -> Result<f64> {
    let fit = ols_fit(x, y)?;
    Ok(fit.coef("w").expect("design has a `w` column"))
}

fn require_confounders(dataset: &PanelDataset) -> Result<()> {
    if dataset.n_confounders() == 0 {
        return Err(Error::Data("method needs at least one confounder column".into()));
    }
    Ok(())
}

pub(crate) fn demean(v: &[f64], dataset: &PanelDataset, two_way: bool) -> Result<Vec<f64>> {
    if two_way {
        within_demean_twoway(v, dataset)
    } else {
        within_demean_unit(v, dataset)
    }
}

/// OLS of Y on an intercept and W.
pub fn simple_ols(dataset: &PanelDataset) -> Result<f64> {
    let n = dataset.n_rows();
    let mut x = DesignMatrix::new(n);
    x.push_intercept()?;
    x.push("w", dataset.treatment().to_vec())?;
    slope(&x, dataset.outcome())
}

/// OLS of Y on an intercept, W and every confounder.
pub fn pols(dataset: &PanelDataset) -> Result<f64> {
    require_confounders(dataset)?;
    let n = dataset.n_rows();
    let mut x = DesignMatrix::new(n);
    x.push_intercept()?;
    x.push("w", dataset.treatment().to_vec())?;
    for (j, col) in dataset.confounders().iter().enumerate() {
        x.push(format!("x{}", j + 1), col.clone())?;
    }
    slope(&x, dataset.outcome())
}

fn within_fit(
    dataset: &PanelDataset,
    extra: &[Vec<f64>],
    prefix: &str,
    two_way: bool,
) -> Result<f64> {
    let n = dataset.n_rows();
    let mut x = DesignMatrix::new(n);
    x.push("w", demean(dataset.treatment(), dataset, two_way)?)?;
    for (j, col) in extra.iter().enumerate() {
        x.push(format!("{prefix}{}", j + 1), demean(col, dataset, two_way)?)?;
    }
    slope(&x, &demean(dataset.outcome(), dataset, two_way)?)
}

/// Within estimator of Y on W and the confounders.
pub fn fixed_effects(dataset: &PanelDataset, two_way: bool) -> Result<f64> {
    require_confounders(dataset)?;
    within_fit(dataset, dataset.confounders(), "x", two_way)
}

/// Within estimator of Y on W alone.
pub fn fe_only(dataset: &PanelDataset, two_way: bool) -> Result<f64> {
    within_fit(dataset, &[], "x", two_way)
}

fn transformed_confounders(dataset: &PanelDataset, truth: &SimulationTruth) -> Result<Vec<Vec<f64>>> {
    require_confounders(dataset)?;
    if truth.gamma.len() != dataset.n_confounders() {
        return Err(Error::Dimension(format!(
            "truth describes {} confounders, dataset has {}",
            truth.gamma.len(),
            dataset.n_confounders()
        )));
    }
    let form = truth.functional_form;
    Ok(dataset
        .confounders()
        .iter()
        .map(|c| c.iter().map(|&x| form.eval(x)).collect())
        .collect())
}

/// Within estimator using the true functional form of the confounders.
pub fn oracle_fe(dataset: &PanelDataset, truth: &SimulationTruth, two_way: bool) -> Result<f64> {
    let fx = transformed_confounders(dataset, truth)?;
    within_fit(dataset, &fx, "x", two_way)
}

/// Pooled OLS using the true functional form of the confounders.
pub fn oracle_no_fe(dataset: &PanelDataset, truth: &SimulationTruth) -> Result<f64> {
    let fx = transformed_confounders(dataset, truth)?;
    let mut x = DesignMatrix::new(dataset.n_rows());
    x.push_intercept()?;
    x.push("w", dataset.treatment().to_vec())?;
    for (j, col) in fx.into_iter().enumerate() {
        x.push(format!("fx{}", j + 1), col)?;
    }
    slope(&x, dataset.outcome())
}
