use serde::{Deserialize, Serialize};

use super::linear::demean;
use super::{Diagnostics, EstimateResult, EstimatorSpec, Method};
use crate::boost::{tune_and_fit, BoostConfig};
use crate::crossfit::{make_folds, training_rows, FoldPlan};
use crate::paneldata::{
    ols_fit, period_dummy_columns, period_means, unit_dummy_columns, unit_means, DesignMatrix,
    PanelDataset,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

const PLAN_SEED: u64 = 1;
const LEARNER_SEED: u64 = 2;

/// Applied to the cross-fitted residuals before the final regression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualTransform {
    #[default]
    None,
    DemeanUnit,
    DemeanTwoway,
}

/// How fold-level residual regressions are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalStage {
    /// One regression per fold, slopes averaged.
    #[default]
    Average,
    /// One regression on all residuals.
    Pooled,
}

/// Which rows define the unit means used to demean residuals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LateDemeanScope {
    /// All periods of the unit.
    #[default]
    Global,
    /// Only the unit's rows inside the prediction fold.
    Fold,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DmlOptions {
    pub boost: BoostConfig,
    pub transform: ResidualTransform,
    pub final_stage: FinalStage,
    pub late_demean_scope: LateDemeanScope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Target {
    Treatment,
    Outcome,
}

/// Nuisance learner: trains on `train` rows, predicts `predict` rows.
/// Returns the predictions and the number of boosting rounds used.
pub(crate) trait Learner {
    fn fit_predict(
        &self,
        x: &DesignMatrix,
        y: &[f64],
        train: &[usize],
        predict: &[usize],
        target: Target,
        cfg: &BoostConfig,
    ) -> Result<(Vec<f64>, usize)>;
}

struct Boosted;

impl Learner for Boosted {
    fn fit_predict(
        &self,
        x: &DesignMatrix,
        y: &[f64],
        train: &[usize],
        predict: &[usize],
        _target: Target,
        cfg: &BoostConfig,
    ) -> Result<(Vec<f64>, usize)> {
        let xs = x.select_rows(train);
        let ys: Vec<f64> = train.iter().map(|&r| y[r]).collect();
        let model = tune_and_fit(&xs, &ys, cfg)?;
        Ok((model.predict_rows(x, predict)?, model.rounds_used))
    }
}

/// Cross-fitted DML with boosted nuisance models and averaged fold slopes.
pub fn dml_core(
    dataset: &PanelDataset,
    w_features: &DesignMatrix,
    y_features: &DesignMatrix,
    plan: &FoldPlan,
    boost_cfg: &BoostConfig,
    residual_transform: ResidualTransform,
    seed: u64,
) -> Result<EstimateResult> {
    let opts = DmlOptions {
        boost: boost_cfg.clone(),
        transform: residual_transform,
        ..DmlOptions::default()
    };
    dml_core_with(dataset, w_features, y_features, plan, &opts, seed)
}

pub fn dml_core_with(
    dataset: &PanelDataset,
    w_features: &DesignMatrix,
    y_features: &DesignMatrix,
    plan: &FoldPlan,
    opts: &DmlOptions,
    seed: u64,
) -> Result<EstimateResult> {
    dml_core_with_learner(dataset, w_features, y_features, plan, opts, seed, &Boosted)
}

pub(crate) fn dml_core_with_learner(
    dataset: &PanelDataset,
    w_features: &DesignMatrix,
    y_features: &DesignMatrix,
    plan: &FoldPlan,
    opts: &DmlOptions,
    seed: u64,
    learner: &dyn Learner,
) -> Result<EstimateResult> {
    let n = dataset.n_rows();
    for (name, x) in [("treatment", w_features), ("outcome", y_features)] {
        if x.n_rows() != n {
            return Err(Error::Dimension(format!(
                "{name} features have {} rows, dataset has {n}",
                x.n_rows()
            )));
        }
    }
    if plan.n_rows() != n {
        return Err(Error::Dimension(format!(
            "fold plan covers {} rows, dataset has {n}",
            plan.n_rows()
        )));
    }
    let w = dataset.treatment();
    let y = dataset.outcome();
    let mut vw = vec![0.0; n];
    let mut vy = vec![0.0; n];
    let mut rounds_w = Vec::with_capacity(plan.k());
    let mut rounds_y = Vec::with_capacity(plan.k());
    let mut folds = Vec::with_capacity(plan.k());

    for k in 1..=plan.k() {
        let test = plan.fold_rows(k)?;
        if test.len() < 2 {
            return Err(Error::Estimation {
                fold: k,
                reason: format!("prediction fold has {} row(s), need at least 2", test.len()),
            });
        }
        let train = training_rows(plan, k)?;
        let cfg = |m: u64| BoostConfig {
            seed: derive_seed(seed, &[k as u64, m]),
            ..opts.boost.clone()
        };
        let (pw, rw) = learner.fit_predict(w_features, w, &train, &test, Target::Treatment, &cfg(0))?;
        let (py, ry) = learner.fit_predict(y_features, y, &train, &test, Target::Outcome, &cfg(1))?;
        for (i, &r) in test.iter().enumerate() {
            vw[r] = w[r] - pw[i];
            vy[r] = y[r] - py[i];
        }
        rounds_w.push(rw);
        rounds_y.push(ry);
        folds.push(test);
    }

    let rms = |v: &[f64]| (v.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
    let diagnostics = Diagnostics {
        rmse_w: rms(&vw),
        rmse_y: rms(&vy),
        rounds_w,
        rounds_y,
    };

    if opts.transform != ResidualTransform::None {
        let two_way = opts.transform == ResidualTransform::DemeanTwoway;
        match opts.late_demean_scope {
            LateDemeanScope::Global => {
                vw = demean(&vw, dataset, two_way)?;
                vy = demean(&vy, dataset, two_way)?;
            }
            LateDemeanScope::Fold => {
                for rows in &folds {
                    demean_subset(&mut vw, rows, dataset, two_way);
                    demean_subset(&mut vy, rows, dataset, two_way);
                }
            }
        }
    }

    let (beta_hat, fold_betas) = match opts.final_stage {
        FinalStage::Average => {
            let mut betas = Vec::with_capacity(plan.k());
            for (i, rows) in folds.iter().enumerate() {
                betas.push(residual_slope(&vw, &vy, rows, i + 1)?);
            }
            let mean = betas.iter().sum::<f64>() / betas.len() as f64;
            (mean, Some(betas))
        }
        FinalStage::Pooled => {
            let all: Vec<usize> = (0..n).collect();
            (residual_slope(&vw, &vy, &all, 0)?, None)
        }
    };

    Ok(EstimateResult {
        method: Method::Pdml,
        beta_hat,
        fold_betas,
        diagnostics: Some(diagnostics),
        wall_time: None,
    })
}

/// OLS slope of `vy` on an intercept and `vw` over `rows`.
fn residual_slope(vw: &[f64], vy: &[f64], rows: &[usize], fold: usize) -> Result<f64> {
    let xw: Vec<f64> = rows.iter().map(|&r| vw[r]).collect();
    let mean = xw.iter().sum::<f64>() / xw.len() as f64;
    let spread = xw.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let scale = xw.iter().map(|v| v * v).sum::<f64>();
    if spread <= 1e-24 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Estimation {
            fold,
            reason: "treatment residuals have zero variance".into(),
        });
    }
    let mut x = DesignMatrix::new(rows.len());
    x.push_intercept()?;
    x.push("w", xw)?;
    let yv: Vec<f64> = rows.iter().map(|&r| vy[r]).collect();
    let fit = ols_fit(&x, &yv).map_err(|e| match e {
        Error::SingularDesign { .. } => Error::Estimation {
            fold,
            reason: "treatment residuals have zero variance".into(),
        },
        other => other,
    })?;
    Ok(fit.coef("w").expect("design has a `w` column"))
}

/// Within transform restricted to `rows`, using means over those rows only.
fn demean_subset(v: &mut [f64], rows: &[usize], dataset: &PanelDataset, two_way: bool) {
    let nu = dataset.n_units();
    let nt = dataset.n_periods();
    let mut unit = vec![(0.0, 0usize); nu];
    let mut period = vec![(0.0, 0usize); nt];
    let mut total = 0.0;
    for &r in rows {
        let u = &mut unit[dataset.unit_of(r)];
        u.0 += v[r];
        u.1 += 1;
        let p = &mut period[dataset.period_of(r)];
        p.0 += v[r];
        p.1 += 1;
        total += v[r];
    }
    let grand = total / rows.len() as f64;
    let mean = |(s, c): (f64, usize)| s / c as f64;
    for &r in rows {
        let mut out = v[r] - mean(unit[dataset.unit_of(r)]);
        if two_way {
            out += grand - mean(period[dataset.period_of(r)]);
        }
        v[r] = out;
    }
}

/// The fold plan a DML spec uses for a given estimation seed.
pub fn fold_plan(dataset: &PanelDataset, spec: &EstimatorSpec, seed: u64) -> Result<FoldPlan> {
    make_folds(
        dataset,
        spec.split.strategy,
        spec.split.folds(),
        derive_seed(seed, &[PLAN_SEED]),
        spec.split.neighbor_width,
    )
}

pub(crate) fn learner_seed(seed: u64) -> u64 {
    derive_seed(seed, &[LEARNER_SEED])
}

fn confounder_design(dataset: &PanelDataset) -> Result<DesignMatrix> {
    if dataset.n_confounders() == 0 {
        return Err(Error::Data("DML methods need at least one confounder column".into()));
    }
    DesignMatrix::from_columns(
        dataset.n_rows(),
        dataset
            .confounders()
            .iter()
            .enumerate()
            .map(|(j, c)| (format!("x{}", j + 1), c.clone())),
    )
}

fn run_variant(
    dataset: &PanelDataset,
    spec: &EstimatorSpec,
    features: &DesignMatrix,
    transform: ResidualTransform,
    seed: u64,
) -> Result<EstimateResult> {
    let plan = fold_plan(dataset, spec, seed)?;
    let opts = DmlOptions { transform, ..spec.options() };
    let mut result = dml_core_with(dataset, features, features, &plan, &opts, learner_seed(seed))?;
    result.method = spec.method;
    Ok(result)
}

/// Features X, no panel adjustment.
pub fn pdml(dataset: &PanelDataset, spec: &EstimatorSpec, seed: u64) -> Result<EstimateResult> {
    let x = confounder_design(dataset)?;
    run_variant(dataset, spec, &x, ResidualTransform::None, seed)
}

/// Demeans Y, W and X before cross-fitting.
pub fn dml_early_fe(dataset: &PanelDataset, spec: &EstimatorSpec, seed: u64) -> Result<EstimateResult> {
    let within = dataset.map_columns(|v| demean(v, dataset, spec.two_way))?;
    let x = confounder_design(&within)?;
    run_variant(&within, spec, &x, ResidualTransform::None, seed)
}

/// Cross-fits on raw data, then demeans the residuals.
pub fn dml_late_fe(dataset: &PanelDataset, spec: &EstimatorSpec, seed: u64) -> Result<EstimateResult> {
    let x = confounder_design(dataset)?;
    let transform = if spec.two_way {
        ResidualTransform::DemeanTwoway
    } else {
        ResidualTransform::DemeanUnit
    };
    run_variant(dataset, spec, &x, transform, seed)
}

/// Features X plus one-hot unit (and period) indicators.
pub fn dml_dummies(dataset: &PanelDataset, spec: &EstimatorSpec, seed: u64) -> Result<EstimateResult> {
    let mut x = confounder_design(dataset)?;
    x.extend(unit_dummy_columns(dataset))?;
    if spec.two_way {
        x.extend(period_dummy_columns(dataset))?;
    }
    run_variant(dataset, spec, &x, ResidualTransform::None, seed)
}

/// Features X plus unit means of X and W (and period means when two-way).
pub fn dml_cre(dataset: &PanelDataset, spec: &EstimatorSpec, seed: u64) -> Result<EstimateResult> {
    let mut x = confounder_design(dataset)?;
    for (j, c) in dataset.confounders().iter().enumerate() {
        x.push(format!("xbar{}", j + 1), unit_means(c, dataset)?)?;
    }
    x.push("wbar", unit_means(dataset.treatment(), dataset)?)?;
    if spec.two_way {
        for (j, c) in dataset.confounders().iter().enumerate() {
            x.push(format!("xtbar{}", j + 1), period_means(c, dataset)?)?;
        }
        x.push("wtbar", period_means(dataset.treatment(), dataset)?)?;
    }
    run_variant(dataset, spec, &x, ResidualTransform::None, seed)
}
