use super::dml::{dml_core_with_learner, learner_seed, Learner, Target};
use super::*;
use crate::crossfit::{make_folds, FoldPlan};
use crate::dgp::{generate, DgpConfig, FunctionalForm, Structure};
use crate::paneldata::{ols_fit, unit_dummy_columns, unit_means, DesignMatrix};
use crate::rng::derive_seed;

/// Predicts fixed vectors, ignoring the training rows.
struct Stub {
    w: Vec<f64>,
    y: Vec<f64>,
}

impl Learner for Stub {
    fn fit_predict(
        &self,
        _x: &DesignMatrix,
        _y: &[f64],
        _train: &[usize],
        predict: &[usize],
        target: Target,
        _cfg: &BoostConfig,
    ) -> Result<(Vec<f64>, usize)> {
        let src = match target {
            Target::Treatment => &self.w,
            Target::Outcome => &self.y,
        };
        Ok((predict.iter().map(|&r| src[r]).collect(), 0))
    }
}

fn draw(n: usize, t: usize, s: Structure, f: FunctionalForm, seed: u64) -> (PanelDataset, SimulationTruth) {
    generate(&DgpConfig::baseline(n, t, s, f, seed)).unwrap()
}

fn x_design(d: &PanelDataset) -> DesignMatrix {
    DesignMatrix::from_columns(d.n_rows(), [("x1", d.confounder(0).to_vec())]).unwrap()
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
    }
    assert!(matches!("lasso".parse::<Method>(), Err(Error::Unknown { .. })));
    let spec = EstimatorSpec::new(Method::DmlDummies).with_split(Strategy::ByUnit);
    assert_eq!(spec.label(), "dml-dummies:by-unit");
    assert_eq!(EstimatorSpec::new(Method::Pols).label(), "pols");
}

#[test]
fn simple_ols_edge_cases() {
    let d = PanelDataset::new(1, 3, vec![1.0, 3.0, 5.0], vec![0.0, 1.0, 2.0], vec![]).unwrap();
    assert!((simple_ols(&d).unwrap() - 2.0).abs() < 1e-12);
    let flat = PanelDataset::new(1, 3, vec![1.0, 3.0, 5.0], vec![2.0; 3], vec![]).unwrap();
    assert!(matches!(simple_ols(&flat), Err(Error::SingularDesign { .. })));
    assert!(pols(&d).is_err());
}

#[test]
fn fixed_effects_reject_time_constant_treatment() {
    let (d, _) = draw(5, 4, Structure::C, FunctionalForm::Linear, 1);
    let w = unit_means(d.treatment(), &d).unwrap();
    let d = PanelDataset::new(5, 4, d.outcome().to_vec(), w, d.confounders().to_vec()).unwrap();
    assert!(matches!(fixed_effects(&d, false), Err(Error::SingularDesign { .. })));
}

#[test]
fn fixed_effects_equal_dummy_variable_ols() {
    for (two_way, seed) in [(false, 3), (true, 4)] {
        let cfg = DgpConfig::baseline(30, 6, Structure::C, FunctionalForm::Linear, seed)
            .with_two_way(two_way);
        let (d, _) = generate(&cfg).unwrap();
        let fe = fixed_effects(&d, two_way).unwrap();
        let mut x = DesignMatrix::new(d.n_rows());
        x.push("w", d.treatment().to_vec()).unwrap();
        x.push("x1", d.confounder(0).to_vec()).unwrap();
        x.extend(unit_dummy_columns(&d)).unwrap();
        if two_way {
            // Drop one period dummy: the unit block already spans the constant.
            let periods = crate::paneldata::period_dummy_columns(&d);
            for j in 1..periods.n_cols() {
                x.push(periods.names()[j].clone(), periods.column(j).to_vec()).unwrap();
            }
        }
        let lsdv = ols_fit(&x, d.outcome()).unwrap().coef("w").unwrap();
        assert!((fe - lsdv).abs() < 1e-8, "two_way={two_way}: {fe} vs {lsdv}");
    }
}

#[test]
fn mundlak_regression_matches_fixed_effects() {
    let (d, _) = draw(40, 5, Structure::C, FunctionalForm::Linear, 6);
    let fe = fixed_effects(&d, false).unwrap();
    let mut x = DesignMatrix::new(d.n_rows());
    x.push_intercept().unwrap();
    x.push("w", d.treatment().to_vec()).unwrap();
    x.push("x1", d.confounder(0).to_vec()).unwrap();
    x.push("xbar1", unit_means(d.confounder(0), &d).unwrap()).unwrap();
    x.push("wbar", unit_means(d.treatment(), &d).unwrap()).unwrap();
    let cre = ols_fit(&x, d.outcome()).unwrap().coef("w").unwrap();
    assert!((fe - cre).abs() < 1e-8, "{fe} vs {cre}");
}

#[test]
fn linear_oracle_is_fixed_effects() {
    let (d, truth) = draw(20, 5, Structure::C, FunctionalForm::Linear, 2);
    assert_eq!(oracle_fe(&d, &truth, false).unwrap(), fixed_effects(&d, false).unwrap());
    let spec = EstimatorSpec::new(Method::OracleFe);
    assert!(matches!(estimate(&d, &spec, None, 0), Err(Error::MissingTruth(_))));
    assert!(estimate(&d, &spec, Some(&truth), 0).is_ok());
}

#[test]
fn late_demeaning_with_zero_predictions_and_one_fold_is_fe_only() {
    let (d, _) = draw(25, 6, Structure::B, FunctionalForm::Ushaped, 8);
    let zero = Stub { w: vec![0.0; d.n_rows()], y: vec![0.0; d.n_rows()] };
    let x = x_design(&d);
    let plan = FoldPlan::single_fold(d.n_units(), d.n_periods());
    for scope in [LateDemeanScope::Global, LateDemeanScope::Fold] {
        let opts = DmlOptions {
            transform: ResidualTransform::DemeanUnit,
            late_demean_scope: scope,
            ..DmlOptions::default()
        };
        let r = dml_core_with_learner(&d, &x, &x, &plan, &opts, 0, &zero).unwrap();
        let fe = fe_only(&d, false).unwrap();
        assert!((r.beta_hat - fe).abs() < 1e-10, "{} vs {fe}", r.beta_hat);
    }
}

#[test]
fn true_nuisance_functions_give_an_unbiased_slope() {
    let (d, truth) = draw(200, 10, Structure::C, FunctionalForm::Ushaped, 12);
    let g = truth.gamma[0];
    let mut mw = Vec::new();
    let mut my = Vec::new();
    for r in 0..d.n_rows() {
        let conf = g * truth.functional_form.eval(d.confounder(0)[r]);
        let het = truth.delta * truth.u_unit[d.unit_of(r)];
        let ew = truth.alpha_treatment + conf + het;
        mw.push(ew);
        my.push(truth.alpha_outcome + truth.beta * ew + conf + het);
    }
    let stub = Stub { w: mw, y: my };
    let x = x_design(&d);
    let plan = make_folds(&d, Strategy::Random, 5, 1, 1).unwrap();
    let r = dml_core_with_learner(&d, &x, &x, &plan, &DmlOptions::default(), 0, &stub).unwrap();
    assert!((r.beta_hat - 1.0).abs() < 0.1, "{}", r.beta_hat);
}

#[test]
fn small_and_degenerate_folds_name_the_fold() {
    let (d, _) = draw(2, 3, Structure::A, FunctionalForm::Linear, 1);
    let x = x_design(&d);
    let zero = Stub { w: vec![0.0; 6], y: vec![0.0; 6] };
    let plan = make_folds(&d, Strategy::Random, 5, 3, 1).unwrap();
    let err = dml_core_with_learner(&d, &x, &x, &plan, &DmlOptions::default(), 0, &zero).unwrap_err();
    assert!(matches!(err, Error::Estimation { fold: 2, .. }), "{err}");

    let (d, _) = draw(10, 4, Structure::A, FunctionalForm::Linear, 1);
    let x = x_design(&d);
    let exact = Stub { w: d.treatment().to_vec(), y: vec![0.0; 40] };
    let plan = make_folds(&d, Strategy::Random, 2, 3, 1).unwrap();
    let err = dml_core_with_learner(&d, &x, &x, &plan, &DmlOptions::default(), 0, &exact).unwrap_err();
    assert!(matches!(err, Error::Estimation { fold: 1, .. }), "{err}");
}

#[test]
fn pdml_is_dml_core_on_a_random_plan() {
    let (d, _) = draw(30, 6, Structure::C, FunctionalForm::Ushaped, 5);
    let spec = EstimatorSpec::new(Method::Pdml);
    let seed = 77;
    let via_spec = estimate(&d, &spec, None, seed).unwrap();
    let plan = fold_plan(&d, &spec, seed).unwrap();
    assert_eq!(plan.strategy(), Strategy::Random);
    let x = x_design(&d);
    let direct = dml_core(&d, &x, &x, &plan, &spec.boost, ResidualTransform::None, learner_seed(seed)).unwrap();
    assert_eq!(via_spec, direct);
    let betas = via_spec.fold_betas.as_ref().unwrap();
    assert_eq!(betas.len(), 5);
    assert_eq!(via_spec.beta_hat, betas.iter().sum::<f64>() / betas.len() as f64);
}

#[test]
fn estimates_are_reproducible() {
    let (d, truth) = draw(20, 6, Structure::C, FunctionalForm::Ushaped, 9);
    for m in Method::ALL {
        let spec = EstimatorSpec::new(m);
        let a = serde_json::to_string(&estimate(&d, &spec, Some(&truth), 4).unwrap()).unwrap();
        let b = serde_json::to_string(&estimate(&d, &spec, Some(&truth), 4).unwrap()).unwrap();
        assert_eq!(a, b, "{m}");
    }
    let timed = estimate_timed(&d, &EstimatorSpec::new(Method::Pols), None, 0).unwrap();
    assert!(timed.wall_time.unwrap() >= 0.0);
}

#[test]
fn pooled_final_stage_reports_no_fold_slopes() {
    let (d, _) = draw(20, 6, Structure::B, FunctionalForm::Linear, 3);
    let mut spec = EstimatorSpec::new(Method::DmlLateFe);
    spec.final_stage = FinalStage::Pooled;
    let r = estimate(&d, &spec, None, 1).unwrap();
    assert!(r.fold_betas.is_none());
    assert!(r.beta_hat.is_finite());
}

#[test]
fn informative_features_lower_the_outcome_model_error() {
    let (d, truth) = draw(60, 10, Structure::C, FunctionalForm::Ushaped, 21);
    let n = d.n_rows();
    let fx: Vec<f64> = d.confounder(0).iter().map(|&x| truth.functional_form.eval(x)).collect();
    let u: Vec<f64> = (0..n).map(|r| truth.u_unit[d.unit_of(r)]).collect();
    let good = DesignMatrix::from_columns(n, [("fx", fx), ("u", u)]).unwrap();
    let blind = DesignMatrix::from_columns(n, [("c", vec![1.0; n])]).unwrap();
    let plan = make_folds(&d, Strategy::Random, 5, 2, 1).unwrap();
    let cfg = BoostConfig::default();
    let run = |x: &DesignMatrix| {
        dml_core(&d, x, x, &plan, &cfg, ResidualTransform::None, derive_seed(1, &[0]))
            .unwrap()
            .diagnostics
            .unwrap()
    };
    assert!(run(&good).rmse_y < run(&blind).rmse_y);
}

#[test]
fn two_way_variants_run() {
    let cfg = DgpConfig::baseline(15, 8, Structure::B, FunctionalForm::Linear, 2).with_two_way(true);
    let (d, truth) = generate(&cfg).unwrap();
    for m in Method::ALL {
        let spec = EstimatorSpec::new(m).with_two_way(true);
        let r = estimate(&d, &spec, Some(&truth), 3).unwrap();
        assert!(r.beta_hat.is_finite(), "{m}");
    }
}

