//! Seeded data-generating processes for the simulation studies.
//!
//! All designs share the partially linear panel model
//!
//! ```text
//! X_jit = a0_j + d*H_it*[C]  + e_jit
//! W_it  = a1 + sum_j (g_j/J) f(X_jit) + d*H_it*[B or C] + eta_it
//! Y_it  = a2 + b*W_it + sum_j (g_j/J) f(X_jit) + d*H_it*[B or C] + mu_it
//! ```
//!
//! where `H_it = U_i` (one-way) or `U_i + U_t` (two-way), `f` is the shared
//! functional form, and `b = 1`. The same drawn `g_j` and `d` feed both the
//! treatment and the outcome equation. With `J = 1` and independent noise
//! this is the baseline design.
//!
//! Outcome noise `mu` follows a per-unit AR(1) path started from its
//! stationary distribution; `rho = 0` gives i.i.d. standard normal noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::paneldata::PanelDataset;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// How the unobserved heterogeneity enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Structure {
    /// No unobserved heterogeneity.
    #[serde(rename = "A", alias = "no_u", alias = "a")]
    A,
    /// Heterogeneity affects treatment and outcome only.
    #[serde(rename = "B", alias = "u_not_x", alias = "b")]
    B,
    /// Heterogeneity additionally shifts the observed confounders.
    #[serde(rename = "C", alias = "u_to_x", alias = "c")]
    C,
}

impl Structure {
    fn shifts_confounders(self) -> bool {
        self == Structure::C
    }

    fn shifts_treatment_and_outcome(self) -> bool {
        self != Structure::A
    }
}

/// Shape of the observed confounding, shared by treatment and outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalForm {
    Linear,
    #[serde(alias = "u_shaped", alias = "quadratic")]
    Ushaped,
}

impl FunctionalForm {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            FunctionalForm::Linear => x,
            FunctionalForm::Ushaped => x * x,
        }
    }
}

pub fn eval_form(form: FunctionalForm, x: f64) -> f64 {
    form.eval(x)
}

fn default_one() -> usize {
    1
}

/// Parameters of one simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpConfig {
    pub n_units: usize,
    pub n_periods: usize,
    #[serde(default = "default_one")]
    pub n_confounders: usize,
    pub structure: Structure,
    pub functional_form: FunctionalForm,
    /// AR(1) coefficient of the outcome noise.
    #[serde(default)]
    pub rho: f64,
    /// Adds period-level heterogeneity U_t.
    #[serde(default)]
    pub two_way: bool,
    /// Draw confounder noise from N(0, A'A). Defaults to `n_confounders > 1`.
    #[serde(default)]
    pub correlated_confounders: Option<bool>,
    #[serde(default)]
    pub seed: u64,
}

impl DgpConfig {
    pub fn baseline(
        n_units: usize,
        n_periods: usize,
        structure: Structure,
        functional_form: FunctionalForm,
        seed: u64,
    ) -> Self {
        Self {
            n_units,
            n_periods,
            n_confounders: 1,
            structure,
            functional_form,
            rho: 0.0,
            two_way: false,
            correlated_confounders: None,
            seed,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_confounders(mut self, j: usize) -> Self {
        self.n_confounders = j;
        self
    }

    pub fn with_two_way(mut self, two_way: bool) -> Self {
        self.two_way = two_way;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn uses_correlated_confounders(&self) -> bool {
        self.correlated_confounders.unwrap_or(self.n_confounders > 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units < 2 {
            return Err(Error::Config(format!("n_units must be >= 2, got {}", self.n_units)));
        }
        if self.n_periods < 2 {
            return Err(Error::Config(format!(
                "n_periods must be >= 2, got {}",
                self.n_periods
            )));
        }
        if self.n_confounders < 1 {
            return Err(Error::Config("n_confounders must be >= 1".into()));
        }
        check_rho(self.rho)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Config(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

/// The generating parameters, hidden from feasible estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub beta: f64,
    pub gamma: Vec<f64>,
    pub delta: f64,
    /// Confounder intercepts a0_j.
    pub alpha_confounders: Vec<f64>,
    pub alpha_treatment: f64,
    pub alpha_outcome: f64,
    pub u_unit: Vec<f64>,
    pub u_time: Option<Vec<f64>>,
    pub functional_form: FunctionalForm,
    pub structure: Structure,
    /// Confounder noise covariance A'A, when correlated noise was used.
    pub covariance: Option<Vec<Vec<f64>>>,
}

/// Degenerate-limit switches for tests. Not reachable from the CLI.
#[derive(Debug, Clone, Default)]
pub(crate) struct Hooks {
    pub zero_confounder_noise: bool,
    pub zero_treatment_noise: bool,
    pub zero_outcome_noise: bool,
    /// Forces gamma = 0 and delta = 0.
    pub zero_confounding: bool,
    pub zero_period_effects: bool,
    /// Draws U_i from this seed instead of the dataset seed.
    pub unit_effect_seed: Option<u64>,
    /// Replaces the covariance factor A by the identity.
    pub identity_covariance: bool,
}

/// Stationary AR(1) path `mu_t = rho*mu_{t-1} + e_t` with standard normal
/// innovations and `mu_1 ~ N(0, 1/(1-rho^2))`.
pub fn ar1_path<R: Rng + ?Sized>(rho: f64, len: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let mut path = Vec::with_capacity(len);
    let mut prev = 0.0;
    for t in 0..len {
        let e: f64 = rng.sample(StandardNormal);
        let cur = if t == 0 {
            e / (1.0 - rho * rho).sqrt()
        } else {
            rho * prev + e
        };
        path.push(cur);
        prev = cur;
    }
    Ok(path)
}

/// Baseline design: a single confounder with independent noise.
pub fn gen_baseline(cfg: &DgpConfig) -> Result<(PanelDataset, SimulationTruth)> {
    if cfg.n_confounders != 1 {
        return Err(Error::Config(format!(
            "the baseline design has one confounder, got {}",
            cfg.n_confounders
        )));
    }
    if cfg.two_way {
        return Err(Error::Config("the baseline design is one-way; use gen_twoway".into()));
    }
    generate_with(cfg, false, &Hooks::default())
}

/// Several confounders with noise drawn from N(0, A'A) and coefficients
/// scaled by 1/J.
pub fn gen_multi_confounder(cfg: &DgpConfig) -> Result<(PanelDataset, SimulationTruth)> {
    generate_with(cfg, true, &Hooks::default())
}

/// Unit and period heterogeneity. Uses correlated confounder noise when the
/// config asks for it (by default when `J > 1`).
pub fn gen_twoway(cfg: &DgpConfig) -> Result<(PanelDataset, SimulationTruth)> {
    if !cfg.two_way {
        return Err(Error::Config("gen_twoway needs two_way = true".into()));
    }
    generate_with(cfg, cfg.uses_correlated_confounders(), &Hooks::default())
}

/// Dispatches on the config to the matching generator.
pub fn generate(cfg: &DgpConfig) -> Result<(PanelDataset, SimulationTruth)> {
    generate_with(cfg, cfg.uses_correlated_confounders(), &Hooks::default())
}

pub(crate) fn generate_with(
    cfg: &DgpConfig,
    correlated: bool,
    hooks: &Hooks,
) -> Result<(PanelDataset, SimulationTruth)> {
    cfg.validate()?;
    let n = cfg.n_units;
    let t = cfg.n_periods;
    let j_count = cfg.n_confounders;
    let rows = n * t;
    let form = cfg.functional_form;
    let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let mut coef = rng::stream(cfg.seed, Stream::Coefficients);
    let alpha_confounders: Vec<f64> = (0..j_count).map(|_| normal(&mut coef)).collect();
    let alpha_treatment = normal(&mut coef);
    let alpha_outcome = normal(&mut coef);
    let mut gamma: Vec<f64> = (0..j_count).map(|_| normal(&mut coef)).collect();
    let mut delta = normal(&mut coef);
    if hooks.zero_confounding {
        gamma.iter_mut().for_each(|g| *g = 0.0);
        delta = 0.0;
    }
    let beta = 1.0;

    let mut u_rng = rng::stream(hooks.unit_effect_seed.unwrap_or(cfg.seed), Stream::UnitEffects);
    let u_unit: Vec<f64> = (0..n).map(|_| normal(&mut u_rng)).collect();
    let u_time = cfg.two_way.then(|| {
        let mut r = rng::stream(cfg.seed, Stream::PeriodEffects);
        (0..t)
            .map(|_| if hooks.zero_period_effects { 0.0 } else { normal(&mut r) })
            .collect::<Vec<f64>>()
    });

    let factor: Option<Vec<Vec<f64>>> = correlated.then(|| {
        let mut r = rng::stream(cfg.seed, Stream::Covariance);
        (0..j_count)
            .map(|a| {
                (0..j_count)
                    .map(|b| {
                        let v = normal(&mut r);
                        if hooks.identity_covariance {
                            if a == b { 1.0 } else { 0.0 }
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect()
    });
    let covariance = factor.as_ref().map(|a| gram(a));

    let heterogeneity = |row: usize| -> f64 {
        let mut h = u_unit[row / t];
        if let Some(ut) = &u_time {
            h += ut[row % t];
        }
        h
    };

    // Confounders.
    let mut eps_rng = rng::stream(cfg.seed, Stream::ConfounderNoise);
    let mut x = vec![vec![0.0; rows]; j_count];
    let mut z = vec![0.0; j_count];
    for row in 0..rows {
        for zk in z.iter_mut() {
            *zk = if hooks.zero_confounder_noise { 0.0 } else { normal(&mut eps_rng) };
        }
        let shift = if cfg.structure.shifts_confounders() {
            delta * heterogeneity(row)
        } else {
            0.0
        };
        for (j, col) in x.iter_mut().enumerate() {
            let eps = match &factor {
                // eps = A' z has covariance A'A.
                Some(a) => (0..j_count).map(|k| a[k][j] * z[k]).sum(),
                None => z[j],
            };
            col[row] = alpha_confounders[j] + shift + eps;
        }
    }

    let scale = 1.0 / j_count as f64;
    let confounding: Vec<f64> = (0..rows)
        .map(|row| {
            gamma
                .iter()
                .zip(&x)
                .map(|(g, col)| g * scale * form.eval(col[row]))
                .sum()
        })
        .collect();

    // Treatment.
    let mut eta_rng = rng::stream(cfg.seed, Stream::TreatmentNoise);
    let hits_wy = cfg.structure.shifts_treatment_and_outcome();
    let w: Vec<f64> = (0..rows)
        .map(|row| {
            let eta = if hooks.zero_treatment_noise { 0.0 } else { normal(&mut eta_rng) };
            let shift = if hits_wy { delta * heterogeneity(row) } else { 0.0 };
            alpha_treatment + confounding[row] + shift + eta
        })
        .collect();

    // Outcome.
    let mut mu_rng = rng::stream(cfg.seed, Stream::OutcomeNoise);
    let mut y = Vec::with_capacity(rows);
    for unit in 0..n {
        let mu = ar1_path(cfg.rho, t, &mut mu_rng)?;
        for (period, m) in mu.into_iter().enumerate() {
            let row = unit * t + period;
            let noise = if hooks.zero_outcome_noise { 0.0 } else { m };
            let shift = if hits_wy { delta * heterogeneity(row) } else { 0.0 };
            y.push(alpha_outcome + beta * w[row] + confounding[row] + shift + noise);
        }
    }

    let dataset = PanelDataset::new(n, t, y, w, x)?;
    let truth = SimulationTruth {
        beta,
        gamma,
        delta,
        alpha_confounders,
        alpha_treatment,
        alpha_outcome,
        u_unit,
        u_time,
        functional_form: form,
        structure: cfg.structure,
        covariance,
    };
    Ok((dataset, truth))
}

fn gram(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let j = a.len();
    (0..j)
        .map(|p| {
            (0..j)
                .map(|q| (0..j).map(|k| a[k][p] * a[k][q]).sum())
                .collect()
        })
        .collect()
}
