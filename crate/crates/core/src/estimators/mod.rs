//! Linear baselines, DML variants and oracle benchmarks behind one
//! [`estimate`] entry point.

mod dml;
mod linear;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use dml::{
    dml_core, dml_core_with, dml_cre, dml_dummies, dml_early_fe, dml_late_fe, fold_plan, pdml,
    DmlOptions, FinalStage, LateDemeanScope, ResidualTransform,
};
pub use linear::{fe_only, fixed_effects, oracle_fe, oracle_no_fe, pols, simple_ols};

use crate::boost::BoostConfig;
use crate::crossfit::Strategy;
use crate::dgp::SimulationTruth;
use crate::paneldata::PanelDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "simple-ols")]
    SimpleOls,
    #[serde(rename = "pols")]
    Pols,
    #[serde(rename = "fixed-effects")]
    FixedEffects,
    #[serde(rename = "fe-only")]
    FeOnly,
    #[serde(rename = "pdml")]
    Pdml,
    #[serde(rename = "dml-early-fe")]
    DmlEarlyFe,
    #[serde(rename = "dml-late-fe")]
    DmlLateFe,
    #[serde(rename = "dml-dummies")]
    DmlDummies,
    #[serde(rename = "dml-cre")]
    DmlCre,
    #[serde(rename = "oracle-fe")]
    OracleFe,
    #[serde(rename = "oracle-no-fe")]
    OracleNoFe,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::SimpleOls,
        Method::Pols,
        Method::FixedEffects,
        Method::FeOnly,
        Method::Pdml,
        Method::DmlEarlyFe,
        Method::DmlLateFe,
        Method::DmlDummies,
        Method::DmlCre,
        Method::OracleFe,
        Method::OracleNoFe,
    ];

    /// Methods that use only observed data.
    pub const FEASIBLE: [Method; 8] = [
        Method::SimpleOls,
        Method::Pols,
        Method::FixedEffects,
        Method::Pdml,
        Method::DmlEarlyFe,
        Method::DmlLateFe,
        Method::DmlDummies,
        Method::DmlCre,
    ];

    /// Methods compared across the baseline settings: the feasible ones
    /// plus the fixed-effects oracle.
    pub const BASELINE: [Method; 9] = [
        Method::SimpleOls,
        Method::Pols,
        Method::FixedEffects,
        Method::Pdml,
        Method::DmlEarlyFe,
        Method::DmlLateFe,
        Method::DmlDummies,
        Method::DmlCre,
        Method::OracleFe,
    ];

    pub const DML: [Method; 5] = [
        Method::Pdml,
        Method::DmlEarlyFe,
        Method::DmlLateFe,
        Method::DmlDummies,
        Method::DmlCre,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SimpleOls => "simple-ols",
            Method::Pols => "pols",
            Method::FixedEffects => "fixed-effects",
            Method::FeOnly => "fe-only",
            Method::Pdml => "pdml",
            Method::DmlEarlyFe => "dml-early-fe",
            Method::DmlLateFe => "dml-late-fe",
            Method::DmlDummies => "dml-dummies",
            Method::DmlCre => "dml-cre",
            Method::OracleFe => "oracle-fe",
            Method::OracleNoFe => "oracle-no-fe",
        }
    }

    pub fn is_dml(self) -> bool {
        Method::DML.contains(&self)
    }

    pub fn needs_truth(self) -> bool {
        matches!(self, Method::OracleFe | Method::OracleNoFe)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "method", name: s.to_string() })
    }
}

fn default_width() -> usize {
    1
}

/// Cross-fitting setup of a DML method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub strategy: Strategy,
    /// Fold count; the strategy's default when absent.
    #[serde(default)]
    pub folds: Option<usize>,
    #[serde(default = "default_width")]
    pub neighbor_width: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            strategy: Strategy::Random,
            folds: None,
            neighbor_width: 1,
        }
    }
}

impl SplitSpec {
    pub fn new(strategy: Strategy) -> Self {
        Self { strategy, ..Self::default() }
    }

    pub fn folds(&self) -> usize {
        self.folds.unwrap_or(self.strategy.default_folds())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub method: Method,
    #[serde(default)]
    pub boost: BoostConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub two_way: bool,
    #[serde(default)]
    pub final_stage: FinalStage,
    #[serde(default)]
    pub late_demean_scope: LateDemeanScope,
    /// Overrides the generated label in result tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EstimatorSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            boost: BoostConfig::default(),
            split: SplitSpec::default(),
            two_way: false,
            final_stage: FinalStage::default(),
            late_demean_scope: LateDemeanScope::default(),
            label: None,
        }
    }

    pub fn with_split(mut self, strategy: Strategy) -> Self {
        self.split = SplitSpec::new(strategy);
        self
    }

    pub fn with_folds(mut self, k: usize) -> Self {
        self.split.folds = Some(k);
        self
    }

    pub fn with_two_way(mut self, two_way: bool) -> Self {
        self.two_way = two_way;
        self
    }

    /// Method name, suffixed with the split strategy when it is not the
    /// default random split.
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut l = self.method.name().to_string();
        if self.method.is_dml() {
            if self.split.strategy != Strategy::Random {
                l.push(':');
                l.push_str(self.split.strategy.name());
            }
            if let Some(k) = self.split.folds {
                l.push_str(&format!(":k{k}"));
            }
        }
        l
    }

    fn options(&self) -> DmlOptions {
        DmlOptions {
            boost: self.boost.clone(),
            transform: ResidualTransform::None,
            final_stage: self.final_stage,
            late_demean_scope: self.late_demean_scope,
        }
    }
}

/// Out-of-fold fit of the two nuisance models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rmse_w: f64,
    pub rmse_y: f64,
    pub rounds_w: Vec<usize>,
    pub rounds_y: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub beta_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    /// Only filled by [`estimate_timed`], so plain results stay reproducible.
    #[serde(default, rename = "wall_time_s", skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl EstimateResult {
    pub(crate) fn linear(method: Method, beta_hat: f64) -> Self {
        Self {
            method,
            beta_hat,
            fold_betas: None,
            diagnostics: None,
            wall_time: None,
        }
    }
}

/// Runs `spec` on `dataset`. Oracle methods need `truth`.
pub fn estimate(
    dataset: &PanelDataset,
    spec: &EstimatorSpec,
    truth: Option<&SimulationTruth>,
    seed: u64,
) -> Result<EstimateResult> {
    let need_truth = || truth.ok_or_else(|| Error::MissingTruth(spec.method.name().to_string()));
    let linear = |b: f64| Ok(EstimateResult::linear(spec.method, b));
    match spec.method {
        Method::SimpleOls => linear(simple_ols(dataset)?),
        Method::Pols => linear(pols(dataset)?),
        Method::FixedEffects => linear(fixed_effects(dataset, spec.two_way)?),
        Method::FeOnly => linear(fe_only(dataset, spec.two_way)?),
        Method::OracleFe => linear(oracle_fe(dataset, need_truth()?, spec.two_way)?),
        Method::OracleNoFe => linear(oracle_no_fe(dataset, need_truth()?)?),
        Method::Pdml => pdml(dataset, spec, seed),
        Method::DmlEarlyFe => dml_early_fe(dataset, spec, seed),
        Method::DmlLateFe => dml_late_fe(dataset, spec, seed),
        Method::DmlDummies => dml_dummies(dataset, spec, seed),
        Method::DmlCre => dml_cre(dataset, spec, seed),
    }
}

/// As [`estimate`], recording the elapsed wall time.
pub fn estimate_timed(
    dataset: &PanelDataset,
    spec: &EstimatorSpec,
    truth: Option<&SimulationTruth>,
    seed: u64,
) -> Result<EstimateResult> {
    let start = Instant::now();
    let mut result = estimate(dataset, spec, truth, seed)?;
    result.wall_time = Some(start.elapsed().as_secs_f64());
    Ok(result)
}

#[cfg(test)]
mod tests;
