use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgp::{DgpConfig, FunctionalForm, Structure};
use crate::estimators::{EstimatorSpec, Method};
use crate::{Error, Result};

/// Position of a cell along a swept parameter, used by line plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
}

/// One grid cell: a data-generating process and the estimators run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub id: String,
    /// The `seed` field is ignored; replication seeds are derived.
    pub dgp: DgpConfig,
    /// Shorthand for estimators with default settings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepPoint>,
}

impl CellConfig {
    pub fn new(id: impl Into<String>, dgp: DgpConfig) -> Self {
        Self {
            id: id.into(),
            dgp,
            methods: Vec::new(),
            estimators: Vec::new(),
            sweep: None,
        }
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods.extend_from_slice(methods);
        self
    }

    pub fn with_estimator(mut self, spec: EstimatorSpec) -> Self {
        self.estimators.push(spec);
        self
    }

    pub fn with_sweep(mut self, parameter: &str, value: f64) -> Self {
        self.sweep = Some(SweepPoint { parameter: parameter.into(), value });
        self
    }

    /// Every estimator of the cell; two-way cells use two-way estimators.
    pub fn specs(&self) -> Vec<EstimatorSpec> {
        self.methods
            .iter()
            .map(|&m| EstimatorSpec::new(m))
            .chain(self.estimators.iter().cloned())
            .map(|mut s| {
                s.two_way |= self.dgp.two_way;
                s
            })
            .collect()
    }
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub n_reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Record per-estimate wall time. Off by default so outputs are
    /// byte-reproducible.
    #[serde(default)]
    pub record_time: bool,
    #[serde(rename = "cell")]
    pub cells: Vec<CellConfig>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, n_reps: usize, base_seed: u64) -> Self {
        Self {
            name: name.into(),
            n_reps,
            base_seed,
            workers: 1,
            output_dir: None,
            record_time: false,
            cells: Vec::new(),
        }
    }

    pub fn with_cell(mut self, cell: CellConfig) -> Self {
        self.cells.push(cell);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 1 {
            return Err(Error::Config("n_reps must be >= 1".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("experiment grid is empty".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        let mut ids = HashSet::new();
        for cell in &self.cells {
            if !ids.insert(cell.id.as_str()) {
                return Err(Error::Config(format!("duplicate cell id `{}`", cell.id)));
            }
            cell.dgp.validate()?;
            let specs = cell.specs();
            if specs.is_empty() {
                return Err(Error::Config(format!("cell `{}` has no estimators", cell.id)));
            }
            let mut labels = HashSet::new();
            for s in &specs {
                s.boost.validate()?;
                if !labels.insert(s.label()) {
                    return Err(Error::Config(format!(
                        "cell `{}` lists estimator `{}` twice; give one a label",
                        cell.id,
                        s.label()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn baseline_grid(name: &str, n_units: usize, n_reps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(name, n_reps, 20240601);
    for structure in [Structure::A, Structure::B, Structure::C] {
        for form in [FunctionalForm::Linear, FunctionalForm::Ushaped] {
            let tag = match form {
                FunctionalForm::Linear => "linear",
                FunctionalForm::Ushaped => "ushaped",
            };
            let id = format!("{structure:?}-{tag}");
            let dgp = DgpConfig::baseline(n_units, 10, structure, form, 0);
            cfg.cells.push(CellConfig::new(id, dgp).with_methods(&Method::BASELINE));
        }
    }
    cfg
}

fn confounder_grid(name: &str, n_units: usize, n_reps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(name, n_reps, 20240602);
    for j in [1usize, 2, 5, 10] {
        let dgp = DgpConfig::baseline(n_units, 10, Structure::C, FunctionalForm::Ushaped, 0)
            .with_confounders(j);
        let cell = CellConfig::new(format!("J{j}"), dgp)
            .with_methods(&[
                Method::Pols,
                Method::FixedEffects,
                Method::FeOnly,
                Method::Pdml,
                Method::DmlLateFe,
                Method::DmlCre,
                Method::OracleFe,
                Method::OracleNoFe,
            ])
            .with_sweep("n_confounders", j as f64);
        cfg.cells.push(cell);
    }
    cfg
}

fn splitting_grid(name: &str, n_reps: usize) -> ExperimentConfig {
    use crate::crossfit::Strategy;
    let mut cfg = ExperimentConfig::new(name, n_reps, 20240603);
    let dgp = DgpConfig::baseline(100, 50, Structure::C, FunctionalForm::Ushaped, 0).with_rho(0.9);
    let mut cell = CellConfig::new("C-ushaped-rho0.9", dgp);
    for m in [Method::Pdml, Method::DmlDummies, Method::DmlCre] {
        for s in Strategy::ALL {
            cell = cell.with_estimator(EstimatorSpec::new(m).with_split(s));
        }
    }
    cfg.cells.push(cell);
    cfg
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 5] = [
    "baseline-small",
    "baseline-full",
    "confounders-small",
    "splitting-small",
    "smoke",
];

/// Built-in experiment grids.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "baseline-small" => baseline_grid(name, 200, 30),
        "baseline-full" => baseline_grid(name, 500, 100),
        "confounders-small" => confounder_grid(name, 200, 20),
        "splitting-small" => splitting_grid(name, 30),
        "smoke" => {
            let dgp = DgpConfig::baseline(20, 5, Structure::C, FunctionalForm::Ushaped, 0);
            ExperimentConfig::new(name, 2, 7).with_cell(
                CellConfig::new("C-ushaped", dgp).with_methods(&[
                    Method::SimpleOls,
                    Method::FixedEffects,
                    Method::DmlCre,
                    Method::OracleFe,
                ]),
            )
        }
        other => {
            return Err(Error::Unknown { kind: "preset", name: other.to_string() });
        }
    })
}
