//! Monte Carlo experiment runner, summaries and report files.
//!
//! Replication `r` of cell `c` draws its dataset from a seed derived from
//! the base seed, the cell id and `r`, and every estimator gets a seed
//! derived from that and its label. Results are sorted by cell, estimator
//! and replication before they are written, so output files do not depend
//! on the number of workers.

mod config;
mod report;
mod summary;
mod timing;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{preset, CellConfig, ExperimentConfig, SweepPoint, PRESETS};
pub use report::{emit_report, write_results_csv, write_summary_csv, ReportKind};
pub use summary::{quantile, summarize, SummaryRow};
pub use timing::{slowest, timing_benchmark, TimingRow};

use crate::dgp::generate;
use crate::estimators::{estimate, estimate_timed};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// One replication of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub setting: String,
    pub method: String,
    /// 1-based replication number.
    pub rep: usize,
    pub beta_hat: Option<f64>,
    /// True effect the estimate is scored against.
    pub beta: f64,
    pub error: Option<String>,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub id: String,
    pub methods: Vec<String>,
    pub sweep: Option<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub n_reps: usize,
    pub cells: Vec<CellInfo>,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn rows_for<'a>(&'a self, setting: &'a str, method: &'a str) -> impl Iterator<Item = &'a ResultRow> {
        self.rows
            .iter()
            .filter(move |r| r.setting == setting && r.method == method)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes `experiment.json`, `results.csv` and `summary.csv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(self)? + "\n")?;
        emit_report(self, ReportKind::Csv, dir)?;
        Ok(())
    }
}

/// File holding the full serialized result, read back by `report`.
pub const MANIFEST: &str = "experiment.json";

fn label_key(label: &str) -> u64 {
    // FNV-1a, stable across platforms and releases.
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn dataset_seed(base_seed: u64, cell_id: &str, rep: usize) -> u64 {
    derive_seed(base_seed, &[label_key(cell_id), rep as u64])
}

pub fn estimator_seed(data_seed: u64, label: &str) -> u64 {
    derive_seed(data_seed, &[label_key(label)])
}

/// Runs every cell, estimator and replication. Failed estimates become
/// error rows; only configuration and thread-pool problems abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let specs: Vec<_> = cfg.cells.iter().map(CellConfig::specs).collect();
    let tasks: Vec<(usize, usize)> = (0..cfg.cells.len())
        .flat_map(|c| (1..=cfg.n_reps).map(move |r| (c, r)))
        .collect();

    let run_task = |&(c, rep): &(usize, usize)| -> Vec<(usize, usize, ResultRow)> {
        let cell = &cfg.cells[c];
        let seed = dataset_seed(cfg.base_seed, &cell.id, rep);
        let dgp = cell.dgp.clone().with_seed(seed);
        let data = generate(&dgp);
        specs[c]
            .iter()
            .enumerate()
            .map(|(s, spec)| {
                let label = spec.label();
                let mut row = ResultRow {
                    setting: cell.id.clone(),
                    method: label.clone(),
                    rep,
                    beta_hat: None,
                    beta: 1.0,
                    error: None,
                    wall_time_s: None,
                };
                match &data {
                    Err(e) => row.error = Some(format!("data generation: {e}")),
                    Ok((d, truth)) => {
                        row.beta = truth.beta;
                        let est_seed = estimator_seed(seed, &label);
                        let out = if cfg.record_time {
                            estimate_timed(d, spec, Some(truth), est_seed)
                        } else {
                            estimate(d, spec, Some(truth), est_seed)
                        };
                        match out {
                            Ok(r) => {
                                row.beta_hat = Some(r.beta_hat);
                                row.wall_time_s = r.wall_time;
                            }
                            Err(e) => row.error = Some(e.to_string()),
                        }
                    }
                }
                (c, s, row)
            })
            .collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let mut rows: Vec<(usize, usize, ResultRow)> =
        pool.install(|| tasks.par_iter().flat_map_iter(run_task).collect());
    rows.sort_by(|a, b| (a.0, a.1, a.2.rep).cmp(&(b.0, b.1, b.2.rep)));

    let cells = cfg
        .cells
        .iter()
        .zip(&specs)
        .map(|(cell, s)| CellInfo {
            id: cell.id.clone(),
            methods: s.iter().map(|x| x.label()).collect(),
            sweep: cell.sweep.clone(),
        })
        .collect();
    Ok(ExperimentResult {
        name: cfg.name.clone(),
        n_reps: cfg.n_reps,
        cells,
        rows: rows.into_iter().map(|(_, _, r)| r).collect(),
    })
}

