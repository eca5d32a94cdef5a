use serde::{Deserialize, Serialize};

use crate::dgp::{generate, DgpConfig, FunctionalForm, Structure};
use crate::estimators::{estimate_timed, EstimatorSpec, Method};
use crate::rng::derive_seed;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n_units: usize,
    pub n_periods: usize,
    pub method: Method,
    pub runs: usize,
    pub mean_seconds: f64,
}

/// Mean wall time of each method on each panel shape over `runs` fresh
/// structure-C, u-shaped draws.
pub fn timing_benchmark(
    shapes: &[(usize, usize)],
    methods: &[Method],
    runs: usize,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let runs = runs.max(1);
    let mut out = Vec::new();
    for &(n, t) in shapes {
        let mut total = vec![0.0; methods.len()];
        for run in 0..runs {
            let data_seed = derive_seed(seed, &[n as u64, t as u64, run as u64]);
            let cfg = DgpConfig::baseline(n, t, Structure::C, FunctionalForm::Ushaped, data_seed);
            let (data, truth) = generate(&cfg)?;
            for (i, &m) in methods.iter().enumerate() {
                let r = estimate_timed(&data, &EstimatorSpec::new(m), Some(&truth), data_seed)?;
                total[i] += r.wall_time.unwrap_or(0.0);
            }
        }
        for (i, &m) in methods.iter().enumerate() {
            out.push(TimingRow {
                n_units: n,
                n_periods: t,
                method: m,
                runs,
                mean_seconds: total[i] / runs as f64,
            });
        }
    }
    Ok(out)
}

/// The method with the largest mean time among `among` at shape (n, t).
pub fn slowest(rows: &[TimingRow], n: usize, t: usize, among: &[Method]) -> Option<Method> {
    rows.iter()
        .filter(|r| r.n_units == n && r.n_periods == t && among.contains(&r.method))
        .max_by(|a, b| a.mean_seconds.total_cmp(&b.mean_seconds))
        .map(|r| r.method)
}
