use serde::{Deserialize, Serialize};

use super::ExperimentResult;

/// Per-(setting, method) summary of the successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: String,
    pub method: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub mean_bias: f64,
    pub mae: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Most extreme estimates within 1.5 IQR of the quartiles.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub min: f64,
    pub max: f64,
    pub sweep_value: Option<f64>,
}

/// Linear-interpolation quantile of sorted data (the `(n-1)p` rule).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(result: &ExperimentResult) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for cell in &result.cells {
        for method in &cell.methods {
            let mut est = Vec::new();
            let mut beta = Vec::new();
            let mut failed = 0;
            for row in result.rows_for(&cell.id, method) {
                match row.beta_hat {
                    Some(b) => {
                        est.push(b);
                        beta.push(row.beta);
                    }
                    None => failed += 1,
                }
            }
            let n = est.len();
            let nan = f64::NAN;
            let mut row = SummaryRow {
                setting: cell.id.clone(),
                method: method.clone(),
                n_ok: n,
                n_failed: failed,
                mean: nan,
                mean_bias: nan,
                mae: nan,
                median: nan,
                q1: nan,
                q3: nan,
                whisker_low: nan,
                whisker_high: nan,
                min: nan,
                max: nan,
                sweep_value: cell.sweep.as_ref().map(|s| s.value),
            };
            if n > 0 {
                let nf = n as f64;
                row.mean = est.iter().sum::<f64>() / nf;
                row.mean_bias = est.iter().zip(&beta).map(|(e, b)| e - b).sum::<f64>() / nf;
                row.mae = est.iter().zip(&beta).map(|(e, b)| (e - b).abs()).sum::<f64>() / nf;
                let mut sorted = est.clone();
                sorted.sort_by(f64::total_cmp);
                row.median = quantile(&sorted, 0.5);
                row.q1 = quantile(&sorted, 0.25);
                row.q3 = quantile(&sorted, 0.75);
                let iqr = row.q3 - row.q1;
                let (lo_fence, hi_fence) = (row.q1 - 1.5 * iqr, row.q3 + 1.5 * iqr);
                row.whisker_low = *sorted.iter().find(|&&v| v >= lo_fence).unwrap_or(&sorted[0]);
                row.whisker_high = *sorted.iter().rev().find(|&&v| v <= hi_fence).unwrap_or(&sorted[n - 1]);
                row.min = sorted[0];
                row.max = sorted[n - 1];
            }
            out.push(row);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{CellInfo, ResultRow};
    use proptest::prelude::*;

    fn result_of(estimates: &[Option<f64>]) -> ExperimentResult {
        ExperimentResult {
            name: "t".into(),
            n_reps: estimates.len(),
            cells: vec![CellInfo { id: "c".into(), methods: vec!["m".into()], sweep: None }],
            rows: estimates
                .iter()
                .enumerate()
                .map(|(i, &b)| ResultRow {
                    setting: "c".into(),
                    method: "m".into(),
                    rep: i + 1,
                    beta_hat: b,
                    beta: 1.0,
                    error: b.is_none().then(|| "failed".to_string()),
                    wall_time_s: None,
                })
                .collect(),
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_estimate() {
        let s = &summarize(&result_of(&[Some(1.2)]))[0];
        assert!(close(s.mae, 0.2) && close(s.mean_bias, 0.2));
        assert_eq!(s.n_ok, 1);
    }

    #[test]
    fn symmetric_pair_has_no_bias() {
        let s = &summarize(&result_of(&[Some(0.8), Some(1.2)]))[0];
        assert!(close(s.mean_bias, 0.0) && close(s.mae, 0.2));
    }

    #[test]
    fn quartiles_and_whiskers_by_hand() {
        let s = &summarize(&result_of(&[Some(5.0), Some(1.0), Some(4.0), Some(2.0), Some(3.0)]))[0];
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 5.0));

        // Fences at 2 - 7.5 and 7 + 7.5: 100 is an outlier.
        let s = &summarize(&result_of(&[Some(1.0), Some(2.0), Some(4.0), Some(7.0), Some(100.0)]))[0];
        assert_eq!((s.q1, s.q3), (2.0, 7.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 7.0));
        assert_eq!(s.max, 100.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
    }

    #[test]
    fn failures_are_counted_not_scored() {
        let s = &summarize(&result_of(&[Some(1.1), None, Some(0.9)]))[0];
        assert_eq!((s.n_ok, s.n_failed), (2, 1));
        let empty = &summarize(&result_of(&[None]))[0];
        assert!(empty.mae.is_nan());
    }

    proptest! {
        #[test]
        fn summary_matches_a_streaming_recomputation(values in prop::collection::vec(-5.0f64..5.0, 1..60)) {
            let s = &summarize(&result_of(&values.iter().map(|&v| Some(v)).collect::<Vec<_>>()))[0];
            // Welford pass in reverse order.
            let (mut mean, mut abs_mean) = (0.0, 0.0);
            for (i, v) in values.iter().rev().enumerate() {
                let k = (i + 1) as f64;
                mean += (v - mean) / k;
                abs_mean += ((v - 1.0).abs() - abs_mean) / k;
            }
            prop_assert!((s.mean - mean).abs() < 1e-12);
            prop_assert!((s.mean_bias - (mean - 1.0)).abs() < 1e-12);
            prop_assert!((s.mae - abs_mean).abs() < 1e-12);
            let below = values.iter().filter(|&&v| v < s.median).count();
            let above = values.iter().filter(|&&v| v > s.median).count();
            prop_assert!(below <= values.len() / 2 && above <= values.len() / 2);
            prop_assert!(s.whisker_low >= s.min && s.whisker_high <= s.max);
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
        }
    }
}
