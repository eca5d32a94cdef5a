use super::{DesignMatrix, PanelDataset};
use crate::Result;

/// Per-unit time means, broadcast back to every row of the unit.
pub fn unit_means(v: &[f64], dataset: &PanelDataset) -> Result<Vec<f64>> {
    dataset.check_len(v)?;
    let t = dataset.n_periods();
    let mut out = Vec::with_capacity(v.len());
    for unit in v.chunks_exact(t) {
        let mean = unit.iter().sum::<f64>() / t as f64;
        out.extend(std::iter::repeat_n(mean, t));
    }
    Ok(out)
}

/// Per-period cross-unit means, broadcast back to every row of the period.
pub fn period_means(v: &[f64], dataset: &PanelDataset) -> Result<Vec<f64>> {
    dataset.check_len(v)?;
    let means = period_mean_vector(v, dataset);
    let t = dataset.n_periods();
    Ok((0..v.len()).map(|row| means[row % t]).collect())
}

fn period_mean_vector(v: &[f64], dataset: &PanelDataset) -> Vec<f64> {
    let t = dataset.n_periods();
    let mut sums = vec![0.0; t];
    for unit in v.chunks_exact(t) {
        for (s, x) in sums.iter_mut().zip(unit) {
            *s += x;
        }
    }
    let n = dataset.n_units() as f64;
    sums.iter().map(|s| s / n).collect()
}

/// One-way within transform: subtracts each unit's time mean.
pub fn within_demean_unit(v: &[f64], dataset: &PanelDataset) -> Result<Vec<f64>> {
    let means = unit_means(v, dataset)?;
    Ok(v.iter().zip(&means).map(|(x, m)| x - m).collect())
}

/// Two-way within transform `v_it - mean_i - mean_t + grand mean`.
pub fn within_demean_twoway(v: &[f64], dataset: &PanelDataset) -> Result<Vec<f64>> {
    dataset.check_len(v)?;
    let t = dataset.n_periods();
    let period = period_mean_vector(v, dataset);
    let grand = period.iter().sum::<f64>() / t as f64;
    let mut out = Vec::with_capacity(v.len());
    for unit in v.chunks_exact(t) {
        let mean = unit.iter().sum::<f64>() / t as f64;
        for (x, pm) in unit.iter().zip(&period) {
            out.push(x - mean - pm + grand);
        }
    }
    Ok(out)
}

/// One-hot unit indicators `z1..zN`.
pub fn unit_dummy_columns(dataset: &PanelDataset) -> DesignMatrix {
    let rows = dataset.n_rows();
    let mut design = DesignMatrix::new(rows);
    for i in 0..dataset.n_units() {
        let col = (0..rows)
            .map(|r| if dataset.unit_of(r) == i { 1.0 } else { 0.0 })
            .collect();
        design
            .push(format!("z{}", i + 1), col)
            .expect("dummy names are unique and finite");
    }
    design
}

/// One-hot period indicators `p1..pT`.
pub fn period_dummy_columns(dataset: &PanelDataset) -> DesignMatrix {
    let rows = dataset.n_rows();
    let mut design = DesignMatrix::new(rows);
    for t in 0..dataset.n_periods() {
        let col = (0..rows)
            .map(|r| if dataset.period_of(r) == t { 1.0 } else { 0.0 })
            .collect();
        design
            .push(format!("p{}", t + 1), col)
            .expect("dummy names are unique and finite");
    }
    design
}
