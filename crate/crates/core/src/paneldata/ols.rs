use super::DesignMatrix;
use crate::{Error, Result};

/// Pivots whose magnitude falls below this multiple of the largest pivot are
/// treated as zero, and the design is reported as singular.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares fit of `y` on the columns of a [`DesignMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    names: Vec<String>,
    coefficients: Vec<f64>,
    residuals: Vec<f64>,
    used_rows: usize,
}

impl OlsFit {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Coefficient of the named column.
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.coefficients[j])
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn used_rows(&self) -> usize {
        self.used_rows
    }
}

/// Ordinary least squares via Householder QR with column pivoting on the
/// largest remaining column norm.
///
/// A design whose pivoted R has a diagonal entry below
/// [`RANK_TOLERANCE`] times the leading one is rejected with
/// [`Error::SingularDesign`] naming the columns left after the numerical rank
/// was exhausted.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<OlsFit> {
    let m = x.n_rows();
    let n = x.n_cols();
    if y.len() != m {
        return Err(Error::Dimension(format!(
            "design has {m} rows but the response has {}",
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::Dimension("design has no columns".into()));
    }
    if m < n {
        return Err(Error::Dimension(format!(
            "design has {m} rows but {n} columns; need rows >= columns"
        )));
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("response has a non-finite entry at row {pos}")));
    }

    let mut a: Vec<Vec<f64>> = x.columns().to_vec();
    let mut qtb = y.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag = vec![0.0; n];
    let mut lead = 0.0_f64;

    for k in 0..n {
        // Pick the remaining column with the largest norm over rows k..m.
        let mut best = k;
        let mut best_norm = -1.0;
        for (j, col) in a.iter().enumerate().skip(k) {
            let s = norm(&col[k..]);
            if s > best_norm {
                best_norm = s;
                best = j;
            }
        }
        a.swap(k, best);
        perm.swap(k, best);

        if k == 0 {
            lead = best_norm;
        }
        if best_norm <= RANK_TOLERANCE * lead || best_norm == 0.0 {
            let mut columns: Vec<String> = perm[k..]
                .iter()
                .map(|&j| x.names()[j].clone())
                .collect();
            columns.sort();
            return Err(Error::SingularDesign { columns });
        }

        // Householder reflection zeroing a[k][k+1..].
        let alpha = if a[k][k] >= 0.0 { -best_norm } else { best_norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|e| e * e).sum();
        diag[k] = alpha;
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k + 1) {
                reflect(&v, vnorm2, &mut col[k..]);
            }
            reflect(&v, vnorm2, &mut qtb[k..]);
        }
        a[k][k] = alpha;
        for e in a[k][k + 1..].iter_mut() {
            *e = 0.0;
        }
    }

    // Back substitution on R z = Q'b.
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = qtb[k];
        for (j, zj) in z.iter().enumerate().skip(k + 1) {
            s -= a[j][k] * zj;
        }
        z[k] = s / diag[k];
    }
    let mut coefficients = vec![0.0; n];
    for (k, &j) in perm.iter().enumerate() {
        coefficients[j] = z[k];
    }

    let mut residuals = y.to_vec();
    for (col, &b) in x.columns().iter().zip(&coefficients) {
        for (r, &v) in residuals.iter_mut().zip(col) {
            *r -= b * v;
        }
    }

    Ok(OlsFit {
        names: x.names().to_vec(),
        coefficients,
        residuals,
        used_rows: m,
    })
}

fn norm(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large columns.
    let scale = v.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|e| (e / scale).powi(2)).sum::<f64>().sqrt()
}

#[inline]
fn reflect(v: &[f64], vnorm2: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= f * vi;
    }
}
