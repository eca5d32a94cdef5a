use crate::paneldata::DesignMatrix;

pub(crate) const NONE: u32 = u32::MAX;

/// Columns with at most this many distinct values use per-node histograms;
/// wider columns are scanned in presorted order.
const HIST_MAX_BINS: usize = 64;

/// Feature matrix indexed by per-column ranks of the distinct values.
///
/// Split search only ever needs the order of values and the values
/// adjacent to a threshold, so each column keeps its sorted distinct
/// values plus one bin id per row. No precision is lost.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    pub(crate) columns: Vec<BinnedColumn>,
}

#[derive(Debug, Clone)]
pub(crate) struct BinnedColumn {
    pub values: Vec<f64>,
    pub bins: Vec<u32>,
    pub layout: Layout,
}

#[derive(Debug, Clone)]
pub(crate) enum Layout {
    /// Rows outside the most populated bin, in row order.
    Hist { default_bin: u32, others: Vec<(u32, u32)> },
    /// All rows ordered by bin, ties in row order.
    Sorted { order: Vec<u32> },
}

impl BinnedMatrix {
    pub fn new(x: &DesignMatrix) -> Self {
        let n_rows = x.n_rows();
        assert!(n_rows < NONE as usize, "too many rows");
        let columns = x.columns().iter().map(|c| bin_column(c)).collect();
        Self { n_rows, columns }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub(crate) fn bin(&self, col: usize, row: usize) -> u32 {
        self.columns[col].bins[row]
    }
}

fn bin_column(x: &[f64]) -> BinnedColumn {
    let mut order: Vec<u32> = (0..x.len() as u32).collect();
    order.sort_by(|&a, &b| x[a as usize].total_cmp(&x[b as usize]));
    let mut values: Vec<f64> = Vec::new();
    let mut bins = vec![0u32; x.len()];
    for &r in &order {
        let v = x[r as usize];
        if values.last().is_none_or(|&last| last != v) {
            values.push(v);
        }
        bins[r as usize] = (values.len() - 1) as u32;
    }
    let layout = if values.len() <= HIST_MAX_BINS {
        let mut counts = vec![0usize; values.len()];
        for &b in &bins {
            counts[b as usize] += 1;
        }
        let mut default_bin = 0;
        for (b, &c) in counts.iter().enumerate() {
            if c > counts[default_bin] {
                default_bin = b;
            }
        }
        let others = bins
            .iter()
            .enumerate()
            .filter(|(_, &b)| b as usize != default_bin)
            .map(|(r, &b)| (r as u32, b))
            .collect();
        Layout::Hist { default_bin: default_bin as u32, others }
    } else {
        Layout::Sorted { order }
    };
    BinnedColumn { values, bins, layout }
}
