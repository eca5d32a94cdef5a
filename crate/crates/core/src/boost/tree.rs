use serde::{Deserialize, Serialize};

use super::binned::{BinnedMatrix, Layout, NONE};
use crate::paneldata::DesignMatrix;
use crate::{Error, Result};

/// A split is kept only if it reduces the node's squared error by more
/// than this fraction of the node's sum of squared targets.
pub(crate) const MIN_RELATIVE_GAIN: f64 = 1e-12;

/// Gains within this relative distance count as tied, so rounding noise
/// from different accumulation orders cannot override the tie-break rule.
const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

/// Binary regression tree stored as a node array with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    n_features: usize,
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf(n_features: usize, value: f64) -> Self {
        Self {
            n_features,
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn stump(n_features: usize, feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        assert!(feature < n_features, "feature out of range");
        Self {
            n_features,
            nodes: vec![
                TreeNode::Split { feature, threshold, left: 1, right: 2 },
                TreeNode::Leaf { value: left },
                TreeNode::Leaf { value: right },
            ],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    #[inline]
    pub fn predict_row(&self, x: &DesignMatrix, row: usize) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    id = if x.get(row, feature) < threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        Ok((0..x.n_rows()).map(|r| self.predict_row(x, r)).collect())
    }
}

pub(crate) fn check_width(expected: usize, x: &DesignMatrix) -> Result<()> {
    if x.n_cols() != expected {
        return Err(Error::Dimension(format!(
            "model was trained on {expected} features, got {}",
            x.n_cols()
        )));
    }
    Ok(())
}

/// Threshold between two adjacent distinct values. Falls back to the upper
/// value when the midpoint rounds onto the lower one.
pub(crate) fn split_threshold(lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * lo + 0.5 * hi;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

/// A fitted tree plus, per split node, the first bin routed right.
pub(crate) struct GrownTree {
    pub tree: RegressionTree,
    cuts: Vec<u32>,
}

impl GrownTree {
    #[inline]
    pub fn route(&self, bm: &BinnedMatrix, row: usize) -> f64 {
        let mut id = 0;
        loop {
            match self.tree.nodes[id] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, left, right, .. } => {
                    id = if bm.bin(feature, row) < self.cuts[id] { left } else { right };
                }
            }
        }
    }
}

#[derive(Clone, Copy, Default)]
struct NodeStats {
    sum: f64,
    sumsq: f64,
    count: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    lo: u32,
    hi: u32,
}

/// Level-wise exact greedy tree grower with reusable scratch buffers.
pub(crate) struct Grower {
    node_of: Vec<u32>,
    slot_of: Vec<u32>,
    hist_sum: Vec<f64>,
    hist_cnt: Vec<u32>,
    touched: Vec<usize>,
    stamp_of: Vec<u64>,
    stamp: u64,
    run_sum: Vec<f64>,
    run_cnt: Vec<usize>,
    run_last: Vec<u32>,
}

impl Grower {
    pub fn new(n_rows: usize) -> Self {
        Self {
            node_of: vec![NONE; n_rows],
            slot_of: Vec::new(),
            hist_sum: Vec::new(),
            hist_cnt: Vec::new(),
            touched: Vec::new(),
            stamp_of: Vec::new(),
            stamp: 0,
            run_sum: Vec::new(),
            run_cnt: Vec::new(),
            run_last: Vec::new(),
        }
    }

    /// Fits a least-squares tree to `target` over `rows` (indices into `bm`).
    pub fn grow(
        &mut self,
        bm: &BinnedMatrix,
        target: &[f64],
        rows: &[u32],
        params: TreeParams,
    ) -> GrownTree {
        let msl = params.min_samples_leaf.max(1);
        let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
        let mut cuts = vec![NONE];
        self.node_of.fill(NONE);
        for &r in rows {
            self.node_of[r as usize] = 0;
        }
        let mut level: Vec<u32> = vec![0];

        for _ in 0..params.max_depth {
            self.slot_of.clear();
            self.slot_of.resize(nodes.len(), NONE);
            for (s, &id) in level.iter().enumerate() {
                self.slot_of[id as usize] = s as u32;
            }
            let mut stats = vec![NodeStats::default(); level.len()];
            for &r in rows {
                let s = self.slot_of[self.node_of[r as usize] as usize];
                if s != NONE {
                    let g = target[r as usize];
                    let st = &mut stats[s as usize];
                    st.sum += g;
                    st.sumsq += g * g;
                    st.count += 1;
                }
            }
            let active: Vec<bool> = stats.iter().map(|s| s.count >= 2 * msl).collect();
            if !active.iter().any(|&a| a) {
                break;
            }
            let mut best: Vec<Option<Candidate>> = vec![None; level.len()];
            let floor: Vec<f64> = stats.iter().map(|s| MIN_RELATIVE_GAIN * s.sumsq).collect();
            for f in 0..bm.n_cols() {
                self.scan_column(bm, f, target, &stats, &active, &floor, msl, &mut best);
            }
            if best.iter().all(Option::is_none) {
                break;
            }

            let mut next = Vec::new();
            for (s, cand) in best.iter().enumerate() {
                let Some(c) = cand else { continue };
                let id = level[s] as usize;
                let values = &bm.columns[c.feature].values;
                let threshold = split_threshold(values[c.lo as usize], values[c.hi as usize]);
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes.push(TreeNode::Leaf { value: 0.0 });
                cuts.push(NONE);
                cuts.push(NONE);
                nodes[id] = TreeNode::Split {
                    feature: c.feature,
                    threshold,
                    left,
                    right: left + 1,
                };
                cuts[id] = values.partition_point(|&v| v < threshold) as u32;
                next.push(left as u32);
                next.push(left as u32 + 1);
            }
            for &r in rows {
                let id = self.node_of[r as usize] as usize;
                if cuts[id] == NONE {
                    continue;
                }
                if let TreeNode::Split { feature, left, right, .. } = nodes[id] {
                    let go_left = bm.bin(feature, r as usize) < cuts[id];
                    self.node_of[r as usize] = if go_left { left } else { right } as u32;
                }
            }
            level = next;
        }

        let mut sums = vec![(0.0, 0usize); nodes.len()];
        for &r in rows {
            let e = &mut sums[self.node_of[r as usize] as usize];
            e.0 += target[r as usize];
            e.1 += 1;
        }
        for (node, (sum, count)) in nodes.iter_mut().zip(sums) {
            if let TreeNode::Leaf { value } = node {
                *value = if count > 0 { sum / count as f64 } else { 0.0 };
            }
        }
        GrownTree {
            tree: RegressionTree { n_features: bm.n_cols(), nodes },
            cuts,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn scan_column(
        &mut self,
        bm: &BinnedMatrix,
        f: usize,
        target: &[f64],
        stats: &[NodeStats],
        active: &[bool],
        floor: &[f64],
        msl: usize,
        best: &mut [Option<Candidate>],
    ) {
        let col = &bm.columns[f];
        let nb = col.values.len();
        if nb < 2 {
            return;
        }
        let n_slots = stats.len();
        let mut consider = |s: usize, lsum: f64, lcnt: usize, lo: u32, hi: u32| {
            let st = stats[s];
            let rcnt = st.count - lcnt;
            if lcnt < msl || rcnt < msl {
                return;
            }
            let rsum = st.sum - lsum;
            let gain = lsum * lsum / lcnt as f64 + rsum * rsum / rcnt as f64
                - st.sum * st.sum / st.count as f64;
            let bar = best[s].map_or(floor[s], |c| c.gain + TIE_TOLERANCE * c.gain.abs());
            if gain > bar {
                best[s] = Some(Candidate { gain, feature: f, lo, hi });
            }
        };
        match &col.layout {
            Layout::Hist { default_bin, others } => {
                // Only nodes holding a row outside the default bin can split
                // on this column, so just those get a histogram.
                let d = *default_bin as usize;
                self.stamp += 1;
                if self.stamp_of.len() < n_slots {
                    self.stamp_of.resize(n_slots, 0);
                }
                if self.hist_sum.len() < n_slots * nb {
                    self.hist_sum.resize(n_slots * nb, 0.0);
                    self.hist_cnt.resize(n_slots * nb, 0);
                }
                self.touched.clear();
                for &(r, b) in others {
                    let id = self.node_of[r as usize];
                    if id == NONE {
                        continue;
                    }
                    let s = self.slot_of[id as usize];
                    if s == NONE || !active[s as usize] {
                        continue;
                    }
                    let s = s as usize;
                    if self.stamp_of[s] != self.stamp {
                        self.stamp_of[s] = self.stamp;
                        self.touched.push(s);
                        self.hist_sum[s * nb..(s + 1) * nb].fill(0.0);
                        self.hist_cnt[s * nb..(s + 1) * nb].fill(0);
                    }
                    let k = s * nb + b as usize;
                    self.hist_sum[k] += target[r as usize];
                    self.hist_cnt[k] += 1;
                }
                for &s in &self.touched {
                    let base = s * nb;
                    let (mut osum, mut ocnt) = (0.0, 0u32);
                    for b in 0..nb {
                        osum += self.hist_sum[base + b];
                        ocnt += self.hist_cnt[base + b];
                    }
                    self.hist_sum[base + d] = stats[s].sum - osum;
                    self.hist_cnt[base + d] = stats[s].count as u32 - ocnt;
                    let (mut lsum, mut lcnt) = (0.0, 0usize);
                    let mut prev = NONE;
                    for b in 0..nb {
                        let c = self.hist_cnt[base + b];
                        if c == 0 {
                            continue;
                        }
                        if prev != NONE {
                            consider(s, lsum, lcnt, prev, b as u32);
                        }
                        lsum += self.hist_sum[base + b];
                        lcnt += c as usize;
                        prev = b as u32;
                    }
                }
            }
            Layout::Sorted { order } => {
                self.run_sum.clear();
                self.run_sum.resize(n_slots, 0.0);
                self.run_cnt.clear();
                self.run_cnt.resize(n_slots, 0);
                self.run_last.clear();
                self.run_last.resize(n_slots, NONE);
                for &r in order {
                    let id = self.node_of[r as usize];
                    if id == NONE {
                        continue;
                    }
                    let s = self.slot_of[id as usize];
                    if s == NONE || !active[s as usize] {
                        continue;
                    }
                    let s = s as usize;
                    let b = col.bins[r as usize];
                    if self.run_cnt[s] > 0 && b != self.run_last[s] {
                        consider(s, self.run_sum[s], self.run_cnt[s], self.run_last[s], b);
                    }
                    self.run_sum[s] += target[r as usize];
                    self.run_cnt[s] += 1;
                    self.run_last[s] = b;
                }
            }
        }
    }
}
