//! CART trees grown on a sample of row indices.

use serde::{Deserialize, Serialize};

use crate::stats::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// Class frequencies (classification) or a single mean (regression).
    Leaf(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// A single leaf.
    pub fn leaf(value: Vec<f64>) -> Self {
        Tree {
            nodes: vec![Node::Leaf(value)],
        }
    }

    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_for(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

#[derive(Clone, Copy)]
pub(crate) enum Labels<'a> {
    Classes { codes: &'a [usize], k: usize },
    Values(&'a [f64]),
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    cols: &'a [Vec<f64>],
    labels: Labels<'a>,
    params: GrowParams,
    idx: Vec<usize>,
    nodes: Vec<Node>,
    buf: Vec<(f64, usize)>,
    features: Vec<usize>,
    rng: &'a mut RngStream,
}

/// Grow one tree over `sample` (row indices, duplicates allowed) of the
/// column-major matrix `cols`.
pub(crate) fn grow(
    cols: &[Vec<f64>],
    labels: Labels<'_>,
    sample: Vec<usize>,
    params: GrowParams,
    rng: &mut RngStream,
) -> Tree {
    let n = sample.len();
    let mut g = Grower {
        cols,
        labels,
        params,
        idx: sample,
        nodes: Vec::new(),
        buf: Vec::with_capacity(n),
        features: (0..cols.len()).collect(),
        rng,
    };
    g.build(0, n, 0);
    Tree { nodes: g.nodes }
}

impl Grower<'_> {
    fn build(&mut self, start: usize, end: usize, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let (leaf, pure) = self.leaf_value(start, end);
        self.nodes.push(Node::Leaf(leaf));
        let n = end - start;
        if pure || depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(start, end) else {
            return id;
        };
        let mid = self.partition(start, end, best.feature, best.threshold);
        let left = self.build(start, mid, depth + 1);
        let right = self.build(mid, end, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn leaf_value(&self, start: usize, end: usize) -> (Vec<f64>, bool) {
        let rows = &self.idx[start..end];
        let n = rows.len() as f64;
        match self.labels {
            Labels::Classes { codes, k } => {
                let mut counts = vec![0.0; k];
                for &i in rows {
                    counts[codes[i]] += 1.0;
                }
                let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
                (counts.into_iter().map(|c| c / n).collect(), pure)
            }
            Labels::Values(v) => {
                let mean = rows.iter().map(|&i| v[i]).sum::<f64>() / n;
                let first = v[rows[0]];
                let pure = rows.iter().all(|&i| v[i] == first);
                (vec![mean], pure)
            }
        }
    }

    /// Score to maximize: sum over children of (sum of squared class counts
    /// / size) for Gini, or (sum^2 / size) for variance reduction.
    fn parent_score(&self, start: usize, end: usize) -> f64 {
        let rows = &self.idx[start..end];
        let n = rows.len() as f64;
        match self.labels {
            Labels::Classes { codes, k } => {
                let mut counts = vec![0.0f64; k];
                for &i in rows {
                    counts[codes[i]] += 1.0;
                }
                counts.iter().map(|c| c * c).sum::<f64>() / n
            }
            Labels::Values(v) => {
                let s: f64 = rows.iter().map(|&i| v[i]).sum();
                s * s / n
            }
        }
    }

    fn best_split(&mut self, start: usize, end: usize) -> Option<Best> {
        let parent = self.parent_score(start, end);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let n = end - start;
        let d = self.features.len();
        let mut best: Option<Best> = None;
        let mut visited = 0;
        let mut drawn = 0;
        while drawn < d && visited < self.params.features_per_split {
            let pick = drawn + self.rng.index(d - drawn);
            self.features.swap(drawn, pick);
            let f = self.features[drawn];
            drawn += 1;

            let col = &self.cols[f];
            self.buf.clear();
            self.buf
                .extend(self.idx[start..end].iter().map(|&i| (col[i], i)));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[n - 1].0 {
                continue;
            }
            visited += 1;

            let found = match self.labels {
                Labels::Classes { codes, k } => scan_classes(&self.buf, codes, k, min_leaf),
                Labels::Values(v) => scan_values(&self.buf, v, min_leaf),
            };
            if let Some((score, threshold)) = found {
                let better = match &best {
                    None => true,
                    Some(b) => score > b.score || (score == b.score && f < b.feature),
                };
                if better {
                    best = Some(Best {
                        score,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best.filter(|b| b.score > parent + 1e-12 * parent.abs())
    }

    fn partition(&mut self, start: usize, end: usize, feature: usize, threshold: f64) -> usize {
        let col = &self.cols[feature];
        let slice = &mut self.idx[start..end];
        let mut left = 0;
        for i in 0..slice.len() {
            if col[slice[i]] <= threshold {
                slice.swap(left, i);
                left += 1;
            }
        }
        start + left
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

fn scan_classes(
    sorted: &[(f64, usize)],
    codes: &[usize],
    k: usize,
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let n = sorted.len();
    let mut right = vec![0.0f64; k];
    for &(_, i) in sorted {
        right[codes[i]] += 1.0;
    }
    let mut left = vec![0.0f64; k];
    let mut sl2 = 0.0;
    let mut sr2: f64 = right.iter().map(|c| c * c).sum();
    let mut best: Option<(f64, f64)> = None;
    for p in 1..n {
        let c = codes[sorted[p - 1].1];
        sl2 += 2.0 * left[c] + 1.0;
        sr2 -= 2.0 * right[c] - 1.0;
        left[c] += 1.0;
        right[c] -= 1.0;
        if p < min_leaf || n - p < min_leaf || sorted[p - 1].0 == sorted[p].0 {
            continue;
        }
        let score = sl2 / p as f64 + sr2 / (n - p) as f64;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, midpoint(sorted[p - 1].0, sorted[p].0)));
        }
    }
    best
}

fn scan_values(sorted: &[(f64, usize)], v: &[f64], min_leaf: usize) -> Option<(f64, f64)> {
    let n = sorted.len();
    let total: f64 = sorted.iter().map(|&(_, i)| v[i]).sum();
    let mut ls = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for p in 1..n {
        ls += v[sorted[p - 1].1];
        if p < min_leaf || n - p < min_leaf || sorted[p - 1].0 == sorted[p].0 {
            continue;
        }
        let rs = total - ls;
        let score = ls * ls / p as f64 + rs * rs / (n - p) as f64;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, midpoint(sorted[p - 1].0, sorted[p].0)));
        }
    }
    best
}
