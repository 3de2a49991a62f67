//! Synthetic minority oversampling.
//!
//! Each minority category is grown to the majority count with points
//! interpolated between a member and one of its k nearest same-category
//! neighbours. Distances are measured on min-max-scaled features; the
//! interpolation itself happens in the original feature space, which is
//! equivalent because the scaling is affine per feature.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::learn::dataset::{Dataset, Target};
use crate::learn::scale::MinMaxScaler;
use crate::stats::RngStream;

pub const DEFAULT_SMOTE_K: usize = 5;

/// Indices (into `members`) of the k nearest neighbours of `members[seed]`,
/// nearest first, ties by lower row index.
pub(crate) fn nearest_neighbors(
    scaled: &[Vec<f64>],
    members: &[usize],
    seed: usize,
    k: usize,
) -> Vec<usize> {
    let origin = &scaled[members[seed]];
    let mut dists: Vec<(f64, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != seed)
        .map(|(j, &row)| {
            let d: f64 = origin
                .iter()
                .zip(&scaled[row])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, j)
        })
        .collect();
    let k = k.min(dists.len());
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.total_cmp(&b.0).then(members[a.1].cmp(&members[b.1]))
    };
    if k < dists.len() {
        dists.select_nth_unstable_by(k, by_dist);
        dists.truncate(k);
    }
    dists.sort_by(by_dist);
    dists.into_iter().map(|(_, j)| j).collect()
}

/// Upsample every category to the majority count. Original rows are kept
/// unchanged as a prefix of the result; synthetic rows follow, grouped by
/// category in ascending code order.
pub fn smote_balance(dataset: &Dataset, k: usize, rng: &mut RngStream) -> Result<Dataset> {
    let (codes, n_categories) = match dataset.target() {
        Target::Classification {
            codes,
            n_categories,
        } => (codes.as_slice(), *n_categories),
        Target::Regression(_) => {
            return Err(Error::Resample(
                "SMOTE needs a classification dataset".into(),
            ))
        }
    };
    if k == 0 {
        return Err(Error::param("SMOTE k must be at least 1"));
    }
    let mut by_category: Vec<Vec<usize>> = vec![Vec::new(); n_categories];
    for (i, &c) in codes.iter().enumerate() {
        by_category[c].push(i);
    }
    if let Some((c, m)) = by_category.iter().enumerate().find(|(_, m)| m.len() < 2) {
        return Err(Error::Resample(format!(
            "category {c} has {} member(s); SMOTE needs at least 2",
            m.len()
        )));
    }
    let majority = by_category.iter().map(Vec::len).max().unwrap_or(0);
    if by_category.iter().all(|m| m.len() == majority) {
        return Ok(dataset.clone());
    }

    let scaled = MinMaxScaler::fit(dataset.rows())?.transform(dataset.rows());
    let mut rows = dataset.rows().to_vec();
    let mut out_codes = codes.to_vec();

    for (category, members) in by_category.iter().enumerate() {
        let needed = majority - members.len();
        if needed == 0 {
            continue;
        }
        let k_eff = if k > members.len() - 1 {
            log::warn!(
                "SMOTE k = {k} exceeds category {category} size - 1; using {}",
                members.len() - 1
            );
            members.len() - 1
        } else {
            k
        };
        let mut order: Vec<usize> = (0..members.len()).collect();
        let mut neighbor_cache: HashMap<usize, Vec<usize>> = HashMap::new();
        for j in 0..needed {
            if j % members.len() == 0 {
                order.shuffle(rng);
            }
            let seed = order[j % members.len()];
            let neighbors = neighbor_cache
                .entry(seed)
                .or_insert_with(|| nearest_neighbors(&scaled, members, seed, k_eff));
            let nn = neighbors[rng.index(neighbors.len())];
            let lambda = rng.uniform();
            let a = &dataset.rows()[members[seed]];
            let b = &dataset.rows()[members[nn]];
            rows.push(a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)).collect());
            out_codes.push(category);
        }
    }

    Dataset::new(
        rows,
        dataset.feature_names().to_vec(),
        Target::Classification {
            codes: out_codes,
            n_categories,
        },
    )
}
