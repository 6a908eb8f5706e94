//! Seeded k-means++ initialization followed by Lloyd iterations.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input row.
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
    /// Rows moved by a category override, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overridden: Vec<usize>,
}

impl ClusterModel {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == cluster)
            .collect()
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }

    pub fn wcss(&self, data: &[Vec<f64>]) -> f64 {
        wcss(data, &self.centroids, &self.assignments)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = sq_dist(x, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn wcss(data: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    data.iter()
        .zip(assignments)
        .map(|(x, &c)| sq_dist(x, &centroids[c]))
        .sum()
}

fn kmeans_pp(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centroids = vec![data[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if r < *w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        } else {
            // every point already coincides with a center
            rng.random_range(0..n)
        };
        centroids.push(data[pick].clone());
        for (i, x) in data.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &data[pick]));
        }
    }
    centroids
}

pub fn kmeans_fit(data: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<ClusterModel> {
    let n = data.len();
    if k < 1 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let dim = data[0].len();
    if let Some(i) = data.iter().position(|x| x.len() != dim) {
        return Err(Error::config(format!("features[{i}]"), "inconsistent feature dimension"));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering features".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(data, k, &mut rng);
    let mut assignments: Vec<usize> = data.iter().map(|x| nearest(&centroids, x).0).collect();
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        // empty clusters take the point farthest from its own centroid
        for c in 0..k {
            if assignments.contains(&c) {
                continue;
            }
            let far = (0..n)
                .filter(|&i| assignments.iter().filter(|&&a| a == assignments[i]).count() > 1)
                .max_by(|&a, &b| {
                    sq_dist(&data[a], &centroids[assignments[a]])
                        .total_cmp(&sq_dist(&data[b], &centroids[assignments[b]]))
                        .then(b.cmp(&a))
                });
            if let Some(i) = far {
                centroids[c] = data[i].clone();
                assignments[i] = c;
            }
        }
        history.push(wcss(data, &centroids, &assignments));

        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in data.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if iterations == max_iters {
            break;
        }
        iterations += 1;

        // assignment step; keep the current cluster on ties
        let mut changed = false;
        for (i, x) in data.iter().enumerate() {
            let (c, d) = nearest(&centroids, x);
            if c != assignments[i] && d < sq_dist(x, &centroids[assignments[i]]) {
                assignments[i] = c;
                changed = true;
            }
        }
        if !changed {
            history.push(wcss(data, &centroids, &assignments));
            break;
        }
    }

    Ok(ClusterModel {
        k,
        seed,
        centroids,
        assignments,
        wcss_history: history,
        iterations,
        overridden: Vec::new(),
    })
}

/// Moves every object of a pinned category into the cluster that holds
/// most of that category (ties to the lowest cluster index). Centroids are
/// left unchanged.
pub fn apply_category_override(model: &ClusterModel, categories: &[Option<String>], pinned: &[String]) -> ClusterModel {
    let mut out = model.clone();
    for cat in pinned {
        let rows: Vec<usize> = (0..categories.len().min(model.assignments.len()))
            .filter(|&i| categories[i].as_deref() == Some(cat.as_str()))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &rows {
            *votes.entry(model.assignments[i]).or_default() += 1;
        }
        let target = votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&c, _)| c)
            .expect("non-empty");
        for &i in &rows {
            if out.assignments[i] != target {
                out.assignments[i] = target;
                out.overridden.push(i);
            }
        }
    }
    out.overridden.sort_unstable();
    out.overridden.dedup();
    out
}
