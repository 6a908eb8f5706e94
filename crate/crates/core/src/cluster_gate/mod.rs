//! Geometry features, k-means object clustering, the curriculum schedule
//! and the KL-trained gating model used to pick an expert per object.

mod features;
mod kmeans;
mod model;

use std::collections::{BTreeMap, BTreeSet};

pub use features::{
    convex_hull_2d, extract_geometry_features, min_area_rectangle, GeometryFeatures, FEATURE_DIM, FEATURE_NAMES,
};
pub use kmeans::{apply_category_override, kmeans_fit, ClusterModel, DEFAULT_MAX_ITERS};
pub use model::{
    argmax, gating_train, kl_divergence, kl_from_logits, softmax, ExpertScoreRecord, GatingConfig, GatingModel,
};

use kmeans::sq_dist;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_CENTRAL_FRACTION: f64 = 0.3;

/// Training stage of the expert curriculum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Objects near each cluster center.
    Central,
    /// Every object of the cluster.
    Cluster,
    /// Every object, for every expert.
    All,
}

impl Stage {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Stage::Central),
            2 => Some(Stage::Cluster),
            3 => Some(Stage::All),
            _ => None,
        }
    }
}

/// Row indices assigned to each expert (expert `c` trains on cluster `c`).
pub fn curriculum_schedule(
    model: &ClusterModel,
    features: &[Vec<f64>],
    stage: Stage,
    central_fraction: f64,
) -> Vec<Vec<usize>> {
    let n = model.assignments.len();
    (0..model.k)
        .map(|c| match stage {
            Stage::All => (0..n).collect(),
            Stage::Cluster => model.members(c),
            Stage::Central => {
                let mut members = model.members(c);
                members.sort_by(|&a, &b| {
                    sq_dist(&features[a], &model.centroids[c])
                        .total_cmp(&sq_dist(&features[b], &model.centroids[c]))
                        .then(a.cmp(&b))
                });
                let keep = ((central_fraction.clamp(0.0, 1.0) * members.len() as f64) - 1e-9).ceil() as usize;
                members.truncate(keep.min(members.len()));
                members.sort_unstable();
                members
            }
        })
        .collect()
}

/// Objects whose two best experts both succeed less often than
/// `threshold`.
pub fn hard_case_split(per_expert_success: &BTreeMap<String, Vec<f64>>, threshold: f64) -> BTreeSet<String> {
    per_expert_success
        .iter()
        .filter(|(_, rates)| {
            let mut sorted = (*rates).clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            sorted.iter().take(2).all(|r| *r < threshold)
        })
        .map(|(id, _)| id.clone())
        .collect()
}
