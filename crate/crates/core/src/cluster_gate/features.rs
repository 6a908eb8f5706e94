//! Handcrafted shape descriptors used for clustering and gating.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{compute_pca, PointCloud};

pub const FEATURE_DIM: usize = 10;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "extent_major",
    "extent_mid",
    "extent_minor",
    "ratio_21",
    "ratio_31",
    "elongation",
    "flatness",
    "sphericity",
    "box_volume",
    "max_radius",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryFeatures {
    /// Bounding extents in meters, largest first. The horizontal pair comes
    /// from the minimum-area rectangle around the xy projection.
    pub extents: [f64; 3],
    /// PCA variance ratios λ2/λ1 and λ3/λ1.
    pub variance_ratios: [f64; 2],
    /// 1 − λ2/λ1
    pub elongation: f64,
    /// 1 − λ3/λ2
    pub flatness: f64,
    /// λ3/λ1
    pub sphericity: f64,
    /// Product of the extents (m³).
    pub box_volume: f64,
    /// Largest distance from the centroid (m).
    pub max_radius: f64,
}

impl GeometryFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let e = self.extents;
        let r = self.variance_ratios;
        vec![
            e[0],
            e[1],
            e[2],
            r[0],
            r[1],
            self.elongation,
            self.flatness,
            self.sphericity,
            self.box_volume,
            self.max_radius,
        ]
    }
}

fn cross2(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull of 2D points (monotone chain), counter-clockwise.
pub fn convex_hull_2d(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Side lengths (longer first) of the minimum-area rectangle enclosing the
/// points. Ties go to the first hull edge.
pub fn min_area_rectangle(points: &[Vector2<f64>]) -> [f64; 2] {
    let hull = convex_hull_2d(points);
    match hull.len() {
        0 | 1 => return [0.0, 0.0],
        2 => return [(hull[1] - hull[0]).norm(), 0.0],
        _ => {}
    }
    let mut best: Option<(f64, [f64; 2])> = None;
    for i in 0..hull.len() {
        let edge = hull[(i + 1) % hull.len()] - hull[i];
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        let u = edge / len;
        let v = Vector2::new(-u.y, u.x);
        let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let (a, b) = (p.dot(&u), p.dot(&v));
            u_lo = u_lo.min(a);
            u_hi = u_hi.max(a);
            v_lo = v_lo.min(b);
            v_hi = v_hi.max(b);
        }
        let (w, h) = (u_hi - u_lo, v_hi - v_lo);
        if best.is_none_or(|(area, _)| w * h < area) {
            best = Some((w * h, [w.max(h), w.min(h)]));
        }
    }
    best.map_or([0.0, 0.0], |(_, s)| s)
}

pub fn extract_geometry_features(cloud: &PointCloud) -> Result<GeometryFeatures> {
    let pca = compute_pca(cloud)?;
    let [l1, l2, l3] = pca.variances;
    let xy: Vec<Vector2<f64>> = cloud.points().iter().map(|p| Vector2::new(p.x, p.y)).collect();
    let [a, b] = min_area_rectangle(&xy);
    let (z_lo, z_hi) = cloud
        .points()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.z), hi.max(p.z)));
    let mut extents = [a, b, z_hi - z_lo];
    extents.sort_by(|x, y| y.total_cmp(x));
    let r21 = (l2 / l1).clamp(0.0, 1.0);
    let r31 = (l3 / l1).clamp(0.0, 1.0);
    let r32 = if l2 > 0.0 { (l3 / l2).clamp(0.0, 1.0) } else { 0.0 };
    let centroid: Vector3<f64> = pca.centroid;
    Ok(GeometryFeatures {
        extents,
        variance_ratios: [r21, r31],
        elongation: 1.0 - r21,
        flatness: 1.0 - r32,
        sphericity: r31,
        box_volume: extents.iter().product(),
        max_radius: cloud
            .points()
            .iter()
            .map(|p| (p - centroid).norm())
            .fold(0.0, f64::max),
    })
}
