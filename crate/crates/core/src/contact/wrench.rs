//! Grasp wrench space and the force-closure test.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};

use super::hull::convex_hull_planes;
use super::ContactSet;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub type Wrench = SVector<f64, 6>;

pub const DEFAULT_FRICTION: f64 = 0.5;
pub const DEFAULT_CONE_EDGES: usize = 8;

/// Quality below this is reported as zero and the grasp as open.
pub const QUALITY_EPS: f64 = 1e-9;

/// Reference point and length scale used to express contact torques.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchFrame {
    pub center: Vector3<f64>,
    /// Torques are divided by this length (meters).
    pub radius: f64,
}

impl WrenchFrame {
    /// Object centroid and its largest point distance.
    pub fn from_cloud(cloud: &PointCloud) -> Self {
        Self {
            center: cloud.centroid(),
            radius: cloud.max_radius(),
        }
    }

    /// Contact centroid and the largest contact distance from it.
    pub fn from_contacts(contacts: &ContactSet) -> Self {
        let center = contacts.centroid();
        let radius = contacts
            .iter()
            .map(|c| (c.position - center).norm())
            .fold(0.0, f64::max);
        Self { center, radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceClosureReport {
    pub closed: bool,
    pub quality: f64,
    pub friction_coefficient: f64,
}

/// Unit vectors spanning the plane orthogonal to `n`.
pub(crate) fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let t1 = n.cross(&helper).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Friction-cone edge wrenches for every contact. Forces push into the
/// object (against the outward normal).
pub fn contact_wrenches(
    contacts: &ContactSet,
    friction: f64,
    n_edges: usize,
    frame: &WrenchFrame,
) -> Result<Vec<Wrench>> {
    let scale = if frame.radius > 0.0 { 1.0 / frame.radius } else { 1.0 };
    let mut out = Vec::with_capacity(contacts.len() * n_edges);
    for c in contacts.iter() {
        let len = c.normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidContacts(format!("zero normal on {}", c.finger)));
        }
        let inward = -c.normal / len;
        let (t1, t2) = tangent_basis(&inward);
        let arm = c.position - frame.center;
        for j in 0..n_edges {
            let theta = std::f64::consts::TAU * j as f64 / n_edges as f64;
            let f = inward + friction * (theta.cos() * t1 + theta.sin() * t2);
            let tau = arm.cross(&f) * scale;
            out.push(Wrench::new(f.x, f.y, f.z, tau.x, tau.y, tau.z));
        }
    }
    Ok(out)
}

/// Largest origin-centered ball inside the hull of `wrenches`, or 0 when
/// the origin is not strictly inside.
pub fn wrench_hull_quality(wrenches: &[Wrench]) -> f64 {
    wrench_hull(wrenches).0
}

/// Quality together with the unit facet normals of the wrench hull (empty
/// when the wrenches do not span six dimensions).
pub(crate) fn wrench_hull(wrenches: &[Wrench]) -> (f64, Vec<Wrench>) {
    let scale = wrenches.iter().map(|w| w.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return (0.0, Vec::new());
    }
    let Some(planes) = convex_hull_planes(wrenches, 1e-10 * scale) else {
        return (0.0, Vec::new());
    };
    let depth = planes
        .iter()
        .map(|p| p.offset)
        .fold(f64::INFINITY, f64::min);
    let quality = if depth > QUALITY_EPS * scale { depth } else { 0.0 };
    (quality, planes.into_iter().map(|p| p.normal).collect())
}

/// Upper bound on the hull quality of `wrenches`: the smallest support
/// value over the given unit directions.
pub(crate) fn quality_bound(wrenches: &[Wrench], directions: &[Wrench]) -> f64 {
    directions
        .iter()
        .map(|u| wrenches.iter().map(|w| u.dot(w)).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min)
}

pub fn check_force_closure_in(
    contacts: &ContactSet,
    friction: f64,
    n_cone_samples: usize,
    frame: &WrenchFrame,
) -> Result<ForceClosureReport> {
    if !(friction >= 0.0) || !friction.is_finite() {
        return Err(Error::InvalidContacts(format!("friction must be >= 0, got {friction}")));
    }
    if n_cone_samples < 4 {
        return Err(Error::InvalidContacts(format!(
            "need at least 4 cone samples, got {n_cone_samples}"
        )));
    }
    let wrenches = contact_wrenches(contacts, friction, n_cone_samples, frame)?;
    let quality = wrench_hull_quality(&wrenches);
    Ok(ForceClosureReport {
        closed: quality > 0.0,
        quality,
        friction_coefficient: friction,
    })
}

/// Force-closure test with torques taken about the contact centroid.
pub fn check_force_closure(
    contacts: &ContactSet,
    friction: f64,
    n_cone_samples: usize,
) -> Result<ForceClosureReport> {
    check_force_closure_in(contacts, friction, n_cone_samples, &WrenchFrame::from_contacts(contacts))
}
