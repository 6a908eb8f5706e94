//! Grasp strategy selection, five-finger contact generation by slicing and
//! extremum search, and force-closure driven contact refinement.

pub mod hull;
mod wrench;

use wrench::{quality_bound, wrench_hull};

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{slice_cloud, PointCloud, PrincipalAxes};

pub use wrench::{
    check_force_closure, check_force_closure_in, contact_wrenches, wrench_hull_quality,
    ForceClosureReport, Wrench, WrenchFrame, DEFAULT_CONE_EDGES, DEFAULT_FRICTION, QUALITY_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Little,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
            Finger::Little => "little",
        }
    }
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspStrategy {
    /// Side approach; fingers stacked along the object's long axis.
    Horizontal,
    /// Top-down approach.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub finger: Finger,
    #[serde(rename = "p")]
    pub position: Vector3<f64>,
    /// Outward surface normal.
    #[serde(rename = "n")]
    pub normal: Vector3<f64>,
}

/// Exactly five contacts with distinct finger labels, stored in
/// thumb, index, middle, ring, little order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContactSet", into = "RawContactSet")]
pub struct ContactSet {
    contacts: [Contact; 5],
}

#[derive(Serialize, Deserialize)]
struct RawContactSet {
    contacts: Vec<Contact>,
}

impl TryFrom<RawContactSet> for ContactSet {
    type Error = Error;
    fn try_from(raw: RawContactSet) -> Result<Self> {
        ContactSet::new(raw.contacts)
    }
}

impl From<ContactSet> for RawContactSet {
    fn from(set: ContactSet) -> Self {
        RawContactSet {
            contacts: set.contacts.to_vec(),
        }
    }
}

impl ContactSet {
    pub fn new(mut contacts: Vec<Contact>) -> Result<Self> {
        if contacts.len() != 5 {
            return Err(Error::InvalidContacts(format!(
                "expected 5 contacts, got {}",
                contacts.len()
            )));
        }
        contacts.sort_by_key(|c| c.finger);
        for w in contacts.windows(2) {
            if w[0].finger == w[1].finger {
                return Err(Error::InvalidContacts(format!("duplicate finger {}", w[0].finger)));
            }
        }
        if let Some(c) = contacts
            .iter()
            .find(|c| !c.position.iter().chain(c.normal.iter()).all(|v| v.is_finite()))
        {
            return Err(Error::InvalidContacts(format!("non-finite data on {}", c.finger)));
        }
        let contacts: [Contact; 5] = contacts.try_into().expect("length checked");
        Ok(Self { contacts })
    }

    pub fn get(&self, finger: Finger) -> &Contact {
        &self.contacts[finger as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Contact> {
        self.contacts.iter()
    }

    pub fn len(&self) -> usize {
        5
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.contacts.iter().map(|c| c.position).sum::<Vector3<f64>>() / 5.0
    }

    pub fn with_contact(&self, contact: Contact) -> ContactSet {
        let mut out = self.clone();
        out.contacts[contact.finger as usize] = contact;
        out
    }

    /// Applies `p -> f(p)` to positions and `n -> g(n)` to normals.
    pub fn map(
        &self,
        pos: impl Fn(&Vector3<f64>) -> Vector3<f64>,
        nrm: impl Fn(&Vector3<f64>) -> Vector3<f64>,
    ) -> ContactSet {
        ContactSet {
            contacts: self.contacts.map(|c| Contact {
                finger: c.finger,
                position: pos(&c.position),
                normal: nrm(&c.normal),
            }),
        }
    }

    /// Checks unit normals and that every contact lies within `surface_eps`
    /// of the cloud. Returns one message per violation.
    pub fn violations(&self, cloud: &PointCloud, surface_eps: f64) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.contacts {
            if (c.normal.norm() - 1.0).abs() > 1e-6 {
                out.push(format!("{} normal has length {:.6}", c.finger, c.normal.norm()));
            }
            match cloud.nearest(&c.position) {
                Some((_, d)) if d <= surface_eps => {}
                Some((_, d)) => out.push(format!(
                    "{} contact is {:.4} m from the surface (limit {surface_eps})",
                    c.finger, d
                )),
                None => out.push("empty cloud".into()),
            }
        }
        out
    }
}

/// Horizontal iff the major axis is within `alignment_threshold_deg` of
/// world z (either direction).
pub fn select_strategy(axes: &PrincipalAxes, alignment_threshold_deg: f64) -> GraspStrategy {
    let cos = axes.major().normalize().dot(&Vector3::z()).abs().min(1.0);
    if cos.acos().to_degrees() <= alignment_threshold_deg {
        GraspStrategy::Horizontal
    } else {
        GraspStrategy::Vertical
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// Angle (degrees) between major axis and z below which the grasp is horizontal.
    pub alignment_threshold_deg: f64,
    pub n_slices: usize,
    /// Maximum distance of a contact from the cloud (meters).
    pub surface_eps: f64,
    /// Points within this distance of a slice extremum are extremum candidates.
    pub extremum_band: f64,
    /// Minimum extent across the opposition axis for a slice to be graspable.
    pub min_width: f64,
    /// Fraction of the height used by top-down grasps.
    pub top_fraction: f64,
    pub friction: f64,
    pub n_cone_samples: usize,
    pub neighbor_radius: f64,
    pub min_spacing: f64,
    pub max_iters: usize,
    /// Nearest neighbors per finger examined in one refinement sweep.
    pub max_candidates: usize,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            alignment_threshold_deg: 30.0,
            n_slices: 8,
            surface_eps: 0.005,
            extremum_band: 0.002,
            min_width: 0.004,
            top_fraction: 0.5,
            friction: DEFAULT_FRICTION,
            n_cone_samples: DEFAULT_CONE_EDGES,
            neighbor_radius: 0.010,
            min_spacing: 0.008,
            max_iters: 10,
            max_candidates: 12,
        }
    }
}

impl ContactConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(format!("contact.{field}"), msg));
        if self.n_slices < 4 {
            return bad("n_slices", "must be at least 4");
        }
        if !(self.alignment_threshold_deg >= 0.0 && self.alignment_threshold_deg <= 90.0) {
            return bad("alignment_threshold_deg", "must be within [0, 90]");
        }
        for (name, v) in [
            ("surface_eps", self.surface_eps),
            ("extremum_band", self.extremum_band),
            ("neighbor_radius", self.neighbor_radius),
            ("friction", self.friction),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, "must be positive");
            }
        }
        if !(self.min_width >= 0.0 && self.min_spacing >= 0.0) {
            return bad("min_width", "spacing and width must be non-negative");
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return bad("top_fraction", "must be within (0, 1]");
        }
        if self.n_cone_samples < 4 {
            return bad("n_cone_samples", "must be at least 4");
        }
        if self.max_candidates == 0 {
            return bad("max_candidates", "must be positive");
        }
        Ok(())
    }
}

/// Axes (as coordinate indices) used to lay out the contacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraspAxes {
    /// Fingers are spread along this axis.
    pub slicing: usize,
    /// Thumb sits at the minimum, fingers at the maximum.
    pub opposition: usize,
    /// Remaining axis; contacts prefer its mid-range.
    pub lateral: usize,
}

fn extents(cloud: &PointCloud) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in cloud.points() {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn nearly_le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + 1e-6) + 1e-12
}

/// Chooses slicing/opposition axes for a cloud given in its canonical frame.
pub fn grasp_axes(cloud: &PointCloud, strategy: GraspStrategy) -> GraspAxes {
    let (lo, hi) = extents(cloud);
    let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    match strategy {
        GraspStrategy::Horizontal => {
            // longest axis; near-ties prefer z, then y
            let slicing = [2usize, 1, 0]
                .into_iter()
                .reduce(|best, k| if ext[k] > ext[best] * (1.0 + 1e-6) { k } else { best })
                .expect("three axes");
            let rest: Vec<usize> = (0..3).filter(|&k| k != slicing).collect();
            let (opposition, lateral) = if nearly_le(ext[rest[0]], ext[rest[1]]) {
                (rest[0], rest[1])
            } else {
                (rest[1], rest[0])
            };
            GraspAxes {
                slicing,
                opposition,
                lateral,
            }
        }
        GraspStrategy::Vertical => {
            let (opposition, slicing) = if nearly_le(ext[0], ext[1]) { (0, 1) } else { (1, 0) };
            GraspAxes {
                slicing,
                opposition,
                lateral: 2,
            }
        }
    }
}

/// Slice indices for little, ring, middle and index fingers, spread evenly
/// over the inner slices.
fn finger_slots(n_slices: usize) -> [usize; 4] {
    let span = (n_slices - 3) as f64;
    [0, 1, 2, 3].map(|i| (1.0 + i as f64 * span / 3.0).round() as usize)
}

struct Slicer<'a> {
    cloud: &'a PointCloud,
    slices: Vec<Vec<usize>>,
    axes: GraspAxes,
    lateral_center: f64,
    band: f64,
    min_width: f64,
}

impl Slicer<'_> {
    /// Extremum point of slice `k` along `sign * opposition`, preferring
    /// the lateral mid-range. `None` if the slice is empty or too thin.
    fn extremum(&self, k: usize, sign: f64) -> Option<usize> {
        let slice = &self.slices[k];
        let pts = self.cloud.points();
        let o = self.axes.opposition;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in slice {
            lo = lo.min(pts[i][o]);
            hi = hi.max(pts[i][o]);
        }
        if slice.is_empty() || hi - lo < self.min_width {
            return None;
        }
        let target = if sign > 0.0 { hi } else { lo };
        slice
            .iter()
            .copied()
            .filter(|&i| (pts[i][o] - target).abs() <= self.band)
            .min_by(|&a, &b| {
                let da = (pts[a][self.axes.lateral] - self.lateral_center).abs();
                let db = (pts[b][self.axes.lateral] - self.lateral_center).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
    }

    /// Searches outward from slice `k` for the first usable extremum.
    fn nearest_extremum(&self, k: usize, sign: f64) -> Option<usize> {
        let n = self.slices.len() as isize;
        (0..n).find_map(|step| {
            [k as isize - step, k as isize + step]
                .into_iter()
                .filter(|&j| (0..n).contains(&j))
                .find_map(|j| self.extremum(j as usize, sign))
        })
    }
}

/// Five-finger contacts in an opposition layout: thumb at the minimum of
/// the opposition axis, the four fingers at its maximum, spread along the
/// slicing axis (index highest, little lowest).
pub fn generate_contacts(
    cloud: &PointCloud,
    strategy: GraspStrategy,
    config: &ContactConfig,
) -> Result<ContactSet> {
    config.validate()?;
    if cloud.len() < 3 {
        return Err(Error::DegenerateCloud("need at least 3 points".into()));
    }
    let cloud = cloud.clone().ensure_normals();
    let axes = grasp_axes(&cloud, strategy);

    let candidate_idx: Vec<usize> = match strategy {
        GraspStrategy::Horizontal => (0..cloud.len()).collect(),
        GraspStrategy::Vertical => {
            let (lo, hi) = extents(&cloud);
            let floor = hi[2] - config.top_fraction * (hi[2] - lo[2]);
            (0..cloud.len())
                .filter(|&i| cloud.points()[i].z >= floor)
                .collect()
        }
    };
    let sub = PointCloud::new(candidate_idx.iter().map(|&i| cloud.points()[i]).collect());
    let (lo, hi) = extents(&sub);
    let mut slicing_dir = Vector3::zeros();
    slicing_dir[axes.slicing] = 1.0;
    let slices = slice_cloud(&sub, &slicing_dir, config.n_slices)?;
    let slicer = Slicer {
        cloud: &sub,
        slices,
        axes,
        lateral_center: 0.5 * (lo[axes.lateral] + hi[axes.lateral]),
        band: config.extremum_band,
        min_width: config.min_width,
    };

    let slots = finger_slots(config.n_slices);
    let thumb_slot = (slots[2] + slots[3]).div_ceil(2);
    let pick = |finger: Finger, slot: usize, sign: f64| -> Result<Contact> {
        let local = slicer.nearest_extremum(slot, sign).ok_or_else(|| {
            Error::NoGraspSurface(format!(
                "no opposing extremum found for {finger} along axis {}",
                axes.opposition
            ))
        })?;
        let idx = candidate_idx[local];
        let normals = cloud.normals().expect("normals ensured");
        Ok(Contact {
            finger,
            position: cloud.points()[idx],
            normal: normals[idx],
        })
    };
    ContactSet::new(vec![
        pick(Finger::Thumb, thumb_slot, -1.0)?,
        pick(Finger::Index, slots[3], 1.0)?,
        pick(Finger::Middle, slots[2], 1.0)?,
        pick(Finger::Ring, slots[1], 1.0)?,
        pick(Finger::Little, slots[0], 1.0)?,
    ])
}

/// Ordering and spacing rules a refined contact set must keep.
struct Layout {
    direction: Option<Vector3<f64>>,
    /// `ordered[k]`: little..index pair `k` was ordered in the input.
    ordered: [bool; 3],
}

const CHAIN: [Finger; 4] = [Finger::Little, Finger::Ring, Finger::Middle, Finger::Index];

impl Layout {
    fn of(set: &ContactSet) -> Self {
        let span = set.get(Finger::Index).position - set.get(Finger::Little).position;
        let direction = (span.norm() > 1e-12).then(|| span.normalize());
        let mut ordered = [false; 3];
        if let Some(d) = direction {
            for k in 0..3 {
                ordered[k] = set.get(CHAIN[k]).position.dot(&d) <= set.get(CHAIN[k + 1]).position.dot(&d);
            }
        }
        Layout { direction, ordered }
    }

    fn admits(&self, set: &ContactSet) -> bool {
        let Some(d) = self.direction else { return true };
        (0..3).all(|k| {
            !self.ordered[k]
                || set.get(CHAIN[k]).position.dot(&d) <= set.get(CHAIN[k + 1]).position.dot(&d)
        })
    }
}

/// Result of contact refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedContacts {
    pub contacts: ContactSet,
    pub report: ForceClosureReport,
    pub initial_quality: f64,
    pub iterations: usize,
}

/// Greedy local search over nearby cloud points maximizing force-closure
/// quality. Each sweep moves the single finger giving the best strict
/// improvement; ties go to the lowest (finger, point index).
///
/// Fails with `NoGraspSurface` when no visited set is force closed.
pub fn refine_contacts(
    contacts: &ContactSet,
    cloud: &PointCloud,
    config: &ContactConfig,
) -> Result<RefinedContacts> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::DegenerateCloud("empty cloud".into()));
    }
    let cloud = cloud.clone().ensure_normals();
    let normals = cloud.normals().expect("normals ensured");
    let frame = WrenchFrame::from_cloud(&cloud);
    let wrenches = |set: &ContactSet| contact_wrenches(set, config.friction, config.n_cone_samples, &frame);
    let report_for = |quality: f64| ForceClosureReport {
        closed: quality > 0.0,
        quality,
        friction_coefficient: config.friction,
    };
    // validates friction and cone sampling
    check_force_closure_in(contacts, config.friction, config.n_cone_samples, &frame)?;

    let layout = Layout::of(contacts);
    let mut current = contacts.clone();
    let (q0, mut directions) = wrench_hull(&wrenches(&current)?);
    let mut report = report_for(q0);
    let initial_quality = q0;
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        // admissible single-finger moves with their quality bounds
        let mut moves: Vec<(f64, usize, ContactSet, Vec<Wrench>)> = Vec::new();
        for finger in Finger::ALL {
            let here = current.get(finger).position;
            let mut nbrs: Vec<(f64, usize)> = cloud
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| ((p - here).norm(), i))
                .filter(|&(d, _)| d > 0.0 && d <= config.neighbor_radius)
                .collect();
            nbrs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            nbrs.truncate(config.max_candidates);
            nbrs.sort_by_key(|&(_, i)| i);
            for (_, i) in nbrs {
                let candidate = current.with_contact(Contact {
                    finger,
                    position: cloud.points()[i],
                    normal: normals[i],
                });
                if !layout.admits(&candidate) || !spacing_ok(&current, &candidate, finger, config.min_spacing) {
                    continue;
                }
                let w = wrenches(&candidate)?;
                let bound = if directions.is_empty() {
                    f64::INFINITY
                } else {
                    quality_bound(&w, &directions)
                };
                moves.push((bound, finger as usize * cloud.len() + i, candidate, w));
            }
        }
        // Best first, so the bar rises early and the support bound prunes
        // the rest. The winner is the best quality, ties to the lowest
        // (finger, point index), exactly as a full scan would pick.
        moves.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut best: Option<(f64, usize, Vec<Wrench>, ContactSet)> = None;
        for (bound, key, candidate, w) in moves {
            let to_beat = best.as_ref().map_or(report.quality, |b| b.0);
            let cutoff = to_beat * (1.0 - 1e-9);
            if bound < cutoff {
                break;
            }
            if let Some((_, _, dirs, _)) = &best {
                if !dirs.is_empty() && quality_bound(&w, dirs) < cutoff {
                    continue;
                }
            }
            let (q, dirs) = wrench_hull(&w);
            let wins = match &best {
                None => q > to_beat,
                Some((bq, bkey, _, _)) => q > *bq || (q == *bq && key < *bkey),
            };
            if wins {
                best = Some((q, key, dirs, candidate));
            }
        }
        match best {
            Some((q, _, dirs, set)) => {
                report = report_for(q);
                directions = dirs;
                current = set;
            }
            None => break,
        }
    }

    if !report.closed {
        return Err(Error::NoGraspSurface(format!(
            "no force-closed contact set found after {iterations} sweeps"
        )));
    }
    Ok(RefinedContacts {
        contacts: current,
        report,
        initial_quality,
        iterations,
    })
}

/// Pairs involving `moved` keep at least `min_spacing`, or do not shrink if
/// they were already closer than that.
fn spacing_ok(before: &ContactSet, after: &ContactSet, moved: Finger, min_spacing: f64) -> bool {
    Finger::ALL.iter().filter(|&&f| f != moved).all(|&f| {
        let old = (before.get(f).position - before.get(moved).position).norm();
        let new = (after.get(f).position - after.get(moved).position).norm();
        new >= min_spacing.min(old)
    })
}

#[cfg(test)]
mod tests;
