//! Point-cloud primitives: principal-axis analysis, canonical alignment and
//! slicing along an axis.
//!
//! All functions are pure. Covariance uses population (1/N) normalization.

pub mod io;

use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on normal lengths accepted by [`PointCloud::with_normals`].
pub const NORMAL_TOL: f64 = 1e-6;

/// Default variance-ratio threshold used by [`detect_cylindricality`].
pub const DEFAULT_CYLINDER_RATIO: f64 = 1.5;

/// Neighbor count used when normals have to be estimated.
pub const NORMAL_NEIGHBORS: usize = 16;

/// A set of 3D points in meters with optional unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self {
            points,
            normals: None,
        }
    }

    pub fn with_normals(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::DegenerateCloud(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        if let Some(i) = normals
            .iter()
            .position(|n| (n.norm() - 1.0).abs() > NORMAL_TOL)
        {
            return Err(Error::DegenerateCloud(format!(
                "normal {i} is not unit length (|n| = {})",
                normals[i].norm()
            )));
        }
        Ok(Self {
            points,
            normals: Some(normals),
        })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p);
        sum / self.points.len().max(1) as f64
    }

    /// Largest distance of any point from the centroid.
    pub fn max_radius(&self) -> f64 {
        let c = self.centroid();
        self.points
            .iter()
            .map(|p| (p - c).norm())
            .fold(0.0, f64::max)
    }

    /// Applies `p -> rotation * (p - center)`; normals are rotated.
    pub fn transformed(&self, rotation: &Matrix3<f64>, center: &Vector3<f64>) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| rotation * (p - center)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| rotation * n).collect()),
        }
    }

    pub fn scaled(&self, factor: f64) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| p * factor).collect(),
            normals: self.normals.clone(),
        }
    }

    /// Returns a cloud that carries normals, estimating them when absent.
    pub fn ensure_normals(self) -> PointCloud {
        if self.normals.is_some() {
            return self;
        }
        let normals = estimate_normals(&self, NORMAL_NEIGHBORS);
        PointCloud {
            points: self.points,
            normals: Some(normals),
        }
    }

    /// Index and distance of the point nearest to `query`. Ties go to the
    /// lowest index. `None` for an empty cloud.
    pub fn nearest(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.points.iter().enumerate() {
            let d2 = (p - query).norm_squared();
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

/// PCA result: centroid plus orthonormal axes sorted by descending variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalAxes {
    pub centroid: Vector3<f64>,
    pub axes: [Vector3<f64>; 3],
    pub variances: [f64; 3],
}

impl PrincipalAxes {
    pub fn major(&self) -> Vector3<f64> {
        self.axes[0]
    }
}

/// Rotation that takes a centered cloud into its canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPose {
    pub rotation: Matrix3<f64>,
    pub cylindrical: bool,
    /// Centroid subtracted before rotating.
    pub centroid: Vector3<f64>,
}

impl CanonicalPose {
    /// Maps a world point into the canonical frame.
    pub fn to_canonical(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.centroid)
    }

    /// Maps a canonical-frame point back to the world frame.
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * p + self.centroid
    }

    /// Rotation angle about +z in radians; meaningful for cylindrical poses.
    pub fn z_angle(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }
}

fn covariance(points: &[Vector3<f64>], centroid: &Vector3<f64>) -> Matrix3<f64> {
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov / points.len() as f64
}

/// Flips `v` so its largest-magnitude component is positive (first index wins ties).
pub(crate) fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let mut idx = 0;
    for i in 1..3 {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        -v
    } else {
        v
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix, eigenpairs sorted by
/// descending eigenvalue and eigenvectors sign-canonicalized.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.map(|i| eig.eigenvalues[i].max(0.0));
    let vectors = order.map(|i| canonical_sign(eig.eigenvectors.column(i).normalize()));
    (values, vectors)
}

pub fn compute_pca(cloud: &PointCloud) -> Result<PrincipalAxes> {
    if cloud.len() < 3 {
        return Err(Error::DegenerateCloud(format!(
            "PCA needs at least 3 points, got {}",
            cloud.len()
        )));
    }
    let centroid = cloud.centroid();
    let cov = covariance(cloud.points(), &centroid);
    if !cov.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateCloud("non-finite coordinates".into()));
    }
    let (variances, axes) = sorted_eigen(cov);
    if variances[0] <= f64::MIN_POSITIVE || variances[1] <= 1e-12 * variances[0] {
        return Err(Error::DegenerateCloud(
            "points are coincident or collinear".into(),
        ));
    }
    Ok(PrincipalAxes {
        centroid,
        axes,
        variances,
    })
}

/// True when the two minor variances are nearly equal while the major one
/// stands out, i.e. the cloud looks like a solid of revolution.
pub fn detect_cylindricality(axes: &PrincipalAxes, ratio_threshold: f64) -> bool {
    let [l1, l2, l3] = axes.variances;
    if l3 <= 0.0 || l2 <= 0.0 {
        return false;
    }
    l2 / l3 <= ratio_threshold && l1 / l2 > ratio_threshold
}

/// Picks axis signs so the canonical rotation is proper and as close to the
/// identity as possible, keeping `axes[0]` mapped onto +x.
fn full_alignment(axes: &[Vector3<f64>; 3]) -> Matrix3<f64> {
    let base = Matrix3::from_rows(&[
        axes[0].transpose(),
        axes[1].transpose(),
        axes[2].transpose(),
    ]);
    let det_sign = base.determinant().signum();
    let candidate = |s1: f64| {
        let s2 = s1 * det_sign;
        Matrix3::from_rows(&[
            axes[0].transpose(),
            (axes[1] * s1).transpose(),
            (axes[2] * s2).transpose(),
        ])
    };
    let pos = candidate(1.0);
    let neg = candidate(-1.0);
    if neg.trace() > pos.trace() {
        neg
    } else {
        pos
    }
}

/// Z-only rotation aligning the horizontal direction of the cloud with +x.
fn z_alignment(axes: &[Vector3<f64>; 3]) -> Matrix3<f64> {
    let vertical_cos = std::f64::consts::FRAC_1_SQRT_2;
    let reference = if axes[0].z.abs() >= vertical_cos {
        axes[1]
    } else {
        axes[0]
    };
    let mut angle = reference.y.atan2(reference.x);
    // ±reference describe the same line; keep the smaller rotation.
    let half_pi = std::f64::consts::FRAC_PI_2;
    if angle > half_pi {
        angle -= std::f64::consts::PI;
    } else if angle <= -half_pi {
        angle += std::f64::consts::PI;
    }
    Rotation3::from_axis_angle(&Vector3::z_axis(), -angle).into_inner()
}

/// Centers the cloud and rotates it into its canonical orientation.
pub fn canonicalize(
    cloud: &PointCloud,
    axes: &PrincipalAxes,
    cylindrical: bool,
) -> Result<(PointCloud, CanonicalPose)> {
    if cloud.len() < 3 {
        return Err(Error::DegenerateCloud("cannot canonicalize fewer than 3 points".into()));
    }
    let rotation = if cylindrical {
        z_alignment(&axes.axes)
    } else {
        full_alignment(&axes.axes)
    };
    let pose = CanonicalPose {
        rotation,
        cylindrical,
        centroid: axes.centroid,
    };
    Ok((cloud.transformed(&rotation, &axes.centroid), pose))
}

/// Partitions point indices into `n_slices` equal-width bands along `axis`.
/// Bands are half-open except the last, which is closed.
pub fn slice_cloud(
    cloud: &PointCloud,
    axis: &Vector3<f64>,
    n_slices: usize,
) -> Result<Vec<Vec<usize>>> {
    if n_slices == 0 {
        return Err(Error::DegenerateCloud("n_slices must be at least 1".into()));
    }
    let proj: Vec<f64> = cloud.points().iter().map(|p| p.dot(axis)).collect();
    let (lo, hi) = proj
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if !(span > 1e-12) {
        return Err(Error::DegenerateCloud(
            "projection span along slicing axis is zero".into(),
        ));
    }
    let width = span / n_slices as f64;
    let mut slices = vec![Vec::new(); n_slices];
    for (i, v) in proj.iter().enumerate() {
        let idx = (((v - lo) / width).floor() as usize).min(n_slices - 1);
        slices[idx].push(i);
    }
    Ok(slices)
}

/// Plane-fit normals over the `k` nearest neighbors, oriented away from the
/// cloud centroid.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Vec<Vector3<f64>> {
    let pts = cloud.points();
    let centroid = cloud.centroid();
    let k = k.min(pts.len()).max(1);
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(pts.len());
    pts.iter()
        .map(|p| {
            dists.clear();
            dists.extend(pts.iter().enumerate().map(|(j, q)| ((q - p).norm_squared(), j)));
            let nth = (k - 1).min(dists.len() - 1);
            dists.select_nth_unstable_by(nth, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let nbrs = &dists[..=nth];
            let mean = nbrs
                .iter()
                .fold(Vector3::zeros(), |acc, &(_, j)| acc + pts[j])
                / nbrs.len() as f64;
            let mut cov = Matrix3::zeros();
            for &(_, j) in nbrs {
                let d = pts[j] - mean;
                cov += d * d.transpose();
            }
            let (_, vecs) = sorted_eigen(cov);
            let mut n = vecs[2];
            let outward = p - centroid;
            let s = n.dot(&outward);
            if s < 0.0 {
                n = -n;
            } else if s == 0.0 {
                n = canonical_sign(n);
            }
            n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn rot_z(deg: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), deg.to_radians()).into_inner()
    }

    #[test]
    fn elongated_box_major_axis_is_x() {
        let cloud = fixtures::box_surface([2.0, 1.0, 0.5], 3000, 1);
        let pca = compute_pca(&cloud).unwrap();
        assert_abs_diff_eq!(pca.axes[0], Vector3::x(), epsilon = 0.05);
        assert!(pca.axes[0].x > 0.0);
    }

    #[test]
    fn repeated_point_is_degenerate() {
        let cloud = PointCloud::new(vec![Vector3::new(0.1, 0.2, 0.3); 5]);
        assert!(matches!(compute_pca(&cloud), Err(Error::DegenerateCloud(_))));
    }

    #[test]
    fn collinear_and_tiny_clouds_are_degenerate() {
        let line = PointCloud::new((0..10).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0)).collect());
        assert!(matches!(compute_pca(&line), Err(Error::DegenerateCloud(_))));
        let two = PointCloud::new(vec![Vector3::zeros(), Vector3::x()]);
        assert!(matches!(compute_pca(&two), Err(Error::DegenerateCloud(_))));
    }

    #[test]
    fn upright_cylinder_axis_and_cylindricality() {
        let cloud = fixtures::cylinder_surface(0.03, 0.3, 1000, 11);
        let pca = compute_pca(&cloud).unwrap();
        let angle = pca.axes[0].dot(&Vector3::z()).abs().acos().to_degrees();
        assert!(angle < 2.0, "major axis {angle} deg from z");
        assert!(detect_cylindricality(&pca, DEFAULT_CYLINDER_RATIO));
    }

    #[test]
    fn cube_and_plate_are_not_cylindrical() {
        let cube = fixtures::box_surface([1.0, 1.0, 1.0], 4000, 3);
        assert!(!detect_cylindricality(&compute_pca(&cube).unwrap(), 1.5));
        let plate = fixtures::box_surface([2.0, 2.0, 0.05], 4000, 4);
        assert!(!detect_cylindricality(&compute_pca(&plate).unwrap(), 1.5));
    }

    #[test]
    fn canonical_box_gives_identity() {
        let cloud = fixtures::box_surface([2.0, 1.0, 0.5], 3000, 5);
        let pca = compute_pca(&cloud).unwrap();
        let (_, pose) = canonicalize(&cloud, &pca, false).unwrap();
        assert_abs_diff_eq!(pose.rotation, Matrix3::identity(), epsilon = 0.03);
    }

    #[test]
    fn box_rotated_about_z_recovers_inverse_rotation() {
        let base = fixtures::box_lattice([2.0, 1.0, 0.5], 0.05);
        let rotated = base.transformed(&rot_z(90.0), &Vector3::zeros());
        let pca = compute_pca(&rotated).unwrap();
        let (canon, pose) = canonicalize(&rotated, &pca, false).unwrap();
        assert_abs_diff_eq!(pose.rotation, rot_z(-90.0), epsilon = 1e-9);
        assert!((pose.rotation.determinant() - 1.0).abs() < 1e-9);
        // canonicalizing again is the identity
        let pca2 = compute_pca(&canon).unwrap();
        let (_, pose2) = canonicalize(&canon, &pca2, false).unwrap();
        assert_abs_diff_eq!(pose2.rotation, Matrix3::identity(), epsilon = 1e-6);
    }

    #[test]
    fn cylinder_rotation_is_recovered_about_z() {
        // slightly elliptic section fixes the in-plane direction
        let base = fixtures::elliptic_cylinder_surface(0.03, 0.026, 0.3, 4000, 8);
        let pca0 = compute_pca(&base).unwrap();
        assert!(detect_cylindricality(&pca0, 1.5));
        let rotated = base.transformed(&rot_z(30.0), &Vector3::zeros());
        let pca = compute_pca(&rotated).unwrap();
        let (_, pose) = canonicalize(&rotated, &pca, true).unwrap();
        assert!(pose.cylindrical);
        assert_abs_diff_eq!(pose.rotation * Vector3::z(), Vector3::z(), epsilon = 1e-12);
        let (_, base_pose) = canonicalize(&base, &pca0, true).unwrap();
        let delta = (pose.z_angle() - base_pose.z_angle()).to_degrees();
        assert!((delta + 30.0).abs() < 1.0, "recovered {delta} deg");
    }

    #[test]
    fn slicing_examples() {
        let pts = (0..10)
            .map(|i| Vector3::new(0.0, 0.0, 0.05 + 0.1 * i as f64))
            .collect();
        let cloud = PointCloud::new(pts);
        let slices = slice_cloud(&cloud, &Vector3::z(), 10).unwrap();
        assert!(slices.iter().all(|s| s.len() == 1));
        let one = slice_cloud(&cloud, &Vector3::z(), 1).unwrap();
        assert_eq!(one, vec![(0..10).collect::<Vec<_>>()]);
        assert!(slice_cloud(&cloud, &Vector3::x(), 4).is_err());
        assert!(slice_cloud(&cloud, &Vector3::z(), 0).is_err());
    }

    #[test]
    fn cylinder_slices_are_balanced() {
        let cloud = fixtures::cylinder_side(0.03, 0.3, 2000, 21);
        let slices = slice_cloud(&cloud, &Vector3::z(), 8).unwrap();
        let expected = 2000.0 / 8.0;
        for s in &slices {
            assert!((s.len() as f64 - expected).abs() <= 0.2 * expected, "{}", s.len());
        }
    }

    #[test]
    fn estimated_normals_on_sphere_are_radial() {
        let sphere = fixtures::sphere_surface(0.03, 1500, 2);
        let bare = PointCloud::new(sphere.points().to_vec());
        let normals = estimate_normals(&bare, NORMAL_NEIGHBORS);
        let mut errs: Vec<f64> = bare
            .points()
            .iter()
            .zip(&normals)
            .map(|(p, n)| n.dot(&p.normalize()).min(1.0).acos().to_degrees())
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[errs.len() / 2] < 2.0);
        assert!(errs[errs.len() * 99 / 100] < 5.0);
        assert!(errs[errs.len() - 1] < 10.0);
    }

    #[test]
    fn with_normals_rejects_non_unit() {
        let pts = vec![Vector3::zeros()];
        assert!(PointCloud::with_normals(pts.clone(), vec![Vector3::new(0.0, 0.0, 2.0)]).is_err());
        assert!(PointCloud::with_normals(pts, vec![Vector3::z()]).is_ok());
    }
}
