//! Analytic surface samplers used as bundled fixtures, in tests and by the
//! `fixtures` CLI command. Every shape is centered at the origin and carries
//! exact outward normals. Random samplers are seeded and deterministic.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::PointCloud;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn build(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> PointCloud {
    PointCloud::with_normals(points, normals).expect("fixture normals are unit length")
}

/// Uniform samples on the surface of an axis-aligned box with the given
/// full extents.
pub fn box_surface(extents: [f64; 3], n: usize, seed: u64) -> PointCloud {
    let h = extents.map(|e| e / 2.0);
    let areas = [
        extents[1] * extents[2],
        extents[0] * extents[2],
        extents[0] * extents[1],
    ];
    let total = 2.0 * areas.iter().sum::<f64>();
    let mut rng = rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.random::<f64>() * total;
        let mut face = 0;
        while face < 5 && pick >= areas[face / 2] {
            pick -= areas[face / 2];
            face += 1;
        }
        let axis = face / 2;
        let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
        let mut p = Vector3::new(
            rng.random_range(-h[0]..=h[0]),
            rng.random_range(-h[1]..=h[1]),
            rng.random_range(-h[2]..=h[2]),
        );
        p[axis] = sign * h[axis];
        let mut nrm = Vector3::zeros();
        nrm[axis] = sign;
        points.push(p);
        normals.push(nrm);
    }
    build(points, normals)
}

/// Regular grid on the surface of a box; grid lines pass through the face
/// centers, so every face contains points on the coordinate planes.
pub fn box_lattice(extents: [f64; 3], spacing: f64) -> PointCloud {
    let h = extents.map(|e| e / 2.0);
    let steps = extents.map(|e| ((e / spacing / 2.0).round() as i64).max(1));
    let coord = |axis: usize, i: i64| h[axis] * i as f64 / steps[axis] as f64;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [1.0, -1.0] {
            for i in -steps[a]..=steps[a] {
                for j in -steps[b]..=steps[b] {
                    // edges belong to the face of the lowest axis only
                    let on_edge_a = i.abs() == steps[a] && a < axis;
                    let on_edge_b = j.abs() == steps[b] && b < axis;
                    if on_edge_a || on_edge_b {
                        continue;
                    }
                    let mut p = Vector3::zeros();
                    p[axis] = sign * h[axis];
                    p[a] = coord(a, i);
                    p[b] = coord(b, j);
                    let mut nrm = Vector3::zeros();
                    nrm[axis] = sign;
                    points.push(p);
                    normals.push(nrm);
                }
            }
        }
    }
    build(points, normals)
}

/// Side surface only of an upright cylinder (axis = z).
pub fn cylinder_side(radius: f64, height: f64, n: usize, seed: u64) -> PointCloud {
    elliptic_side(radius, radius, height, n, &mut rng(seed))
}

fn elliptic_side(
    a: f64,
    b: f64,
    height: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> PointCloud {
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.random::<f64>() * TAU;
        let z = rng.random_range(-height / 2.0..=height / 2.0);
        let (s, c) = t.sin_cos();
        points.push(Vector3::new(a * c, b * s, z));
        normals.push(Vector3::new(c / a, s / b, 0.0).normalize());
    }
    build(points, normals)
}

/// Closed upright cylinder: side plus both caps, area weighted.
pub fn cylinder_surface(radius: f64, height: f64, n: usize, seed: u64) -> PointCloud {
    elliptic_cylinder_surface(radius, radius, height, n, seed)
}

/// Closed upright cylinder with an elliptic section (semi-axes `a` along x,
/// `b` along y).
pub fn elliptic_cylinder_surface(a: f64, b: f64, height: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let perimeter = std::f64::consts::PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt());
    let side_area = perimeter * height;
    let cap_area = std::f64::consts::PI * a * b;
    let n_side = ((n as f64) * side_area / (side_area + 2.0 * cap_area)).round() as usize;
    let side = elliptic_side(a, b, height, n_side.min(n), &mut rng);
    let mut points = side.points().to_vec();
    let mut normals = side.normals().expect("side has normals").to_vec();
    for i in 0..n.saturating_sub(n_side) {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let r = rng.random::<f64>().sqrt();
        let t = rng.random::<f64>() * TAU;
        points.push(Vector3::new(a * r * t.cos(), b * r * t.sin(), sign * height / 2.0));
        normals.push(Vector3::new(0.0, 0.0, sign));
    }
    build(points, normals)
}

pub fn sphere_surface(radius: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let t = rng.random::<f64>() * TAU;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let dir = Vector3::new(r * t.cos(), r * t.sin(), z).normalize();
        points.push(dir * radius);
        normals.push(dir);
    }
    build(points, normals)
}

/// A flat sampled rectangle in the z = 0 plane with +z normals.
pub fn plane_patch(size_x: f64, size_y: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let points = (0..n)
        .map(|_| {
            Vector3::new(
                rng.random_range(-size_x / 2.0..=size_x / 2.0),
                rng.random_range(-size_y / 2.0..=size_y / 2.0),
                0.0,
            )
        })
        .collect();
    build(points, vec![Vector3::z(); n])
}

/// Named object fixtures bundled with the CLI and used by the pipeline
/// tests: a box, an upright cylinder and a sphere, each with `n` points.
pub fn bundled_objects(n: usize) -> Vec<(&'static str, PointCloud)> {
    vec![
        ("box", box_surface([0.06, 0.04, 0.10], n, 101)),
        ("cylinder", cylinder_surface(0.03, 0.12, n, 102)),
        ("sphere", sphere_surface(0.035, n, 103)),
    ]
}
