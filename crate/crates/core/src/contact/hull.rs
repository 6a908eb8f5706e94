//! Quickhull in D dimensions, returning the supporting hyperplanes of the
//! hull facets. Used to measure how deep the origin sits inside a grasp
//! wrench set.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use nalgebra::SVector;

/// Supporting hyperplane `normal · x = offset` with a unit outward normal.
#[derive(Debug, Clone, Copy)]
pub struct Plane<const D: usize> {
    pub normal: SVector<f64, D>,
    pub offset: f64,
}

impl<const D: usize> Plane<D> {
    fn distance(&self, p: &SVector<f64, D>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

const NONE: usize = usize::MAX;

struct Facet<const D: usize> {
    /// Sorted vertex indices.
    vertices: [usize; D],
    /// `neighbors[k]` shares the ridge opposite `vertices[k]`.
    neighbors: [usize; D],
    plane: Plane<D>,
    outside: Vec<usize>,
    alive: bool,
}

/// Hash key of a ridge. Inputs of up to 128 points use a vertex bitmask;
/// larger inputs use the vertex list with the dropped slot set to
/// `usize::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum RidgeKey<const D: usize> {
    Mask(u128),
    List([usize; D]),
}

fn ridge_key<const D: usize>(vertices: &[usize; D], skip: usize, small: bool) -> RidgeKey<D> {
    if small {
        let mask = vertices
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .fold(0u128, |m, (_, &v)| m | (1u128 << v));
        RidgeKey::Mask(mask)
    } else {
        let mut v = *vertices;
        v[skip] = NONE;
        v.sort_unstable();
        RidgeKey::List(v)
    }
}

/// Multiplicative hasher for ridge keys; SipHash dominated the hull cost.
#[derive(Default)]
struct RidgeHasher(u64);

impl Hasher for RidgeHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(buf));
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x517c_c1b7_2722_0a95);
    }

    fn write_u128(&mut self, v: u128) {
        self.write_u64(v as u64);
        self.write_u64((v >> 64) as u64);
    }

    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type RidgeMap<const D: usize> = HashMap<RidgeKey<D>, (usize, usize), BuildHasherDefault<RidgeHasher>>;

/// Links every still unlinked ridge of `ids` to the facet in `ids` that
/// shares it.
fn connect<const D: usize>(facets: &mut [Facet<D>], ids: std::ops::Range<usize>, small: bool, map: &mut RidgeMap<D>) {
    map.clear();
    for f in ids {
        for k in 0..D {
            if facets[f].neighbors[k] != NONE {
                continue;
            }
            let key = ridge_key(&facets[f].vertices, k, small);
            match map.remove(&key) {
                Some((g, l)) => {
                    facets[f].neighbors[k] = g;
                    facets[g].neighbors[l] = f;
                }
                None => {
                    map.insert(key, (f, k));
                }
            }
        }
    }
}

/// Orthonormal residual of `v` against an orthonormal `basis`.
fn residual<const D: usize>(basis: &[SVector<f64, D>], v: SVector<f64, D>) -> SVector<f64, D> {
    let mut r = v;
    // two passes of modified Gram-Schmidt for stability
    for _ in 0..2 {
        for b in basis {
            r -= b * b.dot(&r);
        }
    }
    r
}

/// Hyperplane through `D` points, oriented so `interior` lies on the
/// negative side.
fn plane_through<const D: usize>(
    pts: &[SVector<f64, D>],
    vertices: &[usize; D],
    interior: &SVector<f64, D>,
) -> Plane<D> {
    let origin = pts[vertices[0]];
    let mut basis = [SVector::<f64, D>::zeros(); D];
    let mut rank = 0;
    for &v in &vertices[1..] {
        let r = residual(&basis[..rank], pts[v] - origin);
        let n = r.norm();
        if n > 0.0 {
            basis[rank] = r / n;
            rank += 1;
        }
    }
    let basis = &basis[..rank];
    // the coordinate axis least covered by the basis has the largest residual
    let k = (0..D)
        .map(|k| (k, basis.iter().map(|b| b[k] * b[k]).sum::<f64>()))
        .fold((0, f64::INFINITY), |best, (k, c)| if c < best.1 { (k, c) } else { best })
        .0;
    let mut e = SVector::<f64, D>::zeros();
    e[k] = 1.0;
    let r = residual(basis, e);
    let normal = r / r.norm();
    let mut plane = Plane {
        normal,
        offset: normal.dot(&origin),
    };
    if plane.distance(interior) > 0.0 {
        plane.normal = -plane.normal;
        plane.offset = -plane.offset;
    }
    plane
}

/// Facet hyperplanes of the convex hull of `pts`, or `None` when the points
/// do not span D dimensions (the hull has no interior).
///
/// Points within `eps` of a facet are treated as lying on it.
pub fn convex_hull_planes<const D: usize>(pts: &[SVector<f64, D>], eps: f64) -> Option<Vec<Plane<D>>> {
    if pts.len() < D + 1 {
        return None;
    }
    let centroid = pts.iter().fold(SVector::<f64, D>::zeros(), |a, p| a + p) / pts.len() as f64;

    // Initial simplex: greedily maximize distance to the current affine hull.
    let first = (0..pts.len())
        .max_by(|&a, &b| {
            (pts[a] - centroid)
                .norm_squared()
                .total_cmp(&(pts[b] - centroid).norm_squared())
                .then(b.cmp(&a))
        })
        .expect("non-empty");
    let mut simplex = vec![first];
    let mut basis: Vec<SVector<f64, D>> = Vec::with_capacity(D);
    for _ in 0..D {
        let mut best = None;
        let mut best_dist = eps;
        for (i, p) in pts.iter().enumerate() {
            let d = residual(&basis, p - pts[first]).norm();
            if d > best_dist {
                best_dist = d;
                best = Some(i);
            }
        }
        let i = best?;
        let r = residual(&basis, pts[i] - pts[first]);
        basis.push(r / r.norm());
        simplex.push(i);
    }
    let interior = simplex.iter().fold(SVector::<f64, D>::zeros(), |a, &i| a + pts[i]) / (D + 1) as f64;

    let small = pts.len() <= 128;
    let mut map: RidgeMap<D> = HashMap::default();
    let mut facets: Vec<Facet<D>> = Vec::new();
    let new_facet = |mut vertices: [usize; D], apex: usize, across: usize| {
        vertices.sort_unstable();
        let mut neighbors = [NONE; D];
        if let Some(slot) = vertices.iter().position(|&v| v == apex) {
            neighbors[slot] = across;
        }
        Facet {
            vertices,
            neighbors,
            plane: plane_through(pts, &vertices, &interior),
            outside: Vec::new(),
            alive: true,
        }
    };

    for skip in 0..=D {
        let mut verts = [0usize; D];
        for (slot, &v) in simplex.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, v)| v).enumerate() {
            verts[slot] = v;
        }
        facets.push(new_facet(verts, NONE, NONE));
    }
    connect(&mut facets, 0..D + 1, small, &mut map);
    let mut in_simplex = vec![false; pts.len()];
    for &i in &simplex {
        in_simplex[i] = true;
    }
    for i in 0..pts.len() {
        if in_simplex[i] {
            continue;
        }
        if let Some(f) = facets.iter_mut().find(|f| f.plane.distance(&pts[i]) > eps) {
            f.outside.push(i);
        }
    }

    // 0 = unseen, 1 = visible, 2 = hidden; reset after every apex
    let mut state: Vec<u8> = Vec::new();
    let mut touched: Vec<usize> = Vec::new();
    let mut visible: Vec<usize> = Vec::new();
    let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
    let mut orphans: Vec<usize> = Vec::new();
    let mut cursor = 0;
    while cursor < facets.len() {
        if !facets[cursor].alive || facets[cursor].outside.is_empty() {
            cursor += 1;
            continue;
        }
        let start = cursor;
        let apex = *facets[start]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                let pa = facets[start].plane.distance(&pts[a]);
                let pb = facets[start].plane.distance(&pts[b]);
                pa.total_cmp(&pb).then(b.cmp(&a))
            })
            .expect("non-empty outside set");
        let apex_pt = pts[apex];

        state.resize(facets.len(), 0);
        state[start] = 1;
        touched.push(start);
        visible.clear();
        visible.push(start);
        horizon.clear();
        let mut q = 0;
        while q < visible.len() {
            let f = visible[q];
            q += 1;
            for skip in 0..D {
                let g = facets[f].neighbors[skip];
                match state[g] {
                    1 => {}
                    2 => horizon.push((f, skip, g)),
                    _ => {
                        touched.push(g);
                        if facets[g].plane.distance(&apex_pt) > eps {
                            state[g] = 1;
                            visible.push(g);
                        } else {
                            state[g] = 2;
                            horizon.push((f, skip, g));
                        }
                    }
                }
            }
        }
        for &f in &touched {
            state[f] = 0;
        }
        touched.clear();

        orphans.clear();
        for &f in &visible {
            facets[f].alive = false;
            orphans.append(&mut facets[f].outside);
        }

        // each horizon ridge plus the apex spans a new facet
        let first_new = facets.len();
        for &(f, skip, g) in &horizon {
            let mut verts = facets[f].vertices;
            verts[skip] = apex;
            let id = facets.len();
            let facet = new_facet(verts, apex, g);
            facets.push(facet);
            let back = facets[g]
                .neighbors
                .iter()
                .position(|&n| n == f)
                .expect("horizon neighbors are linked");
            facets[g].neighbors[back] = id;
        }
        let end = facets.len();
        connect(&mut facets, first_new..end, small, &mut map);

        for &i in &orphans {
            if i == apex {
                continue;
            }
            if let Some(f) = facets[first_new..]
                .iter_mut()
                .find(|f| f.plane.distance(&pts[i]) > eps)
            {
                f.outside.push(i);
            }
        }
        cursor = cursor.min(first_new);
    }

    Some(
        facets
            .into_iter()
            .filter(|f| f.alive)
            .map(|f| f.plane)
            .collect(),
    )
}
