//! Dense phase-one simplex used as an independent origin-in-hull oracle.

/// Whether `b` is a non-negative combination of the columns `cols`
/// (each of length m). Bland's rule keeps the pivoting finite.
pub fn in_cone(cols: &[Vec<f64>], b: &[f64], tol: f64) -> bool {
    let m = b.len();
    let n = cols.len();
    // tableau rows: [A | I | b], with rows flipped so b >= 0
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * cols[j][i];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = s * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // phase-one cost: sum of artificials, reduced costs over all columns
    loop {
        let reduced = |j: usize, t: &Vec<Vec<f64>>, basis: &Vec<usize>| -> f64 {
            let c = if j >= n { 1.0 } else { 0.0 };
            let z: f64 = (0..m).map(|i| if basis[i] >= n { t[i][j] } else { 0.0 }).sum();
            c - z
        };
        let Some(enter) = (0..n + m).find(|&j| !basis.contains(&j) && reduced(j, &t, &basis) < -tol) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > tol {
                let ratio = t[i][width - 1] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some((l, r)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            // unbounded in phase one cannot happen; treat as infeasible
            return false;
        };
        let p = t[row][enter];
        for v in t[row].iter_mut() {
            *v /= p;
        }
        for i in 0..m {
            if i != row {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..width {
                        t[i][j] -= f * t[row][j];
                    }
                }
            }
        }
        basis[row] = enter;
    }
    let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][width - 1]).sum();
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    infeasibility <= tol * scale
}

/// The origin is strictly inside the hull of `points` iff their cone is
/// all of R^d, which holds iff it contains the positive basis
/// e_1..e_d, −(e_1 + … + e_d).
pub fn origin_strictly_inside(points: &[Vec<f64>], tol: f64) -> bool {
    let d = points[0].len();
    let mut targets: Vec<Vec<f64>> = (0..d)
        .map(|k| (0..d).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    targets.push(vec![-1.0; d]);
    targets.iter().all(|b| in_cone(points, b, tol))
}
