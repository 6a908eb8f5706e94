//! Grasp topology, wrist-frame construction and fingertip retargeting.
//!
//! The wrist frame has x along the grasp axis, y along the lateral axis and
//! z along the palm normal. Retargeting solves a box-constrained least
//! squares problem with a projected Levenberg-Marquardt iteration.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::{ContactSet, Finger};
use crate::error::{Error, Result};
use crate::geometry::sorted_eigen;
use crate::hand::HandModel;

pub const DEFAULT_ROLL_DEG: f64 = 10.0;
pub const DEFAULT_PITCH_DEG: f64 = 20.0;
pub const DEFAULT_WRIST_OFFSET: f64 = 0.03;

/// Palm normal, grasp axis and lateral axis extracted from a contact set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspTopology {
    pub contacts: ContactSet,
    pub palm_normal: Vector3<f64>,
    pub grasp_axis: Vector3<f64>,
    pub lateral_axis: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WristParams {
    /// Offset of the wrist from the palm center along the wrist y axis (m).
    pub y_d: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
}

impl Default for WristParams {
    fn default() -> Self {
        Self {
            y_d: DEFAULT_WRIST_OFFSET,
            roll_deg: DEFAULT_ROLL_DEG,
            pitch_deg: DEFAULT_PITCH_DEG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristFrame {
    /// Wrist-to-world rotation.
    pub rotation: Matrix3<f64>,
    pub origin: Vector3<f64>,
    pub palm_origin: Vector3<f64>,
    pub contact_center: Vector3<f64>,
}

impl WristFrame {
    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            self.origin.into(),
            nalgebra::UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation)),
        )
    }

    pub fn to_wrist(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.origin)
    }

    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.origin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetargetConfig {
    pub alpha: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.05,
            max_iters: 200,
            tol: 1e-8,
        }
    }
}

impl RetargetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("retarget.alpha", "must be positive"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("retarget.beta", "must be non-negative"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("retarget.tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetSolution {
    pub q: DVector<f64>,
    /// Sum of squared fingertip errors (m²), smoothness term excluded.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    #[serde(skip)]
    pub objective_history: Vec<f64>,
}

fn unit(v: Vector3<f64>, what: &str) -> Result<Vector3<f64>> {
    let n = v.norm();
    if n > 1e-12 {
        Ok(v / n)
    } else {
        Err(Error::DegenerateContacts(format!("{what} is undefined")))
    }
}

pub fn extract_topology(contacts: &ContactSet, object_centroid: &Vector3<f64>) -> Result<GraspTopology> {
    let mean = contacts.centroid();
    let mut cov = Matrix3::zeros();
    for c in contacts.iter() {
        let d = c.position - mean;
        cov += d * d.transpose();
    }
    cov /= 5.0;
    let (values, vectors) = sorted_eigen(cov);
    if !(values[0] > 0.0) || values[1] <= 1e-12 * values[0] {
        return Err(Error::DegenerateContacts("contact positions are collinear".into()));
    }
    let mut n = vectors[2];
    let scale = values[0].sqrt();

    let middle = contacts.get(Finger::Middle).position;
    let little = contacts.get(Finger::Little).position;
    let toward_middle = middle - mean;
    let d = unit(toward_middle - n * n.dot(&toward_middle), "grasp axis")?;

    let side = n.dot(&(mean - object_centroid));
    if side.abs() > 1e-9 * scale {
        if side < 0.0 {
            n = -n;
        }
    } else {
        // contacts centered on the object: pick the side that keeps
        // middle-to-little along +y
        if d.cross(&(little - middle)).dot(&n) < 0.0 {
            n = -n;
        }
    }
    let u = n.cross(&d);
    Ok(GraspTopology {
        contacts: contacts.clone(),
        palm_normal: n,
        grasp_axis: d,
        lateral_axis: u,
    })
}

/// Rotation about the x axis by `deg` degrees.
pub fn roll_matrix(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation about the y axis by `deg` degrees.
pub fn pitch_matrix(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn compute_wrist_frame(topology: &GraspTopology, l_p: f64, params: &WristParams) -> WristFrame {
    assert!(l_p > 0.0, "middle finger length must be positive");
    let base = Matrix3::from_columns(&[topology.grasp_axis, topology.lateral_axis, topology.palm_normal]);
    let rotation = base * roll_matrix(params.roll_deg) * pitch_matrix(params.pitch_deg);
    let contact_center = topology.contacts.centroid();
    let palm_origin = contact_center + Vector3::new(0.0, 0.0, 0.75 * l_p);
    let origin = palm_origin + params.y_d * (rotation * Vector3::y());
    WristFrame {
        rotation,
        origin,
        palm_origin,
        contact_center,
    }
}

pub fn transform_contacts_to_wrist(contacts: &ContactSet, frame: &WristFrame) -> ContactSet {
    contacts.map(|p| frame.to_wrist(p), |n| frame.rotation.transpose() * n)
}

struct Problem<'a> {
    model: &'a HandModel,
    targets: Vec<Vector3<f64>>,
    q_prev: &'a DVector<f64>,
    sqrt_beta: f64,
}

impl Problem<'_> {
    fn rows(&self) -> usize {
        3 * self.targets.len() + if self.sqrt_beta > 0.0 { self.q_prev.len() } else { 0 }
    }

    /// Residual vector, its Jacobian and the fingertip part of the objective.
    fn evaluate(&self, q: &DVector<f64>, with_jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>, f64) {
        let k = q.len();
        let fk = self.model.fk(q.as_slice(), &Isometry3::identity());
        let mut r = DVector::zeros(self.rows());
        let mut jac = with_jacobian.then(|| DMatrix::zeros(self.rows(), k));
        let mut tip_sq = 0.0;
        for (i, target) in self.targets.iter().enumerate() {
            let e = target - fk.fingertips[i];
            tip_sq += e.norm_squared();
            r.fixed_rows_mut::<3>(3 * i).copy_from(&e);
            if let Some(jac) = jac.as_mut() {
                let ji = self.model.jacobian_from(&fk, i);
                jac.view_mut((3 * i, 0), (3, k)).copy_from(&(-ji));
            }
        }
        if self.sqrt_beta > 0.0 {
            let off = 3 * self.targets.len();
            for j in 0..k {
                r[off + j] = self.sqrt_beta * (q[j] - self.q_prev[j]);
                if let Some(jac) = jac.as_mut() {
                    jac[(off + j, j)] = self.sqrt_beta;
                }
            }
        }
        (r, jac, tip_sq)
    }
}

/// Box-constrained retargeting of fingertips onto `alpha`-scaled targets.
///
/// `targets` pairs a finger label with a wrist-frame position; every
/// fingertip of the model needs one.
pub fn solve_retarget(
    model: &HandModel,
    targets: &[(Finger, Vector3<f64>)],
    q_prev: &DVector<f64>,
    config: &RetargetConfig,
) -> Result<RetargetSolution> {
    config.validate()?;
    model.check_vector("q_prev", q_prev)?;
    if !model.within_limits(q_prev) {
        return Err(Error::config("q_prev", "previous joint vector is outside the limits"));
    }
    let mut scaled = Vec::with_capacity(model.fingertips().len());
    for tip in model.fingertips() {
        let v = targets
            .iter()
            .find(|(f, _)| *f == tip.finger)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::InvalidContacts(format!("no target for {}", tip.finger)))?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite(format!("target for {}", tip.finger)));
        }
        scaled.push(config.alpha * v);
    }
    let problem = Problem {
        model,
        targets: scaled,
        q_prev,
        sqrt_beta: config.beta.sqrt(),
    };
    let lower = model.lower();
    let upper = model.upper();
    let project = |q: &DVector<f64>| q.zip_zip_map(&lower, &upper, |v, l, u| v.clamp(l, u));
    let objective = |r: &DVector<f64>| -> Result<f64> {
        let f = r.norm_squared();
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFinite("retargeting objective".into()))
        }
    };

    let k = model.dof();
    let mut q = q_prev.clone();
    let (mut r, _, mut tip_sq) = problem.evaluate(&q, false);
    let mut f = objective(&r)?;
    let mut history = vec![f];
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        let (_, jac, _) = problem.evaluate(&q, true);
        let jac = jac.expect("jacobian requested");
        let grad = 2.0 * jac.transpose() * &r;
        let pg = (&q - project(&(&q - &grad))).norm();
        if pg < config.tol {
            converged = true;
            break;
        }
        iterations += 1;

        // variables pinned at a bound by the gradient stay fixed
        let free: Vec<usize> = (0..k)
            .filter(|&j| !((q[j] <= lower[j] && grad[j] > 0.0) || (q[j] >= upper[j] && grad[j] < 0.0)))
            .collect();
        let jf = jac.select_columns(&free);
        let jtj = jf.transpose() * &jf;
        let jtr = jf.transpose() * &r;

        let mut accepted = None;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for d in 0..free.len() {
                a[(d, d)] += mu * (jtj[(d, d)] + 1e-12);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let delta_free = chol.solve(&(-&jtr));
            let mut delta = DVector::zeros(k);
            for (d, &j) in free.iter().enumerate() {
                delta[j] = delta_free[d];
            }
            // backtracking along the projected path
            let mut t = 1.0;
            for _ in 0..30 {
                let cand = project(&(&q + t * &delta));
                let (rc, _, tc) = problem.evaluate(&cand, false);
                let fc = objective(&rc)?;
                if fc < f + 1e-4 * grad.dot(&(&cand - &q)) && fc < f {
                    accepted = Some((cand, rc, fc, tc));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                mu = (mu / 3.0).max(1e-12);
                break;
            }
            mu *= 10.0;
        }

        let Some((cand, rc, fc, tc)) = accepted else {
            break;
        };
        let step = (&cand - &q).norm();
        q = cand;
        r = rc;
        f = fc;
        tip_sq = tc;
        history.push(f);
        if step < config.tol {
            converged = true;
            break;
        }
    }

    Ok(RetargetSolution {
        q,
        residual: tip_sq,
        iterations,
        converged,
        objective_history: history,
    })
}

/// Full retargeting of a world-frame contact set: topology, wrist frame,
/// wrist-frame targets and joint solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Retargeted {
    pub topology: GraspTopology,
    pub frame: WristFrame,
    pub wrist_contacts: ContactSet,
    pub solution: RetargetSolution,
}

pub fn retarget(
    model: &HandModel,
    contacts: &ContactSet,
    object_centroid: &Vector3<f64>,
    params: &WristParams,
    q_prev: &DVector<f64>,
    config: &RetargetConfig,
) -> Result<Retargeted> {
    let topology = extract_topology(contacts, object_centroid)?;
    let frame = compute_wrist_frame(&topology, model.middle_finger_length(), params);
    let wrist_contacts = transform_contacts_to_wrist(contacts, &frame);
    let targets: Vec<(Finger, Vector3<f64>)> = wrist_contacts.iter().map(|c| (c.finger, c.position)).collect();
    let solution = solve_retarget(model, &targets, q_prev, config)?;
    Ok(Retargeted {
        topology,
        frame,
        wrist_contacts,
        solution,
    })
}
