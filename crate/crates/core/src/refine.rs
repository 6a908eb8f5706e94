//! Collision-aware pose refinement with a kinematic PD proxy, and the
//! pre-grasp pose derived from the refined grasp.
//!
//! Joints have unit inertia. Fingertips are spheres pushed out of the cloud
//! by linear penalty springs. A finger whose spring force exceeds the
//! threshold has the targets of its whole chain frozen.

use nalgebra::{DVector, Isometry3, Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::Finger;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::hand::{HandModel, JointState};

/// Approach offset of the pre-grasp pose (m).
pub const PREGRASP_OFFSET: f64 = 0.02;

/// Joint speeds below this count as settled (rad/s).
pub const SETTLE_SPEED: f64 = 1e-4;

/// Wrist rotation, wrist translation and joint angles.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub q: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    #[serde(rename = "R")]
    rotation: [[f64; 3]; 3],
    t: [f64; 3],
    q: Vec<f64>,
}

impl Serialize for GraspPose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = &self.rotation;
        RawPose {
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            t: self.translation.into(),
            q: self.q.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GraspPose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPose::deserialize(d)?;
        let r = raw.rotation;
        Ok(GraspPose {
            rotation: Matrix3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ),
            translation: Vector3::from(raw.t),
            q: DVector::from_vec(raw.q),
        })
    }
}

impl GraspPose {
    pub fn wrist(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            self.translation.into(),
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation)),
        )
    }

    /// Checks the rotation and joint limits.
    pub fn validate(&self, model: &HandModel) -> Result<()> {
        let r = &self.rotation;
        let defect = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(defect < 1e-9) || !((r.determinant() - 1.0).abs() < 1e-9) {
            return Err(Error::config("pose.R", "rotation is not orthonormal with det +1"));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("pose.t".into()));
        }
        model.check_vector("pose.q", &self.q)?;
        if !model.within_limits(&self.q) {
            return Err(Error::config("pose.q", "joint angles outside the limits"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub kp: f64,
    pub kd: f64,
    pub dt: f64,
    pub max_steps: usize,
    /// Force above which a finger is frozen (proxy newtons).
    pub force_threshold: f64,
    /// Penalty spring stiffness (N/m).
    pub contact_stiffness: f64,
    pub fingertip_radius: f64,
    pub penetration_tol: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            kp: 50.0,
            kd: 14.0,
            dt: 0.005,
            max_steps: 1200,
            force_threshold: 0.5,
            contact_stiffness: 1000.0,
            fingertip_radius: 0.008,
            penetration_tol: 0.001,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("refine.kp", self.kp),
            ("refine.kd", self.kd),
            ("refine.dt", self.dt),
            ("refine.force_threshold", self.force_threshold),
            ("refine.contact_stiffness", self.contact_stiffness),
            ("refine.fingertip_radius", self.fingertip_radius),
            ("refine.penetration_tol", self.penetration_tol),
        ];
        for (path, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(path, format!("must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("refine.max_steps", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    #[serde(rename = "pose")]
    pub final_pose: GraspPose,
    /// Names of frozen joints, in joint order.
    #[serde(rename = "frozen")]
    pub frozen_joints: Vec<String>,
    pub frozen_fingers: Vec<Finger>,
    /// Deepest fingertip penetration at the final state (m).
    pub max_penetration: f64,
    /// Deepest fingertip penetration seen during the run (m).
    pub peak_penetration: f64,
    #[serde(rename = "steps")]
    pub steps_used: usize,
    /// False when joint speeds had not settled by `max_steps`.
    pub settled: bool,
}

/// Per-step view handed to simulation observers.
#[derive(Debug)]
pub struct StepInfo<'a> {
    pub step: usize,
    pub q: &'a DVector<f64>,
    pub qd: &'a DVector<f64>,
    pub q_target: &'a DVector<f64>,
    pub frozen: &'a [bool],
    pub penetration: f64,
}

/// Penalty force on a fingertip sphere from the nearest cloud point. A
/// center that coincides with a point is pushed along +z.
pub fn fingertip_contact_force(
    fingertip: &Vector3<f64>,
    cloud: &PointCloud,
    stiffness: f64,
    fingertip_radius: f64,
) -> Vector3<f64> {
    let Some((i, dist)) = cloud.nearest(fingertip) else {
        return Vector3::zeros();
    };
    let depth = (fingertip_radius - dist).max(0.0);
    if depth == 0.0 {
        return Vector3::zeros();
    }
    let dir = if dist > 0.0 {
        (fingertip - cloud.points()[i]) / dist
    } else {
        Vector3::z()
    };
    dir * (stiffness * depth)
}

/// Depth of a fingertip sphere inside the surface. A center within the
/// cloud's bounding box and behind the nearest point's normal counts as
/// fully inside.
pub fn fingertip_penetration(fingertip: &Vector3<f64>, cloud: &PointCloud, fingertip_radius: f64) -> f64 {
    let Some((i, dist)) = cloud.nearest(fingertip) else {
        return 0.0;
    };
    let in_box = (0..3).all(|k| {
        let (lo, hi) = cloud
            .points()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
        fingertip[k] >= lo && fingertip[k] <= hi
    });
    let inside = in_box
        && cloud
            .normals()
            .is_some_and(|n| (fingertip - cloud.points()[i]).dot(&n[i]) < 0.0);
    if inside {
        fingertip_radius + dist
    } else {
        (fingertip_radius - dist).max(0.0)
    }
}

/// PD torque toward `q_d` (zero desired velocity) and the semi-implicit
/// Euler update of a unit-inertia joint state.
pub fn pd_step(
    model: &HandModel,
    state: &JointState,
    q_d: &DVector<f64>,
    config: &RefineConfig,
) -> (DVector<f64>, JointState) {
    let zero = DVector::zeros(model.dof());
    let qd = state.qd.as_ref().unwrap_or(&zero);
    let tau = config.kp * (q_d - &state.q) - config.kd * qd;
    let (q, qd) = integrate(model, &state.q, qd, &tau, config.dt);
    (
        tau,
        JointState {
            q,
            qd: Some(qd),
        },
    )
}

fn integrate(
    model: &HandModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tau: &DVector<f64>,
    dt: f64,
) -> (DVector<f64>, DVector<f64>) {
    let mut qd = qd + dt * tau;
    let mut q = q + dt * &qd;
    for (j, joint) in model.joints().iter().enumerate() {
        // inelastic stop at the limits
        if q[j] < joint.lower {
            q[j] = joint.lower;
            qd[j] = qd[j].max(0.0);
        } else if q[j] > joint.upper {
            q[j] = joint.upper;
            qd[j] = qd[j].min(0.0);
        }
    }
    (q, qd)
}

pub fn simulate_refinement(
    model: &HandModel,
    cloud: &PointCloud,
    initial: &GraspPose,
    q_d: &DVector<f64>,
    config: &RefineConfig,
) -> Result<RefineResult> {
    simulate_refinement_observed(model, cloud, initial, q_d, config, |_| {})
}

/// Runs the PD proxy with the wrist held at `initial`, calling `observe`
/// after every step.
pub fn simulate_refinement_observed(
    model: &HandModel,
    cloud: &PointCloud,
    initial: &GraspPose,
    q_d: &DVector<f64>,
    config: &RefineConfig,
    mut observe: impl FnMut(&StepInfo),
) -> Result<RefineResult> {
    config.validate()?;
    initial.validate(model)?;
    model.check_vector("q_d", q_d)?;
    let cloud = cloud.clone().ensure_normals();
    let wrist = initial.wrist();
    let n = model.dof();
    let tips = model.fingertips();

    let penetration = |fk: &crate::hand::FkResult| {
        fk.fingertips
            .iter()
            .map(|p| fingertip_penetration(p, &cloud, config.fingertip_radius))
            .fold(0.0, f64::max)
    };

    let mut target = model.clamp_to_limits(q_d);
    let mut frozen_joint = vec![false; n];
    let mut frozen_tip = vec![false; tips.len()];
    let mut q = initial.q.clone();
    let mut prev_q = q.clone();
    let mut qd = DVector::zeros(n);
    let mut peak: f64 = 0.0;
    let mut settled = false;
    let mut steps = 0;

    loop {
        let fk = model.fk(q.as_slice(), &wrist);
        peak = peak.max(penetration(&fk));

        let mut contact_tau = DVector::zeros(n);
        for (i, tip) in tips.iter().enumerate() {
            let f = fingertip_contact_force(&fk.fingertips[i], &cloud, config.contact_stiffness, config.fingertip_radius);
            if f.norm() > config.force_threshold && !frozen_tip[i] {
                frozen_tip[i] = true;
                for &j in &tip.chain {
                    if !frozen_joint[j] {
                        frozen_joint[j] = true;
                        target[j] = prev_q[j];
                    }
                }
            }
            if f != Vector3::zeros() {
                contact_tau += model.jacobian_from(&fk, i).transpose() * f;
            }
        }
        let tau = config.kp * (&target - &q) - config.kd * &qd + contact_tau;

        if steps > 0 && qd.amax() < SETTLE_SPEED && tau.amax() * config.dt < SETTLE_SPEED {
            settled = true;
            break;
        }
        if steps == config.max_steps {
            break;
        }
        prev_q = q.clone();
        let (nq, nqd) = integrate(model, &q, &qd, &tau, config.dt);
        q = nq;
        qd = nqd;
        steps += 1;
        observe(&StepInfo {
            step: steps,
            q: &q,
            qd: &qd,
            q_target: &target,
            frozen: &frozen_joint,
            penetration: penetration(&model.fk(q.as_slice(), &wrist)),
        });
    }

    let final_fk = model.fk(q.as_slice(), &wrist);
    let max_penetration = penetration(&final_fk);
    Ok(RefineResult {
        final_pose: GraspPose {
            rotation: initial.rotation,
            translation: initial.translation,
            q,
        },
        frozen_joints: model
            .joints()
            .iter()
            .zip(&frozen_joint)
            .filter(|(_, &f)| f)
            .map(|(j, _)| j.name.clone())
            .collect(),
        frozen_fingers: tips
            .iter()
            .zip(&frozen_tip)
            .filter(|(_, &f)| f)
            .map(|(t, _)| t.finger)
            .collect(),
        max_penetration,
        peak_penetration: peak.max(max_penetration),
        steps_used: steps,
        settled,
    })
}

/// Retreats the grasp by `offset` against `approach` and resets the
/// intermediate joints to their limit midpoints.
pub fn derive_pregrasp(g: &GraspPose, model: &HandModel, approach: &Vector3<f64>, offset: f64) -> Result<GraspPose> {
    if !((approach.norm() - 1.0).abs() < 1e-9) {
        return Err(Error::config("approach", "approach direction must be a unit vector"));
    }
    model.check_vector("pose.q", &g.q)?;
    let mut q = g.q.clone();
    for &j in model.intermediate_joints() {
        let joint = &model.joints()[j];
        q[j] = 0.5 * (joint.lower + joint.upper);
    }
    Ok(GraspPose {
        rotation: g.rotation,
        translation: g.translation - offset * approach,
        q,
    })
}
