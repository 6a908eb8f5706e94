//! Config-driven kinematic hand model: revolute joint tree rooted at the
//! wrist, forward kinematics, fingertip Jacobians and joint limits.
//!
//! Joint vectors follow the joint order of the config document.

use nalgebra::{DVector, Isometry3, Matrix3xX, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::Finger;
use crate::error::{Error, Result};

/// Name of the root link every chain starts from.
pub const ROOT_LINK: &str = "wrist";

const PLANAR_TWO_LINK: &str = include_str!("../assets/planar_two_link.json");
const FIVE_FINGER: &str = include_str!("../assets/five_finger.json");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    /// Fixed-axis roll, pitch, yaw in radians.
    #[serde(default)]
    pub rpy: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub axis: [f64; 3],
    #[serde(default)]
    pub origin: OriginSpec,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingertipSpec {
    pub finger: Finger,
    pub link: String,
    #[serde(default)]
    pub offset: [f64; 3],
}

/// The JSON document describing a hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandConfig {
    pub name: String,
    /// Anatomical middle-finger length in meters.
    pub middle_finger_length: f64,
    pub joints: Vec<JointSpec>,
    pub fingertips: Vec<FingertipSpec>,
    /// Joints reset to their limit midpoints in the pre-grasp pose.
    #[serde(default)]
    pub intermediate_joints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    /// Index of the joint that moves the parent link, `None` at the wrist.
    pub parent: Option<usize>,
    pub axis: Unit<Vector3<f64>>,
    pub origin: Isometry3<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingertip {
    pub finger: Finger,
    /// Joint whose child link carries the tip, `None` if fixed to the wrist.
    pub joint: Option<usize>,
    pub offset: Vector3<f64>,
    /// Joints from the root to the tip, root first.
    pub chain: Vec<usize>,
}

/// Validated, immutable hand model.
#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    config: HandConfig,
    joints: Vec<Joint>,
    fingertips: Vec<Fingertip>,
    order: Vec<usize>,
    intermediate: Vec<usize>,
}

/// Joint positions (and optionally velocities) for a particular model.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: Option<DVector<f64>>,
}

impl JointState {
    pub fn new(model: &HandModel, q: DVector<f64>) -> Result<Self> {
        model.check_vector("q", &q)?;
        Ok(Self { q, qd: None })
    }

    pub fn with_velocity(model: &HandModel, q: DVector<f64>, qd: DVector<f64>) -> Result<Self> {
        model.check_vector("q", &q)?;
        model.check_vector("qd", &qd)?;
        Ok(Self { q, qd: Some(qd) })
    }
}

/// Link frames and fingertip positions for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FkResult {
    /// Child-link pose of every joint, in joint order.
    pub links: Vec<Isometry3<f64>>,
    /// Frame in which each joint rotates (parent pose composed with origin).
    pub joint_frames: Vec<Isometry3<f64>>,
    /// Fingertip positions in model fingertip order.
    pub fingertips: Vec<Vector3<f64>>,
}

fn origin_isometry(o: &OriginSpec) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(o.xyz[0], o.xyz[1], o.xyz[2]),
        UnitQuaternion::from_euler_angles(o.rpy[0], o.rpy[1], o.rpy[2]),
    )
}

fn finite3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl HandModel {
    /// Parses and validates a hand config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: HandConfig = serde_json::from_str(text).map_err(|e| Error::config("$", e.to_string()))?;
        Self::from_config(config)
    }

    pub fn from_config(config: HandConfig) -> Result<Self> {
        let lp = config.middle_finger_length;
        if !(lp > 0.0 && lp.is_finite()) {
            return Err(Error::config("middle_finger_length", format!("must be positive, got {lp}")));
        }
        if config.joints.is_empty() {
            return Err(Error::config("joints", "at least one joint is required"));
        }

        let mut child_of = std::collections::HashMap::new();
        for (i, j) in config.joints.iter().enumerate() {
            let path = format!("joints[{i}]");
            if config.joints[..i].iter().any(|k| k.name == j.name) {
                return Err(Error::config(format!("{path}.name"), format!("duplicate joint `{}`", j.name)));
            }
            if j.child == ROOT_LINK || child_of.insert(j.child.clone(), i).is_some() {
                return Err(Error::config(
                    format!("{path}.child"),
                    format!("link `{}` already has a parent", j.child),
                ));
            }
        }

        let mut joints = Vec::with_capacity(config.joints.len());
        for (i, j) in config.joints.iter().enumerate() {
            let path = format!("joints[{i}]");
            let parent = if j.parent == ROOT_LINK {
                None
            } else {
                Some(*child_of.get(&j.parent).ok_or_else(|| {
                    Error::config(format!("{path}.parent"), format!("unknown link `{}`", j.parent))
                })?)
            };
            if !finite3(&j.axis) {
                return Err(Error::config(format!("{path}.axis"), "non-finite axis"));
            }
            let axis = Vector3::from(j.axis);
            let axis = Unit::try_new(axis, 1e-12)
                .ok_or_else(|| Error::config(format!("{path}.axis"), "axis must be non-zero"))?;
            if !finite3(&j.origin.xyz) || !finite3(&j.origin.rpy) {
                return Err(Error::config(format!("{path}.origin"), "non-finite origin"));
            }
            if !(j.lower.is_finite() && j.upper.is_finite()) {
                return Err(Error::config(format!("{path}.lower"), "limits must be finite"));
            }
            if j.lower > j.upper {
                return Err(Error::config(
                    format!("{path}.lower"),
                    format!("joint `{}` has lower limit {} above upper limit {}", j.name, j.lower, j.upper),
                ));
            }
            joints.push(Joint {
                name: j.name.clone(),
                parent,
                axis,
                origin: origin_isometry(&j.origin),
                lower: j.lower,
                upper: j.upper,
            });
        }

        // Every joint must reach the wrist without revisiting a joint.
        let mut depth = vec![0usize; joints.len()];
        for i in 0..joints.len() {
            let mut k = i;
            let mut steps = 0;
            while let Some(p) = joints[k].parent {
                steps += 1;
                if steps > joints.len() {
                    return Err(Error::config(
                        format!("joints[{i}].parent"),
                        format!("joint `{}` is part of a cycle", joints[i].name),
                    ));
                }
                k = p;
            }
            depth[i] = steps;
        }
        let mut order: Vec<usize> = (0..joints.len()).collect();
        order.sort_by_key(|&i| (depth[i], i));

        if config.fingertips.is_empty() || config.fingertips.len() > Finger::ALL.len() {
            return Err(Error::config("fingertips", "expected between 1 and 5 fingertips"));
        }
        let mut fingertips = Vec::with_capacity(config.fingertips.len());
        for (i, t) in config.fingertips.iter().enumerate() {
            let path = format!("fingertips[{i}]");
            if config.fingertips[..i].iter().any(|u| u.finger == t.finger) {
                return Err(Error::config(format!("{path}.finger"), format!("duplicate finger `{}`", t.finger)));
            }
            let joint = if t.link == ROOT_LINK {
                None
            } else {
                Some(*child_of.get(&t.link).ok_or_else(|| {
                    Error::config(format!("{path}.link"), format!("unknown link `{}`", t.link))
                })?)
            };
            if !finite3(&t.offset) {
                return Err(Error::config(format!("{path}.offset"), "non-finite offset"));
            }
            let mut chain = Vec::new();
            let mut k = joint;
            while let Some(j) = k {
                chain.push(j);
                k = joints[j].parent;
            }
            chain.reverse();
            fingertips.push(Fingertip {
                finger: t.finger,
                joint,
                offset: Vector3::from(t.offset),
                chain,
            });
        }

        let mut intermediate = Vec::with_capacity(config.intermediate_joints.len());
        for (i, name) in config.intermediate_joints.iter().enumerate() {
            let idx = joints.iter().position(|j| &j.name == name).ok_or_else(|| {
                Error::config(format!("intermediate_joints[{i}]"), format!("unknown joint `{name}`"))
            })?;
            intermediate.push(idx);
        }

        Ok(Self {
            config,
            joints,
            fingertips,
            order,
            intermediate,
        })
    }

    /// Bundled two-joint planar arm with link lengths 0.04 and 0.03 and one
    /// fingertip.
    pub fn planar_two_link() -> Self {
        Self::from_json(PLANAR_TWO_LINK).expect("bundled planar hand is valid")
    }

    /// Bundled 16-joint five-finger hand.
    pub fn five_finger() -> Self {
        Self::from_json(FIVE_FINGER).expect("bundled five-finger hand is valid")
    }

    pub fn config(&self) -> &HandConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn fingertips(&self) -> &[Fingertip] {
        &self.fingertips
    }

    pub fn fingertip_index(&self, finger: Finger) -> Option<usize> {
        self.fingertips.iter().position(|t| t.finger == finger)
    }

    pub fn middle_finger_length(&self) -> f64 {
        self.config.middle_finger_length
    }

    pub fn intermediate_joints(&self) -> &[usize] {
        &self.intermediate
    }

    pub fn lower(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.lower))
    }

    pub fn upper(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.upper))
    }

    pub fn midpoints(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| 0.5 * (j.lower + j.upper)))
    }

    pub fn within_limits(&self, q: &DVector<f64>) -> bool {
        q.len() == self.dof()
            && q.iter()
                .zip(&self.joints)
                .all(|(v, j)| *v >= j.lower && *v <= j.upper)
    }

    pub(crate) fn check_vector(&self, what: &str, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dof() {
            return Err(Error::config(
                what,
                format!("length {} does not match {} joints", v.len(), self.dof()),
            ));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{what}[{i}]")));
        }
        Ok(())
    }

    pub fn clamp_to_limits(&self, q: &DVector<f64>) -> DVector<f64> {
        assert_eq!(q.len(), self.dof(), "joint vector length");
        DVector::from_iterator(
            q.len(),
            q.iter().zip(&self.joints).map(|(v, j)| v.clamp(j.lower, j.upper)),
        )
    }

    pub fn forward_kinematics(&self, state: &JointState, base: &Isometry3<f64>) -> FkResult {
        self.fk(state.q.as_slice(), base)
    }

    /// Forward kinematics on a raw joint slice.
    ///
    /// # Panics
    /// If `q` does not have one entry per joint.
    pub fn fk(&self, q: &[f64], base: &Isometry3<f64>) -> FkResult {
        assert_eq!(q.len(), self.dof(), "joint vector length");
        let mut links = vec![Isometry3::identity(); self.dof()];
        let mut joint_frames = vec![Isometry3::identity(); self.dof()];
        for &i in &self.order {
            let j = &self.joints[i];
            let parent = j.parent.map_or(*base, |p| links[p]);
            let frame = parent * j.origin;
            joint_frames[i] = frame;
            links[i] = frame * UnitQuaternion::from_axis_angle(&j.axis, q[i]);
        }
        let fingertips = self
            .fingertips
            .iter()
            .map(|t| {
                let frame = t.joint.map_or(*base, |j| links[j]);
                frame * nalgebra::Point3::from(t.offset)
            })
            .map(|p| p.coords)
            .collect();
        FkResult {
            links,
            joint_frames,
            fingertips,
        }
    }

    /// 3×K Jacobian of fingertip `tip` with respect to q, in the base frame.
    pub fn fk_jacobian(&self, state: &JointState, base: &Isometry3<f64>, tip: usize) -> Matrix3xX<f64> {
        let fk = self.fk(state.q.as_slice(), base);
        self.jacobian_from(&fk, tip)
    }

    pub(crate) fn jacobian_from(&self, fk: &FkResult, tip: usize) -> Matrix3xX<f64> {
        let mut jac = Matrix3xX::zeros(self.dof());
        let p = fk.fingertips[tip];
        for &j in &self.fingertips[tip].chain {
            let frame = &fk.joint_frames[j];
            let w = frame.rotation * self.joints[j].axis.into_inner();
            let o = frame.translation.vector;
            jac.set_column(j, &w.cross(&(p - o)));
        }
        jac
    }
}
