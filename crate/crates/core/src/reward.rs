//! Reward decomposition for the grasping policy and trajectory quality
//! metrics (oscillation counts, finger directional consistency).

use std::io::BufRead;
use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::Finger;
use crate::error::{Error, Result};
use crate::hand::HandModel;

/// Lift height required by the experiment success rule (m).
pub const LIFT_HEIGHT: f64 = 0.2;
/// Consecutive frames the lift must be held.
pub const HOLD_STEPS: usize = 200;

/// One recorded control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    /// Binary contact state per finger.
    #[serde(default)]
    pub contacts: Vec<bool>,
    /// Fingertip forces (N).
    #[serde(default)]
    pub forces: Vec<[f64; 3]>,
    #[serde(default)]
    pub a_prev: Vec<f64>,
    /// Fingertip positions in the wrist frame (m).
    pub fingertips: Vec<[f64; 3]>,
    /// Wrist position followed by its axis-angle orientation.
    pub wrist_pose: [f64; 6],
    #[serde(default)]
    pub wrist_vel: [f64; 6],
    pub object_pos: [f64; 3],
}

impl TrajectoryFrame {
    /// Checks vector lengths against a model with `dof` joints and
    /// `fingers` fingertips.
    pub fn validate(&self, dof: usize, fingers: usize) -> Result<()> {
        let lens = [
            ("q", self.q.len(), dof),
            ("qd", self.qd.len(), dof),
            ("fingertips", self.fingertips.len(), fingers),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::config(name, format!("length {got}, expected {want}")));
            }
        }
        for (name, len) in [("contacts", self.contacts.len()), ("forces", self.forces.len())] {
            if len != 0 && len != fingers {
                return Err(Error::config(name, format!("length {len}, expected {fingers}")));
            }
        }
        if !self.a_prev.is_empty() && self.a_prev.len() != dof {
            return Err(Error::config("a_prev", format!("length {}, expected {dof}", self.a_prev.len())));
        }
        let finite = self
            .q
            .iter()
            .chain(&self.qd)
            .chain(&self.a_prev)
            .chain(self.forces.iter().flatten())
            .chain(self.fingertips.iter().flatten())
            .chain(&self.wrist_pose)
            .chain(&self.wrist_vel)
            .chain(&self.object_pos)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("trajectory frame".into()));
        }
        Ok(())
    }

    fn wrist_rotation(&self) -> UnitQuaternion<f64> {
        let w = &self.wrist_pose;
        UnitQuaternion::from_scaled_axis(Vector3::new(w[3], w[4], w[5]))
    }

    /// Fingertip positions in the world frame.
    pub fn world_fingertips(&self) -> Vec<Vector3<f64>> {
        let r = self.wrist_rotation();
        let t = Vector3::new(self.wrist_pose[0], self.wrist_pose[1], self.wrist_pose[2]);
        self.fingertips.iter().map(|p| r * Vector3::from(*p) + t).collect()
    }
}

/// Difference between the current and target hand pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDiff {
    pub position: Vector3<f64>,
    /// Axis-angle orientation difference (rad).
    pub rotation: Vector3<f64>,
    /// Joint-angle differences, one block per finger.
    pub per_finger: Vec<Vec<f64>>,
}

impl GoalDiff {
    pub fn zero(blocks: &[usize]) -> Self {
        Self {
            position: Vector3::zeros(),
            rotation: Vector3::zeros(),
            per_finger: blocks.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalWeights {
    pub position: f64,
    pub rotation: f64,
    pub joints: f64,
    pub per_finger: f64,
}

impl Default for GoalWeights {
    fn default() -> Self {
        Self {
            position: 1.0,
            rotation: 0.5,
            joints: 0.1,
            per_finger: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub goal: f64,
    pub reach: f64,
    pub lift: f64,
    #[serde(rename = "move")]
    pub move_: f64,
    pub smooth: f64,
    pub consistency: f64,
    /// Decay rate of the reach term (1/m).
    pub lambda_reach: f64,
    /// Decay rate of the lift term (1/m).
    pub lambda_lift: f64,
    /// Success distance (m).
    pub delta: f64,
    pub goal_weights: GoalWeights,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            goal: 1.0,
            reach: 1.0,
            lift: 1.0,
            move_: 1.0,
            smooth: -0.01,
            consistency: -0.1,
            lambda_reach: 5.0,
            lambda_lift: 5.0,
            delta: 0.05,
            goal_weights: GoalWeights::default(),
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        for (path, v) in [
            ("reward.lambda_reach", self.lambda_reach),
            ("reward.lambda_lift", self.lambda_lift),
            ("reward.delta", self.delta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(path, format!("must be positive, got {v}")));
            }
        }
        let g = &self.goal_weights;
        let all = [
            self.goal,
            self.reach,
            self.lift,
            self.move_,
            self.smooth,
            self.consistency,
            g.position,
            g.rotation,
            g.joints,
            g.per_finger,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reward weights".into()));
        }
        Ok(())
    }

    /// Multiplies the outer weights by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            goal: self.goal * c,
            reach: self.reach * c,
            lift: self.lift * c,
            move_: self.move_ * c,
            smooth: self.smooth * c,
            consistency: self.consistency * c,
            ..*self
        }
    }
}

/// exp(−λ·distance), floored at the smallest positive normal so that
/// far-away states never score exactly 0.
pub fn reward_proximity(distance: f64, lambda: f64) -> f64 {
    (-lambda * distance).exp().max(f64::MIN_POSITIVE)
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Largest per-finger L1 norm of the joint error.
pub fn per_finger_penalty(per_finger: &[Vec<f64>]) -> f64 {
    per_finger.iter().map(|b| l1(b)).fold(0.0, f64::max)
}

pub fn reward_goal(diff: &GoalDiff, w: &GoalWeights) -> f64 {
    let joints: f64 = diff.per_finger.iter().map(|b| l1(b)).sum();
    -(w.position * diff.position.norm() + w.rotation * diff.rotation.norm() + w.joints * joints)
        - w.per_finger * per_finger_penalty(&diff.per_finger)
}

/// Σ v²
pub fn reward_smooth(qd: &[f64]) -> f64 {
    qd.iter().map(|v| v * v).sum()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Population variance of the velocity signs inside each group, summed
/// over groups.
pub fn reward_consistency(qd: &[f64], groups: &[Vec<usize>]) -> f64 {
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let s: Vec<f64> = g.iter().map(|&i| sign(qd[i])).collect();
            let n = s.len() as f64;
            let mean = s.iter().sum::<f64>() / n;
            s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
        })
        .sum()
}

/// Joints that sit at the same chain position on every non-thumb finger.
/// Returns no groups when those fingers have different chain lengths.
pub fn same_position_groups(model: &HandModel) -> Vec<Vec<usize>> {
    let chains: Vec<&Vec<usize>> = model
        .fingertips()
        .iter()
        .filter(|f| f.finger != Finger::Thumb)
        .map(|f| &f.chain)
        .collect();
    let Some(first) = chains.first() else {
        return Vec::new();
    };
    if chains.len() < 2 || chains.iter().any(|c| c.len() != first.len()) {
        return Vec::new();
    }
    (0..first.len()).map(|k| chains.iter().map(|c| c[k]).collect()).collect()
}

/// Joint indices of each finger's own chain (joints shared with another
/// finger are left out).
pub fn finger_joint_blocks(model: &HandModel) -> Vec<Vec<usize>> {
    let tips = model.fingertips();
    tips.iter()
        .enumerate()
        .map(|(i, f)| {
            f.chain
                .iter()
                .copied()
                .filter(|j| !tips.iter().enumerate().any(|(k, o)| k != i && o.chain.contains(j)))
                .collect()
        })
        .collect()
}

/// Target state a trajectory is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTargets {
    pub object_target: [f64; 3],
    /// Target wrist position and axis-angle orientation.
    pub wrist_target: [f64; 6],
    pub q_target: Vec<f64>,
    /// Joint indices per finger for the goal term.
    pub finger_blocks: Vec<Vec<usize>>,
    /// Joint groups for the consistency term.
    pub consistency_groups: Vec<Vec<usize>>,
}

impl RewardTargets {
    pub fn validate(&self, dof: usize) -> Result<()> {
        if self.q_target.len() != dof {
            return Err(Error::config(
                "targets.q_target",
                format!("length {}, expected {dof}", self.q_target.len()),
            ));
        }
        for (name, groups) in [
            ("targets.finger_blocks", &self.finger_blocks),
            ("targets.consistency_groups", &self.consistency_groups),
        ] {
            if let Some(j) = groups.iter().flatten().find(|&&j| j >= dof) {
                return Err(Error::config(name, format!("joint index {j} out of range")));
            }
        }
        Ok(())
    }
}

pub fn goal_diff(frame: &TrajectoryFrame, targets: &RewardTargets) -> GoalDiff {
    let w = &frame.wrist_pose;
    let t = &targets.wrist_target;
    let current = UnitQuaternion::from_scaled_axis(Vector3::new(w[3], w[4], w[5]));
    let target = UnitQuaternion::from_scaled_axis(Vector3::new(t[3], t[4], t[5]));
    GoalDiff {
        position: Vector3::new(w[0] - t[0], w[1] - t[1], w[2] - t[2]),
        rotation: (current * target.inverse()).scaled_axis(),
        per_finger: targets
            .finger_blocks
            .iter()
            .map(|b| b.iter().map(|&j| frame.q[j] - targets.q_target[j]).collect())
            .collect(),
    }
}

/// Individual (unweighted) terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub goal: f64,
    pub reach: f64,
    pub lift: f64,
    #[serde(rename = "move")]
    pub move_: f64,
    pub smooth: f64,
    pub consistency: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn weighted_terms(&self, w: &RewardWeights) -> [f64; 6] {
        [
            w.goal * self.goal,
            w.reach * self.reach,
            w.lift * self.lift,
            w.move_ * self.move_,
            w.smooth * self.smooth,
            w.consistency * self.consistency,
        ]
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (Vector3::from(*a) - Vector3::from(*b)).norm()
}

/// Smallest fingertip-to-object distance in the world frame.
pub fn hand_object_distance(frame: &TrajectoryFrame) -> f64 {
    let o = Vector3::from(frame.object_pos);
    frame
        .world_fingertips()
        .iter()
        .map(|p| (p - o).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Weighted reward of one frame. The move term is the progress of the
/// object toward its target since `prev` (0 on the first frame).
pub fn total_reward(
    frame: &TrajectoryFrame,
    prev: Option<&TrajectoryFrame>,
    diff: &GoalDiff,
    targets: &RewardTargets,
    weights: &RewardWeights,
) -> RewardBreakdown {
    let to_target = dist(&frame.object_pos, &targets.object_target);
    let reach_d = hand_object_distance(frame);
    let mut b = RewardBreakdown {
        goal: reward_goal(diff, &weights.goal_weights),
        reach: reward_proximity(if reach_d.is_finite() { reach_d } else { f64::MAX }, weights.lambda_reach),
        lift: reward_proximity(to_target, weights.lambda_lift),
        move_: prev.map_or(0.0, |p| dist(&p.object_pos, &targets.object_target) - to_target),
        smooth: reward_smooth(&frame.qd),
        consistency: reward_consistency(&frame.qd, &targets.consistency_groups),
        total: 0.0,
    };
    b.total = b.weighted_terms(weights).iter().sum();
    b
}

/// Rewards for every frame of a trajectory.
pub fn evaluate_trajectory(
    frames: &[TrajectoryFrame],
    targets: &RewardTargets,
    weights: &RewardWeights,
) -> Vec<RewardBreakdown> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let prev = i.checked_sub(1).map(|j| &frames[j]);
            total_reward(f, prev, &goal_diff(f, targets), targets, weights)
        })
        .collect()
}

/// ‖p_obj − p_target‖ < δ
pub fn success_check(p_obj: &Vector3<f64>, p_target: &Vector3<f64>, delta: f64) -> bool {
    (p_obj - p_target).norm() < delta
}

/// Whether the object height stays at least `gain` above `base_height`
/// for `hold` consecutive frames.
pub fn lift_held(heights: &[f64], base_height: f64, gain: f64, hold: usize) -> bool {
    let mut run = 0;
    for h in heights {
        if h - base_height >= gain {
            run += 1;
            if run >= hold {
                return true;
            }
        } else {
            run = 0;
        }
    }
    hold == 0
}

/// Experiment success: target reached and a lift of [`LIFT_HEIGHT`] held for
/// [`HOLD_STEPS`] frames.
pub fn success_experiment(frames: &[TrajectoryFrame], p_target: &Vector3<f64>, delta: f64) -> bool {
    let Some(last) = frames.last() else {
        return false;
    };
    let base = frames[0].object_pos[2];
    let heights: Vec<f64> = frames.iter().map(|f| f.object_pos[2]).collect();
    success_check(&Vector3::from(last.object_pos), p_target, delta) && lift_held(&heights, base, LIFT_HEIGHT, HOLD_STEPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub arm_osc: usize,
    pub hand_osc: usize,
    /// Negative accumulated sign variance; 0 is the best value.
    pub fdc: f64,
}

/// Number of sign reversals of one joint's velocity; zero velocities are
/// skipped.
pub fn sign_reversals(velocities: impl IntoIterator<Item = f64>) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for v in velocities {
        let s = sign(v);
        if s == 0.0 {
            continue;
        }
        if last != 0.0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

pub fn trajectory_metrics(
    frames: &[TrajectoryFrame],
    arm_joints: &[usize],
    hand_joints: &[usize],
    groups: &[Vec<usize>],
) -> Result<TrajectoryMetrics> {
    if frames.len() < 2 {
        return Err(Error::TooShort(frames.len()));
    }
    let osc = |joints: &[usize]| -> usize {
        joints
            .iter()
            .map(|&j| sign_reversals(frames.iter().map(|f| f.qd[j])))
            .sum()
    };
    Ok(TrajectoryMetrics {
        arm_osc: osc(arm_joints),
        hand_osc: osc(hand_joints),
        fdc: -frames.iter().map(|f| reward_consistency(&f.qd, groups)).sum::<f64>(),
    })
}

/// Reads one frame per line; blank lines are skipped.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryFrame>> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_trajectory(std::io::BufReader::new(file))
}

pub fn parse_trajectory(reader: impl BufRead) -> Result<Vec<TrajectoryFrame>> {
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: TrajectoryFrame = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}
