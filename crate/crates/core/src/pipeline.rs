//! End-to-end grasp synthesis for one object: canonicalization, contact
//! generation, retargeting and collision-aware refinement, followed by the
//! pre-grasp pose.

use std::fmt;
use std::time::Instant;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::{generate_contacts, refine_contacts, select_strategy, ContactConfig, ContactSet, GraspStrategy};
use crate::error::{Error, Result};
use crate::geometry::{canonicalize, compute_pca, detect_cylindricality, CanonicalPose, PointCloud, DEFAULT_CYLINDER_RATIO};
use crate::hand::HandModel;
use crate::refine::{derive_pregrasp, simulate_refinement, GraspPose, RefineConfig, RefineResult, PREGRASP_OFFSET};
use crate::retarget::{retarget, RetargetConfig, WristParams};

/// Cloud whose principal axes decide the grasp strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyCloud {
    #[default]
    Object,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub cylinder_ratio: f64,
    pub strategy_cloud: StrategyCloud,
    pub contact: ContactConfig,
    pub wrist: WristParams,
    pub retarget: RetargetConfig,
    pub refine: RefineConfig,
    pub pregrasp_offset: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cylinder_ratio: DEFAULT_CYLINDER_RATIO,
            strategy_cloud: StrategyCloud::Object,
            contact: ContactConfig::default(),
            wrist: WristParams::default(),
            retarget: RetargetConfig::default(),
            refine: RefineConfig::default(),
            pregrasp_offset: PREGRASP_OFFSET,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cylinder_ratio > 1.0 && self.cylinder_ratio.is_finite()) {
            return Err(Error::config("cylinder_ratio", "must be greater than 1"));
        }
        if !(self.pregrasp_offset >= 0.0 && self.pregrasp_offset.is_finite()) {
            return Err(Error::config("pregrasp_offset", "must be non-negative"));
        }
        self.contact.validate()?;
        self.retarget.validate()?;
        self.refine.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Canonicalize,
    Contacts,
    Retarget,
    Refine,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Canonicalize, Stage::Contacts, Stage::Retarget, Stage::Refine];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Canonicalize => "canonicalize",
            Stage::Contacts => "contacts",
            Stage::Retarget => "retarget",
            Stage::Refine => "refine",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Wall time per stage in seconds; stages that did not run stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub canonicalize: Option<f64>,
    pub contacts: Option<f64>,
    pub retarget: Option<f64>,
    pub refine: Option<f64>,
}

impl StageTimings {
    pub fn get(&self, stage: Stage) -> Option<f64> {
        match stage {
            Stage::Canonicalize => self.canonicalize,
            Stage::Contacts => self.contacts,
            Stage::Retarget => self.retarget,
            Stage::Refine => self.refine,
        }
    }

    fn set(&mut self, stage: Stage, secs: f64) {
        let slot = match stage {
            Stage::Canonicalize => &mut self.canonicalize,
            Stage::Contacts => &mut self.contacts,
            Stage::Retarget => &mut self.retarget,
            Stage::Refine => &mut self.refine,
        };
        *slot = Some(secs);
    }

    pub fn total(&self) -> f64 {
        // adding 0.0 maps the -0.0 of an empty sum to 0.0
        Stage::ALL.iter().filter_map(|s| self.get(*s)).sum::<f64>() + 0.0
    }
}

/// Everything produced for one object. Contacts are in the object's
/// canonical frame; hand poses and the approach are in the input cloud's
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub canonical: CanonicalPose,
    pub strategy: GraspStrategy,
    pub contacts: ContactSet,
    pub closure_quality: f64,
    pub retarget_residual: f64,
    pub refine: RefineResult,
    pub grasp: GraspPose,
    pub pregrasp: GraspPose,
    /// Unit approach direction (toward the object).
    pub approach: Vector3<f64>,
    pub timings: StageTimings,
}

/// A failed stage together with the timings gathered so far.
#[derive(Debug)]
pub struct StageFailure {
    pub stage: Stage,
    pub error: Error,
    pub timings: StageTimings,
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageFailure {}

struct Runner {
    timings: StageTimings,
}

impl Runner {
    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> std::result::Result<T, StageFailure> {
        let start = Instant::now();
        let out = f();
        self.timings.set(stage, start.elapsed().as_secs_f64());
        out.map_err(|error| StageFailure {
            stage,
            error,
            timings: self.timings,
        })
    }
}

/// Open hand used as the starting configuration of refinement.
pub fn open_configuration(model: &HandModel) -> DVector<f64> {
    model.clamp_to_limits(&DVector::zeros(model.dof()))
}

pub fn synthesize(
    cloud: &PointCloud,
    table: Option<&PointCloud>,
    model: &HandModel,
    config: &PipelineConfig,
) -> std::result::Result<Synthesis, StageFailure> {
    let mut runner = Runner {
        timings: StageTimings::default(),
    };

    let (canonical_cloud, world_cloud, canonical, strategy) = runner.run(Stage::Canonicalize, || {
        config.validate()?;
        let axes = compute_pca(cloud)?;
        let strategy_axes = match (config.strategy_cloud, table) {
            (StrategyCloud::Table, Some(t)) => compute_pca(t)?,
            (StrategyCloud::Table, None) => {
                return Err(Error::config("strategy_cloud", "table cloud requested but none given"))
            }
            (StrategyCloud::Object, _) => axes,
        };
        let strategy = select_strategy(&strategy_axes, config.contact.alignment_threshold_deg);
        let cylindrical = detect_cylindricality(&axes, config.cylinder_ratio);
        let (c, pose) = canonicalize(cloud, &axes, cylindrical)?;
        Ok((c.ensure_normals(), cloud.clone().ensure_normals(), pose, strategy))
    })?;

    let refined = runner.run(Stage::Contacts, || {
        let initial = generate_contacts(&canonical_cloud, strategy, &config.contact)?;
        refine_contacts(&initial, &canonical_cloud, &config.contact)
    })?;

    let q_open = open_configuration(model);
    let solved = runner.run(Stage::Retarget, || {
        let world_contacts = refined
            .contacts
            .map(|p| canonical.to_world(p), |n| canonical.rotation.transpose() * n);
        retarget(
            model,
            &world_contacts,
            &world_cloud.centroid(),
            &config.wrist,
            &q_open,
            &config.retarget,
        )
    })?;

    let (result, grasp, pregrasp, approach) = runner.run(Stage::Refine, || {
        let start = GraspPose {
            rotation: solved.frame.rotation,
            translation: solved.frame.origin,
            q: q_open.clone(),
        };
        let result = simulate_refinement(model, &world_cloud, &start, &solved.solution.q, &config.refine)?;
        if result.max_penetration > config.refine.penetration_tol {
            return Err(Error::NoGraspSurface(format!(
                "refined grasp penetrates the object by {:.4} m",
                result.max_penetration
            )));
        }
        let approach = -solved.topology.palm_normal;
        let grasp = result.final_pose.clone();
        let pregrasp = derive_pregrasp(&grasp, model, &approach, config.pregrasp_offset)?;
        Ok((result, grasp, pregrasp, approach))
    })?;

    Ok(Synthesis {
        canonical,
        strategy,
        contacts: refined.contacts,
        closure_quality: refined.report.quality,
        retarget_residual: solved.solution.residual,
        refine: result,
        grasp,
        pregrasp,
        approach,
        timings: runner.timings,
    })
}
