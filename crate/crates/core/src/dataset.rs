//! JSON-lines grasp records: schema, reader and writer, split statistics
//! and the validation audit.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::contact::{ContactSet, GraspStrategy};
use crate::error::{Error, Result};
use crate::geometry::io::read_cloud;
use crate::geometry::{CanonicalPose, PointCloud};
use crate::hand::HandModel;
use crate::pipeline::{Stage, Synthesis};
use crate::refine::{fingertip_penetration, GraspPose, RefineConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance on the recorded pre-grasp offset.
pub const OFFSET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    SeenCatUnseenObj,
    UnseenCat,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::SeenCatUnseenObj, Split::UnseenCat];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::SeenCatUnseenObj => "seen_cat_unseen_obj",
            Split::UnseenCat => "unseen_cat",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub stages: Vec<Stage>,
    /// Hex SHA-256 of the canonical JSON of the pipeline configuration.
    pub config_hash: String,
    pub seed: u64,
}

/// Quality figures reported by the pipeline for the stored grasp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordMetrics {
    pub closure_quality: f64,
    pub retarget_residual: f64,
    pub max_penetration: f64,
}

/// One synthesized grasp. Contacts are in the canonical object frame; the
/// grasp, pre-grasp and approach are in the frame of the referenced cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub schema: u32,
    pub object_id: String,
    pub category: String,
    pub split: Split,
    pub cloud_ref: PathBuf,
    /// Hex SHA-256 of the cloud file contents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_sha256: Option<String>,
    pub strategy: GraspStrategy,
    pub contacts: ContactSet,
    pub canonical: CanonicalPose,
    pub grasp: GraspPose,
    pub pregrasp: GraspPose,
    pub approach: Vector3<f64>,
    pub pregrasp_offset: f64,
    pub metrics: RecordMetrics,
    pub provenance: Provenance,
    /// Fields this version does not know about, kept for round trips.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Identity of the object a record belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMeta {
    pub object_id: String,
    pub category: String,
    pub split: Split,
    pub cloud_ref: PathBuf,
    pub cloud_sha256: Option<String>,
}

impl GraspRecord {
    pub fn from_synthesis(meta: RecordMeta, s: &Synthesis, pregrasp_offset: f64, provenance: Provenance) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            object_id: meta.object_id,
            category: meta.category,
            split: meta.split,
            cloud_ref: meta.cloud_ref,
            cloud_sha256: meta.cloud_sha256,
            strategy: s.strategy,
            contacts: s.contacts.clone(),
            canonical: s.canonical,
            grasp: s.grasp.clone(),
            pregrasp: s.pregrasp.clone(),
            approach: s.approach,
            pregrasp_offset,
            metrics: RecordMetrics {
                closure_quality: s.closure_quality,
                retarget_residual: s.retarget_residual,
                max_penetration: s.refine.max_penetration,
            },
            provenance,
            extra: BTreeMap::new(),
        }
    }

    /// Contacts mapped into the frame of the referenced cloud.
    pub fn world_contacts(&self) -> ContactSet {
        let pose = &self.canonical;
        self.contacts
            .map(|p| pose.to_world(p), |n| pose.rotation.transpose() * n)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

pub fn write_records_to<W: Write>(records: &[GraspRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::NonFinite(format!("record {}: {e}", r.object_id)))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_records(path: impl AsRef<Path>, records: &[GraspRecord]) -> Result<()> {
    let file = fs::File::create(path)?;
    write_records_to(records, std::io::BufWriter::new(file))
}

/// Parses JSON lines; blank lines are skipped and line numbers start at 1.
pub fn read_records_from<R: BufRead>(input: R) -> Result<Vec<GraspRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema_err = |message: String| Error::Schema { line: i + 1, message };
        let record: GraspRecord = serde_json::from_str(&line).map_err(|e| schema_err(e.to_string()))?;
        if record.schema != SCHEMA_VERSION {
            return Err(schema_err(format!("unsupported schema version {}", record.schema)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<GraspRecord>> {
    read_records_from(BufReader::new(fs::File::open(path)?))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub per_split: BTreeMap<Split, usize>,
    pub per_category: BTreeMap<String, usize>,
    /// Per category, counts per split.
    pub per_category_split: BTreeMap<String, BTreeMap<Split, usize>>,
    /// Object ids that appear in more than one split.
    pub cross_split_duplicates: Vec<String>,
}

pub fn dataset_stats(records: &[GraspRecord]) -> DatasetStats {
    let mut stats = DatasetStats {
        total: records.len(),
        per_split: Split::ALL.iter().map(|s| (*s, 0)).collect(),
        ..Default::default()
    };
    let mut splits_of: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
    for r in records {
        *stats.per_split.entry(r.split).or_default() += 1;
        *stats.per_category.entry(r.category.clone()).or_default() += 1;
        *stats
            .per_category_split
            .entry(r.category.clone())
            .or_default()
            .entry(r.split)
            .or_default() += 1;
        splits_of.entry(&r.object_id).or_default().insert(r.split);
    }
    stats.cross_split_duplicates = splits_of
        .into_iter()
        .filter(|(_, s)| s.len() > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    stats
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    /// Largest allowed contact distance from the cloud (m).
    pub surface_eps: f64,
    pub fingertip_radius: f64,
    pub penetration_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        let r = RefineConfig::default();
        Self {
            surface_eps: 1e-6,
            fingertip_radius: r.fingertip_radius,
            penetration_tol: r.penetration_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordAudit {
    pub object_id: String,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Resolves cloud references relative to `base` and checks the recorded
/// hash when present.
pub fn resolve_from_dir(base: &Path) -> impl Fn(&GraspRecord) -> Result<PointCloud> + '_ {
    move |r| {
        let path = if r.cloud_ref.is_absolute() {
            r.cloud_ref.clone()
        } else {
            base.join(&r.cloud_ref)
        };
        if !path.is_file() {
            return Err(Error::MissingCloud(path));
        }
        if let Some(expected) = &r.cloud_sha256 {
            let got = file_sha256(&path)?;
            if &got != expected {
                return Err(Error::Parse {
                    path,
                    message: format!("content hash {got} does not match the record ({expected})"),
                });
            }
        }
        read_cloud(&path)
    }
}

fn joint_limit_failures(what: &str, pose: &GraspPose, model: &HandModel) -> Vec<String> {
    if pose.q.len() != model.dof() {
        return vec![format!("{what}: {} joint values for {} joints", pose.q.len(), model.dof())];
    }
    model
        .joints()
        .iter()
        .zip(pose.q.iter())
        .filter(|(j, v)| !(**v >= j.lower && **v <= j.upper))
        .map(|(j, v)| format!("{what}: joint {} = {v} outside [{}, {}]", j.name, j.lower, j.upper))
        .collect()
}

/// Re-checks one record against its cloud.
pub fn audit_record(record: &GraspRecord, model: &HandModel, cloud: &PointCloud, config: &AuditConfig) -> RecordAudit {
    let mut failures = Vec::new();

    failures.extend(
        record
            .world_contacts()
            .violations(cloud, config.surface_eps)
            .into_iter()
            .map(|v| format!("contacts: {v}")),
    );

    for (what, pose) in [("grasp", &record.grasp), ("pregrasp", &record.pregrasp)] {
        if let Err(e) = pose.validate(model) {
            if !matches!(e, Error::Config { ref path, .. } if path == "pose.q") {
                failures.push(format!("{what}: {e}"));
            }
        }
        failures.extend(joint_limit_failures(what, pose, model));
    }

    if record.grasp.q.len() == record.pregrasp.q.len() {
        let d = record.grasp.translation - record.pregrasp.translation;
        let expected = record.pregrasp_offset * record.approach;
        if (record.approach.norm() - 1.0).abs() > OFFSET_TOL || (d - expected).norm() > OFFSET_TOL {
            failures.push(format!(
                "pregrasp: offset {:.6} m along the approach axis, expected {}",
                d.dot(&record.approach.normalize()),
                record.pregrasp_offset
            ));
        }
        if record.grasp.rotation != record.pregrasp.rotation {
            failures.push("pregrasp: wrist rotation differs from the grasp".into());
        }
        if record.pregrasp.q.len() == model.dof() {
            let mid = model.midpoints();
            for &j in model.intermediate_joints() {
                if (record.pregrasp.q[j] - mid[j]).abs() > OFFSET_TOL {
                    failures.push(format!(
                        "pregrasp: intermediate joint {} is not at its limit midpoint",
                        model.joints()[j].name
                    ));
                }
            }
        }
    } else {
        failures.push("pregrasp: joint vector length differs from the grasp".into());
    }

    if record.grasp.q.len() == model.dof() && record.grasp.q.iter().all(|v| v.is_finite()) {
        let cloud = cloud.clone().ensure_normals();
        let base: Isometry3<f64> = record.grasp.wrist();
        let fk = model.fk(record.grasp.q.as_slice(), &base);
        for (tip, p) in model.fingertips().iter().zip(&fk.fingertips) {
            let depth = fingertip_penetration(p, &cloud, config.fingertip_radius);
            if depth > config.penetration_tol {
                failures.push(format!(
                    "penetration: {} fingertip {:.4} m inside (limit {})",
                    tip.finger, depth, config.penetration_tol
                ));
            }
        }
    }

    RecordAudit {
        object_id: record.object_id.clone(),
        passed: failures.is_empty(),
        failures,
    }
}

/// Audits every record. Fails with `MissingCloud` on the first reference
/// the resolver cannot find.
pub fn validate_records(
    records: &[GraspRecord],
    model: &HandModel,
    resolve: impl Fn(&GraspRecord) -> Result<PointCloud>,
    config: &AuditConfig,
) -> Result<Vec<RecordAudit>> {
    records
        .iter()
        .map(|r| Ok(audit_record(r, model, &resolve(r)?, config)))
        .collect()
}
