mod config;
mod svg;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use contactgrasp::cluster_gate::{
    apply_category_override, argmax, extract_geometry_features, gating_train, kmeans_fit, ExpertScoreRecord,
    GatingModel,
};
use contactgrasp::dataset::{
    dataset_stats, file_sha256, read_records, resolve_from_dir, validate_records, write_records, AuditConfig,
    GraspRecord, Provenance, RecordMeta, Split,
};
use contactgrasp::fixtures;
use contactgrasp::geometry::io::{read_cloud, save_cloud};
use contactgrasp::hand::HandModel;
use contactgrasp::pipeline::{synthesize, Stage, StageTimings};
use contactgrasp::reward::{
    evaluate_trajectory, read_trajectory, success_experiment, trajectory_metrics, RewardTargets,
};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;

#[derive(Parser)]
#[command(name = "contactgrasp", version, about = "Contact-guided dexterous grasp synthesis")]
struct Cli {
    /// JSON config file; env `CONTACTGRASP_<SECTION>__<KEY>` and `--set` override it
    #[arg(long, global = true, env = "CONTACTGRASP_CONFIG")]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set pipeline.contact.friction=0.4`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, global = true, env = "CONTACTGRASP_SEED")]
    seed: Option<u64>,
    /// Worker threads for per-object batch work
    #[arg(long, global = true, env = "CONTACTGRASP_JOBS", default_value_t = 1)]
    jobs: usize,
    /// Machine-readable output on stdout
    #[arg(long, global = true, env = "CONTACTGRASP_JSON")]
    json: bool,
    #[arg(long, global = true, env = "CONTACTGRASP_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one grasp record per cloud
    Synth {
        #[arg(required = true)]
        clouds: Vec<PathBuf>,
        /// Tabletop cloud used for strategy selection
        #[arg(long)]
        table: Option<PathBuf>,
        /// Category for every object (default: file stem)
        #[arg(long)]
        category: Option<String>,
        #[arg(long, default_value = "train", value_parser = parse_split)]
        split: Split,
    },
    /// Geometry feature rows for clustering and gating
    Features {
        #[arg(required = true)]
        clouds: Vec<PathBuf>,
        #[arg(long)]
        category: Option<String>,
    },
    /// K-means over feature rows
    Cluster {
        #[arg(long)]
        features: PathBuf,
    },
    /// Train the gating model on features and expert success targets
    GateTrain {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Loss curve CSV (default: next to --out)
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Pick an expert per feature row
    GateSelect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Per-frame rewards and trajectory metrics
    RewardEval {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Comma-separated arm joint indices; the rest count as hand joints
        #[arg(long, value_delimiter = ',')]
        arm_joints: Vec<usize>,
    },
    /// Record statistics and audits
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
    /// Render CSV series to SVG line charts
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Write the bundled box, cylinder and sphere clouds
    Fixtures {
        #[arg(long, default_value_t = 2048)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum DatasetAction {
    Stats {
        #[arg(required = true)]
        records: Vec<PathBuf>,
    },
    Validate {
        records: PathBuf,
        /// Directory cloud references are relative to (default: the records file's directory)
        #[arg(long)]
        clouds_dir: Option<PathBuf>,
    },
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    Split::parse(s).ok_or_else(|| format!("unknown split `{s}` (train, seen_cat_unseen_obj, unseen_cat)"))
}

/// Bad invocation or configuration; exits with 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

struct Ctx {
    config: Config,
    jobs: usize,
    json: bool,
    out: Option<PathBuf>,
}

impl Ctx {
    fn hand(&self) -> Result<HandModel> {
        match &self.config.hand {
            None => Ok(HandModel::five_finger()),
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading hand {}", path.display()))?;
                Ok(HandModel::from_json(&text)?)
            }
        }
    }

    fn require_out(&self, what: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| usage(format!("{what} needs --out")))
    }

    /// Writes to `--out` when given, stdout otherwise.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let config = config::load(config::Layers {
        file: cli.config.as_deref(),
        env: std::env::vars().collect(),
        sets: &cli.sets,
        seed: cli.seed,
    })
    .map_err(|e| usage(format!("{e:#}")))?;
    let ctx = Ctx {
        config,
        jobs: cli.jobs,
        json: cli.json,
        out: cli.out,
    };
    match cli.command {
        Command::Synth {
            clouds,
            table,
            category,
            split,
        } => synth(&ctx, &clouds, table.as_deref(), category.as_deref(), split),
        Command::Features { clouds, category } => features(&ctx, &clouds, category.as_deref()),
        Command::Cluster { features } => cluster(&ctx, &features),
        Command::GateTrain {
            features,
            targets,
            loss_csv,
        } => gate_train(&ctx, &features, &targets, loss_csv),
        Command::GateSelect { model, features } => gate_select(&ctx, &model, &features),
        Command::RewardEval {
            trajectory,
            targets,
            arm_joints,
        } => reward_eval(&ctx, &trajectory, &targets, &arm_joints),
        Command::Dataset { action } => match action {
            DatasetAction::Stats { records } => stats(&ctx, &records),
            DatasetAction::Validate { records, clouds_dir } => validate(&ctx, &records, clouds_dir),
        },
        Command::Report { csv } => report(&ctx, &csv),
        Command::Fixtures { points } => write_fixtures(&ctx, points),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// `path` relative to `base` when it lies below it, absolute otherwise.
fn relative_to(path: &Path, base: &Path) -> PathBuf {
    let abs = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    match fs::canonicalize(base) {
        Ok(b) => abs.strip_prefix(&b).map(Path::to_path_buf).unwrap_or(abs),
        Err(_) => abs,
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

#[derive(Serialize)]
struct ObjectOutcome {
    object_id: String,
    /// Stage that failed; `load` for unreadable clouds.
    failed_stage: Option<String>,
    error: Option<String>,
    timings: StageTimings,
}

fn synth(ctx: &Ctx, clouds: &[PathBuf], table: Option<&Path>, category: Option<&str>, split: Split) -> Result<ExitCode> {
    let out = ctx.require_out("synth")?.to_path_buf();
    let model = ctx.hand()?;
    let table = match table {
        Some(p) => Some(read_cloud(p).with_context(|| format!("reading table cloud {}", p.display()))?),
        None => None,
    };
    let out_dir = parent_dir(&out);
    let provenance = Provenance {
        stages: Stage::ALL.to_vec(),
        config_hash: ctx.config.hash(),
        seed: ctx.config.seed,
    };
    let pipeline = &ctx.config.pipeline;

    let run_one = |path: &PathBuf| -> (Option<GraspRecord>, ObjectOutcome) {
        let object_id = stem(path);
        let fail = |stage: &str, error: String, timings: StageTimings| ObjectOutcome {
            object_id: object_id.clone(),
            failed_stage: Some(stage.to_string()),
            error: Some(error),
            timings,
        };
        let loaded = read_cloud(path).and_then(|c| Ok((c, file_sha256(path)?)));
        let (cloud, sha) = match loaded {
            Ok(x) => x,
            Err(e) => return (None, fail("load", e.to_string(), StageTimings::default())),
        };
        match synthesize(&cloud, table.as_ref(), &model, pipeline) {
            Ok(s) => {
                let meta = RecordMeta {
                    object_id: object_id.clone(),
                    category: category.map_or_else(|| object_id.clone(), str::to_string),
                    split,
                    cloud_ref: relative_to(path, &out_dir),
                    cloud_sha256: Some(sha),
                };
                let record = GraspRecord::from_synthesis(meta, &s, pipeline.pregrasp_offset, provenance.clone());
                let outcome = ObjectOutcome {
                    object_id: object_id.clone(),
                    failed_stage: None,
                    error: None,
                    timings: s.timings,
                };
                (Some(record), outcome)
            }
            Err(f) => (None, fail(f.stage.name(), f.error.to_string(), f.timings)),
        }
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.jobs).build()?;
    let results: Vec<_> = pool.install(|| clouds.par_iter().map(run_one).collect());
    let (records, outcomes): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let records: Vec<GraspRecord> = records.into_iter().flatten().collect();
    write_records(&out, &records)?;

    if ctx.json {
        println!("{}", serde_json::to_string_pretty(&outcomes)?);
    } else {
        print_stage_table(&outcomes);
    }
    for o in outcomes.iter().filter(|o| o.error.is_some()) {
        eprintln!(
            "{}: {} failed: {}",
            o.object_id,
            o.failed_stage.as_deref().unwrap_or("?"),
            o.error.as_deref().unwrap_or("")
        );
    }
    eprintln!("wrote {} of {} records to {}", records.len(), outcomes.len(), out.display());
    Ok(if records.is_empty() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn print_stage_table(outcomes: &[ObjectOutcome]) {
    println!("{:<14} {:>6} {:>6} {:>8} {:>12}", "stage", "ok", "fail", "SR(%)", "mean t (s)");
    for stage in Stage::ALL {
        let ran: Vec<&ObjectOutcome> = outcomes.iter().filter(|o| o.timings.get(stage).is_some()).collect();
        let failed = ran
            .iter()
            .filter(|o| o.failed_stage.as_deref() == Some(stage.name()))
            .count();
        let ok = ran.len() - failed;
        let mean = if ran.is_empty() {
            0.0
        } else {
            ran.iter().filter_map(|o| o.timings.get(stage)).sum::<f64>() / ran.len() as f64
        };
        let sr = if ran.is_empty() { 0.0 } else { 100.0 * ok as f64 / ran.len() as f64 };
        println!("{:<14} {:>6} {:>6} {:>8.1} {:>12.4}", stage.name(), ok, failed, sr, mean);
    }
    let done = outcomes.iter().filter(|o| o.error.is_none()).count();
    let per_obj = if outcomes.is_empty() {
        0.0
    } else {
        outcomes.iter().map(|o| o.timings.total()).sum::<f64>() / outcomes.len() as f64
    };
    let sr = if outcomes.is_empty() { 0.0 } else { 100.0 * done as f64 / outcomes.len() as f64 };
    println!(
        "{:<14} {:>6} {:>6} {:>8.1} {:>12.4}",
        "total",
        done,
        outcomes.len() - done,
        sr,
        per_obj
    );
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureRow {
    object_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    features: Vec<f64>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}: line {}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn to_jsonl<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

fn features(ctx: &Ctx, clouds: &[PathBuf], category: Option<&str>) -> Result<ExitCode> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.jobs).build()?;
    let rows: Vec<Result<FeatureRow>> = pool.install(|| {
        clouds
            .par_iter()
            .map(|p| {
                let cloud = read_cloud(p)?;
                let f = extract_geometry_features(&cloud)?;
                Ok(FeatureRow {
                    object_id: stem(p),
                    category: category.map(str::to_string),
                    features: f.to_vec(),
                })
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    ctx.emit(&to_jsonl(&rows)?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ClusterOutput {
    object_ids: Vec<String>,
    model: contactgrasp::cluster_gate::ClusterModel,
}

fn cluster(ctx: &Ctx, path: &Path) -> Result<ExitCode> {
    let rows: Vec<FeatureRow> = read_jsonl(path)?;
    let data: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
    let settings = &ctx.config.cluster;
    let mut model = kmeans_fit(&data, settings.k, ctx.config.seed, settings.max_iters)?;
    if !settings.pinned_categories.is_empty() {
        let cats: Vec<Option<String>> = rows.iter().map(|r| r.category.clone()).collect();
        model = apply_category_override(&model, &cats, &settings.pinned_categories);
    }
    if !ctx.json {
        for c in 0..model.k {
            eprintln!("cluster {c}: {} objects", model.members(c).len());
        }
        eprintln!("wcss {:.6e} after {} iterations", model.wcss(&data), model.iterations);
    }
    let out = ClusterOutput {
        object_ids: rows.into_iter().map(|r| r.object_id).collect(),
        model,
    };
    ctx.emit(&(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn gate_train(ctx: &Ctx, features: &Path, targets: &Path, loss_csv: Option<PathBuf>) -> Result<ExitCode> {
    let out = ctx.require_out("gate-train")?.to_path_buf();
    let rows: Vec<FeatureRow> = read_jsonl(features)?;
    let targets: Vec<ExpertScoreRecord> = read_jsonl(targets)?;
    let by_id: BTreeMap<&str, &FeatureRow> = rows.iter().map(|r| (r.object_id.as_str(), r)).collect();
    let x: Vec<Vec<f64>> = targets
        .iter()
        .map(|t| {
            by_id
                .get(t.object_id.as_str())
                .map(|r| r.features.clone())
                .ok_or_else(|| anyhow!("no feature row for object `{}`", t.object_id))
        })
        .collect::<Result<_>>()?;
    let model = gating_train(&x, &targets, &ctx.config.gating)?;
    fs::write(&out, serde_json::to_string_pretty(&model)? + "\n")?;
    let loss_path = loss_csv.unwrap_or_else(|| out.with_extension("loss.csv"));
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in model.loss_history.iter().enumerate() {
        csv.push_str(&format!("{i},{l}\n"));
    }
    fs::write(&loss_path, csv)?;
    let correct = x
        .iter()
        .zip(&targets)
        .filter(|(xi, t)| model.select(xi) == argmax(&t.p))
        .count();
    let summary = serde_json::json!({
        "final_loss": model.loss_history.last(),
        "accuracy": correct as f64 / targets.len() as f64,
        "model": out,
        "loss_csv": loss_path,
    });
    if ctx.json {
        println!("{summary}");
    } else {
        println!(
            "final loss {:.6} accuracy {:.3} ({} records)",
            model.loss_history.last().copied().unwrap_or(f64::NAN),
            correct as f64 / targets.len() as f64,
            targets.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Selection {
    object_id: String,
    expert: usize,
    scores: Vec<f64>,
}

fn gate_select(ctx: &Ctx, model_path: &Path, features: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let model: GatingModel = serde_json::from_str(&text).context("parsing gating model")?;
    let rows: Vec<FeatureRow> = read_jsonl(features)?;
    let mut out = Vec::new();
    for r in rows {
        if r.features.len() != model.n_features() {
            bail!(
                "object `{}` has {} features, model expects {}",
                r.object_id,
                r.features.len(),
                model.n_features()
            );
        }
        let p = model.predict(&r.features);
        out.push(Selection {
            object_id: r.object_id,
            expert: argmax(p.as_slice()),
            scores: p.iter().copied().collect(),
        });
    }
    ctx.emit(&to_jsonl(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn reward_eval(ctx: &Ctx, trajectory: &Path, targets: &Path, arm_joints: &[usize]) -> Result<ExitCode> {
    let frames = read_trajectory(trajectory)?;
    let text = fs::read_to_string(targets).with_context(|| format!("reading {}", targets.display()))?;
    let targets: RewardTargets = serde_json::from_str(&text).context("parsing reward targets")?;
    let dof = targets.q_target.len();
    targets.validate(dof)?;
    for (i, f) in frames.iter().enumerate() {
        if f.q.len() != dof || f.qd.len() != dof {
            bail!("frame {i}: joint vectors do not match the {dof} target joints");
        }
    }
    if let Some(j) = arm_joints.iter().find(|&&j| j >= dof) {
        return Err(usage(format!("arm joint {j} out of range")));
    }
    let weights = &ctx.config.reward;
    let rewards = evaluate_trajectory(&frames, &targets, weights);
    let hand_joints: Vec<usize> = (0..dof).filter(|j| !arm_joints.contains(j)).collect();
    let metrics = trajectory_metrics(&frames, arm_joints, &hand_joints, &targets.consistency_groups)?;
    let success = success_experiment(&frames, &Vector3::from(targets.object_target), weights.delta);

    let mut csv = String::from("frame,goal,reach,lift,move,smooth,consistency,total\n");
    for (i, b) in rewards.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{},{}\n",
            b.goal, b.reach, b.lift, b.move_, b.smooth, b.consistency, b.total
        ));
    }
    ctx.emit(&csv)?;
    let total: f64 = rewards.iter().map(|b| b.total).sum();
    let summary = serde_json::json!({
        "frames": frames.len(),
        "return": total,
        "success": success,
        "arm_osc": metrics.arm_osc,
        "hand_osc": metrics.hand_osc,
        "fdc": metrics.fdc,
    });
    if ctx.json {
        eprintln!("{summary}");
    } else {
        eprintln!(
            "frames {} return {:.6} success {} arm_osc {} hand_osc {} fdc {:.6}",
            frames.len(),
            total,
            success,
            metrics.arm_osc,
            metrics.hand_osc,
            metrics.fdc
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn stats(ctx: &Ctx, paths: &[PathBuf]) -> Result<ExitCode> {
    let mut records = Vec::new();
    for p in paths {
        records.extend(read_records(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let s = dataset_stats(&records);
    if ctx.json {
        ctx.emit(&(serde_json::to_string_pretty(&s)? + "\n"))?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut t = String::new();
    t.push_str(&format!("{:<24} {:>8}\n", "split", "records"));
    for (split, n) in &s.per_split {
        t.push_str(&format!("{:<24} {:>8}\n", split.name(), n));
    }
    t.push_str(&format!("{:<24} {:>8}\n\n", "total", s.total));
    t.push_str(&format!("{:<24} {:>8}\n", "category", "records"));
    for (cat, n) in &s.per_category {
        t.push_str(&format!("{:<24} {:>8}\n", cat, n));
    }
    t.push_str(&format!("\n{} categories\n", s.per_category.len()));
    if !s.cross_split_duplicates.is_empty() {
        t.push_str(&format!(
            "object ids in more than one split: {}\n",
            s.cross_split_duplicates.join(", ")
        ));
    }
    ctx.emit(&t)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(ctx: &Ctx, path: &Path, clouds_dir: Option<PathBuf>) -> Result<ExitCode> {
    let records = read_records(path).with_context(|| format!("reading {}", path.display()))?;
    let model = ctx.hand()?;
    let base = clouds_dir.unwrap_or_else(|| parent_dir(path));
    let refine = &ctx.config.pipeline.refine;
    let audit = AuditConfig {
        surface_eps: ctx.config.pipeline.contact.surface_eps,
        fingertip_radius: refine.fingertip_radius,
        penetration_tol: refine.penetration_tol,
    };
    let report = validate_records(&records, &model, resolve_from_dir(&base), &audit)?;
    if ctx.json {
        ctx.emit(&to_jsonl(&report)?)?;
    } else {
        let mut t = String::new();
        for a in &report {
            t.push_str(&format!("{} {}\n", if a.passed { "PASS" } else { "FAIL" }, a.object_id));
            for f in &a.failures {
                t.push_str(&format!("    {f}\n"));
            }
        }
        ctx.emit(&t)?;
    }
    let failed = report.iter().filter(|a| !a.passed).count();
    eprintln!("{} of {} records passed", report.len() - failed, report.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn report(ctx: &Ctx, csvs: &[PathBuf]) -> Result<ExitCode> {
    let dir = ctx.require_out("report")?.to_path_buf();
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for path in csvs {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let series = svg::parse_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
        for s in series {
            let file = dir.join(format!("{}_{}.svg", stem(path), svg::slug(&s.name)));
            fs::write(&file, svg::render(&s))?;
            written.push(file);
        }
    }
    for f in &written {
        println!("{}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn write_fixtures(ctx: &Ctx, points: usize) -> Result<ExitCode> {
    if points < 16 {
        return Err(usage("--points must be at least 16"));
    }
    let dir = ctx.require_out("fixtures")?.to_path_buf();
    fs::create_dir_all(&dir)?;
    for (name, cloud) in fixtures::bundled_objects(points) {
        let path = dir.join(format!("{name}.ply"));
        save_cloud(&cloud, &path)?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
