//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#[path = "../../core/tests/support/fixtures.rs"]
#[allow(dead_code)]
mod fixtures;
#[path = "../../core/tests/support/lp.rs"]
#[allow(dead_code)]
mod lp;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use contactgrasp::cluster_gate::{
    argmax, gating_train, kl_divergence, kmeans_fit, ExpertScoreRecord, GatingConfig, GatingModel,
};
use contactgrasp::contact::{
    check_force_closure, contact_wrenches, Contact, ContactSet, Finger, WrenchFrame, DEFAULT_CONE_EDGES,
};
use contactgrasp::dataset::{read_records, GraspRecord, Provenance, RecordMeta, Split};
use contactgrasp::fixtures::{bundled_objects, plane_patch};
use contactgrasp::hand::{HandModel, JointState};
use contactgrasp::pipeline::{synthesize, PipelineConfig, Stage, Synthesis};
use contactgrasp::refine::{
    simulate_refinement_observed, GraspPose, RefineConfig,
};
use contactgrasp::retarget::{compute_wrist_frame, extract_topology, solve_retarget, RetargetConfig, WristParams};
use contactgrasp::reward::{per_finger_penalty, reward_consistency, reward_proximity, reward_smooth};
use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.normalize();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + angle.sin() * kx + (1.0 - angle.cos()) * kx * kx
}

fn wrist_frame() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let l_p = HandModel::five_finger().middle_finger_length();
    let mut worst = [0.0f64; 4];
    let mut used = 0;
    while used < 1000 {
        let (set, _) = fixtures::random_contact_set(&mut rng, used);
        let centroid = set.centroid() + 0.02 * Vector3::new(rng.random(), rng.random(), rng.random());
        let Ok(topo) = extract_topology(&set, &centroid) else {
            continue;
        };
        used += 1;
        let params = WristParams {
            y_d: rng.random_range(0.0..0.08),
            roll_deg: rng.random_range(-30.0..30.0),
            pitch_deg: rng.random_range(-30.0..30.0),
        };
        let f = compute_wrist_frame(&topo, l_p, &params);
        let palm = set.centroid() + Vector3::new(0.0, 0.0, 0.75 * l_p);
        let eq1 = (f.palm_origin - palm).norm();
        let eq2 = (f.origin - (f.palm_origin + params.y_d * f.rotation.column(1))).norm();
        let ortho = (f.rotation.transpose() * f.rotation - Matrix3::identity()).abs().max();
        let det = (f.rotation.determinant() - 1.0).abs();
        for (w, v) in worst.iter_mut().zip([eq1, eq2, ortho, det]) {
            *w = w.max(v);
        }
    }
    check(worst.iter().all(|w| *w < 1e-9), || format!("residuals {worst:?}"))?;

    // composed roll/pitch against rotations about the rotated body axes
    let mut oracle_err = 0.0f64;
    let params = WristParams {
        roll_deg: 10.0,
        pitch_deg: 20.0,
        ..Default::default()
    };
    for i in 0..100 {
        let (set, _) = fixtures::random_contact_set(&mut rng, i);
        let Ok(topo) = extract_topology(&set, &(set.centroid() - Vector3::new(0.0, 0.0, 0.05))) else {
            continue;
        };
        let f = compute_wrist_frame(&topo, l_p, &params);
        let base = Matrix3::from_columns(&[topo.grasp_axis, topo.lateral_axis, topo.palm_normal]);
        let roll = rodrigues(&topo.grasp_axis, 10f64.to_radians());
        let lateral = roll * topo.lateral_axis;
        let oracle = rodrigues(&lateral, 20f64.to_radians()) * roll * base;
        oracle_err = oracle_err.max((oracle - f.rotation).abs().max());
    }
    check(oracle_err < 1e-12, || format!("roll/pitch oracle error {oracle_err:e}"))?;
    Ok(format!(
        "1000 sets, max residuals eq1 {:.1e} eq2 {:.1e} orthonormality {:.1e}; roll/pitch oracle {oracle_err:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn retarget_recovery() -> Outcome {
    let m = HandModel::five_finger();
    check(m.dof() == 16, || format!("{} joints", m.dof()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let cfg = RetargetConfig {
        beta: 0.0,
        ..Default::default()
    };
    let (mut ok, mut monotone, runs) = (0, 0, 200);
    let mut worst = 0.0f64;
    for _ in 0..runs {
        let q_star = DVector::from_iterator(m.dof(), m.joints().iter().map(|j| rng.random_range(j.lower..=j.upper)));
        let fk = m.fk(q_star.as_slice(), &Isometry3::identity());
        let targets: Vec<_> = m.fingertips().iter().zip(&fk.fingertips).map(|(t, p)| (t.finger, *p)).collect();
        let sol = solve_retarget(&m, &targets, &m.midpoints(), &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(sol.residual);
        ok += (sol.residual < 1e-8 && m.within_limits(&sol.q)) as usize;
        monotone += sol.objective_history.windows(2).all(|w| w[1] <= w[0]) as usize;
    }
    let rate = ok as f64 / runs as f64;
    check(rate >= 0.99 && monotone == runs, || {
        format!("recovered {ok}/{runs}, monotone {monotone}/{runs}")
    })?;
    Ok(format!("recovered {ok}/{runs} (worst residual {worst:.1e}), monotone {monotone}/{runs}"))
}

fn jacobian() -> Outcome {
    let m = HandModel::five_finger();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = DVector::from_iterator(m.dof(), m.joints().iter().map(|j| rng.random_range(j.lower..=j.upper)));
        let base = Isometry3::new(
            Vector3::new(rng.random(), rng.random(), rng.random()),
            Vector3::new(rng.random(), rng.random(), rng.random()),
        );
        let state = JointState::new(&m, q.clone()).map_err(|e| e.to_string())?;
        for tip in 0..m.fingertips().len() {
            let analytic = m.fk_jacobian(&state, &base, tip);
            let mut numeric = DMatrix::zeros(3, m.dof());
            for j in 0..m.dof() {
                let (mut a, mut b) = (q.clone(), q.clone());
                a[j] += h;
                b[j] -= h;
                let d = (m.fk(a.as_slice(), &base).fingertips[tip] - m.fk(b.as_slice(), &base).fingertips[tip]) / (2.0 * h);
                numeric.set_column(j, &d);
            }
            let scale = numeric.amax().max(1e-12);
            let err = (DMatrix::from_iterator(3, m.dof(), analytic.iter().copied()) - &numeric).amax() / scale;
            worst = worst.max(err);
        }
    }
    check(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("100 states x 5 fingertips, max relative error {worst:.1e}"))
}

fn sphere_contacts(points: [[f64; 3]; 5]) -> ContactSet {
    ContactSet::new(
        Finger::ALL
            .iter()
            .zip(points)
            .map(|(&finger, p)| Contact {
                finger,
                position: Vector3::from(p),
                normal: Vector3::from(p),
            })
            .collect(),
    )
    .unwrap()
}

fn force_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut agree, mut closed) = (0, 0);
    for i in 0..500 {
        let (set, mu) = fixtures::random_contact_set(&mut rng, i);
        let report = check_force_closure(&set, mu, DEFAULT_CONE_EDGES).map_err(|e| e.to_string())?;
        let w = contact_wrenches(&set, mu, DEFAULT_CONE_EDGES, &WrenchFrame::from_contacts(&set))
            .map_err(|e| e.to_string())?;
        let pts: Vec<Vec<f64>> = w.iter().map(|v| v.iter().copied().collect()).collect();
        agree += (report.closed == lp::origin_strictly_inside(&pts, 1e-9)) as usize;
        closed += report.closed as usize;
    }
    check(agree == 500, || format!("agreement {agree}/500"))?;

    let s = 0.2f64;
    let c = (1.0 - s * s).sqrt();
    let antipodal = sphere_contacts([[-1.0, 0.0, 0.0], [c, s, 0.0], [c, 0.0, s], [c, -s, 0.0], [c, 0.0, -s]]);
    let a = check_force_closure(&antipodal, 0.5, DEFAULT_CONE_EDGES).map_err(|e| e.to_string())?;
    check(a.closed, || "antipodal sphere fixture is open".into())?;
    let hemisphere = ContactSet::new(
        Finger::ALL
            .iter()
            .enumerate()
            .map(|(i, &finger)| {
                let t = i as f64 * 1.2;
                Contact {
                    finger,
                    position: Vector3::new(0.5 * t.cos(), 0.5 * t.sin(), 0.8),
                    normal: Vector3::z(),
                }
            })
            .collect(),
    )
    .unwrap();
    let h = check_force_closure(&hemisphere, 0.5, DEFAULT_CONE_EDGES).map_err(|e| e.to_string())?;
    check(!h.closed, || "parallel-normal hemisphere fixture is closed".into())?;
    Ok(format!(
        "500/500 agree with the LP oracle ({closed} closed); antipodal closed (quality {:.3}); hemisphere open",
        a.quality
    ))
}

fn refinement_safety() -> Outcome {
    let m = HandModel::five_finger();
    let cfg = RefineConfig::default();
    let objects: Vec<_> = bundled_objects(2048)
        .into_iter()
        .map(|(name, c)| (name, c.ensure_normals()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut monotone, mut touched) = (0.0f64, 0, 0);
    for i in 0..50 {
        let (_, cloud) = &objects[i % objects.len()];
        // palm above the object facing down, fingers open
        let top = cloud.points().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        let rot = *Rotation3::from_euler_angles(
            rng.random_range(-0.15..0.15),
            rng.random_range(-0.15..0.15),
            rng.random_range(-3.14..3.14),
        )
        .matrix();
        let center = Vector3::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01), top + rng.random_range(0.035..0.06));
        let start = GraspPose {
            rotation: rot,
            translation: center - rot * Vector3::new(0.06, 0.0, 0.0),
            q: m.clamp_to_limits(&DVector::zeros(m.dof())),
        };
        let q_d = DVector::from_iterator(
            m.dof(),
            m.joints().iter().map(|j| rng.random_range(j.lower + 0.6 * (j.upper - j.lower)..=j.upper)),
        );
        let (mut mono, mut last) = (true, 0);
        let r = simulate_refinement_observed(&m, cloud, &start, &q_d, &cfg, |s| {
            let n = s.frozen.iter().filter(|f| **f).count();
            mono &= n >= last;
            last = n;
        })
        .map_err(|e| e.to_string())?;
        worst = worst.max(r.max_penetration);
        monotone += mono as usize;
        touched += !r.frozen_fingers.is_empty() as usize;
    }
    check(worst <= 1e-3 && monotone == 50, || {
        format!("max penetration {:.3} mm, monotone {monotone}/50", worst * 1e3)
    })?;

    let far = plane_patch(0.1, 0.1, 50, 1).transformed(&Matrix3::identity(), &Vector3::new(10.0, 0.0, 0.0));
    let mut free_err = 0.0f64;
    for _ in 0..10 {
        let q_d = DVector::from_iterator(m.dof(), m.joints().iter().map(|j| rng.random_range(j.lower..=j.upper)));
        let start = GraspPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            q: m.midpoints(),
        };
        let r = simulate_refinement_observed(&m, &far, &start, &q_d, &cfg, |_| {}).map_err(|e| e.to_string())?;
        free_err = free_err.max((&r.final_pose.q - &q_d).amax());
    }
    check(free_err < 1e-3, || format!("free-space error {free_err:e}"))?;
    Ok(format!(
        "50 runs: max final penetration {:.3} mm, frozen set monotone 50/50, {touched} runs froze a finger; free-space error {free_err:.1e}",
        worst * 1e3
    ))
}

/// Bundled box, cylinder and sphere at 2048 points through the full pipeline.
fn syntheses() -> &'static Result<Vec<(String, Synthesis)>, String> {
    static CELL: OnceLock<Result<Vec<(String, Synthesis)>, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = HandModel::five_finger();
        let cfg = PipelineConfig::default();
        bundled_objects(2048)
            .into_iter()
            .map(|(name, cloud)| {
                synthesize(&cloud, None, &m, &cfg)
                    .map(|s| (name.to_string(), s))
                    .map_err(|f| format!("{name}: {:?} failed: {}", f.stage, f.error))
            })
            .collect()
    })
}

fn check_pregrasp(r: &GraspRecord, m: &HandModel) -> Result<(), String> {
    let dt = r.grasp.translation - r.pregrasp.translation;
    let along = dt.dot(&r.approach);
    check((dt.norm() - 0.020).abs() < 1e-12 && (along - 0.020).abs() < 1e-12, || {
        format!("{}: |dt| = {:.15}, along approach {:.15}", r.object_id, dt.norm(), along)
    })?;
    check(r.pregrasp.rotation == r.grasp.rotation, || format!("{}: rotation changed", r.object_id))?;
    let mid = m.midpoints();
    for &j in m.intermediate_joints() {
        check(r.pregrasp.q[j] == mid[j], || format!("{}: joint {} not at midpoint", r.object_id, m.joints()[j].name))?;
    }
    for j in (0..m.dof()).filter(|j| !m.intermediate_joints().contains(j)) {
        check(r.pregrasp.q[j] == r.grasp.q[j], || format!("{}: joint {} changed", r.object_id, m.joints()[j].name))?;
    }
    Ok(())
}

fn pregrasp(cli_records: &[GraspRecord]) -> Outcome {
    let m = HandModel::five_finger();
    let cfg = PipelineConfig::default();
    let synths = syntheses().as_ref().map_err(|e| e.clone())?;
    let mut records: Vec<GraspRecord> = synths
        .iter()
        .map(|(name, s)| {
            let meta = RecordMeta {
                object_id: name.clone(),
                category: name.clone(),
                split: Split::Train,
                cloud_ref: format!("{name}.ply").into(),
                cloud_sha256: None,
            };
            GraspRecord::from_synthesis(
                meta,
                s,
                cfg.pregrasp_offset,
                Provenance {
                    stages: Stage::ALL.to_vec(),
                    config_hash: String::new(),
                    seed: 0,
                },
            )
        })
        .collect();
    // the JSON round trip must keep the contract
    let text = serde_json::to_string(&records).map_err(|e| e.to_string())?;
    let parsed: Vec<GraspRecord> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    records.extend(parsed);
    records.extend(cli_records.iter().cloned());
    check(!records.is_empty(), || "no records".into())?;
    for r in &records {
        check_pregrasp(r, &m)?;
    }
    Ok(format!("{} records: offset 0.020 m along the approach, intermediate joints at midpoints", records.len()))
}

fn blobs(rng: &mut ChaCha8Rng, centers: &[[f64; 2]], per: usize, sigma: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for c in centers {
        for _ in 0..per {
            out.push(
                c.iter()
                    .map(|m| {
                        let u1: f64 = rng.random::<f64>().max(1e-300);
                        let u2: f64 = rng.random();
                        m + sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                    })
                    .collect(),
            );
        }
    }
    out
}

fn gating() -> Outcome {
    // zero loss when the targets are the model's own predictions
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = GatingModel {
        weights: DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0)),
        bias: DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0)),
        feature_mean: DVector::zeros(3),
        feature_scale: DVector::from_element(3, 1.0),
        loss_history: vec![],
    };
    let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let own: Vec<ExpertScoreRecord> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| ExpertScoreRecord::new(format!("o{i}"), model.predict(x).as_slice().to_vec()).unwrap())
        .collect();
    let zero = model.loss(&xs, &own);
    check(zero.abs() < 1e-12, || format!("loss at P̂ = P is {zero:e}"))?;
    let ln2 = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]);
    check((ln2 - std::f64::consts::LN_2).abs() < 1e-12, || format!("(1,0) vs (0.5,0.5) gave {ln2}"))?;

    let centers = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]];
    let features = blobs(&mut rng, &centers, 60, 0.4);
    let targets: Vec<ExpertScoreRecord> = (0..features.len())
        .map(|i| {
            let mut p = vec![0.0; 3];
            p[i / 60] = 1.0;
            ExpertScoreRecord::new(format!("s{i}"), p).unwrap()
        })
        .collect();
    let start = Instant::now();
    let trained = gating_train(&features, &targets, &GatingConfig { epochs: 2000, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let loss = *trained.loss_history.last().unwrap();
    let correct = features
        .iter()
        .zip(&targets)
        .filter(|(x, t)| trained.select(x) == argmax(&t.p))
        .count();
    let acc = correct as f64 / features.len() as f64;
    check(loss < 0.05 && acc >= 0.95 && secs < 10.0, || {
        format!("loss {loss:.4}, accuracy {acc:.3}, {secs:.2} s")
    })?;
    Ok(format!(
        "loss at P̂ = P {zero:.1e}; ln 2 error {:.1e}; separable set: loss {loss:.4}, accuracy {:.1}%, {secs:.2} s",
        (ln2 - std::f64::consts::LN_2).abs(),
        acc * 100.0
    ))
}

fn kmeans() -> Outcome {
    let centers = [[0.0, 0.0], [1.5, 0.0], [0.0, 2.0]];
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let data = blobs(&mut rng, &centers, 50, 0.05);
        let model = kmeans_fit(&data, 3, seed, 100).map_err(|e| e.to_string())?;
        check(model.wcss_history.windows(2).all(|w| w[1] <= w[0]), || {
            format!("seed {seed}: WCSS increased {:?}", model.wcss_history)
        })?;
        for c in &centers {
            let d = model
                .centroids
                .iter()
                .map(|mu| ((mu[0] - c[0]).powi(2) + (mu[1] - c[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    check(worst < 0.05, || format!("center error {worst}"))?;
    Ok(format!("10 seeds: WCSS monotone, max center error {worst:.4}"))
}

fn rewards() -> Outcome {
    let cases = [
        ("exp(0)", reward_proximity(0.0, 3.0), 1.0),
        ("exp(-2*0.5)", reward_proximity(0.5, 2.0), (-1.0f64).exp()),
        ("r_pf", per_finger_penalty(&[vec![0.1], vec![0.3], vec![0.2]]), 0.3),
        ("sum v^2", reward_smooth(&[1.0, 2.0]), 5.0),
        ("var{1,1,-1,-1}", reward_consistency(&[1.0, 1.0, -1.0, -1.0], &[vec![0, 1, 2, 3]]), 1.0),
        ("var{1,1,1,-1}", reward_consistency(&[1.0, 1.0, 1.0, -1.0], &[vec![0, 1, 2, 3]]), 0.75),
    ];
    for (name, got, want) in cases {
        check((got - want).abs() < 1e-12, || format!("{name}: {got} != {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let r = reward_proximity(rng.random_range(0.0..1e3), rng.random_range(1e-3..1e3));
        check(r > 0.0 && r <= 1.0, || format!("proximity {r} outside (0, 1]"))?;
        let qd: Vec<f64> = (0..4).map(|_| [-1.0, 0.0, 1.0][rng.random_range(0..3)] * rng.random::<f64>()).collect();
        let c = reward_consistency(&qd, &[vec![0, 1, 2, 3]]);
        check((0.0..=1.0).contains(&c), || format!("consistency {c} outside [0, 1]"))?;
    }
    Ok("6 closed forms within 1e-12; 10000 samples inside the proximity and consistency ranges".into())
}

fn timing() -> Outcome {
    let synths = syntheses().as_ref().map_err(|e| e.clone())?;
    let mut parts = Vec::new();
    for (name, s) in synths {
        let t = s.timings;
        let (contacts, retarget) = (t.contacts.unwrap_or(f64::NAN), t.retarget.unwrap_or(f64::NAN));
        check(t.total() <= 10.0 && contacts <= 0.5 && retarget <= 0.5, || {
            format!("{name}: total {:.2} s, contacts {contacts:.3} s, retarget {retarget:.3} s", t.total())
        })?;
        parts.push(format!("{name} {:.2} s (contacts {contacts:.3}, retarget {retarget:.3})", t.total()));
    }
    Ok(format!("2048 points: {}", parts.join("; ")))
}

fn determinism(dir: &Path) -> Result<(String, Vec<GraspRecord>), String> {
    let run = |args: &[&str]| -> Result<(), String> {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_contactgrasp"));
        for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("CONTACTGRASP_")) {
            cmd.env_remove(k);
        }
        let o = cmd.current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
        check(o.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    };
    run(&["--out", "fx", "fixtures", "--points", "2048"])?;
    let clouds = ["fx/box.ply", "fx/cylinder.ply", "fx/sphere.ply"];
    for out in ["a.jsonl", "b.jsonl"] {
        let mut args = vec!["--seed", "7", "--out", out, "synth"];
        args.extend(clouds);
        run(&args)?;
    }
    let a = std::fs::read(dir.join("a.jsonl")).map_err(|e| e.to_string())?;
    let b = std::fs::read(dir.join("b.jsonl")).map_err(|e| e.to_string())?;
    check(!a.is_empty() && a == b, || "record files differ".into())?;
    let records = read_records(dir.join("a.jsonl")).map_err(|e| e.to_string())?;
    Ok((format!("{} records, {} bytes, identical", records.len(), a.len()), records))
}

fn report(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {name:<28} {detail} [{secs:.1} s]");
            true
        }
        Err(detail) => {
            println!("FAIL  {name:<28} {detail} [{secs:.1} s]");
            false
        }
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut cli_records = Vec::new();
    let results = [
        report("wrist frame", wrist_frame),
        report("retarget recovery", retarget_recovery),
        report("jacobian check", jacobian),
        report("force closure oracle", force_closure),
        report("refinement safety", refinement_safety),
        report("timing", timing),
        report("end-to-end determinism", || {
            determinism(dir.path()).map(|(msg, records)| {
                cli_records = records;
                msg
            })
        }),
        report("pre-grasp contract", || pregrasp(&cli_records)),
        report("gating kl", gating),
        report("k-means", kmeans),
        report("reward suite", rewards),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
