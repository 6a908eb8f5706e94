use std::collections::HashMap;

use contactgrasp::hand::HandModel;
use nalgebra::{DVector, Isometry3, Matrix3, Matrix4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rodrigues' formula.
fn rot_axis(axis: Vector3<f64>, a: f64) -> Matrix3<f64> {
    let k = axis.normalize();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + a.sin() * kx + (1.0 - a.cos()) * kx * kx
}

fn homogeneous(r: Matrix3<f64>, t: Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

fn vec3(v: &Value) -> Vector3<f64> {
    Vector3::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap(), v[2].as_f64().unwrap())
}

/// Fingertips straight from the JSON description with 4×4 matrices.
fn oracle_fingertips(desc: &Value, q: &[f64]) -> Vec<Vector3<f64>> {
    let joints = desc["joints"].as_array().unwrap();
    let mut link_frames: HashMap<String, Matrix4<f64>> = HashMap::new();
    link_frames.insert("wrist".into(), Matrix4::identity());
    let mut remaining: Vec<usize> = (0..joints.len()).collect();
    while !remaining.is_empty() {
        remaining.retain(|&i| {
            let j = &joints[i];
            let Some(parent) = link_frames.get(j["parent"].as_str().unwrap()).copied() else {
                return true;
            };
            let origin = &j["origin"];
            let xyz = if origin["xyz"].is_array() { vec3(&origin["xyz"]) } else { Vector3::zeros() };
            let rpy = if origin["rpy"].is_array() { vec3(&origin["rpy"]) } else { Vector3::zeros() };
            let fixed = homogeneous(rot_z(rpy.z) * rot_y(rpy.y) * rot_x(rpy.x), xyz);
            let motion = homogeneous(rot_axis(vec3(&j["axis"]), q[i]), Vector3::zeros());
            link_frames.insert(j["child"].as_str().unwrap().to_string(), parent * fixed * motion);
            false
        });
    }
    desc["fingertips"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            let frame = link_frames[t["link"].as_str().unwrap()];
            let o = vec3(&t["offset"]);
            let p = frame * Vector4::new(o.x, o.y, o.z, 1.0);
            Vector3::new(p.x, p.y, p.z)
        })
        .collect()
}

#[test]
fn five_finger_fk_matches_matrix_chain() {
    let desc: Value = serde_json::from_str(include_str!("../assets/five_finger.json")).unwrap();
    let m = HandModel::five_finger();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let q: Vec<f64> = m.joints().iter().map(|j| rng.random_range(j.lower..=j.upper)).collect();
        let ours = m.fk(&q, &Isometry3::identity()).fingertips;
        let theirs = oracle_fingertips(&desc, &q);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).norm() < 1e-12, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn planar_two_link_closed_form() {
    let m = HandModel::planar_two_link();
    let desc: Value = serde_json::from_str(include_str!("../assets/planar_two_link.json")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let q = DVector::from_iterator(2, m.joints().iter().map(|j| rng.random_range(j.lower..=j.upper)));
        let tip = m.fk(q.as_slice(), &Isometry3::identity()).fingertips[0];
        assert!((tip - oracle_fingertips(&desc, q.as_slice())[0]).norm() < 1e-12);
    }
}
