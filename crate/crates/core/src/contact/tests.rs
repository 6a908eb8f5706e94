use super::*;
use crate::fixtures;
use crate::geometry::compute_pca;

fn axes_with_major(major: Vector3<f64>) -> PrincipalAxes {
    let major = major.normalize();
    let helper = if major.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let a1 = major.cross(&helper).normalize();
    let a2 = major.cross(&a1);
    PrincipalAxes {
        centroid: Vector3::zeros(),
        axes: [major, a1, a2],
        variances: [3.0, 2.0, 1.0],
    }
}

fn contact(finger: Finger, p: [f64; 3], n: [f64; 3]) -> Contact {
    Contact {
        finger,
        position: Vector3::from(p),
        normal: Vector3::from(n).normalize(),
    }
}

#[test]
fn strategy_rule() {
    assert_eq!(select_strategy(&axes_with_major(Vector3::z()), 30.0), GraspStrategy::Horizontal);
    assert_eq!(select_strategy(&axes_with_major(Vector3::x()), 30.0), GraspStrategy::Vertical);
    let t = 29f64.to_radians();
    let tilted = Vector3::new(t.sin(), 0.0, t.cos());
    assert_eq!(select_strategy(&axes_with_major(tilted), 30.0), GraspStrategy::Horizontal);
    let t = 31f64.to_radians();
    let tilted = Vector3::new(t.sin(), 0.0, t.cos());
    assert_eq!(select_strategy(&axes_with_major(tilted), 30.0), GraspStrategy::Vertical);
}

#[test]
fn strategy_is_scale_invariant() {
    for (i, cloud) in [
        fixtures::cylinder_surface(0.03, 0.2, 800, 1),
        fixtures::box_surface([0.2, 0.05, 0.04], 800, 2),
    ]
    .iter()
    .enumerate()
    {
        let base = select_strategy(&compute_pca(cloud).unwrap(), 30.0);
        for s in [0.01, 0.5, 3.0, 100.0] {
            let scaled = cloud.scaled(s);
            assert_eq!(select_strategy(&compute_pca(&scaled).unwrap(), 30.0), base, "fixture {i}");
        }
    }
}

#[test]
fn contact_set_validation() {
    let c = |f| contact(f, [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
    assert!(ContactSet::new(vec![c(Finger::Thumb); 5]).is_err());
    assert!(ContactSet::new(Finger::ALL[..4].iter().map(|&f| c(f)).collect()).is_err());
    let set = ContactSet::new(Finger::ALL.iter().rev().map(|&f| c(f)).collect()).unwrap();
    assert_eq!(set.iter().map(|c| c.finger).collect::<Vec<_>>(), Finger::ALL.to_vec());
}

#[test]
fn contact_set_json_format() {
    let set = ContactSet::new(
        Finger::ALL
            .iter()
            .enumerate()
            .map(|(i, &f)| contact(f, [i as f64, 0.0, 0.5], [1.0, 0.0, 0.0]))
            .collect(),
    )
    .unwrap();
    let json = serde_json::to_value(&set).unwrap();
    assert_eq!(json["contacts"][0]["finger"], "thumb");
    assert_eq!(json["contacts"][1]["p"], serde_json::json!([1.0, 0.0, 0.5]));
    assert_eq!(json["contacts"][4]["n"], serde_json::json!([1.0, 0.0, 0.0]));
    let back: ContactSet = serde_json::from_value(json).unwrap();
    assert_eq!(back, set);
    let bad = serde_json::json!({"contacts": [{"finger": "thumb", "p": [0,0,0], "n": [0,0,1]}]});
    assert!(serde_json::from_value::<ContactSet>(bad).is_err());
}

#[test]
fn box_contacts_oppose_across_y() {
    let cloud = fixtures::box_lattice([0.06, 0.04, 0.10], 0.004);
    let set = generate_contacts(&cloud, GraspStrategy::Horizontal, &ContactConfig::default()).unwrap();
    let thumb = set.get(Finger::Thumb);
    assert!((thumb.position.y + 0.02).abs() < 1e-12, "thumb at {:?}", thumb.position);
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for f in [Finger::Index, Finger::Middle, Finger::Ring, Finger::Little] {
        let c = set.get(f);
        assert!((c.position.y - 0.02).abs() < 1e-12, "{f} at {:?}", c.position);
        xs.push(c.position.x);
        zs.push(c.position.z);
    }
    let (xmin, xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(thumb.position.x >= xmin - 1e-12 && thumb.position.x <= xmax + 1e-12);
    // index highest, little lowest, strictly stacked
    assert!(zs.windows(2).all(|w| w[0] > w[1]), "{zs:?}");
    assert!(set.violations(&cloud, 0.005).is_empty());
}

#[test]
fn sphere_contact_normals_are_radial() {
    let cloud = fixtures::sphere_surface(0.03, 2000, 4);
    for strategy in [GraspStrategy::Horizontal, GraspStrategy::Vertical] {
        let set = generate_contacts(&cloud, strategy, &ContactConfig::default()).unwrap();
        for c in set.iter() {
            let cos = c.normal.dot(&c.position.normalize());
            assert!(cos > 5f64.to_radians().cos(), "{} off radial", c.finger);
        }
    }
    // same with estimated normals
    let bare = PointCloud::new(cloud.points().to_vec());
    let set = generate_contacts(&bare, GraspStrategy::Horizontal, &ContactConfig::default()).unwrap();
    for c in set.iter() {
        assert!(c.normal.dot(&c.position.normalize()) > 5f64.to_radians().cos());
    }
}

#[test]
fn rod_vertical_grasp_straddles_x() {
    let r = 0.01;
    let cloud = fixtures::cylinder_side(r, 0.2, 3000, 5);
    let cfg = ContactConfig::default();
    let set = generate_contacts(&cloud, GraspStrategy::Vertical, &cfg).unwrap();
    // extremum points may sit anywhere within the band below the rim
    let rim = r - cfg.extremum_band;
    let thumb = set.get(Finger::Thumb).position;
    assert!(thumb.x <= -rim, "thumb x = {}", thumb.x);
    for f in [Finger::Index, Finger::Middle, Finger::Ring, Finger::Little] {
        assert!(set.get(f).position.x >= rim);
    }
    // top-down: all contacts in the upper half
    assert!(set.iter().all(|c| c.position.z >= 0.0));
}

#[test]
fn flat_patch_has_no_grasp_surface() {
    let cloud = fixtures::plane_patch(0.1, 0.08, 500, 6);
    let cfg = ContactConfig::default();
    // side grasp: the patch has no thickness to pinch
    let err = generate_contacts(&cloud, GraspStrategy::Horizontal, &cfg);
    assert!(matches!(err, Err(Error::NoGraspSurface(_))), "{err:?}");
    // top-down grasp finds rim points, but they all push the same way
    let set = generate_contacts(&cloud, GraspStrategy::Vertical, &cfg).unwrap();
    let err = refine_contacts(&set, &cloud, &cfg);
    assert!(matches!(err, Err(Error::NoGraspSurface(_))), "{err:?}");
}

#[test]
fn generated_sets_satisfy_invariants() {
    let cfg = ContactConfig::default();
    for (name, cloud) in fixtures::bundled_objects(1500) {
        for strategy in [GraspStrategy::Horizontal, GraspStrategy::Vertical] {
            let set = generate_contacts(&cloud, strategy, &cfg).unwrap();
            assert!(set.violations(&cloud, cfg.surface_eps).is_empty(), "{name}");
        }
    }
}

fn sphere_set(points: [[f64; 3]; 5]) -> ContactSet {
    ContactSet::new(
        Finger::ALL
            .iter()
            .zip(points)
            .map(|(&f, p)| contact(f, p, p))
            .collect(),
    )
    .unwrap()
}

#[test]
fn coincident_antipodal_pair_cannot_resist_torsion() {
    let set = sphere_set([
        [-1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
    ]);
    let frame = WrenchFrame {
        center: Vector3::zeros(),
        radius: 1.0,
    };
    let r = check_force_closure_in(&set, 0.5, 8, &frame).unwrap();
    assert!(!r.closed);
    assert_eq!(r.quality, 0.0);
}

#[test]
fn spread_antipodal_grasp_is_closed() {
    let s = 0.2f64;
    let c = (1.0 - s * s).sqrt();
    let set = sphere_set([
        [-1.0, 0.0, 0.0],
        [c, s, 0.0],
        [c, 0.0, s],
        [c, -s, 0.0],
        [c, 0.0, -s],
    ]);
    let r = check_force_closure(&set, 0.5, 8).unwrap();
    assert!(r.closed && r.quality > 0.0);
    assert_eq!(r.friction_coefficient, 0.5);
}

#[test]
fn one_hemisphere_parallel_normals_is_open() {
    let set = ContactSet::new(
        Finger::ALL
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let a = i as f64 * 1.2;
                contact(f, [0.5 * a.cos(), 0.5 * a.sin(), 0.8], [0.0, 0.0, 1.0])
            })
            .collect(),
    )
    .unwrap();
    let r = check_force_closure(&set, 0.1, 8).unwrap();
    assert!(!r.closed);
}

#[test]
fn frictionless_contacts_cannot_close() {
    let s = 0.2f64;
    let c = (1.0 - s * s).sqrt();
    let set = sphere_set([
        [-1.0, 0.0, 0.0],
        [c, s, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [c, 0.0, -s],
    ]);
    assert!(!check_force_closure(&set, 0.0, 8).unwrap().closed);
    assert!(!check_force_closure(&set, 1e-9, 8).unwrap().closed);
}

#[test]
fn zero_normal_is_rejected() {
    let mut pts = Finger::ALL.map(|f| contact(f, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])).to_vec();
    pts[2].normal = Vector3::zeros();
    let set = ContactSet::new(pts).unwrap();
    assert!(matches!(check_force_closure(&set, 0.5, 8), Err(Error::InvalidContacts(_))));
    let ok = sphere_set([[1.0, 0.0, 0.0]; 5]);
    assert!(check_force_closure(&ok, 0.5, 3).is_err());
    assert!(check_force_closure(&ok, -0.1, 8).is_err());
}

#[test]
fn refinement_reaches_a_fixed_point() {
    let cloud = fixtures::box_surface([0.06, 0.04, 0.10], 1500, 7);
    let cfg = ContactConfig::default();
    let set = generate_contacts(&cloud, GraspStrategy::Horizontal, &cfg).unwrap();
    let mut long = cfg.clone();
    long.max_iters = 100;
    let refined = refine_contacts(&set, &cloud, &long).unwrap();
    assert!(refined.report.quality >= refined.initial_quality);
    let again = refine_contacts(&refined.contacts, &cloud, &long).unwrap();
    assert_eq!(again.contacts, refined.contacts);
    assert_eq!(again.report.quality, refined.report.quality);
}

#[test]
fn refinement_recovers_from_offset_thumb() {
    let cloud = fixtures::box_surface([0.06, 0.04, 0.10], 2000, 8);
    let cfg = ContactConfig::default();
    let set = generate_contacts(&cloud, GraspStrategy::Horizontal, &cfg).unwrap();
    let thumb = set.get(Finger::Thumb).position;
    let target = thumb + Vector3::new(0.005, 0.0, 0.0);
    let normals = cloud.normals().unwrap();
    let (idx, _) = cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(i, _)| normals[*i].y < -0.99)
        .map(|(i, p)| (i, (p - target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let perturbed = set.with_contact(Contact {
        finger: Finger::Thumb,
        position: cloud.points()[idx],
        normal: normals[idx],
    });
    let refined = refine_contacts(&perturbed, &cloud, &cfg).unwrap();
    assert!(
        refined.report.quality > refined.initial_quality,
        "{} -> {}",
        refined.initial_quality,
        refined.report.quality
    );
}

#[test]
fn refinement_on_a_plane_fails() {
    let cloud = fixtures::plane_patch(0.1, 0.1, 400, 9);
    let pts: Vec<Contact> = Finger::ALL
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let p = cloud.points()[i * 37];
            contact(f, [p.x, p.y, p.z], [0.0, 0.0, 1.0])
        })
        .collect();
    let set = ContactSet::new(pts).unwrap();
    let err = refine_contacts(&set, &cloud, &ContactConfig::default());
    assert!(matches!(err, Err(Error::NoGraspSurface(_))));
}
