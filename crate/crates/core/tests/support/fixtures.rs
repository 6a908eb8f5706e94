//! Randomized five-contact sets for the force-closure oracle.

use contactgrasp::contact::{Contact, ContactSet, Finger};
use nalgebra::Vector3;
use rand::Rng;

fn unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Contacts on a sphere of radius 5 cm. Kinds cycle through spread
/// contacts, contacts confined to a cap and spread contacts with tilted
/// normals. Returns the set and a friction coefficient.
pub fn random_contact_set<R: Rng>(rng: &mut R, kind: usize) -> (ContactSet, f64) {
    let center = Vector3::new(
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    );
    let axis = unit(rng);
    let cap = rng.random_range(20f64..80.0).to_radians().cos();
    let contacts = Finger::ALL
        .iter()
        .map(|&finger| {
            let dir = match kind % 3 {
                1 => loop {
                    let d = unit(rng);
                    if d.dot(&axis) > cap {
                        break d;
                    }
                },
                _ => unit(rng),
            };
            let normal = if kind % 3 == 2 {
                (dir + 0.6 * unit(rng)).normalize()
            } else {
                dir
            };
            Contact {
                finger,
                position: center + 0.05 * dir,
                normal,
            }
        })
        .collect();
    (ContactSet::new(contacts).unwrap(), rng.random_range(0.1..1.0))
}
