#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tendonflex::statics::joint_load_torques;
use tendonflex::{FingerGeometry, JointConfiguration, StiffnessVector};

pub const TEST_STIFFNESS: [f64; 3] = [28.48, 4.05, 4.05];
pub const TEST_SCALE: f64 = 1.5;

pub fn test_finger() -> FingerGeometry {
    FingerGeometry::reference().scaled(TEST_SCALE).unwrap()
}

pub fn test_stiffness() -> StiffnessVector {
    StiffnessVector::new(TEST_STIFFNESS.to_vec()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A finger with 1 to 4 links of 5 to 40 mm and random rest angles.
pub fn random_geometry(rng: &mut impl Rng) -> FingerGeometry {
    let m = rng.random_range(1..=4);
    let lengths: Vec<f64> = (0..m).map(|_| rng.random_range(0.005..0.04)).collect();
    let rest: Vec<f64> = (0..m)
        .map(|i| {
            let hi: f64 = if i == 0 { 90.0 } else { 30.0 };
            rng.random_range(0.0..hi).to_radians()
        })
        .collect();
    FingerGeometry::new(lengths, rest).unwrap()
}

/// Damped fixed-point iteration `Δθ ← max(0, Δθ + β(u(Δθ)/k − Δθ))`, run
/// until the update stalls. Shares only the load-torque evaluation with the
/// library solver.
pub fn fixed_point_oracle(geom: &FingerGeometry, k: &[f64], f_in: f64) -> Vec<f64> {
    let m = geom.joint_count();
    let beta = 0.5;
    let mut d = vec![0.0; m];
    for _ in 0..200_000 {
        let q = JointConfiguration::from_deflections(geom, &d).unwrap();
        let u = joint_load_torques(f_in, &q, geom).unwrap();
        let mut change: f64 = 0.0;
        for i in 0..m {
            let next = (d[i] + beta * (u[i] / k[i] - d[i])).max(0.0);
            change = change.max((next - d[i]).abs());
            d[i] = next;
        }
        if change < 1e-15 {
            break;
        }
    }
    d
}
