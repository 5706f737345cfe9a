mod common;

use common::*;
use rand::Rng;
use tendonflex::equilibrium::{ramp_steps, solve_with_clamps_from};
use tendonflex::statics::joint_load_torques;
use tendonflex::{
    force_ramp, solve_equilibrium, solve_with_clamps, tendon_excursion, ClampSet, Error,
    FingerGeometry, JointConfiguration, SolverOptions, StiffnessVector,
};

fn cold(g: &FingerGeometry, k: &StiffnessVector, f: f64) -> JointConfiguration {
    solve_equilibrium(g, k, f, &JointConfiguration::rest(g), &SolverOptions::default())
        .unwrap()
        .config
}

#[test]
fn one_joint_finger_matches_bisection() {
    let g = FingerGeometry::new(vec![0.03], vec![0.4]).unwrap();
    let k = 0.35;
    let stiffness = StiffnessVector::new(vec![k]).unwrap();
    for f in [0.5, 2.0, 10.0, 40.0] {
        let rho = |d: f64| {
            let q = JointConfiguration::from_deflections(&g, &[d]).unwrap();
            joint_load_torques(f, &q, &g).unwrap()[0] - k * d
        };
        let (mut lo, mut hi) = (0.0, 3.0);
        assert!(rho(lo) > 0.0 && rho(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rho(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let solved = cold(&g, &stiffness, f).deflections()[0];
        assert!((solved - 0.5 * (lo + hi)).abs() < 1e-10, "f={f}: {solved} vs {lo}");
    }
}

#[test]
fn newton_matches_fixed_point_oracle_on_random_fingers() {
    let mut rng = rng(21);
    for _ in 0..30 {
        let g = random_geometry(&mut rng);
        let m = g.joint_count();
        let k: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..10.0)).collect();
        let f = rng.random_range(0.0..20.0);
        let solved = cold(&g, &StiffnessVector::new(k.clone()).unwrap(), f);
        let oracle = fixed_point_oracle(&g, &k, f);
        for (a, b) in solved.deflections().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn ramp_is_monotone_and_matches_cold_solves() {
    let g = test_finger();
    let k = test_stiffness();
    let schedule: Vec<f64> = (0..=15).map(|i| 5.0 * i as f64).collect();
    let traj = force_ramp(&g, &k, &schedule, &SolverOptions::default()).unwrap();
    assert_eq!(traj.points.len(), schedule.len());
    for w in traj.points.windows(2) {
        assert!(w[1].excursion > w[0].excursion);
        for (a, b) in w[0].config.angles().iter().zip(w[1].config.angles()) {
            assert!(b >= a);
        }
    }
    for p in &traj.points {
        let c = cold(&g, &k, p.f_in);
        for (a, b) in p.config.angles().iter().zip(c.angles()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn ramp_iterator_reports_the_failing_entry() {
    let g = test_finger();
    let k = test_stiffness();
    let opts = SolverOptions {
        max_iterations: 1,
        ..Default::default()
    };
    let schedule = [0.0, 10.0, 20.0];
    let results: Vec<_> = ramp_steps(&g, &k, &schedule, &opts).unwrap().collect();
    assert!(results[0].is_ok());
    assert_eq!(results.len(), 2);
    match &results[1] {
        Err(Error::Ramp { index, f_in, .. }) => assert_eq!((*index, *f_in), (1, 10.0)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn clamping_the_first_joint_leaves_distal_joints_unchanged() {
    let g = test_finger();
    let k = test_stiffness();
    let opts = SolverOptions::default();
    let free = cold(&g, &k, 40.0);
    let clamps = ClampSet::new().with(0, g.rest_angles()[0]).unwrap();
    let held = solve_with_clamps(&g, &k, 40.0, &clamps, &opts).unwrap();
    let q = &held.equilibrium.config;
    assert_eq!(q.angles()[0], g.rest_angles()[0]);
    for j in 1..3 {
        assert!((q.angles()[j] - free.angles()[j]).abs() < 1e-9);
    }
    let u = joint_load_torques(40.0, q, &g).unwrap();
    assert_eq!(held.reactions.len(), 1);
    assert!((held.reactions[0].1 + u[0]).abs() < 1e-12);
}

#[test]
fn clamped_solve_warm_start_agrees_with_cold_start() {
    let g = test_finger();
    let k = test_stiffness();
    let opts = SolverOptions::default();
    let clamps = ClampSet::new().with(1, 0.2).unwrap();
    let a = solve_with_clamps(&g, &k, 30.0, &clamps, &opts).unwrap();
    let init = JointConfiguration::from_deflections(&g, &[0.1, 0.2, 0.1]).unwrap();
    let b = solve_with_clamps_from(&g, &k, 30.0, &clamps, &init, &opts).unwrap();
    for (x, y) in a.equilibrium.config.angles().iter().zip(b.equilibrium.config.angles()) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn excursion_grows_with_tension_and_scales_with_size() {
    let g = test_finger();
    let k = test_stiffness();
    let q = cold(&g, &k, 50.0);
    let e = tendon_excursion(&g, &q).unwrap();
    assert!(e > 0.0);
    let gs = g.scaled(2.0).unwrap();
    let qs = JointConfiguration::from_deflections(&gs, q.deflections()).unwrap();
    assert!((tendon_excursion(&gs, &qs).unwrap() - 2.0 * e).abs() < 1e-15);
}
