//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use tendonflex::calibration::{objective_gradient, tension_grid};
use tendonflex::cli::{self, CalibrateArgs, Common, SimulateArgs};
use tendonflex::hand::solve_hand_at_displacement;
use tendonflex::statics::{band_normal_forces, distal_force};
use tendonflex::{
    assemble_hand, fit_stiffness, force_ramp, generate_synthetic_dataset, residual_objective,
    solve_equilibrium, solve_hand, ClampSet, FitOptions, HandLayout, JointConfiguration,
    SolverOptions, StiffnessVector,
};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    check(spent < budget, format!("took {spent:?}, budget {budget:?}"))
}

fn zero_load_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let g = random_geometry(&mut rng);
        let m = g.joint_count();
        let k = StiffnessVector::new((0..m).map(|_| rng.random_range(0.5..40.0)).collect()).unwrap();
        let init: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.5)).collect();
        let init = JointConfiguration::from_deflections(&g, &init).unwrap();
        let eq = solve_equilibrium(&g, &k, 0.0, &init, &opts).map_err(|e| format!("case {case}: {e}"))?;
        for (a, r) in eq.config.angles().iter().zip(g.rest_angles()) {
            check(a == r, format!("case {case}: angle {a} differs from rest {r}"))?;
        }
        let res = eq.residuals.iter().fold(0.0f64, |w, r| w.max(r.abs()));
        check(res <= 1e-12, format!("case {case}: residual {res:e}"))?;
        worst = worst.max(res);
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("100 geometries, max residual {worst:.1e} N·m, {:?}", start.elapsed()))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let k = test_stiffness();
    let opts = SolverOptions::default();
    let kappas = [0.5, 0.75, 1.0, 1.5, 1.75];
    let forces = tension_grid(75.0, 10);
    let mut worst: f64 = 0.0;
    for &kappa in &kappas {
        let g = tendonflex::FingerGeometry::reference().scaled(kappa).unwrap();
        for &f in &forces {
            let eq = solve_equilibrium(&g, &k, f, &JointConfiguration::rest(&g), &opts)
                .map_err(|e| format!("κ={kappa}, f={f}: {e}"))?;
            let oracle = fixed_point_oracle(&g, k.values(), f);
            for (a, b) in eq.config.deflections().iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("max disagreement {worst:e} rad"))?;
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("50 cases, max |Δθ| {worst:.1e} rad, {:?}", start.elapsed()))
}

fn homogeneity() -> Outcome {
    let mut rng = rng(3);
    let g = test_finger();
    let k = test_stiffness();
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let kappa = rng.random_range(0.4..2.5);
        let lambda = rng.random_range(0.3..3.0);
        let f = rng.random_range(0.0..75.0);
        let base = solve_equilibrium(&g, &k, f, &JointConfiguration::rest(&g), &opts)
            .map_err(|e| format!("case {case}: {e}"))?;
        let gs = g.scaled(kappa).unwrap();
        let ks = k.scaled(lambda * kappa).unwrap();
        let scaled = solve_equilibrium(&gs, &ks, lambda * f, &JointConfiguration::rest(&gs), &opts)
            .map_err(|e| format!("case {case}: {e}"))?;
        for (a, b) in base.config.angles().iter().zip(scaled.config.angles()) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-9, format!("max deviation {worst:e} rad"))?;
    Ok(format!("100 (κ, λ) draws, max deviation {worst:.1e} rad"))
}

fn calibration_round_trip() -> Outcome {
    let g = test_finger();
    let k = test_stiffness();
    let opts = SolverOptions::default();
    let grid = tension_grid(75.0, 10);
    let data = generate_synthetic_dataset(&g, &k, &grid, 16, 0.0, 0, &opts).map_err(|e| e.to_string())?;
    check(data.len() == 160, format!("{} samples", data.len()))?;
    let starts: [[f64; 3]; 4] = [[5.0, 5.0, 5.0], [0.2, 0.2, 0.2], [5.0, 0.2, 1.0], [0.2, 5.0, 5.0]];
    let mut worst: f64 = 0.0;
    for s in starts {
        let k0 = StiffnessVector::new(k.values().iter().zip(s).map(|(k, s)| k * s).collect()).unwrap();
        let fit = fit_stiffness(&data, &g, &k0, &FitOptions::default()).map_err(|e| e.to_string())?;
        for (a, b) in fit.stiffness.values().iter().zip(k.values()) {
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    check(worst <= 1e-3, format!("noiseless relative error {worst:e}"))?;

    let noisy = generate_synthetic_dataset(&g, &k, &grid, 16, 1.0, 7, &opts).map_err(|e| e.to_string())?;
    let k0 = StiffnessVector::new(k.values().iter().map(|k| 5.0 * k).collect()).unwrap();
    let fit = fit_stiffness(&noisy, &g, &k0, &FitOptions::default()).map_err(|e| e.to_string())?;
    let noisy_worst = fit
        .stiffness
        .values()
        .iter()
        .zip(k.values())
        .fold(0.0f64, |w, (a, b)| w.max((a / b - 1.0).abs()));
    check(noisy_worst <= 0.10, format!("1° noise relative error {noisy_worst:.3}"))?;
    let summary = fit.errors.summary();
    check(
        (0.1..=5.0).contains(&fit.errors.mean_deg) && summary.ends_with('°') && summary.contains("° ± "),
        format!("error statistic {summary}"),
    )?;
    Ok(format!(
        "noiseless max rel err {worst:.1e}, 1° noise max rel err {:.1}%, angle error {summary}",
        100.0 * noisy_worst
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = rng(5);
    let g = test_finger();
    let data = generate_synthetic_dataset(
        &g,
        &test_stiffness(),
        &tension_grid(75.0, 10),
        16,
        0.5,
        11,
        &SolverOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let k: Vec<f64> = TEST_STIFFNESS.iter().map(|k| k * rng.random_range(0.2..5.0)).collect();
        let grad = objective_gradient(&StiffnessVector::new(k.clone()).unwrap(), &data, &g).map_err(|e| e.to_string())?;
        for i in 0..k.len() {
            let h = 1e-5 * k[i];
            let mut kp = k.clone();
            let mut km = k.clone();
            kp[i] += h;
            km[i] -= h;
            let jp = residual_objective(&StiffnessVector::new(kp).unwrap(), &data, &g).unwrap();
            let jm = residual_objective(&StiffnessVector::new(km).unwrap(), &data, &g).unwrap();
            let fd = (jp - jm) / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / grad[i].abs().max(1e-300));
        }
    }
    check(worst <= 1e-6, format!("max relative mismatch {worst:e}"))?;
    Ok(format!("20 points, max relative mismatch {worst:.1e}"))
}

fn force_invariants() -> Outcome {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g = random_geometry(&mut rng);
        let m = g.joint_count();
        let d: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..std::f64::consts::FRAC_PI_2)).collect();
        let q = JointConfiguration::from_deflections(&g, &d).unwrap();
        let f_in = rng.random_range(0.0..200.0);
        let f = distal_force(f_in, &q).unwrap();
        worst = worst.max((f.norm() - f_in).abs());
        for (i, fn_i) in band_normal_forces(f_in, &q).unwrap().iter().enumerate() {
            worst = worst.max((fn_i.norm() - f_in * (0.5 * d[i]).sin()).abs());
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e} N"))?;
    Ok(format!("1000 states, max deviation {worst:.1e} N"))
}

fn differential() -> Outcome {
    let g = test_finger();
    let k = test_stiffness();
    let opts = SolverOptions::default();
    let hand = assemble_hand(&g, &k, 2, HandLayout::default_for(&g)).map_err(|e| e.to_string())?;
    let sym = solve_hand(&hand, 40.0, &[], &opts).map_err(|e| e.to_string())?;
    check(sym.tensions == vec![20.0, 20.0], format!("tensions {:?}", sym.tensions))?;

    let clamps = [ClampSet::all_at_rest(&g), ClampSet::new()];
    let held = solve_hand_at_displacement(&hand, sym.pull_displacement, &clamps, &opts)
        .map_err(|e| e.to_string())?;
    let (before, after) = (sym.excursions[1], held.excursions[1]);
    check(
        after > before,
        format!("finger 2 excursion {:.4} mm, symmetric {:.4} mm", after * 1e3, before * 1e3),
    )?;
    check(
        held.configs[1].deflections().iter().zip(sym.configs[1].deflections()).all(|(a, b)| a > b),
        "finger 2 joints did not all flex further",
    )?;
    Ok(format!(
        "tensions {:?} N; finger 1 held, finger 2 excursion {:.3} → {:.3} mm at {:.1} N actuator force",
        sym.tensions,
        before * 1e3,
        after * 1e3,
        held.actuator_force
    ))
}

fn write_geometry(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("finger.toml");
    std::fs::write(
        &path,
        format!(
            "link_lengths_mm = [22.0, 16.0, 14.0]\nrest_angles_deg = [50.0, 0.0, 0.0]\nscale = {TEST_SCALE}\nreference_length_mm = 52.0\n"
        ),
    )
    .unwrap();
    path
}

fn stiffness_from_report(report: &str) -> Vec<f64> {
    let line = report.lines().find(|l| l.starts_with("stiffness_Nm_per_rad")).unwrap();
    line.split('=').nth(1).unwrap().split(',').map(|v| v.trim().parse().unwrap()).collect()
}

fn monotone_ramp_and_csv_round_trip() -> Outcome {
    let g = test_finger();
    let k = test_stiffness();
    let schedule: Vec<f64> = (0..=75).map(f64::from).collect();
    let traj = force_ramp(&g, &k, &schedule, &SolverOptions::default()).map_err(|e| e.to_string())?;
    for w in traj.points.windows(2) {
        for (a, b) in w[0].config.angles().iter().zip(w[1].config.angles()) {
            check(b >= a, format!("θ decreased between {} N and {} N", w[0].f_in, w[1].f_in))?;
        }
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let common = Common {
        geometry: Some(write_geometry(dir.path())),
        stiffness: Some(TEST_STIFFNESS.to_vec()),
        out: dir.path().join("sim"),
    };
    let csv = cli::cmd_simulate(&SimulateArgs {
        common: common.clone(),
        ramp: "0:75:1".into(),
        clamp: vec![],
    })
    .map_err(|e| e.to_string())?;
    let report = cli::cmd_calibrate(&CalibrateArgs {
        common: Common {
            stiffness: Some(TEST_STIFFNESS.iter().map(|k| 5.0 * k).collect()),
            out: dir.path().join("fit"),
            ..common
        },
        dataset: csv,
        radians: false,
        min_tension: 0.0,
    })
    .map_err(|e| e.to_string())?;
    let fitted = stiffness_from_report(&report);
    let worst = fitted
        .iter()
        .zip(TEST_STIFFNESS)
        .fold(0.0f64, |w, (a, b)| w.max((a / b - 1.0).abs()));
    check(worst <= 1e-3, format!("CSV round trip relative error {worst:e}"))?;
    Ok(format!("76 ramp points non-decreasing; CSV round trip max rel err {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("zero-load identity", zero_load_identity),
        ("oracle equivalence", oracle_equivalence),
        ("homogeneity law", homogeneity),
        ("calibration round trip", calibration_round_trip),
        ("gradient check", gradient_check),
        ("force-magnitude invariants", force_invariants),
        ("differential behavior", differential),
        ("monotone flexion and CSV round trip", monotone_ramp_and_csv_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
