use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::GeometryConfig;
use super::dataset::{num, read_dataset, AngleUnit, CsvOut};
use super::{
    parse_clamp, parse_ramp, CalibrateArgs, CliError, Common, Control, HandArgs, SimulateArgs,
    SweepArgs, SynthArgs,
};
use crate::calibration::{fit_stiffness, generate_synthetic_dataset, tension_grid, FitOptions};
use crate::equilibrium::{clamped_ramp_steps, force_ramp, ClampSet, SolverOptions};
use crate::geometry::{FingerGeometry, JointConfiguration, PRINTED_FINGER_LENGTHS_MM, REFERENCE_FINGER_LENGTH};
use crate::hand::{aperture, aperture_of, assemble_hand, solve_hand, solve_hand_at_displacement, HandLayout};
use crate::statics::{torque_residuals, StiffnessVector};

const DEFAULT_STIFFNESS: [f64; 3] = [28.48, 4.05, 4.05];

struct Setup {
    config: GeometryConfig,
    geometry: FingerGeometry,
    stiffness: Option<StiffnessVector>,
}

fn setup(common: &Common) -> Result<Setup, CliError> {
    let config = match &common.geometry {
        Some(path) => GeometryConfig::load(path)?,
        None => GeometryConfig::reference(),
    };
    let geometry = config.geometry()?;
    let stiffness = match &common.stiffness {
        Some(k) => {
            if k.len() != geometry.joint_count() {
                return Err(CliError::Validation(format!(
                    "{} stiffness values for {} joints",
                    k.len(),
                    geometry.joint_count()
                )));
            }
            Some(StiffnessVector::new(k.clone())?)
        }
        None if geometry.joint_count() == DEFAULT_STIFFNESS.len() => {
            Some(StiffnessVector::new(DEFAULT_STIFFNESS.to_vec())?)
        }
        None => None,
    };
    Ok(Setup {
        config,
        geometry,
        stiffness,
    })
}

fn required(k: Option<StiffnessVector>) -> Result<StiffnessVector, CliError> {
    k.ok_or_else(|| CliError::Validation("--stiffness is required for this geometry".into()))
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn joint_headers(prefix: &str, m: usize, suffix: &str) -> impl Iterator<Item = String> {
    let (prefix, suffix) = (prefix.to_string(), suffix.to_string());
    (1..=m).map(move |j| format!("{prefix}{j}{suffix}"))
}

fn degrees(q: &JointConfiguration) -> impl Iterator<Item = String> + '_ {
    q.angles().iter().map(|a| num(a.to_degrees()))
}

fn clamp_sets(
    specs: &[String],
    geom: &FingerGeometry,
    fingers: usize,
) -> Result<Vec<ClampSet>, CliError> {
    let mut sets = vec![ClampSet::new(); fingers];
    for s in specs {
        let c = parse_clamp(s)?;
        if c.finger >= fingers {
            return Err(CliError::Validation(format!(
                "clamp {s:?} names finger {} of {fingers}",
                c.finger + 1
            )));
        }
        let joints: Vec<usize> = match c.joint {
            Some(j) if j < geom.joint_count() => vec![j],
            Some(j) => {
                return Err(CliError::Validation(format!(
                    "clamp {s:?} names joint {} of {}",
                    j + 1,
                    geom.joint_count()
                )))
            }
            None => (0..geom.joint_count()).collect(),
        };
        for j in joints {
            let angle = c.angle_deg.map_or(geom.rest_angles()[j], f64::to_radians);
            sets[c.finger].insert(j, angle)?;
        }
    }
    Ok(sets)
}

/// Flexes one finger along `--ramp` and writes `trajectory.csv`. Rows
/// already solved are kept when the solver fails part-way.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<PathBuf, CliError> {
    let s = setup(&args.common)?;
    let k = required(s.stiffness)?;
    let g = &s.geometry;
    let schedule = parse_ramp(&args.ramp)?;
    let clamps = clamp_sets(&args.clamp, g, 1)?.remove(0);
    let opts = SolverOptions::default();
    let steps = clamped_ramp_steps(g, &k, &schedule, clamps, &opts)?;

    out_dir(&args.common.out)?;
    let path = args.common.out.join("trajectory.csv");
    let m = g.joint_count();
    let header: Vec<String> = std::iter::once("f_in_N".to_string())
        .chain(joint_headers("theta", m, "_deg"))
        .chain(std::iter::once("excursion_mm".to_string()))
        .collect();
    let mut out = CsvOut::create(&path, &header)?;
    for point in steps {
        let point = match point {
            Ok(p) => p,
            Err(e) => {
                out.flush()?;
                return Err(e.into());
            }
        };
        let row: Vec<String> = std::iter::once(num(point.f_in))
            .chain(degrees(&point.config))
            .chain(std::iter::once(num(point.excursion * 1e3)))
            .collect();
        out.row(&row)?;
    }
    out.flush()?;
    Ok(path)
}

/// Fits joint stiffnesses to `--dataset`, writes `fit_report.txt` and
/// `fit_residuals.csv`, and returns the report text.
pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<String, CliError> {
    let s = setup(&args.common)?;
    let g = &s.geometry;
    let unit = if args.radians { AngleUnit::Radians } else { AngleUnit::Degrees };
    let data = read_dataset(&args.dataset, unit)?;
    let m = g.joint_count();
    if data.joint_count() != m {
        return Err(CliError::Validation(format!(
            "dataset has {} joint columns, geometry has {m} joints",
            data.joint_count()
        )));
    }
    let k0 = match &args.common.stiffness {
        Some(_) => required(s.stiffness)?,
        None => StiffnessVector::new(vec![1.0; m])?,
    };
    let opts = FitOptions {
        min_tension: args.min_tension,
        ..Default::default()
    };
    let fit = fit_stiffness(&data, g, &k0, &opts)?;

    let mut report = String::new();
    let k: Vec<String> = fit.stiffness.values().iter().map(|v| format!("{v:.6}")).collect();
    let _ = writeln!(report, "stiffness_Nm_per_rad = {}", k.join(", "));
    let _ = writeln!(report, "objective_Nm2 = {:.6e}", fit.objective);
    let _ = writeln!(report, "initial_objective_Nm2 = {:.6e}", fit.initial_objective);
    let _ = writeln!(report, "iterations = {}", fit.iterations);
    let _ = writeln!(report, "samples = {} (used {})", data.len(), fit.samples_used);
    let _ = writeln!(report, "angle_error = {}", fit.errors.summary());
    let _ = writeln!(report, "prediction_failures = {}", fit.errors.failures);
    let _ = writeln!(report, "identifiability_ratio = {:.3e}", fit.identifiability.ratio);
    if fit.identifiability.warning {
        let _ = writeln!(
            report,
            "warning: the data barely deflect some joints; their stiffness is poorly determined"
        );
    }

    out_dir(&args.common.out)?;
    write_text(&args.common.out.join("fit_report.txt"), &report)?;
    let header: Vec<String> = ["sample_id", "f_in_N"]
        .into_iter()
        .map(String::from)
        .chain((1..=m).flat_map(|j| {
            [
                format!("theta{j}_meas_deg"),
                format!("theta{j}_pred_deg"),
                format!("theta{j}_err_deg"),
            ]
        }))
        .chain(joint_headers("rho", m, "_Nm"))
        .collect();
    let mut out = CsvOut::create(&args.common.out.join("fit_residuals.csv"), &header)?;
    for (sample, pred) in data.samples().iter().zip(&fit.predicted) {
        let mut row = vec![sample.id.to_string(), num(sample.f_in)];
        for j in 0..m {
            let meas = sample.angles[j];
            row.push(num(meas.to_degrees()));
            match pred {
                Some(p) => {
                    row.push(num(p[j].to_degrees()));
                    row.push(num((p[j] - meas).to_degrees()));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        let q = JointConfiguration::from_angles(g, &sample.angles)?;
        let rho = torque_residuals(sample.f_in, &q, &fit.stiffness, g)?;
        row.extend(rho.iter().map(|r| num(*r)));
        out.row(&row)?;
    }
    out.flush()?;
    Ok(report)
}

fn printed_length_mm(total_scale: f64, unit_length: f64) -> Option<f64> {
    if (unit_length - REFERENCE_FINGER_LENGTH).abs() > 1e-12 {
        return None;
    }
    PRINTED_FINGER_LENGTHS_MM
        .iter()
        .find(|(kappa, _)| (kappa - total_scale).abs() < 1e-9)
        .map(|(_, l)| *l)
}

/// Repeats the ramp at each `--kappa` and writes `sweep.csv`. The aperture
/// column is that of an opposed two-finger gripper with every band at the
/// row's tension.
pub fn cmd_sweep(args: &SweepArgs) -> Result<PathBuf, CliError> {
    let s = setup(&args.common)?;
    let k = required(s.stiffness)?;
    let schedule = parse_ramp(&args.ramp)?;
    if args.kappa.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Validation("scale factors must be positive".into()));
    }
    let unit = s.config.unit_geometry()?;
    let layout = s.config.layout()?;
    let m = s.geometry.joint_count();
    let opts = SolverOptions::default();

    let blocks: Vec<Result<Vec<Vec<String>>, CliError>> = args
        .kappa
        .par_iter()
        .map(|&kappa| {
            let g = s.geometry.scaled(kappa)?;
            let kk = if args.coscale { k.scaled(kappa)? } else { k.clone() };
            let hand = assemble_hand(&g, &kk, 2, HandLayout::radial(layout.radius * kappa, layout.splay))?;
            let traj = force_ramp(&g, &kk, &schedule, &opts)?;
            let printed = printed_length_mm(kappa * s.config.scale, unit.finger_length())
                .map(num)
                .unwrap_or_default();
            traj.points
                .iter()
                .map(|p| {
                    let ap = aperture_of(&hand, &[p.config.clone(), p.config.clone()])?;
                    Ok(std::iter::once(num(kappa))
                        .chain([num(g.finger_length() * 1e3), printed.clone(), num(p.f_in)])
                        .chain(kk.values().iter().map(|v| num(*v)))
                        .chain(degrees(&p.config))
                        .chain([num(p.excursion * 1e3), num(ap * 1e3)])
                        .collect())
                })
                .collect()
        })
        .collect();

    out_dir(&args.common.out)?;
    let path = args.common.out.join("sweep.csv");
    let header: Vec<String> = ["kappa", "finger_length_mm", "printed_length_mm", "f_in_N"]
        .into_iter()
        .map(String::from)
        .chain(joint_headers("k", m, "_Nm_per_rad"))
        .chain(joint_headers("theta", m, "_deg"))
        .chain(["excursion_mm".to_string(), "aperture_mm".to_string()])
        .collect();
    let mut out = CsvOut::create(&path, &header)?;
    for block in blocks {
        match block {
            Ok(rows) => {
                for r in rows {
                    out.row(&r)?;
                }
            }
            Err(e) => {
                out.flush()?;
                return Err(e);
            }
        }
    }
    out.flush()?;
    Ok(path)
}

/// Drives a hand along `--ramp` (actuator force in N, or pull-loop
/// displacement in mm) and writes `hand.csv`.
pub fn cmd_hand(args: &HandArgs) -> Result<PathBuf, CliError> {
    let s = setup(&args.common)?;
    let k = required(s.stiffness)?;
    let g = &s.geometry;
    let schedule = parse_ramp(&args.ramp)?;
    let n = args.fingers.or(s.config.fingers()).unwrap_or(2);
    let hand = assemble_hand(g, &k, n, s.config.layout()?)?;
    let clamps = clamp_sets(&args.clamp, g, n)?;
    let opts = SolverOptions::default();
    let m = g.joint_count();

    out_dir(&args.common.out)?;
    let path = args.common.out.join("hand.csv");
    let mut header = vec!["actuator_force_N".to_string(), "pull_displacement_mm".to_string()];
    header.extend((1..=n).map(|i| format!("tension{i}_N")));
    for i in 1..=n {
        header.extend(joint_headers("theta", m, "_deg").map(|h| format!("finger{i}_{h}")));
    }
    header.extend((1..=n).map(|i| format!("finger{i}_excursion_mm")));
    header.push("aperture_mm".to_string());
    let mut out = CsvOut::create(&path, &header)?;
    for &v in &schedule {
        let state = match args.control {
            Control::Force => solve_hand(&hand, v, &clamps, &opts),
            Control::Displacement => solve_hand_at_displacement(&hand, v * 1e-3, &clamps, &opts),
        };
        let state = match state {
            Ok(st) => st,
            Err(e) => {
                out.flush()?;
                return Err(e.into());
            }
        };
        let mut row = vec![num(state.actuator_force), num(state.pull_displacement * 1e3)];
        row.extend(state.tensions.iter().map(|t| num(*t)));
        for q in &state.configs {
            row.extend(degrees(q));
        }
        row.extend(state.excursions.iter().map(|e| num(e * 1e3)));
        row.push(num(aperture(&hand, &state)? * 1e3));
        out.row(&row)?;
    }
    out.flush()?;
    Ok(path)
}

/// Writes a synthetic flexion recording to `dataset.csv`.
pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf, CliError> {
    let s = setup(&args.common)?;
    let k = required(s.stiffness)?;
    let g = &s.geometry;
    if !(args.max_tension >= 0.0 && args.max_tension.is_finite()) || args.steps == 0 {
        return Err(CliError::Validation(
            "the tension grid needs a non-negative maximum and at least one step".into(),
        ));
    }
    let grid = tension_grid(args.max_tension, args.steps);
    let data = generate_synthetic_dataset(
        g,
        &k,
        &grid,
        args.cycles,
        args.noise_deg,
        args.seed,
        &SolverOptions::default(),
    )?;

    out_dir(&args.common.out)?;
    let path = args.common.out.join("dataset.csv");
    let header: Vec<String> = ["sample_id", "cycle", "f_in_N"]
        .into_iter()
        .map(String::from)
        .chain(joint_headers("theta", g.joint_count(), "_deg"))
        .collect();
    let mut out = CsvOut::create(&path, &header)?;
    for sample in data.samples() {
        let row: Vec<String> = [
            sample.id.to_string(),
            sample.cycle.map(|c| c.to_string()).unwrap_or_default(),
            num(sample.f_in),
        ]
        .into_iter()
        .chain(sample.angles.iter().map(|a| num(a.to_degrees())))
        .collect();
        out.row(&row)?;
    }
    out.flush()?;
    Ok(path)
}
