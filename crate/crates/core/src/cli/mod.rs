//! Command-line front end.
//!
//! Every command writes plot-ready CSV into `--out`. Exit codes: 0 success,
//! 2 parse error, 3 validation error, 4 solver failure, 5 I/O error.

mod commands;
pub mod config;
pub mod dataset;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{cmd_calibrate, cmd_hand, cmd_simulate, cmd_sweep, cmd_synth};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Convergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Convergence(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        if e.is_convergence() {
            CliError::Convergence(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tendonflex", version, about = "Tendon-driven finger simulation and stiffness calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flex one finger along a tension ramp.
    Simulate(SimulateArgs),
    /// Fit joint stiffnesses to a flexion dataset.
    Calibrate(CalibrateArgs),
    /// Repeat the ramp over several scale factors.
    Sweep(SweepArgs),
    /// Drive a multi-finger hand through its pull loop.
    Hand(HandArgs),
    /// Generate a synthetic flexion dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Geometry file (TOML); the 52 mm reference finger when omitted.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Joint stiffnesses k1,k2,... in N·m/rad.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub stiffness: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tension schedule start:stop:step in N.
    #[arg(long, default_value = "0:75:1")]
    pub ramp: String,
    /// Clamp finger:joint:angle_deg (angle may be `rest`); finger must be 1.
    #[arg(long)]
    pub clamp: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Flexion dataset CSV.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Read joint angle columns as radians.
    #[arg(long)]
    pub radians: bool,
    /// Leave samples below this tension (N) out of the fit.
    #[arg(long, default_value_t = 0.0)]
    pub min_tension: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "0:75:15")]
    pub ramp: String,
    /// Scale factors relative to the configured geometry.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0.5,0.75,1,1.5,1.75")]
    pub kappa: Vec<f64>,
    /// Multiply stiffness by each scale factor, which leaves the joint angles
    /// unchanged across scales.
    #[arg(long)]
    pub coscale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Control {
    /// Ramp values are actuator forces in N.
    Force,
    /// Ramp values are pull-loop displacements in mm.
    Displacement,
}

#[derive(Debug, Clone, Args)]
pub struct HandArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "0:75:5")]
    pub ramp: String,
    /// Number of fingers; overrides the geometry file.
    #[arg(long)]
    pub fingers: Option<usize>,
    /// Clamp finger:joint:angle_deg (angle may be `rest`; joint may be `all`).
    #[arg(long)]
    pub clamp: Vec<String>,
    #[arg(long, value_enum, default_value_t = Control::Force)]
    pub control: Control,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Highest tension of the grid, N.
    #[arg(long, default_value_t = 75.0)]
    pub max_tension: f64,
    /// Evenly spaced tensions from 0 to the maximum, recorded once per cycle.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 16)]
    pub cycles: usize,
    /// Gaussian angle noise, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub noise_deg: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Parse(e.to_string())),
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a).map(|_| ()),
        Command::Calibrate(a) => {
            let report = cmd_calibrate(&a)?;
            print!("{report}");
            Ok(())
        }
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
        Command::Hand(a) => cmd_hand(&a).map(|_| ()),
        Command::Synth(a) => cmd_synth(&a).map(|_| ()),
    }
}

/// Parses `start:stop:step` into `start, start+step, …` up to `stop`.
pub fn parse_ramp(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Parse(format!("ramp {spec:?} is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Validation(format!("ramp {spec:?} needs a positive step")));
    }
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let f = start + step * i as f64;
        if f > stop + 1e-9 * step {
            break;
        }
        out.push(f.min(stop.max(start)));
        i += 1;
    }
    if out.is_empty() {
        return Err(CliError::Validation(format!("ramp {spec:?} is empty")));
    }
    Ok(out)
}

/// A parsed `finger:joint:angle` clamp; 0-based indices, `None` joint = all,
/// `None` angle = rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampSpec {
    pub finger: usize,
    pub joint: Option<usize>,
    pub angle_deg: Option<f64>,
}

pub fn parse_clamp(spec: &str) -> Result<ClampSpec, CliError> {
    let bad = |why: &str| CliError::Parse(format!("clamp {spec:?}: {why}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad("expected finger:joint:angle_deg"));
    }
    let index = |s: &str, what: &str| -> Result<usize, CliError> {
        match s.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(bad(&format!("{what} index must be a positive integer"))),
        }
    };
    let finger = index(parts[0], "finger")?;
    let joint = match parts[1] {
        "all" | "*" => None,
        s => Some(index(s, "joint")?),
    };
    let angle_deg = match parts[2] {
        "rest" => None,
        s => Some(s.parse::<f64>().map_err(|_| bad("angle must be a number or `rest`"))?),
    };
    Ok(ClampSpec {
        finger,
        joint,
        angle_deg,
    })
}
