//! Joint stiffness identification from recorded flexions.
//!
//! The fit minimizes the sum of squared torque-balance residuals
//! `Σₛ Σᵢ (uᵢ(fₛ, q̃ₛ) − kᵢ Δθ̃ₛᵢ)²` over the stiffnesses, with BFGS on
//! `x = ln k` so that stiffness stays positive. Load torques depend only on
//! the measured angles, so they are evaluated once per dataset. Prediction
//! quality is reported in angle space by re-solving the equilibrium at each
//! recorded tension.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::equilibrium::{solve_equilibrium, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{FingerGeometry, JointConfiguration};
use crate::optim::{self, BfgsOptions};
use crate::statics::{joint_load_torques, StiffnessVector};

/// Curvature eigenvalue ratio below which the fit is flagged unidentifiable.
pub const IDENTIFIABILITY_RATIO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FlexionSample {
    pub id: usize,
    /// Tendon tension, N.
    pub f_in: f64,
    /// Measured absolute joint angles, rad.
    pub angles: Vec<f64>,
    pub cycle: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlexionDataset {
    joint_count: usize,
    samples: Vec<FlexionSample>,
}

impl FlexionDataset {
    pub fn new(samples: Vec<FlexionSample>) -> Result<Self> {
        let m = samples
            .first()
            .map(|s| s.angles.len())
            .ok_or_else(|| Error::invalid("dataset has no samples"))?;
        if m == 0 {
            return Err(Error::invalid("samples carry no joint angles"));
        }
        for s in &samples {
            if s.angles.len() != m {
                return Err(Error::invalid(format!(
                    "sample {} has {} angles, expected {m}",
                    s.id,
                    s.angles.len()
                )));
            }
            if !(s.f_in >= 0.0 && s.f_in.is_finite()) {
                return Err(Error::invalid(format!(
                    "sample {} has invalid tension {}",
                    s.id, s.f_in
                )));
            }
            if s.angles.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid(format!("sample {} has a non-finite angle", s.id)));
            }
        }
        if samples.len() < m {
            return Err(Error::invalid(format!(
                "{} samples cannot identify {m} stiffnesses",
                samples.len()
            )));
        }
        Ok(Self {
            joint_count: m,
            samples,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn samples(&self) -> &[FlexionSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Load torques and measured deflections per sample.
struct TorqueData {
    loads: Vec<Vec<f64>>,
    deflections: Vec<Vec<f64>>,
}

impl TorqueData {
    fn new(data: &FlexionDataset, geom: &FingerGeometry, min_tension: f64) -> Result<Self> {
        if data.joint_count() != geom.joint_count() {
            return Err(Error::invalid(format!(
                "dataset has {} joint columns, geometry has {} joints",
                data.joint_count(),
                geom.joint_count()
            )));
        }
        let (loads, deflections) = data
            .samples
            .iter()
            .filter(|s| s.f_in >= min_tension)
            .map(|s| {
                let q = JointConfiguration::from_angles(geom, &s.angles)?;
                let u = joint_load_torques(s.f_in, &q, geom)?;
                Ok((u, q.deflections().to_vec()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self { loads, deflections })
    }

    fn check(&self, k: &[f64]) -> Result<()> {
        let m = self.loads.first().map_or(k.len(), Vec::len);
        if k.len() != m {
            return Err(Error::invalid(format!("{} stiffness values for {m} joints", k.len())));
        }
        Ok(())
    }

    fn objective(&self, k: &[f64]) -> f64 {
        self.loads
            .iter()
            .zip(&self.deflections)
            .map(|(u, d)| {
                u.iter()
                    .zip(d)
                    .zip(k)
                    .map(|((u, d), k)| (u - k * d).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Gradient with respect to `k`.
    fn gradient(&self, k: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; k.len()];
        for (u, d) in self.loads.iter().zip(&self.deflections) {
            for i in 0..k.len() {
                g[i] -= 2.0 * (u[i] - k[i] * d[i]) * d[i];
            }
        }
        g
    }

    /// Gauss-Newton curvature in log-stiffness coordinates. The residuals are
    /// separable per joint, so the matrix is diagonal.
    fn curvature(&self, k: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; k.len()];
        for d in &self.deflections {
            for i in 0..k.len() {
                c[i] += 2.0 * (k[i] * d[i]).powi(2);
            }
        }
        c
    }
}

/// Sum of squared torque residuals over all samples, N²·m².
pub fn residual_objective(
    k: &StiffnessVector,
    data: &FlexionDataset,
    geom: &FingerGeometry,
) -> Result<f64> {
    let t = TorqueData::new(data, geom, 0.0)?;
    t.check(k.values())?;
    Ok(t.objective(k.values()))
}

/// Gradient of [`residual_objective`] with respect to the stiffnesses.
pub fn objective_gradient(
    k: &StiffnessVector,
    data: &FlexionDataset,
    geom: &FingerGeometry,
) -> Result<Vec<f64>> {
    let t = TorqueData::new(data, geom, 0.0)?;
    t.check(k.values())?;
    Ok(t.gradient(k.values()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Convergence when `‖∇ₓJ‖∞ ≤ grad_tol · max(1, J(x₀))`, `x = ln k`.
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Samples below this tension (N) are left out of the fit.
    pub min_tension: f64,
    pub solver: SolverOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-12,
            max_iterations: 500,
            min_tension: 0.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identifiability {
    /// Gauss-Newton curvature eigenvalues in log-stiffness coordinates.
    pub eigenvalues: Vec<f64>,
    /// Smallest over largest eigenvalue; zero when the data carry no deflection.
    pub ratio: f64,
    pub warning: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub stiffness: StiffnessVector,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Equilibrium angles at each sample's tension (rad); `None` where the
    /// solve failed.
    pub predicted: Vec<Option<Vec<f64>>>,
    pub errors: PredictionReport,
    pub identifiability: Identifiability,
    pub samples_used: usize,
}

pub fn fit_stiffness(
    data: &FlexionDataset,
    geom: &FingerGeometry,
    k_init: &StiffnessVector,
    opts: &FitOptions,
) -> Result<FitResult> {
    let t = TorqueData::new(data, geom, opts.min_tension)?;
    t.check(k_init.values())?;
    let m = geom.joint_count();
    if t.loads.len() < m {
        return Err(Error::invalid(format!(
            "{} samples above the tension threshold cannot identify {m} stiffnesses",
            t.loads.len()
        )));
    }

    let fg = |x: &DVector<f64>| {
        let k: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let g = t.gradient(&k);
        // Chain rule through k = exp(x).
        let gx = DVector::from_iterator(m, g.iter().zip(&k).map(|(g, k)| g * k));
        (t.objective(&k), gx)
    };
    let x0 = DVector::from_iterator(m, k_init.values().iter().map(|k| k.ln()));
    let initial_objective = t.objective(k_init.values());
    let bfgs = BfgsOptions {
        grad_tol: opts.grad_tol * initial_objective.max(1.0),
        max_iterations: opts.max_iterations,
        ..Default::default()
    };
    let out = optim::minimize(fg, x0, &bfgs);
    let k: Vec<f64> = out.x.iter().map(|v| v.exp()).collect();

    let eigenvalues = t.curvature(&k);
    let largest = eigenvalues.iter().copied().fold(0.0, f64::max);
    let smallest = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    let identifiability = Identifiability {
        warning: ratio < IDENTIFIABILITY_RATIO,
        eigenvalues,
        ratio,
    };

    // A flat objective stops BFGS where it started; that case is reported
    // through the identifiability warning rather than as a failure.
    if !out.converged && !identifiability.warning {
        return Err(Error::Convergence {
            iterations: out.iterations,
            residual_norm: out.gradient.amax(),
            best: k,
        });
    }
    let stiffness = StiffnessVector::new(k)?;
    let errors = prediction_errors(&stiffness, data, geom, &opts.solver)?;
    Ok(FitResult {
        objective: out.value,
        initial_objective,
        iterations: out.iterations,
        gradient_norm: out.gradient.amax(),
        predicted: errors.predicted.clone(),
        errors,
        identifiability,
        samples_used: t.loads.len(),
        stiffness,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionReport {
    /// Predicted equilibrium angles per sample, rad.
    pub predicted: Vec<Option<Vec<f64>>>,
    /// Absolute per-joint angle errors per sample, degrees.
    pub per_sample: Vec<Option<Vec<f64>>>,
    /// Mean and standard deviation over all joints of all solved samples, degrees.
    pub mean_deg: f64,
    pub std_deg: f64,
    /// Samples whose equilibrium solve failed; excluded from the statistics.
    pub failures: usize,
}

impl PredictionReport {
    /// `"X.XX° ± Y.YY°"`.
    pub fn summary(&self) -> String {
        format!("{:.2}° ± {:.2}°", self.mean_deg, self.std_deg)
    }
}

pub fn prediction_errors(
    k: &StiffnessVector,
    data: &FlexionDataset,
    geom: &FingerGeometry,
    opts: &SolverOptions,
) -> Result<PredictionReport> {
    if data.joint_count() != geom.joint_count() || k.len() != geom.joint_count() {
        return Err(Error::invalid("dataset, stiffness and geometry disagree on joint count"));
    }
    let rest = JointConfiguration::rest(geom);
    let predicted: Vec<Option<Vec<f64>>> = data
        .samples
        .par_iter()
        .map(|s| {
            solve_equilibrium(geom, k, s.f_in, &rest, opts)
                .ok()
                .map(|eq| eq.config.angles().to_vec())
        })
        .collect();
    let per_sample: Vec<Option<Vec<f64>>> = predicted
        .iter()
        .zip(&data.samples)
        .map(|(p, s)| {
            p.as_ref().map(|p| {
                p.iter()
                    .zip(&s.angles)
                    .map(|(a, b)| (a - b).abs().to_degrees())
                    .collect()
            })
        })
        .collect();
    let all: Vec<f64> = per_sample.iter().flatten().flatten().copied().collect();
    let n = all.len() as f64;
    let mean_deg = if all.is_empty() { 0.0 } else { all.iter().sum::<f64>() / n };
    let std_deg = if all.len() > 1 {
        (all.iter().map(|e| (e - mean_deg).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(PredictionReport {
        failures: predicted.iter().filter(|p| p.is_none()).count(),
        predicted,
        per_sample,
        mean_deg,
        std_deg,
    })
}

/// Equilibrium angles at each tension of `f_grid`, repeated for `cycles`
/// flexion cycles, with i.i.d. Gaussian angle noise. Deterministic per seed.
pub fn generate_synthetic_dataset(
    geom: &FingerGeometry,
    k: &StiffnessVector,
    f_grid: &[f64],
    cycles: usize,
    noise_std_deg: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<FlexionDataset> {
    if f_grid.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
        return Err(Error::invalid("tension grid must be non-negative"));
    }
    if !(noise_std_deg >= 0.0 && noise_std_deg.is_finite()) {
        return Err(Error::invalid("noise level must be non-negative"));
    }
    if cycles == 0 {
        return Err(Error::invalid("at least one flexion cycle is required"));
    }
    let rest = JointConfiguration::rest(geom);
    let clean: Vec<Vec<f64>> = f_grid
        .iter()
        .enumerate()
        .map(|(index, &f)| {
            solve_equilibrium(geom, k, f, &rest, opts)
                .map(|eq| eq.config.angles().to_vec())
                .map_err(|e| Error::Ramp {
                    index,
                    f_in: f,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std_deg.to_radians())
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut samples = Vec::with_capacity(cycles * f_grid.len());
    for cycle in 0..cycles {
        for (&f, angles) in f_grid.iter().zip(&clean) {
            let angles = if noise_std_deg > 0.0 {
                angles.iter().map(|a| a + noise.sample(&mut rng)).collect()
            } else {
                angles.clone()
            };
            samples.push(FlexionSample {
                id: samples.len(),
                f_in: f,
                angles,
                cycle: Some(cycle as u32),
            });
        }
    }
    FlexionDataset::new(samples)
}

/// `steps` evenly spaced tensions from 0 to `max_tension` inclusive.
pub fn tension_grid(max_tension: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![max_tension],
        _ => (0..steps)
            .map(|i| max_tension * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}
