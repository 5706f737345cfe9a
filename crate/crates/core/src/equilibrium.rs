//! Quasi-static equilibrium of a finger under tendon tension.
//!
//! The unknowns are joint deflections. A damped Newton iteration on the torque
//! residuals uses a central-difference Jacobian and backtracking on the merit
//! `½‖ρ‖²`; when the Jacobian is singular or badly conditioned the step falls
//! back to the damped fixed-point update `Δθ ← Δθ + β (u/k − Δθ)`.
//! Deflections are projected onto `Δθ ≥ 0` after every step; a joint that the
//! band would push past its rest angle is held there and reported as a
//! boundary solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{forward_kinematics, FingerGeometry, JointConfiguration};
use crate::statics::{torque_residuals, StiffnessVector};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance on `‖ρ‖∞`, N·m.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central-difference step for the Jacobian, rad.
    pub fd_step: f64,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    /// Step shrink factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Relaxation of the fixed-point fallback step.
    pub fixed_point_step: f64,
    /// Jacobians with a larger condition number use the fixed-point fallback.
    pub condition_limit: f64,
    /// Largest tension increment between warm-started solves on a ramp, N.
    pub continuation_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100,
            fd_step: 1e-7,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
            fixed_point_step: 0.5,
            condition_limit: 1e12,
            continuation_step: 5.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.tolerance) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max iterations must be at least 1"));
        }
        if !pos(self.fd_step) || !pos(self.continuation_step) || !pos(self.condition_limit) {
            return Err(Error::invalid("solver step sizes must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0)
            || !(self.fixed_point_step > 0.0 && self.fixed_point_step <= 1.0)
            || !(self.armijo > 0.0 && self.armijo < 0.5)
        {
            return Err(Error::invalid("line search parameters out of range"));
        }
        Ok(())
    }
}

/// Joints held at prescribed absolute angles (0-based joint indices).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClampSet {
    clamps: Vec<(usize, f64)>,
}

impl ClampSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, joint: usize, angle: f64) -> Result<()> {
        if self.clamps.iter().any(|(j, _)| *j == joint) {
            return Err(Error::invalid(format!("joint {} clamped twice", joint + 1)));
        }
        if !angle.is_finite() {
            return Err(Error::invalid("clamp angle must be finite"));
        }
        self.clamps.push((joint, angle));
        Ok(())
    }

    pub fn with(mut self, joint: usize, angle: f64) -> Result<Self> {
        self.insert(joint, angle)?;
        Ok(self)
    }

    /// Every joint held at its rest angle.
    pub fn all_at_rest(geom: &FingerGeometry) -> Self {
        Self {
            clamps: geom.rest_angles().iter().copied().enumerate().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.clamps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.clamps.iter().copied()
    }

    pub fn covers_all(&self, geom: &FingerGeometry) -> bool {
        self.clamps.len() == geom.joint_count()
    }

    fn fixed_deflections(&self, geom: &FingerGeometry) -> Result<Vec<Option<f64>>> {
        let m = geom.joint_count();
        let mut fixed = vec![None; m];
        for &(joint, angle) in &self.clamps {
            if joint >= m {
                return Err(Error::invalid(format!(
                    "clamp on joint {} but the finger has {m} joints",
                    joint + 1
                )));
            }
            let rest = geom.rest_angles()[joint];
            if angle < rest || angle > std::f64::consts::PI {
                return Err(Error::invalid(format!(
                    "clamp angle {angle} rad on joint {} outside [{rest}, π]",
                    joint + 1
                )));
            }
            fixed[joint] = Some(angle - rest);
        }
        Ok(fixed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub config: JointConfiguration,
    /// Torque residuals at `config`, N·m. Non-zero only at clamped or
    /// boundary-held joints.
    pub residuals: Vec<f64>,
    /// `‖ρ‖∞` over the joints that are free to move.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Joints held at rest because the band would extend them.
    pub boundary_joints: Vec<usize>,
}

impl Equilibrium {
    pub fn on_boundary(&self) -> bool {
        !self.boundary_joints.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClampedEquilibrium {
    pub equilibrium: Equilibrium,
    /// `(joint, torque)` the clamp applies: `−ρ` at the clamped joint.
    pub reactions: Vec<(usize, f64)>,
}

pub fn solve_equilibrium(
    geom: &FingerGeometry,
    k: &StiffnessVector,
    f_in: f64,
    init: &JointConfiguration,
    opts: &SolverOptions,
) -> Result<Equilibrium> {
    let fixed = vec![None; geom.joint_count()];
    Solver::new(geom, k, f_in, opts)?.solve(init, &fixed)
}

pub fn solve_with_clamps(
    geom: &FingerGeometry,
    k: &StiffnessVector,
    f_in: f64,
    clamps: &ClampSet,
    opts: &SolverOptions,
) -> Result<ClampedEquilibrium> {
    solve_with_clamps_from(geom, k, f_in, clamps, &JointConfiguration::rest(geom), opts)
}

/// As [`solve_with_clamps`], warm-started from `init`.
pub fn solve_with_clamps_from(
    geom: &FingerGeometry,
    k: &StiffnessVector,
    f_in: f64,
    clamps: &ClampSet,
    init: &JointConfiguration,
    opts: &SolverOptions,
) -> Result<ClampedEquilibrium> {
    let fixed = clamps.fixed_deflections(geom)?;
    let equilibrium = Solver::new(geom, k, f_in, opts)?.solve(init, &fixed)?;
    let reactions = clamps
        .iter()
        .map(|(j, _)| (j, -equilibrium.residuals[j]))
        .collect();
    Ok(ClampedEquilibrium {
        equilibrium,
        reactions,
    })
}

struct Solver<'a> {
    geom: &'a FingerGeometry,
    k: &'a StiffnessVector,
    f_in: f64,
    opts: &'a SolverOptions,
}

impl<'a> Solver<'a> {
    fn new(
        geom: &'a FingerGeometry,
        k: &'a StiffnessVector,
        f_in: f64,
        opts: &'a SolverOptions,
    ) -> Result<Self> {
        opts.validate()?;
        if k.len() != geom.joint_count() {
            return Err(Error::invalid(format!(
                "{} stiffness values for {} joints",
                k.len(),
                geom.joint_count()
            )));
        }
        if !(f_in >= 0.0 && f_in.is_finite()) {
            return Err(Error::invalid(format!(
                "tendon tension must be finite and non-negative, got {f_in}"
            )));
        }
        Ok(Self { geom, k, f_in, opts })
    }

    fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = JointConfiguration::from_deflections(self.geom, x)?;
        let r = torque_residuals(self.f_in, &q, self.k, self.geom)?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite torque residual at {x:?}")));
        }
        Ok(r)
    }

    fn finish(&self, x: Vec<f64>, r: Vec<f64>, free: &[usize], iterations: usize, boundary: Vec<usize>) -> Result<Equilibrium> {
        let residual_norm = max_abs(&r, free);
        Ok(Equilibrium {
            config: JointConfiguration::from_deflections(self.geom, &x)?,
            residuals: r,
            residual_norm,
            iterations,
            boundary_joints: boundary,
        })
    }

    fn solve(&self, init: &JointConfiguration, fixed: &[Option<f64>]) -> Result<Equilibrium> {
        let m = self.geom.joint_count();
        if init.len() != m {
            return Err(Error::invalid("initial configuration has the wrong joint count"));
        }
        let clamped: Vec<bool> = fixed.iter().map(Option::is_some).collect();
        let mut x: Vec<f64> = init
            .deflections()
            .iter()
            .zip(fixed)
            .map(|(d, f)| f.unwrap_or(d.max(0.0)))
            .collect();

        // Without tension the springs alone act and rest is the unique root.
        if self.f_in == 0.0 {
            for (xi, f) in x.iter_mut().zip(fixed) {
                *xi = f.unwrap_or(0.0);
            }
            let r = self.residuals(&x)?;
            let free: Vec<usize> = (0..m).filter(|&i| !clamped[i]).collect();
            return self.finish(x, r, &free, 0, Vec::new());
        }

        let tol = self.opts.tolerance;
        let mut held = vec![false; m];
        let mut r = self.residuals(&x)?;
        let mut best = (f64::INFINITY, x.clone());
        let mut iterations = 0;

        loop {
            // Release held joints the band now pulls into flexion.
            for i in 0..m {
                if held[i] && r[i] > tol {
                    held[i] = false;
                }
            }
            let free: Vec<usize> = (0..m).filter(|&i| !clamped[i] && !held[i]).collect();
            let norm = max_abs(&r, &free);
            if norm < best.0 {
                best = (norm, x.clone());
            }
            if norm <= tol {
                let (x, r) = self.polish(x, r, &free)?;
                let boundary = (0..m).filter(|&i| held[i]).collect();
                return self.finish(x, r, &free, iterations, boundary);
            }
            if iterations >= self.opts.max_iterations {
                let best_q = JointConfiguration::from_deflections(self.geom, &best.1)?;
                return Err(Error::Convergence {
                    iterations,
                    residual_norm: best.0,
                    best: best_q.angles().to_vec(),
                });
            }
            iterations += 1;

            let newton = self.newton_direction(&x, &r, &free)?;
            let merit = 0.5 * norm_sq(&r, &free);
            let mut accepted = None;
            if let Some(dir) = &newton {
                accepted = self.line_search(&x, &free, dir, merit, true)?;
            }
            if accepted.is_none() {
                let dir: Vec<f64> = free
                    .iter()
                    .map(|&i| self.opts.fixed_point_step * r[i] / self.k[i])
                    .collect();
                accepted = self.line_search(&x, &free, &dir, merit, false)?;
            }
            let (x_new, r_new) = match accepted {
                Some(step) => step,
                None => {
                    // Stalled: take a short relaxation step and keep iterating.
                    let mut x_new = x.clone();
                    for &i in &free {
                        x_new[i] = (x[i] + 1e-3 * r[i] / self.k[i]).max(0.0);
                    }
                    let r_new = self.residuals(&x_new)?;
                    (x_new, r_new)
                }
            };
            for &i in &free {
                if x_new[i] == 0.0 && r_new[i] < 0.0 {
                    held[i] = true;
                }
            }
            x = x_new;
            r = r_new;
        }
    }

    /// Newton step on the free joints, `None` when the Jacobian is unusable.
    fn newton_direction(&self, x: &[f64], r: &[f64], free: &[usize]) -> Result<Option<Vec<f64>>> {
        let n = free.len();
        let jac = self.jacobian(x, free)?;
        let sv = jac.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if smin.is_nan() || smin <= 0.0 || smax / smin > self.opts.condition_limit {
            return Ok(None);
        }
        let rhs = DVector::from_iterator(n, free.iter().map(|&i| -r[i]));
        Ok(jac.lu().solve(&rhs).map(|s| s.iter().copied().collect()))
    }

    fn jacobian(&self, x: &[f64], free: &[usize]) -> Result<DMatrix<f64>> {
        let n = free.len();
        let h = self.opts.fd_step;
        let mut jac = DMatrix::zeros(n, n);
        let mut probe = x.to_vec();
        for (col, &j) in free.iter().enumerate() {
            probe[j] = x[j] + h;
            let plus = self.residuals(&probe)?;
            probe[j] = x[j] - h;
            let minus = self.residuals(&probe)?;
            probe[j] = x[j];
            for (row, &i) in free.iter().enumerate() {
                jac[(row, col)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    fn line_search(
        &self,
        x: &[f64],
        free: &[usize],
        dir: &[f64],
        merit: f64,
        newton: bool,
    ) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let mut t = 1.0;
        for _ in 0..=self.opts.max_backtracks {
            let mut trial = x.to_vec();
            for (&i, d) in free.iter().zip(dir) {
                trial[i] = (x[i] + t * d).max(0.0);
            }
            let r = self.residuals(&trial)?;
            let m = 0.5 * norm_sq(&r, free);
            let target = if newton {
                (1.0 - 2.0 * self.opts.armijo * t) * merit
            } else {
                merit
            };
            if m <= target && (newton || m < merit) {
                return Ok(Some((trial, r)));
            }
            t *= self.opts.backtrack;
        }
        Ok(None)
    }

    /// One extra Newton step after convergence, kept only if it helps.
    fn polish(&self, x: Vec<f64>, r: Vec<f64>, free: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        let norm = max_abs(&r, free);
        if free.is_empty() || norm == 0.0 {
            return Ok((x, r));
        }
        if let Some(dir) = self.newton_direction(&x, &r, free)? {
            let mut trial = x.clone();
            for (&i, d) in free.iter().zip(&dir) {
                trial[i] = (x[i] + d).max(0.0);
            }
            let r_trial = self.residuals(&trial)?;
            if max_abs(&r_trial, free) < norm {
                return Ok((trial, r_trial));
            }
        }
        Ok((x, r))
    }
}

fn max_abs(r: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| r[i].abs()).fold(0.0, f64::max)
}

fn norm_sq(r: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| r[i] * r[i]).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub f_in: f64,
    pub config: JointConfiguration,
    /// Tendon excursion, meters.
    pub excursion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlexionTrajectory {
    pub points: Vec<TrajectoryPoint>,
}

/// Solves along an increasing tension schedule, warm-starting every solve
/// from the previous equilibrium. Gaps wider than the continuation step are
/// bridged with intermediate solves that are not reported.
pub fn force_ramp(
    geom: &FingerGeometry,
    k: &StiffnessVector,
    schedule: &[f64],
    opts: &SolverOptions,
) -> Result<FlexionTrajectory> {
    let points = ramp_steps(geom, k, schedule, opts)?.collect::<Result<_>>()?;
    Ok(FlexionTrajectory { points })
}

/// Lazy form of [`force_ramp`]: yields one point per schedule entry and
/// stops after the first failure.
pub fn ramp_steps<'a>(
    geom: &'a FingerGeometry,
    k: &'a StiffnessVector,
    schedule: &'a [f64],
    opts: &'a SolverOptions,
) -> Result<RampSteps<'a>> {
    clamped_ramp_steps(geom, k, schedule, ClampSet::new(), opts)
}

/// [`ramp_steps`] with some joints held by `clamps`.
pub fn clamped_ramp_steps<'a>(
    geom: &'a FingerGeometry,
    k: &'a StiffnessVector,
    schedule: &'a [f64],
    clamps: ClampSet,
    opts: &'a SolverOptions,
) -> Result<RampSteps<'a>> {
    validate_schedule(schedule)?;
    opts.validate()?;
    clamps.fixed_deflections(geom)?;
    Ok(RampSteps {
        geom,
        k,
        schedule,
        clamps,
        opts,
        index: 0,
        f_prev: 0.0,
        current: JointConfiguration::rest(geom),
        failed: false,
    })
}

pub struct RampSteps<'a> {
    geom: &'a FingerGeometry,
    k: &'a StiffnessVector,
    schedule: &'a [f64],
    clamps: ClampSet,
    opts: &'a SolverOptions,
    index: usize,
    f_prev: f64,
    current: JointConfiguration,
    failed: bool,
}

impl RampSteps<'_> {
    fn step(&mut self, f_target: f64) -> Result<TrajectoryPoint> {
        let span = f_target - self.f_prev;
        let substeps = (span / self.opts.continuation_step).ceil().max(1.0) as usize;
        for s in 1..=substeps {
            let f = if s == substeps {
                f_target
            } else {
                self.f_prev + span * s as f64 / substeps as f64
            };
            self.current =
                solve_with_clamps_from(self.geom, self.k, f, &self.clamps, &self.current, self.opts)?
                    .equilibrium
                    .config;
        }
        self.f_prev = f_target;
        Ok(TrajectoryPoint {
            f_in: f_target,
            excursion: tendon_excursion(self.geom, &self.current)?,
            config: self.current.clone(),
        })
    }
}

impl Iterator for RampSteps<'_> {
    type Item = Result<TrajectoryPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.index >= self.schedule.len() {
            return None;
        }
        let index = self.index;
        let f_in = self.schedule[index];
        self.index += 1;
        Some(self.step(f_in).map_err(|e| {
            self.failed = true;
            Error::Ramp {
                index,
                f_in,
                source: Box::new(e),
            }
        }))
    }
}

pub(crate) fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::invalid("tension schedule is empty"));
    }
    if schedule.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
        return Err(Error::invalid("tension schedule values must be finite and non-negative"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("tension schedule must be strictly increasing"));
    }
    Ok(())
}

fn band_length(geom: &FingerGeometry, q: &JointConfiguration) -> Result<f64> {
    let frames = forward_kinematics(geom, q)?;
    let path: Vec<_> = frames.band_path().collect();
    Ok(path.windows(2).map(|w| (w[1] - w[0]).norm()).sum())
}

/// Shortening of the routed band relative to the rest shape, meters.
pub fn tendon_excursion(geom: &FingerGeometry, q: &JointConfiguration) -> Result<f64> {
    let rest = band_length(geom, &JointConfiguration::rest(geom))?;
    Ok(rest - band_length(geom, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn finger() -> (FingerGeometry, StiffnessVector) {
        (
            FingerGeometry::reference().scaled(1.5).unwrap(),
            StiffnessVector::new(vec![28.48, 4.05, 4.05]).unwrap(),
        )
    }

    #[test]
    fn zero_tension_returns_rest_exactly() {
        let (g, k) = finger();
        let init = JointConfiguration::from_deflections(&g, &[0.3, 0.2, 0.1]).unwrap();
        let eq = solve_equilibrium(&g, &k, 0.0, &init, &SolverOptions::default()).unwrap();
        assert_eq!(eq.config, JointConfiguration::rest(&g));
        assert_eq!(eq.residual_norm, 0.0);
    }

    #[test]
    fn stiff_joints_barely_move() {
        let (g, _) = finger();
        let k = StiffnessVector::new(vec![1e6; 3]).unwrap();
        let eq = solve_equilibrium(&g, &k, 75.0, &JointConfiguration::rest(&g), &SolverOptions::default()).unwrap();
        assert!(eq.config.deflections().iter().all(|d| d.abs() < 1e-4));
    }

    #[test]
    fn converged_residual_below_tolerance() {
        let (g, k) = finger();
        let opts = SolverOptions::default();
        let eq = solve_equilibrium(&g, &k, 40.0, &JointConfiguration::rest(&g), &opts).unwrap();
        let r = torque_residuals(40.0, &eq.config, &k, &g).unwrap();
        assert!(r.iter().all(|v| v.abs() <= opts.tolerance));
        assert!(eq.config.deflections().iter().all(|d| *d > 0.0));
        assert!(!eq.on_boundary());
    }

    #[test]
    fn iteration_budget_exhaustion_reports_best_iterate() {
        let (g, k) = finger();
        let opts = SolverOptions {
            max_iterations: 1,
            tolerance: 1e-15,
            ..Default::default()
        };
        match solve_equilibrium(&g, &k, 75.0, &JointConfiguration::rest(&g), &opts) {
            Err(Error::Convergence { best, residual_norm, .. }) => {
                assert_eq!(best.len(), 3);
                assert!(residual_norm.is_finite());
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn negative_tension_rejected() {
        let (g, k) = finger();
        let r = solve_equilibrium(&g, &k, -1.0, &JointConfiguration::rest(&g), &SolverOptions::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bad_options_rejected() {
        let (g, k) = finger();
        let opts = SolverOptions { tolerance: 0.0, ..Default::default() };
        assert!(solve_equilibrium(&g, &k, 1.0, &JointConfiguration::rest(&g), &opts).is_err());
        let opts = SolverOptions { max_iterations: 0, ..Default::default() };
        assert!(solve_equilibrium(&g, &k, 1.0, &JointConfiguration::rest(&g), &opts).is_err());
    }

    #[test]
    fn extension_load_is_held_at_boundary() {
        // Anchor behind joint 1: the band torque on the single joint is
        // f·(a·cosδ − b·sinδ) < 0, so the finger stays at rest.
        let g = FingerGeometry::new(vec![0.03], vec![0.0])
            .unwrap()
            .with_band_anchor(crate::geometry::RoutingPoint::new(-0.01, 0.003))
            .unwrap();
        let k = StiffnessVector::new(vec![2.0]).unwrap();
        let eq = solve_equilibrium(&g, &k, 10.0, &JointConfiguration::rest(&g), &SolverOptions::default()).unwrap();
        assert_eq!(eq.config.deflections(), &[0.0]);
        assert_eq!(eq.boundary_joints, vec![0]);
        assert!(eq.residuals[0] < 0.0);
    }

    #[test]
    fn single_schedule_entry_at_rest() {
        let (g, k) = finger();
        let t = force_ramp(&g, &k, &[0.0], &SolverOptions::default()).unwrap();
        assert_eq!(t.points.len(), 1);
        assert_eq!(t.points[0].config, JointConfiguration::rest(&g));
        assert_eq!(t.points[0].excursion, 0.0);
    }

    #[test]
    fn malformed_schedules_rejected() {
        let (g, k) = finger();
        let o = SolverOptions::default();
        assert!(force_ramp(&g, &k, &[], &o).is_err());
        assert!(force_ramp(&g, &k, &[0.0, 5.0, 5.0], &o).is_err());
        assert!(force_ramp(&g, &k, &[-1.0, 5.0], &o).is_err());
    }

    #[test]
    fn clamp_validation() {
        let (g, k) = finger();
        let o = SolverOptions::default();
        let c = ClampSet::new().with(3, 0.0).unwrap();
        assert!(solve_with_clamps(&g, &k, 10.0, &c, &o).is_err());
        // Below the rest angle of joint 1.
        let c = ClampSet::new().with(0, 0.1).unwrap();
        assert!(solve_with_clamps(&g, &k, 10.0, &c, &o).is_err());
        assert!(ClampSet::new().with(0, 1.0).unwrap().with(0, 1.1).is_err());
    }

    #[test]
    fn empty_clamps_match_free_solve() {
        let (g, k) = finger();
        let o = SolverOptions::default();
        let free = solve_equilibrium(&g, &k, 30.0, &JointConfiguration::rest(&g), &o).unwrap();
        let clamped = solve_with_clamps(&g, &k, 30.0, &ClampSet::new(), &o).unwrap();
        assert_eq!(clamped.equilibrium.config, free.config);
        assert!(clamped.reactions.is_empty());
    }

    #[test]
    fn fully_clamped_at_rest() {
        let (g, k) = finger();
        let c = ClampSet::all_at_rest(&g);
        let s = solve_with_clamps(&g, &k, 10.0, &c, &SolverOptions::default()).unwrap();
        assert_eq!(s.equilibrium.config, JointConfiguration::rest(&g));
        // At rest the band angles vanish; the reactions cancel the distal pull.
        let u = crate::statics::joint_load_torques(10.0, &JointConfiguration::rest(&g), &g).unwrap();
        for ((j, reaction), u) in s.reactions.iter().zip(&u) {
            assert_relative_eq!(*reaction, -u, max_relative = 1e-14);
            assert!(*j < 3);
        }
    }

    #[test]
    fn excursion_zero_at_rest_and_homogeneous() {
        let (g, _) = finger();
        assert_eq!(tendon_excursion(&g, &JointConfiguration::rest(&g)).unwrap(), 0.0);
        let q = JointConfiguration::from_deflections(&g, &[0.2, 0.5, 0.3]).unwrap();
        let e = tendon_excursion(&g, &q).unwrap();
        assert!(e > 0.0);
        let g2 = g.scaled(1.3).unwrap();
        let q2 = JointConfiguration::from_deflections(&g2, &[0.2, 0.5, 0.3]).unwrap();
        assert_relative_eq!(tendon_excursion(&g2, &q2).unwrap(), 1.3 * e, max_relative = 1e-12);
    }
}
