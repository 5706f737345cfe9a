//! Multi-finger hands driven through a pulley differential.
//!
//! All fingers share one pull loop. A frictionless pulley keeps the tension
//! equal on every band, so under a given actuator force each of the `n`
//! fingers sees `F/n` and is solved independently in its own flexion plane.
//! The pull-loop displacement is the mean of the finger excursions; under
//! displacement control a blocked finger therefore forces the others to
//! take up its share.
//!
//! Fingers are mounted in discrete rotational symmetry about the hand axis
//! (`n = 2` is the opposed gripper). Each finger's base frame is tilted
//! outward by a splay angle inside its flexion plane.

use nalgebra::Vector3;

use crate::equilibrium::{solve_with_clamps_from, tendon_excursion, ClampSet, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{forward_kinematics, FingerGeometry, JointConfiguration};
use crate::statics::StiffnessVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandLayout {
    /// Distance from the hand axis to each finger's joint 1, meters.
    pub radius: f64,
    /// Outward tilt of the finger base x-axis from the hand axis, rad.
    pub splay: f64,
}

impl HandLayout {
    pub fn radial(radius: f64, splay: f64) -> Self {
        Self { radius, splay }
    }

    /// Two facing fingers with their joints `separation` apart.
    pub fn opposed(separation: f64, splay: f64) -> Self {
        Self {
            radius: 0.5 * separation,
            splay,
        }
    }

    /// Splay equal to the first rest angle, so the finger rests parallel to
    /// the hand axis, with the joints one finger length apart.
    pub fn default_for(geom: &FingerGeometry) -> Self {
        Self::opposed(geom.finger_length(), geom.rest_angles()[0])
    }

    pub fn scaled(&self, kappa: f64) -> Self {
        Self {
            radius: self.radius * kappa,
            splay: self.splay,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FingerMount {
    /// Angle of the finger's flexion plane about the hand axis, rad.
    pub azimuth: f64,
    pub radius: f64,
    pub splay: f64,
}

impl FingerMount {
    fn radial_dir(&self) -> Vector3<f64> {
        Vector3::new(self.azimuth.cos(), self.azimuth.sin(), 0.0)
    }

    /// Maps a point of the finger base frame into the hand frame (z along the
    /// hand axis). Finger +y points toward the hand axis.
    pub fn to_hand(&self, p: &crate::geometry::Point) -> Vector3<f64> {
        let radial = self.radial_dir();
        let up = Vector3::z();
        let (s, c) = self.splay.sin_cos();
        let ex = up * c + radial * s;
        let ey = up * s - radial * c;
        radial * self.radius + ex * p.x + ey * p.y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandModel {
    geometry: FingerGeometry,
    stiffness: Vec<StiffnessVector>,
    mounts: Vec<FingerMount>,
    layout: HandLayout,
}

pub fn assemble_hand(
    geom: &FingerGeometry,
    k: &StiffnessVector,
    n: usize,
    layout: HandLayout,
) -> Result<HandModel> {
    if n < 2 {
        return Err(Error::invalid(format!("a hand needs at least two fingers, got {n}")));
    }
    if !(layout.radius > 0.0 && layout.radius.is_finite()) || !layout.splay.is_finite() {
        return Err(Error::invalid("hand layout needs a positive mount radius"));
    }
    if k.len() != geom.joint_count() {
        return Err(Error::invalid(format!(
            "{} stiffness values for {} joints",
            k.len(),
            geom.joint_count()
        )));
    }
    let mounts = (0..n)
        .map(|i| FingerMount {
            azimuth: std::f64::consts::TAU * i as f64 / n as f64,
            radius: layout.radius,
            splay: layout.splay,
        })
        .collect();
    Ok(HandModel {
        geometry: geom.clone(),
        stiffness: vec![k.clone(); n],
        mounts,
        layout,
    })
}

impl HandModel {
    pub fn finger_count(&self) -> usize {
        self.mounts.len()
    }

    pub fn geometry(&self) -> &FingerGeometry {
        &self.geometry
    }

    pub fn mounts(&self) -> &[FingerMount] {
        &self.mounts
    }

    pub fn layout(&self) -> HandLayout {
        self.layout
    }

    pub fn stiffness(&self, finger: usize) -> &StiffnessVector {
        &self.stiffness[finger]
    }

    pub fn with_finger_stiffness(mut self, finger: usize, k: StiffnessVector) -> Result<Self> {
        if finger >= self.finger_count() || k.len() != self.geometry.joint_count() {
            return Err(Error::invalid(format!("cannot set stiffness of finger {}", finger + 1)));
        }
        self.stiffness[finger] = k;
        Ok(self)
    }

    /// Scales finger geometry and mount radius by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        let geometry = self.geometry.scaled(kappa)?;
        let layout = self.layout.scaled(kappa);
        Ok(Self {
            mounts: self
                .mounts
                .iter()
                .map(|m| FingerMount {
                    radius: m.radius * kappa,
                    ..*m
                })
                .collect(),
            geometry,
            stiffness: self.stiffness.clone(),
            layout,
        })
    }

    /// Fingertip positions in the hand frame for the given configurations.
    pub fn fingertips(&self, configs: &[JointConfiguration]) -> Result<Vec<Vector3<f64>>> {
        if configs.len() != self.finger_count() {
            return Err(Error::invalid("one configuration per finger is required"));
        }
        self.mounts
            .iter()
            .zip(configs)
            .map(|(m, q)| Ok(m.to_hand(&forward_kinematics(&self.geometry, q)?.fingertip)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandState {
    pub configs: Vec<JointConfiguration>,
    /// Band tension per finger, N.
    pub tensions: Vec<f64>,
    pub actuator_force: f64,
    /// Tendon excursion per finger, meters.
    pub excursions: Vec<f64>,
    /// Mean finger excursion, meters.
    pub pull_displacement: f64,
    /// Clamp reaction torques per finger, `(joint, N·m)`.
    pub reactions: Vec<Vec<(usize, f64)>>,
}

fn clamps_for(hand: &HandModel, clamps: &[ClampSet]) -> Result<Vec<ClampSet>> {
    match clamps.len() {
        0 => Ok(vec![ClampSet::new(); hand.finger_count()]),
        n if n == hand.finger_count() => Ok(clamps.to_vec()),
        n => Err(Error::invalid(format!(
            "{n} clamp sets for {} fingers",
            hand.finger_count()
        ))),
    }
}

/// Equal tension `F/n` per finger; the last finger takes `F − Σ others` so
/// the tensions sum to `F` exactly.
pub fn split_tension(actuator_force: f64, n: usize) -> Vec<f64> {
    let share = actuator_force / n as f64;
    let mut t = vec![share; n];
    let others: f64 = t[..n - 1].iter().sum();
    t[n - 1] = actuator_force - others;
    t
}

type FingerSolutions = (Vec<JointConfiguration>, Vec<f64>, Vec<Vec<(usize, f64)>>);

fn solve_fingers(
    hand: &HandModel,
    tensions: &[f64],
    clamps: &[ClampSet],
    warm: Option<&[JointConfiguration]>,
    opts: &SolverOptions,
) -> Result<FingerSolutions> {
    let g = &hand.geometry;
    let rest = JointConfiguration::rest(g);
    let mut configs = Vec::with_capacity(tensions.len());
    let mut excursions = Vec::with_capacity(tensions.len());
    let mut reactions = Vec::with_capacity(tensions.len());
    for (i, (&t, c)) in tensions.iter().zip(clamps).enumerate() {
        let init = warm.map_or(&rest, |w| &w[i]);
        let tag = |e| Error::Finger {
            finger: i + 1,
            source: Box::new(e),
        };
        let sol = solve_with_clamps_from(g, &hand.stiffness[i], t, c, init, opts).map_err(tag)?;
        excursions.push(tendon_excursion(g, &sol.equilibrium.config).map_err(tag)?);
        configs.push(sol.equilibrium.config);
        reactions.push(sol.reactions);
    }
    Ok((configs, excursions, reactions))
}

/// Force-controlled actuator: every band carries `actuator_force / n`.
/// `clamps` is either empty or holds one set per finger.
pub fn solve_hand(
    hand: &HandModel,
    actuator_force: f64,
    clamps: &[ClampSet],
    opts: &SolverOptions,
) -> Result<HandState> {
    if !(actuator_force >= 0.0 && actuator_force.is_finite()) {
        return Err(Error::invalid(format!(
            "actuator force must be non-negative, got {actuator_force}"
        )));
    }
    let clamps = clamps_for(hand, clamps)?;
    let tensions = split_tension(actuator_force, hand.finger_count());
    let (configs, excursions, reactions) = solve_fingers(hand, &tensions, &clamps, None, opts)?;
    Ok(HandState {
        pull_displacement: mean(&excursions),
        configs,
        tensions,
        actuator_force,
        excursions,
        reactions,
    })
}

/// Displacement-controlled actuator: finds the common band tension at which
/// the mean finger excursion equals `displacement` (meters).
pub fn solve_hand_at_displacement(
    hand: &HandModel,
    displacement: f64,
    clamps: &[ClampSet],
    opts: &SolverOptions,
) -> Result<HandState> {
    if !(displacement >= 0.0 && displacement.is_finite()) {
        return Err(Error::invalid(format!(
            "pull-loop displacement must be non-negative, got {displacement}"
        )));
    }
    let clamps = clamps_for(hand, clamps)?;
    let n = hand.finger_count();
    let at = |tension: f64, warm: Option<&[JointConfiguration]>| {
        let tensions = vec![tension; n];
        let (configs, excursions, reactions) = solve_fingers(hand, &tensions, &clamps, warm, opts)?;
        Ok::<_, Error>((mean(&excursions), configs, excursions, reactions))
    };
    let build = |tension: f64, (disp, configs, excursions, reactions)| HandState {
        tensions: split_tension(tension * n as f64, n),
        actuator_force: tension * n as f64,
        pull_displacement: disp,
        configs,
        excursions,
        reactions,
    };

    let mut lo = (0.0, at(0.0, None)?);
    if displacement == 0.0 {
        return Ok(build(0.0, lo.1));
    }
    // Bracket by doubling; excursion grows with tension.
    let mut t_hi = 1.0;
    let mut hi = at(t_hi, None)?;
    while hi.0 < displacement {
        if t_hi > 1e6 {
            return Err(Error::invalid(format!(
                "pull-loop displacement {displacement} m is out of reach"
            )));
        }
        lo = (t_hi, hi);
        t_hi *= 2.0;
        hi = at(t_hi, Some(&lo.1 .1))?;
    }
    let mut hi = (t_hi, hi);
    // Illinois false position on the monotone scalar map.
    let mut side = 0i8;
    let (mut w_lo, mut w_hi) = (1.0, 1.0);
    for _ in 0..200 {
        let g_lo = lo.1 .0 - displacement;
        let g_hi = hi.1 .0 - displacement;
        let t = (lo.0 * g_hi * w_hi - hi.0 * g_lo * w_lo) / (g_hi * w_hi - g_lo * w_lo);
        let t = if t.is_finite() && t > lo.0 && t < hi.0 { t } else { 0.5 * (lo.0 + hi.0) };
        let mid = at(t, Some(&lo.1 .1))?;
        let g = mid.0 - displacement;
        if g.abs() <= 1e-12 * displacement || (hi.0 - lo.0) <= 1e-14 * hi.0 {
            return Ok(build(t, mid));
        }
        if g < 0.0 {
            lo = (t, mid);
            w_lo = 1.0;
            if side == -1 {
                w_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = (t, mid);
            w_hi = 1.0;
            if side == 1 {
                w_lo *= 0.5;
            }
            side = 1;
        }
    }
    let (t, state) = if (lo.1 .0 - displacement).abs() < (hi.1 .0 - displacement).abs() { lo } else { hi };
    Ok(build(t, state))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Smallest fingertip-to-fingertip distance over all finger pairs, meters.
/// Contact is not modeled, so the hand counts as closed (aperture 0) once
/// any fingertip reaches the hand axis.
pub fn aperture(hand: &HandModel, state: &HandState) -> Result<f64> {
    aperture_of(hand, &state.configs)
}

/// [`aperture`] for bare per-finger configurations.
pub fn aperture_of(hand: &HandModel, configs: &[JointConfiguration]) -> Result<f64> {
    let tips = hand.fingertips(configs)?;
    let crossed = hand.mounts.iter().zip(&tips).any(|(m, t)| {
        let radial = Vector3::new(m.azimuth.cos(), m.azimuth.sin(), 0.0);
        t.dot(&radial) <= 0.0
    });
    if crossed {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for i in 0..tips.len() {
        for j in i + 1..tips.len() {
            best = best.min((tips[i] - tips[j]).norm());
        }
    }
    Ok(best)
}
