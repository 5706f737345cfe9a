//! Band forces and joint torques of the tendon-driven finger.
//!
//! The band leaves each joint at half the joint's deflection. Its pull on the
//! distal link and the normal forces it presses onto the intermediate links
//! produce load torques `u`, balanced at equilibrium by torsional springs
//! `k * deflection`. Torques are signed z-scalars, flexion positive.

use nalgebra::Rotation2;

use crate::error::{Error, Result};
use crate::geometry::{cross_z, lever_vectors, FingerGeometry, JointConfiguration, Point};

/// Torsional joint stiffnesses, N·m/rad, all strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessVector(Vec<f64>);

impl StiffnessVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("stiffness vector is empty"));
        }
        if let Some(k) = values.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::invalid(format!("stiffness must be positive, got {k}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|k| k * factor).collect())
    }
}

impl std::ops::Index<usize> for StiffnessVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Everything the band does to the finger at one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadState {
    pub f_in: f64,
    /// Pull on the distal link.
    pub distal: Point,
    /// Normal forces on links `0..m-1`.
    pub normals: Vec<Point>,
    /// Joint load torques.
    pub torques: Vec<f64>,
}

fn check_tension(f_in: f64) -> Result<()> {
    if !f_in.is_finite() || f_in < 0.0 {
        return Err(Error::invalid(format!(
            "tendon tension must be finite and non-negative, got {f_in}"
        )));
    }
    Ok(())
}

fn check_stiffness(k: &StiffnessVector, geom: &FingerGeometry) -> Result<()> {
    if k.len() != geom.joint_count() {
        return Err(Error::invalid(format!(
            "{} stiffness values for {} joints",
            k.len(),
            geom.joint_count()
        )));
    }
    Ok(())
}

/// Angle between the band and each link: half of the joint deflection.
/// Deflection rather than absolute angle, so a finger printed pre-bent has
/// no band angle at rest.
pub fn band_angles(q: &JointConfiguration) -> Vec<f64> {
    q.deflections().iter().map(|d| 0.5 * d).collect()
}

pub fn distal_force(f_in: f64, q: &JointConfiguration) -> Result<Point> {
    check_tension(f_in)?;
    let delta_m = 0.5 * q.deflections()[q.len() - 1];
    let total: f64 = q.angles().iter().sum();
    let local = Point::new(-delta_m.sin(), -delta_m.cos());
    Ok(Rotation2::new(total) * local * f_in)
}

/// Normal forces on links `0..m-1` (none for a single-joint finger).
pub fn band_normal_forces(f_in: f64, q: &JointConfiguration) -> Result<Vec<Point>> {
    check_tension(f_in)?;
    let m = q.len();
    let mut orientation = 0.0;
    Ok(q.angles()[..m - 1]
        .iter()
        .zip(q.deflections())
        .map(|(theta, dtheta)| {
            orientation += theta;
            let local = Point::new(0.0, -(0.5 * dtheta).sin());
            Rotation2::new(orientation) * local * f_in
        })
        .collect())
}

pub fn spring_torques(
    k: &StiffnessVector,
    q: &JointConfiguration,
    geom: &FingerGeometry,
) -> Result<Vec<f64>> {
    check_stiffness(k, geom)?;
    if q.len() != geom.joint_count() {
        return Err(Error::invalid("configuration and geometry disagree on joint count"));
    }
    Ok(k.values().iter().zip(q.deflections()).map(|(k, d)| k * d).collect())
}

pub fn load_state(f_in: f64, q: &JointConfiguration, geom: &FingerGeometry) -> Result<LoadState> {
    let levers = lever_vectors(geom, q)?;
    let distal = distal_force(f_in, q)?;
    let normals = band_normal_forces(f_in, q)?;
    let m = geom.joint_count();
    let torques = (0..m)
        .map(|i| {
            // Every band normal force distal of joint i, each with its own arm.
            let wrap: f64 = (i..m - 1)
                .map(|j| cross_z(&normals[j], &levers.to_routing(i, j)))
                .sum();
            cross_z(&distal, &levers.to_anchor[i]) + wrap
        })
        .collect();
    Ok(LoadState {
        f_in,
        distal,
        normals,
        torques,
    })
}

pub fn joint_load_torques(
    f_in: f64,
    q: &JointConfiguration,
    geom: &FingerGeometry,
) -> Result<Vec<f64>> {
    Ok(load_state(f_in, q, geom)?.torques)
}

/// `u - k * deflection`; zero exactly at a quasi-static equilibrium.
pub fn torque_residuals(
    f_in: f64,
    q: &JointConfiguration,
    k: &StiffnessVector,
    geom: &FingerGeometry,
) -> Result<Vec<f64>> {
    let springs = spring_torques(k, q, geom)?;
    let loads = joint_load_torques(f_in, q, geom)?;
    Ok(loads.iter().zip(&springs).map(|(u, s)| u - s).collect())
}
