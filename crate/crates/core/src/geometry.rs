//! Finger geometry, uniform scaling and planar forward kinematics.
//!
//! All kinematics live in the xy-plane of the finger base frame. Joint 1 sits
//! at the origin; with every joint at zero the finger lies along +x and the
//! flexion side is +y. Flexion is counterclockwise-positive. Angles are radians.

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Total finger length at unit scale (meters).
pub const REFERENCE_FINGER_LENGTH: f64 = 0.052;

/// Scale factors of the printed reference hands and their measured finger
/// lengths in millimeters. Pure proportional scaling of the 52 mm reference
/// differs from these by at most 2%.
pub const PRINTED_FINGER_LENGTHS_MM: [(f64, f64); 5] = [
    (0.5, 25.6),
    (0.75, 38.5),
    (1.0, 52.0),
    (1.5, 77.2),
    (1.75, 89.7),
];

/// A point fixed in a link frame: `along` is measured from the proximal joint
/// along the link, `lateral` toward the flexion side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoutingPoint {
    pub along: f64,
    pub lateral: f64,
}

impl RoutingPoint {
    pub fn new(along: f64, lateral: f64) -> Self {
        Self { along, lateral }
    }

    fn scaled(self, kappa: f64) -> Self {
        Self {
            along: self.along * kappa,
            lateral: self.lateral * kappa,
        }
    }
}

/// Link lengths, rest shape and band routing of an m-joint finger.
///
/// Link `i` (0-based) runs from joint `i` to joint `i + 1`; the last link runs
/// to the fingertip. The band enters at a fixed point on the support flange,
/// passes one routing point on each intermediate link and is anchored on the
/// distal link.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerGeometry {
    link_lengths: Vec<f64>,
    rest_angles: Vec<f64>,
    flange_routing: RoutingPoint,
    band_routing: Vec<RoutingPoint>,
    band_anchor: RoutingPoint,
    pad_offsets: Vec<f64>,
    scale: f64,
}

impl FingerGeometry {
    /// Builds a geometry with default routing: every routing point (and the
    /// anchor) at mid-link with a lateral offset of 15% of the link length.
    /// The flange entry point mirrors the first link's routing point.
    pub fn new(link_lengths: Vec<f64>, rest_angles: Vec<f64>) -> Result<Self> {
        let m = link_lengths.len();
        if m == 0 {
            return Err(Error::invalid("a finger needs at least one joint"));
        }
        if rest_angles.len() != m {
            return Err(Error::invalid(format!(
                "{} rest angles given for {} joints",
                rest_angles.len(),
                m
            )));
        }
        let default_point = |l: f64| RoutingPoint::new(0.5 * l, 0.15 * l);
        let geom = Self {
            flange_routing: default_point(link_lengths[0]),
            band_routing: link_lengths[..m - 1].iter().map(|&l| default_point(l)).collect(),
            band_anchor: default_point(link_lengths[m - 1]),
            pad_offsets: link_lengths.iter().map(|&l| 0.2 * l).collect(),
            link_lengths,
            rest_angles,
            scale: 1.0,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// The three-link 52 mm reference finger with a 50° first-joint rest angle.
    pub fn reference() -> Self {
        Self::new(
            vec![0.022, 0.016, 0.014],
            vec![50f64.to_radians(), 0.0, 0.0],
        )
        .expect("reference geometry is valid")
    }

    pub fn with_band_routing(mut self, routing: Vec<RoutingPoint>) -> Result<Self> {
        self.band_routing = routing;
        self.validate()?;
        Ok(self)
    }

    pub fn with_band_anchor(mut self, anchor: RoutingPoint) -> Result<Self> {
        self.band_anchor = anchor;
        self.validate()?;
        Ok(self)
    }

    pub fn with_flange_routing(mut self, entry: RoutingPoint) -> Result<Self> {
        self.flange_routing = entry;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pad_offsets(mut self, pads: Vec<f64>) -> Result<Self> {
        self.pad_offsets = pads;
        self.validate()?;
        Ok(self)
    }

    /// Declares the scale factor the current dimensions correspond to.
    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let m = self.link_lengths.len();
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if let Some((i, l)) = self.link_lengths.iter().enumerate().find(|(_, &l)| !positive(l)) {
            return Err(Error::invalid(format!("link {} length must be positive, got {l}", i + 1)));
        }
        if self.rest_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("rest angles must be finite"));
        }
        if self.band_routing.len() != m - 1 {
            return Err(Error::invalid(format!(
                "{} band routing points given, expected {}",
                self.band_routing.len(),
                m - 1
            )));
        }
        if self.pad_offsets.len() != m {
            return Err(Error::invalid(format!(
                "{} pad offsets given, expected {m}",
                self.pad_offsets.len()
            )));
        }
        let points = std::iter::once(&self.flange_routing)
            .chain(&self.band_routing)
            .chain(std::iter::once(&self.band_anchor));
        for p in points {
            if !positive(p.lateral) || !p.along.is_finite() {
                return Err(Error::invalid(format!(
                    "band routing point ({}, {}) must have a positive lateral offset",
                    p.along, p.lateral
                )));
            }
        }
        if self.pad_offsets.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("pad offsets must be non-negative"));
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn rest_angles(&self) -> &[f64] {
        &self.rest_angles
    }

    pub fn flange_routing(&self) -> RoutingPoint {
        self.flange_routing
    }

    pub fn band_routing(&self) -> &[RoutingPoint] {
        &self.band_routing
    }

    pub fn band_anchor(&self) -> RoutingPoint {
        self.band_anchor
    }

    pub fn pad_offsets(&self) -> &[f64] {
        &self.pad_offsets
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn finger_length(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Length the finger would have at unit scale.
    pub fn reference_length(&self) -> f64 {
        self.finger_length() / self.scale
    }

    /// Multiplies every length by `kappa`; angles are untouched.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("scale factor must be positive, got {kappa}")));
        }
        Ok(Self {
            link_lengths: self.link_lengths.iter().map(|l| l * kappa).collect(),
            rest_angles: self.rest_angles.clone(),
            flange_routing: self.flange_routing.scaled(kappa),
            band_routing: self.band_routing.iter().map(|p| p.scaled(kappa)).collect(),
            band_anchor: self.band_anchor.scaled(kappa),
            pad_offsets: self.pad_offsets.iter().map(|p| p * kappa).collect(),
            scale: self.scale * kappa,
        })
    }
}

/// Joint angles together with their deflections from the rest shape.
///
/// Always satisfies `angles[i] == rest[i] + deflections[i]` bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct JointConfiguration {
    angles: Vec<f64>,
    deflections: Vec<f64>,
}

impl JointConfiguration {
    pub fn rest(geom: &FingerGeometry) -> Self {
        Self {
            angles: geom.rest_angles.clone(),
            deflections: vec![0.0; geom.joint_count()],
        }
    }

    /// From absolute angles. Each angle is re-derived as `rest + (angle - rest)`,
    /// which may move it by one ulp.
    pub fn from_angles(geom: &FingerGeometry, angles: &[f64]) -> Result<Self> {
        check_len(geom, angles.len())?;
        let deflections: Vec<f64> = angles
            .iter()
            .zip(&geom.rest_angles)
            .map(|(a, r)| a - r)
            .collect();
        Self::from_deflections(geom, &deflections)
    }

    pub fn from_deflections(geom: &FingerGeometry, deflections: &[f64]) -> Result<Self> {
        check_len(geom, deflections.len())?;
        if deflections.iter().any(|d| !d.is_finite()) {
            return Err(Error::Numerical("non-finite joint angle".into()));
        }
        Ok(Self {
            angles: geom
                .rest_angles
                .iter()
                .zip(deflections)
                .map(|(r, d)| r + d)
                .collect(),
            deflections: deflections.to_vec(),
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn deflections(&self) -> &[f64] {
        &self.deflections
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

fn check_len(geom: &FingerGeometry, n: usize) -> Result<()> {
    if n != geom.joint_count() {
        return Err(Error::invalid(format!(
            "configuration has {n} joints, geometry has {}",
            geom.joint_count()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkPose {
    pub origin: Point,
    /// Absolute orientation: partial sum of joint angles up to this link.
    pub orientation: f64,
}

impl LinkPose {
    pub fn axis(&self) -> Point {
        Point::new(self.orientation.cos(), self.orientation.sin())
    }

    /// Unit vector toward the flexion side.
    pub fn normal(&self) -> Point {
        Point::new(-self.orientation.sin(), self.orientation.cos())
    }

    pub fn point(&self, p: RoutingPoint) -> Point {
        self.origin + self.axis() * p.along + self.normal() * p.lateral
    }
}

/// World positions of everything forward kinematics produces, in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSet {
    pub links: Vec<LinkPose>,
    pub joints: Vec<Point>,
    pub flange_routing: Point,
    pub routing: Vec<Point>,
    pub anchor: Point,
    pub fingertip: Point,
    /// Mid-link contact pad surface points.
    pub pads: Vec<Point>,
}

impl FrameSet {
    /// Band path: flange entry, intermediate routing points, distal anchor.
    pub fn band_path(&self) -> impl Iterator<Item = &Point> {
        std::iter::once(&self.flange_routing)
            .chain(&self.routing)
            .chain(std::iter::once(&self.anchor))
    }
}

pub fn forward_kinematics(geom: &FingerGeometry, q: &JointConfiguration) -> Result<FrameSet> {
    check_len(geom, q.len())?;
    let m = geom.joint_count();
    let mut links = Vec::with_capacity(m);
    let mut origin = Point::zeros();
    let mut orientation = 0.0;
    for (theta, length) in q.angles.iter().zip(&geom.link_lengths) {
        orientation += theta;
        let pose = LinkPose { origin, orientation };
        origin += pose.axis() * *length;
        links.push(pose);
    }
    let fingertip = origin;
    let joints = links.iter().map(|l| l.origin).collect();
    let routing = links[..m - 1]
        .iter()
        .zip(&geom.band_routing)
        .map(|(l, &p)| l.point(p))
        .collect();
    let anchor = links[m - 1].point(geom.band_anchor);
    let pads = links
        .iter()
        .zip(&geom.link_lengths)
        .zip(&geom.pad_offsets)
        .map(|((l, &len), &pad)| l.point(RoutingPoint::new(0.5 * len, pad)))
        .collect();
    // The flange is link 0, fixed along -x behind joint 1.
    let flange = LinkPose {
        origin: Point::zeros(),
        orientation: std::f64::consts::PI,
    };
    let entry = geom.flange_routing;
    let flange_routing = flange.origin + flange.axis() * entry.along - flange.normal() * entry.lateral;

    Ok(FrameSet {
        links,
        joints,
        flange_routing,
        routing,
        anchor,
        fingertip,
        pads,
    })
}

/// Moment arms used by the joint torque balance.
#[derive(Clone, Debug, PartialEq)]
pub struct LeverVectors {
    /// `to_anchor[i]`: from joint `i` to the band anchor on the distal link.
    pub to_anchor: Vec<Point>,
    frames: FrameSet,
}

impl LeverVectors {
    /// From joint `i` to the band routing point on link `j`, for `i <= j < m - 1`.
    pub fn to_routing(&self, joint: usize, link: usize) -> Point {
        debug_assert!(joint <= link);
        self.frames.routing[link] - self.frames.joints[joint]
    }

    pub fn frames(&self) -> &FrameSet {
        &self.frames
    }
}

pub fn lever_vectors(geom: &FingerGeometry, q: &JointConfiguration) -> Result<LeverVectors> {
    let frames = forward_kinematics(geom, q)?;
    let to_anchor = frames.joints.iter().map(|j| frames.anchor - j).collect();
    Ok(LeverVectors { to_anchor, frames })
}

/// z-component of the planar cross product `a × b`.
pub fn cross_z(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}
