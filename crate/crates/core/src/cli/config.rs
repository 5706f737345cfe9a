//! Declarative finger/hand geometry files (TOML).
//!
//! Dimensions are given at unit scale in millimeters and degrees; `scale`
//! then multiplies every length.
//!
//! ```toml
//! link_lengths_mm = [22.0, 16.0, 14.0]
//! rest_angles_deg = [50.0, 0.0, 0.0]
//! scale = 1.5
//! reference_length_mm = 52.0
//! band_routing_mm = [[11.0, 3.3], [8.0, 2.4]]
//! band_anchor_mm = [7.0, 2.1]
//!
//! [hand]
//! fingers = 2
//! mount_radius_mm = 26.0
//! splay_deg = 50.0
//! ```

use std::path::Path;

use serde::Deserialize;

use super::CliError;
use crate::geometry::{FingerGeometry, RoutingPoint};
use crate::hand::HandLayout;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub link_lengths_mm: Vec<f64>,
    pub rest_angles_deg: Option<Vec<f64>>,
    #[serde(default = "unit")]
    pub scale: f64,
    /// When present, the unit-scale link lengths must add up to this.
    pub reference_length_mm: Option<f64>,
    pub flange_routing_mm: Option<[f64; 2]>,
    pub band_routing_mm: Option<Vec<[f64; 2]>>,
    pub band_anchor_mm: Option<[f64; 2]>,
    pub pad_offsets_mm: Option<Vec<f64>>,
    pub hand: Option<HandConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandConfig {
    pub fingers: Option<usize>,
    /// Unit-scale distance from the hand axis to joint 1.
    pub mount_radius_mm: Option<f64>,
    pub splay_deg: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

fn mm(v: f64) -> f64 {
    v * 1e-3
}

fn point(p: [f64; 2]) -> RoutingPoint {
    RoutingPoint::new(mm(p[0]), mm(p[1]))
}

impl GeometryConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// The finger at unit scale, before `scale` is applied.
    pub fn unit_geometry(&self) -> Result<FingerGeometry, CliError> {
        let lengths: Vec<f64> = self.link_lengths_mm.iter().copied().map(mm).collect();
        let m = lengths.len();
        let rest = match &self.rest_angles_deg {
            Some(r) => r.iter().map(|d| d.to_radians()).collect(),
            None => vec![0.0; m],
        };
        let mut g = FingerGeometry::new(lengths, rest)?;
        if let Some(p) = self.flange_routing_mm {
            g = g.with_flange_routing(point(p))?;
        }
        if let Some(r) = &self.band_routing_mm {
            g = g.with_band_routing(r.iter().copied().map(point).collect())?;
        }
        if let Some(p) = self.band_anchor_mm {
            g = g.with_band_anchor(point(p))?;
        }
        if let Some(p) = &self.pad_offsets_mm {
            g = g.with_pad_offsets(p.iter().copied().map(mm).collect())?;
        }
        if let Some(reference) = self.reference_length_mm {
            let total = g.finger_length() * 1e3;
            if (total - reference).abs() > 1e-9 * reference.abs().max(1.0) {
                return Err(CliError::Validation(format!(
                    "link lengths add up to {total} mm, reference length is {reference} mm"
                )));
            }
        }
        Ok(g)
    }

    pub fn geometry(&self) -> Result<FingerGeometry, CliError> {
        Ok(self.unit_geometry()?.scaled(self.scale)?)
    }

    pub fn fingers(&self) -> Option<usize> {
        self.hand.as_ref().and_then(|h| h.fingers)
    }

    /// Hand layout at the configured scale.
    pub fn layout(&self) -> Result<HandLayout, CliError> {
        let unit = self.unit_geometry()?;
        let default = HandLayout::default_for(&unit);
        let h = self.hand.as_ref();
        let radius = h.and_then(|h| h.mount_radius_mm).map_or(default.radius, mm);
        let splay = h.and_then(|h| h.splay_deg).map_or(default.splay, f64::to_radians);
        Ok(HandLayout::radial(radius, splay).scaled(self.scale))
    }

    /// The 52 mm reference finger at unit scale.
    pub fn reference() -> Self {
        Self {
            link_lengths_mm: vec![22.0, 16.0, 14.0],
            rest_angles_deg: Some(vec![50.0, 0.0, 0.0]),
            scale: 1.0,
            reference_length_mm: Some(52.0),
            flange_routing_mm: None,
            band_routing_mm: None,
            band_anchor_mm: None,
            pad_offsets_mm: None,
            hand: None,
        }
    }
}
