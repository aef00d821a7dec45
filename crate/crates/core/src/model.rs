//! Shared domain types: hand samples, fur patch parameters and stroke
//! direction classification.
//!
//! Units are SI throughout (meters, seconds, newtons). Device intensity is
//! dimensionless in `[0, 1]`.

use std::fmt;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// World up axis. The fur base lies in the plane orthogonal to it.
pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

/// Default speed threshold for direction changes, m/s.
pub const DEFAULT_DIRECTION_EPS: f64 = 0.005;

/// One timestamped sample of the palm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandState {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl HandState {
    pub fn new(t: f64, position: Vec3, velocity: Vec3) -> Self {
        Self {
            t,
            position,
            velocity,
        }
    }
}

/// Which way the hand moves relative to the natural lie of the fur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrainSense {
    Along,
    Against,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrokeDirection {
    AlongGrain,
    AgainstGrain,
    /// Hand below the speed threshold. Carries the last moving direction,
    /// if there was one.
    Hold(Option<GrainSense>),
}

impl StrokeDirection {
    /// Direction that governs the model: the moving direction, or the one a
    /// hold retains.
    pub fn effective(self) -> Option<GrainSense> {
        match self {
            StrokeDirection::AlongGrain => Some(GrainSense::Along),
            StrokeDirection::AgainstGrain => Some(GrainSense::Against),
            StrokeDirection::Hold(retained) => retained,
        }
    }

    pub fn is_hold(self) -> bool {
        matches!(self, StrokeDirection::Hold(_))
    }

    pub fn label(self) -> &'static str {
        match self {
            StrokeDirection::AlongGrain => "along",
            StrokeDirection::AgainstGrain => "against",
            StrokeDirection::Hold(_) => "hold",
        }
    }
}

impl From<GrainSense> for StrokeDirection {
    fn from(sense: GrainSense) -> Self {
        match sense {
            GrainSense::Along => StrokeDirection::AlongGrain,
            GrainSense::Against => StrokeDirection::AgainstGrain,
        }
    }
}

impl Default for StrokeDirection {
    fn default() -> Self {
        StrokeDirection::Hold(None)
    }
}

impl fmt::Display for StrokeDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrokeDirection::Hold(Some(GrainSense::Along)) => f.write_str("hold(along)"),
            StrokeDirection::Hold(Some(GrainSense::Against)) => f.write_str("hold(against)"),
            other => f.write_str(other.label()),
        }
    }
}

/// Classify the hand velocity against the grain.
///
/// Below `eps` the previous direction is retained and wrapped in
/// [`StrokeDirection::Hold`].
pub fn classify_direction(
    velocity: &Vec3,
    grain: &Vec3,
    prev: StrokeDirection,
    eps: f64,
) -> Result<StrokeDirection> {
    if !velocity.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite hand velocity {:?}",
            velocity.as_slice()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    let along = velocity.dot(grain);
    Ok(if along > eps {
        StrokeDirection::AlongGrain
    } else if along < -eps {
        StrokeDirection::AgainstGrain
    } else {
        StrokeDirection::Hold(prev.effective())
    })
}

/// Geometry and material of a fur patch.
#[derive(Debug, Clone, PartialEq)]
pub struct FurPatch {
    /// Center of the patch on the fur base plane.
    pub origin: Vec3,
    /// Unit vector along which the fur naturally lies.
    pub grain: Vec3,
    /// (width along grain, depth across grain), m.
    pub extent: (f64, f64),
    pub hair_length: f64,
    pub bundle_width: f64,
    /// Palm clearance above the fur base.
    pub hand_height: f64,
    /// Along-grain intensity.
    pub f0: f64,
    /// Proportionality constant of the against-grain force law, N·m².
    pub k: f64,
}

impl Default for FurPatch {
    fn default() -> Self {
        Self {
            origin: Vec3::new(0.0, 0.0, 0.20),
            grain: Vec3::new(1.0, 0.0, 0.0),
            extent: (0.60, 0.30),
            hair_length: 0.05,
            bundle_width: 0.03,
            hand_height: 0.01,
            f0: 0.6,
            k: 2e-4,
        }
    }
}

impl FurPatch {
    pub fn validate(&self) -> Result<()> {
        let norm = self.grain.norm();
        if !((norm - 1.0).abs() < 1e-9) || self.grain.dot(&UP).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "grain must be a horizontal unit vector, got {:?}",
                self.grain.as_slice()
            )));
        }
        if !(self.bundle_width > 0.0) {
            return Err(Error::Config("bundle_width must be > 0".into()));
        }
        if !(self.hand_height > 0.0 && self.hand_height < self.hair_length) {
            return Err(Error::Config(format!(
                "need 0 < hand_height < hair_length, got h={} l={}",
                self.hand_height, self.hair_length
            )));
        }
        if !(0.0..=1.0).contains(&self.f0) {
            return Err(Error::Config(format!("f0 must lie in [0,1], got {}", self.f0)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("k must be positive, got {}", self.k)));
        }
        if !(self.extent.0 > 0.0 && self.extent.1 > 0.0) {
            return Err(Error::Config("extent must be positive".into()));
        }
        if !self.origin.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("origin must be finite".into()));
        }
        Ok(())
    }

    /// Horizontal axis orthogonal to the grain.
    pub fn lateral(&self) -> Vec3 {
        UP.cross(&self.grain)
    }

    /// Whether the palm's horizontal projection lies over the patch.
    pub fn contains(&self, point: &Vec3) -> bool {
        let rel = point - self.origin;
        let along = rel.dot(&self.grain);
        let across = rel.dot(&self.lateral());
        along.abs() <= 0.5 * self.extent.0 && across.abs() <= 0.5 * self.extent.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grain() -> Vec3 {
        Vec3::new(1.0, 0.0, 0.0)
    }

    #[test]
    fn classify_signs() {
        let g = grain();
        let prev = StrokeDirection::default();
        assert_eq!(
            classify_direction(&(0.06 * g), &g, prev, 0.005).unwrap(),
            StrokeDirection::AlongGrain
        );
        assert_eq!(
            classify_direction(&(-0.06 * g), &g, prev, 0.005).unwrap(),
            StrokeDirection::AgainstGrain
        );
    }

    #[test]
    fn stationary_retains_previous() {
        let g = grain();
        let d = classify_direction(&Vec3::zeros(), &g, StrokeDirection::AgainstGrain, 0.005).unwrap();
        assert_eq!(d, StrokeDirection::Hold(Some(GrainSense::Against)));
        // a hold of a hold keeps the retained direction
        let d2 = classify_direction(&Vec3::zeros(), &g, d, 0.005).unwrap();
        assert_eq!(d2, d);
        let none = classify_direction(&Vec3::zeros(), &g, StrokeDirection::default(), 0.005).unwrap();
        assert_eq!(none, StrokeDirection::Hold(None));
    }

    #[test]
    fn oblique_uses_grain_component_only() {
        let g = grain();
        let v = Vec3::new(0.01, 0.5, 0.0);
        assert_eq!(
            classify_direction(&v, &g, StrokeDirection::default(), 0.005).unwrap(),
            StrokeDirection::AlongGrain
        );
    }

    #[test]
    fn non_finite_velocity_rejected() {
        let g = grain();
        let v = Vec3::new(f64::NAN, 0.0, 0.0);
        assert!(matches!(
            classify_direction(&v, &g, StrokeDirection::default(), 0.005),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn patch_validation() {
        assert!(FurPatch::default().validate().is_ok());
        let mut p = FurPatch::default();
        p.hand_height = p.hair_length;
        assert!(p.validate().is_err());
        let mut p = FurPatch::default();
        p.grain = Vec3::new(1.0, 1.0, 0.0);
        assert!(p.validate().is_err());
        let mut p = FurPatch::default();
        p.f0 = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn extent_gating() {
        let p = FurPatch::default();
        assert!(p.contains(&Vec3::new(0.29, 0.1, 0.3)));
        assert!(!p.contains(&Vec3::new(0.31, 0.0, 0.21)));
        assert!(!p.contains(&Vec3::new(0.0, 0.16, 0.21)));
    }
}
