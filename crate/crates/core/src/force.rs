//! Direction-dependent haptic force model.
//!
//! Along the grain the vertical force is a constant level. Against the grain
//! each bundle is lifted, flipped and rubbed over, which repeats with spatial
//! period `P = sqrt(l² - h²) + b`. Within one period the contact angle ramps
//! linearly from 0 to π/2 over the lift length `sqrt(l² - h²)` and then stays
//! at π/2 while the palm slides across the bundle width:
//!
//! ```text
//! F(x) = k sin²θ / (h cosθ + x sinθ)²
//! ```

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{classify_direction, FurPatch, GrainSense, HandState, StrokeDirection, Vec3};

pub const GROWTH_FREQUENCY_HZ: f64 = 70.0;
pub const REVERSE_FREQUENCY_HZ: f64 = 30.0;
/// Used while holding before any stroke has been seen.
pub const STATIC_FREQUENCY_HZ: f64 = 50.0;

/// Lower bound on the squared denominator of the force law.
pub const DENOMINATOR_FLOOR: f64 = 1e-9;

/// Grid resolution used to locate the per-cycle force peak.
pub const PEAK_SCAN_POINTS: usize = 100_000;

fn check_geometry(l: f64, h: f64, b: f64) -> Result<()> {
    if !(l.is_finite() && h.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite geometry l={l} h={h} b={b}")));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("hand height must be > 0, got {h}")));
    }
    if !(h < l) {
        return Err(Error::Domain(format!(
            "hand height {h} is not below hair length {l}: no lift cycle"
        )));
    }
    if !(b > 0.0) {
        return Err(Error::Domain(format!("bundle width must be > 0, got {b}")));
    }
    Ok(())
}

/// Horizontal reach of a hair of length `l` lying down to height `h`.
pub fn lift_length(l: f64, h: f64) -> f64 {
    (l * l - h * h).sqrt()
}

/// Spatial period of the against-grain force, m.
pub fn period(l: f64, h: f64, b: f64) -> Result<f64> {
    check_geometry(l, h, b)?;
    Ok(lift_length(l, h) + b)
}

/// Contact angle at position `x` inside one period.
pub fn theta(x: f64, l: f64, h: f64, b: f64) -> Result<f64> {
    check_geometry(l, h, b)?;
    let s = lift_length(l, h);
    if !(x >= 0.0 && x < s + b) {
        return Err(Error::Domain(format!(
            "x={x} outside [0, {}): reduce modulo the period first",
            s + b
        )));
    }
    Ok(theta_unchecked(x, s))
}

#[inline]
fn theta_unchecked(x: f64, lift: f64) -> f64 {
    if x < lift {
        FRAC_PI_2 * x / lift
    } else {
        FRAC_PI_2
    }
}

#[inline]
pub(crate) fn cycle_force(x: f64, k: f64, h: f64, lift: f64) -> f64 {
    let th = theta_unchecked(x, lift);
    let (sin, cos) = th.sin_cos();
    let denom = (h * cos + x * sin).powi(2).max(DENOMINATOR_FLOOR);
    k * sin * sin / denom
}

/// Reduce `x` into `[0, period)`.
#[inline]
pub fn reduce(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    // `n·period` carries rounding error on either side of a cycle start
    let tol = 4.0 * f64::EPSILON * x.abs().max(period);
    if r <= tol || period - r <= tol {
        0.0
    } else {
        r
    }
}

/// Against-grain vertical force at stroke distance `x` from first contact.
pub fn force_reverse(x: f64, patch: &FurPatch) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!("stroke position must be finite and >= 0, got {x}")));
    }
    let p = period(patch.hair_length, patch.hand_height, patch.bundle_width)?;
    let lift = lift_length(patch.hair_length, patch.hand_height);
    Ok(cycle_force(reduce(x, p), patch.k, patch.hand_height, lift))
}

/// Along-grain level; independent of the stroke position.
pub fn force_growth(patch: &FurPatch) -> f64 {
    patch.f0
}

/// Maximum of the against-grain force over one period, located by a uniform
/// grid scan. Returns `(x_at_max, max)`.
pub fn scan_peak(k: f64, l: f64, h: f64, b: f64, points: usize) -> Result<(f64, f64)> {
    check_geometry(l, h, b)?;
    let lift = lift_length(l, h);
    let p = lift + b;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..points {
        let x = p * i as f64 / points as f64;
        let f = cycle_force(x, k, h, lift);
        if f > best.1 {
            best = (x, f);
        }
    }
    Ok(best)
}

/// Stateless frequency design: smooth along the grain, rough against it.
pub fn frequency_select(mode: StrokeDirection, previous: Option<f64>) -> f64 {
    match mode {
        StrokeDirection::AlongGrain => GROWTH_FREQUENCY_HZ,
        StrokeDirection::AgainstGrain => REVERSE_FREQUENCY_HZ,
        StrokeDirection::Hold(_) => previous.unwrap_or(STATIC_FREQUENCY_HZ),
    }
}

/// Per-tick device command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HapticCommand {
    pub t: f64,
    pub intensity: f64,
    pub frequency: f64,
    pub focal_center: Vec3,
    pub direction: StrokeDirection,
    pub cycle_phase: f64,
}

/// Progress through the current against-grain episode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CycleState {
    /// Distance travelled against the grain since the episode began.
    pub x: f64,
    pub direction: StrokeDirection,
    pub episode_origin: Vec3,
    pub last_t: Option<f64>,
    pub last_position: Option<Vec3>,
    pub last_command: Option<HapticCommand>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Intensity emitted at the against-grain force peak.
    pub peak_intensity: f64,
    /// Speed threshold for direction classification, m/s.
    pub direction_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            peak_intensity: 1.0,
            direction_eps: crate::model::DEFAULT_DIRECTION_EPS,
        }
    }
}

/// A fur patch with its derived constants precomputed.
#[derive(Debug, Clone)]
pub struct HapticModel {
    patch: FurPatch,
    config: ModelConfig,
    lift: f64,
    period: f64,
    peak_x: f64,
    peak_force: f64,
}

impl HapticModel {
    pub fn new(patch: FurPatch, config: ModelConfig) -> Result<Self> {
        patch.validate()?;
        if !(config.peak_intensity > 0.0 && config.peak_intensity <= 1.0) {
            return Err(Error::Config(format!(
                "peak_intensity must lie in (0,1], got {}",
                config.peak_intensity
            )));
        }
        if !(config.direction_eps > 0.0) {
            return Err(Error::Config("direction_eps must be > 0".into()));
        }
        let (l, h, b) = (patch.hair_length, patch.hand_height, patch.bundle_width);
        let lift = lift_length(l, h);
        let period = period(l, h, b)?;
        let (peak_x, peak_force) = scan_peak(patch.k, l, h, b, PEAK_SCAN_POINTS)?;
        Ok(Self {
            patch,
            config,
            lift,
            period,
            peak_x,
            peak_force,
        })
    }

    pub fn patch(&self) -> &FurPatch {
        &self.patch
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn lift_length(&self) -> f64 {
        self.lift
    }

    /// Position of the per-cycle force maximum, relative to cycle start.
    pub fn peak_position(&self) -> f64 {
        self.peak_x
    }

    pub fn peak_force(&self) -> f64 {
        self.peak_force
    }

    /// [`force_reverse`] without re-validating the patch.
    pub fn force_reverse(&self, x: f64) -> f64 {
        cycle_force(reduce(x.max(0.0), self.period), self.patch.k, self.patch.hand_height, self.lift)
    }

    /// Map a force to device intensity for the given direction.
    pub fn intensity_map(&self, force: f64, mode: StrokeDirection) -> Result<f64> {
        if !(force >= 0.0) {
            return Err(Error::InvalidInput(format!("force must be >= 0, got {force}")));
        }
        Ok(match mode.effective() {
            Some(GrainSense::Against) => {
                (force / self.peak_force).min(1.0) * self.config.peak_intensity
            }
            Some(GrainSense::Along) | None => self.patch.f0,
        })
    }

    /// Advance the model by one hand sample.
    pub fn tick(&self, hand: &HandState, state: &CycleState) -> Result<(HapticCommand, CycleState)> {
        if let Some(last) = state.last_t {
            if hand.t < last {
                return Err(Error::InvalidInput(format!(
                    "hand sample t={} precedes previous tick t={last}",
                    hand.t
                )));
            }
        }
        if !hand.position.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("non-finite hand position".into()));
        }
        let direction = classify_direction(
            &hand.velocity,
            &self.patch.grain,
            state.direction,
            self.config.direction_eps,
        )?;
        let mut next = CycleState {
            direction,
            last_t: Some(hand.t),
            last_position: Some(hand.position),
            ..*state
        };

        let command = match direction {
            StrokeDirection::Hold(retained) => match state.last_command {
                Some(prev) => HapticCommand {
                    t: hand.t,
                    direction,
                    ..prev
                },
                None => HapticCommand {
                    t: hand.t,
                    intensity: self.intensity_map(force_growth(&self.patch), direction)?,
                    frequency: frequency_select(direction, None),
                    focal_center: hand.position,
                    direction: StrokeDirection::Hold(retained),
                    cycle_phase: 0.0,
                },
            },
            StrokeDirection::AlongGrain => {
                next.x = 0.0;
                next.episode_origin = hand.position;
                HapticCommand {
                    t: hand.t,
                    intensity: self.intensity_map(force_growth(&self.patch), direction)?,
                    frequency: frequency_select(direction, None),
                    focal_center: hand.position,
                    direction,
                    cycle_phase: 0.0,
                }
            }
            StrokeDirection::AgainstGrain => {
                let continuing = state.direction.effective() == Some(GrainSense::Against);
                match (continuing, state.last_position) {
                    (true, Some(last)) => {
                        let advance = -(hand.position - last).dot(&self.patch.grain);
                        next.x = state.x + advance.max(0.0);
                    }
                    _ => {
                        next.x = 0.0;
                        next.episode_origin = hand.position;
                    }
                }
                let force = self.force_reverse(next.x);
                HapticCommand {
                    t: hand.t,
                    intensity: self.intensity_map(force, direction)?,
                    frequency: frequency_select(direction, None),
                    focal_center: hand.position,
                    direction,
                    cycle_phase: reduce(next.x, self.period) / self.period,
                }
            }
        };
        next.last_command = Some(command);
        Ok((command, next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn patch() -> FurPatch {
        FurPatch::default()
    }

    #[test]
    fn period_matches_observed_cycle() {
        let p = period(0.05, 0.01, 0.03).unwrap();
        assert!((p - (0.0024f64.sqrt() + 0.03)).abs() < 1e-15);
        assert!((p - 0.078990).abs() < 5e-7);
    }

    #[test]
    fn period_degenerates_to_bundle_width() {
        let p = period(0.05, 0.05 - 1e-9, 0.03).unwrap();
        assert!((p - 0.03).abs() < 1e-4);
    }

    #[test]
    fn period_independent_arithmetic() {
        // 0.13² - 0.05² = 0.0144, sqrt = 0.12
        let p = period(0.13, 0.05, 0.02).unwrap();
        assert!((p - 0.14).abs() < 1e-15);
    }

    #[test]
    fn period_rejects_hand_above_tips() {
        assert!(matches!(period(0.05, 0.05, 0.03), Err(Error::Domain(_))));
        assert!(matches!(period(0.05, 0.06, 0.03), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_ramp_and_plateau() {
        let (l, h, b) = (0.05, 0.01, 0.03);
        let s = lift_length(l, h);
        assert_eq!(theta(0.0, l, h, b).unwrap(), 0.0);
        assert!((theta(s / 2.0, l, h, b).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(theta(s + b / 2.0, l, h, b).unwrap(), FRAC_PI_2);
        assert!(theta(s + b, l, h, b).is_err());
        assert!(theta(-1e-6, l, h, b).is_err());
    }

    #[test]
    fn force_reverse_fixed_points() {
        let p = patch();
        assert_eq!(force_reverse(0.0, &p).unwrap(), 0.0);
        let s = lift_length(p.hair_length, p.hand_height);
        let expected = p.k / (p.hair_length.powi(2) - p.hand_height.powi(2));
        let got = force_reverse(s, &p).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12);
        assert!(force_reverse(-0.1, &p).is_err());
    }

    #[test]
    fn force_growth_is_level() {
        let mut p = patch();
        assert_eq!(force_growth(&p), 0.6);
        p.f0 = 0.0;
        assert_eq!(force_growth(&p), 0.0);
    }

    #[test]
    fn denominator_floor_avoids_blowup() {
        // h → 0 makes the denominator vanish at x → 0⁺
        let f = cycle_force(1e-12, 1.0, 0.0, 0.05);
        assert!(f.is_finite());
    }

    #[test]
    fn intensity_mapping() {
        let m = HapticModel::new(patch(), ModelConfig::default()).unwrap();
        assert_eq!(m.intensity_map(123.0, StrokeDirection::AlongGrain).unwrap(), 0.6);
        let fp = m.peak_force();
        assert_eq!(m.intensity_map(fp, StrokeDirection::AgainstGrain).unwrap(), 1.0);
        assert!((m.intensity_map(fp / 2.0, StrokeDirection::AgainstGrain).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(m.intensity_map(fp * 3.0, StrokeDirection::AgainstGrain).unwrap(), 1.0);
        assert!(m.intensity_map(-1.0, StrokeDirection::AgainstGrain).is_err());
    }

    #[test]
    fn frequencies() {
        assert_eq!(frequency_select(StrokeDirection::AlongGrain, None), 70.0);
        assert_eq!(frequency_select(StrokeDirection::AgainstGrain, Some(70.0)), 30.0);
        assert_eq!(frequency_select(StrokeDirection::Hold(None), None), 50.0);
        assert_eq!(frequency_select(StrokeDirection::Hold(None), Some(30.0)), 30.0);
    }

    #[test]
    fn hold_repeats_previous_command() {
        let m = HapticModel::new(patch(), ModelConfig::default()).unwrap();
        let g = m.patch().grain;
        let mut state = CycleState::default();
        let mut last = None;
        for i in 0..30 {
            let t = i as f64 / 90.0;
            let hand = HandState::new(t, -0.06 * t * g, -0.06 * g);
            let (cmd, s) = m.tick(&hand, &state).unwrap();
            state = s;
            last = Some(cmd);
        }
        let last = last.unwrap();
        let hold = HandState::new(1.0, last.focal_center, Vec3::zeros());
        let (cmd, s) = m.tick(&hold, &state).unwrap();
        assert_eq!(cmd.intensity, last.intensity);
        assert_eq!(cmd.frequency, last.frequency);
        assert_eq!(cmd.focal_center, last.focal_center);
        assert_eq!(cmd.cycle_phase, last.cycle_phase);
        assert_eq!(cmd.direction, StrokeDirection::Hold(Some(GrainSense::Against)));
        assert_eq!(s.x, state.x);
    }

    #[test]
    fn along_grain_is_constant() {
        let m = HapticModel::new(patch(), ModelConfig::default()).unwrap();
        let g = m.patch().grain;
        let mut state = CycleState::default();
        for i in 0..200 {
            let t = i as f64 / 90.0;
            let hand = HandState::new(t, 0.06 * t * g, 0.06 * g);
            let (cmd, s) = m.tick(&hand, &state).unwrap();
            assert_eq!((cmd.intensity, cmd.frequency), (0.6, 70.0));
            state = s;
        }
    }

    #[test]
    fn direction_flip_resets_episode() {
        let m = HapticModel::new(patch(), ModelConfig::default()).unwrap();
        let g = m.patch().grain;
        let mut state = CycleState::default();
        let mut pos = Vec3::zeros();
        for i in 0..50 {
            pos -= 0.001 * g;
            let hand = HandState::new(i as f64 * 0.01, pos, -0.1 * g);
            state = m.tick(&hand, &state).unwrap().1;
        }
        assert!(state.x > 0.04);
        let hand = HandState::new(0.5, pos + 0.001 * g, 0.1 * g);
        let (_, s) = m.tick(&hand, &state).unwrap();
        assert_eq!(s.x, 0.0);
        let hand = HandState::new(0.51, pos, -0.1 * g);
        let (cmd, s) = m.tick(&hand, &s).unwrap();
        assert_eq!(s.x, 0.0);
        assert_eq!(cmd.intensity, 0.0);
    }

    #[test]
    fn tick_rejects_time_reversal() {
        let m = HapticModel::new(patch(), ModelConfig::default()).unwrap();
        let (_, s) = m
            .tick(&HandState::new(1.0, Vec3::zeros(), Vec3::zeros()), &CycleState::default())
            .unwrap();
        assert!(m.tick(&HandState::new(0.5, Vec3::zeros(), Vec3::zeros()), &s).is_err());
    }
}
