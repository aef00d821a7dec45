//! Spatiotemporal modulation: expand per-tick commands into a device-rate
//! tape of focal points running around a circle.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::error::{Error, Result};
use crate::force::HapticCommand;
use crate::model::{Vec3, UP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalSample {
    pub t: f64,
    pub point: Vec3,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StmConfig {
    /// Circumference of the focal path, m.
    pub circumference: f64,
    /// Focal samples per second.
    pub emission_rate: f64,
    /// Normal of the circle plane.
    pub plane_normal: Vec3,
}

impl Default for StmConfig {
    fn default() -> Self {
        Self {
            circumference: 0.20,
            emission_rate: 16_000.0,
            plane_normal: UP,
        }
    }
}

impl StmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.circumference > 0.0 && self.circumference.is_finite()) {
            return Err(Error::Config(format!(
                "circumference must be > 0, got {}",
                self.circumference
            )));
        }
        if !(self.emission_rate > 0.0 && self.emission_rate.is_finite()) {
            return Err(Error::Config(format!(
                "emission_rate must be > 0, got {}",
                self.emission_rate
            )));
        }
        if !((self.plane_normal.norm() - 1.0).abs() < 1e-9) {
            return Err(Error::Config("plane_normal must be a unit vector".into()));
        }
        Ok(())
    }

    /// Orthonormal in-plane axes `(u, w)` with `u × w = normal`.
    pub fn plane_axes(&self) -> (Vec3, Vec3) {
        let n = self.plane_normal;
        // pick the world axis least aligned with n as a seed
        let seed = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vec3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let u = (seed - n * seed.dot(&n)).normalize();
        let w = n.cross(&u);
        (u, w)
    }

    /// Time of the `n`-th sample on the global emission grid.
    #[inline]
    pub fn sample_time(&self, n: u64) -> f64 {
        n as f64 / self.emission_rate
    }

    /// First sample index with time `>= t`.
    pub fn first_index_at_or_after(&self, t: f64) -> u64 {
        let mut n = (t * self.emission_rate).ceil().max(0.0) as u64;
        while n > 0 && self.sample_time(n - 1) >= t {
            n -= 1;
        }
        while self.sample_time(n) < t {
            n += 1;
        }
        n
    }
}

pub fn circle_radius(circumference: f64) -> f64 {
    circumference / (2.0 * PI)
}

/// Emit the samples covering `[cmd.t, next_cmd_t)`.
///
/// Samples sit on the global grid `n / emission_rate`, so consecutive calls
/// produce a uniformly spaced tape. The focal angle advances at
/// `2π·frequency` starting from `phase_in` at `cmd.t`; the returned phase is
/// the angle at `next_cmd_t`, wrapped to `[0, 2π)`.
pub fn emit(
    cmd: &HapticCommand,
    next_cmd_t: f64,
    cfg: &StmConfig,
    phase_in: f64,
) -> Result<(Vec<FocalSample>, f64)> {
    cfg.validate()?;
    if !(next_cmd_t > cmd.t) {
        return Err(Error::InvalidInput(format!(
            "command interval [{}, {next_cmd_t}) is empty",
            cmd.t
        )));
    }
    if !(cfg.emission_rate > 2.0 * cmd.frequency) {
        return Err(Error::Config(format!(
            "emission rate {} Hz does not exceed twice the STM frequency {} Hz",
            cfg.emission_rate, cmd.frequency
        )));
    }
    let radius = circle_radius(cfg.circumference);
    let (u, w) = cfg.plane_axes();
    let omega = TAU * cmd.frequency;

    let first = cfg.first_index_at_or_after(cmd.t);
    let mut samples = Vec::new();
    let mut n = first;
    loop {
        let t = cfg.sample_time(n);
        if t >= next_cmd_t {
            break;
        }
        let angle = phase_in + omega * (t - cmd.t);
        let (sin, cos) = angle.sin_cos();
        samples.push(FocalSample {
            t,
            point: cmd.focal_center + radius * (cos * u + sin * w),
            intensity: cmd.intensity,
        });
        n += 1;
    }
    let phase_out = (phase_in + omega * (next_cmd_t - cmd.t)).rem_euclid(TAU);
    Ok((samples, phase_out))
}

/// Expand a whole command list. The last command is held until `end_t`.
pub fn emit_all(
    commands: &[HapticCommand],
    end_t: f64,
    cfg: &StmConfig,
    phase_in: f64,
) -> Result<(Vec<FocalSample>, f64)> {
    let mut tape = Vec::new();
    let mut phase = phase_in;
    for (i, cmd) in commands.iter().enumerate() {
        let next_t = commands.get(i + 1).map_or(end_t, |c| c.t);
        if next_t <= cmd.t {
            continue;
        }
        let (samples, out) = emit(cmd, next_t, cfg, phase)?;
        tape.extend(samples);
        phase = out;
    }
    Ok((tape, phase))
}

pub fn write_tape_csv<W: Write>(mut out: W, tape: &[FocalSample]) -> std::io::Result<()> {
    writeln!(out, "t,x,y,z,intensity")?;
    for s in tape {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.t, s.point.x, s.point.y, s.point.z, s.intensity
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StrokeDirection;

    fn command(t: f64, frequency: f64) -> HapticCommand {
        HapticCommand {
            t,
            intensity: 0.6,
            frequency,
            focal_center: Vec3::new(0.01, -0.02, 0.21),
            direction: StrokeDirection::AlongGrain,
            cycle_phase: 0.0,
        }
    }

    #[test]
    fn radius_values() {
        assert!((circle_radius(0.20) - 0.031830988618379).abs() < 1e-12);
        assert!((circle_radius(TAU) - 1.0).abs() < 1e-15);
        assert!((circle_radius(0.1) - 0.0159154943).abs() < 1e-9);
    }

    #[test]
    fn one_second_at_50hz() {
        let cfg = StmConfig::default();
        let (tape, phase) = emit(&command(0.0, 50.0), 1.0, &cfg, 0.3).unwrap();
        assert_eq!(tape.len(), 16_000);
        let d = (phase - 0.3).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-9);
    }

    #[test]
    fn empty_command_list() {
        let (tape, phase) = emit_all(&[], 1.0, &StmConfig::default(), 1.25).unwrap();
        assert!(tape.is_empty());
        assert_eq!(phase, 1.25);
    }

    #[test]
    fn undersampled_rate_is_config_error() {
        let cfg = StmConfig {
            emission_rate: 100.0,
            ..StmConfig::default()
        };
        assert!(matches!(emit(&command(0.0, 70.0), 1.0, &cfg, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn samples_uniform_across_boundaries() {
        let cfg = StmConfig::default();
        let cmds = [command(0.0, 70.0), command(1.0 / 90.0, 30.0), command(2.0 / 90.0, 50.0)];
        let (tape, _) = emit_all(&cmds, 3.0 / 90.0, &cfg, 0.0).unwrap();
        for (i, s) in tape.iter().enumerate() {
            assert_eq!(s.t, cfg.sample_time(i as u64));
        }
    }

    #[test]
    fn tilted_plane_axes_orthonormal() {
        let cfg = StmConfig {
            plane_normal: Vec3::new(1.0, 2.0, 2.0) / 3.0,
            ..StmConfig::default()
        };
        let (u, w) = cfg.plane_axes();
        assert!(u.dot(&w).abs() < 1e-15);
        assert!(u.dot(&cfg.plane_normal).abs() < 1e-15);
        assert!((u.cross(&w) - cfg.plane_normal).norm() < 1e-15);
    }
}
