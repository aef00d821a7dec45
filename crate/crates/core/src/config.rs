//! Session configuration: a plain-text file of `section.key = value` lines.
//!
//! Blank lines and lines starting with `#` are ignored. Vectors are written
//! as comma-separated components (`patch.grain = 1,0,0`). Unknown keys are
//! rejected so typos do not pass silently.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{FurPatch, Vec3};
use crate::force::ModelConfig;
use crate::stm::StmConfig;
use crate::strand::StrandParams;

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "FURTOUCH_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct StrandSettings {
    pub enabled: bool,
    pub params: StrandParams,
    pub cols: usize,
    pub rows: usize,
    /// Grid footprint (along grain, across grain), m.
    pub size: (f64, f64),
    pub hand_radius: f64,
    /// Upper bound on the integration step, s.
    pub dt: f64,
    /// Write every n-th frame.
    pub frame_stride: usize,
}

impl Default for StrandSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            params: StrandParams::default(),
            cols: 40,
            rows: 40,
            size: (0.25, 0.20),
            hand_radius: 0.04,
            dt: 1.0 / 360.0,
            frame_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticSettings {
    pub enabled: bool,
    /// Verify every n-th command.
    pub stride: usize,
    /// Lateral offset of the comparison points around each focus, m.
    pub probe_offset: f64,
}

impl Default for AcousticSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            stride: 90,
            probe_offset: 0.002,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub commands: String,
    pub focal: String,
    pub strands: String,
    pub report: String,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            commands: "commands.jsonl".into(),
            focal: "focal.csv".into(),
            strands: "strands.jsonl".into(),
            report: "report.json".into(),
        }
    }
}

impl OutputSettings {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub patch: FurPatch,
    pub model: ModelConfig,
    pub stm: StmConfig,
    pub strands: StrandSettings,
    pub acoustic: AcousticSettings,
    pub output: OutputSettings,
    pub tick_rate: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            patch: FurPatch::default(),
            model: ModelConfig::default(),
            stm: StmConfig::default(),
            strands: StrandSettings::default(),
            acoustic: AcousticSettings::default(),
            output: OutputSettings::default(),
            tick_rate: 90.0,
            seed: 0,
        }
    }
}

fn num(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: value must be finite")));
    }
    Ok(v)
}

fn count(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

fn list(key: &str, value: &str, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| num(key, p.trim()))
        .collect::<Result<_>>()?;
    if parts.len() != n {
        return Err(Error::Config(format!("{key}: expected {n} components, got {}", parts.len())));
    }
    Ok(parts)
}

fn vec3(key: &str, value: &str) -> Result<Vec3> {
    let p = list(key, value, 3)?;
    Ok(Vec3::new(p[0], p[1], p[2]))
}

fn pair(key: &str, value: &str) -> Result<(f64, f64)> {
    let p = list(key, value, 2)?;
    Ok((p[0], p[1]))
}

impl SessionConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SessionConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Apply `FURTOUCH_OUT_DIR` if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output.dir = PathBuf::from(dir);
            }
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.strands;
        match key {
            "patch.origin" => self.patch.origin = vec3(key, value)?,
            "patch.grain" => self.patch.grain = vec3(key, value)?,
            "patch.extent" => self.patch.extent = pair(key, value)?,
            "patch.hair_length" => self.patch.hair_length = num(key, value)?,
            "patch.bundle_width" => self.patch.bundle_width = num(key, value)?,
            "patch.hand_height" => self.patch.hand_height = num(key, value)?,
            "patch.f0" => self.patch.f0 = num(key, value)?,
            "patch.k" => self.patch.k = num(key, value)?,

            "model.peak_intensity" => self.model.peak_intensity = num(key, value)?,
            "model.direction_eps" => self.model.direction_eps = num(key, value)?,

            "stm.circumference" => self.stm.circumference = num(key, value)?,
            "stm.emission_rate" => self.stm.emission_rate = num(key, value)?,
            "stm.plane_normal" => self.stm.plane_normal = vec3(key, value)?,

            "strands.enabled" => s.enabled = flag(key, value)?,
            "strands.cols" => s.cols = count(key, value)?,
            "strands.rows" => s.rows = count(key, value)?,
            "strands.size" => s.size = pair(key, value)?,
            "strands.hand_radius" => s.hand_radius = num(key, value)?,
            "strands.dt" => s.dt = num(key, value)?,
            "strands.frame_stride" => s.frame_stride = count(key, value)?,
            "strands.segments" => s.params.segments = count(key, value)?,
            "strands.stiffness" => s.params.stiffness = num(key, value)?,
            "strands.damping" => s.params.damping = num(key, value)?,
            "strands.recovery_time" => s.params.recovery_time = num(key, value)?,
            "strands.gravity" => s.params.gravity = num(key, value)?,
            "strands.friction" => s.params.friction = num(key, value)?,
            "strands.lie_angle_deg" => s.params.lie_angle = num(key, value)?.to_radians(),
            "strands.stand_angle_deg" => s.params.stand_angle = num(key, value)?.to_radians(),

            "acoustic.enabled" => self.acoustic.enabled = flag(key, value)?,
            "acoustic.stride" => self.acoustic.stride = count(key, value)?,
            "acoustic.probe_offset" => self.acoustic.probe_offset = num(key, value)?,

            "session.tick_rate" => self.tick_rate = num(key, value)?,
            "session.seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: expected an integer, got {value:?}")))?
            }

            "output.dir" => self.output.dir = PathBuf::from(value),
            "output.commands" => self.output.commands = value.to_string(),
            "output.focal" => self.output.focal = value.to_string(),
            "output.strands" => self.output.strands = value.to_string(),
            "output.report" => self.output.report = value.to_string(),

            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.patch.validate()?;
        self.stm.validate()?;
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return Err(Error::Config(format!("tick_rate must be > 0, got {}", self.tick_rate)));
        }
        if !(self.stm.emission_rate > 2.0 * crate::force::GROWTH_FREQUENCY_HZ) {
            return Err(Error::Config(format!(
                "emission_rate {} must exceed twice the highest STM frequency",
                self.stm.emission_rate
            )));
        }
        let s = &self.strands;
        if s.enabled {
            s.params.validate()?;
            if s.cols == 0 || s.rows == 0 {
                return Err(Error::Config("strand grid must be non-empty".into()));
            }
            if !(s.hand_radius > 0.0) {
                return Err(Error::Config("strands.hand_radius must be > 0".into()));
            }
            if !(s.dt > 0.0 && s.dt <= s.params.dt_max()) {
                return Err(Error::Config(format!(
                    "strands.dt {} outside stability bound (0, {}]",
                    s.dt,
                    s.params.dt_max()
                )));
            }
            if s.frame_stride == 0 {
                return Err(Error::Config("strands.frame_stride must be >= 1".into()));
            }
        }
        if self.acoustic.enabled && (self.acoustic.stride == 0 || !(self.acoustic.probe_offset > 0.0)) {
            return Err(Error::Config("acoustic.stride and acoustic.probe_offset must be positive".into()));
        }
        Ok(())
    }

    /// Render back to the file format. `parse(render())` reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let v = |p: &Vec3| format!("{},{},{}", p.x, p.y, p.z);
        let p = &self.patch;
        let s = &self.strands;
        let lines = [
            ("patch.origin", v(&p.origin)),
            ("patch.grain", v(&p.grain)),
            ("patch.extent", format!("{},{}", p.extent.0, p.extent.1)),
            ("patch.hair_length", p.hair_length.to_string()),
            ("patch.bundle_width", p.bundle_width.to_string()),
            ("patch.hand_height", p.hand_height.to_string()),
            ("patch.f0", p.f0.to_string()),
            ("patch.k", p.k.to_string()),
            ("model.peak_intensity", self.model.peak_intensity.to_string()),
            ("model.direction_eps", self.model.direction_eps.to_string()),
            ("stm.circumference", self.stm.circumference.to_string()),
            ("stm.emission_rate", self.stm.emission_rate.to_string()),
            ("stm.plane_normal", v(&self.stm.plane_normal)),
            ("strands.enabled", s.enabled.to_string()),
            ("strands.cols", s.cols.to_string()),
            ("strands.rows", s.rows.to_string()),
            ("strands.size", format!("{},{}", s.size.0, s.size.1)),
            ("strands.hand_radius", s.hand_radius.to_string()),
            ("strands.dt", s.dt.to_string()),
            ("strands.frame_stride", s.frame_stride.to_string()),
            ("strands.segments", s.params.segments.to_string()),
            ("strands.stiffness", s.params.stiffness.to_string()),
            ("strands.damping", s.params.damping.to_string()),
            ("strands.recovery_time", s.params.recovery_time.to_string()),
            ("strands.gravity", s.params.gravity.to_string()),
            ("strands.friction", s.params.friction.to_string()),
            ("strands.lie_angle_deg", s.params.lie_angle.to_degrees().to_string()),
            ("strands.stand_angle_deg", s.params.stand_angle.to_degrees().to_string()),
            ("acoustic.enabled", self.acoustic.enabled.to_string()),
            ("acoustic.stride", self.acoustic.stride.to_string()),
            ("acoustic.probe_offset", self.acoustic.probe_offset.to_string()),
            ("session.tick_rate", self.tick_rate.to_string()),
            ("session.seed", self.seed.to_string()),
            ("output.dir", self.output.dir.display().to_string()),
            ("output.commands", self.output.commands.clone()),
            ("output.focal", self.output.focal.clone()),
            ("output.strands", self.output.strands.clone()),
            ("output.report", self.output.report.clone()),
        ];
        for (k, val) in lines {
            let _ = writeln!(out, "{k} = {val}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(SessionConfig::parse("# nothing\n\n").unwrap(), SessionConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = SessionConfig::parse(
            "patch.k = 3e-4\npatch.grain = -1,0,0\nstrands.enabled = true\nstrands.cols = 4\nsession.tick_rate = 120\n",
        )
        .unwrap();
        assert_eq!(cfg.patch.k, 3e-4);
        assert_eq!(cfg.patch.grain, Vec3::new(-1.0, 0.0, 0.0));
        assert!(cfg.strands.enabled);
        assert_eq!(cfg.strands.cols, 4);
        assert_eq!(cfg.tick_rate, 120.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SessionConfig::parse("patch.colour = brown\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(SessionConfig::parse("session.tick_rate = 0\n").is_err());
        assert!(SessionConfig::parse("patch.hand_height = 0.2\n").is_err());
        assert!(SessionConfig::parse("patch.grain = 1,0\n").is_err());
        assert!(SessionConfig::parse("stm.emission_rate = 100\n").is_err());
        assert!(SessionConfig::parse("strands.enabled = true\nstrands.dt = 0.1\n").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = SessionConfig::default();
        cfg.patch.k = 1.234e-4;
        cfg.strands.enabled = true;
        cfg.strands.params.lie_angle = 0.3;
        let back = SessionConfig::parse(&cfg.render()).unwrap();
        assert_eq!(back.patch, cfg.patch);
        assert_eq!(back.strands.enabled, cfg.strands.enabled);
        assert!((back.strands.params.lie_angle - 0.3).abs() < 1e-15);
    }
}
