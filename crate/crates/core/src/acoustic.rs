//! Steady-state phasor model of a planar ultrasound phased array.
//!
//! Transducers are omnidirectional point sources. Focusing uses time reversal:
//! each element is driven with the negative of its propagation phase to the
//! focus, so all contributions arrive in phase.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Vec3;

/// Force produced at intensity 1.0 on the reference target, N.
pub const FULL_SCALE_FORCE_N: f64 = 0.010;
/// Diameter of the reference target for [`FULL_SCALE_FORCE_N`], m.
pub const FULL_SCALE_TARGET_DIAMETER_M: f64 = 0.021;

const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub positions: Vec<Vec3>,
    pub carrier_frequency: f64,
    pub sound_speed: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::grid(16, 16, 0.01)
    }
}

impl ArrayGeometry {
    /// `nx × ny` grid with `pitch` spacing, centered on the origin in z = 0.
    pub fn grid(nx: usize, ny: usize, pitch: f64) -> Self {
        let cx = (nx as f64 - 1.0) / 2.0;
        let cy = (ny as f64 - 1.0) / 2.0;
        let positions = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| Vec3::new((i as f64 - cx) * pitch, (j as f64 - cy) * pitch, 0.0)))
            .collect();
        Self {
            positions,
            carrier_frequency: 40_000.0,
            sound_speed: 343.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.carrier_frequency
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::Config("array needs at least one transducer".into()));
        }
        if !(self.carrier_frequency > 0.0 && self.sound_speed > 0.0) {
            return Err(Error::Config("carrier frequency and sound speed must be > 0".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 over the geometry, for export metadata.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.positions {
            for c in p.iter() {
                hasher.update(c.to_le_bytes());
            }
        }
        hasher.update(self.carrier_frequency.to_le_bytes());
        hasher.update(self.sound_speed.to_le_bytes());
        hex::encode(hasher.finalize())
    }

    fn distance(&self, index: usize, r: &Vec3) -> Result<f64> {
        let d = (r - self.positions[index]).norm();
        if d < MIN_DISTANCE {
            return Err(Error::DegenerateDistance {
                index,
                point: [r.x, r.y, r.z],
            });
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub phases: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl PhaseSolution {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            phases: self.phases.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * s).collect(),
        }
    }
}

/// Drive phases that focus the array at `focus` with uniform unit amplitude.
pub fn solve_focus(geom: &ArrayGeometry, focus: &Vec3) -> Result<PhaseSolution> {
    solve_focus_with_amplitude(geom, focus, 1.0)
}

/// As [`solve_focus`], with every element at `amplitude` (device intensity).
pub fn solve_focus_with_amplitude(
    geom: &ArrayGeometry,
    focus: &Vec3,
    amplitude: f64,
) -> Result<PhaseSolution> {
    geom.validate()?;
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(Error::InvalidInput(format!("amplitude must lie in [0,1], got {amplitude}")));
    }
    let k = geom.wavenumber();
    let phases = (0..geom.positions.len())
        .map(|i| geom.distance(i, focus).map(|d| (-k * d).rem_euclid(TAU)))
        .collect::<Result<Vec<_>>>()?;
    let amplitudes = vec![amplitude; phases.len()];
    Ok(PhaseSolution { phases, amplitudes })
}

/// Coherent sum of spherical waves from every element at `r`.
pub fn pressure_at(geom: &ArrayGeometry, sol: &PhaseSolution, r: &Vec3) -> Result<Complex64> {
    if sol.phases.len() != geom.positions.len() || sol.amplitudes.len() != geom.positions.len() {
        return Err(Error::InvalidInput(format!(
            "solution has {} phases / {} amplitudes for {} transducers",
            sol.phases.len(),
            sol.amplitudes.len(),
            geom.positions.len()
        )));
    }
    let k = geom.wavenumber();
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..geom.positions.len() {
        let d = geom.distance(i, r)?;
        sum += Complex64::from_polar(sol.amplitudes[i] / d, sol.phases[i] + k * d);
    }
    Ok(sum)
}

/// A rectangular sampling plane: `origin + s·u + t·v` for `s, t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSpec {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
}

impl PlaneSpec {
    /// Horizontal square of half-width `half` centered on `center`.
    pub fn horizontal(center: Vec3, half: f64) -> Self {
        Self {
            origin: center - Vec3::new(half, half, 0.0),
            u: Vec3::new(2.0 * half, 0.0, 0.0),
            v: Vec3::new(0.0, 2.0 * half, 0.0),
        }
    }

    /// Vertical x–z square of half-width `half` centered on `center`.
    pub fn vertical_xz(center: Vec3, half: f64) -> Self {
        Self {
            origin: center - Vec3::new(half, 0.0, half),
            u: Vec3::new(2.0 * half, 0.0, 0.0),
            v: Vec3::new(0.0, 0.0, 2.0 * half),
        }
    }

    pub fn point(&self, col: usize, row: usize, cols: usize, rows: usize) -> Vec3 {
        let s = col as f64 / (cols - 1) as f64;
        let t = row as f64 / (rows - 1) as f64;
        self.origin + s * self.u + t * self.v
    }
}

/// Row-major grid of pressure magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub cols: usize,
    pub rows: usize,
    pub plane: PlaneSpec,
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn point(&self, col: usize, row: usize) -> Vec3 {
        self.plane.point(col, row, self.cols, self.rows)
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best % self.cols, best / self.cols)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in 0..self.rows {
            let line: Vec<String> = (0..self.cols).map(|c| self.get(c, row).to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Binary 8-bit graymap, linearly scaled so the grid maximum is 255.
    /// Row 0 of the grid is written last so `v` points up in viewers.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        let max = self.max();
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let mut bytes = Vec::with_capacity(self.values.len());
        for row in (0..self.rows).rev() {
            for col in 0..self.cols {
                bytes.push((self.get(col, row) * scale).round().clamp(0.0, 255.0) as u8);
            }
        }
        out.write_all(&bytes)
    }
}

/// Evaluate `|p|` over a `cols × rows` grid on `plane`.
///
/// Points are evaluated in parallel; each point's sum runs in fixed element
/// order so results do not depend on thread count.
pub fn field_grid(
    geom: &ArrayGeometry,
    sol: &PhaseSolution,
    plane: &PlaneSpec,
    cols: usize,
    rows: usize,
) -> Result<FieldGrid> {
    if cols < 2 || rows < 2 {
        return Err(Error::InvalidInput(format!("grid resolution must be at least 2×2, got {cols}×{rows}")));
    }
    let values = (0..cols * rows)
        .into_par_iter()
        .map(|i| pressure_at(geom, sol, &plane.point(i % cols, i / cols, cols, rows)).map(|p| p.norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldGrid {
        cols,
        rows,
        plane: *plane,
        values,
    })
}

/// Sidecar metadata for a field export, as `key=value` lines.
pub fn field_metadata(geom: &ArrayGeometry, focus: &Vec3, grid: &FieldGrid) -> String {
    let mut s = String::new();
    s.push_str(&format!("geometry_sha256={}\n", geom.fingerprint()));
    s.push_str(&format!("transducers={}\n", geom.positions.len()));
    s.push_str(&format!("carrier_frequency_hz={}\n", geom.carrier_frequency));
    s.push_str(&format!("sound_speed_m_s={}\n", geom.sound_speed));
    s.push_str(&format!("wavelength_m={}\n", geom.wavelength()));
    s.push_str(&format!("focus={},{},{}\n", focus.x, focus.y, focus.z));
    s.push_str(&format!("grid_cols={}\ngrid_rows={}\n", grid.cols, grid.rows));
    let p = grid.plane;
    s.push_str(&format!("plane_origin={},{},{}\n", p.origin.x, p.origin.y, p.origin.z));
    s.push_str(&format!("plane_u={},{},{}\n", p.u.x, p.u.y, p.u.z));
    s.push_str(&format!("plane_v={},{},{}\n", p.v.x, p.v.y, p.v.z));
    s.push_str(&format!("max_magnitude={}\n", grid.max()));
    s.push_str(&format!(
        "intensity_full_scale={} N on {} m target\n",
        FULL_SCALE_FORCE_N, FULL_SCALE_TARGET_DIAMETER_M
    ));
    s
}
