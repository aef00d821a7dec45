//! Replay a hand trajectory through the full pipeline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::acoustic::{self, ArrayGeometry};
use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::force::{CycleState, HapticCommand, HapticModel};
use crate::model::{GrainSense, HandState, StrokeDirection, UP};
use crate::stm::{self, FocalSample};
use crate::strand::{HandCollider, StrandPatch};

/// One tick of the command trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Command as sent to the device (intensity already gated).
    pub command: HapticCommand,
    /// Hand was outside the patch extent.
    pub gated: bool,
    /// Palm height above the patch surface, m.
    pub palm_height: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DirectionCounts {
    pub along: usize,
    pub against: usize,
    pub hold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrandReport {
    pub strands: usize,
    pub frames: usize,
    pub substeps_per_tick: usize,
    pub released_standing: usize,
    pub max_length_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcousticReport {
    pub geometry: String,
    pub checked: usize,
    pub focused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub ticks: usize,
    pub tick_rate: f64,
    pub duration_s: f64,
    pub period_m: f64,
    pub peak_position_m: f64,
    pub peak_force_n: f64,
    pub focal_samples: usize,
    pub gated_ticks: usize,
    pub intensity_peaks: usize,
    pub directions: DirectionCounts,
    pub final_phase: f64,
    pub strands: Option<StrandReport>,
    pub acoustic: Option<AcousticReport>,
}

#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub trace: Vec<TraceRecord>,
    pub tape: Vec<FocalSample>,
    pub report: SessionReport,
}

impl SessionOutput {
    pub fn commands(&self) -> impl Iterator<Item = &HapticCommand> + '_ {
        self.trace.iter().map(|r| &r.command)
    }
}

/// Linearly interpolate `trajectory` onto `t0 + i / rate`.
pub fn resample(trajectory: &[HandState], rate: f64) -> Result<Vec<HandState>> {
    let first = trajectory.first().ok_or(Error::EmptyTrajectory)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Config(format!("tick_rate must be > 0, got {rate}")));
    }
    let t0 = first.t;
    let t1 = trajectory.last().map_or(t0, |s| s.t);
    let n = ((t1 - t0) * rate + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = t0 + i as f64 / rate;
        while j + 2 < trajectory.len() && trajectory[j + 1].t <= t {
            j += 1;
        }
        let a = &trajectory[j];
        let sample = match trajectory.get(j + 1) {
            Some(b) if t > a.t => {
                let w = ((t - a.t) / (b.t - a.t)).min(1.0);
                HandState::new(
                    t,
                    a.position + (b.position - a.position) * w,
                    a.velocity + (b.velocity - a.velocity) * w,
                )
            }
            _ => HandState::new(t, a.position, a.velocity),
        };
        out.push(sample);
    }
    Ok(out)
}

/// Number of local maxima, treating plateaus as a single point.
pub fn count_peaks(values: &[f64]) -> usize {
    let mut peaks = 0;
    let mut rising = false;
    for w in values.windows(2) {
        if w[1] > w[0] {
            rising = true;
        } else if w[1] < w[0] {
            if rising {
                peaks += 1;
            }
            rising = false;
        }
    }
    peaks
}

/// Run the pipeline in memory. Strand frames, when enabled, go to `frames`.
pub fn simulate(
    cfg: &SessionConfig,
    trajectory: &[HandState],
    frames: Option<&mut dyn Write>,
) -> Result<SessionOutput> {
    cfg.validate()?;
    let model = HapticModel::new(cfg.patch.clone(), cfg.model)?;
    let ticks = resample(trajectory, cfg.tick_rate)?;
    let tick_dt = 1.0 / cfg.tick_rate;

    let mut state = CycleState::default();
    let mut trace = Vec::with_capacity(ticks.len());
    let mut directions = DirectionCounts::default();
    for hand in &ticks {
        let (cmd, next) = model.tick(hand, &state)?;
        state = next;
        match cmd.direction {
            StrokeDirection::AlongGrain => directions.along += 1,
            StrokeDirection::AgainstGrain => directions.against += 1,
            StrokeDirection::Hold(_) => directions.hold += 1,
        }
        let gated = !cfg.patch.contains(&hand.position);
        let command = if gated { HapticCommand { intensity: 0.0, ..cmd } } else { cmd };
        trace.push(TraceRecord {
            command,
            gated,
            palm_height: (hand.position - cfg.patch.origin).dot(&UP),
        });
    }

    let commands: Vec<HapticCommand> = trace.iter().map(|r| r.command).collect();
    let end_t = ticks.last().map_or(0.0, |h| h.t) + tick_dt;
    let (tape, final_phase) = stm::emit_all(&commands, end_t, &cfg.stm, 0.0)?;

    let strands = if cfg.strands.enabled {
        Some(run_strands(cfg, &ticks, frames)?)
    } else {
        None
    };
    let acoustic = if cfg.acoustic.enabled {
        Some(verify_focus(cfg, &commands, &tape)?)
    } else {
        None
    };

    let intensities: Vec<f64> = commands.iter().map(|c| c.intensity).collect();
    let report = SessionReport {
        ticks: ticks.len(),
        tick_rate: cfg.tick_rate,
        duration_s: ticks.last().map_or(0.0, |h| h.t) - ticks[0].t,
        period_m: model.period(),
        peak_position_m: model.peak_position(),
        peak_force_n: model.peak_force(),
        focal_samples: tape.len(),
        gated_ticks: trace.iter().filter(|r| r.gated).count(),
        intensity_peaks: count_peaks(&intensities),
        directions,
        final_phase,
        strands,
        acoustic,
    };
    Ok(SessionOutput { trace, tape, report })
}

fn run_strands(cfg: &SessionConfig, ticks: &[HandState], mut frames: Option<&mut dyn Write>) -> Result<StrandReport> {
    let s = &cfg.strands;
    let mut patch = StrandPatch::grid(&cfg.patch, &s.params, s.cols, s.rows, s.size)?;
    let tick_dt = 1.0 / cfg.tick_rate;
    let substeps = ((tick_dt / s.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = tick_dt / substeps as f64;
    let mut max_err: f64 = 0.0;
    let mut written = 0;
    for (i, pair) in ticks.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        for j in 0..substeps {
            let w = (j + 1) as f64 / substeps as f64;
            let palm = a.position + (b.position - a.position) * w;
            let hand = HandCollider::under_palm(palm, s.hand_radius, b.velocity);
            patch.step(&hand, &s.params, dt)?;
        }
        max_err = patch.strands.iter().map(|st| st.max_length_error()).fold(max_err, f64::max);
        let frame = i + 1;
        if frame % s.frame_stride == 0 {
            if let Some(out) = frames.as_deref_mut() {
                patch
                    .write_frame(&mut *out, frame)
                    .map_err(|e| Error::io(cfg.output.path(&cfg.output.strands), e))?;
            }
            written += 1;
        }
    }
    Ok(StrandReport {
        strands: patch.strands.len(),
        frames: written,
        substeps_per_tick: substeps,
        released_standing: patch.strands.iter().filter(|st| st.released_standing).count(),
        max_length_error: max_err,
    })
}

/// Check that every sampled focus is a lateral maximum of the simulated field.
fn verify_focus(cfg: &SessionConfig, commands: &[HapticCommand], tape: &[FocalSample]) -> Result<AcousticReport> {
    let geom = ArrayGeometry::default();
    let (u, v) = cfg.stm.plane_axes();
    let delta = cfg.acoustic.probe_offset;
    let targets: Vec<&FocalSample> = commands
        .iter()
        .step_by(cfg.acoustic.stride)
        .filter(|c| c.intensity > 0.0)
        .filter_map(|c| tape.get(tape.partition_point(|s| s.t < c.t)))
        .collect();
    let results = targets
        .par_iter()
        .map(|s| -> Result<bool> {
            let sol = acoustic::solve_focus_with_amplitude(&geom, &s.point, s.intensity)?;
            let at = acoustic::pressure_at(&geom, &sol, &s.point)?.norm();
            for probe in [u, -u, v, -v] {
                if acoustic::pressure_at(&geom, &sol, &(s.point + probe * delta))?.norm() >= at {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(AcousticReport {
        geometry: geom.fingerprint(),
        checked: results.len(),
        focused: results.iter().filter(|&&ok| ok).count(),
    })
}

#[derive(Serialize)]
struct CommandLine<'a> {
    t: f64,
    intensity: f64,
    frequency: f64,
    focal: [f64; 3],
    direction: &'a str,
    retained: Option<&'a str>,
    cycle_phase: f64,
    gated: bool,
    palm_height: f64,
}

fn sense_name(s: GrainSense) -> &'static str {
    match s {
        GrainSense::Along => "along",
        GrainSense::Against => "against",
    }
}

/// One JSON object per line.
pub fn write_commands<W: Write>(mut out: W, trace: &[TraceRecord]) -> std::io::Result<()> {
    for r in trace {
        let c = &r.command;
        let (direction, retained) = match c.direction {
            StrokeDirection::Hold(s) => ("hold", s.map(sense_name)),
            d => (d.label(), None),
        };
        let line = CommandLine {
            t: c.t,
            intensity: c.intensity,
            frequency: c.frequency,
            focal: [c.focal_center.x, c.focal_center.y, c.focal_center.z],
            direction,
            retained,
            cycle_phase: c.cycle_phase,
            gated: r.gated,
            palm_height: r.palm_height,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish<W: Write>(mut w: W, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Run the pipeline and write every output under `cfg.output.dir`.
pub fn run_session(cfg: &SessionConfig, trajectory: &[HandState]) -> Result<SessionOutput> {
    cfg.validate()?;
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let out = &cfg.output;
    std::fs::create_dir_all(&out.dir).map_err(|e| Error::io(&out.dir, e))?;

    let output = if cfg.strands.enabled {
        let path = out.path(&out.strands);
        let mut w = create(&path)?;
        let output = simulate(cfg, trajectory, Some(&mut w))?;
        finish(w, &path)?;
        output
    } else {
        simulate(cfg, trajectory, None)?
    };

    let path = out.path(&out.commands);
    let mut w = create(&path)?;
    write_commands(&mut w, &output.trace).map_err(|e| Error::io(&path, e))?;
    finish(w, &path)?;

    let path = out.path(&out.focal);
    let mut w = create(&path)?;
    stm::write_tape_csv(&mut w, &output.tape).map_err(|e| Error::io(&path, e))?;
    finish(w, &path)?;

    let path = out.path(&out.report);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &output.report).map_err(|e| Error::io(&path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    finish(w, &path)?;

    Ok(output)
}
