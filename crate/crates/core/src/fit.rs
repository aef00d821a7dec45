//! Force-trace ingestion and model fitting.
//!
//! Traces are `(position, vertical force)` series with position measured from
//! the point where the probe first touches the fur. Along-grain traces give
//! the constant level; against-grain traces give the spatial period and the
//! force-law constants.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::force;
use crate::model::GrainSense;

/// Autocorrelation a period candidate must reach.
pub const PERIOD_SIGNIFICANCE: f64 = 0.3;
/// Minimum samples past contact for a level estimate.
pub const MIN_GROWTH_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSchema {
    PositionForce,
    TimePositionForce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace {
    /// `(position, force)` pairs sorted by position.
    pub samples: Vec<(f64, f64)>,
    pub direction: Option<GrainSense>,
    /// Stroke speed, m/s; 0 when unknown.
    pub speed: f64,
    pub metadata: BTreeMap<String, String>,
    /// Pre-contact mean that was subtracted.
    pub baseline: f64,
    /// Input positions were not monotone and had to be sorted.
    pub reordered: bool,
}

impl ForceTrace {
    pub fn new(samples: Vec<(f64, f64)>, direction: Option<GrainSense>) -> Self {
        Self {
            samples,
            direction,
            speed: 0.0,
            metadata: BTreeMap::new(),
            baseline: 0.0,
            reordered: false,
        }
    }

    /// Samples at or after first contact.
    pub fn contact_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().copied().filter(|(x, _)| *x >= 0.0)
    }

    pub fn span(&self) -> f64 {
        let xs: Vec<f64> = self.contact_samples().map(|(x, _)| x).collect();
        match (xs.first(), xs.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Write as CSV with `# key=value` metadata comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if let Some(d) = self.direction {
            writeln!(out, "# direction={}", direction_name(d))?;
        }
        if self.speed > 0.0 {
            writeln!(out, "# speed={}", self.speed)?;
        }
        for (k, v) in &self.metadata {
            if k != "direction" && k != "speed" {
                writeln!(out, "# {k}={v}")?;
            }
        }
        writeln!(out, "pos,force")?;
        for (x, f) in &self.samples {
            writeln!(out, "{x},{f}")?;
        }
        Ok(())
    }
}

pub fn direction_name(d: GrainSense) -> &'static str {
    match d {
        GrainSense::Along => "growth",
        GrainSense::Against => "reverse",
    }
}

pub fn parse_direction(s: &str) -> Option<GrainSense> {
    match s.trim().to_ascii_lowercase().as_str() {
        "growth" | "along" | "along_grain" => Some(GrainSense::Along),
        "reverse" | "against" | "against_grain" => Some(GrainSense::Against),
        _ => None,
    }
}

/// Parse a force trace from CSV text.
///
/// Accepts headers `t,pos,force` or `pos,force`. Leading `# key=value` lines
/// become metadata (`direction` and `speed` are interpreted). Rows are sorted
/// by position; the mean force of pre-contact rows (`pos < 0`) is subtracted
/// and negative results are clamped to zero.
pub fn parse_trace(text: &str, origin: &Path) -> Result<(ForceTrace, TraceSchema)> {
    let mut metadata = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else if !line.is_empty() {
            break;
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let schema = match names.as_slice() {
        ["pos", "force"] => TraceSchema::PositionForce,
        ["t", "pos", "force"] => TraceSchema::TimePositionForce,
        other => {
            return Err(parse_err(
                origin,
                1,
                format!("expected header `t,pos,force` or `pos,force`, got {other:?}"),
            ))
        }
    };

    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut values = [0.0; 3];
        for (slot, raw) in values.iter_mut().zip(record.iter()) {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(origin, line, format!("not a number: {raw:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(origin, line, format!("non-finite value {raw:?}")));
            }
            *slot = v;
        }
        rows.push(match schema {
            TraceSchema::PositionForce => (f64::NAN, values[0], values[1]),
            TraceSchema::TimePositionForce => (values[0], values[1], values[2]),
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(origin.to_path_buf()));
    }

    let speed = match schema {
        TraceSchema::TimePositionForce if rows.len() >= 2 => regression_slope(&rows).abs(),
        _ => metadata
            .get("speed")
            .and_then(|s| s.parse::<f64>().ok())
            .unwrap_or(0.0),
    };

    let reordered = rows.windows(2).any(|w| w[1].1 < w[0].1);
    if reordered {
        log::warn!("{}: positions not monotone, sorting", origin.display());
        rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    }

    let pre: Vec<f64> = rows.iter().filter(|r| r.1 < 0.0).map(|r| r.2).collect();
    let baseline = if pre.is_empty() {
        0.0
    } else {
        pre.iter().sum::<f64>() / pre.len() as f64
    };
    let samples = rows
        .iter()
        .map(|&(_, x, f)| (x, (f - baseline).max(0.0)))
        .collect();

    let direction = metadata.get("direction").and_then(|d| parse_direction(d));
    Ok((
        ForceTrace {
            samples,
            direction,
            speed,
            metadata,
            baseline,
            reordered,
        },
        schema,
    ))
}

pub fn load_trace(path: &Path) -> Result<(ForceTrace, TraceSchema)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path)
}

fn regression_slope(rows: &[(f64, f64, f64)]) -> f64 {
    let n = rows.len() as f64;
    let mt = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let mx = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows {
        num += (r.0 - mt) * (r.1 - mx);
        den += (r.0 - mt) * (r.0 - mt);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn parse_err(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

fn require_direction(trace: &ForceTrace, want: GrainSense) -> Result<()> {
    match trace.direction {
        Some(d) if d != want => Err(Error::InvalidInput(format!(
            "trace is a {} stroke, expected {}",
            direction_name(d),
            direction_name(want)
        ))),
        _ => Ok(()),
    }
}

/// Constant-level estimate from an along-grain trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub f0_hat: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl GrowthFit {
    pub fn to_key_values(&self) -> String {
        format!(
            "direction=growth\nf0_hat={}\nstd_error={}\nsamples={}\n",
            self.f0_hat, self.std_error, self.samples
        )
    }
}

/// Mean force over the steady region `x > hair_length`.
pub fn fit_growth(trace: &ForceTrace, hair_length: f64) -> Result<GrowthFit> {
    require_direction(trace, GrainSense::Along)?;
    let contact = trace.contact_samples().count();
    if contact < MIN_GROWTH_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_GROWTH_SAMPLES,
            got: contact,
        });
    }
    let mut steady: Vec<f64> = trace
        .contact_samples()
        .filter(|(x, _)| *x > hair_length)
        .map(|(_, f)| f)
        .collect();
    // fixed summation order, independent of row order
    steady.sort_by(f64::total_cmp);
    if steady.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: steady.len(),
        });
    }
    let n = steady.len() as f64;
    let mean = steady.iter().sum::<f64>() / n;
    let var = steady.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(GrowthFit {
        f0_hat: mean,
        std_error: (var / n).sqrt(),
        samples: steady.len(),
    })
}

/// Resample the contact part of the trace onto a uniform grid.
fn uniform_resample(trace: &ForceTrace) -> Result<(f64, Vec<f64>)> {
    let pts: Vec<(f64, f64)> = trace.contact_samples().collect();
    if pts.len() < 8 {
        return Err(Error::TooFewSamples {
            needed: 8,
            got: pts.len(),
        });
    }
    let mut steps: Vec<f64> = pts.windows(2).map(|w| w[1].0 - w[0].0).filter(|d| *d > 0.0).collect();
    if steps.is_empty() {
        return Err(Error::InvalidInput("trace has no positional extent".into()));
    }
    steps.sort_by(f64::total_cmp);
    let dx = steps[steps.len() / 2];
    let x0 = pts[0].0;
    let span = pts[pts.len() - 1].0 - x0;
    let n = (span / dx).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let x = x0 + i as f64 * dx;
        while j + 2 < pts.len() && pts[j + 1].0 <= x {
            j += 1;
        }
        let (xa, fa) = pts[j];
        let (xb, fb) = pts[(j + 1).min(pts.len() - 1)];
        let f = if xb > xa { fa + (fb - fa) * (x - xa) / (xb - xa) } else { fa };
        out.push(f);
    }
    Ok((dx, out))
}

/// Normalized (unbiased) autocorrelation for lags `0..=max_lag`.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            if var <= 0.0 {
                return 0.0;
            }
            let s: f64 = centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum();
            s / (n - lag) as f64 / var
        })
        .collect()
}

/// Dominant spatial period of an against-grain trace, m.
pub fn estimate_period(trace: &ForceTrace) -> Result<f64> {
    require_direction(trace, GrainSense::Against)?;
    let (dx, values) = uniform_resample(trace)?;
    let max_lag = values.len() / 2;
    let r = autocorrelation(&values, max_lag);
    // skip the zero-lag lobe
    let guard = match r.iter().position(|v| *v < 0.0) {
        Some(g) => g,
        None => {
            return Err(Error::NoPeriodicity {
                best_correlation: r.get(1).copied().unwrap_or(0.0),
            })
        }
    };
    let best = r[guard..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(best >= PERIOD_SIGNIFICANCE) {
        return Err(Error::NoPeriodicity {
            best_correlation: best.max(0.0),
        });
    }
    let threshold = (0.5 * best).max(PERIOD_SIGNIFICANCE);
    // argmax of the first lobe above threshold; single local maxima are
    // unreliable once noise ripples the correlation
    let start = (guard.max(1)..r.len() - 1)
        .find(|&m| r[m] >= threshold)
        .ok_or(Error::NoPeriodicity { best_correlation: best })?;
    let end = (start..r.len() - 1).find(|&m| r[m] < threshold).unwrap_or(r.len() - 1);
    let mut peak = start;
    for m in start..end {
        if r[m] > r[peak] {
            peak = m;
        }
    }
    let peak = peak.clamp(1, r.len() - 2);
    let (a, b, c) = (r[peak - 1], r[peak], r[peak + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok((peak as f64 + shift.clamp(-0.5, 0.5)) * dx)
}

/// Result of fitting the against-grain force law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub k_hat: f64,
    pub h_hat: f64,
    pub p_hat: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub samples: usize,
}

impl FitResult {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "direction=reverse");
        let _ = writeln!(s, "k_hat={}", self.k_hat);
        let _ = writeln!(s, "h_hat={}", self.h_hat);
        let _ = writeln!(s, "p_hat={}", self.p_hat);
        let _ = writeln!(s, "residual_rms={}", self.residual_rms);
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "samples={}", self.samples);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Number of hand heights scanned in `(0, l)`.
    pub grid_points: usize,
    pub max_iterations: usize,
    /// Golden-section stops once the bracket is below `tolerance · l`.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_points: 400,
            max_iterations: 200,
            tolerance: 1e-13,
        }
    }
}

/// Unit-k force law evaluated at `x` for hand height `h`.
fn unit_force(x: f64, l: f64, h: f64, b: f64) -> f64 {
    let lift = force::lift_length(l, h);
    force::cycle_force(force::reduce(x, lift + b), 1.0, h, lift)
}

/// Best `k` for a fixed `h` and the resulting sum of squared residuals.
fn profile(points: &[(f64, f64)], l: f64, h: f64, b: f64) -> (f64, f64) {
    let g: Vec<f64> = points.iter().map(|(x, _)| unit_force(*x, l, h, b)).collect();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gg <= 0.0 {
        return (0.0, points.iter().map(|(_, y)| y * y).sum());
    }
    let gy: f64 = g.iter().zip(points).map(|(gi, (_, y))| gi * y).sum();
    let k = (gy / gg).max(0.0);
    let sse = g.iter().zip(points).map(|(gi, (_, y))| (y - k * gi).powi(2)).sum();
    (k, sse)
}

/// Fit `k` and hand height to an against-grain trace with known hair length
/// `l` and bundle width `b`.
///
/// `k` enters linearly and is solved in closed form for every candidate
/// height. Heights are scanned on a uniform grid and the best cell is refined
/// by golden-section search.
pub fn fit_reverse(trace: &ForceTrace, l: f64, b: f64, opts: &FitOptions) -> Result<FitResult> {
    require_direction(trace, GrainSense::Against)?;
    if !(l > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("need l > 0 and b > 0, got l={l} b={b}")));
    }
    let points: Vec<(f64, f64)> = trace.contact_samples().collect();
    if points.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: points.len(),
        });
    }
    let span = trace.span();
    if span < b {
        return Err(Error::Domain(format!(
            "trace spans {span} m, shorter than any admissible period"
        )));
    }

    let g = opts.grid_points.max(3);
    let heights: Vec<f64> = (1..=g).map(|j| l * j as f64 / (g + 1) as f64).collect();
    let scores: Vec<f64> = heights.par_iter().map(|&h| profile(&points, l, h, b).1).collect();
    // first minimum wins ties, i.e. the smallest h
    let mut best = 0;
    for (j, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = j;
        }
    }

    let step = l / (g + 1) as f64;
    let mut lo = (heights[best] - step).max(step * 1e-6);
    let mut hi = (heights[best] + step).min(l - step * 1e-6);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = profile(&points, l, c, b).1;
    let mut fd = profile(&points, l, d, b).1;
    let mut iterations = 0;
    let mut best_h = heights[best];
    let mut best_sse = scores[best];
    while hi - lo > opts.tolerance * l {
        if iterations >= opts.max_iterations {
            let (k, _) = profile(&points, l, best_h, b);
            return Err(Error::NotConverged {
                iterations,
                best_h,
                best_k: k,
                best_rms: (best_sse / points.len() as f64).sqrt(),
            });
        }
        iterations += 1;
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = profile(&points, l, c, b).1;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = profile(&points, l, d, b).1;
        }
        for (h, s) in [(c, fc), (d, fd)] {
            if s < best_sse {
                best_sse = s;
                best_h = h;
            }
        }
    }

    let (k_hat, sse) = profile(&points, l, best_h, b);
    let p_hat = force::lift_length(l, best_h) + b;
    if span < p_hat {
        return Err(Error::Domain(format!(
            "trace spans {span} m, shorter than the fitted period {p_hat} m"
        )));
    }
    Ok(FitResult {
        k_hat,
        h_hat: best_h,
        p_hat,
        residual_rms: (sse / points.len() as f64).sqrt(),
        iterations,
        samples: points.len(),
    })
}

/// Parameters for generating a synthetic trace from the forward model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub direction: GrainSense,
    pub k: f64,
    pub f0: f64,
    pub l: f64,
    pub h: f64,
    pub b: f64,
    /// Stroke distance covered, m.
    pub span: f64,
    /// Sample spacing, m.
    pub step: f64,
    /// Relative standard deviation of multiplicative Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            direction: GrainSense::Against,
            k: 2e-4,
            f0: 0.05,
            l: 0.05,
            h: 0.01,
            b: 0.03,
            span: 0.25,
            step: 1e-4,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Sample the forward model, optionally with seeded multiplicative noise.
pub fn synthesize(spec: &SyntheticSpec) -> Result<ForceTrace> {
    if !(spec.step > 0.0 && spec.span > 0.0) {
        return Err(Error::InvalidInput("span and step must be > 0".into()));
    }
    if !(spec.noise >= 0.0) {
        return Err(Error::InvalidInput("noise must be >= 0".into()));
    }
    let _ = force::period(spec.l, spec.h, spec.b)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = (spec.span / spec.step).round() as usize + 1;
    let samples = (0..n)
        .map(|i| {
            let x = i as f64 * spec.step;
            let clean = match spec.direction {
                GrainSense::Against => spec.k * unit_force(x, spec.l, spec.h, spec.b),
                GrainSense::Along => spec.f0,
            };
            let f = if spec.noise > 0.0 {
                (clean * (1.0 + spec.noise * normal.sample(&mut rng))).max(0.0)
            } else {
                clean
            };
            (x, f)
        })
        .collect();
    let mut trace = ForceTrace::new(samples, Some(spec.direction));
    let m = &mut trace.metadata;
    m.insert("source".into(), "synthetic".into());
    match spec.direction {
        GrainSense::Against => {
            m.insert("k".into(), spec.k.to_string());
        }
        GrainSense::Along => {
            m.insert("f0".into(), spec.f0.to_string());
        }
    }
    m.insert("l".into(), spec.l.to_string());
    m.insert("h".into(), spec.h.to_string());
    m.insert("b".into(), spec.b.to_string());
    m.insert("noise".into(), spec.noise.to_string());
    m.insert("seed".into(), spec.seed.to_string());
    Ok(trace)
}
