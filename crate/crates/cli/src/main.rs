use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use furtouch::acoustic::{self, ArrayGeometry, PlaneSpec};
use furtouch::fit::{self, FitOptions, SyntheticSpec};
use furtouch::{force, session, trajectory, Error, GrainSense, SessionConfig, Vec3};

#[derive(Parser)]
#[command(name = "furtouch", version, about = "Fur-like mid-air haptics: replay, fitting and field tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Growth,
    Reverse,
}

impl From<Direction> for GrainSense {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Growth => GrainSense::Along,
            Direction::Reverse => GrainSense::Against,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Plane {
    Xy,
    Xz,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a hand trajectory and write command, focal and strand traces.
    Replay {
        trajectory: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides config and FURTOUCH_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit force-law parameters to a measured trace.
    Fit {
        trace: PathBuf,
        /// Stroke direction; defaults to the file's `direction` metadata.
        #[arg(long, value_enum)]
        direction: Option<Direction>,
        /// Hair length, m.
        #[arg(long, default_value_t = 0.05)]
        l: f64,
        /// Bundle width, m.
        #[arg(long, default_value_t = 0.03)]
        b: f64,
    },
    /// Print the against-grain cycle period.
    Period {
        #[arg(long)]
        l: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        b: f64,
        /// Print the shortest round-trip representation instead of 6 decimals.
        #[arg(long)]
        exact: bool,
    },
    /// Simulate the array field around a focus.
    Field {
        /// Focus position `x,y,z` in m.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        focus: Vec3,
        /// Grid points per side.
        #[arg(long, default_value_t = 41)]
        grid: usize,
        /// Half-width of the evaluated square, m.
        #[arg(long, default_value_t = 0.02)]
        half_width: f64,
        #[arg(long, value_enum, default_value = "xy")]
        plane: Plane,
        /// Write `<out>.csv`, `<out>.pgm` and `<out>.meta`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic force trace sampled from the model.
    GenSynthetic {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        l: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, value_enum, default_value = "reverse")]
        direction: Direction,
        /// Along-grain level, N.
        #[arg(long, default_value_t = 0.05)]
        f0: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        span: f64,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad component {p:?}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn open_out(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn replay(trajectory: &Path, config: Option<&Path>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let mut cfg = match config {
        Some(p) => SessionConfig::load(p)?,
        None => SessionConfig::default(),
    };
    cfg.apply_env();
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    let traj = trajectory::load_trajectory(trajectory)?;
    let output = session::run_session(&cfg, &traj)?;
    let r = &output.report;
    println!("ticks={}", r.ticks);
    println!("focal_samples={}", r.focal_samples);
    println!("intensity_peaks={}", r.intensity_peaks);
    println!("gated_ticks={}", r.gated_ticks);
    if let Some(s) = &r.strands {
        println!("strand_frames={}", s.frames);
        println!("released_standing={}", s.released_standing);
    }
    if let Some(a) = &r.acoustic {
        println!("acoustic_focused={}/{}", a.focused, a.checked);
    }
    println!("output_dir={}", cfg.output.dir.display());
    Ok(())
}

fn fit_cmd(path: &Path, direction: Option<Direction>, l: f64, b: f64) -> anyhow::Result<()> {
    let (mut trace, _) = fit::load_trace(path)?;
    let wanted = match (direction.map(GrainSense::from), trace.direction) {
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => bail!("stroke direction unknown: pass --direction or add `# direction=` to the file"),
    };
    if trace.reordered {
        log::warn!("{}: rows were not sorted by position", path.display());
    }
    if trace.direction.is_none() {
        trace.direction = Some(wanted);
    }
    let text = match wanted {
        GrainSense::Along => fit::fit_growth(&trace, l)?.to_key_values(),
        GrainSense::Against => fit::fit_reverse(&trace, l, b, &FitOptions::default())?.to_key_values(),
    };
    print!("{text}");
    Ok(())
}

fn field(focus: Vec3, grid: usize, half: f64, plane: Plane, out: Option<PathBuf>) -> anyhow::Result<()> {
    if half.is_nan() || half <= 0.0 {
        bail!("--half-width must be > 0");
    }
    let geom = ArrayGeometry::default();
    let sol = acoustic::solve_focus(&geom, &focus)?;
    let spec = match plane {
        Plane::Xy => PlaneSpec::horizontal(focus, half),
        Plane::Xz => PlaneSpec::vertical_xz(focus, half),
    };
    let values = acoustic::field_grid(&geom, &sol, &spec, grid, grid)?;
    let meta = acoustic::field_metadata(&geom, &focus, &values);
    let (c, r) = values.argmax();
    let peak = values.point(c, r);
    match out {
        Some(prefix) => {
            let with = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            let mut w = open_out(&with(".csv"))?;
            values.write_csv(&mut w)?;
            w.flush()?;
            let mut w = open_out(&with(".pgm"))?;
            values.write_pgm(&mut w)?;
            w.flush()?;
            std::fs::write(with(".meta"), &meta).with_context(|| format!("cannot write {}", with(".meta").display()))?;
        }
        None => print!("{meta}"),
    }
    println!("argmax={},{},{}", peak.x, peak.y, peak.z);
    Ok(())
}

fn gen_synthetic(spec: SyntheticSpec, out: Option<PathBuf>) -> anyhow::Result<()> {
    let trace = fit::synthesize(&spec)?;
    match out {
        Some(p) => {
            let mut w = open_out(&p)?;
            trace.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            trace.write_csv(&mut w)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Replay { trajectory, config, out } => replay(&trajectory, config.as_deref(), out),
        Command::Fit { trace, direction, l, b } => fit_cmd(&trace, direction, l, b),
        Command::Period { l, h, b, exact } => {
            let p = force::period(l, h, b)?;
            if exact {
                println!("{p} m");
            } else {
                println!("{p:.6} m");
            }
            Ok(())
        }
        Command::Field { focus, grid, half_width, plane, out } => field(focus, grid, half_width, plane, out),
        Command::GenSynthetic { k, l, h, b, direction, f0, noise, seed, span, step, out } => gen_synthetic(
            SyntheticSpec {
                direction: direction.into(),
                k,
                f0,
                l,
                h,
                b,
                span,
                step,
                noise,
                seed,
            },
            out,
        ),
    }
}

/// Exit status per error class.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 3,
        Some(Error::Io { .. }) => 4,
        Some(
            Error::Parse { .. } | Error::EmptyTrajectory | Error::EmptyFile(_) | Error::InvalidInput(_) | Error::Domain(_),
        ) => 5,
        Some(Error::NoPeriodicity { .. } | Error::TooFewSamples { .. } | Error::NotConverged { .. }) => 6,
        Some(Error::DegenerateDistance { .. }) => 5,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn vec3_arg() {
        assert_eq!(parse_vec3("0,-0.01,0.2").unwrap(), Vec3::new(0.0, -0.01, 0.2));
        assert!(parse_vec3("0,0").is_err());
    }

    #[test]
    fn exit_codes_are_distinct_per_class() {
        let cfg = exit_code(&Error::Config("x".into()).into());
        let input = exit_code(&Error::EmptyTrajectory.into());
        let other = exit_code(&anyhow!("plain"));
        assert_ne!(cfg, input);
        assert_ne!(input, other);
        assert!(cfg != 0 && input != 0 && other != 0);
    }
}
