//! Hand-trajectory CSV: header `t,x,y,z` with optional `vx,vy,vz`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{HandState, Vec3};

/// Parse a trajectory. When velocity columns are absent they are derived by
/// central differences (one-sided at the ends).
pub fn read_trajectory<R: Read>(reader: R, origin: &Path) -> Result<Vec<HandState>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (t, x, y, z) = match (col("t"), col("x"), col("y"), col("z")) {
        (Some(t), Some(x), Some(y), Some(z)) => (t, x, y, z),
        _ => {
            return Err(parse_err(
                origin,
                1,
                format!("expected header t,x,y,z, got {:?}", headers.iter().collect::<Vec<_>>()),
            ))
        }
    };
    let vel = match (col("vx"), col("vy"), col("vz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    let mut samples: Vec<HandState> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(origin, line, e.to_string()))?;
        let field = |idx: usize| -> Result<f64> {
            let raw = record
                .get(idx)
                .ok_or_else(|| parse_err(origin, line, "missing column".into()))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(origin, line, format!("not a number: {raw:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(origin, line, format!("non-finite value {raw:?}")))
            }
        };
        let ts = field(t)?;
        if let Some(prev) = samples.last() {
            if !(ts > prev.t) {
                return Err(parse_err(origin, line, format!("t={ts} not strictly increasing")));
            }
        }
        let position = Vec3::new(field(x)?, field(y)?, field(z)?);
        let velocity = match vel {
            Some((a, b, c)) => Vec3::new(field(a)?, field(b)?, field(c)?),
            None => Vec3::zeros(),
        };
        samples.push(HandState::new(ts, position, velocity));
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if vel.is_none() {
        derive_velocities(&mut samples);
    }
    Ok(samples)
}

pub fn load_trajectory(path: &Path) -> Result<Vec<HandState>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory(std::io::BufReader::new(file), path)
}

pub fn write_trajectory<W: Write>(mut out: W, samples: &[HandState]) -> std::io::Result<()> {
    writeln!(out, "t,x,y,z")?;
    for s in samples {
        writeln!(out, "{},{},{},{}", s.t, s.position.x, s.position.y, s.position.z)?;
    }
    Ok(())
}

/// Fill velocities by central differences on non-uniform time steps.
pub fn derive_velocities(samples: &mut [HandState]) {
    let n = samples.len();
    if n < 2 {
        if let Some(s) = samples.first_mut() {
            s.velocity = Vec3::zeros();
        }
        return;
    }
    let positions: Vec<(f64, Vec3)> = samples.iter().map(|s| (s.t, s.position)).collect();
    for (i, s) in samples.iter_mut().enumerate() {
        let (lo, hi) = match i {
            0 => (0, 1),
            i if i == n - 1 => (n - 2, n - 1),
            i => (i - 1, i + 1),
        };
        let (t0, p0) = positions[lo];
        let (t1, p1) = positions[hi];
        s.velocity = (p1 - p0) / (t1 - t0);
    }
}

fn parse_err(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}
