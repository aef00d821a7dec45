#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use furtouch::{HandState, Vec3};

/// Against-grain force written out directly from the geometry.
pub fn oracle_force(x: f64, k: f64, l: f64, h: f64, b: f64) -> f64 {
    let s = (l * l - h * h).sqrt();
    let p = s + b;
    let xr = x - (x / p).floor() * p;
    let th = if xr < s { FRAC_PI_2 * xr / s } else { FRAC_PI_2 };
    k * th.sin().powi(2) / (h * th.cos() + xr * th.sin()).powi(2)
}

pub fn oracle_period(l: f64, h: f64, b: f64) -> f64 {
    (l * l - h * h).sqrt() + b
}

/// Straight stroke from `start` to `end` at `speed`, sampled at `rate`.
pub fn stroke(t0: f64, start: Vec3, end: Vec3, speed: f64, rate: f64) -> Vec<HandState> {
    let delta = end - start;
    let duration = delta.norm() / speed;
    let v = delta / duration;
    let n = (duration * rate).round() as usize;
    (0..=n)
        .map(|i| {
            let w = i as f64 / n as f64;
            HandState::new(t0 + duration * w, start + delta * w, v)
        })
        .collect()
}

/// Along the grain (+x) over `length`, then back against it.
pub fn two_leg_sweep(length: f64, speed: f64, height: f64, rate: f64) -> Vec<HandState> {
    let a = Vec3::new(-0.5 * length, 0.0, height);
    let b = Vec3::new(0.5 * length, 0.0, height);
    let mut traj = stroke(0.0, a, b, speed, rate);
    let t1 = traj.last().unwrap().t;
    traj.extend(stroke(t1, b, a, speed, rate).into_iter().skip(1));
    traj
}

/// Palm height over the default patch surface plus `h`.
pub const PALM_Z: f64 = 0.21;
