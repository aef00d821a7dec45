//! Fur strands as rooted polylines pushed around by a spherical palm.
//!
//! Each step integrates a spring toward the rest pose (semi-implicit Euler),
//! drags contacting nodes along with the hand, projects them out of the hand
//! sphere and finally restores segment lengths with a root-to-tip pass that
//! never places a node inside the hand or below the skin.
//!
//! When contact ends after an against-grain stroke the strand adopts its
//! release shape, tilted up and toward the reverse grain, as its new rest
//! pose. Along-grain contact leaves the rest pose alone, so those strands
//! spring back.

use std::io::Write;

use nalgebra::{Rotation3, Unit};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FurPatch, GrainSense, Vec3, UP};

/// Nodes closer than this to the hand surface count as touching it, m.
pub const CONTACT_MARGIN: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandCollider {
    pub center: Vec3,
    pub radius: f64,
    pub velocity: Vec3,
}

impl HandCollider {
    /// Sphere whose lowest point sits at the palm.
    pub fn under_palm(palm: Vec3, radius: f64, velocity: Vec3) -> Self {
        Self {
            center: palm + radius * UP,
            radius,
            velocity,
        }
    }

    /// A collider that can touch nothing.
    pub fn absent() -> Self {
        Self {
            center: Vec3::new(0.0, 0.0, 1e9),
            radius: 1e-3,
            velocity: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrandParams {
    pub segments: usize,
    /// Spring rate toward the rest pose, 1/s².
    pub stiffness: f64,
    /// Velocity damping, 1/s.
    pub damping: f64,
    /// Time allowed for a pressed strand to recover, s.
    pub recovery_time: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Fraction of the hand's tangential motion passed to touching nodes.
    pub friction: f64,
    /// Elevation of the lying fur above the skin, radians.
    pub lie_angle: f64,
    /// Elevation of the direction released strands are stood toward, radians.
    pub stand_angle: f64,
}

impl Default for StrandParams {
    fn default() -> Self {
        Self {
            segments: 10,
            stiffness: 40_000.0,
            damping: 150.0,
            recovery_time: 1.5,
            gravity: 9.81,
            friction: 1.0,
            lie_angle: 15f64.to_radians(),
            stand_angle: 65f64.to_radians(),
        }
    }
}

impl StrandParams {
    /// Largest stable step: `dt·(sqrt(stiffness) + damping) <= 1` keeps the
    /// semi-implicit spring-damper update contractive.
    pub fn dt_max(&self) -> f64 {
        1.0 / (self.stiffness.sqrt() + self.damping)
    }

    /// Settling time of the slowest spring-damper mode to 5 %, s.
    pub fn settling_time(&self) -> f64 {
        let omega = self.stiffness.sqrt();
        let zeta = self.damping / (2.0 * omega);
        if zeta < 1.0 {
            3.0 / (zeta * omega)
        } else {
            // overdamped: slow root of s² + c s + k
            let slow = 0.5 * (self.damping - (self.damping * self.damping - 4.0 * self.stiffness).sqrt());
            3.0 / slow
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(Error::Config("strand needs at least one segment".into()));
        }
        for (name, v) in [
            ("stiffness", self.stiffness),
            ("damping", self.damping),
            ("recovery_time", self.recovery_time),
            ("gravity", self.gravity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("strand {name} must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.friction) {
            return Err(Error::Config(format!("friction must lie in [0,1], got {}", self.friction)));
        }
        if self.settling_time() > self.recovery_time {
            return Err(Error::Config(format!(
                "stiffness/damping settle in {:.3} s, longer than recovery_time {} s",
                self.settling_time(),
                self.recovery_time
            )));
        }
        Ok(())
    }

    fn lie_direction(&self, grain: &Vec3) -> Vec3 {
        (self.lie_angle.cos() * grain + self.lie_angle.sin() * UP).normalize()
    }

    fn stand_direction(&self, grain: &Vec3) -> Vec3 {
        (-self.stand_angle.cos() * grain + self.stand_angle.sin() * UP).normalize()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrandState {
    pub root: Vec3,
    /// `segments + 1` nodes; `nodes[0]` is the root.
    pub nodes: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// Rest direction of each segment.
    pub rest_directions: Vec<Vec3>,
    pub released_standing: bool,
    pub segment_length: f64,
    pub grain: Vec3,
    pub in_contact: bool,
    /// Stroke direction of the ongoing contact episode.
    pub contact_sense: Option<GrainSense>,
    /// Exactly at rest and untouched since construction.
    pub settled: bool,
}

impl StrandState {
    /// A straight strand lying along the grain at the configured angle.
    pub fn lying(root: Vec3, grain: Vec3, length: f64, params: &StrandParams) -> Self {
        let n = params.segments;
        let dir = params.lie_direction(&grain);
        let seg = length / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(root);
        for i in 0..n {
            let next = nodes[i] + dir * seg;
            nodes.push(next);
        }
        Self {
            root,
            nodes,
            velocities: vec![Vec3::zeros(); n + 1],
            rest_directions: vec![dir; n],
            released_standing: false,
            segment_length: seg,
            grain,
            in_contact: false,
            contact_sense: None,
            settled: true,
        }
    }

    pub fn tip(&self) -> Vec3 {
        *self.nodes.last().expect("strand has nodes")
    }

    /// Tip elevation above the root, m.
    pub fn tip_height(&self) -> f64 {
        (self.tip() - self.root).dot(&UP)
    }

    pub fn segment_direction(&self, i: usize) -> Vec3 {
        (self.nodes[i + 1] - self.nodes[i]).normalize()
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.velocities.iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn max_length_error(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| ((w[1] - w[0]).norm() - self.segment_length).abs())
            .fold(0.0, f64::max)
    }

    fn length(&self) -> f64 {
        self.segment_length * self.rest_directions.len() as f64
    }

    fn reachable_by(&self, hand: &HandCollider) -> bool {
        (hand.center - self.root).norm() <= hand.radius + self.length() + CONTACT_MARGIN
    }

    fn touches(&self, hand: &HandCollider) -> bool {
        self.nodes[1..]
            .iter()
            .any(|p| (p - hand.center).norm() <= hand.radius + CONTACT_MARGIN)
    }

    /// Advance in place by one step.
    pub fn advance(&mut self, hand: &HandCollider, params: &StrandParams, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt <= params.dt_max()) {
            return Err(Error::Config(format!(
                "dt={dt} outside (0, {}] for the given stiffness/damping",
                params.dt_max()
            )));
        }
        if !(hand.radius > 0.0) {
            return Err(Error::Config("hand radius must be > 0".into()));
        }
        if params.segments != self.rest_directions.len() {
            return Err(Error::Config(format!(
                "strand has {} segments, params say {}",
                self.rest_directions.len(),
                params.segments
            )));
        }
        let reachable = self.reachable_by(hand);
        if self.settled && !reachable {
            return Ok(());
        }
        self.settled = false;

        let n = self.rest_directions.len();
        let seg = self.segment_length;
        let gravity = -params.gravity * UP;
        let old = self.nodes.clone();

        // spring toward rest pose, gravity measured against the rest load,
        // damping
        let mut predicted = old.clone();
        for i in 1..=n {
            let rest = self.rest_directions[i - 1];
            let target = old[i - 1] + rest * seg;
            let current = (old[i] - old[i - 1]) / seg;
            let load = perpendicular(&gravity, &current) - perpendicular(&gravity, &rest);
            let accel = params.stiffness * (target - old[i]) + load - params.damping * self.velocities[i];
            self.velocities[i] += dt * accel;
            predicted[i] = old[i] + dt * self.velocities[i];
        }

        // friction drag and penetration resolution
        if reachable {
            let step = hand.velocity * dt;
            for p in predicted.iter_mut().skip(1) {
                let offset = *p - hand.center;
                let dist = offset.norm();
                if dist <= hand.radius + CONTACT_MARGIN {
                    let normal = if dist > 0.0 { offset / dist } else { UP };
                    let tangential = step - normal * step.dot(&normal);
                    *p += params.friction * tangential;
                    let offset = *p - hand.center;
                    if offset.norm() < hand.radius {
                        *p = hand.center + offset.normalize() * hand.radius;
                    }
                }
            }
        }

        // restore lengths root to tip
        let base = self.root.dot(&UP);
        let mut placed = predicted;
        placed[0] = self.root;
        for i in 1..=n {
            let parent = placed[i - 1];
            let fallback = self.rest_directions[i - 1];
            placed[i] = place_node(&parent, &placed[i], seg, base, reachable.then_some(hand), &fallback);
        }

        for i in 1..=n {
            self.velocities[i] = (placed[i] - old[i]) / dt;
        }
        self.nodes = placed;

        let touching = reachable && self.touches(hand);
        if touching && !self.in_contact {
            let along = hand.velocity.dot(&self.grain);
            self.contact_sense = if along > 0.0 {
                Some(GrainSense::Along)
            } else if along < 0.0 {
                Some(GrainSense::Against)
            } else {
                None
            };
        }
        let released = self.in_contact && !touching;
        self.in_contact = touching;
        if released {
            let grain = self.grain;
            apply_release(self, hand, &grain, params);
            self.contact_sense = None;
        }
        Ok(())
    }
}

/// Component of `v` orthogonal to unit vector `dir`.
fn perpendicular(v: &Vec3, dir: &Vec3) -> Vec3 {
    v - dir * v.dot(dir)
}

/// Put a node at distance `seg` from `parent`, as close as possible to
/// `desired`, outside the hand sphere and not below the skin.
fn place_node(
    parent: &Vec3,
    desired: &Vec3,
    seg: f64,
    base: f64,
    hand: Option<&HandCollider>,
    fallback: &Vec3,
) -> Vec3 {
    let delta = desired - parent;
    let dir = if delta.norm() > 1e-15 { delta.normalize() } else { *fallback };
    let mut p = parent + dir * seg;

    if p.z < base {
        let rise = (base - parent.z).min(seg);
        let reach = (seg * seg - rise * rise).max(0.0).sqrt();
        let horizontal = Vec3::new(p.x - parent.x, p.y - parent.y, 0.0);
        let h_dir = horizontal
            .try_normalize(1e-15)
            .or_else(|| Vec3::new(fallback.x, fallback.y, 0.0).try_normalize(1e-15))
            .unwrap_or(Vec3::x());
        p = parent + h_dir * reach + UP * rise;
    }

    if let Some(hand) = hand {
        if (p - hand.center).norm() < hand.radius {
            p = nearest_on_contact_circle(parent, &p, seg, hand);
        }
    }
    p
}

/// Closest point to `desired` on the circle where the sphere of radius `seg`
/// around `parent` meets the hand sphere.
fn nearest_on_contact_circle(parent: &Vec3, desired: &Vec3, seg: f64, hand: &HandCollider) -> Vec3 {
    let to_center = hand.center - parent;
    let d = to_center.norm();
    if d < 1e-15 {
        return *desired;
    }
    let axis = to_center / d;
    let along = (d * d + seg * seg - hand.radius * hand.radius) / (2.0 * d);
    let rho = (seg * seg - along * along).max(0.0).sqrt();
    let center = parent + axis * along;
    let radial = perpendicular(&(desired - center), &axis);
    let radial = match radial.try_normalize(1e-15) {
        Some(r) => r,
        None => {
            let seed = if axis.cross(&UP).norm() > 1e-6 { UP } else { Vec3::x() };
            axis.cross(&seed).normalize()
        }
    };
    center + radial * rho
}

fn apply_release(state: &mut StrandState, hand: &HandCollider, grain: &Vec3, params: &StrandParams) {
    let sense = state.contact_sense.or_else(|| {
        let along = hand.velocity.dot(grain);
        if along > 0.0 {
            Some(GrainSense::Along)
        } else if along < 0.0 {
            Some(GrainSense::Against)
        } else {
            None
        }
    });
    match sense {
        Some(GrainSense::Against) => {}
        Some(GrainSense::Along) => {
            // smoothed back down
            let lie = params.lie_direction(grain);
            state.rest_directions.iter_mut().for_each(|d| *d = lie);
            state.released_standing = false;
            return;
        }
        None => return,
    }
    let stand = params.stand_direction(grain);
    // rotate the release shape so its chord points along `stand`, keeping
    // the curl, then pull every segment halfway toward `stand`
    let chord = state.tip() - state.root;
    let rotation = chord
        .try_normalize(1e-12)
        .and_then(|c| Rotation3::rotation_between(&c, &stand))
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Unit::new_normalize(UP.cross(grain)), std::f64::consts::PI));
    for i in 0..state.rest_directions.len() {
        let shape = rotation * state.segment_direction(i);
        state.rest_directions[i] = (shape + stand).try_normalize(1e-12).unwrap_or(stand);
    }
    state.released_standing = true;
}

/// Update the rest pose at the end of a contact episode.
///
/// After an against-grain episode the strand's current shape, tilted toward
/// the standing direction, becomes its rest pose and the strand is flagged
/// as standing. An along-grain episode lays it flat again. The episode direction recorded at first contact is used; if
/// none was recorded it is taken from the hand velocity.
pub fn release_update(state: &StrandState, hand: &HandCollider, grain: &Vec3, params: &StrandParams) -> StrandState {
    let mut next = state.clone();
    apply_release(&mut next, hand, grain, params);
    next
}

/// Functional form of [`StrandState::advance`].
pub fn step(state: &StrandState, hand: &HandCollider, params: &StrandParams, dt: f64) -> Result<StrandState> {
    let mut next = state.clone();
    next.advance(hand, params, dt)?;
    Ok(next)
}

/// Step every strand independently.
pub fn patch_step(
    strands: &[StrandState],
    hand: &HandCollider,
    params: &StrandParams,
    dt: f64,
) -> Result<Vec<StrandState>> {
    strands.par_iter().map(|s| step(s, hand, params, dt)).collect()
}

/// A rectangular grid of strands.
#[derive(Debug, Clone)]
pub struct StrandPatch {
    pub cols: usize,
    pub rows: usize,
    pub strands: Vec<StrandState>,
}

impl StrandPatch {
    /// `cols × rows` strands spread over `size` (along grain, across grain)
    /// centered on the patch origin.
    pub fn grid(patch: &FurPatch, params: &StrandParams, cols: usize, rows: usize, size: (f64, f64)) -> Result<Self> {
        params.validate()?;
        patch.validate()?;
        if cols == 0 || rows == 0 {
            return Err(Error::Config("strand grid needs at least one strand".into()));
        }
        let lateral = patch.lateral();
        let cell = |i: usize, n: usize, span: f64| {
            if n == 1 {
                0.0
            } else {
                -0.5 * span + span * i as f64 / (n - 1) as f64
            }
        };
        let strands = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (c, r)))
            .map(|(c, r)| {
                let root = patch.origin + patch.grain * cell(c, cols, size.0) + lateral * cell(r, rows, size.1);
                StrandState::lying(root, patch.grain, patch.hair_length, params)
            })
            .collect();
        Ok(Self { cols, rows, strands })
    }

    pub fn step(&mut self, hand: &HandCollider, params: &StrandParams, dt: f64) -> Result<()> {
        self.strands
            .par_iter_mut()
            .map(|s| s.advance(hand, params, dt))
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    /// Append one record per strand for `frame`.
    pub fn write_frame<W: Write>(&self, mut out: W, frame: usize) -> std::io::Result<()> {
        for (id, s) in self.strands.iter().enumerate() {
            let record = StrandRecord {
                frame,
                strand: id,
                nodes: s.nodes.iter().map(|p| [p.x, p.y, p.z]).collect(),
                released_standing: s.released_standing,
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct StrandRecord {
    frame: usize,
    strand: usize,
    nodes: Vec<[f64; 3]>,
    released_standing: bool,
}
