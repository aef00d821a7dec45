//! Visuo-haptic fur model: against/along-grain force law, ultrasound focal
//! path synthesis, a phased-array field stand-in, strand animation and
//! parameter fitting from measured force traces.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustic;
pub mod config;
pub mod error;
pub mod fit;
pub mod force;
pub mod model;
pub mod session;
pub mod stm;
pub mod strand;
pub mod trajectory;

pub use acoustic::{ArrayGeometry, FieldGrid, PhaseSolution, PlaneSpec};
pub use config::SessionConfig;
pub use error::{Error, Result};
pub use fit::{FitResult, ForceTrace, GrowthFit};
pub use force::{CycleState, HapticCommand, HapticModel, ModelConfig};
pub use model::{classify_direction, FurPatch, GrainSense, HandState, StrokeDirection, Vec3};
pub use session::{run_session, SessionOutput};
pub use stm::{FocalSample, StmConfig};
pub use strand::{HandCollider, StrandParams, StrandPatch, StrandState};
