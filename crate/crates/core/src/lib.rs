//! Model of an actively time-multiplexed heralded single-photon source.
//!
//! * [`model`]: parameters and pair statistics
//! * [`efficiency`]: closed-form generation efficiency
//! * [`control`]: switch schedules and herald selection logic
//! * [`montecarlo`]: frame-level simulation used to check the closed forms
//! * [`bell`]: Fock-space enumeration of the Bell-state circuits
//! * [`app`]: configuration, sweeps and the command-line front end

// `!(x >= 0.0)` style checks are kept so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod bell;
pub mod control;
pub mod efficiency;
pub mod error;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{Detection, PairDistribution, SchemeConfig, Selection, SourceParams, Topology};
