#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks
//! Key-rate simulation for phase-encoded MDI-QKD with heralded SPDC sources.
//!
//! The pipeline is: photon-number distributions ([`pnd`]) feed the relay model
//! ([`relay`]), whose gain table drives the decoy-state estimators ([`decoy`],
//! [`finite`]) and the key-rate formulas ([`keyrate`]). [`sweep`] searches
//! intensities over distance.

pub mod decoy;
pub mod error;
pub mod finite;
pub mod keyrate;
pub mod oracle;
pub mod pipeline;
pub mod pnd;
pub mod presets;
pub mod protocol;
pub mod relay;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use pipeline::{evaluate, Evaluation};
