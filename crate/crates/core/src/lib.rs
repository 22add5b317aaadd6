//! Gauge-invariant flux-field electrodynamics of superconductors on dual cubical meshes.

pub mod config;
pub mod dec_ops;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod junction;
pub mod linalg;
pub mod mesh;
pub mod modes;
pub mod output;
pub mod probe;
pub mod scenarios;
pub mod validate;

pub use error::{Error, Result};
