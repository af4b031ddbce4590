//! Time-periodic flow past a rigidly moving body.

pub mod bytes;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod forcing;
pub mod geometry;
pub mod invading;
pub mod linalg;
pub mod linear;
pub mod mac;
pub mod motion;
pub mod multigrid;
pub mod nonlinear;
pub mod oseen;
pub mod parallel;
pub mod presets;
pub mod stokes;
pub mod time;

pub use error::{Error, Result};
