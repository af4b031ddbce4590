//! Time-periodic linear problem on a truncated domain.

pub mod estimates;
pub mod field;
pub mod pipeline;
pub mod solve;
pub mod system;

pub use pipeline::{run_linear, ExtensionLayer, LinearConfig, LinearReport, LinearRun, LinearSetup};
pub use field::{reconstruct_velocity, PeriodicField};
pub use solve::{closure_residual, monodromy, solve_periodic, Monodromy, PeriodicSolution};
pub use system::{project_forcing, ExtensionCoupling, GalerkinOperators, GalerkinSystem};

#[cfg(test)]
mod tests;
