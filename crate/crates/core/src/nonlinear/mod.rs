//! Full nonlinear problem by contraction: the map `M`, its measured
//! constants, the smallness gate and a uniqueness probe.

pub mod norms;
pub mod picard;
pub mod solve;
pub mod uniqueness;

pub use norms::{bilinear_bound, proxy_norm, BilinearReport, DataBundle, DataNorm, FieldSamples, ProxyNorm};
pub use picard::{IterateRecord, NonlinearConfig, NonlinearSolver, PicardRun, StepReport};
pub use solve::{response_sweep, solve_nonlinear, solve_with, NonlinearReport, NonlinearRun, ResponseFit};
pub use uniqueness::{uniqueness_probe, EnergyTerms, UniquenessReport};

#[cfg(test)]
mod tests;
