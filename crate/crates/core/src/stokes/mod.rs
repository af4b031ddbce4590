//! Discrete solenoidal machinery on a truncated domain.

pub mod bogovskii;
pub mod checks;
pub mod eigen;
pub mod extension;
pub mod ops;
pub mod persist;
pub mod symmetry;

pub use eigen::{solve_stokes_eigs, EigenOptions, StokesBasis};
pub use ops::{assemble_projector, LerayProjector, Operators};
