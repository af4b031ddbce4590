//! Far field: transfer to a whole-space problem, moving-frame Cauchy solve
//! on a periodic box, wake-weighted norms and decay fits.

pub mod cauchy;
pub mod consistency;
pub mod frame;
pub mod pipeline;
pub mod spectral;
pub mod transfer;
pub mod wake;

pub use cauchy::{solve_oseen_cauchy, CauchyConfig, OseenCauchySolution, SparseSource};
pub use spectral::SpectralBox;
pub use pipeline::{run_oseen, OseenConfig, OseenReport, OseenRun};
pub use transfer::{cutoff_transfer, WholeSpaceProblem};
