//! Norm evaluators, the estimate ledger, run manifests, field dumps,
//! figures and the experiment drivers behind the command-line tool.

pub mod dump;
pub mod ledger;
pub mod manifest;
pub mod norms;
pub mod plots;
pub mod run;

pub use dump::FieldDump;
pub use ledger::{Context, Ledger, LedgerEntry};
pub use manifest::{Experiment, RunManifest};
pub use norms::{compute_norms, path_norms, Bochner, NormBundle, PathNorms};
pub use plots::{convergence_svg, emit_plots, ray_fits_svg, wake_map_svg};
pub use run::{report, run_experiment, write_error_report, RunOutcome};
