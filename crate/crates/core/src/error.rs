use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain too small: R = {r} < R_* = {r_star}")]
    DomainTooSmall { r: f64, r_star: f64 },
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("cut-off support not covered by grid: {0}")]
    Coverage(String),
    #[error("invalid motion: {0}")]
    Motion(String),
    #[error("hypothesis (H) violated: {0}")]
    Hypothesis(String),
    #[error("integrator tolerance exceeded: {0}")]
    IntegratorTolerance(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("spectral solver did not converge: {0}")]
    Spectral(String),
    #[error("iterative solver failed: {0}")]
    Solver(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("extension smallness not reached: achieved eps = {achieved:.4e}, target = {target:.4e}")]
    ExtensionSmallness { achieved: f64, target: f64 },
    #[error("periodic system not solvable: {0}")]
    Solvability(String),
    #[error("pressure recovery failed: {0}")]
    PressureRecovery(String),
    #[error("drift exceeds guard band: {0}")]
    Drift(String),
    #[error("box too small: {0}")]
    BoxSize(String),
    #[error("fit window: {0}")]
    FitWindow(String),
    #[error("fixed-point iteration diverged: {0}")]
    Divergence(String),
    #[error("uniqueness violation: {0}")]
    Uniqueness(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("missing report: {0}")]
    MissingReport(String),
    #[error("ledger coverage incomplete: {0}")]
    LedgerCoverage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
