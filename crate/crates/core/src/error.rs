use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("negative condensate density {value} at superconducting vertex {vertex}")]
    NegativeDensity { vertex: usize, value: f64 },

    #[error("time step {dt} exceeds the stability limit {dt_max} (cfl_max_dt)")]
    Cfl { dt: f64, dt_max: f64 },

    #[error("time step {dt} exceeds the density-update limit {dt_max} (eta_max_dt)")]
    EtaStep { dt: f64, dt_max: f64 },

    #[error("non-finite flux on edge {edge} at step {step}")]
    Divergence { edge: usize, step: usize },

    #[error("non-finite charge on vertex {vertex} at step {step}")]
    ChargeDivergence { vertex: usize, step: usize },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("junction: {0}")]
    Junction(String),

    #[error("supercritical current: 4a^2 alpha^4 = {lhs} exceeds rho1*rho2 = {rhs}")]
    Supercritical { lhs: f64, rhs: f64 },

    #[error("probe: {0}")]
    Probe(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
