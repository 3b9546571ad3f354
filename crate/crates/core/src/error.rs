use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("torus vorticity is not mean-free (mean = {mean:e})")]
    NotMeanFree { mean: f64 },
    #[error("channel vorticity is not sine-representable (wall value {wall:e})")]
    NotSineRepresentable { wall: f64 },
    #[error("resolution exceeded at t = {t}: max|w| = {max:e} > threshold {threshold:e}")]
    ResolutionExceeded { t: f64, max: f64, threshold: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("compatibility defect f'(0)+2f(0) = {defect:e}")]
    Incompatible { defect: f64 },
    #[error("fixed-point iteration is not contracting (Lipschitz estimate {lipschitz:.3})")]
    NotContracting { lipschitz: f64 },
    #[error("fake-time iteration stagnated at residual {residual:e} after {steps} steps")]
    Stagnated { residual: f64, steps: usize },
    #[error("shock forms at T* = {t_star}; requested end time {end} is past it")]
    PostShock { t_star: f64, end: f64 },
    #[error("marker left the channel by {excess:e}")]
    MarkerEscaped { excess: f64 },
    #[error("endpoint drift {drift:e} exceeds tolerance")]
    EndpointDrift { drift: f64 },
    #[error("Poisson residual {residual:e} exceeds tolerance")]
    PoissonResidual { residual: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("tail does not decay: {0}")]
    NonDecaying(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}
