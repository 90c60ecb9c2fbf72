use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} lies outside [0, 1]")]
    Domain { name: &'static str, value: f64 },

    #[error("a kernel named `{0}` is already registered")]
    DuplicateKernel(String),

    #[error(
        "quadrature did not reach tolerance: estimate {estimate:e}, error bound {error_bound:e}"
    )]
    ToleranceNotReached { estimate: f64, error_bound: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("neither F_up < 0 nor F_low > 0 holds anywhere at rho = {rho}")]
    NoConditionHolds { rho: f64 },

    #[error(
        "‖Tu‖∞ = {norm:e} is numerically zero; the sign conditions on F_low/F_up most likely fail at this rho"
    )]
    DegenerateImage { norm: f64 },

    #[error("eigenpair solver did not converge: {0}")]
    NoConvergence(Box<NoConvergence>),

    #[error("kernel table: {0}")]
    Table(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Diagnostics carried by a failed eigenpair solve.
#[derive(Debug, Clone)]
pub struct NoConvergence {
    pub reason: String,
    pub lambda: f64,
    pub u: Vec<f64>,
    pub residual: f64,
    pub norm_defect: f64,
    pub iterations: usize,
}

impl std::fmt::Display for NoConvergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (lambda = {:e}, residual = {:e}, norm defect = {:e}, {} iterations)",
            self.reason, self.lambda, self.residual, self.norm_defect, self.iterations
        )
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { name, value })
    }
}
