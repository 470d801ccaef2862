use core::fmt;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A material parameter or option is outside its admissible range.
    InvalidParameter(&'static str),
    /// A grid field has the wrong shape or values outside `[0, 2pi]`.
    InvalidField(&'static str),
    /// The discrete mean of `alpha` misses `theta` by more than [`crate::TOL_VC`].
    ConstraintViolation { mean: f64, theta: f64 },
    /// `(z^2 + 4)(mu - mu_c)^2 - 4 mu^2 < 0`.
    NegativeDiscriminant { radicand: f64 },
    /// The rescaled energy needs `eps > 0`.
    DivisionByZeroScale,
    /// `eta` is undefined where `sin(alpha) = 0`.
    Domain,
    /// An iterative method hit its iteration cap.
    NoConvergence { iterations: usize },
    /// The shifted potential is negative, so the minimal well energy is inconsistent.
    NegativeV2 { at: f64, value: f64 },
    /// A closed form was requested outside the regime it holds in.
    WrongRegime,
    /// A transition profile did not reach both wells inside the integration window.
    Stalled { half_width: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidField(msg) => write!(f, "invalid field: {msg}"),
            Error::ConstraintViolation { mean, theta } => {
                write!(f, "volume constraint violated: mean(alpha) = {mean}, theta = {theta}")
            }
            Error::NegativeDiscriminant { radicand } => {
                write!(f, "negative discriminant {radicand}: no double well at this shear")
            }
            Error::DivisionByZeroScale => write!(f, "rescaled energy requires eps > 0"),
            Error::Domain => write!(f, "eta is undefined where sin(alpha) = 0"),
            Error::NoConvergence { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            Error::NegativeV2 { at, value } => {
                write!(f, "shifted potential is negative ({value}) at alpha = {at}")
            }
            Error::WrongRegime => write!(f, "closed form not valid in this regime"),
            Error::Stalled { half_width } => {
                write!(f, "profile did not reach the wells within half width {half_width}")
            }
        }
    }
}

impl core::error::Error for Error {}
