use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A numeric parameter is outside its valid range.
    InvalidParameter {
        name: &'static str,
        value: f64,
    },
    /// A dataset entry is NaN or infinite.
    NonFinite {
        index: usize,
    },
    /// Dyadic bins cover `(0, inf)` only.
    NonPositive {
        value: f64,
    },
    InsufficientData {
        needed: usize,
        got: usize,
    },
    /// The selection threshold does not exceed the noise bound, so bins that
    /// were never materialized could have crossed it. The dataset is too small
    /// for the configured constants.
    SoundnessViolation {
        threshold: f64,
        z_max: f64,
    },
    /// The scale estimate handed to the interior-point stage is not positive.
    InvalidScale {
        m_hat: f64,
    },
    InvalidQuantile {
        p: f64,
        n: usize,
    },
    /// No sample falls strictly inside the middle slice.
    EmptySlice,
}

impl Error {
    /// Short stable identifier, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonFinite { .. } => "non_finite",
            Error::NonPositive { .. } => "non_positive",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::SoundnessViolation { .. } => "soundness_violation",
            Error::InvalidScale { .. } => "invalid_scale",
            Error::InvalidQuantile { .. } => "invalid_quantile",
            Error::EmptySlice => "empty_slice",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter `{name}`: {value}")
            }
            Error::NonFinite { index } => write!(f, "dataset entry {index} is not finite"),
            Error::NonPositive { value } => {
                write!(f, "value {value} is not positive and has no dyadic bin")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::SoundnessViolation { threshold, z_max } => write!(
                f,
                "selection threshold {threshold} does not exceed the noise bound {z_max}; \
                 the dataset is too small for these constants"
            ),
            Error::InvalidScale { m_hat } => write!(f, "scale estimate {m_hat} is not positive"),
            Error::InvalidQuantile { p, n } => {
                write!(f, "quantile level {p} is outside [1/{n}, 1]")
            }
            Error::EmptySlice => f.write_str("no samples strictly inside the middle slice"),
        }
    }
}

impl core::error::Error for Error {}
