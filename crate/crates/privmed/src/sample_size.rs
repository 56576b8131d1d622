//! Sample sizes at which the success guarantees kick in.

use privmed_core::ConstantsProfile;
use serde::Serialize;

/// Sizes above this are out of reach for a desk-scale run.
pub const DESK_SCALE: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// Interior point with probability `1 - beta`.
    Interior,
    /// `alpha`-approximate median with probability `1 - beta`.
    Median,
    /// Moment estimate inside its band with probability `1 - beta`; counts
    /// pairs.
    Moment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSizeParams {
    pub c: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    /// Required for [`Guarantee::Median`].
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RequiredN {
    pub guarantee: Guarantee,
    pub n: f64,
    pub exceeds_desk_scale: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleSizeError {
    #[error("parameter `{0}` out of range: {1}")]
    OutOfRange(&'static str, f64),
    #[error("the median bound needs alpha")]
    MissingAlpha,
}

/// - interior: `k0 C^3 sqrt(log C) (ln(1/delta)/eps + ln(1/beta))`
/// - median: `k0 max(C^3 sqrt(log C) (ln(1/delta)/eps + ln(1/beta)) / alpha, C^2 ln(1/beta) / alpha^2)`
/// - moment: `k_moment C log C (ln(2/beta) + 16 ln(16/delta)/eps)`
///
/// `log C` uses the profile's base. The value is rounded up.
pub fn required_n(
    guarantee: Guarantee,
    params: SampleSizeParams,
    profile: &ConstantsProfile,
) -> Result<RequiredN, SampleSizeError> {
    let SampleSizeParams { c, epsilon, delta, beta, alpha } = params;
    if !(c > 1.0 && c.is_finite()) {
        return Err(SampleSizeError::OutOfRange("c", c));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SampleSizeError::OutOfRange("epsilon", epsilon));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SampleSizeError::OutOfRange("delta", delta));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(SampleSizeError::OutOfRange("beta", beta));
    }
    let log_c = profile.log_c(c);
    let privacy = (1.0 / delta).ln() / epsilon + (1.0 / beta).ln();
    let raw = match guarantee {
        Guarantee::Interior => profile.k0 * c.powi(3) * log_c.sqrt() * privacy,
        Guarantee::Median => {
            let a = alpha.ok_or(SampleSizeError::MissingAlpha)?;
            if !(a > 0.0 && a < 0.25) {
                return Err(SampleSizeError::OutOfRange("alpha", a));
            }
            let first = c.powi(3) * log_c.sqrt() * privacy / a;
            let second = c * c * (1.0 / beta).ln() / (a * a);
            profile.k0 * first.max(second)
        }
        Guarantee::Moment => profile.k_moment * c * log_c * ((2.0 / beta).ln() + 16.0 * (16.0 / delta).ln() / epsilon),
    };
    let n = raw.ceil();
    Ok(RequiredN { guarantee, n, exceeds_desk_scale: n > DESK_SCALE })
}
