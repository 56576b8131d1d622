//! Truncated Laplace noise.
//!
//! `TLap(lambda, z_max)` has density proportional to `exp(-|z| / lambda)` on
//! `[-z_max, z_max]` and zero elsewhere. Adding it to a function of global
//! sensitivity `D` with `lambda = D / eps` and `z_max >= D ln(4/delta) / eps`
//! gives `(eps, delta)`-differential privacy.

use libm::{exp, expm1, log, log1p};
use rand::Rng;

use crate::{Error, Result};

/// An `(epsilon, delta)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawBudget", into = "RawBudget"))]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter { name: "epsilon", value: epsilon });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter { name: "delta", value: delta });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(eps/2, delta/2)`: the share each of two composed stages receives.
    pub fn halve(&self) -> Self {
        Self { epsilon: self.epsilon / 2.0, delta: self.delta / 2.0 }
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawBudget {
    epsilon: f64,
    delta: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<RawBudget> for PrivacyBudget {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        PrivacyBudget::new(raw.epsilon, raw.delta)
    }
}

#[cfg(feature = "serde")]
impl From<PrivacyBudget> for RawBudget {
    fn from(b: PrivacyBudget) -> Self {
        RawBudget { epsilon: b.epsilon, delta: b.delta }
    }
}

/// Parameters of a truncated Laplace distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TLapParams {
    lambda: f64,
    z_max: f64,
}

impl TLapParams {
    pub fn new(lambda: f64, z_max: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter { name: "lambda", value: lambda });
        }
        if !(z_max > 0.0 && z_max.is_finite()) {
            return Err(Error::InvalidParameter { name: "z_max", value: z_max });
        }
        Ok(Self { lambda, z_max })
    }

    /// Per-bin noise for a histogram released under `budget`:
    /// `TLap(4/eps, 8 ln(8/delta)/eps)`.
    ///
    /// Called with half of a parent budget this is `TLap(8/eps, 16 ln(16/delta)/eps)`
    /// in terms of the parent's `eps` and `delta`.
    pub fn for_histogram(budget: PrivacyBudget) -> Self {
        let eps = budget.epsilon();
        Self { lambda: 4.0 / eps, z_max: 8.0 * log(8.0 / budget.delta()) / eps }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// `1 - exp(-z_max / lambda)`, computed without cancellation.
    fn mass(&self) -> f64 {
        -expm1(-self.z_max / self.lambda)
    }

    /// Normalizing constant `2 lambda (1 - exp(-z_max / lambda))`.
    pub fn normalizer(&self) -> f64 {
        2.0 * self.lambda * self.mass()
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if z.abs() > self.z_max {
            return 0.0;
        }
        exp(-z.abs() / self.lambda) / self.normalizer()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= -self.z_max {
            return 0.0;
        }
        if z >= self.z_max {
            return 1.0;
        }
        // Mass of [-z_max, -|z|] is (e^{-|z|/l} - e^{-z_max/l}) / (2 (1 - e^{-z_max/l})).
        let a = z.abs() / self.lambda;
        let b = self.z_max / self.lambda;
        let tail = (exp(-a) - exp(-b)) / (2.0 * self.mass());
        if z < 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }

    pub fn variance(&self) -> f64 {
        let l = self.lambda;
        let zm = self.z_max;
        // 2 * int_0^zm z^2 e^{-z/l} dz / normalizer
        let integral = 2.0 * l * l * l - exp(-zm / l) * (l * zm * zm + 2.0 * l * l * zm + 2.0 * l * l * l);
        2.0 * integral / self.normalizer()
    }

    /// Inverse-transform sample. Always lies in `[-z_max, z_max]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.inverse_cdf(u)
    }

    /// Quantile function for `u` in `[0, 1]`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        // For u < 1/2: z = lambda * ln(1 - a (1 - 2u)) with a = 1 - e^{-z_max/lambda};
        // the upper half mirrors it.
        let v = (1.0 - 2.0 * u).abs();
        let magnitude = (-self.lambda * log1p(-self.mass() * v)).min(self.z_max);
        if u < 0.5 {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// Smallest truncation bound for which adding `TLap(sensitivity/eps, z_max)`
/// noise is `(eps, delta)`-DP: `sensitivity * ln(4/delta) / eps`.
pub fn required_zmax(sensitivity: f64, budget: PrivacyBudget) -> Result<f64> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter { name: "sensitivity", value: sensitivity });
    }
    Ok(sensitivity * log(4.0 / budget.delta()) / budget.epsilon())
}
