//! Synthetic distributions with exact samplers, CDFs, quantile functions and
//! moment oracles.
//!
//! The oracle everything else leans on is [`DistributionSpec::normalized_variance`],
//! which reports `C = E|X-mu|^2 / (E|X-mu|)^2` from closed forms where they
//! exist and from quantile-space quadrature otherwise.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::numeric::{bisect_first, integrate_split, Integral};

/// Relative tolerance for quadrature oracles.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("invalid {kind} parameters: {detail}")]
    InvalidParameter { kind: &'static str, detail: String },
    #[error("pareto shape {shape} <= 2 has no finite second moment")]
    InfiniteMoment { shape: f64 },
    #[error("gadget core support [{lo}, {hi}] is not inside [-1/2, 1/2)")]
    CoreSupport { lo: f64, hi: f64 },
}

fn invalid(kind: &'static str, detail: impl Into<String>) -> DistError {
    DistError::InvalidParameter { kind, detail: detail.into() }
}

/// A weighted mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub spec: DistributionSpec,
}

/// A univariate distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian {
        mean: f64,
        std_dev: f64,
    },
    /// Uniform on `[low, high)`.
    Uniform {
        low: f64,
        high: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `a` with probability `1 - p` and `b > a` with probability `p`.
    TwoPoint {
        a: f64,
        b: f64,
        p: f64,
    },
    /// `shift + Bernoulli(p)`.
    ShiftedBernoulli {
        p: f64,
        shift: f64,
    },
    /// Density `a x_m^a / x^{a+1}` on `[x_m, inf)`.
    Pareto {
        scale: f64,
        shape: f64,
    },
    Point {
        value: f64,
    },
    Mixture {
        components: Vec<Component>,
    },
    /// `base` restricted to its quantile levels `[lo_q, hi_q]`:
    /// the law of `Q_base(U)` with `U ~ Uniform[lo_q, hi_q]`.
    Conditioned {
        base: Box<DistributionSpec>,
        lo_q: f64,
        hi_q: f64,
    },
    /// `1/4 delta_{-1} + 1/4 delta_{+1} + 1/2 core` with `core` inside
    /// `[-1/2, 1/2)`.
    HardGadget {
        core: Box<DistributionSpec>,
    },
}

/// How a [`BoundednessReport`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// Normalized variance of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    /// `E|X - mu|`.
    pub first_moment: f64,
    /// `E|X - mu|^2`.
    pub second_moment: f64,
    /// `second_moment / first_moment^2`; `1` for a point mass, where any
    /// `C` works.
    pub c_value: f64,
    pub method: OracleMethod,
    /// Bound on the absolute error of `c_value`.
    pub error_bound: f64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn phi_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Library inverse refined by Newton steps on the erfc-based CDF.
fn std_normal_quantile(p: f64) -> f64 {
    let mut z = std_normal().inverse_cdf(p);
    if z.is_finite() {
        for _ in 0..2 {
            let d = phi_pdf(z);
            if d <= 0.0 {
                break;
            }
            z -= (phi_cdf(z) - p) / d;
        }
    }
    z
}

fn phi_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, std_dev: f64) -> Self {
        Self::Gaussian { mean, std_dev }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self::Uniform { low, high }
    }

    pub fn exponential(rate: f64) -> Self {
        Self::Exponential { rate }
    }

    pub fn two_point(a: f64, b: f64, p: f64) -> Self {
        Self::TwoPoint { a, b, p }
    }

    pub fn pareto(scale: f64, shape: f64) -> Self {
        Self::Pareto { scale, shape }
    }

    pub fn point(value: f64) -> Self {
        Self::Point { value }
    }

    pub fn mixture(parts: impl IntoIterator<Item = (f64, DistributionSpec)>) -> Self {
        Self::Mixture { components: parts.into_iter().map(|(weight, spec)| Component { weight, spec }).collect() }
    }

    pub fn conditioned(base: DistributionSpec, lo_q: f64, hi_q: f64) -> Self {
        Self::Conditioned { base: Box::new(base), lo_q, hi_q }
    }

    /// Rewrites sugar kinds into the primitive ones.
    fn resolved(&self) -> std::borrow::Cow<'_, DistributionSpec> {
        use std::borrow::Cow;
        match self {
            Self::ShiftedBernoulli { p, shift } => Cow::Owned(Self::two_point(*shift, shift + 1.0, *p)),
            Self::HardGadget { core } => Cow::Owned(Self::mixture([
                (0.25, Self::point(-1.0)),
                (0.25, Self::point(1.0)),
                (0.5, (**core).clone()),
            ])),
            _ => Cow::Borrowed(self),
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        let finite = |kind, vals: &[f64]| {
            if vals.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(invalid(kind, "non-finite parameter"))
            }
        };
        match self {
            Self::Gaussian { mean, std_dev } => {
                finite("gaussian", &[*mean, *std_dev])?;
                if *std_dev <= 0.0 {
                    return Err(invalid("gaussian", "std_dev must be positive"));
                }
            }
            Self::Uniform { low, high } => {
                finite("uniform", &[*low, *high])?;
                if low >= high {
                    return Err(invalid("uniform", "need low < high"));
                }
            }
            Self::Exponential { rate } => {
                finite("exponential", &[*rate])?;
                if *rate <= 0.0 {
                    return Err(invalid("exponential", "rate must be positive"));
                }
            }
            Self::TwoPoint { a, b, p } => {
                finite("two_point", &[*a, *b, *p])?;
                if a >= b || !(0.0..=1.0).contains(p) {
                    return Err(invalid("two_point", "need a < b and p in [0, 1]"));
                }
            }
            Self::ShiftedBernoulli { p, shift } => {
                finite("shifted_bernoulli", &[*p, *shift])?;
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid("shifted_bernoulli", "p must lie in [0, 1]"));
                }
            }
            Self::Pareto { scale, shape } => {
                finite("pareto", &[*scale, *shape])?;
                if *scale <= 0.0 {
                    return Err(invalid("pareto", "scale must be positive"));
                }
                if *shape <= 2.0 {
                    return Err(DistError::InfiniteMoment { shape: *shape });
                }
            }
            Self::Point { value } => finite("point", &[*value])?,
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(invalid("mixture", "no components"));
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight >= 0.0 && c.weight.is_finite()) {
                        return Err(invalid("mixture", "weights must be non-negative"));
                    }
                    total += c.weight;
                    c.spec.validate()?;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid("mixture", format!("weights sum to {total}, not 1")));
                }
            }
            Self::Conditioned { base, lo_q, hi_q } => {
                base.validate()?;
                if !(0.0 <= *lo_q && lo_q < hi_q && *hi_q <= 1.0) {
                    return Err(invalid("conditioned", "need 0 <= lo_q < hi_q <= 1"));
                }
            }
            Self::HardGadget { core } => {
                core.validate()?;
                check_core(core)?;
            }
        }
        Ok(())
    }

    /// Smallest and largest points of the support (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match &*self.resolved() {
            Self::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Uniform { low, high } => (*low, *high),
            Self::Exponential { .. } => (0.0, f64::INFINITY),
            Self::TwoPoint { a, b, p } => match *p {
                0.0 => (*a, *a),
                1.0 => (*b, *b),
                _ => (*a, *b),
            },
            Self::Pareto { scale, .. } => (*scale, f64::INFINITY),
            Self::Point { value } => (*value, *value),
            Self::Mixture { components } => components
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| c.spec.support())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b))),
            Self::Conditioned { base, lo_q, hi_q } => {
                let (blo, bhi) = base.support();
                let lo = if *lo_q == 0.0 { blo } else { base.quantile(*lo_q) };
                let hi = if *hi_q == 1.0 { bhi } else { base.quantile(*hi_q) };
                (lo, hi)
            }
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// `F(x) = P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_impl(x, false)
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf_impl(x, true)
    }

    fn cdf_impl(&self, x: f64, strict: bool) -> f64 {
        let at_or_past = |atom: f64| if strict { x > atom } else { x >= atom };
        match &*self.resolved() {
            Self::Gaussian { mean, std_dev } => phi_cdf((x - mean) / std_dev),
            Self::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::TwoPoint { a, b, p } => {
                if at_or_past(*b) {
                    1.0
                } else if at_or_past(*a) {
                    1.0 - p
                } else {
                    0.0
                }
            }
            Self::Pareto { scale, shape } => {
                if x <= *scale {
                    0.0
                } else {
                    -(shape * (scale / x).ln()).exp_m1()
                }
            }
            Self::Point { value } => f64::from(u8::from(at_or_past(*value))),
            Self::Mixture { components } => {
                components.iter().map(|c| c.weight * c.spec.cdf_impl(x, strict)).sum::<f64>().min(1.0)
            }
            Self::Conditioned { base, lo_q, hi_q } => {
                ((base.cdf_impl(x, strict) - lo_q) / (hi_q - lo_q)).clamp(0.0, 1.0)
            }
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// `Q(p) = inf { x : F(x) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &*self.resolved() {
            Self::Gaussian { mean, std_dev } => mean + std_dev * std_normal_quantile(p),
            Self::Uniform { low, high } => low + p * (high - low),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::TwoPoint { a, b, p: pb } => {
                if p <= 1.0 - pb {
                    *a
                } else {
                    *b
                }
            }
            Self::Pareto { scale, shape } => scale * (1.0 - p).powf(-1.0 / shape),
            Self::Point { value } => *value,
            Self::Mixture { components } => {
                let (lo, hi) = components
                    .iter()
                    .filter(|c| c.weight > 0.0)
                    .map(|c| c.spec.quantile(p))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q)));
                if lo == hi || !lo.is_finite() {
                    return lo;
                }
                if !hi.is_finite() {
                    return hi;
                }
                if self.cdf(lo) >= p {
                    return lo;
                }
                bisect_first(lo, hi, |x| self.cdf(x) >= p)
            }
            Self::Conditioned { base, lo_q, hi_q } => base.quantile(lo_q + p * (hi_q - lo_q)),
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// Point masses as `(location, probability)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &*self.resolved() {
            Self::TwoPoint { a, b, p } => [(*a, 1.0 - p), (*b, *p)].into_iter().filter(|&(_, m)| m > 0.0).collect(),
            Self::Point { value } => vec![(*value, 1.0)],
            Self::Mixture { components } => {
                let mut out: Vec<(f64, f64)> = Vec::new();
                for c in components.iter().filter(|c| c.weight > 0.0) {
                    for (x, m) in c.spec.atoms() {
                        match out.iter_mut().find(|(y, _)| *y == x) {
                            Some(slot) => slot.1 += c.weight * m,
                            None => out.push((x, c.weight * m)),
                        }
                    }
                }
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                out
            }
            Self::Conditioned { base, lo_q, hi_q } => base
                .atoms()
                .into_iter()
                .filter_map(|(x, _)| {
                    let lo = base.cdf_left(x).max(*lo_q);
                    let hi = base.cdf(x).min(*hi_q);
                    (hi > lo).then(|| (x, (hi - lo) / (hi_q - lo_q)))
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.atoms().is_empty()
    }

    /// Whether any oracle for this spec needs quadrature.
    fn needs_quadrature(&self) -> bool {
        match self {
            Self::Conditioned { .. } => true,
            Self::Mixture { components } => components.iter().any(|c| c.spec.needs_quadrature()),
            Self::HardGadget { core } => core.needs_quadrature(),
            _ => false,
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { mean, std_dev } => mean + std_dev * rng.sample::<f64, _>(StandardNormal),
            Self::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Self::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Self::TwoPoint { a, b, p } => {
                if rng.random::<f64>() < *p {
                    *b
                } else {
                    *a
                }
            }
            Self::ShiftedBernoulli { p, shift } => shift + f64::from(u8::from(rng.random::<f64>() < *p)),
            Self::Pareto { scale, shape } => scale * (1.0 - rng.random::<f64>()).powf(-1.0 / shape),
            Self::Point { value } => *value,
            Self::Mixture { components } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        return c.spec.sample_one(rng);
                    }
                }
                let last = components.iter().rev().find(|c| c.weight > 0.0).expect("validated mixture");
                last.spec.sample_one(rng)
            }
            Self::Conditioned { base, lo_q, hi_q } => base.quantile(lo_q + (hi_q - lo_q) * rng.random::<f64>()),
            Self::HardGadget { core } => {
                let u = rng.random::<f64>();
                if u < 0.25 {
                    -1.0
                } else if u < 0.5 {
                    1.0
                } else {
                    core.sample_one(rng)
                }
            }
        }
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Quantile-level breakpoints of the integrand `g(Q(u))`: both sides of
    /// every atom, the gaps between mixture components, and a coarse grid.
    fn atom_levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.atoms().into_iter().flat_map(|(x, _)| [self.cdf_left(x), self.cdf(x)]).collect();
        if let Self::Mixture { components } = &*self.resolved() {
            let mut centers: Vec<f64> = components.iter().map(|c| c.spec.quantile(0.5)).collect();
            centers.sort_by(f64::total_cmp);
            out.extend(centers.windows(2).map(|w| self.cdf(0.5 * (w[0] + w[1]))));
        }
        out.extend((1..8).map(|i| i as f64 / 8.0));
        out
    }

    /// `E[g(X)] = int_0^1 g(Q(u)) du`, with extra quantile-level breaks.
    pub fn expect_quantile(&self, g: impl Fn(f64) -> f64, extra_breaks: &[f64]) -> Integral {
        let mut breaks = self.atom_levels();
        breaks.extend_from_slice(extra_breaks);
        integrate_split(|u| g(self.quantile(u)), 0.0, 1.0, &breaks, QUAD_TOL)
    }

    pub fn mean(&self) -> f64 {
        match &*self.resolved() {
            Self::Gaussian { mean, .. } => *mean,
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Exponential { rate } => 1.0 / rate,
            Self::TwoPoint { a, b, p } => (1.0 - p) * a + p * b,
            Self::Pareto { scale, shape } => shape * scale / (shape - 1.0),
            Self::Point { value } => *value,
            Self::Mixture { components } => components.iter().map(|c| c.weight * c.spec.mean()).sum(),
            Self::Conditioned { .. } => self.expect_quantile(|x| x, &[]).value,
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// `E|X - mu|^2`.
    pub fn variance(&self) -> f64 {
        match &*self.resolved() {
            Self::Gaussian { std_dev, .. } => std_dev * std_dev,
            Self::Uniform { low, high } => (high - low).powi(2) / 12.0,
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::TwoPoint { a, b, p } => p * (1.0 - p) * (b - a).powi(2),
            Self::Pareto { scale, shape } => scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0)),
            Self::Point { .. } => 0.0,
            Self::Mixture { components } => {
                let mu = self.mean();
                components.iter().map(|c| c.weight * (c.spec.variance() + (c.spec.mean() - mu).powi(2))).sum()
            }
            Self::Conditioned { .. } => {
                let mu = self.mean();
                self.expect_quantile(|x| (x - mu).powi(2), &[]).value
            }
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// `E|X - c|`.
    pub fn abs_dev_about(&self, c: f64) -> f64 {
        match &*self.resolved() {
            Self::Gaussian { mean, std_dev } => {
                let z = (c - mean) / std_dev;
                std_dev * (2.0 * phi_pdf(z) + z * (2.0 * phi_cdf(z) - 1.0))
            }
            Self::Uniform { low, high } => {
                if c <= *low {
                    0.5 * (low + high) - c
                } else if c >= *high {
                    c - 0.5 * (low + high)
                } else {
                    ((c - low).powi(2) + (high - c).powi(2)) / (2.0 * (high - low))
                }
            }
            Self::Exponential { rate } => {
                if c <= 0.0 {
                    1.0 / rate - c
                } else {
                    c - 1.0 / rate + 2.0 * (-rate * c).exp() / rate
                }
            }
            Self::TwoPoint { a, b, p } => (1.0 - p) * (a - c).abs() + p * (b - c).abs(),
            Self::Pareto { scale, shape } => {
                let mean = shape * scale / (shape - 1.0);
                let upper =
                    if c <= *scale { mean - c } else { scale.powf(*shape) * c.powf(1.0 - shape) / (shape - 1.0) };
                2.0 * upper - (mean - c)
            }
            Self::Point { value } => (value - c).abs(),
            Self::Mixture { components } => components.iter().map(|cm| cm.weight * cm.spec.abs_dev_about(c)).sum(),
            Self::Conditioned { .. } => {
                let kink = self.cdf(c);
                self.expect_quantile(|x| (x - c).abs(), &[kink]).value
            }
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// `E|X - mu|`.
    pub fn mean_abs_dev(&self) -> f64 {
        self.abs_dev_about(self.mean())
    }

    /// `E|X - X'|` for independent copies, the mean of the pairwise-difference
    /// variable.
    pub fn mean_pair_diff(&self) -> f64 {
        match &*self.resolved() {
            Self::Gaussian { std_dev, .. } => 2.0 * std_dev / PI.sqrt(),
            Self::Uniform { low, high } => (high - low) / 3.0,
            Self::Exponential { rate } => 1.0 / rate,
            Self::TwoPoint { a, b, p } => 2.0 * p * (1.0 - p) * (b - a),
            Self::Pareto { scale, shape } => 2.0 * shape * scale / ((shape - 1.0) * (2.0 * shape - 1.0)),
            Self::Point { .. } => 0.0,
            Self::Mixture { components } => {
                let mut total = 0.0;
                for ci in components.iter().filter(|c| c.weight > 0.0) {
                    for cj in components.iter().filter(|c| c.weight > 0.0) {
                        let cross = if std::ptr::eq(ci, cj) {
                            ci.spec.mean_pair_diff()
                        } else {
                            cj.spec.expect_quantile(|y| ci.spec.abs_dev_about(y), &[]).value
                        };
                        total += ci.weight * cj.weight * cross;
                    }
                }
                total
            }
            Self::Conditioned { .. } => self.expect_quantile(|y| self.abs_dev_about(y), &[]).value,
            Self::ShiftedBernoulli { .. } | Self::HardGadget { .. } => unreachable!("resolved"),
        }
    }

    /// `P(|X - X'| <= q)` for independent copies.
    pub fn pair_diff_cdf(&self, q: f64) -> f64 {
        if q < 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.support();
        let mut breaks = vec![self.cdf(lo + q), self.cdf_left(hi - q)];
        for (x, _) in self.atoms() {
            for y in [x - q, x + q] {
                breaks.push(self.cdf_left(y));
                breaks.push(self.cdf(y));
            }
        }
        self.expect_quantile(|y| self.cdf(y + q) - self.cdf_left(y - q), &breaks).value.clamp(0.0, 1.0)
    }

    /// `P(a < X < b)`.
    pub fn open_interval_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cdf_left(b) - self.cdf(a)).max(0.0)
    }

    /// Normalized-variance oracle.
    pub fn normalized_variance(&self) -> Result<BoundednessReport, DistError> {
        self.validate()?;
        let second = self.variance();
        let first = self.mean_abs_dev();
        let quad = self.needs_quadrature();
        let method = if quad { OracleMethod::Quadrature } else { OracleMethod::ClosedForm };
        if first <= 0.0 || second <= 0.0 {
            return Ok(BoundednessReport {
                first_moment: 0.0,
                second_moment: 0.0,
                c_value: 1.0,
                method,
                error_bound: 0.0,
            });
        }
        let c = second / (first * first);
        let rel = if quad { 3.0 * QUAD_TOL.sqrt() } else { 64.0 * f64::EPSILON };
        Ok(BoundednessReport { first_moment: first, second_moment: second, c_value: c, method, error_bound: rel * c })
    }
}

fn check_core(core: &DistributionSpec) -> Result<(), DistError> {
    let (lo, hi) = core.support();
    let atom_at_edge = core.atoms().iter().any(|&(x, _)| x >= 0.5);
    if lo < -0.5 || hi > 0.5 || atom_at_edge {
        return Err(DistError::CoreSupport { lo, hi });
    }
    Ok(())
}

/// `1/4 delta_{-1} + 1/4 delta_{+1} + 1/2 core`. The core must live in
/// `[-1/2, 1/2)`.
pub fn hard_instance(core: DistributionSpec) -> Result<DistributionSpec, DistError> {
    let spec = DistributionSpec::HardGadget { core: Box::new(core) };
    spec.validate()?;
    Ok(spec)
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { mean, std_dev } => write!(f, "gaussian({},{})", fmt_num(*mean), fmt_num(*std_dev)),
            Self::Uniform { low, high } => write!(f, "uniform({},{})", fmt_num(*low), fmt_num(*high)),
            Self::Exponential { rate } => write!(f, "exponential({})", fmt_num(*rate)),
            Self::TwoPoint { a, b, p } => write!(f, "two_point({a},{b},{p})"),
            Self::ShiftedBernoulli { p, shift } => write!(f, "shifted_bernoulli({p},{shift})"),
            Self::Pareto { scale, shape } => write!(f, "pareto({scale},{shape})"),
            Self::Point { value } => write!(f, "point({value})"),
            Self::Mixture { components } => {
                write!(f, "mixture(")?;
                for (i, c) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    write!(f, "{}*{}", c.weight, c.spec)?;
                }
                write!(f, ")")
            }
            Self::Conditioned { base, lo_q, hi_q } => write!(f, "conditioned({base},{lo_q},{hi_q})"),
            Self::HardGadget { core } => write!(f, "hard_gadget({core})"),
        }
    }
}

/// Named distributions accepted by the harness.
pub fn named(name: &str) -> Option<DistributionSpec> {
    use DistributionSpec as D;
    Some(match name {
        "gaussian" => D::gaussian(0.0, 1.0),
        "uniform" => D::uniform(0.0, 1.0),
        "exponential" => D::exponential(1.0),
        "two_point" => D::two_point(-1.0, 1.0, 0.5),
        "shifted_bernoulli" => D::ShiftedBernoulli { p: 0.5, shift: 0.0 },
        "mixture" => D::mixture([(0.5, D::gaussian(-10.0, 1.0)), (0.5, D::gaussian(10.0, 1.0))]),
        "pareto" => D::pareto(1.0, 3.0),
        "point" => D::point(0.0),
        "gadget_point" => D::HardGadget { core: Box::new(D::point(0.0)) },
        "gadget_uniform" => D::HardGadget { core: Box::new(D::uniform(-0.5, 0.5)) },
        _ => return None,
    })
}

/// Every name understood by [`named`].
pub const NAMES: [&str; 10] = [
    "gaussian",
    "uniform",
    "exponential",
    "two_point",
    "shifted_bernoulli",
    "mixture",
    "pareto",
    "point",
    "gadget_point",
    "gadget_uniform",
];

/// The five continuous workloads of the success experiments.
pub fn suite() -> Vec<(&'static str, DistributionSpec)> {
    ["gaussian", "uniform", "exponential", "mixture", "pareto"]
        .into_iter()
        .map(|n| (n, named(n).expect("known name")))
        .collect()
}
