//! Approximate median by reduction to the interior-point problem.
//!
//! With `k = k_factor * C / alpha`, the samples strictly between the empirical
//! quantiles at `1/2 - alpha + 1/(2k)` and `1/2 + alpha - 1/(2k)` form a
//! slice `x0`. Any interior point of `x0` is, with high probability, an
//! `alpha`-approximate median of the sampling distribution. Changing one entry
//! of `x` changes at most one element of `x0` (for distinct values), so
//! running the interior-point estimator on `x0` keeps its privacy guarantee.

use alloc::vec::Vec;

use libm::{floor, round};
use rand::Rng;

use crate::interior_point::interior_point_main;
#[cfg(feature = "diagnostics")]
use crate::interior_point::InteriorPointResult;
use crate::noise::PrivacyBudget;
use crate::profile::{check_c, ConstantsProfile};
use crate::{ensure_finite, Error, Result};

/// `floor(p n)`, snapped to the nearest integer when `p n` is within a few
/// ulps of it, so that `0.35 * 100` has rank 35 rather than 34.
fn quantile_rank(p: f64, n: usize) -> f64 {
    let t = p * n as f64;
    let r = round(t);
    if (t - r).abs() <= 8.0 * f64::EPSILON * t.abs().max(1.0) {
        r
    } else {
        floor(t)
    }
}

fn checked_rank(p: f64, n: usize) -> Result<usize> {
    if !p.is_finite() || p > 1.0 || n == 0 {
        return Err(Error::InvalidQuantile { p, n });
    }
    let r = quantile_rank(p, n);
    if r < 1.0 || r > n as f64 {
        return Err(Error::InvalidQuantile { p, n });
    }
    Ok(r as usize)
}

/// `Q_x(p)`: the `floor(p n)`-th smallest sample (1-indexed) for
/// `p` in `[1/n, 1]`.
pub fn empirical_quantile(x: &[f64], p: f64) -> Result<f64> {
    ensure_finite(x)?;
    let r = checked_rank(p, x.len())?;
    let mut v = x.to_vec();
    Ok(select(&mut v, r))
}

fn select(v: &mut [f64], rank: usize) -> f64 {
    *v.select_nth_unstable_by(rank - 1, f64::total_cmp).1
}

/// The slice `x0` together with the quantile bounds that define it.
#[derive(Debug, Clone, PartialEq)]
pub struct MiddleSlice {
    /// Samples strictly between the bounds, in input order.
    pub values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// Samples strictly inside `(Q_x(1/2 - alpha + 1/(2k)), Q_x(1/2 + alpha - 1/(2k)))`.
pub fn middle_slice(x: &[f64], alpha: f64, k: f64) -> Result<MiddleSlice> {
    check_alpha(alpha)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter { name: "k", value: k });
    }
    ensure_finite(x)?;
    let n = x.len();
    let lo_rank = checked_rank(0.5 - alpha + 0.5 / k, n)?;
    let hi_rank = checked_rank(0.5 + alpha - 0.5 / k, n)?;
    let mut v = x.to_vec();
    let lower = select(&mut v, lo_rank);
    let upper = select(&mut v, hi_rank);
    let values: Vec<f64> = x.iter().copied().filter(|&xi| xi > lower && xi < upper).collect();
    if values.is_empty() {
        return Err(Error::EmptySlice);
    }
    Ok(MiddleSlice { values, lower, upper })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.25 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "alpha", value: alpha })
    }
}

/// Output of [`private_median`].
#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult {
    pub value: Option<f64>,
    /// Quantile bounds of the slice. They are raw order statistics of the
    /// data, so they are only exposed for diagnostics.
    #[cfg(feature = "diagnostics")]
    pub slice_bounds: (f64, f64),
    #[cfg(feature = "diagnostics")]
    pub slice_len: usize,
    #[cfg(feature = "diagnostics")]
    pub interior: InteriorPointResult,
}

/// `alpha`-approximate median under `budget`.
///
/// `c` is the declared bound on the normalized variance of the middle
/// `2 alpha` mass of the distribution. It cannot be checked from private data.
pub fn private_median<R: Rng + ?Sized>(
    x: &[f64],
    budget: PrivacyBudget,
    alpha: f64,
    c: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
) -> Result<MedianResult> {
    check_alpha(alpha)?;
    check_c(c)?;
    profile.validate()?;
    let k = profile.median_k_factor * c / alpha;
    let slice = middle_slice(x, alpha, k)?;
    let inner = interior_point_main(&slice.values, budget, profile.median_c_factor * c, profile, rng)?;
    if let Some(v) = inner.point {
        debug_assert!(v >= slice.lower && v <= slice.upper);
    }
    Ok(MedianResult {
        value: inner.point,
        #[cfg(feature = "diagnostics")]
        slice_bounds: (slice.lower, slice.upper),
        #[cfg(feature = "diagnostics")]
        slice_len: slice.values.len(),
        #[cfg(feature = "diagnostics")]
        interior: inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Enumeration oracle: sort, then take the `floor(a n / b)`-th element
    /// with exact integer arithmetic on the rational `a / b`.
    fn rational_quantile(x: &[f64], a: u64, b: u64) -> f64 {
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        let r = (a * x.len() as u64 / b) as usize;
        s[r - 1]
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(&[5.0, 1.0, 3.0], 0.5).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&[5.0, 1.0, 3.0], 1.0).unwrap(), 5.0);
        let mut x: Vec<f64> = (1..=100).map(f64::from).collect();
        x.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(empirical_quantile(&x, 0.37).unwrap(), 37.0);
        assert_eq!(empirical_quantile(&x, 0.35).unwrap(), 35.0);
        assert_eq!(empirical_quantile(&x, 0.01).unwrap(), 1.0);
    }

    #[test]
    fn quantile_out_of_range() {
        let x = [1.0, 2.0, 3.0];
        for p in [0.0, 0.3, 1.01, f64::NAN] {
            assert!(matches!(empirical_quantile(&x, p), Err(Error::InvalidQuantile { .. })), "{p}");
        }
        assert!(matches!(empirical_quantile(&[], 0.5), Err(Error::InvalidQuantile { .. })));
    }

    #[test]
    fn quantile_matches_rational_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [7usize, 100, 1000, 999] {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            for a in 1..=100u64 {
                let p = a as f64 / 100.0;
                if (a as usize * n) / 100 == 0 {
                    continue;
                }
                assert_eq!(empirical_quantile(&x, p).unwrap(), rational_quantile(&x, a, 100), "n={n} a={a}");
            }
        }
    }

    #[test]
    fn middle_slice_of_integers() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = middle_slice(&x, 0.2, 10.0).unwrap();
        // Levels 0.35 and 0.65: exact ranks 35 and 65.
        let lo = rational_quantile(&x, 35, 100);
        let hi = rational_quantile(&x, 65, 100);
        let expected: Vec<f64> = x.iter().copied().filter(|&v| v > lo && v < hi).collect();
        assert_eq!((s.lower, s.upper), (35.0, 65.0));
        assert_eq!(s.values, expected);
        assert_eq!(s.values.len(), 29);
        assert_eq!(s.values.first(), Some(&36.0));
        assert_eq!(s.values.last(), Some(&64.0));
    }

    #[test]
    fn middle_slice_degenerate_and_limits() {
        assert_eq!(middle_slice(&[2.0; 50], 0.1, 100.0), Err(Error::EmptySlice));
        assert!(middle_slice(&[1.0, 2.0], 0.25, 10.0).is_err());
        let x: Vec<f64> = (1..=1000).map(f64::from).collect();
        let s = middle_slice(&x, 0.2499, 1e9).unwrap();
        assert!((s.values.len() as i64 - 499).abs() <= 2, "{}", s.values.len());
    }

    #[test]
    fn middle_slice_preserves_input_order() {
        let mut x: Vec<f64> = (1..=200).map(f64::from).collect();
        x.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
        let s = middle_slice(&x, 0.1, 50.0).unwrap();
        let expected: Vec<f64> = x.iter().copied().filter(|&v| v > s.lower && v < s.upper).collect();
        assert_eq!(s.values, expected);
    }

    fn multiset_diff(a: &[f64], b: &[f64]) -> usize {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut common) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].total_cmp(&b[j]) {
                core::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
            }
        }
        a.len().max(b.len()) - common
    }

    #[test]
    fn slice_changes_by_at_most_one_element() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [10usize, 23, 50] {
            let mut x: Vec<f64> = (0..n).map(|i| i as f64 * 2.0).collect();
            x.shuffle(&mut rng);
            // Replacement values: every gap and both ends, all distinct from x.
            let candidates: Vec<f64> = (-1..=(2 * n as i64)).filter(|v| v % 2 != 0).map(|v| v as f64).collect();
            for (alpha, k) in [(0.2, 10.0), (0.1, 40.0), (0.24, 1000.0)] {
                let base = match middle_slice(&x, alpha, k) {
                    Ok(s) => s.values,
                    Err(_) => continue,
                };
                for i in 0..n {
                    for &c in &candidates {
                        let mut y = x.clone();
                        y[i] = c;
                        let other = middle_slice(&y, alpha, k).map(|s| s.values).unwrap_or_default();
                        assert!(multiset_diff(&base, &other) <= 1, "n={n} i={i} c={c}");
                    }
                }
            }
        }
    }

    #[test]
    fn private_median_of_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>()).collect();
        let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
        let out = private_median(&x, budget, 0.1, 2.05, &ConstantsProfile::relaxed(), &mut rng).unwrap();
        let v = out.value.unwrap();
        assert!((0.4..=0.6).contains(&v), "{v}");
    }

    #[test]
    fn private_median_rejects_bad_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = PrivacyBudget::new(1.0, 1e-6).unwrap();
        let p = ConstantsProfile::relaxed();
        for a in [0.0, 0.25, -0.1] {
            assert!(matches!(
                private_median(&[1.0, 2.0, 3.0], b, a, 3.0, &p, &mut rng),
                Err(Error::InvalidParameter { name: "alpha", .. })
            ));
        }
    }
}
