//! Private estimate of the first central absolute moment `E|X - mu|`.
//!
//! The estimator never looks at the mean. It pairs consecutive samples, takes
//! `q_i = |x_{2i} - x_{2i-1}|` (distributed as `|X - X'|` for independent
//! draws, whose mean is within a factor two of `E|X - mu|`), counts the `q_i`
//! into dyadic bins `(2^l, 2^{l+1}]`, noises the counts and returns the right
//! edge `2^{l+1}` of the largest bin whose noisy count clears
//! `3n / (8 k' C log C)`.

use alloc::vec::Vec;

use libm::exp2;
use rand::Rng;

use crate::histogram::{BinCounts, BinIndex, Binning};
use crate::noise::{PrivacyBudget, TLapParams};
use crate::profile::{check_c, ConstantsProfile, ThresholdCount};
use crate::trace::{SelectedBin, StageTrace};
use crate::{ensure_finite, Error, Result};

/// Output of [`estimate_first_moment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentEstimate {
    /// `m_hat = 2^{bin + 1}`.
    Scale { m_hat: f64, bin: BinIndex },
    /// No dyadic bin cleared the threshold.
    Bottom,
}

impl MomentEstimate {
    pub fn m_hat(&self) -> Option<f64> {
        match *self {
            MomentEstimate::Scale { m_hat, .. } => Some(m_hat),
            MomentEstimate::Bottom => None,
        }
    }
}

/// `|x_{2i} - x_{2i-1}|` for consecutive pairs; an odd trailing sample is
/// dropped.
pub fn pair_differences(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.len() });
    }
    Ok(x.chunks_exact(2).map(|p| (p[1] - p[0]).abs()).collect())
}

/// Selection threshold `3n / (8 k' C log C)`.
pub fn moment_threshold(n_pairs: usize, n_samples: usize, c: f64, profile: &ConstantsProfile) -> f64 {
    let n = match profile.threshold_count {
        ThresholdCount::Pairs => n_pairs,
        ThresholdCount::Samples => n_samples,
    } as f64;
    3.0 * n / (8.0 * profile.k_prime * c * profile.log_c(c))
}

/// Estimate `E|X - mu|` under `budget`.
///
/// The whole budget is spent on one dyadic histogram with per-bin noise
/// `TLap(4/eps, 8 ln(8/delta)/eps)`.
pub fn estimate_first_moment<R: Rng + ?Sized>(
    x: &[f64],
    budget: PrivacyBudget,
    c: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
) -> Result<MomentEstimate> {
    ensure_finite(x)?;
    let q = pair_differences(x)?;
    let counts = BinCounts::from_values(&q, Binning::Dyadic)?;
    estimate_from_counts(&counts, q.len(), x.len(), budget, c, profile, rng).map(|(m, _)| m)
}

/// [`estimate_first_moment`] together with the selected bins and their true
/// counts.
#[cfg(feature = "diagnostics")]
pub fn estimate_with_trace<R: Rng + ?Sized>(
    x: &[f64],
    budget: PrivacyBudget,
    c: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
) -> Result<(MomentEstimate, StageTrace)> {
    ensure_finite(x)?;
    let q = pair_differences(x)?;
    let counts = BinCounts::from_values(&q, Binning::Dyadic)?;
    estimate_from_counts(&counts, q.len(), x.len(), budget, c, profile, rng)
}

/// The estimator on precomputed dyadic counts of the pair differences.
pub(crate) fn estimate_from_counts<R: Rng + ?Sized>(
    counts: &BinCounts,
    n_pairs: usize,
    n_samples: usize,
    budget: PrivacyBudget,
    c: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
) -> Result<(MomentEstimate, StageTrace)> {
    check_c(c)?;
    profile.validate()?;
    let noise = TLapParams::for_histogram(budget);
    let threshold = moment_threshold(n_pairs, n_samples, c, profile);
    let noisy = counts.add_noise(noise, rng);
    let selected = noisy.thresholded_bins(threshold)?;
    let trace = StageTrace {
        threshold,
        z_max: noise.z_max(),
        selected: selected
            .iter()
            .map(|&bin| SelectedBin { bin, true_count: counts.get(bin), noisy_count: noisy.get(bin).unwrap_or(0.0) })
            .collect(),
    };
    let estimate = match selected.last() {
        Some(&bin) => MomentEstimate::Scale { m_hat: exp2((bin.0 + 1) as f64), bin },
        None => MomentEstimate::Bottom,
    };
    Ok((estimate, trace))
}
