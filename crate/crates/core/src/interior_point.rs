//! Private interior point: a value between the smallest and largest sample.
//!
//! Given a scale estimate `m_hat`, the data is counted into uniform bins of
//! width `w = m_hat / (2 k' C sqrt(log C))`, the counts are noised, and every
//! bin with noisy count `>= 3n / (k C^3 sqrt(log C))` is selected. With at
//! least two selected bins the output is
//! `(min_l l w + max_l (l + 1) w) / 2`, which lies between a sample in the
//! lowest and a sample in the highest selected bin.
//!
//! [`interior_point_main`] composes the moment estimate and this stage, each
//! with half the budget.

use alloc::collections::BTreeMap;

use libm::sqrt;
use rand::Rng;

use crate::histogram::{BinCounts, BinIndex, Binning};
use crate::moment::{estimate_from_counts, pair_differences, MomentEstimate};
use crate::noise::{PrivacyBudget, TLapParams};
use crate::profile::{check_c, ConstantsProfile};
use crate::trace::{SelectedBin, StageTrace, Trace};
use crate::{ensure_finite, Error, Result};

/// Output of the interior-point estimators. `point` is `None` when fewer than
/// two bins were selected.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorPointResult {
    pub point: Option<f64>,
    #[cfg(feature = "diagnostics")]
    pub trace: Trace,
}

impl InteriorPointResult {
    #[cfg_attr(not(feature = "diagnostics"), allow(unused_variables))]
    pub(crate) fn new(point: Option<f64>, trace: Trace) -> Self {
        Self {
            point,
            #[cfg(feature = "diagnostics")]
            trace,
        }
    }
}

/// Uniform bin width `m_hat / (2 k' C sqrt(log C))`.
pub fn bin_width(m_hat: f64, c: f64, profile: &ConstantsProfile) -> f64 {
    m_hat / (2.0 * profile.k_prime * c * sqrt(profile.log_c(c)))
}

/// Selection threshold `3n / (k C^3 sqrt(log C))`.
pub fn interior_threshold(n: usize, c: f64, profile: &ConstantsProfile) -> f64 {
    3.0 * n as f64 / (profile.k_ip * c * c * c * sqrt(profile.log_c(c)))
}

/// Interior-point stage with a given scale estimate, spending all of `budget`.
pub fn find_interior_point<R: Rng + ?Sized>(
    x: &[f64],
    budget: PrivacyBudget,
    c: f64,
    m_hat: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
) -> Result<InteriorPointResult> {
    ensure_finite(x)?;
    let width = checked_width(m_hat, c, profile)?;
    let counts = BinCounts::from_values(x, Binning::Uniform { width })?;
    let mut trace = Trace { m_hat: Some(m_hat), ..Trace::default() };
    let point = find_from_counts(&counts, x.len(), width, budget, c, profile, rng, &mut trace)?;
    Ok(InteriorPointResult::new(point, trace))
}

/// Moment estimate followed by the interior-point stage, each under half of
/// `budget`. Both stages see the whole dataset.
pub fn interior_point_main<R: Rng + ?Sized>(
    x: &[f64],
    budget: PrivacyBudget,
    c: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
) -> Result<InteriorPointResult> {
    PreparedDataset::new(x)?.interior_point_main(budget, c, profile, rng)
}

fn checked_width(m_hat: f64, c: f64, profile: &ConstantsProfile) -> Result<f64> {
    if !(m_hat > 0.0 && m_hat.is_finite()) {
        return Err(Error::InvalidScale { m_hat });
    }
    check_c(c)?;
    profile.validate()?;
    let width = bin_width(m_hat, c, profile);
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidScale { m_hat });
    }
    Ok(width)
}

#[allow(clippy::too_many_arguments)]
fn find_from_counts<R: Rng + ?Sized>(
    counts: &BinCounts,
    n: usize,
    width: f64,
    budget: PrivacyBudget,
    c: f64,
    profile: &ConstantsProfile,
    rng: &mut R,
    trace: &mut Trace,
) -> Result<Option<f64>> {
    let noise = TLapParams::for_histogram(budget);
    let threshold = interior_threshold(n, c, profile);
    let noisy = counts.add_noise(noise, rng);
    let selected = noisy.thresholded_bins(threshold)?;
    trace.width = Some(width);
    trace.interior = Some(StageTrace {
        threshold,
        z_max: noise.z_max(),
        selected: selected
            .iter()
            .map(|&bin| SelectedBin { bin, true_count: counts.get(bin), noisy_count: noisy.get(bin).unwrap_or(0.0) })
            .collect(),
    });
    if selected.len() < 2 {
        return Ok(None);
    }
    let lo = selected[0];
    let hi = selected[selected.len() - 1];
    trace.span = Some((lo, hi));
    let point = 0.5 * (lo.0 as f64 * width + (hi.0 + 1) as f64 * width);
    // The midpoint sits between the right edge of the lowest and the left
    // edge of the highest selected bin.
    let slack = 4.0 * f64::EPSILON * point.abs().max(width);
    debug_assert!(point >= (lo.0 + 1) as f64 * width - slack);
    debug_assert!(point <= hi.0 as f64 * width + slack);
    Ok(Some(point))
}

/// A dataset with its pair-difference counts precomputed and uniform-bin
/// counts cached per bin width.
///
/// Repeated runs on the same data (privacy audits draw hundreds of
/// thousands of outputs) then only pay for the noise. Every run is
/// distributed exactly like [`interior_point_main`] on the same data, and
/// consumes the random stream identically.
#[derive(Debug, Clone)]
pub struct PreparedDataset<'a> {
    x: &'a [f64],
    n_pairs: usize,
    pairs: BinCounts,
    uniform: BTreeMap<u64, BinCounts>,
}

impl<'a> PreparedDataset<'a> {
    pub fn new(x: &'a [f64]) -> Result<Self> {
        ensure_finite(x)?;
        let q = pair_differences(x)?;
        let pairs = BinCounts::from_values(&q, Binning::Dyadic)?;
        Ok(Self { x, n_pairs: q.len(), pairs, uniform: BTreeMap::new() })
    }

    pub fn data(&self) -> &'a [f64] {
        self.x
    }

    pub fn interior_point_main<R: Rng + ?Sized>(
        &mut self,
        budget: PrivacyBudget,
        c: f64,
        profile: &ConstantsProfile,
        rng: &mut R,
    ) -> Result<InteriorPointResult> {
        let half = budget.halve();
        let (estimate, moment_trace) =
            estimate_from_counts(&self.pairs, self.n_pairs, self.x.len(), half, c, profile, rng)?;
        let mut trace = Trace { moment: Some(moment_trace), ..Trace::default() };
        let m_hat = match estimate {
            MomentEstimate::Scale { m_hat, .. } => m_hat,
            MomentEstimate::Bottom => return Ok(InteriorPointResult::new(None, trace)),
        };
        trace.m_hat = Some(m_hat);
        let width = checked_width(m_hat, c, profile)?;
        let x = self.x;
        let counts = match self.uniform.entry(width.to_bits()) {
            alloc::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            alloc::collections::btree_map::Entry::Vacant(e) => {
                e.insert(BinCounts::from_values(x, Binning::Uniform { width })?)
            }
        };
        let point = find_from_counts(counts, x.len(), width, half, c, profile, rng, &mut trace)?;
        Ok(InteriorPointResult::new(point, trace))
    }
}

/// Midpoint rule on an explicit selection; exposed for tests of the output
/// formula.
pub fn midpoint(selected: &[BinIndex], width: f64) -> Option<f64> {
    let lo = selected.iter().min()?;
    let hi = selected.iter().max()?;
    (lo != hi).then(|| 0.5 * (lo.0 as f64 * width + (hi.0 + 1) as f64 * width))
}
