//! Sparse noisy histograms over infinitely many bins.
//!
//! Two bin families are supported: dyadic bins `(2^l, 2^{l+1}]` partitioning
//! `(0, inf)` and uniform bins `[l w, (l+1) w)` partitioning the real line.
//!
//! Only occupied bins are stored and noised. An unoccupied bin's noisy count
//! is a single truncated Laplace draw and therefore at most `z_max`, so any
//! selection threshold strictly above `z_max` can never pick it. Under that
//! condition the lazy histogram selects exactly the bins the mechanism that
//! noises every bin would select; [`NoisyHistogram::thresholded_bins`]
//! refuses thresholds that break it.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use libm::{floor, frexp};
use rand::Rng;

use crate::noise::TLapParams;
use crate::{Error, Result};

/// Index `l` of a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinIndex(pub i64);

impl core::fmt::Display for BinIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        self.0.fmt(f)
    }
}

/// The unique `l` with `2^l < q <= 2^{l+1}`.
///
/// Uses the binary exponent of `q` directly so exact powers of two land in the
/// bin whose closed right end they are.
pub fn dyadic_bin(q: f64) -> Result<BinIndex> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::NonPositive { value: q });
    }
    // q = m * 2^e with m in [0.5, 1)
    let (m, e) = frexp(q);
    let ell = if m == 0.5 { e - 2 } else { e - 1 };
    Ok(BinIndex(i64::from(ell)))
}

/// `l = floor(x / width)`, corrected so that `l * width <= x < (l + 1) * width`
/// holds for the floating-point bin edges.
pub fn uniform_bin(x: f64, width: f64) -> BinIndex {
    debug_assert!(width > 0.0);
    let mut ell = floor(x / width);
    if x < ell * width {
        ell -= 1.0;
    } else if x >= (ell + 1.0) * width {
        ell += 1.0;
    }
    BinIndex(ell as i64)
}

/// A bin family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binning {
    /// `(2^l, 2^{l+1}]`. Zeros belong to no bin and are dropped.
    Dyadic,
    /// `[l w, (l+1) w)`.
    Uniform { width: f64 },
}

impl Binning {
    /// Bin of `v`, or `None` for values the family does not cover (zero under
    /// dyadic binning).
    pub fn index(&self, v: f64) -> Result<Option<BinIndex>> {
        match *self {
            Binning::Dyadic if v == 0.0 => Ok(None),
            Binning::Dyadic => dyadic_bin(v).map(Some),
            Binning::Uniform { width } => {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: 0 });
                }
                Ok(Some(uniform_bin(v, width)))
            }
        }
    }

    /// Edges `(left, right)` of bin `ell`.
    pub fn edges(&self, ell: BinIndex) -> (f64, f64) {
        match *self {
            Binning::Dyadic => (libm::exp2(ell.0 as f64), libm::exp2((ell.0 + 1) as f64)),
            Binning::Uniform { width } => (ell.0 as f64 * width, (ell.0 + 1) as f64 * width),
        }
    }
}

/// Exact (non-private) counts of the occupied bins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinCounts {
    counts: BTreeMap<BinIndex, u64>,
    dropped: usize,
}

impl BinCounts {
    pub fn from_values(values: &[f64], binning: Binning) -> Result<Self> {
        if let Binning::Uniform { width } = binning {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::InvalidParameter { name: "width", value: width });
            }
        }
        let mut counts = BTreeMap::new();
        let mut dropped = 0;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            match binning.index(v)? {
                Some(ell) => *counts.entry(ell).or_insert(0) += 1,
                None => dropped += 1,
            }
        }
        Ok(Self { counts, dropped })
    }

    pub fn get(&self, ell: BinIndex) -> u64 {
        self.counts.get(&ell).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BinIndex, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// Number of occupied bins.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Values that fell in no bin.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Noise every occupied bin, drawing in increasing bin order.
    pub fn add_noise<R: Rng + ?Sized>(&self, noise: TLapParams, rng: &mut R) -> NoisyHistogram {
        let counts = self.counts.iter().map(|(&ell, &c)| (ell, c as f64 + noise.sample(rng))).collect();
        NoisyHistogram { counts, noise, occupied_only: true }
    }

    /// Noise every bin in `window` plus any occupied bin outside it.
    ///
    /// Occupied bins draw from `rng` in increasing bin order, exactly as
    /// [`add_noise`](Self::add_noise) does; empty bins draw from `rng_empty`.
    /// With the same `rng` state both histograms therefore agree on every
    /// occupied bin, which is what the lazy/eager equivalence checks rely on.
    pub fn add_noise_eager<R: Rng + ?Sized, E: Rng + ?Sized>(
        &self,
        window: RangeInclusive<i64>,
        noise: TLapParams,
        rng: &mut R,
        rng_empty: &mut E,
    ) -> NoisyHistogram {
        let mut lazy = self.add_noise(noise, rng);
        for ell in window {
            lazy.counts.entry(BinIndex(ell)).or_insert_with(|| noise.sample(rng_empty));
        }
        lazy.occupied_only = false;
        lazy
    }
}

/// Noisy counts `c_l + Z_l` with `Z_l ~ TLap(noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyHistogram {
    counts: BTreeMap<BinIndex, f64>,
    noise: TLapParams,
    occupied_only: bool,
}

impl NoisyHistogram {
    pub fn noise(&self) -> TLapParams {
        self.noise
    }

    /// True when unoccupied bins were never materialized.
    pub fn occupied_only(&self) -> bool {
        self.occupied_only
    }

    pub fn get(&self, ell: BinIndex) -> Option<f64> {
        self.counts.get(&ell).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BinIndex, f64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// Every bin whose noisy count is `>= threshold`, in increasing order.
    pub fn thresholded_bins(&self, threshold: f64) -> Result<Vec<BinIndex>> {
        if self.occupied_only && (threshold.is_nan() || threshold <= self.noise.z_max()) {
            return Err(Error::SoundnessViolation { threshold, z_max: self.noise.z_max() });
        }
        Ok(self.counts.iter().filter(|&(_, &c)| c >= threshold).map(|(&ell, _)| ell).collect())
    }
}

/// Count `values` into `binning` and noise the occupied bins.
pub fn build_noisy_histogram<R: Rng + ?Sized>(
    values: &[f64],
    binning: Binning,
    noise: TLapParams,
    rng: &mut R,
) -> Result<NoisyHistogram> {
    Ok(BinCounts::from_values(values, binning)?.add_noise(noise, rng))
}
