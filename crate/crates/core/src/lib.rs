//! Differentially private interior-point and approximate-median estimation
//! for real-valued data drawn from distributions with bounded normalized
//! variance, `E|X-mu|^2 <= C * (E|X-mu|)^2`.
//!
//! The crate is `no_std` (it needs `alloc`) and owns no randomness: every
//! randomized entry point takes an explicit [`rand::Rng`].
//!
//! The pipeline is:
//!
//! 1. [`moment::estimate_first_moment`] privately estimates the first central
//!    absolute moment from pairwise differences `|x_{2i} - x_{2i-1}|` and a
//!    noisy histogram over dyadic bins `(2^l, 2^{l+1}]`.
//! 2. [`interior_point::find_interior_point`] builds a noisy histogram over
//!    uniform bins whose width is derived from that estimate and returns the
//!    midpoint between the outermost bins that clear the selection threshold.
//! 3. [`median::private_median`] slices the middle of the sorted data and runs
//!    the interior-point pipeline on the slice.
//!
//! All noise is drawn from the truncated Laplace distribution in [`noise`].
//! Histograms over infinitely many bins are materialized lazily (see
//! [`histogram`]); this is exact as long as every selection threshold exceeds
//! the noise truncation bound, which is checked on every call.
//!
//! ```
//! use privmed_core::{interior_point, ConstantsProfile, PrivacyBudget};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let x: Vec<f64> = (0..400_000u64).map(|i| ((i * 7919) % 100_003) as f64 / 100_003.0).collect();
//! let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
//! let profile = ConstantsProfile::relaxed();
//! let out = interior_point::interior_point_main(&x, budget, 2.5, &profile, &mut rng).unwrap();
//! let point = out.point.expect("enough data for two selected bins");
//! assert!((0.0..=1.0).contains(&point));
//! ```

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;
pub mod histogram;
pub mod interior_point;
pub mod median;
pub mod moment;
pub mod noise;
pub mod profile;
pub mod trace;

pub use error::{Error, Result};
pub use histogram::{BinCounts, BinIndex, Binning, NoisyHistogram};
pub use interior_point::{interior_point_main, InteriorPointResult, PreparedDataset};
pub use median::{empirical_quantile, middle_slice, private_median, MedianResult, MiddleSlice};
pub use moment::{estimate_first_moment, pair_differences, MomentEstimate};
pub use noise::{PrivacyBudget, TLapParams};
pub use profile::{ConstantsProfile, LogBase, ThresholdCount};

pub(crate) fn ensure_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
