//! Selection traces.
//!
//! A trace records what each histogram stage saw: the threshold, and for
//! every selected bin both its true and its noisy count. Traces reveal the
//! data and are not covered by the privacy guarantee; they are only returned
//! to callers when the `diagnostics` feature is enabled.

use alloc::vec::Vec;

use crate::histogram::BinIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedBin {
    pub bin: BinIndex,
    pub true_count: u64,
    pub noisy_count: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTrace {
    pub threshold: f64,
    pub z_max: f64,
    pub selected: Vec<SelectedBin>,
}

impl StageTrace {
    /// Every selected bin held at least one real sample.
    pub fn selected_bins_occupied(&self) -> bool {
        self.selected.iter().all(|b| b.true_count > 0)
    }
}

/// Trace of one run of the interior-point pipeline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub moment: Option<StageTrace>,
    pub interior: Option<StageTrace>,
    pub m_hat: Option<f64>,
    /// Uniform bin width used by the interior-point stage.
    pub width: Option<f64>,
    /// Smallest and largest selected uniform bin.
    pub span: Option<(BinIndex, BinIndex)>,
    /// Open interval the median reduction kept samples from.
    pub slice_bounds: Option<(f64, f64)>,
}

impl Trace {
    pub fn selected_bins_occupied(&self) -> bool {
        self.moment.iter().chain(self.interior.iter()).all(StageTrace::selected_bins_occupied)
    }
}
