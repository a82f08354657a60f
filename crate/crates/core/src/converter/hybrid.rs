use crate::phasor::Complex64;
use crate::{Error, Result};

/// Result of splitting a device's rating and dispatch between its machine
/// part `(1 − C)` and its coherency-controlled converter part `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSplit {
    pub share: f64,
    /// Machine rating (MVA); `None` when the machine is removed (C = 1).
    pub sm_rating: Option<f64>,
    /// Converter rating (MVA); `None` for a pure machine (C = 0).
    pub ibr_rating: Option<f64>,
    pub s_sm: Complex64,
    pub s_ibr: Complex64,
}

/// Splits a device of rating `mva` dispatching `s_total` at its terminal.
/// Both parts see the same terminal voltage, so per-unit operating points on
/// their own ratings are unchanged.
pub fn split_device(mva: f64, s_total: Complex64, share: f64) -> Result<HybridSplit> {
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::config(alloc::format!("coherency share C = {share} outside [0, 1]")));
    }
    if !(mva > 0.0) {
        return Err(Error::config("device rating must be > 0"));
    }
    let sm_share = 1.0 - share;
    Ok(HybridSplit {
        share,
        sm_rating: (share < 1.0).then_some(mva * sm_share),
        ibr_rating: (share > 0.0).then_some(mva * share),
        s_sm: s_total * sm_share,
        s_ibr: s_total * share,
    })
}
