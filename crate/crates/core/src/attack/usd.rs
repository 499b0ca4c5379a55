//! Unambiguous state discrimination of the sideband qubit.

use crate::error::{ensure, DomainError};

/// Whether a USD-based intercept strategy is exposed by the detection
/// statistics it produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum UsdVerdict {
    /// The legitimate detection rate exceeds what the filter can sustain,
    /// so the interception shows up as missing counts.
    Revealed,
    /// The filter keeps up with the legitimate detection rate.
    Hidden,
}

/// Success probability of the optimal unambiguous discrimination filter on
/// the sideband state of modulation index `m`: `2 m^2 / (1 + m^2)`.
///
/// The two candidate states overlap more as `m` decreases, so a dim
/// modulator (`m` near 0) leaves the filter almost never conclusive, while
/// `m = 1` is discriminated with certainty.
pub fn usd_filter_success(m: f64) -> Result<f64, DomainError> {
    ensure(
        m.is_finite() && (0.0..=1.0).contains(&m),
        "m",
        m,
        "within [0, 1]",
    )?;
    Ok(2.0 * m * m / (1.0 + m * m))
}

/// Compares the legitimate per-window detection probability with the USD
/// filter rate: the attack is revealed exactly when `p_det` is strictly
/// larger, since then the filter cannot reproduce the expected counts.
///
/// Ties favor the attacker (the counts still look nominal). Both arguments
/// are probabilities in `[0, 1]`; a NaN comparison reports `Hidden`.
pub fn usd_reveal_check(p_det: f64, p_usd: f64) -> UsdVerdict {
    if p_det > p_usd {
        UsdVerdict::Revealed
    } else {
        UsdVerdict::Hidden
    }
}
