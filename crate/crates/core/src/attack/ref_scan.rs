//! Attenuation frontier scan for the reference monitor.
//!
//! An attacker who sits in the line can attenuate the transmitted pulses
//! and hide behind the receiver's detection statistics as long as the
//! carrier (reference) click rate stays close to its nominal value. When
//! the reference mode arrives bright enough to saturate its detector, a
//! sizeable attenuation barely moves the monitor while the single-photon
//! sideband rate drops almost linearly. The scan sweeps an attenuation
//! grid, finds the strongest attenuation the monitor tolerates, and
//! reports how much sideband suppression that buys.

use serde::Serialize;

use crate::error::{ensure, DomainError};
use crate::scw::{self, SystemParams};

/// Detection rates at one attenuation setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefScanPoint {
    /// Attacker's extra transmission factor (1 = untouched line).
    pub alpha: f64,
    /// Sideband click probability per window at this attenuation.
    pub p_det_sb: f64,
    /// Reference click probability per window at this attenuation.
    pub p_det_ref: f64,
}

/// Outcome of [`reference_manipulation_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefScanReport {
    /// Strongest attenuation (smallest alpha) whose reference rate stays
    /// within tolerance of baseline, if any grid point qualifies.
    pub frontier_alpha: Option<f64>,
    /// Sideband rate at the frontier relative to baseline. `None` when no
    /// frontier exists or the baseline sideband rate is zero.
    pub sideband_suppression: Option<f64>,
    /// Sideband click probability with the line untouched.
    pub baseline_p_det_sb: f64,
    /// Reference click probability with the line untouched.
    pub baseline_p_det_ref: f64,
    /// Relative reference-rate drop the monitor tolerates.
    pub rel_tolerance: f64,
    /// Every evaluated grid point, ascending in alpha.
    pub points: Vec<RefScanPoint>,
}

/// Sweeps `alpha_grid` and locates the attenuation frontier the reference
/// monitor cannot distinguish from the nominal channel.
///
/// A grid point qualifies when its reference click probability is at
/// least `(1 - rel_tolerance)` times the baseline value; the frontier is
/// the smallest qualifying alpha. Grid order does not matter.
pub fn reference_manipulation_scan(
    params: &SystemParams,
    alpha_grid: &[f64],
    rel_tolerance: f64,
) -> Result<RefScanReport, DomainError> {
    params.validate()?;
    ensure(
        !alpha_grid.is_empty(),
        "alpha_grid",
        alpha_grid.len() as f64,
        "at least one attenuation point",
    )?;
    for &alpha in alpha_grid {
        ensure(
            alpha.is_finite() && alpha > 0.0 && alpha <= 1.0,
            "alpha",
            alpha,
            "within (0, 1]",
        )?;
    }
    ensure(
        rel_tolerance.is_finite() && rel_tolerance > 0.0 && rel_tolerance < 1.0,
        "rel_tolerance",
        rel_tolerance,
        "within (0, 1)",
    )?;

    let baseline = scw::occupancies(params, 1.0, 0.0)?;
    let baseline_p_det_sb = scw::detection_prob(baseline.n_sb)?;
    let baseline_p_det_ref = scw::detection_prob(baseline.n_ref)?;
    let floor = (1.0 - rel_tolerance) * baseline_p_det_ref;

    let mut grid: Vec<f64> = alpha_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    let mut points = Vec::with_capacity(grid.len());
    for alpha in grid {
        let modes = scw::occupancies(params, alpha, 0.0)?;
        points.push(RefScanPoint {
            alpha,
            p_det_sb: scw::detection_prob(modes.n_sb)?,
            p_det_ref: scw::detection_prob(modes.n_ref)?,
        });
    }

    let frontier = points.iter().find(|p| p.p_det_ref >= floor).copied();
    let sideband_suppression = frontier.and_then(|p| {
        (baseline_p_det_sb > 0.0).then(|| p.p_det_sb / baseline_p_det_sb)
    });
    Ok(RefScanReport {
        frontier_alpha: frontier.map(|p| p.alpha),
        sideband_suppression,
        baseline_p_det_sb,
        baseline_p_det_ref,
        rel_tolerance,
        points,
    })
}
