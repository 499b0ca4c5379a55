//! Faked-state injection against blinded threshold detectors.
//!
//! The model works on the four modulator phases (multiples of pi/2).
//! Phases 0 and pi form one basis, pi/2 and 3pi/2 the other; the low bit
//! of the phase index is the basis, the high bit the key bit. Sideband
//! interference between two phases is summarized by an overlap weight:
//! 1 for equal phases, 0 for opposite phases, 1/2 across bases.
//!
//! Per window the eavesdropper picks a target phase and runs unambiguous
//! discrimination against it; the conclusive probability is the carrier
//! filter success scaled by the overlap weight between the sent and target
//! phases. On a conclusive result she injects a bright trigger pulse
//! carrying her phase into the blinded receiver, whose detector now clicks
//! exactly when the incident sideband power reaches its threshold. On an
//! inconclusive result she either stays dark or, when reference monitoring
//! is active, substitutes a tailored carrier-only pulse strong enough to
//! keep the monitor firing while its sideband leakage stays below the
//! click threshold.

use rand::Rng;

use super::{
    required_reference_power, round_rng, run_rng, threshold_click, usd_filter_success,
    AnalyticCompanion, AttackOutcome, BlindingParams,
};
use crate::error::{ensure, DomainError};
use crate::scw::SystemParams;

/// Knobs for [`faked_state_simulate_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FakedStateOptions {
    /// Conclusive-discrimination probability before overlap weighting.
    /// `None` uses the carrier filter bound for the system's modulation
    /// index.
    pub conclusive_prob: Option<f64>,
    /// Whether the receiver watches its reference (carrier) monitor. When
    /// set, the attack must keep the monitor click rate at or above
    /// `ref_click_acceptance` to stay unnoticed.
    pub monitor_reference: bool,
    /// Minimum reference click rate the receiver tolerates.
    pub ref_click_acceptance: f64,
}

impl Default for FakedStateOptions {
    fn default() -> Self {
        Self {
            conclusive_prob: None,
            monitor_reference: true,
            ref_click_acceptance: 0.9,
        }
    }
}

/// Runs [`faked_state_simulate_with`] under default options: conclusive
/// probability from the carrier filter bound, reference monitoring on,
/// 90% minimum monitor rate.
pub fn faked_state_simulate(
    params: &SystemParams,
    blinding: &BlindingParams,
    p_trigger_w: f64,
    n_rounds: u64,
    seed: u64,
) -> Result<AttackOutcome, DomainError> {
    faked_state_simulate_with(
        params,
        blinding,
        p_trigger_w,
        n_rounds,
        seed,
        &FakedStateOptions::default(),
    )
}

/// Simulates the intercept-resend chain over `n_rounds` windows and
/// returns empirical rates next to the exact enumeration of the same
/// model.
///
/// `p_trigger_w` is the sideband power of the injected trigger pulse at
/// full overlap. The attack counts as feasible when the enumeration shows
/// zero error rate, a positive leak, and (if monitoring) a monitor rate
/// at or above the acceptance level.
pub fn faked_state_simulate_with(
    params: &SystemParams,
    blinding: &BlindingParams,
    p_trigger_w: f64,
    n_rounds: u64,
    seed: u64,
    options: &FakedStateOptions,
) -> Result<AttackOutcome, DomainError> {
    params.validate()?;
    blinding.validate()?;
    ensure(
        p_trigger_w.is_finite() && p_trigger_w > 0.0,
        "p_trigger_w",
        p_trigger_w,
        "finite and > 0",
    )?;
    ensure(n_rounds >= 1, "n_rounds", n_rounds as f64, ">= 1")?;
    ensure(
        options.ref_click_acceptance.is_finite()
            && (0.0..=1.0).contains(&options.ref_click_acceptance),
        "ref_click_acceptance",
        options.ref_click_acceptance,
        "within [0, 1]",
    )?;
    let p_conclusive = match options.conclusive_prob {
        Some(p) => {
            ensure(
                p.is_finite() && (0.0..=1.0).contains(&p),
                "conclusive_prob",
                p,
                "within [0, 1]",
            )?;
            p
        }
        None => usd_filter_success(params.modulation_index)?,
    };

    let m = params.modulation_index;
    let p_th = blinding.p_th_w;
    // A dark window needs a substitute pulse for the monitor; it is only
    // safe if the pulse's sideband leakage cannot reach the threshold
    // detector's never-click level.
    let sends_tailored =
        options.monitor_reference && m * blinding.p_always_w <= blinding.p_never_w;
    let tailored_clicks = sends_tailored && threshold_click(blinding.p_always_w, p_th);
    let tailored_leaks_click = sends_tailored && threshold_click(m * blinding.p_always_w, p_th);
    let trigger_ref_clicks = if m > 0.0 {
        threshold_click(required_reference_power(p_trigger_w, m)?, p_th)
    } else {
        false
    };

    let analytic = enumerate_model(
        p_conclusive,
        p_trigger_w,
        p_th,
        tailored_leaks_click,
        tailored_clicks,
        trigger_ref_clicks,
        options.monitor_reference,
    );

    let base = run_rng(seed);
    let mut clicks = 0u64;
    let mut accepted = 0u64;
    let mut errors = 0u64;
    let mut leaked = 0u64;
    let mut ref_clicks = 0u64;
    for round in 0..n_rounds {
        let mut rng = round_rng(&base, round);
        let a: u8 = rng.random_range(0..4);
        let e: u8 = rng.random_range(0..4);
        let b: u8 = rng.random_range(0..4);
        let fire_u: f64 = rng.random();

        let fired = fire_u < p_conclusive * overlap_weight(a, e);
        let (clicked, known) = if fired {
            if trigger_ref_clicks {
                ref_clicks += 1;
            }
            let power = p_trigger_w * overlap_weight(e, b);
            (threshold_click(power, p_th), e == b)
        } else {
            if tailored_clicks {
                ref_clicks += 1;
            }
            (tailored_leaks_click, false)
        };

        if clicked {
            clicks += 1;
            if basis(a) == basis(b) {
                accepted += 1;
                if bit(a) != bit(b) {
                    errors += 1;
                }
                if known {
                    leaked += 1;
                }
            }
        }
    }

    let ratio = |num: u64, den: u64| if den > 0 { num as f64 / den as f64 } else { 0.0 };
    let monitor_ok = !options.monitor_reference
        || monitor_rate(&analytic) >= options.ref_click_acceptance;
    let feasible = analytic.qber == 0.0 && analytic.leak_fraction > 0.0 && monitor_ok;
    Ok(AttackOutcome {
        detection_rate: ratio(clicks, n_rounds),
        qber: ratio(errors, accepted),
        leak_fraction: ratio(leaked, accepted),
        ref_click_rate: options.monitor_reference.then(|| ratio(ref_clicks, n_rounds)),
        feasible,
        notes: format!(
            "faked-state injection: conclusive probability {:.3e} per overlap-matched \
             window, trigger sideband power {:.3e} W against a {:.3e} W click threshold; \
             dark windows {}",
            p_conclusive,
            p_trigger_w,
            p_th,
            if sends_tailored {
                "are masked by a tailored carrier pulse"
            } else {
                "stay dark"
            }
        ),
        seed,
        rounds: n_rounds,
        accepted,
        analytic,
    })
}

/// Sideband overlap weight between two phase indices.
fn overlap_weight(x: u8, y: u8) -> f64 {
    match (4 + x - y) % 4 {
        0 => 1.0,
        2 => 0.0,
        _ => 0.5,
    }
}

fn basis(phase: u8) -> u8 {
    phase & 1
}

fn bit(phase: u8) -> u8 {
    phase >> 1
}

fn monitor_rate(analytic: &AnalyticCompanion) -> f64 {
    analytic.ref_click_rate.unwrap_or(0.0)
}

/// Exact per-window probabilities from enumerating every (sent, target,
/// receiver) phase triple with the same click rules as the sampler.
#[allow(clippy::too_many_arguments)]
fn enumerate_model(
    p_conclusive: f64,
    p_trigger_w: f64,
    p_th: f64,
    tailored_leaks_click: bool,
    tailored_clicks: bool,
    trigger_ref_clicks: bool,
    monitoring: bool,
) -> AnalyticCompanion {
    let mut click_mass = 0.0;
    let mut accept_mass = 0.0;
    let mut error_mass = 0.0;
    let mut leak_mass = 0.0;
    let mut ref_mass = 0.0;
    let mut fire_mass = 0.0;
    for a in 0..4u8 {
        for e in 0..4u8 {
            let fire = p_conclusive * overlap_weight(a, e) / 16.0;
            fire_mass += fire;
            if trigger_ref_clicks {
                ref_mass += fire;
            }
            for b in 0..4u8 {
                if !threshold_click(p_trigger_w * overlap_weight(e, b), p_th) {
                    continue;
                }
                let mass = fire / 4.0;
                click_mass += mass;
                if basis(a) == basis(b) {
                    accept_mass += mass;
                    if bit(a) != bit(b) {
                        error_mass += mass;
                    }
                    if e == b {
                        leak_mass += mass;
                    }
                }
            }
        }
    }
    let idle_mass = 1.0 - fire_mass;
    if tailored_leaks_click {
        // Phase-independent clicks: half survive sifting, half of those
        // disagree with the sent bit, none are known to the attacker.
        click_mass += idle_mass;
        accept_mass += idle_mass / 2.0;
        error_mass += idle_mass / 4.0;
    }
    if tailored_clicks {
        ref_mass += idle_mass;
    }
    let cond = |num: f64| if accept_mass > 0.0 { num / accept_mass } else { 0.0 };
    AnalyticCompanion {
        detection_rate: click_mass,
        qber: cond(error_mass),
        leak_fraction: cond(leak_mass),
        ref_click_rate: monitoring.then_some(ref_mass),
    }
}
