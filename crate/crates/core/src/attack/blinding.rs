//! Detector-blinding power arithmetic.
//!
//! A blinded avalanche detector leaves Geiger mode and behaves as a
//! classical power meter: a trigger pulse of power at or above a threshold
//! `P_th` always produces a click, anything below stays silent. The
//! parameters record the measured blinding power and the two calibration
//! powers bounding deterministic control: `P_always` (a click is
//! guaranteed) and `P_never` (a click never happens).

use crate::error::{ensure, DomainError};

/// Calibration of one blinded detector, all powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlindingParams {
    /// Continuous power that keeps the detector blinded.
    pub p_blind_w: f64,
    /// Click threshold of the blinded detector.
    pub p_th_w: f64,
    /// Largest trigger power that never produces a click.
    pub p_never_w: f64,
    /// Smallest trigger power that always produces a click.
    pub p_always_w: f64,
}

impl BlindingParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        for (name, value) in [
            ("p_blind_w", self.p_blind_w),
            ("p_th_w", self.p_th_w),
            ("p_never_w", self.p_never_w),
            ("p_always_w", self.p_always_w),
        ] {
            ensure(value.is_finite() && value > 0.0, name, value, "finite and > 0")?;
        }
        ensure(
            self.p_never_w <= self.p_always_w,
            "p_never_w",
            self.p_never_w,
            "at most p_always_w",
        )?;
        Ok(())
    }
}

/// Trigger-power interval giving an attacker deterministic control of a
/// blinded detector, in watts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TriggerWindow {
    /// Lower edge: the pulse itself must always click.
    pub min_w: f64,
    /// Upper edge: half the pulse must never click.
    pub max_w: f64,
}

/// Interval of trigger powers `P_tr` satisfying both deterministic-control
/// conditions: `P_tr >= P_always` (a matched-basis pulse always clicks) and
/// `P_tr / 2 <= P_never` (a basis-mismatched pulse, carrying half the
/// power, never clicks). Returns `None` when the calibration leaves no such
/// window.
pub fn blinding_trigger_window(
    params: &BlindingParams,
) -> Result<Option<TriggerWindow>, DomainError> {
    params.validate()?;
    let min_w = params.p_always_w;
    let max_w = 2.0 * params.p_never_w;
    if min_w > max_w {
        return Ok(None);
    }
    Ok(Some(TriggerWindow { min_w, max_w }))
}

/// Click predicate of a blinded detector under the deterministic threshold
/// model: a click happens exactly when the incident power reaches `p_th_w`.
pub fn threshold_click(power_w: f64, p_th_w: f64) -> bool {
    power_w >= p_th_w
}

/// Reference-pulse power the attacker must inject so that the receiver's
/// modulator shifts a trigger pulse of power `p_trigger_w` onto the
/// sidebands: the carrier-to-sideband power transfer scales with the
/// modulation index, giving `P_ref = P_tr / m`.
pub fn required_reference_power(p_trigger_w: f64, m: f64) -> Result<f64, DomainError> {
    ensure(
        p_trigger_w.is_finite() && p_trigger_w >= 0.0,
        "p_trigger_w",
        p_trigger_w,
        "finite and >= 0",
    )?;
    ensure(
        m.is_finite() && m > 0.0 && m <= 1.0,
        "m",
        m,
        "within (0, 1]",
    )?;
    Ok(p_trigger_w / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(p_never: f64, p_always: f64) -> BlindingParams {
        BlindingParams {
            p_blind_w: 3.0e-4,
            p_th_w: 1.5e-4,
            p_never_w: p_never,
            p_always_w: p_always,
        }
    }

    #[test]
    fn window_matches_hand_interval() {
        let w = blinding_trigger_window(&params(0.2, 0.3)).unwrap().unwrap();
        assert_eq!(w.min_w, 0.3);
        assert_relative_eq!(w.max_w, 0.4, max_relative = 1e-15);
    }

    #[test]
    fn window_is_empty_when_always_exceeds_twice_never() {
        assert_eq!(blinding_trigger_window(&params(0.1, 0.3)).unwrap(), None);
    }

    #[test]
    fn params_reject_inverted_calibration_and_bad_powers() {
        assert!(params(0.4, 0.3).validate().is_err());
        assert!(BlindingParams {
            p_th_w: 0.0,
            ..params(0.2, 0.3)
        }
        .validate()
        .is_err());
        assert!(BlindingParams {
            p_blind_w: f64::NAN,
            ..params(0.2, 0.3)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn any_power_at_threshold_clicks() {
        assert!(threshold_click(1.5e-4, 1.5e-4));
        assert!(threshold_click(2.0e-4, 1.5e-4));
        assert!(!threshold_click(1.4e-4, 1.5e-4));
    }

    #[test]
    fn reference_power_known_points() {
        let p = required_reference_power(1.5e-4, 0.05).unwrap();
        assert_relative_eq!(p, 3.0e-3, max_relative = f64::EPSILON);
        assert_eq!(required_reference_power(2.0e-3, 1.0).unwrap(), 2.0e-3);
        assert_relative_eq!(
            required_reference_power(1.0e-3, 0.1).unwrap(),
            1.0e-2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn reference_power_rejects_zero_index() {
        assert!(required_reference_power(1.5e-4, 0.0).is_err());
        assert!(required_reference_power(1.5e-4, 1.5).is_err());
        assert!(required_reference_power(-1.0e-4, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn window_exists_iff_always_at_most_twice_never(
            p_never in 1.0e-6f64..1.0,
            p_always_factor in 0.5f64..4.0,
        ) {
            let p_always = p_never * p_always_factor.max(1.0);
            let w = blinding_trigger_window(&params(p_never, p_always)).unwrap();
            prop_assert_eq!(w.is_some(), p_always <= 2.0 * p_never);
            if let Some(w) = w {
                prop_assert!(w.min_w <= w.max_w);
            }
        }
    }
}
