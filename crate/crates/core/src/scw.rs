//! Photon-number model of a subcarrier-wave (SCW) QKD transmission window.
//!
//! In an SCW system the laser emits a strong carrier at the optical frequency
//! and the electro-optic phase modulators move a small part of that energy
//! into `2S` sidebands spaced by the microwave modulation frequency. The
//! multimode interaction is parameterized by a modulation angle `beta`, and
//! the fraction of energy left on the carrier after modulation is the square
//! of the Wigner d-function element `d = d_{00}^{S}(beta')`, where the
//! effective angle `beta'` depends on the phase mismatch between the two
//! modulators.
//!
//! With `n_total = alpha * mu0 * eta_line * eta_bob` photons reaching the
//! receiver per window, the split between the carrier (reference) mode and
//! the sideband envelope is
//!
//! ```text
//! n_ref = n_total * d^2        n_sb = n_total * (1 - d^2)
//! ```
//!
//! and a threshold single-photon detector fires with probability
//! `1 - exp(-n)` on a mode holding `n` photons on average.

use crate::error::{ensure, DomainError};

/// Planck constant in joule-seconds (2019 SI exact value).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum in meters per second (SI exact value).
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 2.997_924_58e8;

/// Energy of one photon at the given vacuum wavelength, in joules.
pub fn photon_energy_j(wavelength_m: f64) -> Result<f64, DomainError> {
    ensure(
        wavelength_m.is_finite() && wavelength_m > 0.0,
        "wavelength_m",
        wavelength_m,
        "finite and > 0",
    )?;
    Ok(PLANCK_J_S * SPEED_OF_LIGHT_M_PER_S / wavelength_m)
}

/// Operating point of one SCW transmitter/receiver pair.
///
/// All efficiencies are linear (not dB). `beta` is the single-modulator
/// modulation angle in radians; `modulation_index` is the small-signal
/// sideband-to-carrier amplitude ratio used by the attack models.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Mean photon number of the carrier per transmission window at the
    /// transmitter output.
    pub mu0: f64,
    /// Small-signal modulation index `m`, dimensionless, in `[0, 1]`.
    pub modulation_index: f64,
    /// Resonant interaction order `S` of the multimode modulator model;
    /// also the order of the Wigner d-function describing the energy split.
    pub interaction_order: u32,
    /// Modulation angle in radians for a single pass through one modulator.
    pub beta: f64,
    /// Line (channel) transmittance, in `(0, 1]`.
    pub eta_line: f64,
    /// Receiver optical transmittance, in `(0, 1]`.
    pub eta_bob: f64,
    /// Pulse (window) repetition rate in hertz.
    pub rep_rate_hz: f64,
    /// Vacuum wavelength of the carrier in meters.
    pub wavelength_m: f64,
    /// Fraction of detected windows kept after basis sifting, in `[0, 1]`.
    pub sift_factor: f64,
}

impl SystemParams {
    /// Checks every field against its physical domain.
    pub fn validate(&self) -> Result<(), DomainError> {
        ensure(
            self.mu0.is_finite() && self.mu0 >= 0.0,
            "mu0",
            self.mu0,
            "finite and >= 0",
        )?;
        ensure(
            self.modulation_index.is_finite()
                && (0.0..=1.0).contains(&self.modulation_index),
            "modulation_index",
            self.modulation_index,
            "within [0, 1]",
        )?;
        ensure(self.beta.is_finite(), "beta", self.beta, "finite")?;
        ensure(
            self.eta_line > 0.0 && self.eta_line <= 1.0,
            "eta_line",
            self.eta_line,
            "within (0, 1]",
        )?;
        ensure(
            self.eta_bob > 0.0 && self.eta_bob <= 1.0,
            "eta_bob",
            self.eta_bob,
            "within (0, 1]",
        )?;
        ensure(
            self.rep_rate_hz.is_finite() && self.rep_rate_hz > 0.0,
            "rep_rate_hz",
            self.rep_rate_hz,
            "finite and > 0",
        )?;
        ensure(
            self.wavelength_m.is_finite() && self.wavelength_m > 0.0,
            "wavelength_m",
            self.wavelength_m,
            "finite and > 0",
        )?;
        ensure(
            self.sift_factor.is_finite() && (0.0..=1.0).contains(&self.sift_factor),
            "sift_factor",
            self.sift_factor,
            "within [0, 1]",
        )?;
        Ok(())
    }
}

/// Mean photon numbers of the two detected mode groups in one window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModeOccupancy {
    /// Mean photon number summed over the sideband envelope.
    pub n_sb: f64,
    /// Mean photon number of the carrier (reference) mode.
    pub n_ref: f64,
}

impl ModeOccupancy {
    /// Total mean photon number of the window.
    pub fn total(&self) -> f64 {
        self.n_sb + self.n_ref
    }
}

/// Maps the modulator phase mismatch `delta_phi` to the effective composite
/// modulation angle `beta'` entering the Wigner d-function.
///
/// The default [`BetaPrimeMap::CosineHalfAngle`] rule
/// `beta' = 2 * beta * |cos(delta_phi / 2)|` reproduces the two anchor
/// points of the two-modulator composition: matched phases add coherently
/// (`beta' = 2 beta`) and opposite phases cancel (`beta' = 0`, so the whole
/// window stays on the carrier). Systems calibrated away from this rule can
/// supply a measured [`BetaPrimeMap::Table`] instead; intermediate phases
/// are linearly interpolated and out-of-range phases clamp to the table
/// ends.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPrimeMap {
    /// `beta' = 2 * beta * |cos(delta_phi / 2)|`.
    CosineHalfAngle,
    /// Piecewise-linear `(delta_phi, beta')` pairs with strictly increasing
    /// `delta_phi`. `beta` from the system parameters is ignored; the table
    /// is taken as the already-composed angle.
    Table(Vec<(f64, f64)>),
}

impl BetaPrimeMap {
    /// Evaluates the effective angle for a modulator phase mismatch.
    pub fn eval(&self, beta: f64, delta_phi: f64) -> Result<f64, DomainError> {
        ensure(beta.is_finite(), "beta", beta, "finite")?;
        ensure(delta_phi.is_finite(), "delta_phi", delta_phi, "finite")?;
        match self {
            BetaPrimeMap::CosineHalfAngle => Ok(2.0 * beta * (delta_phi / 2.0).cos().abs()),
            BetaPrimeMap::Table(points) => {
                if points.is_empty() {
                    return Err(DomainError::new(
                        "beta_prime_table",
                        0.0,
                        "at least one (delta_phi, beta') entry",
                    ));
                }
                for pair in points.windows(2) {
                    ensure(
                        pair[0].0 < pair[1].0,
                        "beta_prime_table",
                        pair[1].0,
                        "strictly increasing delta_phi entries",
                    )?;
                }
                let first = points[0];
                let last = points[points.len() - 1];
                if delta_phi <= first.0 {
                    return Ok(first.1);
                }
                if delta_phi >= last.0 {
                    return Ok(last.1);
                }
                let right = points
                    .iter()
                    .position(|&(phi, _)| phi >= delta_phi)
                    .expect("delta_phi is below the last table entry");
                let (x0, y0) = points[right - 1];
                let (x1, y1) = points[right];
                let t = (delta_phi - x0) / (x1 - x0);
                Ok(y0 + t * (y1 - y0))
            }
        }
    }
}

/// Wigner d-function element `d_{00}^{S}(beta)`.
///
/// For `m = m' = 0` the element reduces to the Legendre polynomial of the
/// cosine of the angle, `P_S(cos beta)`, which is evaluated here with the
/// stable three-term recurrence. The result is clamped to `[-1, 1]` to keep
/// the last-bit rounding of the recurrence from leaking outside the
/// mathematical range.
pub fn wigner_d00(order: u32, beta: f64) -> Result<f64, DomainError> {
    ensure(beta.is_finite(), "beta", beta, "finite")?;
    let x = beta.cos();
    if order == 0 {
        return Ok(1.0);
    }
    let mut p_prev = 1.0; // P_0
    let mut p_curr = x; // P_1
    for n in 1..order {
        let n_f = n as f64;
        let p_next = ((2.0 * n_f + 1.0) * x * p_curr - n_f * p_prev) / (n_f + 1.0);
        p_prev = p_curr;
        p_curr = p_next;
    }
    Ok(p_curr.clamp(-1.0, 1.0))
}

/// Effective composite modulation angle under the default
/// [`BetaPrimeMap::CosineHalfAngle`] rule.
pub fn beta_prime(params: &SystemParams, delta_phi: f64) -> Result<f64, DomainError> {
    params.validate()?;
    BetaPrimeMap::CosineHalfAngle.eval(params.beta, delta_phi)
}

/// Modulation angle implied by a small modulation index.
///
/// Placeholder linearization `beta = m`, valid only in the small-modulation
/// regime where the first-order sideband amplitude is proportional to the
/// drive. Calibrated systems should measure `beta` directly and set it on
/// [`SystemParams`] instead of deriving it from `m`.
pub fn beta_from_modulation_index(m: f64) -> f64 {
    m
}

/// Sideband/carrier photon split at the receiver for one window, using the
/// default phase-mismatch map.
///
/// `alpha` is an extra attenuation factor in `(0, 1]` applied on top of the
/// line and receiver transmittances (an adversarial or diagnostic knob;
/// `alpha = 1` is normal operation). `delta_phi` is the phase mismatch
/// between the transmitter and receiver modulator drives.
pub fn occupancies(
    params: &SystemParams,
    alpha: f64,
    delta_phi: f64,
) -> Result<ModeOccupancy, DomainError> {
    occupancies_with_map(params, alpha, delta_phi, &BetaPrimeMap::CosineHalfAngle)
}

/// Same as [`occupancies`] but with a caller-chosen phase-mismatch map.
pub fn occupancies_with_map(
    params: &SystemParams,
    alpha: f64,
    delta_phi: f64,
    map: &BetaPrimeMap,
) -> Result<ModeOccupancy, DomainError> {
    params.validate()?;
    ensure(
        alpha.is_finite() && alpha > 0.0 && alpha <= 1.0,
        "alpha",
        alpha,
        "within (0, 1]",
    )?;
    let beta_eff = map.eval(params.beta, delta_phi)?;
    let d = wigner_d00(params.interaction_order, beta_eff)?;
    let n_total = alpha * params.mu0 * params.eta_line * params.eta_bob;
    // n_ref first, n_sb as the remainder: the two always sum to n_total
    // exactly, so no energy is created or lost to rounding.
    let n_ref = n_total * d * d;
    let n_sb = n_total - n_ref;
    Ok(ModeOccupancy { n_sb, n_ref })
}

/// Probability that a threshold detector fires on a mode with mean photon
/// number `n_photons`, assuming Poissonian statistics: `1 - exp(-n)`.
///
/// Uses `expm1` so the small-`n` regime keeps full relative precision.
pub fn detection_prob(n_photons: f64) -> Result<f64, DomainError> {
    ensure(
        n_photons.is_finite() && n_photons >= 0.0,
        "n_photons",
        n_photons,
        "finite and >= 0",
    )?;
    Ok(-f64::exp_m1(-n_photons))
}

/// Equivalent continuous-wave optical power of a pulsed photon stream.
///
/// `photons_per_pulse * rep_rate_hz` photons per second, each carrying
/// `h * c / wavelength` joules.
pub fn photons_to_cw_power(
    photons_per_pulse: f64,
    rep_rate_hz: f64,
    wavelength_m: f64,
) -> Result<f64, DomainError> {
    ensure(
        photons_per_pulse.is_finite() && photons_per_pulse >= 0.0,
        "photons_per_pulse",
        photons_per_pulse,
        "finite and >= 0",
    )?;
    ensure(
        rep_rate_hz.is_finite() && rep_rate_hz > 0.0,
        "rep_rate_hz",
        rep_rate_hz,
        "finite and > 0",
    )?;
    Ok(photons_per_pulse * rep_rate_hz * photon_energy_j(wavelength_m)?)
}

/// Inverse of [`photons_to_cw_power`]: mean photons per pulse carried by a
/// continuous-wave power at the given repetition rate and wavelength.
pub fn power_to_photons(
    power_w: f64,
    rep_rate_hz: f64,
    wavelength_m: f64,
) -> Result<f64, DomainError> {
    ensure(
        power_w.is_finite() && power_w >= 0.0,
        "power_w",
        power_w,
        "finite and >= 0",
    )?;
    ensure(
        rep_rate_hz.is_finite() && rep_rate_hz > 0.0,
        "rep_rate_hz",
        rep_rate_hz,
        "finite and > 0",
    )?;
    Ok(power_w / (rep_rate_hz * photon_energy_j(wavelength_m)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    /// Direct evaluation of `d_{00}^{S}` from the factorial sum over
    /// half-angle powers:
    ///
    /// `d_{00}^{S}(beta) = sum_k (-1)^k C(S,k)^2 cos(b/2)^(2S-2k) sin(b/2)^(2k)`
    ///
    /// This is a different route than the production Legendre recurrence,
    /// so agreement is a real cross-check rather than a tautology.
    fn d00_half_angle_sum(order: u32, beta: f64) -> f64 {
        let c = (beta / 2.0).cos();
        let s = (beta / 2.0).sin();
        let mut total = 0.0;
        for k in 0..=order {
            let binom = binomial(order, k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            total += sign
                * binom
                * binom
                * c.powi(2 * (order - k) as i32)
                * s.powi(2 * k as i32);
        }
        total
    }

    fn binomial(n: u32, k: u32) -> f64 {
        let k = k.min(n - k.min(n));
        let mut acc = 1.0;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }

    fn baseline_params() -> SystemParams {
        SystemParams {
            mu0: 4.0,
            modulation_index: 0.05,
            interaction_order: 2,
            beta: 0.05,
            eta_line: 0.5,
            eta_bob: 0.27,
            rep_rate_hz: 1.0e8,
            wavelength_m: 1.55e-6,
            sift_factor: 0.5,
        }
    }

    #[test]
    fn wigner_order_zero_is_unity_everywhere() {
        for beta in [0.0, 0.3, 1.0, std::f64::consts::PI, 6.0] {
            assert_eq!(wigner_d00(0, beta).unwrap(), 1.0);
        }
    }

    #[test]
    fn wigner_at_zero_angle_is_unity_up_to_order_fifty() {
        for order in 0..=50 {
            assert_eq!(wigner_d00(order, 0.0).unwrap(), 1.0, "order {order}");
        }
    }

    #[test]
    fn wigner_order_one_is_cosine() {
        let d = wigner_d00(1, std::f64::consts::FRAC_PI_3).unwrap();
        assert_relative_eq!(d, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn wigner_matches_half_angle_sum_to_order_twenty() {
        // 1000-point grid over a full period.
        for i in 0..1000 {
            let beta = 2.0 * std::f64::consts::PI * (i as f64) / 999.0;
            for order in 0..=20 {
                let got = wigner_d00(order, beta).unwrap();
                let want = d00_half_angle_sum(order, beta);
                assert_abs_diff_eq!(got, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn wigner_stays_bounded_up_to_order_fifty() {
        for i in 0..1000 {
            let beta = 2.0 * std::f64::consts::PI * (i as f64) / 999.0;
            for order in (0..=50).step_by(5) {
                let d = wigner_d00(order, beta).unwrap();
                assert!(d.abs() <= 1.0, "|d| > 1 at order {order}, beta {beta}");
            }
        }
    }

    #[test]
    fn wigner_rejects_non_finite_angle() {
        assert!(wigner_d00(3, f64::NAN).is_err());
        assert!(wigner_d00(3, f64::INFINITY).is_err());
    }

    #[test]
    fn beta_prime_matched_phase_doubles_beta() {
        let params = baseline_params();
        assert_eq!(beta_prime(&params, 0.0).unwrap(), 2.0 * params.beta);
    }

    #[test]
    fn beta_prime_opposite_phase_cancels() {
        let params = baseline_params();
        let bp = beta_prime(&params, std::f64::consts::PI).unwrap();
        assert_abs_diff_eq!(bp, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn beta_prime_table_interpolates_and_clamps() {
        let map = BetaPrimeMap::Table(vec![(0.0, 0.1), (1.0, 0.3)]);
        assert_relative_eq!(map.eval(0.0, 0.5).unwrap(), 0.2, max_relative = 1e-15);
        assert_eq!(map.eval(0.0, -2.0).unwrap(), 0.1);
        assert_eq!(map.eval(0.0, 5.0).unwrap(), 0.3);
    }

    #[test]
    fn beta_prime_table_rejects_empty_and_unsorted() {
        assert!(BetaPrimeMap::Table(vec![]).eval(0.0, 0.0).is_err());
        let unsorted = BetaPrimeMap::Table(vec![(1.0, 0.1), (0.0, 0.2)]);
        assert!(unsorted.eval(0.0, 0.5).is_err());
    }

    #[test]
    fn occupancies_opposite_phase_puts_everything_on_carrier() {
        let params = baseline_params();
        let occ = occupancies(&params, 1.0, std::f64::consts::PI).unwrap();
        let total = params.mu0 * params.eta_line * params.eta_bob;
        assert_abs_diff_eq!(occ.n_sb, 0.0, epsilon = 1e-12 * total);
        assert_relative_eq!(occ.n_ref, total, max_relative = 1e-12);
    }

    #[test]
    fn occupancies_match_hand_value_for_injected_split() {
        // mu0 = 4, eta_line = 0.5, eta_bob = 0.8 and an effective angle
        // chosen so that d = 0.9: the 1.6 photons split 0.304 / 1.296.
        let params = SystemParams {
            mu0: 4.0,
            eta_line: 0.5,
            eta_bob: 0.8,
            ..baseline_params()
        };
        // P_2(x) = 0.9 at x = sqrt(2.8 / 3).
        let beta_eff = (2.8f64 / 3.0).sqrt().acos();
        let map = BetaPrimeMap::Table(vec![(0.0, beta_eff)]);
        let occ = occupancies_with_map(&params, 1.0, 0.0, &map).unwrap();
        assert_relative_eq!(occ.n_sb, 0.304, max_relative = 1e-12);
        assert_relative_eq!(occ.n_ref, 1.296, max_relative = 1e-12);
    }

    #[test]
    fn occupancies_with_zero_carrier_overlap_put_everything_on_sidebands() {
        let params = baseline_params();
        let map = BetaPrimeMap::Table(vec![(0.0, std::f64::consts::FRAC_PI_2)]);
        let params = SystemParams {
            interaction_order: 1,
            ..params
        };
        let occ = occupancies_with_map(&params, 1.0, 0.0, &map).unwrap();
        let total = params.mu0 * params.eta_line * params.eta_bob;
        assert_relative_eq!(occ.n_sb, total, max_relative = 1e-12);
        assert_abs_diff_eq!(occ.n_ref, 0.0, epsilon = 1e-12 * total);
    }

    #[test]
    fn occupancies_reject_alpha_outside_unit_interval() {
        let params = baseline_params();
        assert!(occupancies(&params, 0.0, 0.0).is_err());
        assert!(occupancies(&params, 1.5, 0.0).is_err());
        assert!(occupancies(&params, -0.2, 0.0).is_err());
    }

    #[test]
    fn detection_prob_known_points() {
        assert_eq!(detection_prob(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            detection_prob(1.0).unwrap(),
            0.6321205588285577,
            max_relative = 1e-15
        );
        assert_abs_diff_eq!(detection_prob(1.0e6).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn detection_prob_rejects_negative_occupancy() {
        assert!(detection_prob(-0.1).is_err());
        assert!(detection_prob(f64::NAN).is_err());
    }

    #[test]
    fn single_photon_cw_power_matches_photon_energy() {
        let p = photons_to_cw_power(1.0, 1.0, 1.55e-6).unwrap();
        assert_relative_eq!(p, 1.2815779723541475e-19, max_relative = 1e-12);
    }

    #[test]
    fn power_conversions_reject_non_physical_inputs() {
        assert!(photons_to_cw_power(-1.0, 1.0e8, 1.55e-6).is_err());
        assert!(photons_to_cw_power(1.0, 0.0, 1.55e-6).is_err());
        assert!(photons_to_cw_power(1.0, 1.0e8, 0.0).is_err());
        assert!(power_to_photons(-1.0e-3, 1.0e8, 1.55e-6).is_err());
        assert!(power_to_photons(1.0e-3, -1.0, 1.55e-6).is_err());
        assert!(power_to_photons(1.0e-3, 1.0e8, f64::NAN).is_err());
    }

    #[test]
    fn validate_rejects_each_bad_field() {
        let good = baseline_params();
        let cases: Vec<(&str, SystemParams)> = vec![
            ("mu0", SystemParams { mu0: -1.0, ..good.clone() }),
            (
                "modulation_index",
                SystemParams { modulation_index: 1.5, ..good.clone() },
            ),
            ("beta", SystemParams { beta: f64::NAN, ..good.clone() }),
            ("eta_line", SystemParams { eta_line: 0.0, ..good.clone() }),
            ("eta_bob", SystemParams { eta_bob: 1.2, ..good.clone() }),
            (
                "rep_rate_hz",
                SystemParams { rep_rate_hz: 0.0, ..good.clone() },
            ),
            (
                "wavelength_m",
                SystemParams { wavelength_m: -1.0, ..good.clone() },
            ),
            (
                "sift_factor",
                SystemParams { sift_factor: 2.0, ..good.clone() },
            ),
        ];
        assert!(good.validate().is_ok());
        for (field, params) in cases {
            let err = params.validate().expect_err(field);
            assert_eq!(err.name, field);
        }
    }

    proptest! {
        #[test]
        fn energy_split_conserves_total(
            mu0 in 0.0f64..100.0,
            eta_line in 1.0e-6f64..1.0,
            eta_bob in 1.0e-6f64..1.0,
            alpha in 1.0e-6f64..1.0,
            beta in 0.0f64..3.0,
            delta_phi in -7.0f64..7.0,
            order in 0u32..12,
        ) {
            let params = SystemParams {
                mu0,
                eta_line,
                eta_bob,
                beta,
                interaction_order: order,
                ..baseline_params()
            };
            let occ = occupancies(&params, alpha, delta_phi).unwrap();
            let total = alpha * mu0 * eta_line * eta_bob;
            prop_assert!(occ.n_sb >= 0.0);
            prop_assert!(occ.n_ref >= 0.0);
            let err = (occ.total() - total).abs();
            prop_assert!(err <= 1e-12 * total.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn detection_prob_is_monotone_and_bounded(
            a in 0.0f64..50.0,
            b in 0.0f64..50.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p_lo = detection_prob(lo).unwrap();
            let p_hi = detection_prob(hi).unwrap();
            prop_assert!((0.0..=1.0).contains(&p_lo));
            prop_assert!((0.0..=1.0).contains(&p_hi));
            prop_assert!(p_lo <= p_hi);
        }

        #[test]
        fn photon_power_round_trip(
            photons in 1.0e-3f64..1.0e15,
            rep_rate in 1.0e3f64..1.0e10,
            wavelength in 2.0e-7f64..2.0e-6,
        ) {
            let p = photons_to_cw_power(photons, rep_rate, wavelength).unwrap();
            let back = power_to_photons(p, rep_rate, wavelength).unwrap();
            prop_assert!((back - photons).abs() <= 1e-12 * photons);
        }

        #[test]
        fn wigner_bounded_for_random_inputs(order in 0u32..50, beta in -10.0f64..10.0) {
            let d = wigner_d00(order, beta).unwrap();
            prop_assert!(d.abs() <= 1.0);
        }
    }
}
