//! Secret-key rates for the modeled SCW link: asymptotic Devetak-Winter
//! rate against collective attacks and a finite-key length with explicit
//! composable security parameters.
//!
//! The eavesdropper bound is the Holevo quantity of the carrier-overlap
//! channel,
//!
//! ```text
//! chi = h( (1 - exp[-mu0 (1 - d_00^S(2 beta))]) / 2 )
//! ```
//!
//! with `h` the binary entropy. The asymptotic rate per second is
//! `K = nu_s * P_B * max(0, 1 - f_EC h(Q) - chi)` and the finite-key length
//! subtracts the smoothing, parameter-estimation, error-correction, and
//! failure-probability costs from `n (1 - chi)` before flooring to whole
//! bits.

use crate::error::{ensure, DomainError};
use crate::scw::{self, SystemParams};

/// Composable failure-probability budget of one key-distillation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonBudget {
    /// Smoothing parameter of the min-entropy estimate.
    pub eps_s: f64,
    /// Failure probability allowed for error-correction verification.
    pub eps_ec: f64,
    /// Failure probability allowed for privacy amplification.
    pub eps_pa: f64,
}

impl EpsilonBudget {
    /// Checks each parameter lies in `(0, 1)` and that the combined
    /// security and protocol failure probabilities stay below one.
    pub fn validate(&self) -> Result<(), DomainError> {
        for (name, value) in [
            ("eps_s", self.eps_s),
            ("eps_ec", self.eps_ec),
            ("eps_pa", self.eps_pa),
        ] {
            ensure(
                value.is_finite() && value > 0.0 && value < 1.0,
                name,
                value,
                "within (0, 1)",
            )?;
        }
        let eps_sec = self.eps_s + self.eps_pa;
        ensure(eps_sec < 1.0, "eps_s + eps_pa", eps_sec, "below 1")?;
        let eps_qkd = self.eps_s + self.eps_ec + self.eps_pa;
        ensure(
            eps_qkd < 1.0,
            "eps_s + eps_ec + eps_pa",
            eps_qkd,
            "below 1",
        )?;
        Ok(())
    }
}

/// Aggregate failure probabilities implied by an [`EpsilonBudget`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EpsilonTotals {
    /// Secrecy parameter: `eps_s + eps_pa`.
    pub eps_sec: f64,
    /// Whole-protocol parameter: `eps_ec + eps_s + eps_pa`.
    pub eps_qkd: f64,
}

/// Inputs of the asymptotic Devetak-Winter rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    /// Transmission-window rate in hertz.
    pub nu_s: f64,
    /// Probability that a window produces an accepted sifted bit.
    pub p_b: f64,
    /// Quantum bit error rate of the sifted key.
    pub qber: f64,
    /// Error-correction inefficiency relative to the Shannon limit, `>= 1`.
    pub f_ec: f64,
    /// Holevo bound on the eavesdropper information per bit.
    pub chi: f64,
}

impl RateInputs {
    pub fn validate(&self) -> Result<(), DomainError> {
        ensure(
            self.nu_s.is_finite() && self.nu_s > 0.0,
            "nu_s",
            self.nu_s,
            "finite and > 0",
        )?;
        ensure(
            self.p_b.is_finite() && (0.0..=1.0).contains(&self.p_b),
            "p_b",
            self.p_b,
            "within [0, 1]",
        )?;
        ensure(
            self.qber.is_finite() && (0.0..=1.0).contains(&self.qber),
            "qber",
            self.qber,
            "within [0, 1]",
        )?;
        ensure(
            self.f_ec.is_finite() && self.f_ec >= 1.0,
            "f_ec",
            self.f_ec,
            ">= 1",
        )?;
        ensure(
            self.chi.is_finite() && (0.0..=1.0).contains(&self.chi),
            "chi",
            self.chi,
            "within [0, 1]",
        )?;
        Ok(())
    }
}

/// Result of [`asymptotic_rate`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AsymptoticRate {
    /// `max(0, 1 - f_EC h(Q) - chi)`: secret bits per accepted bit.
    pub secret_fraction: f64,
    /// Secret-key rate in bits per second.
    pub bits_per_second: f64,
    /// True when the Devetak-Winter bracket is non-positive, meaning the
    /// protocol must abort rather than distill key.
    pub abort: bool,
}

/// Inputs of [`finite_key_length`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteKeyInputs {
    /// Sifted-key length in bits before parameter estimation.
    pub n: u64,
    /// Bits disclosed for parameter estimation.
    pub k: u64,
    /// Quantum bit error rate estimated on the disclosed sample.
    pub qber: f64,
    /// Holevo bound on the eavesdropper information per bit.
    pub chi: f64,
    /// Error-correction inefficiency, `>= 1`.
    pub f_ec: f64,
    /// Failure-probability budget.
    pub budget: EpsilonBudget,
}

/// Largest sifted-key length accepted by [`finite_key_length`]; above
/// `2^53` bits the integer arithmetic would no longer be exact in `f64`.
pub const MAX_SIFTED_BITS: u64 = 1 << 53;

impl FiniteKeyInputs {
    pub fn validate(&self) -> Result<(), DomainError> {
        ensure(
            self.n >= 1 && self.n <= MAX_SIFTED_BITS,
            "n",
            self.n as f64,
            "within [1, 2^53]",
        )?;
        ensure(self.k <= self.n, "k", self.k as f64, "at most n")?;
        ensure(
            self.qber.is_finite() && (0.0..=1.0).contains(&self.qber),
            "qber",
            self.qber,
            "within [0, 1]",
        )?;
        ensure(
            self.chi.is_finite() && (0.0..=1.0).contains(&self.chi),
            "chi",
            self.chi,
            "within [0, 1]",
        )?;
        ensure(
            self.f_ec.is_finite() && self.f_ec >= 1.0,
            "f_ec",
            self.f_ec,
            ">= 1",
        )?;
        self.budget.validate()
    }
}

/// Itemized costs subtracted from the gross finite-key credit, all in bits.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FiniteKeyTerms {
    /// `n (1 - chi)`.
    pub gross: f64,
    /// Smoothing cost `4 sqrt(n) log2(2 + sqrt 2) sqrt(log2(2 / eps_s^2))`.
    pub smoothing: f64,
    /// Bits disclosed for parameter estimation (`k`).
    pub parameter_estimation: f64,
    /// Error-correction syndrome cost `f_EC h(Q) (n - k)`.
    pub error_correction: f64,
    /// Verification cost `log2(1 / eps_ec)`.
    pub eps_ec_cost: f64,
    /// Privacy-amplification cost `log2(1 / eps_pa)`.
    pub eps_pa_cost: f64,
    /// Constant credit of the bound (+2 bits).
    pub credit: f64,
}

/// Result of [`finite_key_length`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FiniteKeyReport {
    /// Extractable secret-key length in bits, floored to an integer.
    /// Negative values quantify how far the run is from producing key.
    pub length_bits: i64,
    /// True when no key can be extracted (`length_bits <= 0`).
    pub abort: bool,
    /// The individual terms of the bound.
    pub terms: FiniteKeyTerms,
}

impl FiniteKeyReport {
    /// The usable key length: `length_bits` clamped below at zero.
    pub fn secure_length_bits(&self) -> u64 {
        self.length_bits.max(0) as u64
    }
}

/// Binary entropy `h(q) = -q log2 q - (1-q) log2(1-q)`, with the
/// continuity values `h(0) = h(1) = 0`.
pub fn binary_entropy(q: f64) -> Result<f64, DomainError> {
    ensure(
        q.is_finite() && (0.0..=1.0).contains(&q),
        "q",
        q,
        "within [0, 1]",
    )?;
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

/// Holevo bound on the information an eavesdropper can extract per window
/// from the carrier-overlap channel of the modeled system.
///
/// Zero modulation (`beta = 0`) or an empty source (`mu0 = 0`) leak
/// nothing; a bright source with imperfect overlap saturates at one bit.
pub fn holevo_capacity(params: &SystemParams) -> Result<f64, DomainError> {
    params.validate()?;
    let d = scw::wigner_d00(params.interaction_order, 2.0 * params.beta)?;
    let exponent = params.mu0 * (1.0 - d);
    let arg = -f64::exp_m1(-exponent) / 2.0;
    binary_entropy(arg)
}

/// Asymptotic Devetak-Winter secret-key rate.
pub fn asymptotic_rate(inputs: &RateInputs) -> Result<AsymptoticRate, DomainError> {
    inputs.validate()?;
    let bracket = 1.0 - inputs.f_ec * binary_entropy(inputs.qber)? - inputs.chi;
    let abort = bracket <= 0.0;
    let secret_fraction = bracket.max(0.0);
    Ok(AsymptoticRate {
        secret_fraction,
        bits_per_second: inputs.nu_s * inputs.p_b * secret_fraction,
        abort,
    })
}

/// Probability that a transmission window yields an accepted sifted bit:
/// sifting factor times the sideband click probability at matched
/// modulator phases and nominal attenuation.
///
/// Callers with a measured acceptance probability should prefer their
/// value and feed it to [`asymptotic_rate`] directly.
pub fn accepted_bit_prob(params: &SystemParams) -> Result<f64, DomainError> {
    let occ = scw::occupancies(params, 1.0, 0.0)?;
    Ok(params.sift_factor * scw::detection_prob(occ.n_sb)?)
}

/// Finite-key secret length under composable security.
///
/// All costs are reported in [`FiniteKeyTerms`]; the secret length is their
/// floored balance and `abort` is set when it is not positive. The
/// error-correction cost counts total syndrome bits `f_EC h(Q) (n - k)`
/// for the `n - k` bits that survive parameter estimation.
pub fn finite_key_length(inputs: &FiniteKeyInputs) -> Result<FiniteKeyReport, DomainError> {
    inputs.validate()?;
    let n = inputs.n as f64;
    let k = inputs.k as f64;
    let gross = n * (1.0 - inputs.chi);
    // log2(2 / eps^2) = 1 - 2 log2(eps), stable for the whole (0, 1) range.
    let smoothing_log = 1.0 - 2.0 * inputs.budget.eps_s.log2();
    let smoothing = 4.0 * n.sqrt() * (2.0 + std::f64::consts::SQRT_2).log2() * smoothing_log.sqrt();
    let error_correction = inputs.f_ec * binary_entropy(inputs.qber)? * (n - k);
    let eps_ec_cost = -inputs.budget.eps_ec.log2();
    let eps_pa_cost = -inputs.budget.eps_pa.log2();
    let credit = 2.0;
    let raw = gross - smoothing - k - error_correction - eps_ec_cost - eps_pa_cost + credit;
    let length_bits = raw.floor() as i64;
    Ok(FiniteKeyReport {
        length_bits,
        abort: length_bits <= 0,
        terms: FiniteKeyTerms {
            gross,
            smoothing,
            parameter_estimation: k,
            error_correction,
            eps_ec_cost,
            eps_pa_cost,
            credit,
        },
    })
}

/// Aggregate secrecy and protocol failure probabilities.
pub fn epsilon_total(budget: &EpsilonBudget) -> Result<EpsilonTotals, DomainError> {
    budget.validate()?;
    Ok(EpsilonTotals {
        eps_sec: budget.eps_s + budget.eps_pa,
        eps_qkd: budget.eps_s + budget.eps_ec + budget.eps_pa,
    })
}
