//! Optical loss budgets for probing attacks on the terminals.
//!
//! A terminal is modeled as an ordered chain of passive components seen
//! from its external fiber port. Light injected from the line traverses
//! insertion losses in order, may bounce off a reflective surface inside
//! a component (its return loss), and exits through the same chain. The
//! round-trip budget bounds how much probe light an attacker must inject
//! to read out a modulator setting, and a what-if on a weakened
//! attenuator shows how much margin the budget has against component
//! damage.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, DomainError};
use crate::scw::{self, SystemParams};

/// One passive element of a terminal's optical chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    /// Short unique name, e.g. `"voa"` or `"psm"`.
    pub id: String,
    /// Forward insertion loss in dB.
    #[serde(rename = "insertion_loss_dB")]
    pub insertion_loss_db: f64,
    /// Return loss of the component's reflective surface in dB, if the
    /// component reflects at all.
    #[serde(rename = "return_loss_dB", default, skip_serializing_if = "Option::is_none")]
    pub return_loss_db: Option<f64>,
    /// Insertion loss in the reverse direction, for non-reciprocal
    /// elements such as isolators. Defaults to the forward value.
    #[serde(rename = "backward_loss_dB", default, skip_serializing_if = "Option::is_none")]
    pub backward_loss_db: Option<f64>,
}

/// A terminal's component chain, ordered from the external port inward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentChain {
    pub components: Vec<ComponentSpec>,
    /// Loss of a single fiber connector in dB.
    #[serde(rename = "connector_loss_dB")]
    pub connector_loss_db: f64,
    /// Connectors traversed on one pass through the chain.
    pub connector_count_one_way: u32,
}

/// Failures specific to chain lookups; parameter domain violations pass
/// through unchanged.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("component '{0}' is not in the chain")]
    UnknownComponent(String),
    #[error("component '{0}' has no return loss to reflect from")]
    NotAReflector(String),
    #[error("invalid chain: {0}")]
    Invalid(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl ComponentChain {
    pub fn validate(&self) -> Result<(), ChainError> {
        ensure(
            !self.components.is_empty(),
            "components",
            self.components.len() as f64,
            "at least one component",
        )?;
        for c in &self.components {
            if c.id.is_empty() {
                return Err(ChainError::Invalid("component with empty id".into()));
            }
            if self.components.iter().filter(|o| o.id == c.id).count() > 1 {
                return Err(ChainError::Invalid(format!(
                    "duplicate component id '{}'",
                    c.id
                )));
            }
            ensure(
                c.insertion_loss_db.is_finite() && c.insertion_loss_db >= 0.0,
                "insertion_loss_db",
                c.insertion_loss_db,
                "finite and >= 0",
            )?;
            for loss in [c.return_loss_db, c.backward_loss_db].into_iter().flatten() {
                ensure(
                    loss.is_finite() && loss >= 0.0,
                    "loss_db",
                    loss,
                    "finite and >= 0",
                )?;
            }
        }
        ensure(
            self.connector_loss_db.is_finite() && self.connector_loss_db >= 0.0,
            "connector_loss_db",
            self.connector_loss_db,
            "finite and >= 0",
        )?;
        Ok(())
    }

    fn index_of(&self, id: &str) -> Result<usize, ChainError> {
        self.components
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| ChainError::UnknownComponent(id.to_string()))
    }

    fn connector_loss_total(&self) -> f64 {
        self.connector_loss_db * f64::from(self.connector_count_one_way)
    }
}

/// Loss from the external port up to (not through) the named component,
/// plus all one-way connector losses.
pub fn one_way_loss_db(chain: &ComponentChain, up_to_id: &str) -> Result<f64, ChainError> {
    chain.validate()?;
    let idx = chain.index_of(up_to_id)?;
    let insertion: f64 = chain.components[..idx]
        .iter()
        .map(|c| c.insertion_loss_db)
        .sum();
    Ok(insertion + chain.connector_loss_total())
}

/// Round-trip loss of a probe entering the external port, reflecting off
/// `reflector_id`, and exiting the same port. The return pass uses each
/// component's backward loss where it differs from the forward one.
pub fn tha_round_trip_db(chain: &ComponentChain, reflector_id: &str) -> Result<f64, ChainError> {
    chain.validate()?;
    let idx = chain.index_of(reflector_id)?;
    let reflector = &chain.components[idx];
    let return_loss = reflector
        .return_loss_db
        .ok_or_else(|| ChainError::NotAReflector(reflector_id.to_string()))?;
    let forward: f64 = chain.components[..idx]
        .iter()
        .map(|c| c.insertion_loss_db)
        .sum();
    let backward: f64 = chain.components[..idx]
        .iter()
        .map(|c| c.backward_loss_db.unwrap_or(c.insertion_loss_db))
        .sum();
    Ok(forward + backward + return_loss + 2.0 * chain.connector_loss_total())
}

/// Probe budget for reading a modulator through a given round-trip loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InjectionRequirement {
    pub round_trip_loss_db: f64,
    /// Mean photons per window the attacker must inject so that
    /// `mu_out_max` photons come back out.
    pub photons_per_pulse: f64,
    /// The same budget as continuous optical power at the window rate.
    pub cw_power_w: f64,
}

/// Injected power needed so the probe light returning from the terminal
/// still carries `mu_out_max` photons per window on average.
pub fn tha_required_power(
    round_trip_loss_db: f64,
    mu_out_max: f64,
    rep_rate_hz: f64,
    wavelength_m: f64,
) -> Result<InjectionRequirement, DomainError> {
    ensure(
        round_trip_loss_db.is_finite() && round_trip_loss_db >= 0.0,
        "round_trip_loss_db",
        round_trip_loss_db,
        "finite and >= 0",
    )?;
    ensure(
        mu_out_max.is_finite() && mu_out_max > 0.0,
        "mu_out_max",
        mu_out_max,
        "finite and > 0",
    )?;
    let photons_per_pulse = mu_out_max * 10f64.powf(round_trip_loss_db / 10.0);
    let cw_power_w = scw::photons_to_cw_power(photons_per_pulse, rep_rate_hz, wavelength_m)?;
    Ok(InjectionRequirement {
        round_trip_loss_db,
        photons_per_pulse,
        cw_power_w,
    })
}

/// Consequences of an attenuator weakened by laser damage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaserDamageReport {
    pub component_id: String,
    /// Loss reduction the attacker attempted, in dB.
    pub delta_requested_db: f64,
    /// Loss reduction actually applied; a component cannot drop below
    /// zero insertion loss.
    pub delta_applied_db: f64,
    pub clamped: bool,
    /// Mean sideband photons leaving the terminal before the damage.
    pub mu_sb_before: f64,
    pub mu_sb_after: f64,
    /// Largest sideband photon number the security analysis covers.
    pub mu_sb_max: f64,
    pub insecure: bool,
    /// Probe round trip through the first reflector behind the damaged
    /// component, before and after; `None` when nothing reflects there.
    pub round_trip_before_db: Option<f64>,
    pub round_trip_after_db: Option<f64>,
}

/// What happens if `component_id`'s insertion loss drops by `delta_db`.
///
/// The outgoing sideband intensity scales up by the lost attenuation and
/// is compared against `mu_sb_max`; probe round trips through reflectors
/// behind the component improve by twice the applied delta.
pub fn laser_damage_whatif(
    chain: &ComponentChain,
    component_id: &str,
    delta_db: f64,
    params: &SystemParams,
    mu_sb_max: f64,
) -> Result<LaserDamageReport, ChainError> {
    chain.validate()?;
    params.validate()?;
    ensure(
        delta_db.is_finite() && delta_db >= 0.0,
        "delta_db",
        delta_db,
        "finite and >= 0",
    )?;
    ensure(
        mu_sb_max.is_finite() && mu_sb_max > 0.0,
        "mu_sb_max",
        mu_sb_max,
        "finite and > 0",
    )?;
    let idx = chain.index_of(component_id)?;
    let insertion = chain.components[idx].insertion_loss_db;
    let clamped = delta_db > insertion;
    let delta_applied_db = if clamped { insertion } else { delta_db };

    let d = scw::wigner_d00(params.interaction_order, scw::beta_prime(params, 0.0)?)?;
    let mu_sb_before = params.mu0 * (1.0 - d * d);
    let mu_sb_after = mu_sb_before * 10f64.powf(delta_applied_db / 10.0);

    let reflector_behind = chain.components[idx + 1..]
        .iter()
        .find(|c| c.return_loss_db.is_some());
    let round_trip_before_db = match reflector_behind {
        Some(c) => Some(tha_round_trip_db(chain, &c.id)?),
        None => None,
    };
    let round_trip_after_db = round_trip_before_db.map(|rt| rt - 2.0 * delta_applied_db);

    Ok(LaserDamageReport {
        component_id: component_id.to_string(),
        delta_requested_db: delta_db,
        delta_applied_db,
        clamped,
        mu_sb_before,
        mu_sb_after,
        mu_sb_max,
        insecure: mu_sb_after > mu_sb_max,
        round_trip_before_db,
        round_trip_after_db,
    })
}

/// Power transmittance of a loss figure: `10^(-db/10)`.
pub fn db_to_transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Loss figure of a power transmittance, for `t > 0`.
pub fn transmittance_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}
