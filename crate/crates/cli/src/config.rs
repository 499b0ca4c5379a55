//! Run-configuration file: one versioned JSON document per evaluation.
//!
//! Every quantity key carries an explicit SI unit suffix (`_w`, `_hz`,
//! `_m`, `_db`, `_rad`) so a milliwatt figure pasted where watts belong is
//! visible in review instead of silently wrong. Unknown keys are rejected
//! everywhere; a security tool should fail closed on a typo.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use qkdsecval_core::attack::BlindingParams;
use qkdsecval_core::keyrate::EpsilonBudget;
use qkdsecval_core::SystemParams;

/// Config format revision this build reads.
pub const CONFIG_VERSION: u32 = 1;

/// Top-level run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must equal [`CONFIG_VERSION`].
    pub version: u32,
    pub system: SystemBlock,
    pub channel: Option<ChannelBlock>,
    #[serde(default)]
    pub epsilon: EpsilonBlock,
    pub finite_key: Option<FiniteKeyBlock>,
    pub attack: Option<AttackBlock>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse_str(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text)?;
        if config.version != CONFIG_VERSION {
            bail!(
                "config version {} not supported, this build reads version {}",
                config.version,
                CONFIG_VERSION
            );
        }
        Ok(config)
    }

    /// Channel block, or an error naming the command that needs it.
    pub fn channel(&self, needed_by: &str) -> Result<ChannelBlock> {
        self.channel
            .with_context(|| format!("config has no channel block, required by {needed_by}"))
    }

    pub fn finite_key(&self, needed_by: &str) -> Result<FiniteKeyBlock> {
        self.finite_key
            .with_context(|| format!("config has no finite_key block, required by {needed_by}"))
    }

    pub fn attack(&self) -> AttackBlock {
        self.attack.clone().unwrap_or_default()
    }
}

/// Source, modulator, channel, and receiver figures.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    /// Mean photon number of the carrier at the transmitter output.
    pub mu0: f64,
    /// Sideband-to-carrier amplitude ratio of the modulator.
    pub modulation_index: f64,
    /// Number of interaction passes through the modulator crystal.
    pub interaction_order: u32,
    /// Modulation depth angle in radians.
    pub beta_rad: f64,
    /// Line transmittance, in `(0, 1]`.
    pub eta_line: f64,
    /// Receiver optical transmittance, in `(0, 1]`.
    pub eta_bob: f64,
    /// Window repetition rate in hertz.
    pub rep_rate_hz: f64,
    /// Carrier vacuum wavelength in meters.
    pub wavelength_m: f64,
    /// Fraction of detected windows kept after sifting.
    pub sift_factor: f64,
}

impl SystemBlock {
    pub fn to_params(self) -> SystemParams {
        SystemParams {
            mu0: self.mu0,
            modulation_index: self.modulation_index,
            interaction_order: self.interaction_order,
            beta: self.beta_rad,
            eta_line: self.eta_line,
            eta_bob: self.eta_bob,
            rep_rate_hz: self.rep_rate_hz,
            wavelength_m: self.wavelength_m,
            sift_factor: self.sift_factor,
        }
    }
}

/// Observed channel figures the rate calculations consume.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBlock {
    /// Quantum bit error rate of the sifted key.
    pub qber: f64,
    /// Error-correction inefficiency; 1.0 is the Shannon limit.
    pub f_ec: f64,
}

/// Failure-probability budget. Every field defaults to 1e-9 when the
/// block or the field is omitted.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonBlock {
    pub eps_s: f64,
    pub eps_ec: f64,
    pub eps_pa: f64,
}

impl Default for EpsilonBlock {
    fn default() -> Self {
        EpsilonBlock {
            eps_s: 1e-9,
            eps_ec: 1e-9,
            eps_pa: 1e-9,
        }
    }
}

impl EpsilonBlock {
    pub fn to_budget(self) -> EpsilonBudget {
        EpsilonBudget {
            eps_s: self.eps_s,
            eps_ec: self.eps_ec,
            eps_pa: self.eps_pa,
        }
    }
}

/// Block sizes for the finite-key bound.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteKeyBlock {
    /// Sifted key length in bits.
    pub n: u64,
    /// Bits disclosed for parameter estimation.
    pub k: u64,
}

/// Attack-model settings shared by the `attack` subcommands.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackBlock {
    /// Blinded-detector calibration, needed by `blinding` and
    /// `faked-state`.
    pub blinding: Option<BlindingBlock>,
    /// Trigger pulse power in watts; defaults to the lower edge of the
    /// trigger window.
    pub trigger_power_w: Option<f64>,
    /// Line loss available to a splitting attacker, in dB.
    pub line_loss_db: Option<f64>,
    /// Monte-Carlo windows per run.
    #[serde(default = "default_rounds")]
    pub n_rounds: u64,
    /// Stream seed; the `--seed` flag takes precedence.
    pub seed: Option<u64>,
    /// Receiver attenuation grid for the reference scan; defaults to
    /// twenty equal steps from 0.05 to 1.0.
    pub alpha_grid: Option<Vec<f64>>,
    /// Relative shortfall in reference counts the receiver tolerates.
    #[serde(default = "default_ref_tolerance")]
    pub ref_tolerance: f64,
    /// Whether the simulated receiver watches its reference monitor.
    #[serde(default = "default_monitor")]
    pub monitor_reference: bool,
    /// Smallest reference click rate the receiver accepts as normal.
    #[serde(default = "default_ref_acceptance")]
    pub ref_click_acceptance: f64,
    /// Override of the conclusive-measurement probability; defaults to
    /// the discrimination-filter bound for the system's modulation index.
    pub conclusive_prob: Option<f64>,
}

impl Default for AttackBlock {
    fn default() -> Self {
        AttackBlock {
            blinding: None,
            trigger_power_w: None,
            line_loss_db: None,
            n_rounds: default_rounds(),
            seed: None,
            alpha_grid: None,
            ref_tolerance: default_ref_tolerance(),
            monitor_reference: default_monitor(),
            ref_click_acceptance: default_ref_acceptance(),
            conclusive_prob: None,
        }
    }
}

impl AttackBlock {
    pub fn blinding(&self, needed_by: &str) -> Result<BlindingParams> {
        Ok(self
            .blinding
            .with_context(|| format!("config has no attack.blinding block, required by {needed_by}"))?
            .to_params())
    }
}

fn default_rounds() -> u64 {
    1_000_000
}

fn default_ref_tolerance() -> f64 {
    0.01
}

fn default_monitor() -> bool {
    true
}

fn default_ref_acceptance() -> f64 {
    0.9
}

/// Blinded-detector calibration, all powers in watts.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlindingBlock {
    pub p_blind_w: f64,
    pub p_th_w: f64,
    pub p_never_w: f64,
    pub p_always_w: f64,
}

impl BlindingBlock {
    pub fn to_params(self) -> BlindingParams {
        BlindingParams {
            p_blind_w: self.p_blind_w,
            p_th_w: self.p_th_w,
            p_never_w: self.p_never_w,
            p_always_w: self.p_always_w,
        }
    }
}
