//! qkdsecval: command-line front end for the security evaluation toolkit.
//!
//! Every command reads its inputs from a JSON run configuration (see
//! `config.rs`) plus a few flags, and writes one report to stdout in the
//! requested format. Exit code 0 means the analysis ran, even when its
//! verdict is "insecure" or "abort"; nonzero is reserved for input and IO
//! errors (1) and command-line misuse (2).

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qkdsecval_core::attack::{
    blinding_trigger_window, faked_state_simulate_with, reference_manipulation_scan,
    required_reference_power, splitting_attack_leak, usd_filter_success, FakedStateOptions,
    RefScanReport,
};
use qkdsecval_core::keyrate::{
    accepted_bit_prob, asymptotic_rate, epsilon_total, finite_key_length, holevo_capacity,
    FiniteKeyInputs, FiniteKeyTerms, RateInputs,
};
use qkdsecval_core::linkbudget::{one_way_loss_db, tha_required_power, tha_round_trip_db};
use qkdsecval_core::registry::{ReportFilter, ReportFormat};
use qkdsecval_core::{AttackOutcome, ComponentChain, Hardness, Layer, Registry, Risk};

use config::{AttackBlock, RunConfig};

#[derive(Parser)]
#[command(
    name = "qkdsecval",
    version,
    about = "Security evaluation toolkit for subcarrier-wave QKD systems",
    propagate_version = true
)]
struct Cli {
    /// Run configuration file (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output format; csv is available for `registry report` only
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// RNG seed for randomized commands, echoed in their output;
    /// overrides the config's attack.seed (default 0)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Registry store file
    #[arg(long, global = true, env = "QKDSECVAL_STORE", value_name = "PATH")]
    store: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic key rate of the configured system over the configured
    /// channel
    Keyrate,
    /// Finite-block key length with a per-term penalty breakdown
    FiniteKey,
    /// Probe-injection budget through a component chain
    Tha {
        /// Component chain file (JSON)
        #[arg(long, value_name = "PATH")]
        chain: PathBuf,
        /// Component whose reflection returns the probe
        #[arg(long, value_name = "ID")]
        reflector: String,
        /// Mean photons per window allowed back out of the terminal
        #[arg(long, value_name = "F")]
        mu_out: f64,
    },
    /// Eavesdropping models against the configured system
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Vulnerability registry backed by the store file
    #[command(subcommand)]
    Registry(RegistryCommand),
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Unambiguous-discrimination filter success probability
    Usd,
    /// Beam-splitting interception over a lossy line (Monte Carlo)
    Splitting,
    /// Detector blinding: trigger window and reference-power demand
    Blinding,
    /// Faked-state injection against blinded detectors (Monte Carlo)
    FakedState,
    /// Reference-monitoring frontier over receiver attenuation settings
    RefScan,
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Populate the store with the baseline vulnerability table
    Seed {
        /// Replace an already populated store
        #[arg(long)]
        overwrite: bool,
    },
    /// Append a hardness rating to one record's history
    Set {
        #[arg(long, value_name = "ID")]
        id: String,
        /// New rating: CX, C0, C1, C2, or C3
        #[arg(long, value_name = "LEVEL")]
        hardness: String,
        /// Reason for the rating, kept in the audit history
        #[arg(long, value_name = "TEXT")]
        note: String,
        /// Scope the rating to one component of the record
        #[arg(long, value_name = "NAME")]
        component: Option<String>,
    },
    /// Render the registry, optionally filtered
    Report {
        /// Keep records touching this layer (Q1..Q7)
        #[arg(long, value_name = "LAYER")]
        layer: Option<String>,
        /// Keep records whose current rating equals this level
        #[arg(long, value_name = "LEVEL")]
        hardness: Option<String>,
        /// Keep records with this risk (low, medium, high)
        #[arg(long, value_name = "RISK")]
        risk: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Keyrate => cmd_keyrate(cli),
        Command::FiniteKey => cmd_finite_key(cli),
        Command::Tha {
            chain,
            reflector,
            mu_out,
        } => cmd_tha(cli, chain, reflector, *mu_out),
        Command::Attack(which) => cmd_attack(cli, which),
        Command::Registry(action) => cmd_registry(cli, action),
    }
}

fn require_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .context("this command needs a run configuration; pass --config PATH")?;
    RunConfig::load(path)
}

/// Prints `report` as pretty JSON or the prepared text rendering.
fn emit<T: Serialize>(format: Format, report: &T, text: String) -> Result<()> {
    match format {
        Format::Text => write_stdout(&text),
        Format::Json => {
            let mut json = serde_json::to_string_pretty(report)?;
            json.push('\n');
            write_stdout(&json)
        }
        Format::Csv => bail!("csv output is only available for registry report"),
    }
}

/// Writes to stdout, treating a closed pipe as the reader being done.
///
/// Piping into `head` or a pager that quits early closes the read end of the
/// pipe; stopping quietly is the expected behaviour there, not a panic or an
/// error report.
fn write_stdout(chunk: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(chunk.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(err) if err.kind() == io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(err) => Err(err).context("writing to stdout"),
    }
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

#[derive(Serialize)]
struct KeyrateReport {
    chi: f64,
    accepted_bit_prob: f64,
    qber: f64,
    f_ec: f64,
    secret_fraction: f64,
    bits_per_second: f64,
    abort: bool,
}

fn cmd_keyrate(cli: &Cli) -> Result<()> {
    let config = require_config(cli)?;
    let channel = config.channel("keyrate")?;
    let params = config.system.to_params();
    let chi = holevo_capacity(&params)?;
    let p_b = accepted_bit_prob(&params)?;
    let rate = asymptotic_rate(&RateInputs {
        nu_s: params.rep_rate_hz,
        p_b,
        qber: channel.qber,
        f_ec: channel.f_ec,
        chi,
    })?;
    let report = KeyrateReport {
        chi,
        accepted_bit_prob: p_b,
        qber: channel.qber,
        f_ec: channel.f_ec,
        secret_fraction: rate.secret_fraction,
        bits_per_second: rate.bits_per_second,
        abort: rate.abort,
    };
    let text = format!(
        "holevo leak bound chi: {}\n\
         accepted bit probability: {}\n\
         qber: {}  f_ec: {}\n\
         secret fraction: {}\n\
         key rate: {} bits/s\n\
         abort: {}\n",
        report.chi,
        report.accepted_bit_prob,
        report.qber,
        report.f_ec,
        report.secret_fraction,
        report.bits_per_second,
        yes_no(report.abort),
    );
    emit(cli.format, &report, text)
}

#[derive(Serialize)]
struct FiniteKeyCliReport {
    n: u64,
    k: u64,
    qber: f64,
    chi: f64,
    f_ec: f64,
    eps_s: f64,
    eps_ec: f64,
    eps_pa: f64,
    eps_sec: f64,
    eps_qkd: f64,
    length_bits: i64,
    abort: bool,
    terms: FiniteKeyTerms,
}

fn cmd_finite_key(cli: &Cli) -> Result<()> {
    let config = require_config(cli)?;
    let channel = config.channel("finite-key")?;
    let block = config.finite_key("finite-key")?;
    let params = config.system.to_params();
    let chi = holevo_capacity(&params)?;
    let budget = config.epsilon.to_budget();
    let totals = epsilon_total(&budget)?;
    let core_report = finite_key_length(&FiniteKeyInputs {
        n: block.n,
        k: block.k,
        qber: channel.qber,
        chi,
        f_ec: channel.f_ec,
        budget,
    })?;
    let report = FiniteKeyCliReport {
        n: block.n,
        k: block.k,
        qber: channel.qber,
        chi,
        f_ec: channel.f_ec,
        eps_s: budget.eps_s,
        eps_ec: budget.eps_ec,
        eps_pa: budget.eps_pa,
        eps_sec: totals.eps_sec,
        eps_qkd: totals.eps_qkd,
        length_bits: core_report.length_bits,
        abort: core_report.abort,
        terms: core_report.terms,
    };
    let t = &report.terms;
    let text = format!(
        "block: n = {} sifted bits, k = {} spent on estimation\n\
         qber: {}  chi: {}  f_ec: {}\n\
         epsilon: s {}  ec {}  pa {}  (eps_sec {}, eps_qkd {})\n\
         balance:\n  \
         entropy credit n(1-chi):  {}\n  \
         smoothing:               -{}\n  \
         parameter estimation:    -{}\n  \
         error correction:        -{}\n  \
         eps_ec cost:             -{}\n  \
         eps_pa cost:             -{}\n  \
         constant credit:         +{}\n\
         secure length: {} bits\n\
         abort: {}\n",
        report.n,
        report.k,
        report.qber,
        report.chi,
        report.f_ec,
        report.eps_s,
        report.eps_ec,
        report.eps_pa,
        report.eps_sec,
        report.eps_qkd,
        t.gross,
        t.smoothing,
        t.parameter_estimation,
        t.error_correction,
        t.eps_ec_cost,
        t.eps_pa_cost,
        t.credit,
        report.length_bits,
        yes_no(report.abort),
    );
    emit(cli.format, &report, text)
}

#[derive(Serialize)]
struct ThaReport {
    chain: String,
    reflector: String,
    mu_out_max: f64,
    rep_rate_hz: f64,
    wavelength_m: f64,
    one_way_loss_db: f64,
    round_trip_loss_db: f64,
    photons_per_pulse: f64,
    cw_power_w: f64,
}

fn cmd_tha(cli: &Cli, chain_path: &Path, reflector: &str, mu_out: f64) -> Result<()> {
    // Rate and wavelength come from the config when one is given; the
    // fallbacks match the reference system (100 MHz windows at 1550 nm).
    let (rep_rate_hz, wavelength_m) = match cli.config.as_deref() {
        Some(path) => {
            let config = RunConfig::load(path)?;
            (config.system.rep_rate_hz, config.system.wavelength_m)
        }
        None => (1.0e8, 1.55e-6),
    };
    let text = fs::read_to_string(chain_path)
        .with_context(|| format!("reading chain {}", chain_path.display()))?;
    let chain: ComponentChain = serde_json::from_str(&text)
        .with_context(|| format!("parsing chain {}", chain_path.display()))?;
    let one_way = one_way_loss_db(&chain, reflector)?;
    let requirement = tha_required_power(
        tha_round_trip_db(&chain, reflector)?,
        mu_out,
        rep_rate_hz,
        wavelength_m,
    )?;
    let report = ThaReport {
        chain: chain_path.display().to_string(),
        reflector: reflector.to_string(),
        mu_out_max: mu_out,
        rep_rate_hz,
        wavelength_m,
        one_way_loss_db: one_way,
        round_trip_loss_db: requirement.round_trip_loss_db,
        photons_per_pulse: requirement.photons_per_pulse,
        cw_power_w: requirement.cw_power_w,
    };
    let text = format!(
        "chain: {}  reflector: {}\n\
         one-way loss to reflector: {} dB\n\
         round-trip loss: {} dB\n\
         for {} photons back out per window ({} Hz, {} m):\n\
           required injection: {} photons/pulse\n\
           as continuous power: {} W\n",
        report.chain,
        report.reflector,
        report.one_way_loss_db,
        report.round_trip_loss_db,
        report.mu_out_max,
        report.rep_rate_hz,
        report.wavelength_m,
        report.photons_per_pulse,
        report.cw_power_w,
    );
    emit(cli.format, &report, text)
}

#[derive(Serialize)]
struct UsdReport {
    modulation_index: f64,
    success_prob: f64,
}

#[derive(Serialize)]
struct BlindingReport {
    p_blind_w: f64,
    p_th_w: f64,
    p_never_w: f64,
    p_always_w: f64,
    /// `[min, max]` trigger powers giving deterministic control, or null
    /// when the calibration leaves no window.
    trigger_window_w: Option<[f64; 2]>,
    trigger_power_w: f64,
    required_reference_power_w: f64,
    trigger_in_window: bool,
}

fn cmd_attack(cli: &Cli, which: &AttackCommand) -> Result<()> {
    let config = require_config(cli)?;
    let params = config.system.to_params();
    let attack = config.attack();
    match which {
        AttackCommand::Usd => {
            let report = UsdReport {
                modulation_index: params.modulation_index,
                success_prob: usd_filter_success(params.modulation_index)?,
            };
            let text = format!(
                "modulation index: {}\nconclusive probability: {}\n",
                report.modulation_index, report.success_prob,
            );
            emit(cli.format, &report, text)
        }
        AttackCommand::Splitting => {
            let loss = attack
                .line_loss_db
                .context("config has no attack.line_loss_db, required by splitting")?;
            let outcome =
                splitting_attack_leak(&params, loss, attack.n_rounds, resolve_seed(cli, &attack))?;
            emit_outcome(cli.format, &outcome)
        }
        AttackCommand::Blinding => {
            let blinding = attack.blinding("blinding")?;
            let window = blinding_trigger_window(&blinding)?;
            let trigger = attack
                .trigger_power_w
                .or(window.map(|w| w.min_w))
                .context("no trigger power: config sets none and the calibration leaves no window")?;
            let report = BlindingReport {
                p_blind_w: blinding.p_blind_w,
                p_th_w: blinding.p_th_w,
                p_never_w: blinding.p_never_w,
                p_always_w: blinding.p_always_w,
                trigger_window_w: window.map(|w| [w.min_w, w.max_w]),
                trigger_power_w: trigger,
                required_reference_power_w: required_reference_power(
                    trigger,
                    params.modulation_index,
                )?,
                trigger_in_window: window
                    .is_some_and(|w| trigger >= w.min_w && trigger <= w.max_w),
            };
            let window_text = match report.trigger_window_w {
                Some([lo, hi]) => format!("[{lo}, {hi}] W"),
                None => "none (calibration admits no deterministic control)".to_string(),
            };
            let text = format!(
                "blinding power: {} W  threshold: {} W\n\
                 never/always click powers: {} W / {} W\n\
                 trigger window: {}\n\
                 trigger power: {} W (in window: {})\n\
                 required reference power: {} W\n",
                report.p_blind_w,
                report.p_th_w,
                report.p_never_w,
                report.p_always_w,
                window_text,
                report.trigger_power_w,
                yes_no(report.trigger_in_window),
                report.required_reference_power_w,
            );
            emit(cli.format, &report, text)
        }
        AttackCommand::FakedState => {
            let blinding = attack.blinding("faked-state")?;
            let trigger = attack
                .trigger_power_w
                .or(blinding_trigger_window(&blinding)?.map(|w| w.min_w))
                .context("no trigger power: config sets none and the calibration leaves no window")?;
            let options = FakedStateOptions {
                conclusive_prob: attack.conclusive_prob,
                monitor_reference: attack.monitor_reference,
                ref_click_acceptance: attack.ref_click_acceptance,
            };
            let outcome = faked_state_simulate_with(
                &params,
                &blinding,
                trigger,
                attack.n_rounds,
                resolve_seed(cli, &attack),
                &options,
            )?;
            emit_outcome(cli.format, &outcome)
        }
        AttackCommand::RefScan => {
            let grid = attack.alpha_grid.clone().unwrap_or_else(default_alpha_grid);
            let report = reference_manipulation_scan(&params, &grid, attack.ref_tolerance)?;
            emit(cli.format, &report, render_ref_scan(&report))
        }
    }
}

fn resolve_seed(cli: &Cli, attack: &AttackBlock) -> u64 {
    cli.seed.or(attack.seed).unwrap_or(0)
}

fn default_alpha_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

fn emit_outcome(format: Format, outcome: &AttackOutcome) -> Result<()> {
    let ref_line = match outcome.ref_click_rate {
        Some(rate) => format!("reference click rate: {rate}\n"),
        None => String::new(),
    };
    let analytic_ref = match outcome.analytic.ref_click_rate {
        Some(rate) => format!(", reference {rate}"),
        None => String::new(),
    };
    let text = format!(
        "detection rate: {}\n\
         qber: {}\n\
         leak fraction: {}\n\
         {}feasible: {}\n\
         seed: {}  rounds: {}  accepted: {}\n\
         analytic expectation: detection {}, qber {}, leak {}{}\n\
         notes: {}\n",
        outcome.detection_rate,
        outcome.qber,
        outcome.leak_fraction,
        ref_line,
        yes_no(outcome.feasible),
        outcome.seed,
        outcome.rounds,
        outcome.accepted,
        outcome.analytic.detection_rate,
        outcome.analytic.qber,
        outcome.analytic.leak_fraction,
        analytic_ref,
        outcome.notes,
    );
    emit(format, outcome, text)
}

fn render_ref_scan(report: &RefScanReport) -> String {
    let mut text = format!(
        "baseline detection: sidebands {}, reference {}\n",
        report.baseline_p_det_sb, report.baseline_p_det_ref,
    );
    match report.frontier_alpha {
        Some(alpha) => text.push_str(&format!(
            "frontier attenuation: {alpha} (reference counts within {} of baseline)\n",
            report.rel_tolerance
        )),
        None => text.push_str("frontier attenuation: none within the grid\n"),
    }
    match report.sideband_suppression {
        Some(s) => text.push_str(&format!("sideband suppression at frontier: {s}\n")),
        None => text.push_str("sideband suppression at frontier: n/a\n"),
    }
    text.push_str("alpha  p_det_sb  p_det_ref\n");
    for point in &report.points {
        text.push_str(&format!(
            "{}  {}  {}\n",
            point.alpha, point.p_det_sb, point.p_det_ref
        ));
    }
    text
}

#[derive(Serialize)]
struct SeedReport {
    action: &'static str,
    store: String,
    records: u64,
    overwrote: bool,
}

#[derive(Serialize)]
struct SetReport {
    action: &'static str,
    id: String,
    hardness: Hardness,
    component: Option<String>,
    note: String,
    at: String,
}

fn cmd_registry(cli: &Cli, action: &RegistryCommand) -> Result<()> {
    let store = cli
        .store
        .as_deref()
        .context("no registry store configured; pass --store PATH or set QKDSECVAL_STORE")?;
    match action {
        RegistryCommand::Seed { overwrite } => {
            let mut registry = if store.exists() {
                Registry::load(store)?
            } else {
                Registry::new()
            };
            registry.seed_baseline(*overwrite)?;
            registry.save(store)?;
            let report = SeedReport {
                action: "seed",
                store: store.display().to_string(),
                records: registry.records.len() as u64,
                overwrote: *overwrite,
            };
            let text = format!(
                "seeded {} baseline records into {}\n",
                report.records, report.store
            );
            emit(cli.format, &report, text)
        }
        RegistryCommand::Set {
            id,
            hardness,
            note,
            component,
        } => {
            let level: Hardness = hardness.parse().map_err(anyhow::Error::msg)?;
            let mut registry = Registry::load(store)?;
            registry.set_hardness_for(id, level, note, component.as_deref(), None)?;
            registry.save(store)?;
            let at = registry
                .records
                .get(id)
                .and_then(|record| record.history.last())
                .map(|entry| entry.at.clone())
                .unwrap_or_default();
            let report = SetReport {
                action: "set",
                id: id.clone(),
                hardness: level,
                component: component.clone(),
                note: note.clone(),
                at,
            };
            let scope = match &report.component {
                Some(name) => format!(" (component {name})"),
                None => String::new(),
            };
            let text = format!(
                "recorded {} for {}{} at {}\n",
                report.hardness, report.id, scope, report.at
            );
            emit(cli.format, &report, text)
        }
        RegistryCommand::Report {
            layer,
            hardness,
            risk,
        } => {
            let filter = ReportFilter {
                layer: parse_filter::<Layer>(layer.as_deref())?,
                hardness: parse_filter::<Hardness>(hardness.as_deref())?,
                risk: parse_filter::<Risk>(risk.as_deref())?,
            };
            let registry = Registry::load(store)?;
            let format = match cli.format {
                Format::Text => ReportFormat::Text,
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            write_stdout(&registry.report(&filter, format))
        }
    }
}

fn parse_filter<T>(value: Option<&str>) -> Result<Option<T>>
where
    T: std::str::FromStr<Err = String>,
{
    value
        .map(|s| s.parse::<T>().map_err(anyhow::Error::msg))
        .transpose()
}
