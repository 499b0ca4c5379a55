//! Vulnerability registry with countermeasure hardness tracking.
//!
//! Each known implementation vulnerability is a record: which evaluation
//! layers it touches, which hardware it affects, how risky it is, and an
//! append-only history of countermeasure hardness ratings. Ratings can be
//! tagged per component (say, transmitter vs receiver); a record's
//! effective rating is the weakest terminal rating across its components,
//! so a fix on one side never hides an open hole on the other.
//!
//! The registry persists as pretty-printed JSON with a schema version and
//! round-trips byte-identically. Reports come out in text, JSON, or CSV,
//! always ordered by risk (highest first) and then by id, so repeated
//! runs produce identical output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Format version written into every persisted registry.
pub const SCHEMA_VERSION: u32 = 1;

/// Evaluation layer a vulnerability lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
}

impl Layer {
    pub const ALL: [Layer; 7] = [
        Layer::Q1,
        Layer::Q2,
        Layer::Q3,
        Layer::Q4,
        Layer::Q5,
        Layer::Q6,
        Layer::Q7,
    ];

    /// What the layer covers.
    pub fn description(self) -> &'static str {
        match self {
            Layer::Q1 => "quantum optics: sources, modulators, detectors, optical scheme",
            Layer::Q2 => "analog electronics between firmware and the electro-optics",
            Layer::Q3 => "driver and calibration routines controlling electronics and optics",
            Layer::Q4 => "operation cycle scheduling transmission, calibration, and idling",
            Layer::Q5 => "post-processing: sifting, error correction, privacy amplification",
            Layer::Q6 => "interface handing the distilled output to the consuming application",
            Layer::Q7 => "installation and maintenance steps requiring human intervention",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Layer::ALL
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown layer '{s}', expected Q1..Q7"))
    }
}

/// Countermeasure hardness rating, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hardness {
    /// Not rated yet.
    #[serde(rename = "CX")]
    Cx,
    /// Attack known, no effective countermeasure in place.
    C0,
    /// Countermeasure proposed but not implemented or verified.
    C1,
    /// Countermeasure implemented and verified in the laboratory.
    C2,
    /// Countermeasure covered by the security proof or made irrelevant
    /// by design.
    C3,
}

impl Hardness {
    pub const ALL: [Hardness; 5] = [
        Hardness::Cx,
        Hardness::C0,
        Hardness::C1,
        Hardness::C2,
        Hardness::C3,
    ];
}

impl fmt::Display for Hardness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hardness::Cx => write!(f, "CX"),
            Hardness::C0 => write!(f, "C0"),
            Hardness::C1 => write!(f, "C1"),
            Hardness::C2 => write!(f, "C2"),
            Hardness::C3 => write!(f, "C3"),
        }
    }
}

impl FromStr for Hardness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Hardness::ALL
            .into_iter()
            .find(|h| h.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown hardness '{s}', expected CX or C0..C3"))
    }
}

/// Impact rating of an unhandled vulnerability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Risk {
    Low,
    Medium,
    High,
}

impl Risk {
    pub const ALL: [Risk; 3] = [Risk::Low, Risk::Medium, Risk::High];
}

impl fmt::Display for Risk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for Risk {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Risk::ALL
            .into_iter()
            .find(|r| r.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown risk '{s}', expected low, medium or high"))
    }
}

/// One hardness rating event in a record's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardnessEntry {
    /// RFC 3339 timestamp of the rating.
    pub at: String,
    pub level: Hardness,
    pub note: String,
    /// Component the rating applies to; `None` rates the whole system.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
}

/// A registered vulnerability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VulnRecord {
    pub id: String,
    pub title: String,
    pub layers: Vec<Layer>,
    /// Hardware or subsystem the vulnerability targets.
    pub affected: String,
    pub requires_lab_testing: bool,
    pub risk: Risk,
    /// Free-form summary of where the countermeasure work stands.
    pub status: String,
    /// Append-only rating history, oldest first.
    pub history: Vec<HardnessEntry>,
}

impl VulnRecord {
    /// Weakest latest rating across the record's rated components.
    pub fn current_hardness(&self) -> Hardness {
        self.terminal_hardness(true)
    }

    /// Weakest first rating across the record's rated components.
    pub fn initial_hardness(&self) -> Hardness {
        self.terminal_hardness(false)
    }

    fn terminal_hardness(&self, last: bool) -> Hardness {
        let mut per_component: BTreeMap<Option<&str>, Hardness> = BTreeMap::new();
        for entry in &self.history {
            let key = entry.component.as_deref();
            if last {
                per_component.insert(key, entry.level);
            } else {
                per_component.entry(key).or_insert(entry.level);
            }
        }
        per_component
            .into_values()
            .min()
            .unwrap_or(Hardness::Cx)
    }
}

/// Fields needed to open a new record; the rating history starts at CX.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordDraft {
    pub id: String,
    pub title: String,
    pub layers: Vec<Layer>,
    pub affected: String,
    pub requires_lab_testing: bool,
    pub risk: Risk,
    pub status: String,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("record '{0}' already exists")]
    DuplicateId(String),
    #[error("record '{0}' does not exist")]
    UnknownId(String),
    #[error("registry already has records; pass overwrite to replace them")]
    AlreadyPopulated,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("'{0}' is not an RFC 3339 timestamp")]
    BadTimestamp(String),
    #[error("registry file has schema version {found}, this build reads {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The record store. Records are keyed by id; key order is the on-disk
/// order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub schema_version: u32,
    pub records: BTreeMap<String, VulnRecord>,
}

/// Which records a report includes. Empty filter passes everything;
/// `hardness` matches the record's current rating.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportFilter {
    pub layer: Option<Layer>,
    pub hardness: Option<Hardness>,
    pub risk: Option<Risk>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

/// Registry-wide certification verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every record is rated C2 or better.
    Adequate,
    /// At least one record sits below C2.
    Inadequate,
    /// Nothing registered yet.
    Empty,
}

/// One line of a report, derived from a record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub title: String,
    pub layers: Vec<Layer>,
    pub risk: Risk,
    pub hardness_current: Hardness,
    pub hardness_initial: Hardness,
    pub requires_lab_testing: bool,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportDocument {
    verdict: Verdict,
    rows: Vec<ReportRow>,
}

impl Registry {
    pub fn new() -> Self {
        Registry {
            schema_version: SCHEMA_VERSION,
            records: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), RegistryError> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, RegistryError> {
        let registry: Registry = serde_json::from_str(text)?;
        if registry.schema_version != SCHEMA_VERSION {
            return Err(RegistryError::SchemaVersion {
                found: registry.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(registry)
    }

    /// Stable serialization: pretty JSON with a trailing newline. Saving
    /// and re-loading reproduces the bytes exactly.
    pub fn to_json_string(&self) -> Result<String, RegistryError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Opens a new record with an unrated (CX) history entry.
    pub fn create(&mut self, draft: RecordDraft, when: Option<&str>) -> Result<(), RegistryError> {
        if draft.id.is_empty() {
            return Err(RegistryError::InvalidRecord("empty id".into()));
        }
        if self.records.contains_key(&draft.id) {
            return Err(RegistryError::DuplicateId(draft.id));
        }
        if draft.layers.is_empty() {
            return Err(RegistryError::InvalidRecord(format!(
                "record '{}' names no layers",
                draft.id
            )));
        }
        let mut layers = draft.layers;
        layers.sort();
        layers.dedup();
        let record = VulnRecord {
            id: draft.id.clone(),
            title: draft.title,
            layers,
            affected: draft.affected,
            requires_lab_testing: draft.requires_lab_testing,
            risk: draft.risk,
            status: draft.status,
            history: vec![HardnessEntry {
                at: resolve_timestamp(when)?,
                level: Hardness::Cx,
                note: "record created".into(),
                component: None,
            }],
        };
        self.records.insert(draft.id, record);
        Ok(())
    }

    /// Appends a system-wide hardness rating to a record.
    pub fn set_hardness(
        &mut self,
        id: &str,
        level: Hardness,
        note: &str,
        when: Option<&str>,
    ) -> Result<(), RegistryError> {
        self.set_hardness_for(id, level, note, None, when)
    }

    /// Appends a hardness rating scoped to one component of a record.
    pub fn set_hardness_for(
        &mut self,
        id: &str,
        level: Hardness,
        note: &str,
        component: Option<&str>,
        when: Option<&str>,
    ) -> Result<(), RegistryError> {
        let at = resolve_timestamp(when)?;
        let record = self
            .records
            .get_mut(id)
            .ok_or_else(|| RegistryError::UnknownId(id.to_string()))?;
        record.history.push(HardnessEntry {
            at,
            level,
            note: note.to_string(),
            component: component.map(str::to_string),
        });
        Ok(())
    }

    /// Certification verdict over the whole registry, ignoring filters.
    pub fn verdict(&self) -> Verdict {
        if self.records.is_empty() {
            Verdict::Empty
        } else if self
            .records
            .values()
            .any(|r| r.current_hardness() < Hardness::C2)
        {
            Verdict::Inadequate
        } else {
            Verdict::Adequate
        }
    }

    /// Records passing the filter as report rows, highest risk first and
    /// id-ascending within a risk class.
    pub fn rows(&self, filter: &ReportFilter) -> Vec<ReportRow> {
        let mut rows: Vec<ReportRow> = self
            .records
            .values()
            .filter(|r| filter.layer.map_or(true, |l| r.layers.contains(&l)))
            .filter(|r| filter.hardness.map_or(true, |h| r.current_hardness() == h))
            .filter(|r| filter.risk.map_or(true, |k| r.risk == k))
            .map(|r| ReportRow {
                id: r.id.clone(),
                title: r.title.clone(),
                layers: r.layers.clone(),
                risk: r.risk,
                hardness_current: r.current_hardness(),
                hardness_initial: r.initial_hardness(),
                requires_lab_testing: r.requires_lab_testing,
                status: r.status.clone(),
            })
            .collect();
        rows.sort_by(|a, b| b.risk.cmp(&a.risk).then_with(|| a.id.cmp(&b.id)));
        rows
    }

    /// Renders the filtered records in the requested format.
    pub fn report(&self, filter: &ReportFilter, format: ReportFormat) -> String {
        let rows = self.rows(filter);
        match format {
            ReportFormat::Text => self.render_text(&rows),
            ReportFormat::Json => {
                let doc = ReportDocument {
                    verdict: self.verdict(),
                    rows,
                };
                let mut text =
                    serde_json::to_string_pretty(&doc).expect("report rows serialize");
                text.push('\n');
                text
            }
            ReportFormat::Csv => render_csv(&rows),
        }
    }

    fn render_text(&self, rows: &[ReportRow]) -> String {
        let mut out = format!(
            "vulnerability registry report: {} of {} records\n\n",
            rows.len(),
            self.records.len()
        );
        for row in rows {
            let layers = join_layers(&row.layers);
            out.push_str(&format!(
                "[{:<6}] {}  {} -> {}  lab testing: {}  layers: {}\n",
                row.risk,
                row.id,
                row.hardness_initial,
                row.hardness_current,
                if row.requires_lab_testing { "yes" } else { "no" },
                layers
            ));
            out.push_str(&format!("         {}\n", row.title));
            out.push_str(&format!("         status: {}\n", row.status));
        }
        out.push_str(&format!("\n{}\n", verdict_line(self)));
        out
    }
}

/// Human-readable summary of [`Registry::verdict`], with counts.
pub fn verdict_line(registry: &Registry) -> String {
    let total = registry.records.len();
    match registry.verdict() {
        Verdict::Empty => "verdict: no records registered".to_string(),
        Verdict::Inadequate => {
            let below = registry
                .records
                .values()
                .filter(|r| r.current_hardness() < Hardness::C2)
                .count();
            format!(
                "verdict: countermeasure coverage inadequate ({below} of {total} records below C2)"
            )
        }
        Verdict::Adequate => format!(
            "verdict: countermeasure coverage adequate (all {total} records at C2 or above)"
        ),
    }
}

fn join_layers(layers: &[Layer]) -> String {
    layers
        .iter()
        .map(Layer::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "id,title,layers,risk,hardness_current,hardness_initial,requires_lab_testing,status\n",
    );
    for row in rows {
        let fields = [
            row.id.clone(),
            row.title.clone(),
            join_layers(&row.layers),
            row.risk.to_string(),
            row.hardness_current.to_string(),
            row.hardness_initial.to_string(),
            row.requires_lab_testing.to_string(),
            row.status.clone(),
        ];
        let line = fields
            .iter()
            .map(|f| csv_escape(f))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// RFC 4180 quoting: wrap fields holding commas, quotes or newlines and
/// double any embedded quotes.
fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn resolve_timestamp(when: Option<&str>) -> Result<String, RegistryError> {
    match when {
        Some(text) => {
            chrono::DateTime::parse_from_rfc3339(text)
                .map_err(|_| RegistryError::BadTimestamp(text.to_string()))?;
            Ok(text.to_string())
        }
        None => Ok(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
    }
}

/// Nominal dates the baseline history uses so that seeding is
/// reproducible byte for byte.
const BASELINE_FIRST_RATED: &str = "2024-01-15T00:00:00Z";
const BASELINE_LAST_RATED: &str = "2024-09-30T00:00:00Z";

impl Registry {
    /// Installs the baseline record set for a subcarrier-wave system
    /// evaluation. Refuses to touch a populated registry unless
    /// `overwrite` is set, in which case existing records are dropped.
    pub fn seed_baseline(&mut self, overwrite: bool) -> Result<(), RegistryError> {
        if !self.records.is_empty() {
            if !overwrite {
                return Err(RegistryError::AlreadyPopulated);
            }
            self.records.clear();
        }
        for record in baseline_records() {
            self.records.insert(record.id.clone(), record);
        }
        Ok(())
    }
}

fn baseline_records() -> Vec<VulnRecord> {
    use Hardness::{Cx, C0, C2, C3};
    use Layer::{Q1, Q2, Q3, Q4, Q5, Q7};

    let two_step = |initial: Hardness, current: Hardness, first: &str, last: &str| {
        vec![
            entry(BASELINE_FIRST_RATED, initial, first, None),
            entry(BASELINE_LAST_RATED, current, last, None),
        ]
    };

    vec![
        VulnRecord {
            id: "controllable-detectors".into(),
            title: "Detector control by bright-light injection".into(),
            layers: vec![Q1, Q2, Q3, Q4, Q5, Q7],
            affected: "Single-photon detectors".into(),
            requires_lab_testing: true,
            risk: Risk::High,
            status: "Blinding and trigger pulses are caught by the optical power monitor; \
                     the countermeasure held up under laboratory attack replays."
                .into(),
            history: two_step(
                Cx,
                C2,
                "initial assessment, detector response uncharacterized",
                "monitor countermeasure validated in the lab",
            ),
        },
        VulnRecord {
            id: "laser-damage".into(),
            title: "Laser damage of line-facing components".into(),
            layers: vec![Q1, Q3],
            affected: "Transmitter and receiver input optics".into(),
            requires_lab_testing: true,
            risk: Risk::High,
            status: "Input attenuator and filter withstand the tested damage powers; \
                     margins recorded in the link budget."
                .into(),
            history: two_step(
                Cx,
                C2,
                "initial assessment, damage thresholds unknown",
                "damage thresholds measured, budget margin confirmed",
            ),
        },
        VulnRecord {
            id: "trojan-horse".into(),
            title: "Probing of modulator states with injected light".into(),
            layers: vec![Q1],
            affected: "Transmitter and receiver optics".into(),
            requires_lab_testing: true,
            risk: Risk::High,
            status: "Initial risk was rated low for the transmitter (round-trip budget \
                     makes probes impractical) and high for the receiver; receiver-side \
                     countermeasures have since been developed and verified."
                .into(),
            history: vec![
                entry(
                    BASELINE_FIRST_RATED,
                    C2,
                    "round-trip budget above 190 dB",
                    Some("transmitter"),
                ),
                entry(
                    BASELINE_FIRST_RATED,
                    C0,
                    "microwatt probes feasible through the open port",
                    Some("receiver"),
                ),
                entry(
                    BASELINE_LAST_RATED,
                    C2,
                    "budget re-verified after fiber rework",
                    Some("transmitter"),
                ),
                entry(
                    BASELINE_LAST_RATED,
                    C2,
                    "spectral filter installed and measured",
                    Some("receiver"),
                ),
            ],
        },
        VulnRecord {
            id: "lack-of-general-security-proof".into(),
            title: "No proof covering the exact implemented protocol".into(),
            layers: vec![Q1, Q5],
            affected: "Protocol".into(),
            requires_lab_testing: false,
            risk: Risk::High,
            status: "Proof now covers collective attacks on the implemented modulation \
                     scheme, including finite-block corrections."
                .into(),
            history: two_step(
                C0,
                C3,
                "no applicable proof at first review",
                "collective-attack proof published and adopted",
            ),
        },
        VulnRecord {
            id: "manipulation-of-reference-pulse".into(),
            title: "Reference-pulse manipulation by the channel".into(),
            layers: vec![Q1, Q5],
            affected: "Protocol".into(),
            requires_lab_testing: false,
            risk: Risk::High,
            status: "Reference monitoring bound folded into the proof; the tolerable \
                     attenuation frontier is quantified by the scan analysis."
                .into(),
            history: two_step(
                Cx,
                C3,
                "monitoring requirement not yet analyzed",
                "monitoring bound integrated into the proof",
            ),
        },
        VulnRecord {
            id: "time-shift-attack".into(),
            title: "Detection-efficiency mismatch in time".into(),
            layers: vec![Q1, Q2, Q3, Q5],
            affected: "Phase-shift modulators".into(),
            requires_lab_testing: true,
            risk: Risk::Medium,
            status: "Not yet rated; temporal efficiency curves of the detection chain \
                     still need laboratory characterization."
                .into(),
            history: vec![entry(
                BASELINE_FIRST_RATED,
                Cx,
                "initial assessment pending lab access",
                None,
            )],
        },
        VulnRecord {
            id: "privacy-amplification".into(),
            title: "Insufficient privacy amplification".into(),
            layers: vec![Q5],
            affected: "Post-processing".into(),
            requires_lab_testing: false,
            risk: Risk::High,
            status: "Extractor replaced; the composable bound is enforced by the \
                     finite-block key-length computation."
                .into(),
            history: two_step(
                C0,
                C3,
                "legacy extractor lacked a composable bound",
                "two-universal extractor with proof-backed parameters",
            ),
        },
        VulnRecord {
            id: "finite-key-size-effects".into(),
            title: "Key rate overestimated on finite blocks".into(),
            layers: vec![Q5],
            affected: "Protocol".into(),
            requires_lab_testing: false,
            risk: Risk::Low,
            status: "Finite-block correction applied to every reported key length."
                .into(),
            history: two_step(
                C0,
                C3,
                "asymptotic rate reported for finite blocks",
                "finite-block bound in the production pipeline",
            ),
        },
        VulnRecord {
            id: "non-quantum-rng".into(),
            title: "Phase choices from a non-quantum generator".into(),
            layers: vec![Q5],
            affected: "Random number generator".into(),
            requires_lab_testing: false,
            risk: Risk::Low,
            status: "Certified quantum generator integrated for basis and bit choices."
                .into(),
            history: two_step(
                C0,
                C3,
                "PRNG seeded from system entropy in the prototype",
                "quantum generator in the signal path",
            ),
        },
        VulnRecord {
            id: "intersymbol-interference".into(),
            title: "Intersymbol interference in modulator drivers".into(),
            layers: vec![Q1, Q2, Q3],
            affected: "Modulator drivers".into(),
            requires_lab_testing: true,
            risk: Risk::Low,
            status: "Not yet rated; driver bandwidth characterization pending."
                .into(),
            history: vec![entry(
                BASELINE_FIRST_RATED,
                Cx,
                "initial assessment pending driver measurements",
                None,
            )],
        },
    ]
}

fn entry(at: &str, level: Hardness, note: &str, component: Option<&str>) -> HardnessEntry {
    HardnessEntry {
        at: at.to_string(),
        level,
        note: note.to_string(),
        component: component.map(str::to_string),
    }
}
