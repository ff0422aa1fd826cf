//! Experiment configuration, loss sweeps, reference comparison and output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linkmodel::{ChannelModel, DetectorModel, DEFAULT_ALPHA_DB_PER_KM, PRESET_NAMES};
use crate::protocols::{
    analytic_expectations, run_session_seeded, DetectedPorts, DpsSecurity, ProtocolConfig, ProtocolKind,
};
use crate::rng::derive_seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_PULSES_PER_POINT: u64 = 10_000_000;
pub const MIN_PULSES_PER_POINT: u64 = 1_000;

/// Bundled reference values for the reported operating points.
pub const REFERENCE_POINTS_JSON: &str = include_str!("../data/reference_points.json");

/// Where a configuration value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    /// A value stated for the reference experiment.
    Reported,
    /// Fitted once so the model reproduces a reported measurement.
    Calibrated,
    /// A modelling convention or neutral default.
    Convention,
    /// Supplied by the user.
    User,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub tag: SourceTag,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct OutputPaths {
    pub table: Option<String>,
    pub report: Option<String>,
}

/// Fully validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub protocol: ProtocolConfig,
    /// Channel loss of every sweep point, ascending.
    pub loss_db: Vec<f64>,
    pub receiver_loss_db: f64,
    pub detector: DetectorModel,
    pub pulses_per_point: u64,
    pub seed: u64,
    pub outputs: OutputPaths,
    #[serde(skip)]
    pub provenance: BTreeMap<String, Provenance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    protocol: RawProtocol,
    channel: RawChannel,
    detector: RawDetector,
    pulses_per_point: Option<u64>,
    seed: Option<u64>,
    #[serde(default)]
    outputs: OutputPaths,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    kind: ProtocolKind,
    clock_hz: Option<f64>,
    mu_signal: Option<f64>,
    mu_decoy: Option<f64>,
    mu_vacuum: Option<f64>,
    p_signal: Option<f64>,
    p_decoy: Option<f64>,
    p_vacuum: Option<f64>,
    basis_prob_x: Option<f64>,
    f_ec: Option<f64>,
    sigma_phi: Option<f64>,
    temporal_efficiency: Option<f64>,
    receiver_visibility: Option<f64>,
    dps_security: Option<DpsSecurity>,
    detected_ports: Option<DetectedPorts>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    loss_db: Option<Vec<f64>>,
    length_km: Option<Vec<f64>>,
    alpha_db_per_km: Option<f64>,
    receiver_loss_db: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDetector {
    Preset(String),
    Spec(RawDetectorSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetectorSpec {
    preset: Option<String>,
    efficiency: Option<f64>,
    dark_rate_hz: Option<f64>,
    gate_rate_hz: Option<f64>,
    label: Option<String>,
}

fn protocol_provenance(kind: ProtocolKind, field: &str) -> Provenance {
    use SourceTag::*;
    let (tag, note) = match (kind, field) {
        (ProtocolKind::Dps, "clock_hz") => (Reported, "DPS pulse clock, 2 GHz"),
        (ProtocolKind::Bb84Decoy, "clock_hz") => (Reported, "BB84 pair clock, 1 GHz"),
        (ProtocolKind::Dps, "mu_signal") => (
            Calibrated,
            "DPS mean photon number; not reported, fitted to the 20 dB rate",
        ),
        (ProtocolKind::Bb84Decoy, "mu_signal") => (Reported, "signal intensity 0.5 photon per pair"),
        (ProtocolKind::Bb84Decoy, "mu_decoy") => (Reported, "decoy intensity 0.125"),
        (ProtocolKind::Bb84Decoy, "p_signal") => (Reported, "signal emission probability 14/16"),
        (ProtocolKind::Bb84Decoy, "p_decoy") => (Reported, "decoy emission probability 1/16"),
        (ProtocolKind::Bb84Decoy, "p_vacuum") => (Reported, "vacuum emission probability 1/16"),
        (ProtocolKind::Dps, "mu_decoy" | "p_signal" | "p_decoy" | "p_vacuum") => {
            (Convention, "DPS uses a single intensity class")
        }
        (ProtocolKind::Dps, "basis_prob_x") => (Convention, "DPS has a single measurement basis"),
        (_, "mu_vacuum") => (Convention, "vacuum class carries no light"),
        (_, "basis_prob_x") => (Convention, "symmetric active basis choice"),
        (_, "f_ec") => (Reported, "error-correction efficiency 90 %, f = 1/0.9"),
        (_, "sigma_phi") => (Calibrated, "locking phase noise matching 98.3 % CW fringe visibility"),
        (ProtocolKind::Dps, "temporal_efficiency") => (Convention, "every DPS slot interferes"),
        (_, "temporal_efficiency") => (Convention, "only the central time bin of a pair interferes"),
        (_, "receiver_visibility") => (Calibrated, "receiver AMZI contrast, fitted to the 20 dB error rates"),
        _ => (Convention, "default"),
    };
    Provenance {
        tag,
        note: note.to_string(),
    }
}

fn detector_provenance(preset: &str, field: &str) -> Provenance {
    use SourceTag::*;
    let (tag, note) = match (preset, field) {
        ("snspd", "efficiency") => (Reported, "SNSPD efficiency 80 %"),
        ("snspd", "dark_rate_hz") => (Reported, "SNSPD dark count rate 90 Hz"),
        ("snspd", "gate_rate_hz") => (Convention, "free-running detector binned at the 2 GHz slot rate"),
        ("apd", "efficiency") => (Reported, "gated APD efficiency 18 %"),
        ("apd", "dark_rate_hz") => (Reported, "gated APD dark count rate 25 kHz"),
        ("apd", "gate_rate_hz") => (Calibrated, "APD gate rate 1 GHz; not reported"),
        _ => (Convention, "default"),
    };
    Provenance {
        tag,
        note: note.to_string(),
    }
}

fn user(note: &str) -> Provenance {
    Provenance {
        tag: SourceTag::User,
        note: note.to_string(),
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn config_error(text: &str, field: &str, message: impl Into<String>) -> Error {
    let leaf = field.rsplit('.').next().unwrap_or(field);
    let message = match line_of(text, leaf) {
        Some(line) => format!("{} (line {line})", message.into()),
        None => message.into(),
    };
    Error::Config {
        field: field.to_string(),
        message,
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parse and validate a JSON experiment description, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config {
        field: "<document>".into(),
        message: format!("{e}"),
    })?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(config_error(
            text,
            "schema_version",
            format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                raw.schema_version
            ),
        ));
    }
    let mut prov = BTreeMap::new();

    let rp = raw.protocol;
    let kind = rp.kind;
    let mut protocol = ProtocolConfig::default_for(kind);
    {
        let mut set = |name: &str, slot: &mut f64, v: Option<f64>| {
            let p = match v {
                Some(v) => {
                    *slot = v;
                    user("set in config")
                }
                None => protocol_provenance(kind, name),
            };
            prov.insert(format!("protocol.{name}"), p);
        };
        set("clock_hz", &mut protocol.clock_hz, rp.clock_hz);
        set("mu_signal", &mut protocol.mu_signal, rp.mu_signal);
        set("mu_decoy", &mut protocol.mu_decoy, rp.mu_decoy);
        set("mu_vacuum", &mut protocol.mu_vacuum, rp.mu_vacuum);
        set("p_signal", &mut protocol.p_signal, rp.p_signal);
        set("p_decoy", &mut protocol.p_decoy, rp.p_decoy);
        set("p_vacuum", &mut protocol.p_vacuum, rp.p_vacuum);
        set("basis_prob_x", &mut protocol.basis_prob_x, rp.basis_prob_x);
        set("f_ec", &mut protocol.f_ec, rp.f_ec);
        set("sigma_phi", &mut protocol.sigma_phi, rp.sigma_phi);
        set(
            "temporal_efficiency",
            &mut protocol.temporal_efficiency,
            rp.temporal_efficiency,
        );
        set(
            "receiver_visibility",
            &mut protocol.receiver_visibility,
            rp.receiver_visibility,
        );
    }
    if let Some(s) = rp.dps_security {
        protocol.dps_security = s;
    }
    if let Some(p) = rp.detected_ports {
        protocol.detected_ports = p;
    }
    protocol.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let field = format!("protocol.{}", name.split('/').next().unwrap_or(&name));
            config_error(text, &field, reason)
        }
        other => other,
    })?;

    let ch = raw.channel;
    let alpha = ch.alpha_db_per_km.unwrap_or(DEFAULT_ALPHA_DB_PER_KM);
    let mut loss_db = match (ch.loss_db, ch.length_km) {
        (Some(_), Some(_)) => {
            return Err(config_error(
                text,
                "channel.loss_db",
                "give either loss_db or length_km, not both",
            ));
        }
        (None, None) => return Err(config_error(text, "channel", "needs loss_db or length_km")),
        (Some(l), None) => {
            for &v in &l {
                ChannelModel::from_loss_db(v).map_err(|e| config_error(text, "channel.loss_db", e.to_string()))?;
            }
            l
        }
        (None, Some(km)) => {
            prov.insert(
                "channel.alpha_db_per_km".into(),
                match ch.alpha_db_per_km {
                    Some(_) => user("set in config"),
                    None => Provenance {
                        tag: SourceTag::Reported,
                        note: "standard single-mode fibre, 0.2 dB/km".into(),
                    },
                },
            );
            km.iter()
                .map(|&k| {
                    ChannelModel::from_length_km(k, alpha)
                        .map(|c| c.loss_db())
                        .map_err(|e| config_error(text, "channel.length_km", e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    if loss_db.is_empty() {
        return Err(config_error(
            text,
            "channel.loss_db",
            "at least one loss point is required",
        ));
    }
    loss_db.sort_by(f64::total_cmp);
    loss_db.dedup();
    prov.insert("channel.loss_db".into(), user("sweep points"));
    let receiver_loss_db = ch.receiver_loss_db.unwrap_or(0.0);
    if !(receiver_loss_db >= 0.0 && receiver_loss_db.is_finite()) {
        return Err(config_error(
            text,
            "channel.receiver_loss_db",
            "must be finite and >= 0",
        ));
    }
    prov.insert(
        "channel.receiver_loss_db".into(),
        match ch.receiver_loss_db {
            Some(_) => user("set in config"),
            None => Provenance {
                tag: SourceTag::Convention,
                note: "receiver insertion loss not reported; 0 dB".into(),
            },
        },
    );

    let detector = match raw.detector {
        RawDetector::Preset(name) => {
            let d = DetectorModel::preset(&name)?;
            for f in ["efficiency", "dark_rate_hz", "gate_rate_hz"] {
                prov.insert(format!("detector.{f}"), detector_provenance(&d.label, f));
            }
            d
        }
        RawDetector::Spec(s) => {
            let mut d = match &s.preset {
                Some(name) => DetectorModel::preset(name)?,
                None => {
                    if s.efficiency.is_none() || s.dark_rate_hz.is_none() || s.gate_rate_hz.is_none() {
                        return Err(config_error(
                            text,
                            "detector",
                            format!(
                                "explicit detectors need efficiency, dark_rate_hz and gate_rate_hz; or name a preset ({})",
                                PRESET_NAMES.join(", ")
                            ),
                        ));
                    }
                    DetectorModel {
                        efficiency: 0.0,
                        dark_rate_hz: 0.0,
                        gate_rate_hz: 1.0,
                        label: "custom".into(),
                    }
                }
            };
            let base = d.label.clone();
            let mut set = |name: &str, slot: &mut f64, v: Option<f64>| {
                let p = match v {
                    Some(v) => {
                        *slot = v;
                        user("set in config")
                    }
                    None => detector_provenance(&base, name),
                };
                prov.insert(format!("detector.{name}"), p);
            };
            set("efficiency", &mut d.efficiency, s.efficiency);
            set("dark_rate_hz", &mut d.dark_rate_hz, s.dark_rate_hz);
            set("gate_rate_hz", &mut d.gate_rate_hz, s.gate_rate_hz);
            if let Some(l) = s.label {
                d.label = l;
            }
            d.validate().map_err(|e| match e {
                Error::InvalidParameter { name, reason } => config_error(text, &format!("detector.{name}"), reason),
                other => other,
            })?;
            d
        }
    };

    let pulses_per_point = raw.pulses_per_point.unwrap_or(DEFAULT_PULSES_PER_POINT);
    if pulses_per_point < MIN_PULSES_PER_POINT {
        return Err(config_error(
            text,
            "pulses_per_point",
            format!("must be >= {MIN_PULSES_PER_POINT}, got {pulses_per_point}"),
        ));
    }
    prov.insert(
        "pulses_per_point".into(),
        match raw.pulses_per_point {
            Some(_) => user("set in config"),
            None => Provenance {
                tag: SourceTag::Convention,
                note: "10^7 pulses per point".into(),
            },
        },
    );
    let seed = raw
        .seed
        .ok_or_else(|| config_error(text, "seed", "a master seed is required"))?;
    prov.insert("seed".into(), user("master seed"));

    Ok(ExperimentConfig {
        protocol,
        loss_db,
        receiver_loss_db,
        detector,
        pulses_per_point,
        seed,
        outputs: raw.outputs,
        provenance: prov,
    })
}

impl ExperimentConfig {
    /// Override the master seed from the command line.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.provenance.insert("seed".into(), user("command line"));
        self
    }

    /// Replace the sweep points.
    pub fn with_points(mut self, mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config {
                field: "points".into(),
                message: "at least one loss point is required".into(),
            });
        }
        for &p in &points {
            ChannelModel::from_loss_db(p)?;
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.loss_db = points;
        self.provenance.insert("channel.loss_db".into(), user("command line"));
        Ok(self)
    }

    /// Resolved configuration plus a provenance entry for every value.
    pub fn emitted(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "resolved": {
                "protocol": self.protocol,
                "channel": {
                    "loss_db": self.loss_db,
                    "receiver_loss_db": self.receiver_loss_db,
                },
                "detector": self.detector,
                "pulses_per_point": self.pulses_per_point,
                "seed": self.seed,
            },
            "provenance": self.provenance,
        })
    }
}

/// Paths of numeric values in `emitted["resolved"]` that lack a provenance tag.
pub fn provenance_lint(emitted: &Value) -> Vec<String> {
    fn walk(v: &Value, path: String, out: &mut Vec<String>) {
        match v {
            Value::Number(_) => out.push(path),
            Value::Array(a) if a.iter().any(Value::is_number) => out.push(path),
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if path.is_empty() {
                        k.clone()
                    } else {
                        format!("{path}.{k}")
                    };
                    walk(x, p, out);
                }
            }
            _ => {}
        }
    }
    let mut numeric = Vec::new();
    walk(&emitted["resolved"], String::new(), &mut numeric);
    let prov = &emitted["provenance"];
    numeric
        .into_iter()
        .filter(|p| {
            prov.get(p)
                .and_then(|e| e.get("tag"))
                .and_then(Value::as_str)
                .is_none_or(str::is_empty)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub loss_db: f64,
    pub qber: f64,
    pub sifted_rate_hz: f64,
    pub skr_bps: f64,
    pub analytic_qber: f64,
    pub analytic_skr_bps: f64,
    pub clicks: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub loss_db: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub protocol: ProtocolKind,
    pub detector: String,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Seed of the sweep point at `loss_db`; independent of the other points.
pub fn point_seed(master: u64, loss_db: f64) -> u64 {
    derive_seed(master, "sweep", loss_db.to_bits())
}

/// One Monte-Carlo session plus the analytic expectation per loss point.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    if cfg.loss_db.is_empty() {
        return Err(Error::Config {
            field: "channel.loss_db".into(),
            message: "at least one loss point is required".into(),
        });
    }
    let receiver = ChannelModel::from_loss_db(cfg.receiver_loss_db)?;
    let outcomes: Vec<std::result::Result<SweepRow, SweepFailure>> = cfg
        .loss_db
        .par_iter()
        .map(|&db| {
            let seed = point_seed(cfg.seed, db);
            let row = (|| -> Result<SweepRow> {
                let ch = ChannelModel::from_loss_db(db)?.then(&receiver);
                let r = run_session_seeded(&cfg.protocol, &ch, &cfg.detector, cfg.pulses_per_point as usize, seed)?;
                let a = analytic_expectations(&cfg.protocol, &ch, &cfg.detector)?;
                Ok(SweepRow {
                    loss_db: db,
                    qber: r.qber,
                    sifted_rate_hz: r.sifted_rate_hz,
                    skr_bps: r.skr_bps,
                    analytic_qber: a.qber,
                    analytic_skr_bps: a.skr_bps,
                    clicks: r.clicks,
                    seed,
                })
            })();
            row.map_err(|e| SweepFailure {
                loss_db: db,
                seed,
                error: e.to_string(),
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(SweepTable {
        protocol: cfg.protocol.kind,
        detector: cfg.detector.label.clone(),
        rows,
        failures,
    })
}

pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &table.rows {
        w.serialize(r)?;
    }
    if table.rows.is_empty() {
        w.write_record([
            "loss_db",
            "qber",
            "sifted_rate_hz",
            "skr_bps",
            "analytic_qber",
            "analytic_skr_bps",
            "clicks",
            "seed",
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Absolute,
    Relative,
    Factor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Qber,
    SiftedRateHz,
    SkrBps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub label: String,
    pub protocol: ProtocolKind,
    pub detector: String,
    pub loss_db: f64,
    pub quantity: Quantity,
    pub expected: f64,
    pub tolerance_kind: ToleranceKind,
    pub tolerance: f64,
}

impl ReferencePoint {
    pub fn validate(&self) -> Result<()> {
        let bad = self.tolerance.is_nan()
            || self.tolerance <= 0.0
            || (self.tolerance_kind == ToleranceKind::Factor && self.tolerance < 1.0);
        if bad {
            return Err(Error::Config {
                field: format!("references.{}.tolerance", self.label),
                message: format!("must be > 0 (>= 1 for factor), got {}", self.tolerance),
            });
        }
        Ok(())
    }

    pub fn accepts(&self, observed: f64) -> bool {
        match self.tolerance_kind {
            ToleranceKind::Absolute => (observed - self.expected).abs() <= self.tolerance,
            ToleranceKind::Relative => (observed - self.expected).abs() <= self.tolerance * self.expected.abs(),
            ToleranceKind::Factor => {
                observed >= self.expected / self.tolerance && observed <= self.expected * self.tolerance
            }
        }
    }
}

#[derive(Deserialize)]
struct ReferenceFile {
    schema_version: u32,
    points: Vec<ReferencePoint>,
}

pub fn parse_references(text: &str) -> Result<Vec<ReferencePoint>> {
    let f: ReferenceFile = serde_json::from_str(text)?;
    if f.schema_version != SCHEMA_VERSION {
        return Err(Error::Config {
            field: "schema_version".into(),
            message: format!("unsupported reference schema {}", f.schema_version),
        });
    }
    for p in &f.points {
        p.validate()?;
    }
    Ok(f.points)
}

pub fn bundled_references() -> Result<Vec<ReferencePoint>> {
    parse_references(REFERENCE_POINTS_JSON)
}

fn value_of(row: &SweepRow, q: Quantity) -> f64 {
    match q {
        Quantity::Qber => row.qber,
        Quantity::SiftedRateHz => row.sifted_rate_hz,
        Quantity::SkrBps => row.skr_bps,
    }
}

/// Table value at `loss_db`: exact row, or linear interpolation between the
/// neighbouring rows (in log10 for positive rates).
pub fn interpolate(table: &SweepTable, loss_db: f64, q: Quantity, label: &str) -> Result<f64> {
    let rows = &table.rows;
    let (lo, hi) = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (a.loss_db, b.loss_db),
        _ => return Err(Error::EmptyInput("sweep table has no rows")),
    };
    if loss_db < lo || loss_db > hi {
        return Err(Error::ReferenceOutOfRange {
            label: label.to_string(),
            loss_db,
            min_db: lo,
            max_db: hi,
        });
    }
    if let Some(r) = rows.iter().find(|r| r.loss_db == loss_db) {
        return Ok(value_of(r, q));
    }
    let i = rows.partition_point(|r| r.loss_db < loss_db);
    let (a, b) = (&rows[i - 1], &rows[i]);
    let t = (loss_db - a.loss_db) / (b.loss_db - a.loss_db);
    let (va, vb) = (value_of(a, q), value_of(b, q));
    let log = q != Quantity::Qber && va > 0.0 && vb > 0.0;
    Ok(if log {
        10f64.powf(va.log10() + t * (vb.log10() - va.log10()))
    } else {
        va + t * (vb - va)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub label: String,
    pub loss_db: f64,
    pub quantity: Quantity,
    pub expected: f64,
    pub observed: f64,
    pub tolerance_kind: ToleranceKind,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub protocol: ProtocolKind,
    pub detector: String,
    pub entries: Vec<ComparisonEntry>,
    pub all_pass: bool,
}

/// Check every reference that matches the table's protocol and detector.
pub fn compare_to_reference(table: &SweepTable, references: &[ReferencePoint]) -> Result<ComparisonReport> {
    let entries = references
        .iter()
        .filter(|r| r.protocol == table.protocol && r.detector.eq_ignore_ascii_case(&table.detector))
        .map(|r| {
            let observed = interpolate(table, r.loss_db, r.quantity, &r.label)?;
            Ok(ComparisonEntry {
                label: r.label.clone(),
                loss_db: r.loss_db,
                quantity: r.quantity,
                expected: r.expected,
                observed,
                tolerance_kind: r.tolerance_kind,
                tolerance: r.tolerance,
                pass: r.accepts(observed),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        protocol: table.protocol,
        detector: table.detector.clone(),
        all_pass: entries.iter().all(|e| e.pass),
        entries,
    })
}
