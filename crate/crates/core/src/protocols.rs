//! DPS and decoy-state BB84 sessions, analytic expectations and asymptotic
//! key-rate bounds.
//!
//! Both protocols drive the transmitter through [`crate::optics`]: key
//! symbols become a modulated-injection phase sequence, the emitted train is
//! demodulated by the receiver AMZI, and each port is detected with the
//! threshold model of [`crate::linkmodel`]. Monte-Carlo work is split into
//! fixed chunks, each with its own substream, so a session is a pure function
//! of its configuration and seed.

use std::f64::consts::TAU;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linkmodel::{click_prob_raw, ChannelModel, DetectorModel};
use crate::optics::{
    emit_pulse_train, interfere, interfere_train, sigma_for_visibility, Basis, DifferentialPhaseSequence,
    InjectionMode, IntensityClass, PhaseSymbol, SymbolTag,
};
use crate::rng;

const CHUNK: usize = 1 << 16;
const MIN_UNITS: usize = 1_000;
/// Within-slot noise floor of a gain-switched, injection-locked pulse train.
pub const CALIBRATED_VISIBILITY: f64 = 0.983;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Dps,
    Bb84Decoy,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Dps => "dps",
            ProtocolKind::Bb84Decoy => "bb84_decoy",
        }
    }
}

/// Individual-attack bound used for the DPS key fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpsSecurity {
    /// `−log2 p_c(e) − f·h(e)`.
    CollisionOnly,
    /// `−(1 − 2μ)·log2 p_c(e) − f·h(e)`: also charges the beam-splitting attack.
    BeamSplitting,
}

/// Which AMZI output ports carry a detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectedPorts {
    /// One detector per port; a click's port is the bit.
    Both,
    /// A single detector on the bar port; the receiver picks θ_A or θ_A + π at
    /// random per slot and reads the bit from that choice.
    BarOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Pulses per second (DPS) or pulse pairs per second (BB84).
    pub clock_hz: f64,
    /// Mean photon number per pulse (DPS) or per pulse pair (BB84).
    pub mu_signal: f64,
    pub mu_decoy: f64,
    pub mu_vacuum: f64,
    pub p_signal: f64,
    pub p_decoy: f64,
    pub p_vacuum: f64,
    pub basis_prob_x: f64,
    pub f_ec: f64,
    pub sigma_phi: f64,
    /// Fraction of the detected light that lands in the interfering slot.
    pub temporal_efficiency: f64,
    /// Interference contrast of the receiver AMZI itself, on top of σ_φ.
    pub receiver_visibility: f64,
    pub dps_security: DpsSecurity,
    pub detected_ports: DetectedPorts,
}

fn calibrated_sigma() -> f64 {
    sigma_for_visibility(CALIBRATED_VISIBILITY).unwrap_or(0.0)
}

impl ProtocolConfig {
    pub fn dps_default() -> Self {
        ProtocolConfig {
            kind: ProtocolKind::Dps,
            clock_hz: 2e9,
            mu_signal: 0.075,
            mu_decoy: 0.0,
            mu_vacuum: 0.0,
            p_signal: 1.0,
            p_decoy: 0.0,
            p_vacuum: 0.0,
            basis_prob_x: 1.0,
            f_ec: 1.0 / 0.9,
            sigma_phi: calibrated_sigma(),
            temporal_efficiency: 1.0,
            receiver_visibility: 0.97,
            dps_security: DpsSecurity::BeamSplitting,
            detected_ports: DetectedPorts::Both,
        }
    }

    pub fn bb84_default() -> Self {
        ProtocolConfig {
            kind: ProtocolKind::Bb84Decoy,
            clock_hz: 1e9,
            mu_signal: 0.5,
            mu_decoy: 0.125,
            mu_vacuum: 0.0,
            p_signal: 14.0 / 16.0,
            p_decoy: 1.0 / 16.0,
            p_vacuum: 1.0 / 16.0,
            basis_prob_x: 0.5,
            f_ec: 1.0 / 0.9,
            sigma_phi: calibrated_sigma(),
            temporal_efficiency: 0.5,
            receiver_visibility: 0.97,
            dps_security: DpsSecurity::BeamSplitting,
            detected_ports: DetectedPorts::Both,
        }
    }

    pub fn default_for(kind: ProtocolKind) -> Self {
        match kind {
            ProtocolKind::Dps => Self::dps_default(),
            ProtocolKind::Bb84Decoy => Self::bb84_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(name, format!("must be in [0, 1], got {v}")))
            }
        };
        pos("clock_hz", self.clock_hz)?;
        pos("mu_signal", self.mu_signal)?;
        if !(self.sigma_phi >= 0.0 && self.sigma_phi.is_finite()) {
            return Err(invalid("sigma_phi", format!("must be >= 0, got {}", self.sigma_phi)));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(invalid("f_ec", format!("must be >= 1, got {}", self.f_ec)));
        }
        if !(self.temporal_efficiency > 0.0 && self.temporal_efficiency <= 1.0) {
            return Err(invalid(
                "temporal_efficiency",
                format!("must be in (0, 1], got {}", self.temporal_efficiency),
            ));
        }
        unit("receiver_visibility", self.receiver_visibility)?;
        if self.kind == ProtocolKind::Bb84Decoy {
            for (name, p) in [
                ("p_signal", self.p_signal),
                ("p_decoy", self.p_decoy),
                ("p_vacuum", self.p_vacuum),
            ] {
                unit(name, p)?;
            }
            let sum = self.p_signal + self.p_decoy + self.p_vacuum;
            if (sum - 1.0).abs() > 1e-12 {
                return Err(invalid(
                    "p_signal/p_decoy/p_vacuum",
                    format!("emission probabilities must sum to 1, got {sum}"),
                ));
            }
            if self.mu_vacuum != 0.0 {
                return Err(invalid("mu_vacuum", format!("must be 0, got {}", self.mu_vacuum)));
            }
            pos("mu_decoy", self.mu_decoy)?;
            if self.mu_decoy >= self.mu_signal {
                return Err(invalid(
                    "mu_decoy",
                    format!("must be below mu_signal {}, got {}", self.mu_signal, self.mu_decoy),
                ));
            }
            if !(self.basis_prob_x > 0.0 && self.basis_prob_x < 1.0) {
                return Err(invalid(
                    "basis_prob_x",
                    format!("must be in (0, 1), got {}", self.basis_prob_x),
                ));
            }
        }
        Ok(())
    }

    /// Probability that transmitter and receiver pick the same basis.
    pub fn basis_match_probability(&self) -> f64 {
        match self.kind {
            ProtocolKind::Dps => 1.0,
            ProtocolKind::Bb84Decoy => self.basis_prob_x.powi(2) + (1.0 - self.basis_prob_x).powi(2),
        }
    }

    fn mu_of(&self, class: IntensityClass) -> f64 {
        match class {
            IntensityClass::Signal => self.mu_signal,
            IntensityClass::Decoy => self.mu_decoy,
            IntensityClass::Vacuum => self.mu_vacuum,
        }
    }

    fn expect_kind(&self, expected: ProtocolKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::WrongProtocol {
                expected: expected.name(),
                got: self.kind.name(),
            });
        }
        Ok(())
    }
}

/// Shannon binary entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("x", format!("must be in [0, 1], got {x}")));
    }
    Ok(h2(x))
}

fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Eve's collision probability per DPS bit under individual attacks.
pub fn dps_collision_probability(e: f64) -> f64 {
    if e < 1.0 / 6.0 {
        1.0 - e * e - 0.5 * (1.0 - 6.0 * e).powi(2)
    } else {
        1.0 - e * e
    }
}

impl DpsSecurity {
    /// Secret bits per sifted bit, clamped at 0.
    pub fn key_fraction(self, e: f64, mu: f64, f_ec: f64) -> f64 {
        let pa = -dps_collision_probability(e).log2();
        let pa = match self {
            DpsSecurity::CollisionOnly => pa,
            DpsSecurity::BeamSplitting => (1.0 - 2.0 * mu) * pa,
        };
        (pa - f_ec * h2(e)).max(0.0)
    }
}

pub fn skr_dps(sifted_rate_hz: f64, e: f64, mu: f64, cfg: &ProtocolConfig) -> Result<f64> {
    if !(0.0..0.5).contains(&e) {
        return Err(Error::QberTooHigh(e));
    }
    if sifted_rate_hz.is_nan() || sifted_rate_hz < 0.0 {
        return Err(invalid("sifted_rate_hz", format!("must be >= 0, got {sifted_rate_hz}")));
    }
    Ok(sifted_rate_hz * cfg.dps_security.key_fraction(e, mu, cfg.f_ec))
}

/// Gains and error rates of the three BB84 intensity classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntensityGains {
    pub q_signal: f64,
    pub q_decoy: f64,
    pub q_vacuum: f64,
    pub e_signal: f64,
    pub e_decoy: f64,
    pub e_vacuum: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DecoyEstimates {
    pub y0: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    pub q1: f64,
    /// The raw Y₁ bound was negative and was clamped to 0.
    pub y1_clamped: bool,
    /// The raw e₁ bound exceeded 1/2 (or was undefined) and was clamped.
    pub e1_clamped: bool,
}

/// Vacuum + weak-decoy bounds on the single-photon yield and error rate.
pub fn decoy_estimate(g: &IntensityGains, mu: f64, nu: f64) -> Result<DecoyEstimates> {
    for (name, v) in [
        ("q_signal", g.q_signal),
        ("q_decoy", g.q_decoy),
        ("q_vacuum", g.q_vacuum),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(name, format!("gain must be in [0, 1], got {v}")));
        }
    }
    for (name, v) in [
        ("e_signal", g.e_signal),
        ("e_decoy", g.e_decoy),
        ("e_vacuum", g.e_vacuum),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(name, format!("error rate must be in [0, 1], got {v}")));
        }
    }
    if !(nu > 0.0 && nu < mu) {
        return Err(invalid(
            "mu_decoy",
            format!("must satisfy 0 < mu_decoy < mu_signal, got {nu} vs {mu}"),
        ));
    }
    if g.q_signal == 0.0 && g.q_decoy == 0.0 && g.q_vacuum == 0.0 {
        return Ok(DecoyEstimates::default());
    }
    let y0 = g.q_vacuum;
    let raw_y1 = mu / (mu * nu - nu * nu)
        * (g.q_decoy * nu.exp() - g.q_signal * mu.exp() * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * y0);
    let y1_clamped = raw_y1 < 0.0;
    let y1_lower = raw_y1.clamp(0.0, 1.0);
    let (e1_upper, e1_clamped) = if y1_lower > 0.0 {
        let raw = (g.e_decoy * g.q_decoy * nu.exp() - 0.5 * y0) / (y1_lower * nu);
        (raw.clamp(0.0, 0.5), raw > 0.5)
    } else {
        (0.5, true)
    };
    Ok(DecoyEstimates {
        y0,
        y1_lower,
        e1_upper,
        q1: y1_lower * mu * (-mu).exp(),
        y1_clamped,
        e1_clamped,
    })
}

/// Asymptotic decoy BB84 key rate in bits per second, clamped at 0.
pub fn skr_bb84(est: &DecoyEstimates, q_signal: f64, e_signal: f64, cfg: &ProtocolConfig) -> f64 {
    let per_pair = est.q1 * (1.0 - h2(est.e1_upper)) - cfg.f_ec * q_signal * h2(e_signal);
    (cfg.basis_match_probability() * cfg.clock_hz * cfg.p_signal * per_pair).max(0.0)
}

/// Average of `f(δ)` over `δ ~ N(0, σ²)` by composite Simpson on ±10σ.
fn gaussian_average(sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    if sigma == 0.0 {
        return f(0.0);
    }
    const N: usize = 2000;
    let a = -10.0 * sigma;
    let step = 20.0 * sigma / N as f64;
    let norm = 1.0 / (sigma * TAU.sqrt());
    let w = |d: f64| norm * (-0.5 * (d / sigma).powi(2)).exp() * f(d);
    let mut s = w(a) + w(-a);
    for i in 1..N {
        let d = a + i as f64 * step;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * w(d);
    }
    s * step / 3.0
}

/// Per-slot click probability and error probability for `x` detected photons
/// on average, averaged over the differential phase noise.
///
/// Returns `(gain, error_probability)`; the error rate is their ratio.
pub fn slot_statistics(
    x: f64,
    p_dark: f64,
    sigma_phi: f64,
    receiver_visibility: f64,
    ports: DetectedPorts,
) -> (f64, f64) {
    let click = |xp: f64| click_prob_raw(xp, p_dark);
    match ports {
        DetectedPorts::Both => {
            let gain = -(2.0 * (-p_dark).ln_1p() - x).exp_m1();
            let err = gaussian_average(sigma_phi, |d| {
                let f = 0.5 * (1.0 + receiver_visibility * d.cos());
                let right = click(x * f);
                let wrong = click(x * (1.0 - f));
                wrong * (1.0 - right) + 0.5 * wrong * right
            });
            (gain, err)
        }
        DetectedPorts::BarOnly => {
            let frac = |d: f64| 0.5 * (1.0 + receiver_visibility * d.cos());
            let gain = gaussian_average(sigma_phi, |d| 0.5 * (click(x * frac(d)) + click(x * (1.0 - frac(d)))));
            let err = gaussian_average(sigma_phi, |d| 0.5 * click(x * (1.0 - frac(d))));
            (gain, err)
        }
    }
}

/// Low-flux closed form `E = [e_opt·(Q − Q_dark) + ½·Q_dark]/Q`.
pub fn low_flux_error_rate(gain: f64, dark_gain: f64, sigma_phi: f64, receiver_visibility: f64) -> f64 {
    if gain <= 0.0 {
        return 0.5;
    }
    let e_opt = 0.5 * (1.0 - (-0.5 * sigma_phi * sigma_phi).exp() * receiver_visibility);
    (e_opt * (gain - dark_gain) + 0.5 * dark_gain) / gain
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassExpectation {
    pub class: IntensityClass,
    pub mu: f64,
    pub gain: f64,
    pub error_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticExpectations {
    pub classes: Vec<ClassExpectation>,
    pub qber: f64,
    pub sifted_rate_hz: f64,
    pub skr_bps: f64,
    pub decoy: Option<DecoyEstimates>,
}

impl AnalyticExpectations {
    pub fn class(&self, class: IntensityClass) -> Option<&ClassExpectation> {
        self.classes.iter().find(|c| c.class == class)
    }
}

fn class_expectation(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
    class: IntensityClass,
) -> ClassExpectation {
    let mu = cfg.mu_of(class);
    let x = mu * channel.transmittance() * det.efficiency * cfg.temporal_efficiency;
    let (gain, err) = slot_statistics(
        x,
        det.p_dark(),
        cfg.sigma_phi,
        cfg.receiver_visibility,
        cfg.detected_ports,
    );
    ClassExpectation {
        class,
        mu,
        gain,
        error_rate: if gain > 0.0 { err / gain } else { 0.5 },
    }
}

/// Closed-form gains, error rates and key rates.
pub fn analytic_expectations(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
) -> Result<AnalyticExpectations> {
    cfg.validate()?;
    det.validate()?;
    match cfg.kind {
        ProtocolKind::Dps => {
            let c = class_expectation(cfg, channel, det, IntensityClass::Signal);
            let sifted = cfg.clock_hz * det.gated_fraction(cfg.clock_hz) * c.gain;
            let skr = if c.error_rate < 0.5 {
                skr_dps(sifted, c.error_rate, cfg.mu_signal, cfg)?
            } else {
                0.0
            };
            Ok(AnalyticExpectations {
                qber: c.error_rate,
                sifted_rate_hz: sifted,
                skr_bps: skr,
                classes: vec![c],
                decoy: None,
            })
        }
        ProtocolKind::Bb84Decoy => {
            let classes: Vec<ClassExpectation> =
                [IntensityClass::Signal, IntensityClass::Decoy, IntensityClass::Vacuum]
                    .into_iter()
                    .map(|k| class_expectation(cfg, channel, det, k))
                    .collect();
            let gains = IntensityGains {
                q_signal: classes[0].gain,
                q_decoy: classes[1].gain,
                q_vacuum: classes[2].gain,
                e_signal: classes[0].error_rate,
                e_decoy: classes[1].error_rate,
                e_vacuum: classes[2].error_rate,
            };
            let est = decoy_estimate(&gains, cfg.mu_signal, cfg.mu_decoy)?;
            let gated = det.gated_fraction(cfg.clock_hz);
            Ok(AnalyticExpectations {
                qber: gains.e_signal,
                sifted_rate_hz: cfg.clock_hz * gated * cfg.p_signal * cfg.basis_match_probability() * gains.q_signal,
                skr_bps: gated * skr_bb84(&est, gains.q_signal, gains.e_signal, cfg),
                classes,
                decoy: Some(est),
            })
        }
    }
}

/// Counts for one intensity class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IntensityTally {
    pub class: IntensityClass,
    /// Units of this class that fell inside a detector gate.
    pub sent: u64,
    pub clicks: u64,
    /// Clicks in matching bases (every click for DPS).
    pub sifted: u64,
    pub errors: u64,
    pub dark_only_clicks: u64,
}

impl IntensityTally {
    fn new(class: IntensityClass) -> Self {
        IntensityTally {
            class,
            sent: 0,
            clicks: 0,
            sifted: 0,
            errors: 0,
            dark_only_clicks: 0,
        }
    }

    fn merge(&mut self, o: &IntensityTally) {
        self.sent += o.sent;
        self.clicks += o.clicks;
        self.sifted += o.sifted;
        self.errors += o.errors;
        self.dark_only_clicks += o.dark_only_clicks;
    }

    pub fn gain(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.clicks as f64 / self.sent as f64
        }
    }

    pub fn error_rate(&self) -> f64 {
        if self.sifted == 0 {
            0.0
        } else {
            self.errors as f64 / self.sifted as f64
        }
    }
}

/// Monte-Carlo truth for pairs that carried exactly one photon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhotonTruth {
    pub single_photon_sent: u64,
    pub single_photon_clicks: u64,
    pub single_photon_sifted: u64,
    pub single_photon_errors: u64,
}

impl PhotonTruth {
    fn merge(&mut self, o: &PhotonTruth) {
        self.single_photon_sent += o.single_photon_sent;
        self.single_photon_clicks += o.single_photon_clicks;
        self.single_photon_sifted += o.single_photon_sifted;
        self.single_photon_errors += o.single_photon_errors;
    }

    pub fn y1(&self) -> f64 {
        ratio(self.single_photon_clicks, self.single_photon_sent)
    }

    pub fn e1(&self) -> f64 {
        ratio(self.single_photon_errors, self.single_photon_sifted)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionFlag {
    NoDetections,
    EmptyIntensityClass,
    Y1Clamped,
    E1Clamped,
    QberAboveHalf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionResult {
    pub protocol: ProtocolKind,
    /// Pulses (DPS) or pulse pairs (BB84).
    pub pulses_sent: u64,
    pub tallies: Vec<IntensityTally>,
    pub clicks: u64,
    pub sifted_bits: u64,
    pub errors: u64,
    pub qber: f64,
    pub raw_rate_hz: f64,
    pub sifted_rate_hz: f64,
    pub skr_bps: f64,
    pub decoy: Option<DecoyEstimates>,
    pub photon_truth: Option<PhotonTruth>,
    pub flags: Vec<SessionFlag>,
}

impl SessionResult {
    pub fn tally(&self, class: IntensityClass) -> Option<&IntensityTally> {
        self.tallies.iter().find(|t| t.class == class)
    }
}

/// Port decision for one detection window.
///
/// `sig_bar`/`sig_cross` say whether signal photons reached each port; dark
/// counts are added here. Returns `Some((bit, dark_only))` on a click.
fn resolve<R: Rng + ?Sized>(
    sig_bar: bool,
    sig_cross: bool,
    p_dark: f64,
    ports: DetectedPorts,
    rng: &mut R,
) -> Option<(bool, bool)> {
    let dark_bar = rng.random::<f64>() < p_dark;
    let dark_cross = rng.random::<f64>() < p_dark;
    let tie: bool = rng.random();
    match ports {
        DetectedPorts::Both => {
            let bar = sig_bar || dark_bar;
            let cross = sig_cross || dark_cross;
            let dark_only = !sig_bar && !sig_cross;
            match (bar, cross) {
                (false, false) => None,
                (true, false) => Some((true, dark_only)),
                (false, true) => Some((false, dark_only)),
                (true, true) => Some((tie, dark_only)),
            }
        }
        // `tie` doubles as the receiver's random π flip; with the flip the
        // monitored detector sees what would have left the cross port.
        DetectedPorts::BarOnly => {
            let (sig, bit) = if tie { (sig_cross, false) } else { (sig_bar, true) };
            (sig || dark_bar).then_some((bit, !sig))
        }
    }
}

fn bar_fraction(bar: f64, input: f64, receiver_visibility: f64) -> f64 {
    let raw = if input > 0.0 { bar / input } else { 0.5 };
    0.5 + receiver_visibility * (raw - 0.5)
}

fn check_units(n: usize) -> Result<()> {
    if n < MIN_UNITS {
        return Err(invalid("n_pulses", format!("must be >= {MIN_UNITS}, got {n}")));
    }
    Ok(())
}

fn chunk_sizes(n: usize) -> Vec<usize> {
    (0..n.div_ceil(CHUNK)).map(|c| CHUNK.min(n - c * CHUNK)).collect()
}

/// DPS session; the chunk seeds derive from one draw of `rng`.
pub fn run_dps_session<R: RngCore + ?Sized>(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
    n_pulses: usize,
    rng: &mut R,
) -> Result<SessionResult> {
    run_dps_session_seeded(cfg, channel, det, n_pulses, rng.next_u64())
}

pub fn run_dps_session_seeded(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
    n_pulses: usize,
    seed: u64,
) -> Result<SessionResult> {
    cfg.expect_kind(ProtocolKind::Dps)?;
    cfg.validate()?;
    det.validate()?;
    check_units(n_pulses)?;
    let eta = channel.transmittance() * det.efficiency * cfg.temporal_efficiency;
    let gated = det.gated_fraction(cfg.clock_hz);
    let pd = det.p_dark();

    let parts: Vec<IntensityTally> = chunk_sizes(n_pulses)
        .into_par_iter()
        .enumerate()
        .map(|(c, len)| -> Result<IntensityTally> {
            let mut r = rng::substream(seed, "dps", c as u64);
            let bits: Vec<bool> = (0..len).map(|_| r.random()).collect();
            let symbols = bits
                .iter()
                .map(|&b| {
                    let tag = SymbolTag {
                        bit: Some(b),
                        ..SymbolTag::default()
                    };
                    PhaseSymbol::new(Basis::X.encode(b), tag)
                })
                .collect();
            let seq = DifferentialPhaseSequence::new(symbols, 2)?;
            let mode = InjectionMode::modulated(seq, cfg.sigma_phi, false);
            let train = emit_pulse_train(len + 1, cfg.mu_signal, 1.0 / cfg.clock_hz, &mode, &mut r)?;
            let ports = interfere_train(&train, 0.0);

            let mut t = IntensityTally::new(IntensityClass::Signal);
            let first = (c * CHUNK) as f64;
            for (k, (p, &bit)) in ports.iter().zip(&bits).enumerate() {
                let g = first + k as f64;
                if ((g + 1.0) * gated).floor() <= (g * gated).floor() {
                    continue;
                }
                t.sent += 1;
                let x = p.input * eta;
                let xb = x * bar_fraction(p.bar, p.input, cfg.receiver_visibility);
                let sig_bar = r.random::<f64>() < -(-xb).exp_m1();
                let sig_cross = r.random::<f64>() < -(-(x - xb)).exp_m1();
                if let Some((b, dark_only)) = resolve(sig_bar, sig_cross, pd, cfg.detected_ports, &mut r) {
                    t.clicks += 1;
                    t.sifted += 1;
                    t.errors += u64::from(b != bit);
                    t.dark_only_clicks += u64::from(dark_only);
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let mut total = IntensityTally::new(IntensityClass::Signal);
    for p in &parts {
        total.merge(p);
    }
    let n = n_pulses as f64;
    let mut flags = Vec::new();
    let qber = total.error_rate();
    let sifted_rate = total.sifted as f64 / n * cfg.clock_hz;
    let skr = if total.clicks == 0 {
        flags.push(SessionFlag::NoDetections);
        0.0
    } else if qber >= 0.5 {
        flags.push(SessionFlag::QberAboveHalf);
        0.0
    } else {
        skr_dps(sifted_rate, qber, cfg.mu_signal, cfg)?
    };
    Ok(SessionResult {
        protocol: ProtocolKind::Dps,
        pulses_sent: n_pulses as u64,
        clicks: total.clicks,
        sifted_bits: total.sifted,
        errors: total.errors,
        qber,
        raw_rate_hz: total.clicks as f64 / n * cfg.clock_hz,
        sifted_rate_hz: sifted_rate,
        skr_bps: skr,
        tallies: vec![total],
        decoy: None,
        photon_truth: None,
        flags,
    })
}

const CLASSES: [IntensityClass; 3] = [IntensityClass::Signal, IntensityClass::Decoy, IntensityClass::Vacuum];

fn class_index(c: IntensityClass) -> usize {
    match c {
        IntensityClass::Signal => 0,
        IntensityClass::Decoy => 1,
        IntensityClass::Vacuum => 2,
    }
}

struct PairPlan {
    class: IntensityClass,
    basis_a: Basis,
    bit: bool,
    basis_b: Basis,
}

/// Decoy BB84 session; the chunk seeds derive from one draw of `rng`.
pub fn run_bb84_session<R: RngCore + ?Sized>(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
    n_pairs: usize,
    rng: &mut R,
) -> Result<SessionResult> {
    run_bb84_session_seeded(cfg, channel, det, n_pairs, rng.next_u64())
}

pub fn run_bb84_session_seeded(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
    n_pairs: usize,
    seed: u64,
) -> Result<SessionResult> {
    cfg.expect_kind(ProtocolKind::Bb84Decoy)?;
    cfg.validate()?;
    det.validate()?;
    check_units(n_pairs)?;
    let p_det = channel.transmittance() * det.efficiency * cfg.temporal_efficiency;
    let pd = det.p_dark();
    let gated = det.gated_fraction(cfg.clock_hz);
    let poisson: Vec<Option<Poisson<f64>>> = CLASSES
        .iter()
        .map(|&c| {
            let mu = cfg.mu_of(c);
            (mu > 0.0)
                .then(|| Poisson::new(mu).map_err(|e| invalid("mu", e.to_string())))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let parts: Vec<([IntensityTally; 3], PhotonTruth)> = chunk_sizes(n_pairs)
        .into_par_iter()
        .enumerate()
        .map(|(c, len)| -> Result<([IntensityTally; 3], PhotonTruth)> {
            let mut r = rng::substream(seed, "bb84", c as u64);
            let pick_basis = |r: &mut rng::SimRng| {
                if r.random::<f64>() < cfg.basis_prob_x {
                    Basis::X
                } else {
                    Basis::Z
                }
            };
            let plans: Vec<PairPlan> = (0..len)
                .map(|_| {
                    let u: f64 = r.random();
                    let class = if u < cfg.p_vacuum {
                        IntensityClass::Vacuum
                    } else if u < cfg.p_vacuum + cfg.p_decoy {
                        IntensityClass::Decoy
                    } else {
                        IntensityClass::Signal
                    };
                    let basis_a = pick_basis(&mut r);
                    let bit = r.random();
                    let basis_b = pick_basis(&mut r);
                    PairPlan {
                        class,
                        basis_a,
                        bit,
                        basis_b,
                    }
                })
                .collect();

            let mut symbols = Vec::with_capacity(2 * len);
            for (i, p) in plans.iter().enumerate() {
                if i > 0 {
                    symbols.push(PhaseSymbol::boundary());
                }
                let tag = SymbolTag {
                    bit: Some(p.bit),
                    basis: Some(p.basis_a),
                    intensity: Some(p.class),
                };
                symbols.push(PhaseSymbol::new(p.basis_a.encode(p.bit), tag));
            }
            let seq = DifferentialPhaseSequence::new(symbols, 4)?;
            let mode = InjectionMode::modulated(seq, cfg.sigma_phi, true);
            let mut train = emit_pulse_train(2 * len, cfg.mu_signal / 2.0, 0.5 / cfg.clock_hz, &mode, &mut r)?;
            train.attenuate(|i| cfg.mu_of(plans[i / 2].class) / cfg.mu_signal)?;

            let mut tallies = CLASSES.map(IntensityTally::new);
            let mut truth = PhotonTruth::default();
            let first = (c * CHUNK) as f64;
            for (i, p) in plans.iter().enumerate() {
                let t = &mut tallies[class_index(p.class)];
                let g = first + i as f64;
                if ((g + 1.0) * gated).floor() <= (g * gated).floor() {
                    continue;
                }
                t.sent += 1;
                let pulses = &train.pulses()[2 * i..2 * i + 2];
                let ports = interfere(&pulses[0], &pulses[1], p.basis_b.amzi_offset());
                let f = bar_fraction(ports.bar, ports.input, cfg.receiver_visibility);
                let n = poisson[class_index(p.class)]
                    .as_ref()
                    .map_or(0, |d| d.sample(&mut r) as u64);
                let (mut k_bar, mut k_cross) = (0u64, 0u64);
                for _ in 0..n {
                    if r.random::<f64>() < p_det {
                        if r.random::<f64>() < f {
                            k_bar += 1;
                        } else {
                            k_cross += 1;
                        }
                    }
                }
                let outcome = resolve(k_bar > 0, k_cross > 0, pd, cfg.detected_ports, &mut r);
                let sifted = p.basis_a == p.basis_b;
                if n == 1 {
                    truth.single_photon_sent += 1;
                }
                if let Some((b, dark_only)) = outcome {
                    t.clicks += 1;
                    t.dark_only_clicks += u64::from(dark_only);
                    let err = u64::from(b != p.bit);
                    if sifted {
                        t.sifted += 1;
                        t.errors += err;
                    }
                    if n == 1 {
                        truth.single_photon_clicks += 1;
                        if sifted {
                            truth.single_photon_sifted += 1;
                            truth.single_photon_errors += err;
                        }
                    }
                }
            }
            Ok((tallies, truth))
        })
        .collect::<Result<_>>()?;

    let mut tallies = CLASSES.map(IntensityTally::new);
    let mut truth = PhotonTruth::default();
    for (t, tr) in &parts {
        for (acc, x) in tallies.iter_mut().zip(t) {
            acc.merge(x);
        }
        truth.merge(tr);
    }

    let n = n_pairs as f64;
    let mut flags = Vec::new();
    if tallies.iter().any(|t| t.sent == 0) {
        flags.push(SessionFlag::EmptyIntensityClass);
    }
    let clicks: u64 = tallies.iter().map(|t| t.clicks).sum();
    let [s, d, v] = tallies;
    let gains = IntensityGains {
        q_signal: s.gain(),
        q_decoy: d.gain(),
        q_vacuum: v.gain(),
        e_signal: s.error_rate(),
        e_decoy: d.error_rate(),
        e_vacuum: v.error_rate(),
    };
    let est = decoy_estimate(&gains, cfg.mu_signal, cfg.mu_decoy)?;
    if est.y1_clamped {
        flags.push(SessionFlag::Y1Clamped);
    }
    if est.e1_clamped {
        flags.push(SessionFlag::E1Clamped);
    }
    // Gains above are per gated pair; rescale the rate to pairs sent.
    let skr = if clicks == 0 {
        flags.push(SessionFlag::NoDetections);
        0.0
    } else {
        if gains.e_signal >= 0.5 {
            flags.push(SessionFlag::QberAboveHalf);
        }
        gated * skr_bb84(&est, gains.q_signal, gains.e_signal, cfg)
    };
    Ok(SessionResult {
        protocol: ProtocolKind::Bb84Decoy,
        pulses_sent: n_pairs as u64,
        clicks,
        sifted_bits: s.sifted,
        errors: s.errors,
        qber: gains.e_signal,
        raw_rate_hz: clicks as f64 / n * cfg.clock_hz,
        sifted_rate_hz: s.sifted as f64 / n * cfg.clock_hz,
        skr_bps: skr,
        tallies: tallies.to_vec(),
        decoy: Some(est),
        photon_truth: Some(truth),
        flags,
    })
}

/// Session for whichever protocol `cfg` names.
pub fn run_session_seeded(
    cfg: &ProtocolConfig,
    channel: &ChannelModel,
    det: &DetectorModel,
    n_units: usize,
    seed: u64,
) -> Result<SessionResult> {
    match cfg.kind {
        ProtocolKind::Dps => run_dps_session_seeded(cfg, channel, det, n_units, seed),
        ProtocolKind::Bb84Decoy => run_bb84_session_seeded(cfg, channel, det, n_units, seed),
    }
}
