//! Phase-encoded pulse trains and their demodulation in an asymmetric
//! Mach-Zehnder interferometer (AMZI).
//!
//! A gain-switched slave laser emits one pulse per slot. Depending on the
//! injection regime the pulse phases are random (no seed light), locked to a
//! CW master (fixed differential phase `ω_M·T`), or set symbol by symbol by
//! direct modulation of the master. Pulses are point events carrying a mean
//! photon number and an absolute optical phase.
//!
//! Phases are stored as [`Phase`], a fixed-point fraction of a full turn, so
//! reduction modulo 2π and differences between pulses are exact.

use std::f64::consts::TAU;
use std::ops::{Add, Neg, Sub};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const TURN: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// Optical phase as a fraction of a full turn (`2^64` ≡ 2π).
///
/// Addition and subtraction wrap, which is exactly reduction modulo 2π.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phase(u64);

impl Phase {
    pub const ZERO: Phase = Phase(0);
    pub const HALF_TURN: Phase = Phase(1 << 63);

    /// Reduce an arbitrary angle into `[0, 2π)`.
    pub fn from_radians(rad: f64) -> Phase {
        let turns = (rad / TAU).fract();
        Phase((turns * TURN) as i128 as u64)
    }

    /// The phase `2πk/m`, exact whenever `m` is a power of two.
    pub fn from_fraction(k: u64, m: u64) -> Phase {
        assert!(m > 0, "phase fraction with zero denominator");
        Phase((((k % m) as u128) << 64).div_euclid(m as u128) as u64)
    }

    pub fn from_turns(raw: u64) -> Phase {
        Phase(raw)
    }

    /// Uniform draw on `[0, 2π)`.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Phase {
        Phase(rng.next_u64())
    }

    /// Value in `[0, 2π)`; the rounding tie at 2π maps to 0.
    pub fn radians(self) -> f64 {
        let r = self.0 as f64 * (TAU / TURN);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    /// Value in `[-π, π)`.
    pub fn signed_radians(self) -> f64 {
        (self.0 as i64) as f64 * (TAU / TURN)
    }

    pub fn turns(self) -> u64 {
        self.0
    }
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, rhs: Phase) -> Phase {
        Phase(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for Phase {
    type Output = Phase;
    fn sub(self, rhs: Phase) -> Phase {
        Phase(self.0.wrapping_sub(rhs.0))
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase(self.0.wrapping_neg())
    }
}

/// One gain-switched pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OpticalPulse {
    slot_index: u64,
    mean_photons: f64,
    phase: Phase,
}

impl OpticalPulse {
    pub fn new(slot_index: u64, mean_photons: f64, phase: Phase) -> Result<Self> {
        if !(mean_photons >= 0.0 && mean_photons.is_finite()) {
            return Err(invalid(
                "mean_photons",
                format!("must be finite and >= 0, got {mean_photons}"),
            ));
        }
        Ok(OpticalPulse {
            slot_index,
            mean_photons,
            phase,
        })
    }

    pub fn slot_index(&self) -> u64 {
        self.slot_index
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Absolute phase in `[0, 2π)`.
    pub fn phase_radians(&self) -> f64 {
        self.phase.radians()
    }
}

/// Ordered pulses on a regular slot grid of period `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseTrain {
    pulses: Vec<OpticalPulse>,
    period_s: f64,
    clock_hz: f64,
}

impl PulseTrain {
    pub fn new(pulses: Vec<OpticalPulse>, period_s: f64) -> Result<Self> {
        if !(period_s > 0.0 && period_s.is_finite()) {
            return Err(invalid("period_s", format!("must be > 0, got {period_s}")));
        }
        for w in pulses.windows(2) {
            if w[1].slot_index != w[0].slot_index + 1 {
                return Err(invalid(
                    "pulses",
                    format!(
                        "slot indices must increase by 1 ({} then {})",
                        w[0].slot_index, w[1].slot_index
                    ),
                ));
            }
        }
        Ok(PulseTrain {
            pulses,
            period_s,
            clock_hz: 1.0 / period_s,
        })
    }

    pub fn pulses(&self) -> &[OpticalPulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn period_s(&self) -> f64 {
        self.period_s
    }

    pub fn clock_hz(&self) -> f64 {
        self.clock_hz
    }

    /// Same train with a constant added to every absolute phase.
    pub fn with_global_phase(&self, offset: Phase) -> PulseTrain {
        let pulses = self
            .pulses
            .iter()
            .map(|p| OpticalPulse {
                phase: p.phase + offset,
                ..*p
            })
            .collect();
        PulseTrain { pulses, ..*self }
    }

    /// Attenuate pulse `i` by `factor(i)`; used for off-chip decoy intensity setting.
    pub fn attenuate(&mut self, mut factor: impl FnMut(usize) -> f64) -> Result<()> {
        for (i, p) in self.pulses.iter_mut().enumerate() {
            let f = factor(i);
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid("attenuation", format!("factor must be in [0, 1], got {f}")));
            }
            p.mean_photons *= f;
        }
        Ok(())
    }
}

/// Measurement / preparation basis for differential phase encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Differential phases {0, π}, read with the AMZI at θ_A = 0.
    X,
    /// Differential phases {π/2, 3π/2}, read with the AMZI at θ_A = −π/2.
    Z,
}

impl Basis {
    pub fn amzi_offset(self) -> Phase {
        match self {
            Basis::X => Phase::ZERO,
            Basis::Z => Phase::from_fraction(3, 4),
        }
    }

    /// Differential phase that makes the bar port constructive for `bit = true`.
    pub fn encode(self, bit: bool) -> Phase {
        match (self, bit) {
            (Basis::X, true) => Phase::ZERO,
            (Basis::X, false) => Phase::HALF_TURN,
            (Basis::Z, true) => Phase::from_fraction(1, 4),
            (Basis::Z, false) => Phase::from_fraction(3, 4),
        }
    }
}

/// Decoy-state intensity level of a pulse pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityClass {
    Signal,
    Decoy,
    Vacuum,
}

impl IntensityClass {
    pub fn label(self) -> &'static str {
        match self {
            IntensityClass::Signal => "signal",
            IntensityClass::Decoy => "decoy",
            IntensityClass::Vacuum => "vacuum",
        }
    }
}

/// Protocol bookkeeping carried alongside a phase symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SymbolTag {
    pub bit: Option<bool>,
    pub basis: Option<Basis>,
    pub intensity: Option<IntensityClass>,
}

/// Phase step between pulse `k` and pulse `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSymbol {
    diff_phase: Phase,
    pair_boundary: bool,
    tag: SymbolTag,
}

impl PhaseSymbol {
    pub fn new(diff_phase: Phase, tag: SymbolTag) -> Self {
        PhaseSymbol {
            diff_phase,
            pair_boundary: false,
            tag,
        }
    }

    /// Level `k` of an `m`-level format, i.e. a step of `2πk/m`.
    pub fn level(k: u64, m: u64) -> Self {
        Self::new(Phase::from_fraction(k, m), SymbolTag::default())
    }

    /// Step into a new pulse pair; the phase is re-randomized when pair randomization is on.
    pub fn boundary() -> Self {
        PhaseSymbol {
            diff_phase: Phase::ZERO,
            pair_boundary: true,
            tag: SymbolTag::default(),
        }
    }

    pub fn diff_phase(&self) -> Phase {
        self.diff_phase
    }

    pub fn diff_radians(&self) -> f64 {
        self.diff_phase.radians()
    }

    pub fn is_pair_boundary(&self) -> bool {
        self.pair_boundary
    }

    pub fn tag(&self) -> &SymbolTag {
        &self.tag
    }
}

/// Symbol stream driving the master laser in the modulated regime.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialPhaseSequence {
    symbols: Vec<PhaseSymbol>,
    modulation_levels: u32,
}

impl DifferentialPhaseSequence {
    pub fn new(symbols: Vec<PhaseSymbol>, modulation_levels: u32) -> Result<Self> {
        if modulation_levels < 2 {
            return Err(invalid(
                "modulation_levels",
                format!("must be >= 2, got {modulation_levels}"),
            ));
        }
        let m = f64::from(modulation_levels);
        for (i, s) in symbols.iter().enumerate() {
            let scaled = s.diff_phase.turns() as f64 / TURN * m;
            let off = (scaled - scaled.round()).abs();
            if off > 1e-9 {
                return Err(invalid(
                    "symbols",
                    format!(
                        "symbol {i}: phase {} is not a multiple of 2π/{modulation_levels}",
                        s.diff_radians()
                    ),
                ));
            }
        }
        Ok(DifferentialPhaseSequence {
            symbols,
            modulation_levels,
        })
    }

    /// Sequence of `2πk/m` steps, one per entry of `levels`.
    pub fn from_levels(levels: &[u64], modulation_levels: u32) -> Result<Self> {
        let m = u64::from(modulation_levels);
        let symbols = levels.iter().map(|&k| PhaseSymbol::level(k, m.max(1))).collect();
        Self::new(symbols, modulation_levels)
    }

    pub fn symbols(&self) -> &[PhaseSymbol] {
        &self.symbols
    }

    pub fn modulation_levels(&self) -> u32 {
        self.modulation_levels
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Seeding regime of the slave laser.
#[derive(Clone, Debug, PartialEq)]
pub enum InjectionMode {
    /// Master off: every pulse starts from spontaneous emission.
    Off,
    /// CW master: consecutive pulses differ by `ω_M·T` plus locking noise.
    Cw {
        master_angular_freq: f64,
        phase_noise_sigma: f64,
    },
    /// Directly modulated master: steps follow `sequence`.
    Modulated {
        master_angular_freq: f64,
        sequence: DifferentialPhaseSequence,
        phase_noise_sigma: f64,
        pair_randomization: bool,
    },
}

impl InjectionMode {
    /// CW injection with master and slave on resonance (`ω_M·T ≡ 0`).
    pub fn cw_locked(phase_noise_sigma: f64) -> Self {
        InjectionMode::Cw {
            master_angular_freq: 0.0,
            phase_noise_sigma,
        }
    }

    pub fn modulated(sequence: DifferentialPhaseSequence, phase_noise_sigma: f64, pair_randomization: bool) -> Self {
        InjectionMode::Modulated {
            master_angular_freq: 0.0,
            sequence,
            phase_noise_sigma,
            pair_randomization,
        }
    }

    fn noise_sigma(&self) -> f64 {
        match self {
            InjectionMode::Off => 0.0,
            InjectionMode::Cw { phase_noise_sigma, .. } | InjectionMode::Modulated { phase_noise_sigma, .. } => {
                *phase_noise_sigma
            }
        }
    }
}

/// Standard deviation of the differential phase noise that yields fringe visibility `v`.
pub fn sigma_for_visibility(v: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(invalid("visibility", format!("must be in (0, 1], got {v}")));
    }
    Ok((-2.0 * v.ln()).sqrt())
}

fn gaussian_step<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Phase {
    if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        Phase::from_radians(sigma * z)
    } else {
        Phase::ZERO
    }
}

/// Generate `n_pulses` pulses of equal mean photon number under `mode`.
pub fn emit_pulse_train<R: Rng + ?Sized>(
    n_pulses: usize,
    mean_photons: f64,
    period_s: f64,
    mode: &InjectionMode,
    rng: &mut R,
) -> Result<PulseTrain> {
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "must be >= 1"));
    }
    let sigma = mode.noise_sigma();
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(
            "phase_noise_sigma",
            format!("must be finite and >= 0, got {sigma}"),
        ));
    }
    if let InjectionMode::Modulated { sequence, .. } = mode {
        if sequence.len() < n_pulses - 1 {
            return Err(Error::SequenceTooShort {
                needed: n_pulses - 1,
                got: sequence.len(),
            });
        }
    }

    let mut phases = Vec::with_capacity(n_pulses);
    match mode {
        InjectionMode::Off => {
            phases.extend((0..n_pulses).map(|_| Phase::random(rng)));
        }
        InjectionMode::Cw {
            master_angular_freq, ..
        } => {
            let drift = Phase::from_radians(master_angular_freq * period_s);
            let mut phase = Phase::random(rng);
            phases.push(phase);
            for _ in 1..n_pulses {
                phase = phase + drift + gaussian_step(sigma, rng);
                phases.push(phase);
            }
        }
        InjectionMode::Modulated {
            master_angular_freq,
            sequence,
            pair_randomization,
            ..
        } => {
            let drift = Phase::from_radians(master_angular_freq * period_s);
            let mut phase = Phase::random(rng);
            phases.push(phase);
            for sym in &sequence.symbols()[..n_pulses - 1] {
                phase = if *pair_randomization && sym.pair_boundary {
                    Phase::random(rng)
                } else {
                    phase + sym.diff_phase + drift + gaussian_step(sigma, rng)
                };
                phases.push(phase);
            }
        }
    }

    let pulses = phases
        .into_iter()
        .enumerate()
        .map(|(i, phase)| OpticalPulse::new(i as u64, mean_photons, phase))
        .collect::<Result<Vec<_>>>()?;
    PulseTrain::new(pulses, period_s)
}

/// AMZI output port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputPort {
    Bar,
    Cross,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmziConfig {
    pub delay_s: f64,
    /// Arm phase θ_A in radians.
    pub phase_offset: f64,
    pub output_port: OutputPort,
}

impl AmziConfig {
    /// Interferometer whose delay matches `train`'s slot period.
    pub fn matched(train: &PulseTrain, phase_offset: f64, output_port: OutputPort) -> Self {
        AmziConfig {
            delay_s: train.period_s(),
            phase_offset,
            output_port,
        }
    }

    fn validate(&self, train: &PulseTrain) -> Result<()> {
        if self.delay_s.is_nan() || self.delay_s <= 0.0 {
            return Err(invalid("delay_s", format!("must be > 0, got {}", self.delay_s)));
        }
        if ((self.delay_s - train.period_s()) / train.period_s()).abs() > 1e-9 {
            return Err(Error::DelayMismatch {
                delay_s: self.delay_s,
                period_s: train.period_s(),
            });
        }
        Ok(())
    }
}

/// Intensity leaving one AMZI port in the slot where pulses `k−1` and `k` overlap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterferenceRecord {
    pub slot_index: u64,
    pub intensity_out: f64,
    pub input_intensity: f64,
}

/// Both port intensities for one overlap slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortIntensities {
    pub bar: f64,
    pub cross: f64,
    pub input: f64,
}

impl PortIntensities {
    pub fn port(&self, port: OutputPort) -> f64 {
        match port {
            OutputPort::Bar => self.bar,
            OutputPort::Cross => self.cross,
        }
    }
}

/// Interfere pulse `cur` with the delayed copy of `prev`.
///
/// For equal pulses of intensity `I` this is `I/2·[1 ± cos(Δφ + θ_A)]`.
pub fn interfere(prev: &OpticalPulse, cur: &OpticalPulse, phase_offset: Phase) -> PortIntensities {
    let c = (cur.phase - prev.phase + phase_offset).radians().cos();
    let input = 0.5 * (prev.mean_photons + cur.mean_photons);
    let beat = 0.5 * (prev.mean_photons * cur.mean_photons).sqrt() * c;
    PortIntensities {
        bar: (0.5 * input + beat).max(0.0),
        cross: (0.5 * input - beat).max(0.0),
        input,
    }
}

/// Port intensities for every overlap slot of `train` (`len − 1` entries).
pub fn interfere_train(train: &PulseTrain, phase_offset: f64) -> Vec<PortIntensities> {
    let offset = Phase::from_radians(phase_offset);
    train
        .pulses()
        .windows(2)
        .map(|w| interfere(&w[0], &w[1], offset))
        .collect()
}

pub fn amzi_interfere(train: &PulseTrain, cfg: &AmziConfig) -> Result<Vec<InterferenceRecord>> {
    if train.len() < 2 {
        return Err(Error::EmptyInput("AMZI needs at least two pulses"));
    }
    cfg.validate(train)?;
    let offset = Phase::from_radians(cfg.phase_offset);
    Ok(train
        .pulses()
        .windows(2)
        .map(|w| {
            let ports = interfere(&w[0], &w[1], offset);
            InterferenceRecord {
                slot_index: w[1].slot_index,
                intensity_out: ports.port(cfg.output_port),
                input_intensity: ports.input,
            }
        })
        .collect())
}

/// Demodulated symbol; displayed as `r·e^{−iθ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IqPoint {
    pub radius: f64,
    pub angle: f64,
}

impl IqPoint {
    pub fn new(radius: f64, angle: f64) -> Self {
        let mut angle = angle.rem_euclid(TAU);
        if angle >= TAU {
            angle = 0.0;
        }
        IqPoint {
            radius: radius.max(0.0),
            angle,
        }
    }

    /// Cartesian coordinates of `r·e^{−iθ}`.
    pub fn to_cartesian(&self) -> (f64, f64) {
        (self.radius * self.angle.cos(), -self.radius * self.angle.sin())
    }
}

/// Recover `(r, Δφ)` for every consecutive pair using an in-phase (θ_A = 0)
/// and a quadrature (θ_A = −π/2) interferometer.
pub fn dual_basis_demodulate(train: &PulseTrain) -> Result<Vec<IqPoint>> {
    if train.len() < 2 {
        return Err(Error::EmptyInput("demodulation needs at least two pulses"));
    }
    let quadrature = Phase::from_fraction(3, 4);
    Ok(train
        .pulses()
        .windows(2)
        .map(|w| {
            let i = interfere(&w[0], &w[1], Phase::ZERO);
            let q = interfere(&w[0], &w[1], quadrature);
            if i.input <= 0.0 {
                return IqPoint::new(0.0, 0.0);
            }
            let x = 2.0 * i.bar / i.input - 1.0;
            let y = 2.0 * q.bar / q.input - 1.0;
            IqPoint::new(i.input, y.atan2(x))
        })
        .collect())
}

/// Split the overlap slots of `train` into consecutive segments, one per arm
/// phase in `settings`, as when θ_A is swept in time.
pub fn fringe_scan(train: &PulseTrain, settings: &[f64], port: OutputPort) -> Result<Vec<Vec<InterferenceRecord>>> {
    if train.len() < 2 {
        return Err(Error::EmptyInput("fringe scan needs at least two pulses"));
    }
    if settings.is_empty() {
        return Err(Error::EmptyInput("fringe scan needs at least one phase setting"));
    }
    let slots = train.len() - 1;
    let offsets: Vec<Phase> = settings.iter().map(|&s| Phase::from_radians(s)).collect();
    let mut scan = vec![Vec::with_capacity(slots / settings.len() + 1); settings.len()];
    for (k, w) in train.pulses().windows(2).enumerate() {
        let seg = k * settings.len() / slots;
        let ports = interfere(&w[0], &w[1], offsets[seg]);
        scan[seg].push(InterferenceRecord {
            slot_index: w[1].slot_index,
            intensity_out: ports.port(port),
            input_intensity: ports.input,
        });
    }
    Ok(scan)
}

/// Mean normalized intensity of each scan segment, with its standard error.
fn segment_means(scan: &[Vec<InterferenceRecord>]) -> Result<Vec<(f64, f64)>> {
    let groups: Vec<&Vec<InterferenceRecord>> = scan.iter().filter(|g| !g.is_empty()).collect();
    if groups.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 1,
            got: groups.len(),
        });
    }
    Ok(groups
        .into_iter()
        .map(|g| {
            let n = g.len() as f64;
            let norm = g.iter().map(|r| r.input_intensity).sum::<f64>() / n;
            let vals = g.iter().map(|r| if norm > 0.0 { r.intensity_out / norm } else { 0.0 });
            let mean = vals.clone().sum::<f64>() / n;
            let var = if g.len() > 1 {
                vals.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (mean, (var / n).sqrt())
        })
        .collect())
}

/// Fringe contrast `(I_max − I_min)/(I_max + I_min)` of the segment means.
pub fn fringe_visibility(scan: &[Vec<InterferenceRecord>]) -> Result<f64> {
    fringe_visibility_with_error(scan).map(|(v, _)| v)
}

/// Visibility together with its first-order standard error.
pub fn fringe_visibility_with_error(scan: &[Vec<InterferenceRecord>]) -> Result<(f64, f64)> {
    let means = segment_means(scan)?;
    let (hi, hi_se) = means
        .iter()
        .copied()
        .fold((f64::MIN, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let (lo, lo_se) = means
        .iter()
        .copied()
        .fold((f64::MAX, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    let sum = hi + lo;
    if sum <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let v = ((hi - lo) / sum).clamp(0.0, 1.0);
    let d_hi = 2.0 * lo / (sum * sum);
    let d_lo = 2.0 * hi / (sum * sum);
    Ok((v, ((d_hi * hi_se).powi(2) + (d_lo * lo_se).powi(2)).sqrt()))
}

/// Per-level summary of a demodulated constellation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstellationCluster {
    pub level: u64,
    pub nominal_angle: f64,
    pub mean_angle: f64,
    pub mean_radius: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstellationReport {
    pub levels: u32,
    pub phase_noise_sigma: f64,
    pub symbols: Vec<u64>,
    pub points: Vec<IqPoint>,
    pub clusters: Vec<ConstellationCluster>,
    /// Sorted distinct noiseless bar-port intensities (unit input intensity).
    pub eye_levels: Vec<f64>,
    /// `M/2 + 1` distinct levels are expected only for even `M`.
    pub eye_formula_applies: bool,
}

/// Distinct values of `½·(1 + cos 2πk/M)`, sorted ascending.
pub fn eye_levels(levels: u32) -> Vec<f64> {
    let m = u64::from(levels);
    let mut out: Vec<f64> = (0..m)
        .map(|k| 0.5 * (1.0 + Phase::from_fraction(k, m).radians().cos()))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

/// Synthesize a random RZ-MDPSK symbol stream, demodulate it, and summarize
/// the constellation and eye levels.
pub fn constellation_eye<R: Rng + ?Sized>(
    levels: u32,
    sigma_phi: f64,
    n_symbols: usize,
    rng: &mut R,
) -> Result<ConstellationReport> {
    if levels < 2 {
        return Err(invalid("levels", format!("must be >= 2, got {levels}")));
    }
    if n_symbols < levels as usize {
        return Err(invalid(
            "n_symbols",
            format!("must be >= levels ({levels}), got {n_symbols}"),
        ));
    }
    let m = u64::from(levels);
    let symbols: Vec<u64> = (0..n_symbols).map(|_| rng.random_range(0..m)).collect();
    let sequence = DifferentialPhaseSequence::from_levels(&symbols, levels)?;
    let mode = InjectionMode::modulated(sequence, sigma_phi, false);
    let train = emit_pulse_train(n_symbols + 1, 1.0, 0.5e-9, &mode, rng)?;
    let points = dual_basis_demodulate(&train)?;

    let clusters = (0..m)
        .filter_map(|k| {
            let members: Vec<&IqPoint> = points
                .iter()
                .zip(&symbols)
                .filter(|(_, &s)| s == k)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                return None;
            }
            let n = members.len() as f64;
            let (s, c) = members
                .iter()
                .fold((0.0, 0.0), |(s, c), p| (s + p.angle.sin(), c + p.angle.cos()));
            Some(ConstellationCluster {
                level: k,
                nominal_angle: Phase::from_fraction(k, m).radians(),
                mean_angle: IqPoint::new(1.0, s.atan2(c)).angle,
                mean_radius: members.iter().map(|p| p.radius).sum::<f64>() / n,
                count: members.len(),
            })
        })
        .collect();

    Ok(ConstellationReport {
        levels,
        phase_noise_sigma: sigma_phi,
        symbols,
        points,
        clusters,
        eye_levels: eye_levels(levels),
        eye_formula_applies: levels.is_multiple_of(2),
    })
}

/// Smallest angular distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
