//! Lossy fibre channel and threshold single-photon detectors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Standard single-mode fibre attenuation.
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.2;

const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    loss_db: f64,
    length_km: Option<f64>,
    alpha_db_per_km: f64,
}

impl ChannelModel {
    pub fn from_loss_db(loss_db: f64) -> Result<Self> {
        if !(loss_db >= 0.0 && loss_db.is_finite()) {
            return Err(invalid("loss_db", format!("must be finite and >= 0, got {loss_db}")));
        }
        Ok(ChannelModel {
            loss_db,
            length_km: None,
            alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
        })
    }

    pub fn from_length_km(length_km: f64, alpha_db_per_km: f64) -> Result<Self> {
        if !(length_km >= 0.0 && length_km.is_finite()) {
            return Err(invalid(
                "length_km",
                format!("must be finite and >= 0, got {length_km}"),
            ));
        }
        if !(alpha_db_per_km >= 0.0 && alpha_db_per_km.is_finite()) {
            return Err(invalid(
                "alpha_db_per_km",
                format!("must be finite and >= 0, got {alpha_db_per_km}"),
            ));
        }
        Ok(ChannelModel {
            loss_db: length_km * alpha_db_per_km,
            length_km: Some(length_km),
            alpha_db_per_km,
        })
    }

    pub fn loss_db(&self) -> f64 {
        self.loss_db
    }

    pub fn length_km(&self) -> Option<f64> {
        self.length_km
    }

    pub fn alpha_db_per_km(&self) -> f64 {
        self.alpha_db_per_km
    }

    /// Two spans in series; losses in dB add.
    pub fn then(&self, other: &ChannelModel) -> ChannelModel {
        ChannelModel {
            loss_db: self.loss_db + other.loss_db,
            length_km: None,
            alpha_db_per_km: self.alpha_db_per_km,
        }
    }

    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }
}

/// Validated `10^(−loss_db/10)`.
pub fn transmittance(loss_db: f64) -> Result<f64> {
    ChannelModel::from_loss_db(loss_db).map(|c| c.transmittance())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub gate_rate_hz: f64,
    pub label: String,
}

pub const PRESET_NAMES: [&str; 2] = ["snspd", "apd"];

impl DetectorModel {
    pub fn new(efficiency: f64, dark_rate_hz: f64, gate_rate_hz: f64, label: impl Into<String>) -> Result<Self> {
        let d = DetectorModel {
            efficiency,
            dark_rate_hz,
            gate_rate_hz,
            label: label.into(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Superconducting nanowire detector: 80 % efficiency, 90 Hz dark counts, free running.
    pub fn snspd() -> Self {
        DetectorModel {
            efficiency: 0.8,
            dark_rate_hz: 90.0,
            gate_rate_hz: 2e9,
            label: "snspd".into(),
        }
    }

    /// Gated InGaAs avalanche photodiode: 18 % efficiency, 25 kHz dark counts, 1 GHz gating.
    pub fn apd() -> Self {
        DetectorModel {
            efficiency: 0.18,
            dark_rate_hz: 25e3,
            gate_rate_hz: 1e9,
            label: "apd".into(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "snspd" => Ok(Self::snspd()),
            "apd" => Ok(Self::apd()),
            _ => Err(Error::UnknownPreset {
                name: name.to_string(),
                known: PRESET_NAMES.join(", "),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid(
                "efficiency",
                format!("must be in [0, 1], got {}", self.efficiency),
            ));
        }
        if !(self.dark_rate_hz >= 0.0 && self.dark_rate_hz.is_finite()) {
            return Err(invalid(
                "dark_rate_hz",
                format!("must be >= 0, got {}", self.dark_rate_hz),
            ));
        }
        if !(self.gate_rate_hz > 0.0 && self.gate_rate_hz.is_finite()) {
            return Err(invalid(
                "gate_rate_hz",
                format!("must be > 0, got {}", self.gate_rate_hz),
            ));
        }
        if self.p_dark() >= 1.0 {
            return Err(invalid(
                "dark_rate_hz",
                format!("dark probability per gate {} must be < 1", self.p_dark()),
            ));
        }
        Ok(())
    }

    /// Dark-count probability per gate.
    pub fn p_dark(&self) -> f64 {
        self.dark_rate_hz / self.gate_rate_hz
    }

    /// Fraction of slots of a `clock_hz` stream that fall in a detector gate.
    pub fn gated_fraction(&self, clock_hz: f64) -> f64 {
        (self.gate_rate_hz / clock_hz).min(1.0)
    }
}

/// Probability of a click for `mean_photons` arriving at the channel input.
pub fn click_probability(mean_photons: f64, channel: &ChannelModel, det: &DetectorModel) -> Result<f64> {
    if !(mean_photons >= 0.0 && mean_photons.is_finite()) {
        return Err(invalid(
            "mean_photons",
            format!("must be finite and >= 0, got {mean_photons}"),
        ));
    }
    det.validate()?;
    Ok(click_prob_raw(
        mean_photons * channel.transmittance() * det.efficiency,
        det.p_dark(),
    ))
}

/// `1 − (1 − p_dark)·e^{−x}` for `x` detected photons on average.
pub fn click_prob_raw(x: f64, p_dark: f64) -> f64 {
    // 1 − (1−d)e^{−x} = d + (1−d)(1 − e^{−x}), written to keep precision for tiny x
    p_dark + (1.0 - p_dark) * (-(-x).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClickRecord {
    pub slot_index: u64,
    pub clicked: bool,
    /// Monte-Carlo truth: the click came from the dark branch alone.
    pub is_dark_only: bool,
}

/// One detector gate with `x` detected photons on average.
///
/// Returns `(clicked, dark_only)`. Always consumes two uniforms.
pub fn sample_click<R: Rng + ?Sized>(x: f64, p_dark: f64, rng: &mut R) -> (bool, bool) {
    let dark = rng.random::<f64>() < p_dark;
    let signal = rng.random::<f64>() < -(-x).exp_m1();
    (dark || signal, dark && !signal)
}

fn validate_intensities(intensities: &[f64]) -> Result<()> {
    if let Some((i, v)) = intensities
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
    {
        return Err(invalid(
            "intensities",
            format!("entry {i} is {v}; must be finite and >= 0"),
        ));
    }
    Ok(())
}

/// Bernoulli click record per slot, drawn from `rng`.
pub fn simulate_detection<R: Rng + ?Sized>(
    intensities: &[f64],
    channel: &ChannelModel,
    det: &DetectorModel,
    rng: &mut R,
) -> Result<Vec<ClickRecord>> {
    validate_intensities(intensities)?;
    det.validate()?;
    let eta = channel.transmittance() * det.efficiency;
    let pd = det.p_dark();
    Ok(intensities
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let (clicked, is_dark_only) = sample_click(mu * eta, pd, rng);
            ClickRecord {
                slot_index: i as u64,
                clicked,
                is_dark_only,
            }
        })
        .collect())
}

/// Parallel [`simulate_detection`]; independent of the worker count for a fixed `seed`.
pub fn simulate_detection_seeded(
    intensities: &[f64],
    channel: &ChannelModel,
    det: &DetectorModel,
    seed: u64,
) -> Result<Vec<ClickRecord>> {
    validate_intensities(intensities)?;
    det.validate()?;
    let chunks: Vec<Vec<ClickRecord>> = intensities
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, part)| {
            let mut r = rng::substream(seed, "detection", c as u64);
            let mut recs = simulate_detection(part, channel, det, &mut r)?;
            for rec in &mut recs {
                rec.slot_index += (c * CHUNK) as u64;
            }
            Ok(recs)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}
