//! Phase-randomization QRNG.
//!
//! With the master laser off, consecutive gain-switched pulses have uniformly
//! random relative phase, so the AMZI output intensity follows the arcsine
//! law. Intensities are digitized to bytes, checked against the arcsine
//! model, and compressed to near-uniform bits with a Toeplitz extractor.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::{Rng, RngCore, SeedableRng};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::optics::Phase;
use crate::rng::{self, SimRng};

pub const BINS: usize = 256;
/// Lags examined by default: 50 pulses, i.e. 25 ns at 2 GHz.
pub const DEFAULT_MAX_LAG: usize = 50;
/// Bits withheld from the extractor output on top of the min-entropy bound.
pub const SECURITY_MARGIN_BITS: usize = 64;

const CHUNK: usize = 1 << 16;

/// Arcsine density of the interference intensity.
pub fn arcsine_pdf(i_out: f64, i_in: f64) -> Result<f64> {
    if !(i_in > 0.0 && i_in.is_finite()) {
        return Err(invalid("i_in", format!("must be > 0, got {i_in}")));
    }
    if !(i_out > 0.0 && i_out < i_in) {
        return Err(invalid(
            "i_out",
            format!("density diverges outside the open interval (0, {i_in}), got {i_out}"),
        ));
    }
    Ok(1.0 / (PI * (i_out * (i_in - i_out)).sqrt()))
}

/// Probability that the interference intensity is at most `i_out`.
pub fn arcsine_cdf(i_out: f64, i_in: f64) -> Result<f64> {
    if !(i_in > 0.0 && i_in.is_finite()) {
        return Err(invalid("i_in", format!("must be > 0, got {i_in}")));
    }
    if !(0.0..=i_in).contains(&i_out) {
        return Err(invalid("i_out", format!("must be in [0, {i_in}], got {i_out}")));
    }
    Ok(FRAC_2_PI * (i_out / i_in).sqrt().asin())
}

/// Inverse of [`arcsine_cdf`].
pub fn arcsine_quantile(u: f64, i_in: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(invalid("u", format!("must be in [0, 1], got {u}")));
    }
    if !(i_in > 0.0 && i_in.is_finite()) {
        return Err(invalid("i_in", format!("must be > 0, got {i_in}")));
    }
    Ok(i_in * (u * PI / 2.0).sin().powi(2))
}

fn cdf_clamped(x: f64, i_in: f64) -> f64 {
    FRAC_2_PI * (x / i_in).clamp(0.0, 1.0).sqrt().asin()
}

/// Raw interference intensities and, once quantized, their digitized bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QrngSampleSet {
    pub intensities: Vec<f64>,
    pub input_intensity: f64,
    pub bytes: Vec<u8>,
    pub sample_count: usize,
}

impl QrngSampleSet {
    /// Sample set from externally supplied relative phases.
    pub fn from_phases(phases: impl IntoIterator<Item = Phase>, i_in: f64) -> Result<Self> {
        if !(i_in > 0.0 && i_in.is_finite()) {
            return Err(invalid("i_in", format!("must be > 0, got {i_in}")));
        }
        let intensities: Vec<f64> = phases.into_iter().map(|p| intensity_for(p, i_in)).collect();
        if intensities.is_empty() {
            return Err(Error::EmptyInput("no interference events"));
        }
        Ok(QrngSampleSet {
            sample_count: intensities.len(),
            intensities,
            input_intensity: i_in,
            bytes: Vec::new(),
        })
    }

    pub fn is_quantized(&self) -> bool {
        self.bytes.len() == self.intensities.len()
    }
}

fn intensity_for(phi: Phase, i_in: f64) -> f64 {
    (0.5 * i_in * (1.0 + phi.radians().cos())).clamp(0.0, i_in)
}

/// Interference events with uniform relative phase drawn from `rng`.
pub fn sample_interference<R: RngCore + ?Sized>(n: usize, i_in: f64, rng: &mut R) -> Result<QrngSampleSet> {
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    QrngSampleSet::from_phases((0..n).map(|_| Phase::random(rng)), i_in)
}

/// Same as [`sample_interference`] but generated in parallel chunks, each
/// from its own substream of `seed`. The result does not depend on the
/// number of rayon workers.
pub fn sample_interference_seeded(n: usize, i_in: f64, seed: u64) -> Result<QrngSampleSet> {
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    if !(i_in > 0.0 && i_in.is_finite()) {
        return Err(invalid("i_in", format!("must be > 0, got {i_in}")));
    }
    let mut intensities = vec![0.0; n];
    intensities.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
        let mut r = rng::substream(seed, "qrng", c as u64);
        for v in out {
            *v = intensity_for(Phase::random(&mut r), i_in);
        }
    });
    Ok(QrngSampleSet {
        sample_count: n,
        intensities,
        input_intensity: i_in,
        bytes: Vec::new(),
    })
}

/// Inverse-CDF draw from the arcsine law; an independent route to the same distribution.
pub fn sample_arcsine_inverse<R: Rng + ?Sized>(n: usize, i_in: f64, rng: &mut R) -> Result<Vec<f64>> {
    (0..n).map(|_| arcsine_quantile(rng.random::<f64>(), i_in)).collect()
}

/// Byte code of one intensity: `floor(256·I/full_scale)` clamped to 255.
pub fn quantize_value(i_out: f64, full_scale: f64) -> u8 {
    (256.0 * i_out / full_scale).floor().clamp(0.0, 255.0) as u8
}

/// Digitize every intensity with an 8-bit converter spanning `[0, full_scale]`.
pub fn quantize(samples: &QrngSampleSet, full_scale: f64) -> Result<QrngSampleSet> {
    if !(full_scale > 0.0 && full_scale.is_finite()) {
        return Err(invalid("full_scale", format!("must be > 0, got {full_scale}")));
    }
    if full_scale < samples.input_intensity {
        return Err(invalid(
            "full_scale",
            format!(
                "must be >= input intensity {}, got {full_scale}",
                samples.input_intensity
            ),
        ));
    }
    let bytes = samples
        .intensities
        .iter()
        .map(|&i| quantize_value(i, full_scale))
        .collect();
    Ok(QrngSampleSet {
        bytes,
        ..samples.clone()
    })
}

pub fn histogram(bytes: &[u8]) -> Vec<u64> {
    let mut h = vec![0u64; BINS];
    for &b in bytes {
        h[b as usize] += 1;
    }
    h
}

/// Lag-`k` Pearson correlation for `k = 1..=max_lag`.
pub fn byte_autocorrelation(bytes: &[u8], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(invalid("max_lag", "must be >= 1"));
    }
    if bytes.len() <= max_lag + 1 {
        return Err(Error::InsufficientSamples {
            needed: max_lag + 1,
            got: bytes.len(),
        });
    }
    if bytes.iter().all(|&b| b == bytes[0]) {
        return Err(Error::ZeroVariance);
    }
    let x: Vec<f64> = bytes.iter().map(|&b| f64::from(b)).collect();
    (1..=max_lag)
        .into_par_iter()
        .map(|k| pearson(&x[..x.len() - k], &x[k..]))
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Expected count in each byte bin for `n` ideal arcsine samples.
pub fn expected_bin_counts(n: u64, i_in: f64, full_scale: f64) -> Result<Vec<f64>> {
    if !(i_in > 0.0 && full_scale > 0.0) {
        return Err(invalid("full_scale", "intensity and full scale must be > 0"));
    }
    let step = full_scale / BINS as f64;
    let nf = n as f64;
    Ok((0..BINS)
        .map(|b| {
            let lo = cdf_clamped(b as f64 * step, i_in);
            let hi = if b == BINS - 1 {
                1.0
            } else {
                cdf_clamped((b + 1) as f64 * step, i_in)
            };
            nf * (hi - lo)
        })
        .collect())
}

/// Pearson chi-square of `observed` against `expected`.
///
/// Bins are merged left to right until each group expects at least 5
/// counts; a short remainder joins the last group.
pub fn chi_square_counts(observed: &[f64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(invalid("observed", "must be non-empty and match the expected bins"));
    }
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob;
        e += ex;
        if e >= 5.0 {
            groups.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if o > 0.0 || e > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => groups.push((o, e)),
        }
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateHistogram(
            "fewer than two bins with expected count >= 5",
        ));
    }
    let chi: f64 = groups.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((groups.len() - 1) as f64).map_err(|e| invalid("dof", e.to_string()))?;
    Ok((chi, dist.sf(chi).clamp(0.0, 1.0)))
}

/// Chi-square test of a byte histogram against the quantized arcsine law.
pub fn goodness_of_fit(hist: &[u64], i_in: f64, full_scale: f64) -> Result<(f64, f64)> {
    if hist.len() != BINS {
        return Err(invalid(
            "histogram",
            format!("must have {BINS} bins, got {}", hist.len()),
        ));
    }
    let n: u64 = hist.iter().sum();
    if n < 10_000 {
        return Err(Error::InsufficientSamples {
            needed: 9_999,
            got: n as usize,
        });
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram("all mass in one bin"));
    }
    let expected = expected_bin_counts(n, i_in, full_scale)?;
    let observed: Vec<f64> = hist.iter().map(|&c| c as f64).collect();
    chi_square_counts(&observed, &expected)
}

/// `−log2` of the most probable bin frequency.
pub fn min_entropy(hist: &[u64]) -> Result<f64> {
    let n: u64 = hist.iter().sum();
    if n == 0 {
        return Err(Error::EmptyInput("histogram has no counts"));
    }
    let max = *hist.iter().max().unwrap_or(&0);
    Ok((-(max as f64 / n as f64).log2()).clamp(0.0, 8.0))
}

/// Min-entropy per byte of ideal arcsine samples digitized over `[0, full_scale]`.
pub fn ideal_min_entropy(i_in: f64, full_scale: f64) -> Result<f64> {
    let p = expected_bin_counts(1, i_in, full_scale)?;
    let max = p.iter().copied().fold(0.0, f64::max);
    Ok(-max.log2())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomnessReport {
    pub sample_count: usize,
    pub input_intensity: f64,
    pub full_scale: f64,
    pub histogram: Vec<u64>,
    pub chi_square: f64,
    pub p_value: f64,
    pub autocorr: Vec<f64>,
    pub max_abs_autocorr: f64,
    pub min_entropy_bits: f64,
}

/// All statistics of a quantized sample set.
pub fn analyze(samples: &QrngSampleSet, full_scale: f64, max_lag: usize) -> Result<RandomnessReport> {
    if !samples.is_quantized() {
        return Err(invalid("samples", "must be quantized before analysis"));
    }
    let hist = histogram(&samples.bytes);
    let (chi_square, p_value) = goodness_of_fit(&hist, samples.input_intensity, full_scale)?;
    let autocorr = byte_autocorrelation(&samples.bytes, max_lag)?;
    Ok(RandomnessReport {
        sample_count: samples.sample_count,
        input_intensity: samples.input_intensity,
        full_scale,
        max_abs_autocorr: autocorr.iter().fold(0.0, |m, c| f64::max(m, c.abs())),
        min_entropy_bits: min_entropy(&hist)?,
        histogram: hist,
        chi_square,
        p_value,
        autocorr,
    })
}

/// Bits of `bytes`, most significant first.
pub fn unpack_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect()
}

/// Pack 0/1 values into bytes, most significant first; a partial tail byte is zero-padded.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))
        })
        .collect()
}

/// Binary Toeplitz matrix with `rows × cols` entries, `T[i][j] = diag[i − j + cols − 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzMatrix {
    rows: usize,
    cols: usize,
    diag: Vec<u8>,
}

impl ToeplitzMatrix {
    /// Matrix given by its first row (length `cols`) and first column (length `rows`).
    pub fn from_row_col(first_row: &[u8], first_col: &[u8]) -> Result<Self> {
        if first_row.is_empty() || first_col.is_empty() {
            return Err(invalid("toeplitz", "first row and column must be non-empty"));
        }
        if first_row[0] != first_col[0] {
            return Err(invalid("toeplitz", "first row and column disagree on the corner entry"));
        }
        let cols = first_row.len();
        let diag = first_row.iter().rev().chain(&first_col[1..]).map(|b| b & 1).collect();
        Ok(ToeplitzMatrix {
            rows: first_col.len(),
            cols,
            diag,
        })
    }

    /// Matrix whose entries are drawn from a generator seeded with `seed`.
    pub fn from_seed(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("toeplitz", "dimensions must be >= 1"));
        }
        let mut r = SimRng::seed_from_u64(seed);
        let len = rows + cols - 1;
        let mut diag = Vec::with_capacity(len + 63);
        while diag.len() < len {
            let w = r.next_u64();
            diag.extend((0..64).map(|i| ((w >> i) & 1) as u8));
        }
        diag.truncate(len);
        Ok(ToeplitzMatrix { rows, cols, diag })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.diag[i + self.cols - 1 - j]
    }

    /// `T·x` over GF(2), computed directly in `O(rows·cols)`.
    pub fn apply_naive(&self, bits: &[u8]) -> Result<Vec<u8>> {
        self.check_len(bits)?;
        Ok((0..self.rows)
            .map(|i| {
                bits.iter()
                    .enumerate()
                    .fold(0u8, |acc, (j, &x)| acc ^ (self.entry(i, j) & x & 1))
            })
            .collect())
    }

    /// `T·x` over GF(2) via one complex FFT of size `≥ rows + cols`.
    ///
    /// Integer correlation sums are recovered by rounding and reduced mod 2.
    /// Both real sequences share one complex buffer.
    pub fn apply(&self, bits: &[u8]) -> Result<Vec<u8>> {
        self.check_len(bits)?;
        let n = (self.rows + self.cols).next_power_of_two();
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
        for (k, &t) in self.diag.iter().enumerate() {
            buf[k].re = f64::from(t);
        }
        for (j, &x) in bits.iter().enumerate() {
            buf[j].im = f64::from(x & 1);
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        // Z = T + iX  =>  T_k = (Z_k + conj Z_{-k})/2,  X_k = (Z_k − conj Z_{-k})/(2i)
        let half = Complex::new(0.5, 0.0);
        let prod = |zk: Complex<f64>, zm: Complex<f64>| {
            let t = (zk + zm.conj()) * half;
            let x = (zk - zm.conj()) * Complex::new(0.0, -0.5);
            t * x
        };
        for k in 0..=n / 2 {
            let m = (n - k) % n;
            let (zk, zm) = (buf[k], buf[m]);
            buf[k] = prod(zk, zm);
            if m != k {
                buf[m] = prod(zm, zk);
            }
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        Ok((0..self.rows)
            .map(|i| ((buf[i + self.cols - 1].re * scale).round() as i64 & 1) as u8)
            .collect())
    }

    fn check_len(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.cols {
            return Err(invalid(
                "bits",
                format!("input has {} bits, matrix expects {}", bits.len(), self.cols),
            ));
        }
        Ok(())
    }
}

/// Largest extractor output for `n_bytes` bytes of min-entropy `h_min` bits each.
pub fn extraction_budget(n_bytes: usize, h_min: f64) -> usize {
    let raw = (n_bytes as f64 * h_min).floor() as usize;
    raw.saturating_sub(SECURITY_MARGIN_BITS)
}

/// Hash `bytes` to `out_len_bits` near-uniform bits, budgeted by the empirical min-entropy.
pub fn extract_bits(bytes: &[u8], out_len_bits: usize, seed_matrix_seed: u64) -> Result<Vec<u8>> {
    if out_len_bits == 0 {
        return Ok(Vec::new());
    }
    if bytes.is_empty() {
        return Err(Error::EmptyInput("no bytes to extract from"));
    }
    let h = min_entropy(&histogram(bytes))?;
    extract_bits_with_entropy(bytes, out_len_bits, seed_matrix_seed, h)
}

/// As [`extract_bits`] with a caller-supplied min-entropy per byte.
pub fn extract_bits_with_entropy(
    bytes: &[u8],
    out_len_bits: usize,
    seed_matrix_seed: u64,
    h_min: f64,
) -> Result<Vec<u8>> {
    if out_len_bits == 0 {
        return Ok(Vec::new());
    }
    let available = extraction_budget(bytes.len(), h_min.clamp(0.0, 8.0));
    if out_len_bits > available {
        return Err(Error::EntropyBudgetExceeded {
            requested: out_len_bits,
            available,
        });
    }
    let bits = unpack_bits(bytes);
    ToeplitzMatrix::from_seed(out_len_bits, bits.len(), seed_matrix_seed)?.apply(&bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_values() {
        assert!((arcsine_pdf(0.5, 1.0).unwrap() - 2.0 / PI).abs() < 1e-12);
        assert!((arcsine_pdf(0.25, 1.0).unwrap() - 4.0 / (PI * 3f64.sqrt())).abs() < 1e-12);
        assert!(arcsine_pdf(0.0, 1.0).is_err());
        assert!(arcsine_pdf(1.0, 1.0).is_err());
        assert!(arcsine_pdf(0.5, 0.0).is_err());
    }

    #[test]
    fn cdf_values() {
        assert_eq!(arcsine_cdf(0.0, 1.0).unwrap(), 0.0);
        assert!((arcsine_cdf(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((arcsine_cdf(0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(arcsine_cdf(1.5, 1.0).is_err());
        assert!(arcsine_cdf(-0.1, 1.0).is_err());
    }

    #[test]
    fn quantizer_examples() {
        assert_eq!(quantize_value(0.0, 1.0), 0);
        assert_eq!(quantize_value(1.0, 1.0), 255);
        assert_eq!(quantize_value(0.5, 1.0), 128);
        let s = QrngSampleSet::from_phases([Phase::ZERO], 1.0).unwrap();
        assert!(quantize(&s, 0.0).is_err());
        assert!(quantize(&s, 0.5).is_err());
    }

    #[test]
    fn forced_destructive_phase_gives_zero() {
        let s = QrngSampleSet::from_phases(std::iter::repeat_n(Phase::HALF_TURN, 100), 1.0).unwrap();
        assert!(s.intensities.iter().all(|&i| i == 0.0));
    }

    #[test]
    fn autocorrelation_errors_and_duplicates() {
        assert!(matches!(byte_autocorrelation(&[7u8; 100], 5), Err(Error::ZeroVariance)));
        assert!(matches!(
            byte_autocorrelation(&[1, 2, 3], 5),
            Err(Error::InsufficientSamples { .. })
        ));
        let mut r = rng::seeded(9);
        let base: Vec<u8> = (0..100_000).map(|_| r.random()).collect();
        let dup: Vec<u8> = base.iter().flat_map(|&b| [b, b]).collect();
        let c = byte_autocorrelation(&dup, 2).unwrap();
        assert!((c[0] - 0.5).abs() < 0.01, "{c:?}");
        assert!(c[1].abs() < 0.01);
    }

    #[test]
    fn chi_square_of_exact_expectation_is_zero() {
        let e = expected_bin_counts(1_000_000, 1.0, 1.0).unwrap();
        let (chi, p) = chi_square_counts(&e, &e).unwrap();
        assert_eq!(chi, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_histograms() {
        let mut h = vec![0u64; BINS];
        h[3] = 50_000;
        assert!(matches!(
            goodness_of_fit(&h, 1.0, 1.0),
            Err(Error::DegenerateHistogram(_))
        ));
        assert_eq!(min_entropy(&h).unwrap(), 0.0);
        assert!(min_entropy(&[0u64; BINS]).is_err());
        assert_eq!(min_entropy(&[10u64; BINS]).unwrap(), 8.0);
    }

    #[test]
    fn ideal_min_entropy_value() {
        let h = ideal_min_entropy(1.0, 1.0).unwrap();
        let oracle = -(1.0 - FRAC_2_PI * (255.0f64 / 256.0).sqrt().asin()).log2();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 4.65).abs() < 0.01);
    }

    #[test]
    fn bit_packing_roundtrip() {
        let bytes = [0b1000_0001u8, 0x5a];
        let bits = unpack_bits(&bytes);
        assert_eq!(&bits[..8], &[1, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(pack_bits(&bits), bytes);
    }

    #[test]
    fn single_row_selects_first_bit() {
        let mut row = vec![0u8; 16];
        row[0] = 1;
        let t = ToeplitzMatrix::from_row_col(&row, &[1]).unwrap();
        for byte in [0x80u8, 0x7f] {
            let bits = unpack_bits(&[byte, 0x33]);
            assert_eq!(t.apply(&bits).unwrap(), vec![bits[0]]);
            assert_eq!(t.apply_naive(&bits).unwrap(), vec![bits[0]]);
        }
    }

    #[test]
    fn fft_matches_naive_product() {
        let mut r = rng::seeded(11);
        for (rows, cols) in [(1, 1), (3, 17), (64, 200), (257, 100)] {
            let t = ToeplitzMatrix::from_seed(rows, cols, r.random()).unwrap();
            let bits: Vec<u8> = (0..cols).map(|_| r.random_range(0..2)).collect();
            assert_eq!(t.apply(&bits).unwrap(), t.apply_naive(&bits).unwrap(), "{rows}x{cols}");
        }
    }

    #[test]
    fn extraction_budget_is_enforced() {
        assert!(extract_bits(&[], 0, 1).unwrap().is_empty());
        let bytes: Vec<u8> = (0..=255).collect();
        // uniform histogram: 8 bits per byte
        let budget = extraction_budget(256, 8.0);
        assert_eq!(budget, 256 * 8 - 64);
        assert_eq!(extract_bits(&bytes, budget, 3).unwrap().len(), budget);
        assert!(matches!(
            extract_bits(&bytes, budget + 1, 3),
            Err(Error::EntropyBudgetExceeded { .. })
        ));
    }
}
