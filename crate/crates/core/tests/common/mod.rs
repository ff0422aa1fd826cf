//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ilqkd::optics::{IntensityClass, PulseTrain};
use ilqkd::protocols::{AnalyticExpectations, ProtocolConfig, SessionResult};
use num_complex::Complex64;

/// Bar-port intensity from the field sum behind two balanced couplers:
/// `|a_k·e^{iθ} + a_{k−1}|² / 4` with `a = √I·e^{iφ}`.
pub fn amplitude_oracle(train: &PulseTrain, theta: f64) -> Vec<f64> {
    let a: Vec<Complex64> = train
        .pulses()
        .iter()
        .map(|p| Complex64::from_polar(p.mean_photons().sqrt(), p.phase_radians()))
        .collect();
    let rot = Complex64::from_polar(1.0, theta);
    a.windows(2).map(|w| (w[1] * rot + w[0]).norm_sqr() / 4.0).collect()
}

/// Two-sample Kolmogorov–Smirnov distance (inputs are sorted in place).
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS distance against `cdf` (input sorted in place).
pub fn ks_one_sample(a: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    a.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Binomial standard error of a frequency with success probability `p` over `n` trials.
pub fn binomial_sd(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Gain of a Poisson source of mean `mu` by explicit photon-number expansion
/// (`n = 0..=20`), two threshold ports with dark probability `pd` each.
pub fn poisson_expansion_gain(mu: f64, eta: f64, pd: f64) -> f64 {
    let mut term = (-mu).exp();
    let mut q = 0.0;
    for n in 0..=20u32 {
        if n > 0 {
            term *= mu / f64::from(n);
        }
        let yn = 1.0 - (1.0 - pd).powi(2) * (1.0 - eta).powi(n as i32);
        q += term * yn;
    }
    q
}

/// Delta-method standard errors of the vacuum + weak-decoy bounds
/// `(y1_lower, e1_upper)` for the class counts of session `r`, evaluated at
/// the model expectations `a` (observed counts can be zero at small sizes).
pub fn decoy_bound_sds(r: &SessionResult, cfg: &ProtocolConfig, a: &AnalyticExpectations) -> (f64, f64) {
    let (mu, nu) = (cfg.mu_signal, cfg.mu_decoy);
    let sent = |c| r.tally(c).expect("class tally").sent.max(1) as f64;
    let gain = |c| a.class(c).expect("class expectation").gain;
    let gain_var = |c| gain(c) * (1.0 - gain(c)) / sent(c);
    let pre = mu / (mu * nu - nu * nu);
    let ea = nu.exp();
    let eb = mu.exp() * nu * nu / (mu * mu);
    let ec = (mu * mu - nu * nu) / (mu * mu);
    let var_y1 = pre
        * pre
        * (ea * ea * gain_var(IntensityClass::Decoy)
            + eb * eb * gain_var(IntensityClass::Signal)
            + ec * ec * gain_var(IntensityClass::Vacuum));
    let est = a.decoy.expect("decoy estimate");
    if est.y1_lower <= 0.0 {
        return (var_y1.sqrt(), f64::INFINITY);
    }
    // E_ν·Q_ν counts sifted errors per decoy pair, scaled back by the sifting ratio
    let bm = cfg.basis_match_probability();
    let d = a.class(IntensityClass::Decoy).expect("decoy expectation");
    let eq = d.error_rate * d.gain;
    let var_eq = eq / (bm * sent(IntensityClass::Decoy));
    let den = est.y1_lower * nu;
    let var_e1 = (ea / den).powi(2) * var_eq
        + (0.5 / den).powi(2) * gain_var(IntensityClass::Vacuum)
        + (est.e1_upper / est.y1_lower).powi(2) * var_y1;
    (var_y1.sqrt(), var_e1.sqrt())
}
