//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use ilqkd::harness::{interpolate, parse_config, point_seed, run_sweep, Quantity};
use ilqkd::linkmodel::{ChannelModel, DetectorModel};
use ilqkd::optics::{
    amzi_interfere, angle_distance, constellation_eye, emit_pulse_train, fringe_scan, fringe_visibility_with_error,
    sigma_for_visibility, AmziConfig, InjectionMode, OpticalPulse, OutputPort, Phase, PulseTrain,
};
use ilqkd::protocols::{
    analytic_expectations, run_bb84_session_seeded, run_session_seeded, ProtocolConfig, ProtocolKind, SessionResult,
};
use ilqkd::randomness::{analyze, quantize, sample_interference_seeded};
use ilqkd::rng::{derive_seed, seeded};
use rand::Rng;

use common::{amplitude_oracle, binomial_sd, decoy_bound_sds, poisson_expansion_gain, slope};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

fn within_factor(x: f64, centre: f64, f: f64) -> bool {
    x >= centre / f && x <= centre * f
}

fn experiment(kind: &str, detector: &str, points: &[f64], pulses: u64, seed: u64) -> ilqkd::harness::ExperimentConfig {
    let text = format!(
        r#"{{ "schema_version": 1, "protocol": {{ "kind": "{kind}" }}, "channel": {{ "loss_db": {points:?} }},
            "detector": "{detector}", "pulses_per_point": {pulses}, "seed": {seed} }}"#
    );
    parse_config(&text).expect("acceptance config")
}

fn c1_amzi_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(101);
    let mut worst = 0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(2..=100);
        let theta = rng.random_range(-TAU..TAU);
        let pulses = (0..n)
            .map(|k| OpticalPulse::new(k as u64, rng.random_range(0.0..10.0), Phase::random(&mut rng)))
            .collect::<ilqkd::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let train = PulseTrain::new(pulses, 0.5e-9).map_err(|e| e.to_string())?;
        let oracle = amplitude_oracle(&train, theta);
        for port in [OutputPort::Bar, OutputPort::Cross] {
            let recs = amzi_interfere(&train, &AmziConfig::matched(&train, theta, port)).map_err(|e| e.to_string())?;
            for (r, o) in recs.iter().zip(&oracle) {
                let expect = if port == OutputPort::Bar {
                    *o
                } else {
                    r.input_intensity - o
                };
                worst = worst.max((r.intensity_out - expect).abs());
            }
        }
    }
    let t = start.elapsed();
    check(
        worst <= 1e-10 && t < Duration::from_secs(1),
        format!("max |AMZI − field-sum oracle| = {worst:.2e} over 10^4 trains, {t:.2?}"),
    )
}

fn c2_arcsine_statistics() -> Outcome {
    let start = Instant::now();
    let s = sample_interference_seeded(1_025_000, 1.0, 202).map_err(|e| e.to_string())?;
    let q = quantize(&s, 1.0).map_err(|e| e.to_string())?;
    let r = analyze(&q, 1.0, 50).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(
        r.p_value > 0.01 && r.max_abs_autocorr < 5e-3 && t < Duration::from_secs(5),
        format!(
            "chi2 = {:.1}, p = {:.3}, max |autocorr| lags 1-50 = {:.2e}, {t:.2?}",
            r.chi_square, r.p_value, r.max_abs_autocorr
        ),
    )
}

fn c3_visibility() -> Outcome {
    let sigma = (-2.0 * 0.983f64.ln()).sqrt();
    let settings: Vec<f64> = (0..16).map(|k| TAU * k as f64 / 16.0).collect();
    let mut rng = seeded(303);
    let locked = emit_pulse_train(1_000_000, 1.0, 0.5e-9, &InjectionMode::cw_locked(sigma), &mut rng)
        .map_err(|e| e.to_string())?;
    let (v, se) =
        fringe_visibility_with_error(&fringe_scan(&locked, &settings, OutputPort::Bar).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let off = emit_pulse_train(1_000_000, 1.0, 0.5e-9, &InjectionMode::Off, &mut rng).map_err(|e| e.to_string())?;
    let (v_off, _) =
        fringe_visibility_with_error(&fringe_scan(&off, &settings, OutputPort::Bar).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    check(
        within(v, 0.983, 0.002) && v_off < 0.01 && sigma_for_visibility(0.983).is_ok(),
        format!("σ_φ = {sigma:.5} rad: V = {v:.5} ± {se:.1e}; injection off: V = {v_off:.4}"),
    )
}

fn c4_constellation() -> Outcome {
    let mut rng = seeded(404);
    let rep = constellation_eye(8, 0.0, 80_000, &mut rng).map_err(|e| e.to_string())?;
    let worst = rep
        .clusters
        .iter()
        .map(|c| angle_distance(c.mean_angle, TAU * c.level as f64 / 8.0))
        .fold(0.0, f64::max);
    check(
        rep.clusters.len() == 8 && worst < 1e-9 && rep.eye_levels.len() == 5,
        format!(
            "{} clusters, worst mean-angle error {worst:.1e} rad, {} eye levels",
            rep.clusters.len(),
            rep.eye_levels.len()
        ),
    )
}

fn timed_sessions(cfg: &ilqkd::harness::ExperimentConfig) -> Result<Vec<(f64, SessionResult, Duration)>, String> {
    cfg.loss_db
        .iter()
        .map(|&db| {
            let ch = ChannelModel::from_loss_db(db).map_err(|e| e.to_string())?;
            let start = Instant::now();
            let r = run_session_seeded(
                &cfg.protocol,
                &ch,
                &cfg.detector,
                cfg.pulses_per_point as usize,
                point_seed(cfg.seed, db),
            )
            .map_err(|e| e.to_string())?;
            Ok((db, r, start.elapsed()))
        })
        .collect()
}

fn c5_dps_snspd() -> Outcome {
    let cfg = experiment("dps", "snspd", &[5.0, 10.0, 15.0, 20.0, 25.0], 10_000_000, 505);
    let runs = timed_sessions(&cfg)?;
    let (_, at20, _) = runs.iter().find(|(db, _, _)| *db == 20.0).ok_or("no 20 dB row")?;
    let xs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = runs.iter().map(|r| r.1.skr_bps.max(1e-300).log10()).collect();
    let k = slope(&xs, &ys);
    let slowest = runs.iter().map(|r| r.2).max().unwrap_or_default();
    check(
        within(at20.qber, 0.025, 0.005)
            && within_factor(at20.skr_bps, 400e3, 2.0)
            && within(k, -0.1, 0.02)
            && slowest < Duration::from_secs(10),
        format!(
            "20 dB: QBER {:.3}%, SKR {:.0} b/s; slope {k:.4} decades/dB over 5-25 dB; slowest point {slowest:.2?}",
            100.0 * at20.qber,
            at20.skr_bps
        ),
    )
}

fn c6_bb84_snspd() -> Outcome {
    let cfg = experiment("bb84_decoy", "snspd", &[15.0, 20.0], 10_000_000, 606);
    let table = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let at = |db, q| interpolate(&table, db, q, "bb84").map_err(|e| e.to_string());
    let (q20, r20) = (at(20.0, Quantity::Qber)?, at(20.0, Quantity::SkrBps)?);
    let (q167, r167) = (at(16.7, Quantity::Qber)?, at(16.7, Quantity::SkrBps)?);
    check(
        table.failures.is_empty()
            && within(q20, 0.022, 0.005)
            && within_factor(r20, 270e3, 2.0)
            && within(q167, 0.0204, 0.005)
            && within_factor(r167, 618e3, 2.0),
        format!(
            "20 dB: QBER {:.3}%, SKR {r20:.0} b/s; 16.7 dB (interpolated): QBER {:.3}%, SKR {r167:.0} b/s",
            100.0 * q20,
            100.0 * q167
        ),
    )
}

fn c7_apd() -> Outcome {
    let ch = ChannelModel::from_loss_db(10.0).map_err(|e| e.to_string())?;
    let apd = DetectorModel::apd();
    let bb =
        run_session_seeded(&ProtocolConfig::bb84_default(), &ch, &apd, 100_000_000, 707).map_err(|e| e.to_string())?;
    let dps =
        run_session_seeded(&ProtocolConfig::dps_default(), &ch, &apd, 100_000_000, 708).map_err(|e| e.to_string())?;
    check(
        within(bb.qber, 0.032, 0.007)
            && within(dps.qber, 0.035, 0.007)
            && within_factor(bb.skr_bps, 840e3, 2.0)
            && within_factor(dps.skr_bps, 125e3, 2.0),
        format!(
            "BB84: QBER {:.3}%, SKR {:.0} b/s; DPS: QBER {:.3}%, SKR {:.0} b/s",
            100.0 * bb.qber,
            bb.skr_bps,
            100.0 * dps.qber,
            dps.skr_bps
        ),
    )
}

fn c8_decoy_soundness() -> Outcome {
    let cfg = ProtocolConfig::bb84_default();
    let ch = ChannelModel::from_loss_db(10.0).map_err(|e| e.to_string())?;
    let det = DetectorModel::snspd();
    let expected = analytic_expectations(&cfg, &ch, &det).map_err(|e| e.to_string())?;
    let mut y1_ok = 0;
    for trial in 0..100 {
        let r = run_bb84_session_seeded(&cfg, &ch, &det, 200_000, derive_seed(808, "decoy-trial", trial))
            .map_err(|e| e.to_string())?;
        let est = r.decoy.ok_or("no decoy estimate")?;
        let truth = r.photon_truth.ok_or("no photon truth")?;
        let y1 = truth.y1();
        let sd_y1 = (decoy_bound_sds(&r, &cfg, &expected).0.powi(2)
            + binomial_sd(y1, truth.single_photon_sent as f64).powi(2))
        .sqrt();
        y1_ok += usize::from(est.y1_lower <= y1 + 3.0 * sd_y1);
    }
    let mut worst = 0f64;
    for db in [0.0, 10.0, 20.0, 30.0] {
        let ch = ChannelModel::from_loss_db(db).map_err(|e| e.to_string())?;
        let a = analytic_expectations(&cfg, &ch, &det).map_err(|e| e.to_string())?;
        let eta = ch.transmittance() * det.efficiency * cfg.temporal_efficiency;
        for c in &a.classes {
            worst = worst.max((c.gain - poisson_expansion_gain(c.mu, eta, det.p_dark())).abs());
        }
    }
    check(
        y1_ok >= 99 && worst <= 1e-10,
        format!("Y1 bound sound in {y1_ok}/100 trials; Poisson expansion vs closed-form gain max diff {worst:.1e}"),
    )
}

fn c9_consistency() -> Outcome {
    let det = DetectorModel::snspd();
    let mut worst = 0f64;
    let mut checked = 0;
    for kind in [ProtocolKind::Dps, ProtocolKind::Bb84Decoy] {
        let cfg = ProtocolConfig::default_for(kind);
        for db in [0.0, 10.0, 20.0] {
            let ch = ChannelModel::from_loss_db(db).map_err(|e| e.to_string())?;
            let n = 10_000_000;
            let r = run_session_seeded(&cfg, &ch, &det, n, derive_seed(909, kind.name(), db as u64))
                .map_err(|e| e.to_string())?;
            let a = analytic_expectations(&cfg, &ch, &det).map_err(|e| e.to_string())?;
            let mut z = |obs: f64, exp: f64, sd: f64| {
                checked += 1;
                if sd > 0.0 {
                    worst = worst.max((obs - exp).abs() / sd);
                }
            };
            for c in &a.classes {
                let t = r.tally(c.class).ok_or("missing tally")?;
                z(t.gain(), c.gain, binomial_sd(c.gain, t.sent as f64));
                if t.sifted > 0 {
                    z(t.error_rate(), c.error_rate, binomial_sd(c.error_rate, t.sifted as f64));
                }
            }
            let sift_p = a.sifted_rate_hz / cfg.clock_hz;
            z(r.sifted_rate_hz / cfg.clock_hz, sift_p, binomial_sd(sift_p, n as f64));
        }
    }
    check(
        worst <= 3.0,
        format!("{checked} quantities, worst deviation {worst:.2} σ"),
    )
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{ "schema_version": 1, "protocol": { "kind": "bb84_decoy" }, "channel": { "loss_db": [0, 10, 20] },
             "detector": "snspd", "pulses_per_point": 300000, "seed": 1010 }"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (workers, format) in [(1, "csv"), (1, "csv"), (8, "csv"), (1, "json"), (8, "json")] {
        let out = dir.path().join(format!("out-{}.{format}", outputs.len()));
        let status = Command::new(env!("CARGO_BIN_EXE_ilqkd"))
            .args([
                "--workers",
                &workers.to_string(),
                "sweep",
                "--format",
                format,
                "--config",
            ])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("sweep exited with {status}"));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let csv_same = outputs[0] == outputs[1] && outputs[1] == outputs[2];
    let json_same = outputs[3] == outputs[4];
    check(
        csv_same && json_same && !outputs[0].is_empty(),
        format!(
            "CSV identical across runs and 1/8 workers: {csv_same}; JSON identical across 1/8 workers: {json_same}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AMZI interference exactness", c1_amzi_exactness),
        ("arcsine statistics of the QRNG", c2_arcsine_statistics),
        ("visibility calibration", c3_visibility),
        ("RZ-8DPSK constellation and eye", c4_constellation),
        ("DPS, SNSPD, 20 dB", c5_dps_snspd),
        ("decoy BB84, SNSPD, 20 dB and 16.7 dB", c6_bb84_snspd),
        ("APD preset at 10 dB", c7_apd),
        ("decoy-bound soundness", c8_decoy_soundness),
        ("analytic / Monte-Carlo consistency", c9_consistency),
        ("sweep determinism across workers", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{t:.1?}]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{t:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
