mod common;

use ilqkd::linkmodel::*;
use proptest::prelude::*;

use common::binomial_sd;

fn detector(eff: f64, dark: f64) -> DetectorModel {
    DetectorModel::new(eff, dark, 1e9, "test").unwrap()
}

proptest! {
    #[test]
    fn click_probability_is_monotone(
        mu in 0.0f64..5.0, dmu in 0.0f64..1.0,
        db in 0.0f64..40.0, ddb in 0.0f64..5.0,
        eff in 0.0f64..0.9, deff in 0.0f64..0.1,
        dark in 0.0f64..1e6, ddark in 0.0f64..1e6,
    ) {
        let base = click_probability(mu, &ChannelModel::from_loss_db(db).unwrap(), &detector(eff, dark)).unwrap();
        let ch = ChannelModel::from_loss_db(db).unwrap();
        prop_assert!(click_probability(mu + dmu, &ch, &detector(eff, dark)).unwrap() >= base);
        prop_assert!(click_probability(mu, &ChannelModel::from_loss_db(db + ddb).unwrap(), &detector(eff, dark)).unwrap() <= base);
        prop_assert!(click_probability(mu, &ch, &detector(eff + deff, dark)).unwrap() >= base);
        prop_assert!(click_probability(mu, &ch, &detector(eff, dark + ddark)).unwrap() >= base);
    }

    #[test]
    fn channels_compose(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let ca = ChannelModel::from_loss_db(a).unwrap();
        let cb = ChannelModel::from_loss_db(b).unwrap();
        let joint = ca.then(&cb);
        prop_assert_eq!(joint.loss_db(), ChannelModel::from_loss_db(a + b).unwrap().loss_db());
        let product = ca.transmittance() * cb.transmittance();
        prop_assert!((joint.transmittance() - product).abs() <= 1e-13 * product);
    }

    #[test]
    fn length_sets_loss(km in 0.0f64..500.0, alpha in 0.1f64..0.5) {
        let c = ChannelModel::from_length_km(km, alpha).unwrap();
        prop_assert_eq!(c.loss_db(), km * alpha);
        prop_assert!(c.transmittance() > 0.0 && c.transmittance() <= 1.0);
    }
}

#[test]
fn presets_agree_with_monte_carlo() {
    for det in [DetectorModel::snspd(), DetectorModel::apd()] {
        for (mu, db) in [(0.5, 0.0), (0.5, 10.0), (0.1, 20.0), (0.0, 0.0)] {
            let ch = ChannelModel::from_loss_db(db).unwrap();
            let p = click_probability(mu, &ch, &det).unwrap();
            let n = 2_000_000;
            let recs = simulate_detection_seeded(&vec![mu; n], &ch, &det, 51).unwrap();
            let f = recs.iter().filter(|r| r.clicked).count() as f64 / n as f64;
            let sd = binomial_sd(p, n as f64);
            assert!((f - p).abs() <= 3.0 * sd, "{} μ={mu} {db} dB: {f} vs {p}", det.label);
        }
    }
}

#[test]
fn ten_million_gates_at_twenty_db() {
    let ch = ChannelModel::from_loss_db(20.0).unwrap();
    let det = DetectorModel::new(0.8, 0.0, 2e9, "dark-free").unwrap();
    let p = click_probability(0.5, &ch, &det).unwrap();
    let n = 10_000_000;
    let clicks = simulate_detection_seeded(&vec![0.5; n], &ch, &det, 52)
        .unwrap()
        .iter()
        .filter(|r| r.clicked)
        .count();
    let expect = p * n as f64;
    assert!(
        (clicks as f64 - expect).abs() <= 3.0 * (expect * (1.0 - p)).sqrt(),
        "{clicks} vs {expect}"
    );
}

#[test]
fn dark_only_fraction() {
    let ch = ChannelModel::from_loss_db(30.0).unwrap();
    let det = DetectorModel::apd();
    let n = 2_000_000;
    let recs = simulate_detection_seeded(&vec![0.1; n], &ch, &det, 53).unwrap();
    assert!(recs.iter().all(|r| !r.is_dark_only || r.clicked));
    let pd = det.p_dark();
    let signal = -(-0.1 * ch.transmittance() * det.efficiency).exp_m1();
    let p = pd * (1.0 - signal);
    let f = recs.iter().filter(|r| r.is_dark_only).count() as f64 / n as f64;
    assert!((f - p).abs() <= 3.0 * binomial_sd(p, n as f64), "{f} vs {p}");
}

#[test]
fn seeded_detection_is_repeatable() {
    let ch = ChannelModel::from_loss_db(3.0).unwrap();
    let det = DetectorModel::apd();
    let mu: Vec<f64> = (0..300_000).map(|i| (i % 7) as f64 * 0.1).collect();
    assert_eq!(
        simulate_detection_seeded(&mu, &ch, &det, 54).unwrap(),
        simulate_detection_seeded(&mu, &ch, &det, 54).unwrap()
    );
}

#[test]
fn gating_and_presets() {
    assert_eq!(DetectorModel::snspd().gated_fraction(2e9), 1.0);
    assert_eq!(DetectorModel::apd().gated_fraction(2e9), 0.5);
    assert!((DetectorModel::apd().p_dark() - 2.5e-5).abs() < 1e-18);
    for name in PRESET_NAMES {
        DetectorModel::preset(name).unwrap().validate().unwrap();
    }
    assert!(matches!(
        DetectorModel::preset("ccd"),
        Err(ilqkd::Error::UnknownPreset { .. })
    ));
    assert!(ChannelModel::from_length_km(-1.0, 0.2).is_err());
    assert!(ChannelModel::from_loss_db(f64::NAN).is_err());
}
