//! Model predictions checked against the published threshold summaries.

use retina_limit::fitting::{fit_model, read_thresholds_csv, ModelFitOptions};
use retina_limit::{ColorChannel, ModelParamSet, PopulationModel};

const MEANS_CSV: &str = include_str!("../data/threshold_means.csv");

/// Published per-condition threshold medians (ppd) at 0 and 10 degrees.
const MEDIANS: [(ColorChannel, f64, f64); 2] = [
    (ColorChannel::Achromatic, 94.01, 41.40),
    (ColorChannel::RedGreen, 89.00, 17.74),
];

#[test]
fn foveal_thresholds_match_published_means() {
    let m = ModelParamSet::reference();
    for (c, mean, model) in [
        (ColorChannel::Achromatic, 95.37, 95.4),
        (ColorChannel::RedGreen, 86.77, 87.3),
        (ColorChannel::YellowViolet, 53.56, 53.2),
    ] {
        let t = m.params(c).threshold_resolution(0.0).unwrap();
        assert!((t - model).abs() < 1.0, "{c}: {t}");
        assert!((t - mean).abs() / mean < 0.015, "{c}: {t} vs {mean}");
    }
}

#[test]
fn eccentricity_ratio_is_linear_in_k_ecc() {
    let m = ModelParamSet::reference();
    for c in ColorChannel::ALL {
        let p = m.params(c);
        let ratio = p.threshold_resolution(0.0).unwrap() / p.threshold_resolution(10.0).unwrap();
        assert!((ratio - (1.0 + 10.0 * p.k_ecc)).abs() < 1e-9, "{c}: {ratio}");
    }
}

#[test]
fn quoted_decline_ratios_match_medians() {
    // quoted declines: 2.3x achromatic, 4.9x red-green
    for ((c, e0, e10), (want, tol)) in MEDIANS.iter().zip([(2.3, 0.2), (4.9, 0.5)]) {
        let r = e0 / e10;
        assert!((r - want).abs() <= tol, "{c}: {r}");
    }
}

#[test]
fn chromatic_resolution_falls_faster() {
    let m = ModelParamSet::reference();
    let at = |c: ColorChannel, e: f64| m.params(c).threshold_resolution(e).unwrap();
    assert!(at(ColorChannel::Achromatic, 0.0) > at(ColorChannel::RedGreen, 0.0));
    assert!(at(ColorChannel::RedGreen, 0.0) > at(ColorChannel::YellowViolet, 0.0));
    assert!(at(ColorChannel::Achromatic, 10.0) / at(ColorChannel::RedGreen, 10.0) > 2.0);
}

#[test]
fn peripheral_achromatic_limit() {
    let t = ModelParamSet::reference()
        .params(ColorChannel::Achromatic)
        .threshold_resolution(20.0)
        .unwrap();
    assert!((t - 22.7).abs() < 0.5, "{t}");
    let q95 = PopulationModel::reference()
        .threshold_quantile(ColorChannel::Achromatic, 20.0, 0.95)
        .unwrap();
    assert!((q95 - 35.0).abs() < 1.5, "{q95}");
}

#[test]
fn fit_to_means_predicts_foveal_mean() {
    let records = read_thresholds_csv(MEANS_CSV.as_bytes()).unwrap();
    let m = ModelParamSet::reference();
    for c in ColorChannel::ALL {
        let fit = fit_model(
            &records,
            c,
            m.params(c).stimulus_sensitivity,
            &ModelFitOptions::default(),
        )
        .unwrap();
        let mean = records
            .iter()
            .find(|r| r.channel == c && r.eccentricity == 0.0)
            .unwrap()
            .threshold_ppd;
        let pred = fit.params().threshold_resolution(0.0).unwrap();
        assert!((pred - mean).abs() / mean < 0.03, "{c}: {pred} vs {mean}");
        assert!(fit.converged);
    }
}
