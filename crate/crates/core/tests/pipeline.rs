//! Cross-module pipeline checks: generated data flows through CSV, repair,
//! the daytime filter, the clear-sky fit, stationarization and the
//! forecasting layers without losing information.

use heliocast::arma::{fit_yule_walker, ArmaForecaster};
use heliocast::eval::nrmse;
use heliocast::hybrid::{fit_hybrid, forecast_series, BranchSpecs, HybridMode, SeasonScheme};
use heliocast::ingest::{daytime_filter, load_csv, repair_missing, save_csv, ColumnMap, SplitSpec};
use heliocast::mlp::{ExoChannels, MlpArchitecture, TrainConfig};
use heliocast::solar::fit_solis;
use heliocast::stationarize::{
    load_pc_csv, periodic_coefficients, save_pc_csv, to_clearsky_index, NB_H,
};
use heliocast::synth::{generate, Scenario};

#[test]
fn csv_round_trip_preserves_the_series() {
    let data = generate(&Scenario {
        years: 1,
        missing_fraction: 0.02,
        ..Scenario::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hours.csv");
    save_csv(&data.series, &path).unwrap();
    let loaded = load_csv(&path, &ColumnMap::default()).unwrap();
    assert_eq!(loaded.timestamps, data.series.timestamps);
    assert_eq!(loaded.missing_count(), data.series.missing_count());
    for (a, b) in loaded.radiation.iter().zip(&data.series.radiation) {
        assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }
    // The gradient channel is re-derived from pressure on load.
    let grad_in = data.series.pressure_gradient.as_ref().unwrap();
    let grad_out = loaded.pressure_gradient.as_ref().unwrap();
    for (a, b) in grad_out.iter().zip(grad_in) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn repaired_series_survives_the_full_transform_chain() {
    let data = generate(&Scenario {
        years: 2,
        missing_fraction: 0.01,
        ..Scenario::default()
    })
    .unwrap();
    let (repaired, report) = repair_missing(&data.series, 0.04).unwrap();
    assert!(report.fraction > 0.0 && !report.exceeded_ceiling);
    let filtered = daytime_filter(&repaired, &data.meta).unwrap();
    assert_eq!(filtered.len() % 9, 0);

    let mut meta = data.meta.clone();
    meta.solis = None;
    let solis = fit_solis(&filtered, &meta).unwrap();
    let meta = meta.with_solis(solis).unwrap();
    let csi = to_clearsky_index(&filtered, &meta).unwrap();
    let (back, clamped) = csi.destationarize(&csi.values).unwrap();
    assert_eq!(clamped, 0);
    for (a, b) in back.iter().zip(&filtered.radiation) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }
}

#[test]
fn periodic_coefficient_csv_round_trips() {
    let data = generate(&Scenario { years: 2, ..Scenario::default() }).unwrap();
    let filtered = daytime_filter(&data.series, &data.meta).unwrap();
    let csi = to_clearsky_index(&filtered, &data.meta).unwrap();
    let pc = periodic_coefficients(&csi).unwrap();
    assert_eq!(pc.len(), NB_H);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pc.csv");
    save_pc_csv(&pc, &path).unwrap();
    let loaded = load_pc_csv(&path).unwrap();
    assert_eq!(pc, loaded);
}

#[test]
fn clear_sky_data_has_numerically_flat_index_deviations() {
    // Pure clear-sky series through the fitted model: the CSI deviations and
    // their low-lag autocovariances are numerically zero.
    let data = generate(&Scenario {
        years: 1,
        phi: 0.0,
        noise_sd: 0.0,
        mean_index: 1.0,
        ..Scenario::default()
    })
    .unwrap();
    let filtered = daytime_filter(&data.series, &data.meta).unwrap();
    let mut meta = data.meta.clone();
    meta.solis = None;
    let solis = fit_solis(&filtered, &meta).unwrap();
    let meta = meta.with_solis(solis).unwrap();
    let csi = to_clearsky_index(&filtered, &meta).unwrap();
    let n = csi.values.len() as f64;
    let mean = csi.values.iter().sum::<f64>() / n;
    let deviations: Vec<f64> = csi.values.iter().map(|v| v - mean).collect();
    for &d in &deviations {
        assert!(d.abs() < 1e-9, "deviation {d}");
    }
    for lag in 1..=10 {
        let cov: f64 = (lag..deviations.len())
            .map(|t| deviations[t] * deviations[t - lag])
            .sum::<f64>()
            / n;
        assert!(cov.abs() < 1e-18, "lag {lag} autocovariance {cov}");
    }
}

#[test]
fn forecasting_stack_beats_persistence_on_autocorrelated_skies() {
    let data = generate(&Scenario {
        years: 3,
        phi: 0.6,
        noise_sd: 0.10,
        seasonal_noise: [1.5, 1.0, 0.5, 1.2],
        ..Scenario::default()
    })
    .unwrap();
    let filtered = daytime_filter(&data.series, &data.meta).unwrap();
    let csi = to_clearsky_index(&filtered, &data.meta).unwrap();

    let spec = SplitSpec::paper_default();
    let n = csi.len();
    let n_train = (spec.train * n as f64).floor() as usize;
    let n_test = (spec.test * n as f64).floor() as usize;
    let test_start = n - n_test;

    let train = csi.slice(0..n_train);
    let val = csi.slice(n_train..test_start);
    let exo = ExoChannels {
        cloudiness: filtered.cloudiness.as_deref().map(|c| &c[..n_train]),
        pressure: None,
        precipitation: None,
    };
    let val_exo = ExoChannels {
        cloudiness: filtered.cloudiness.as_deref().map(|c| &c[n_train..test_start]),
        pressure: None,
        precipitation: None,
    };
    let model = fit_hybrid(
        HybridMode::C,
        &train,
        &exo,
        &val,
        &val_exo,
        &BranchSpecs {
            arma_order: (1, 0),
            architecture: MlpArchitecture::new(3, 1, 0, 0, 4).unwrap(),
            train_cfg: TrainConfig { max_epochs: 30, rng_seed: 1, ..TrainConfig::default() },
            season_scheme: SeasonScheme::Meteorological,
        },
    )
    .unwrap();

    let full_exo = ExoChannels {
        cloudiness: filtered.cloudiness.as_deref(),
        pressure: None,
        precipitation: None,
    };
    let log = forecast_series(&model, &csi, &full_exo, test_start).unwrap();
    let preds: Vec<f64> = log.iter().map(|r| r.selected).collect();
    let window = csi.slice(test_start..n);
    let (hybrid_whm2, _) = window.destationarize(&preds).unwrap();
    let measured = &filtered.radiation[test_start..n];
    let hybrid_err = nrmse(measured, &hybrid_whm2).unwrap();

    // Persistence on the same window.
    let mut persistence = vec![0.0; measured.len()];
    persistence[0] = filtered.radiation[test_start - 1];
    persistence[1..].copy_from_slice(&measured[..measured.len() - 1]);
    let persistence_err = nrmse(measured, &persistence).unwrap();

    assert!(
        hybrid_err < persistence_err,
        "hybrid {hybrid_err:.4} should beat persistence {persistence_err:.4}"
    );

    // The plain AR branch alone also beats persistence.
    let arma = fit_yule_walker(&train.values, 1, 0).unwrap();
    let mut fc = ArmaForecaster::new(arma);
    fc.prime(&csi.values[..test_start]);
    let mut ar_preds = Vec::with_capacity(measured.len());
    for t in test_start..n {
        ar_preds.push(fc.forecast().unwrap());
        fc.observe(csi.values[t]);
    }
    let (ar_whm2, _) = window.destationarize(&ar_preds).unwrap();
    let ar_err = nrmse(measured, &ar_whm2).unwrap();
    assert!(ar_err < persistence_err);
}
