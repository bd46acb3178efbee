//! Deterministic synthetic station data.
//!
//! The generator drives the Solis clear-sky model with a bounded AR(1)
//! occlusion index stepped once per daytime-window hour, so the clear-sky
//! index of the output carries a known lag-1 autocorrelation. Cloudiness,
//! pressure and precipitation channels are derived from the same occlusion
//! state with tunable coupling, and a configurable fraction of radiation
//! cells is blanked to exercise gap repair. Ground-truth parameters ride
//! along in a sidecar record.

use chrono::{Datelike, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::hybrid::{season_of, Season};
use crate::ingest::HourlySeries;
use crate::solar::{clearsky_ghi, solar_instant, true_solar_day_hour, SolisParams, StationMeta};
use crate::{Error, Result};

/// Scenario parameters for one synthetic station.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub station_id: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub solar_constant: f64,
    /// Solis optical depth and exponent used as ground truth.
    pub tau: f64,
    pub b: f64,
    /// AR(1) coefficient of the occlusion index; |phi| < 1.
    pub phi: f64,
    /// Stationary mean of the occlusion index.
    pub mean_index: f64,
    /// Innovation standard deviation of the occlusion index.
    pub noise_sd: f64,
    /// Seasonal multipliers of the innovation sd, in
    /// [winter, spring, summer, autumn] order.
    pub seasonal_noise: [f64; 4],
    pub start_year: i32,
    pub years: usize,
    /// Fraction of radiation cells blanked out at random.
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            station_id: "synthetic".into(),
            latitude_deg: 41.9,
            longitude_deg: 8.8,
            altitude_m: 4.0,
            solar_constant: crate::solar::SOLAR_CONSTANT,
            tau: 0.28,
            b: 0.95,
            phi: 0.5435,
            mean_index: 0.72,
            noise_sd: 0.10,
            seasonal_noise: [1.0, 1.0, 1.0, 1.0],
            start_year: 2001,
            years: 3,
            missing_fraction: 0.0,
            seed: 42,
        }
    }
}

/// Ground truth embedded next to a generated file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tau: f64,
    pub b: f64,
    pub phi: f64,
    pub mean_index: f64,
    pub noise_sd: f64,
    pub seasonal_noise: [f64; 4],
    pub seed: u64,
}

/// A generated dataset: full 24-hour series, station metadata carrying the
/// true Solis parameters, and the sidecar truth record.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub series: HourlySeries,
    pub meta: StationMeta,
    pub truth: GroundTruth,
}

fn season_multiplier(noise: &[f64; 4], season: Season) -> f64 {
    match season {
        Season::Winter => noise[0],
        Season::Spring => noise[1],
        Season::Summer => noise[2],
        Season::Autumn => noise[3],
    }
}

/// Generate one scenario. Deterministic in the scenario (including seed).
pub fn generate(scenario: &Scenario) -> Result<SyntheticData> {
    if scenario.phi.abs() >= 1.0 {
        return Err(Error::UnstableAr { phi: scenario.phi });
    }
    if scenario.years == 0 {
        return Err(Error::InsufficientData {
            message: "scenario needs at least one year".into(),
        });
    }
    let meta = StationMeta::new(
        scenario.station_id.clone(),
        scenario.latitude_deg.to_radians(),
        scenario.longitude_deg.to_radians(),
        scenario.altitude_m,
    )?
    .with_solar_constant(scenario.solar_constant)?
    .with_solis(SolisParams { tau: scenario.tau, b: scenario.b })?;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let normal = Normal::new(0.0, 1.0).map_err(|_| Error::InsufficientData {
        message: "invalid noise parameters".into(),
    })?;

    let start = Utc
        .with_ymd_and_hms(scenario.start_year, 1, 1, 0, 0, 0)
        .unwrap();
    let end = Utc
        .with_ymd_and_hms(scenario.start_year + scenario.years as i32, 1, 1, 0, 0, 0)
        .unwrap();

    let mut timestamps = Vec::new();
    let mut radiation = Vec::new();
    let mut cloudiness = Vec::new();
    let mut pressure = Vec::new();
    let mut precipitation = Vec::new();

    let mut k = scenario.mean_index;
    let mut t = start;
    while t < end {
        let (_, tst_hour) = true_solar_day_hour(meta.longitude, t);
        let in_window = (8..=16).contains(&tst_hour);
        if in_window {
            let sd = scenario.noise_sd * season_multiplier(&scenario.seasonal_noise, season_of(t));
            k = scenario.mean_index + scenario.phi * (k - scenario.mean_index)
                + sd * normal.sample(&mut rng);
            k = k.clamp(1e-3, 1.1);
        }
        let instant = solar_instant(&meta, t);
        let x = if instant.sin_elevation() > 0.0 {
            clearsky_ghi(&meta, &instant).map_or(0.0, |cs| cs * k)
        } else {
            0.0
        };
        let octas = (8.0 * (1.0 - k / 1.1) + 0.5 * normal.sample(&mut rng))
            .round()
            .clamp(0.0, 8.0);
        let doy = t.ordinal() as f64;
        let p = 101_325.0
            + 250.0 * (2.0 * std::f64::consts::PI * (doy - 20.0) / 365.0).sin()
            + 900.0 * (k - scenario.mean_index)
            + 40.0 * normal.sample(&mut rng);
        let rp = if k < 0.4 {
            (8.0 * (0.4 - k) + 0.3 * normal.sample(&mut rng)).max(0.0)
        } else {
            0.0
        };

        timestamps.push(t);
        radiation.push(x);
        cloudiness.push(octas);
        pressure.push(p);
        precipitation.push(rp);
        t += Duration::hours(1);
    }

    if scenario.missing_fraction > 0.0 {
        for x in radiation.iter_mut() {
            if rng.gen::<f64>() < scenario.missing_fraction {
                *x = f64::NAN;
            }
        }
    }

    let mut gradient = vec![0.0; pressure.len()];
    for i in 1..pressure.len() {
        gradient[i] = pressure[i] - pressure[i - 1];
    }

    let n = timestamps.len();
    let series = HourlySeries {
        station_id: scenario.station_id.clone(),
        timestamps,
        radiation,
        pressure: Some(pressure),
        pressure_gradient: Some(gradient),
        cloudiness: Some(cloudiness),
        precipitation: Some(precipitation),
        repaired: vec![false; n],
    };
    series.validate()?;

    Ok(SyntheticData {
        series,
        meta,
        truth: GroundTruth {
            tau: scenario.tau,
            b: scenario.b,
            phi: scenario.phi,
            mean_index: scenario.mean_index,
            noise_sd: scenario.noise_sd,
            seasonal_noise: scenario.seasonal_noise,
            seed: scenario.seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::daytime_filter;
    use crate::stationarize::to_clearsky_index;
    use crate::stats::{acf, pearson};

    #[test]
    fn zero_noise_zero_phi_is_pure_clear_sky() {
        let scenario = Scenario {
            phi: 0.0,
            noise_sd: 0.0,
            mean_index: 1.0,
            years: 1,
            ..Scenario::default()
        };
        let data = generate(&scenario).unwrap();
        let filtered = daytime_filter(&data.series, &data.meta).unwrap();
        let csi = to_clearsky_index(&filtered, &data.meta).unwrap();
        for &v in &csi.values {
            assert!((v - 1.0).abs() < 1e-12, "csi = {v}");
        }
    }

    #[test]
    fn occlusion_index_carries_the_requested_autocorrelation() {
        let scenario = Scenario {
            years: 2,
            noise_sd: 0.08,
            ..Scenario::default()
        };
        let data = generate(&scenario).unwrap();
        let filtered = daytime_filter(&data.series, &data.meta).unwrap();
        let csi = to_clearsky_index(&filtered, &data.meta).unwrap();
        let rho1 = acf(&csi.values, 1).unwrap()[0];
        assert!(
            (rho1 - scenario.phi).abs() < 0.05,
            "lag-1 acf {rho1} vs phi {}",
            scenario.phi
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let scenario = Scenario { years: 1, missing_fraction: 0.02, ..Scenario::default() };
        let a = generate(&scenario).unwrap();
        let b = generate(&scenario).unwrap();
        assert_eq!(a.series.timestamps, b.series.timestamps);
        // Bit-level comparison; NaN cells mark the same missing samples.
        for (x, y) in a.series.radiation.iter().zip(&b.series.radiation) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.series.cloudiness, b.series.cloudiness);
        assert_eq!(a.series.pressure, b.series.pressure);
    }

    #[test]
    fn rejects_unstable_ar_parameter() {
        let scenario = Scenario { phi: 1.0, ..Scenario::default() };
        assert!(matches!(generate(&scenario), Err(Error::UnstableAr { .. })));
    }

    #[test]
    fn cloudiness_anticorrelates_with_the_index() {
        let scenario = Scenario { years: 1, noise_sd: 0.12, ..Scenario::default() };
        let data = generate(&scenario).unwrap();
        let filtered = daytime_filter(&data.series, &data.meta).unwrap();
        let csi = to_clearsky_index(&filtered, &data.meta).unwrap();
        let r = pearson(&csi.values, filtered.cloudiness.as_ref().unwrap()).unwrap();
        assert!(r < -0.5, "R = {r}");
    }

    #[test]
    fn missing_cells_appear_and_repair() {
        let scenario = Scenario { years: 1, missing_fraction: 0.03, ..Scenario::default() };
        let data = generate(&scenario).unwrap();
        assert!(data.series.missing_count() > 0);
        let (repaired, report) = crate::ingest::repair_missing(&data.series, 0.04).unwrap();
        assert_eq!(repaired.missing_count(), 0);
        assert!(report.fraction > 0.0);
    }
}
