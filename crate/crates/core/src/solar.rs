//! Solar position and clear-sky radiation.
//!
//! Declination, eccentricity and the equation of time come from the Spencer
//! trigonometric series; elevation from the standard hour-angle relation
//! `sin h = sin d sin lat + cos d cos lat cos w`. The clear-sky model is the
//! simplified Solis form `H0 * exp(-tau / sin^b h) * sin h`, with `(tau, b)`
//! fitted per station against the clear-day upper envelope of the measured
//! record. All hourly values are attributed to the hour mark they carry.

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::HourlySeries;
use crate::{Error, Result};

/// Fitted parameters of the simplified Solis clear-sky model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolisParams {
    /// Global total atmospheric optical depth.
    pub tau: f64,
    /// Fitting exponent applied to `sin h`.
    pub b: f64,
}

/// One ground station: location plus clear-sky model state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationMeta {
    pub id: String,
    /// Latitude in radians, |lat| < pi/2.
    pub latitude: f64,
    /// Longitude in radians, east positive.
    pub longitude: f64,
    /// Altitude above sea level in meters.
    pub altitude: f64,
    /// Solar constant in Wh/m2 per hour.
    pub solar_constant: f64,
    /// Solis parameters, once fitted or supplied.
    pub solis: Option<SolisParams>,
}

/// Default solar constant, Wh/m2.
pub const SOLAR_CONSTANT: f64 = 1367.0;

impl StationMeta {
    pub fn new(id: impl Into<String>, latitude: f64, longitude: f64, altitude: f64) -> Result<Self> {
        let meta = Self {
            id: id.into(),
            latitude,
            longitude,
            altitude,
            solar_constant: SOLAR_CONSTANT,
            solis: None,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn with_solar_constant(mut self, isc: f64) -> Result<Self> {
        self.solar_constant = isc;
        self.validate()?;
        Ok(self)
    }

    pub fn with_solis(mut self, solis: SolisParams) -> Result<Self> {
        self.solis = Some(solis);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.latitude.is_finite() || self.latitude.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidStation {
                message: format!("latitude {} rad out of (-pi/2, pi/2)", self.latitude),
            });
        }
        if !(self.solar_constant > 0.0) {
            return Err(Error::InvalidStation {
                message: format!("solar constant must be positive, got {}", self.solar_constant),
            });
        }
        if let Some(s) = self.solis {
            if !(s.tau >= 0.0) || !(s.b > 0.0) {
                return Err(Error::InvalidStation {
                    message: format!("solis parameters out of range: tau={}, b={}", s.tau, s.b),
                });
            }
        }
        Ok(())
    }

    /// Fitted Solis parameters, or an error if none are set.
    pub fn solis(&self) -> Result<SolisParams> {
        self.solis.ok_or_else(|| Error::InvalidStation {
            message: format!("station '{}' has no Solis parameters", self.id),
        })
    }
}

/// Solar geometry at one instant.
#[derive(Debug, Clone, Copy)]
pub struct SolarInstant {
    /// Declination, radians.
    pub declination: f64,
    /// Hour angle, radians (0 at true solar noon, afternoon positive).
    pub hour_angle: f64,
    /// Eccentricity correction of the Earth orbit, dimensionless.
    pub eccentricity: f64,
    /// Solar elevation above the horizon, radians.
    pub elevation: f64,
}

impl SolarInstant {
    pub fn sin_elevation(&self) -> f64 {
        self.elevation.sin()
    }
}

/// Day angle in radians for the Spencer series, from the day of year and the
/// fractional hour of day.
fn day_angle(doy: u32, hour: f64) -> f64 {
    2.0 * std::f64::consts::PI * ((doy as f64 - 1.0) + (hour - 12.0) / 24.0) / 365.0
}

fn declination(gamma: f64) -> f64 {
    let d = 0.006918 - 0.399912 * gamma.cos() + 0.070257 * gamma.sin()
        - 0.006758 * (2.0 * gamma).cos()
        + 0.000907 * (2.0 * gamma).sin()
        - 0.002697 * (3.0 * gamma).cos()
        + 0.00148 * (3.0 * gamma).sin();
    // The series overshoots the tropic bound by ~8e-5 rad near the solstices.
    d.clamp(-0.4093, 0.4093)
}

fn eccentricity(gamma: f64) -> f64 {
    1.000110
        + 0.034221 * gamma.cos()
        + 0.001280 * gamma.sin()
        + 0.000719 * (2.0 * gamma).cos()
        + 0.000077 * (2.0 * gamma).sin()
}

/// Equation of time in minutes (true solar time minus mean solar time).
fn equation_of_time_minutes(gamma: f64) -> f64 {
    229.18
        * (0.000075 + 0.001868 * gamma.cos() - 0.032077 * gamma.sin()
            - 0.014615 * (2.0 * gamma).cos()
            - 0.04089 * (2.0 * gamma).sin())
}

/// Shift a UTC instant onto the true-solar-time axis of the given longitude.
pub fn true_solar(longitude: f64, t: DateTime<Utc>) -> NaiveDateTime {
    let hour = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
    let gamma = day_angle(t.ordinal(), hour);
    let offset_secs = longitude.to_degrees() / 15.0 * 3600.0 + equation_of_time_minutes(gamma) * 60.0;
    (t + Duration::seconds(offset_secs.round() as i64)).naive_utc()
}

/// True-solar date and nearest whole hour of a UTC instant.
pub fn true_solar_day_hour(longitude: f64, t: DateTime<Utc>) -> (NaiveDate, u32) {
    let tst = true_solar(longitude, t);
    let secs = tst.time().num_seconds_from_midnight();
    let hour = (secs + 1800) / 3600;
    if hour >= 24 {
        (tst.date() + Duration::days(1), 0)
    } else {
        (tst.date(), hour)
    }
}

/// Day of year folded onto a 365-day calendar; `None` for February 29.
pub fn doy365(date: NaiveDate) -> Option<u32> {
    let ord = date.ordinal();
    if !date.leap_year() {
        return Some(ord);
    }
    match ord.cmp(&60) {
        std::cmp::Ordering::Less => Some(ord),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(ord - 1),
    }
}

/// Solar geometry for a station at a UTC instant. Total function.
pub fn solar_instant(meta: &StationMeta, t: DateTime<Utc>) -> SolarInstant {
    let hour = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
    let gamma = day_angle(t.ordinal(), hour);
    let decl = declination(gamma);
    let ecc = eccentricity(gamma);
    let tst_hours =
        hour + meta.longitude.to_degrees() / 15.0 + equation_of_time_minutes(gamma) / 60.0;
    let mut omega = (tst_hours - 12.0) * std::f64::consts::PI / 12.0;
    // wrap into (-pi, pi]
    while omega <= -std::f64::consts::PI {
        omega += 2.0 * std::f64::consts::PI;
    }
    while omega > std::f64::consts::PI {
        omega -= 2.0 * std::f64::consts::PI;
    }
    let sin_h = decl.sin() * meta.latitude.sin() + decl.cos() * meta.latitude.cos() * omega.cos();
    SolarInstant {
        declination: decl,
        hour_angle: omega,
        eccentricity: ecc,
        elevation: sin_h.asin(),
    }
}

/// Extraterrestrial radiation on the horizontal plane, Wh/m2.
///
/// This is the denominator of the clearness index: `Isc * E0 * sin h`.
pub fn extraterrestrial(meta: &StationMeta, instant: &SolarInstant) -> Result<f64> {
    let sin_h = instant.sin_elevation();
    if sin_h <= 0.0 {
        return Err(Error::NonDaytime {
            timestamp: format!("hour angle {:.3} rad", instant.hour_angle),
        });
    }
    Ok(meta.solar_constant * instant.eccentricity * sin_h)
}

/// Simplified Solis clear-sky global horizontal irradiance, Wh/m2:
/// `H0 * exp(-tau / sin^b h) * sin h`.
pub fn clearsky_ghi(meta: &StationMeta, instant: &SolarInstant) -> Result<f64> {
    let solis = meta.solis()?;
    let h0 = extraterrestrial(meta, instant)?;
    let sin_h = instant.sin_elevation();
    Ok(h0 * (-solis.tau / sin_h.powf(solis.b)).exp() * sin_h)
}

/// Clear-day upper envelope: per (365-day ordinal, daytime hour) maximum of
/// the observed radiation, keyed by the timestamp that achieved it.
fn upper_envelope(series: &HourlySeries, longitude: f64) -> Vec<(DateTime<Utc>, f64)> {
    let mut best: std::collections::BTreeMap<(u32, u32), (DateTime<Utc>, f64)> =
        std::collections::BTreeMap::new();
    for (i, &t) in series.timestamps.iter().enumerate() {
        let x = series.radiation[i];
        if !x.is_finite() {
            continue;
        }
        let (date, hour) = true_solar_day_hour(longitude, t);
        let Some(doy) = doy365(date) else { continue };
        let key = (doy, hour);
        match best.get(&key) {
            Some(&(_, v)) if v >= x => {}
            _ => {
                best.insert(key, (t, x));
            }
        }
    }
    best.into_values().collect()
}

/// Fit `(tau, b)` by least squares between the Solis model and the clear-day
/// upper envelope of `series`. The series must hold at least one year of
/// cleaned daytime data.
pub fn fit_solis(series: &HourlySeries, meta: &StationMeta) -> Result<SolisParams> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            message: "empty or near-empty series".into(),
        });
    }
    let span = *series.timestamps.last().unwrap() - series.timestamps[0];
    if span < Duration::days(360) {
        return Err(Error::InsufficientData {
            message: format!("need >= 1 year of data, have {} days", span.num_days()),
        });
    }

    let envelope = upper_envelope(series, meta.longitude);
    let mut points: Vec<(f64, f64, f64)> = Vec::new(); // (h0, sin_h, observed max)
    for (t, x) in &envelope {
        if *x <= 0.0 {
            continue;
        }
        let inst = solar_instant(meta, *t);
        let sin_h = inst.sin_elevation();
        if sin_h <= 0.0 {
            continue;
        }
        let h0 = meta.solar_constant * inst.eccentricity * sin_h;
        points.push((h0, sin_h, *x));
    }
    if points.len() < 50 {
        return Err(Error::DegenerateEnvelope {
            message: format!("only {} usable envelope points", points.len()),
        });
    }

    // Initial guess: the model linearizes as
    //   ln(-ln(x / (H0 sin h))) = ln tau - b ln sin h
    // over envelope points strictly below the extraterrestrial ceiling.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(h0, sin_h, x) in &points {
        let ratio = x / (h0 * sin_h);
        if ratio > 0.0 && ratio < 1.0 - 1e-12 {
            xs.push(sin_h.ln());
            ys.push((-ratio.ln()).ln());
        }
    }
    let (mut tau, mut b) = if xs.len() < points.len() / 10 {
        // Essentially no attenuation anywhere: the exact-model limit tau = 0.
        (0.0, 1.0)
    } else {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(vx, vy)| (vx - mx) * (vy - my))
            .sum();
        if sxx < 1e-12 {
            (my.exp(), 1.0)
        } else {
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            ((intercept.exp()).max(0.0), (-slope).max(1e-3))
        }
    };

    if tau > 0.0 {
        refine_solis(&points, &mut tau, &mut b);
    }
    if tau < 0.0 {
        tau = 0.0;
    }
    Ok(SolisParams { tau, b })
}

/// Damped Gauss-Newton refinement of the envelope least squares.
fn refine_solis(points: &[(f64, f64, f64)], tau: &mut f64, b: &mut f64) {
    let sse = |tau: f64, b: f64| -> f64 {
        points
            .iter()
            .map(|&(h0, sin_h, x)| {
                let m = h0 * (-tau / sin_h.powf(b)).exp() * sin_h;
                (m - x) * (m - x)
            })
            .sum()
    };
    let mut mu = 1e-6;
    let mut best = sse(*tau, *b);
    for _ in 0..100 {
        // Normal equations for residuals r = model - observed.
        let (mut jtj00, mut jtj01, mut jtj11) = (0.0, 0.0, 0.0);
        let (mut g0, mut g1) = (0.0, 0.0);
        for &(h0, sin_h, x) in points {
            let s_pow = sin_h.powf(*b);
            let m = h0 * (-*tau / s_pow).exp() * sin_h;
            let r = m - x;
            let d_tau = -m / s_pow;
            let d_b = m * *tau * sin_h.ln() / s_pow;
            jtj00 += d_tau * d_tau;
            jtj01 += d_tau * d_b;
            jtj11 += d_b * d_b;
            g0 += d_tau * r;
            g1 += d_b * r;
        }
        let mut improved = false;
        for _ in 0..20 {
            let a00 = jtj00 + mu;
            let a11 = jtj11 + mu;
            let det = a00 * a11 - jtj01 * jtj01;
            if det.abs() < 1e-300 {
                mu *= 10.0;
                continue;
            }
            let step_tau = -(a11 * g0 - jtj01 * g1) / det;
            let step_b = -(-jtj01 * g0 + a00 * g1) / det;
            let cand_tau = (*tau + step_tau).max(0.0);
            let cand_b = (*b + step_b).max(1e-3);
            let cand = sse(cand_tau, cand_b);
            if cand < best {
                *tau = cand_tau;
                *b = cand_b;
                best = cand;
                mu = (mu * 0.1).max(1e-12);
                improved = true;
                if step_tau.abs() < 1e-14 && step_b.abs() < 1e-14 {
                    return;
                }
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            return;
        }
    }
}
