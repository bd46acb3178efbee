//! Stationarization of the radiation series and its exact inverse.
//!
//! Three multiplicative schemes are supported: the clearness index (ratio to
//! extraterrestrial radiation), the clear-sky index (ratio to the Solis
//! clear-sky value) and the clear-sky index corrected by periodic
//! coefficients. Forecasting happens on the dimensionless index; reporting
//! converts back to Wh/m2 through the stored denominator chain.
//!
//! Slot indexing folds every daytime hour onto a fixed 365-day year of
//! `9 * 365 = 3285` slots. February 29 cannot be slotted; leap-day samples
//! must be stripped (see [`strip_leap_days`]) before periodic coefficients
//! are involved.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::HourlySeries;
use crate::solar::{self, StationMeta};
use crate::{Error, Result};

/// Daytime hour slots in one 365-day year.
pub const NB_H: usize = 3285;

/// Stationarization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// No transform; values are raw Wh/m2.
    None,
    /// Clearness index: X / H0.
    Ci,
    /// Clear-sky index: X / Solis clear-sky GHI.
    Csi,
    /// Clear-sky index divided slot-wise by periodic coefficients.
    CsiPc,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Ci => "CI",
            Method::Csi => "CSI",
            Method::CsiPc => "CSI+PC",
        }
    }
}

/// A transformed series together with everything needed to invert it.
#[derive(Debug, Clone)]
pub struct StationarizedSeries {
    pub method: Method,
    /// Dimensionless index values, one per daytime hour.
    pub values: Vec<f64>,
    /// Wh/m2 denominator applied at each sample (H0 or clear-sky GHI).
    pub denominators: Vec<f64>,
    pub timestamps: Vec<DateTime<Utc>>,
    /// Station longitude, needed to recover slots for new samples.
    pub longitude: f64,
    /// nbH slot of every sample, when the series slots cleanly
    /// (daytime window, no leap days).
    pub slots: Option<Vec<usize>>,
    /// Periodic coefficients, present for [`Method::CsiPc`]; all positive.
    pub periodic_coefficients: Option<Vec<f64>>,
}

impl StationarizedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Clone the sub-series over `range`, keeping the inversion state.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            method: self.method,
            values: self.values[range.clone()].to_vec(),
            denominators: self.denominators[range.clone()].to_vec(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            longitude: self.longitude,
            slots: self.slots.as_ref().map(|s| s[range].to_vec()),
            periodic_coefficients: self.periodic_coefficients.clone(),
        }
    }

    /// Multiply predicted index values by the stored denominator chain.
    ///
    /// Predictions must align one-to-one with the stored samples. Negative
    /// results are clamped to zero; the clamp count is returned alongside.
    pub fn destationarize(&self, predictions: &[f64]) -> Result<(Vec<f64>, usize)> {
        if predictions.len() != self.len() {
            return Err(Error::SlotMisalignment {
                message: format!(
                    "{} predictions against {} stored samples",
                    predictions.len(),
                    self.len()
                ),
            });
        }
        let pc = self.periodic_coefficients.as_deref();
        if self.method == Method::CsiPc && pc.is_none() {
            return Err(Error::SlotMisalignment {
                message: "CSI+PC series without periodic coefficients".into(),
            });
        }
        let mut clamped = 0usize;
        let mut out = Vec::with_capacity(predictions.len());
        for (i, &p) in predictions.iter().enumerate() {
            let mut w = p * self.denominators[i];
            if let Some(pc) = pc {
                let slot = self.slot_at(i)?;
                w *= pc[slot];
            }
            if w < 0.0 {
                w = 0.0;
                clamped += 1;
            }
            out.push(w);
        }
        Ok((out, clamped))
    }

    fn slot_at(&self, i: usize) -> Result<usize> {
        match &self.slots {
            Some(s) => Ok(s[i]),
            None => slot_of(self.longitude, self.timestamps[i]),
        }
    }
}

/// nbH slot of a daytime timestamp: `(doy - 1) * 9 + (tst hour - 8)`.
pub fn slot_of(longitude: f64, t: DateTime<Utc>) -> Result<usize> {
    let (date, hour) = solar::true_solar_day_hour(longitude, t);
    if !(8..=16).contains(&hour) {
        return Err(Error::SlotMisalignment {
            message: format!("{t} falls outside the daytime window (tst hour {hour})"),
        });
    }
    let doy = solar::doy365(date).ok_or(Error::LeapDay { timestamp: t.to_rfc3339() })?;
    Ok((doy as usize - 1) * 9 + (hour as usize - 8))
}

fn try_slots(longitude: f64, timestamps: &[DateTime<Utc>]) -> Option<Vec<usize>> {
    timestamps.iter().map(|&t| slot_of(longitude, t).ok()).collect()
}

/// Drop the samples that fall on February 29 (by true solar date), so the
/// fixed 365-day slot arithmetic applies.
pub fn strip_leap_days(series: &HourlySeries, meta: &StationMeta) -> HourlySeries {
    let keep: Vec<usize> = series
        .timestamps
        .iter()
        .enumerate()
        .filter(|(_, &t)| {
            let (date, _) = solar::true_solar_day_hour(meta.longitude, t);
            solar::doy365(date).is_some()
        })
        .map(|(i, _)| i)
        .collect();
    series.take(&keep)
}

fn transform(
    series: &HourlySeries,
    meta: &StationMeta,
    method: Method,
    denom: impl Fn(&crate::solar::SolarInstant) -> Result<f64>,
) -> Result<StationarizedSeries> {
    let mut values = Vec::with_capacity(series.len());
    let mut denominators = Vec::with_capacity(series.len());
    for (i, &t) in series.timestamps.iter().enumerate() {
        let x = series.radiation[i];
        if !x.is_finite() {
            return Err(Error::MalformedRow {
                row: i + 1,
                message: "missing radiation; repair the series first".into(),
            });
        }
        let instant = solar::solar_instant(meta, t);
        let d = denom(&instant).map_err(|_| Error::NonPositiveDenominator { index: i })?;
        if d <= 0.0 {
            return Err(Error::NonPositiveDenominator { index: i });
        }
        values.push(x / d);
        denominators.push(d);
    }
    Ok(StationarizedSeries {
        method,
        values,
        denominators,
        timestamps: series.timestamps.clone(),
        longitude: meta.longitude,
        slots: try_slots(meta.longitude, &series.timestamps),
        periodic_coefficients: None,
    })
}

/// Clearness index: radiation over extraterrestrial radiation.
pub fn to_clearness_index(series: &HourlySeries, meta: &StationMeta) -> Result<StationarizedSeries> {
    transform(series, meta, Method::Ci, |inst| solar::extraterrestrial(meta, inst))
}

/// Clear-sky index: radiation over the fitted Solis clear-sky value.
pub fn to_clearsky_index(series: &HourlySeries, meta: &StationMeta) -> Result<StationarizedSeries> {
    meta.solis()?;
    transform(series, meta, Method::Csi, |inst| solar::clearsky_ghi(meta, inst))
}

/// Wrap a daytime series without transforming it (index = Wh/m2, denominator 1).
pub fn without_transform(series: &HourlySeries, meta: &StationMeta) -> Result<StationarizedSeries> {
    transform(series, meta, Method::None, |_| Ok(1.0))
}

/// Periodic coefficients from a clear-sky-index series spanning at least two
/// full years: trend by a centered moving average over nbH periods, ratio to
/// trend, then per-slot averaging over the years.
pub fn periodic_coefficients(csi: &StationarizedSeries) -> Result<Vec<f64>> {
    if csi.method != Method::Csi {
        return Err(Error::SlotMisalignment {
            message: format!("periodic coefficients need a CSI series, got {}", csi.method.label()),
        });
    }
    let slots = slots_or_explain(csi)?;
    let n = csi.len();
    let mut counts = vec![0usize; NB_H];
    for &s in &slots {
        counts[s] += 1;
    }
    if n < 2 * NB_H || counts.iter().any(|&c| c < 2) {
        return Err(Error::InsufficientData {
            message: "periodic coefficients need at least 2 full years of daytime data".into(),
        });
    }

    // Centered moving average over nbH periods; the window shrinks
    // symmetrically at the series edges.
    let half = NB_H / 2;
    let mut prefix = vec![0.0; n + 1];
    for (i, &v) in csi.values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let mut ratio_sum = vec![0.0; NB_H];
    for i in 0..n {
        let w = half.min(i).min(n - 1 - i);
        let lo = i - w;
        let hi = i + w;
        let mm = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64;
        if mm == 0.0 {
            return Err(Error::ZeroMovingAverage { index: i });
        }
        ratio_sum[slots[i]] += csi.values[i] / mm;
    }
    Ok(ratio_sum
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| s / c as f64)
        .collect())
}

fn slots_or_explain(s: &StationarizedSeries) -> Result<Vec<usize>> {
    match &s.slots {
        Some(slots) => Ok(slots.clone()),
        None => s
            .timestamps
            .iter()
            .map(|&t| slot_of(s.longitude, t))
            .collect(),
    }
}

/// Divide a CSI series slot-wise by the periodic coefficients.
pub fn to_csi_pc(csi: &StationarizedSeries, pc: &[f64]) -> Result<StationarizedSeries> {
    if csi.method != Method::Csi {
        return Err(Error::SlotMisalignment {
            message: format!("CSI+PC builds on a CSI series, got {}", csi.method.label()),
        });
    }
    if pc.len() != NB_H {
        return Err(Error::SlotMisalignment {
            message: format!("expected {NB_H} periodic coefficients, got {}", pc.len()),
        });
    }
    if let Some((slot, _)) = pc.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveCoefficient { slot });
    }
    let slots = slots_or_explain(csi)?;
    let values = csi
        .values
        .iter()
        .zip(&slots)
        .map(|(&v, &s)| v / pc[s])
        .collect();
    Ok(StationarizedSeries {
        method: Method::CsiPc,
        values,
        denominators: csi.denominators.clone(),
        timestamps: csi.timestamps.clone(),
        longitude: csi.longitude,
        slots: Some(slots),
        periodic_coefficients: Some(pc.to_vec()),
    })
}

/// Periodic coefficients as a two-column CSV (slot, coefficient), one row
/// per nbH slot.
pub fn save_pc_csv(pc: &[f64], path: impl AsRef<std::path::Path>) -> Result<()> {
    if pc.len() != NB_H {
        return Err(Error::SlotMisalignment {
            message: format!("expected {NB_H} coefficients, got {}", pc.len()),
        });
    }
    let mut out = String::from("slot,coefficient\n");
    for (slot, c) in pc.iter().enumerate() {
        out.push_str(&format!("{slot},{c}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_pc_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut pc = vec![f64::NAN; NB_H];
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let slot: usize = record[0].parse().map_err(|_| Error::MalformedRow {
            row,
            message: format!("bad slot '{}'", &record[0]),
        })?;
        if slot >= NB_H {
            return Err(Error::SlotMisalignment {
                message: format!("slot {slot} out of range"),
            });
        }
        pc[slot] = record[1].parse().map_err(|_| Error::MalformedRow {
            row,
            message: format!("bad coefficient '{}'", &record[1]),
        })?;
    }
    if let Some(slot) = pc.iter().position(|v| v.is_nan()) {
        return Err(Error::SlotMisalignment {
            message: format!("slot {slot} missing from the coefficient file"),
        });
    }
    Ok(pc)
}
