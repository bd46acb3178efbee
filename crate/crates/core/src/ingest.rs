//! Loading, cleaning and partitioning of hourly station data.
//!
//! The expected CSV carries a header row with a `timestamp` column (ISO-8601)
//! and a `ghi_whm2` radiation column; `pressure_pa`, `cloud_octas` and
//! `precip_mm` are optional. Blank value cells mark missing measurements and
//! are repaired from the hourly climatology; missing *rows* inside a day are
//! rejected. A pressure gradient channel (difference of consecutive hourly
//! means) is derived whenever pressure is present.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDateTime, TimeZone, Timelike, Utc};

use crate::solar::{true_solar_day_hour, StationMeta};
use crate::{Error, Result};

/// Hourly observations for one station. Radiation is Wh/m2 per hour; missing
/// values are held as NaN until [`repair_missing`] fills them.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub station_id: String,
    pub timestamps: Vec<DateTime<Utc>>,
    pub radiation: Vec<f64>,
    pub pressure: Option<Vec<f64>>,
    pub pressure_gradient: Option<Vec<f64>>,
    pub cloudiness: Option<Vec<f64>>,
    pub precipitation: Option<Vec<f64>>,
    /// True where the radiation value was reconstructed rather than measured.
    pub repaired: Vec<bool>,
}

impl HourlySeries {
    /// Build a series and check the basic invariants (ordering, ranges).
    pub fn new(
        station_id: impl Into<String>,
        timestamps: Vec<DateTime<Utc>>,
        radiation: Vec<f64>,
    ) -> Result<Self> {
        let series = Self {
            station_id: station_id.into(),
            repaired: vec![false; radiation.len()],
            timestamps,
            radiation,
            pressure: None,
            pressure_gradient: None,
            cloudiness: None,
            precipitation: None,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Fraction of samples whose radiation was reconstructed.
    pub fn repaired_fraction(&self) -> f64 {
        if self.repaired.is_empty() {
            0.0
        } else {
            self.repaired.iter().filter(|&&r| r).count() as f64 / self.repaired.len() as f64
        }
    }

    pub fn missing_count(&self) -> usize {
        self.radiation.iter().filter(|v| v.is_nan()).count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        for v in [
            Some(&self.radiation),
            self.pressure.as_ref(),
            self.pressure_gradient.as_ref(),
            self.cloudiness.as_ref(),
            self.precipitation.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            if v.len() != n {
                return Err(Error::LengthMismatch { left: n, right: v.len() });
            }
        }
        for i in 1..n {
            if self.timestamps[i] <= self.timestamps[i - 1] {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    message: "timestamps must be strictly increasing".into(),
                });
            }
            if self.timestamps[i].date_naive() == self.timestamps[i - 1].date_naive()
                && self.timestamps[i] - self.timestamps[i - 1] != Duration::hours(1)
            {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    message: "non-hourly spacing within a day".into(),
                });
            }
        }
        for (i, &x) in self.radiation.iter().enumerate() {
            if !x.is_nan() && x < 0.0 {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    message: format!("negative radiation {x}"),
                });
            }
        }
        if let Some(cloud) = &self.cloudiness {
            for (i, &c) in cloud.iter().enumerate() {
                if !c.is_nan() && !(0.0..=8.0).contains(&c) {
                    return Err(Error::MalformedRow {
                        row: i + 1,
                        message: format!("octas out of range: {c}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Clone the sub-series covering `range` (sample indices).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let cut = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v[range.clone()].to_vec());
        Self {
            station_id: self.station_id.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            radiation: self.radiation[range.clone()].to_vec(),
            pressure: cut(&self.pressure),
            pressure_gradient: cut(&self.pressure_gradient),
            cloudiness: cut(&self.cloudiness),
            precipitation: cut(&self.precipitation),
            repaired: self.repaired[range].to_vec(),
        }
    }

    /// Keep only the samples at the given (sorted) indices.
    pub fn take(&self, keep: &[usize]) -> Self {
        let pick = |v: &Vec<f64>| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            station_id: self.station_id.clone(),
            timestamps: keep.iter().map(|&i| self.timestamps[i]).collect(),
            radiation: pick(&self.radiation),
            pressure: self.pressure.as_ref().map(pick),
            pressure_gradient: self.pressure_gradient.as_ref().map(pick),
            cloudiness: self.cloudiness.as_ref().map(pick),
            precipitation: self.precipitation.as_ref().map(pick),
            repaired: keep.iter().map(|&i| self.repaired[i]).collect(),
        }
    }
}

/// Maps CSV header names onto the channels the pipeline understands.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub timestamp: String,
    pub radiation: String,
    pub pressure: String,
    pub cloudiness: String,
    pub precipitation: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            radiation: "ghi_whm2".into(),
            pressure: "pressure_pa".into(),
            cloudiness: "cloud_octas".into(),
            precipitation: "precip_mm".into(),
        }
    }
}

fn parse_timestamp(raw: &str, row: usize) -> Result<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t.with_timezone(&Utc));
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S") {
        return Ok(Utc.from_utc_datetime(&naive));
    }
    Err(Error::MalformedRow {
        row,
        message: format!("unparseable timestamp '{raw}'"),
    })
}

fn parse_value(raw: &str, row: usize, column: &str) -> Result<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(f64::NAN);
    }
    trimmed.parse::<f64>().map_err(|_| Error::MalformedRow {
        row,
        message: format!("unparseable value '{trimmed}' in column '{column}'"),
    })
}

/// Load a station CSV. Mandatory columns: timestamp and radiation; optional
/// channels are picked up when their header is present.
pub fn load_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<HourlySeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let ts_idx = find(&columns.timestamp).ok_or_else(|| Error::MissingColumn {
        name: columns.timestamp.clone(),
    })?;
    let rad_idx = find(&columns.radiation).ok_or_else(|| Error::MissingColumn {
        name: columns.radiation.clone(),
    })?;
    let p_idx = find(&columns.pressure);
    let n_idx = find(&columns.cloudiness);
    let rp_idx = find(&columns.precipitation);

    let mut timestamps = Vec::new();
    let mut radiation = Vec::new();
    let mut pressure = Vec::new();
    let mut cloudiness = Vec::new();
    let mut precipitation = Vec::new();

    for record in reader.records() {
        let record = record?;
        let row = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(timestamps.len() + 2);
        let t = parse_timestamp(&record[ts_idx], row)?;
        if let Some(&last) = timestamps.last() {
            if t == last {
                return Err(Error::DuplicateTimestamp {
                    row,
                    timestamp: t.to_rfc3339(),
                });
            }
            if t < last {
                return Err(Error::MalformedRow {
                    row,
                    message: format!("timestamp {t} out of order"),
                });
            }
        }
        let x = parse_value(&record[rad_idx], row, &columns.radiation)?;
        if !x.is_nan() && x < 0.0 {
            return Err(Error::MalformedRow {
                row,
                message: format!("negative radiation {x}"),
            });
        }
        if let Some(i) = n_idx {
            let c = parse_value(&record[i], row, &columns.cloudiness)?;
            if !c.is_nan() && !(0.0..=8.0).contains(&c) {
                return Err(Error::MalformedRow {
                    row,
                    message: format!("octas out of range: {c}"),
                });
            }
            cloudiness.push(c);
        }
        if let Some(i) = p_idx {
            pressure.push(parse_value(&record[i], row, &columns.pressure)?);
        }
        if let Some(i) = rp_idx {
            precipitation.push(parse_value(&record[i], row, &columns.precipitation)?);
        }
        timestamps.push(t);
        radiation.push(x);
    }

    let pressure_gradient = p_idx.map(|_| {
        let mut grad = vec![0.0; pressure.len()];
        for i in 1..pressure.len() {
            grad[i] = pressure[i] - pressure[i - 1];
        }
        grad
    });

    let series = HourlySeries {
        station_id: path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "station".into()),
        timestamps,
        radiation,
        pressure: p_idx.map(|_| pressure),
        pressure_gradient,
        cloudiness: n_idx.map(|_| cloudiness),
        precipitation: rp_idx.map(|_| precipitation),
        repaired: Vec::new(),
    };
    let mut series = series;
    series.repaired = vec![false; series.len()];
    series.validate()?;
    Ok(series)
}

/// Write a series back out in the same schema `load_csv` reads. Missing
/// values become empty cells.
pub fn save_csv(series: &HourlySeries, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let columns = ColumnMap::default();
    let mut header = vec![columns.timestamp.clone(), columns.radiation.clone()];
    if series.pressure.is_some() {
        header.push(columns.pressure.clone());
    }
    if series.cloudiness.is_some() {
        header.push(columns.cloudiness.clone());
    }
    if series.precipitation.is_some() {
        header.push(columns.precipitation.clone());
    }
    writer.write_record(&header)?;
    let cell = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
    for i in 0..series.len() {
        let mut row = vec![
            series.timestamps[i].to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            cell(series.radiation[i]),
        ];
        if let Some(p) = &series.pressure {
            row.push(cell(p[i]));
        }
        if let Some(c) = &series.cloudiness {
            row.push(cell(c[i]));
        }
        if let Some(rp) = &series.precipitation {
            row.push(cell(rp[i]));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Outcome of gap repair.
#[derive(Debug, Clone, Copy)]
pub struct RepairReport {
    pub repaired: usize,
    pub total: usize,
    pub fraction: f64,
    pub ceiling: f64,
    /// True when the repair fraction exceeded the configured ceiling.
    /// This is a warning, not a failure.
    pub exceeded_ceiling: bool,
}

/// Replace every missing radiation sample by the mean of the non-missing
/// samples sharing its hour of day. Exogenous channels are filled the same
/// way, but only radiation repairs are flagged and counted.
pub fn repair_missing(series: &HourlySeries, ceiling: f64) -> Result<(HourlySeries, RepairReport)> {
    let mut out = series.clone();
    let hours: Vec<u32> = series.timestamps.iter().map(|t| t.hour()).collect();

    // Hour-of-day means for radiation; a slot with no data at all is fatal.
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (i, &x) in series.radiation.iter().enumerate() {
        let entry = sums.entry(hours[i]).or_insert((0.0, 0));
        if !x.is_nan() {
            entry.0 += x;
            entry.1 += 1;
        }
    }
    let mut repaired = 0usize;
    for (i, x) in out.radiation.iter_mut().enumerate() {
        if x.is_nan() {
            let (sum, count) = sums[&hours[i]];
            if count == 0 {
                return Err(Error::EmptyHourSlot { hour: hours[i] });
            }
            *x = sum / count as f64;
            out.repaired[i] = true;
            repaired += 1;
        }
    }

    for channel in [&mut out.pressure, &mut out.pressure_gradient, &mut out.cloudiness, &mut out.precipitation]
        .into_iter()
        .flatten()
    {
        let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
        let (mut all_sum, mut all_count) = (0.0, 0usize);
        for (i, &v) in channel.iter().enumerate() {
            if !v.is_nan() {
                let e = sums.entry(hours[i]).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
                all_sum += v;
                all_count += 1;
            }
        }
        if all_count == 0 {
            continue; // channel carries no information; leave as-is
        }
        for (i, v) in channel.iter_mut().enumerate() {
            if v.is_nan() {
                let (sum, count) = sums.get(&hours[i]).copied().unwrap_or((0.0, 0));
                *v = if count > 0 { sum / count as f64 } else { all_sum / all_count as f64 };
            }
        }
    }

    let total = series.len();
    let fraction = if total == 0 { 0.0 } else { repaired as f64 / total as f64 };
    let report = RepairReport {
        repaired,
        total,
        fraction,
        ceiling,
        exceeded_ceiling: fraction > ceiling,
    };
    Ok((out, report))
}

/// Default ceiling on the repaired fraction before a warning is raised.
pub const DEFAULT_MAX_MISSING_FRACTION: f64 = 0.04;

/// Keep the nine daytime hours (8:00 to 16:00 true solar time, inclusive) of
/// every day. Retained samples stay contiguous; each day must contribute
/// exactly nine samples or the day is reported as incomplete.
pub fn daytime_filter(series: &HourlySeries, meta: &StationMeta) -> Result<HourlySeries> {
    if series.is_empty() {
        return Ok(series.clone());
    }
    let mut keep = Vec::new();
    let mut day_counts: BTreeMap<chrono::NaiveDate, usize> = BTreeMap::new();
    for (i, &t) in series.timestamps.iter().enumerate() {
        let (date, hour) = true_solar_day_hour(meta.longitude, t);
        if (8..=16).contains(&hour) {
            keep.push(i);
            *day_counts.entry(date).or_insert(0) += 1;
        }
    }
    for (date, count) in &day_counts {
        if *count != 9 {
            return Err(Error::IncompleteDay {
                date: date.to_string(),
                count: *count,
            });
        }
    }
    Ok(series.take(&keep))
}

/// Chronological train/validation/test fractions.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let spec = Self { train, validation, test };
        if [train, validation, test].iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::BadSplit {
                message: "fractions must lie in [0, 1]".into(),
            });
        }
        if (train + validation + test - 1.0).abs() > 1e-9 {
            return Err(Error::BadSplit {
                message: format!("fractions sum to {}, expected 1", train + validation + test),
            });
        }
        Ok(spec)
    }

    /// The paper's regime: 72% train, 8% validation, 20% test.
    pub fn paper_default() -> Self {
        Self { train: 0.72, validation: 0.08, test: 0.2 }
    }
}

/// Partition chronologically into train, validation and test blocks.
///
/// Train and test sizes are floored; the validation block absorbs the
/// rounding remainder so no sample is lost.
pub fn split(series: &HourlySeries, spec: &SplitSpec) -> Result<(HourlySeries, HourlySeries, HourlySeries)> {
    let n = series.len();
    if n < 3 {
        return Err(Error::BadSplit {
            message: format!("need at least 3 samples, have {n}"),
        });
    }
    SplitSpec::new(spec.train, spec.validation, spec.test)?;
    let n_train = (spec.train * n as f64).floor() as usize;
    let n_test = (spec.test * n as f64).floor() as usize;
    let n_val = n - n_train - n_test;
    Ok((
        series.slice(0..n_train),
        series.slice(n_train..n_train + n_val),
        series.slice(n_train + n_val..n),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn ts(y: i32, mo: u32, d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap()
    }

    fn hourly(values: &[(DateTime<Utc>, f64)]) -> HourlySeries {
        HourlySeries::new(
            "t",
            values.iter().map(|v| v.0).collect(),
            values.iter().map(|v| v.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn loads_valid_three_row_file() {
        let f = write_csv(
            "timestamp,ghi_whm2,cloud_octas\n\
             2001-06-01T08:00:00Z,120.5,3\n\
             2001-06-01T09:00:00Z,250,4\n\
             2001-06-01T10:00:00Z,380.25,0\n",
        );
        let s = load_csv(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.radiation, vec![120.5, 250.0, 380.25]);
        assert_eq!(s.repaired_fraction(), 0.0);
        assert!(s.cloudiness.is_some());
        assert!(s.pressure.is_none());
    }

    #[test]
    fn rejects_duplicate_timestamp_with_row() {
        let f = write_csv(
            "timestamp,ghi_whm2\n\
             2001-06-01T08:00:00Z,120\n\
             2001-06-01T08:00:00Z,130\n",
        );
        match load_csv(f.path(), &ColumnMap::default()) {
            Err(Error::DuplicateTimestamp { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected duplicate timestamp error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_octas() {
        let f = write_csv(
            "timestamp,ghi_whm2,cloud_octas\n\
             2001-06-01T08:00:00Z,120,9\n",
        );
        let err = load_csv(f.path(), &ColumnMap::default()).unwrap_err();
        assert!(err.to_string().contains("octas out of range"), "{err}");
    }

    #[test]
    fn rejects_missing_mandatory_column() {
        let f = write_csv("timestamp,something\n2001-06-01T08:00:00Z,1\n");
        assert!(matches!(
            load_csv(f.path(), &ColumnMap::default()),
            Err(Error::MissingColumn { .. })
        ));
    }

    #[test]
    fn rejects_unparseable_timestamp() {
        let f = write_csv("timestamp,ghi_whm2\nnot-a-time,1\n");
        let err = load_csv(f.path(), &ColumnMap::default()).unwrap_err();
        assert!(err.to_string().contains("unparseable timestamp"), "{err}");
    }

    #[test]
    fn repair_leaves_complete_series_unchanged() {
        let s = hourly(&[(ts(2001, 6, 1, 8), 100.0), (ts(2001, 6, 1, 9), 200.0)]);
        let (out, report) = repair_missing(&s, 0.04).unwrap();
        assert_eq!(out, s);
        assert_eq!(report.repaired, 0);
        assert!(!report.exceeded_ceiling);
    }

    #[test]
    fn repair_fills_gap_with_hourly_mean() {
        let mut s = hourly(&[
            (ts(2001, 6, 1, 10), 100.0),
            (ts(2001, 6, 2, 10), f64::NAN),
            (ts(2001, 6, 3, 10), 300.0),
        ]);
        s.radiation[1] = f64::NAN;
        let (out, report) = repair_missing(&s, 0.04).unwrap();
        assert_eq!(out.radiation[1], 200.0);
        assert!(out.repaired[1]);
        assert_eq!(report.repaired, 1);
        assert!((report.fraction - 1.0 / 3.0).abs() < 1e-12);
        assert!(report.exceeded_ceiling);
    }

    #[test]
    fn repair_fails_when_hour_slot_has_no_data() {
        let s = hourly(&[
            (ts(2001, 6, 1, 11), f64::NAN),
            (ts(2001, 6, 2, 11), f64::NAN),
            (ts(2001, 6, 2, 12), 10.0),
        ]);
        assert!(matches!(
            repair_missing(&s, 0.04),
            Err(Error::EmptyHourSlot { hour: 11 })
        ));
    }

    #[test]
    fn repair_is_idempotent() {
        let mut s = hourly(&[
            (ts(2001, 6, 1, 10), 100.0),
            (ts(2001, 6, 1, 11), 50.0),
            (ts(2001, 6, 2, 10), f64::NAN),
            (ts(2001, 6, 2, 11), 70.0),
        ]);
        s.radiation[2] = f64::NAN;
        let (once, _) = repair_missing(&s, 0.04).unwrap();
        let (twice, report) = repair_missing(&once, 0.04).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.repaired, 0);
    }

    fn full_days(days: u32) -> HourlySeries {
        let mut rows = Vec::new();
        for d in 0..days {
            for h in 0..24 {
                rows.push((ts(2001, 6, 1, 0) + Duration::days(d as i64) + Duration::hours(h), 10.0));
            }
        }
        hourly(&rows)
    }

    fn greenwich() -> StationMeta {
        StationMeta::new("g", 45f64.to_radians(), 0.0, 0.0).unwrap()
    }

    #[test]
    fn daytime_filter_keeps_nine_hours_per_day() {
        let filtered = daytime_filter(&full_days(1), &greenwich()).unwrap();
        assert_eq!(filtered.len(), 9);
    }

    #[test]
    fn daytime_filter_makes_days_contiguous() {
        let filtered = daytime_filter(&full_days(2), &greenwich()).unwrap();
        assert_eq!(filtered.len(), 18);
        // Sample 9 is the last hour of day one, sample 10 the first of day
        // two; they sit next to each other with no gap marker.
        assert_eq!(
            filtered.timestamps[9] - filtered.timestamps[8],
            Duration::hours(16)
        );
    }

    #[test]
    fn daytime_filter_passes_empty_series() {
        let empty = hourly(&[]);
        assert!(daytime_filter(&empty, &greenwich()).unwrap().is_empty());
    }

    #[test]
    fn daytime_filter_rejects_incomplete_day() {
        let mut s = full_days(1);
        let keep: Vec<usize> = (0..s.len()).filter(|&i| i != 10).collect(); // drop 10:00
        s = s.take(&keep);
        assert!(matches!(
            daytime_filter(&s, &greenwich()),
            Err(Error::IncompleteDay { count: 8, .. })
        ));
    }

    #[test]
    fn split_follows_documented_rounding() {
        let rows: Vec<_> = (0..10).map(|i| (ts(2001, 6, 1, 0) + Duration::days(i), 1.0)).collect();
        let s = hourly(&rows);
        let (train, val, test) = split(&s, &SplitSpec::paper_default()).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (7, 1, 2));
    }

    #[test]
    fn split_all_test() {
        let rows: Vec<_> = (0..5).map(|i| (ts(2001, 6, 1, 0) + Duration::days(i), 1.0)).collect();
        let s = hourly(&rows);
        let spec = SplitSpec::new(0.0, 0.0, 1.0).unwrap();
        let (train, val, test) = split(&s, &spec).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (0, 0, 5));
    }

    #[test]
    fn split_rejects_short_series_and_bad_fractions() {
        let rows: Vec<_> = (0..2).map(|i| (ts(2001, 6, 1, 0) + Duration::days(i), 1.0)).collect();
        assert!(split(&hourly(&rows), &SplitSpec::paper_default()).is_err());
        assert!(SplitSpec::new(0.5, 0.2, 0.2).is_err());
    }

    #[test]
    fn split_preserves_order_and_samples() {
        let rows: Vec<_> = (0..17).map(|i| (ts(2001, 6, 1, 0) + Duration::days(i), i as f64)).collect();
        let s = hourly(&rows);
        let (train, val, test) = split(&s, &SplitSpec::paper_default()).unwrap();
        let mut rebuilt = train.radiation.clone();
        rebuilt.extend(&val.radiation);
        rebuilt.extend(&test.radiation);
        assert_eq!(rebuilt, s.radiation);
    }
}
