//! Forecast evaluation: normalized RMSE, coefficient of variation, the three
//! reference baselines, seasonal point ranking, the per-hour reliability
//! index and the derived confidence interval.
//!
//! Model comparisons are computed in Wh/m2 after destationarization; the
//! index-space series stay available for diagnostics.

use chrono::{DateTime, Utc};

use crate::hybrid::{season_of_with, Season, SeasonScheme};
use crate::solar::{clearsky_ghi, solar_instant, StationMeta};
use crate::stationarize::{slot_of, NB_H};
use crate::{Error, Result};

/// Normalized root mean square error: sqrt(<(x-y)^2> / <x^2>).
pub fn nrmse(measured: &[f64], predicted: &[f64]) -> Result<f64> {
    if measured.len() != predicted.len() {
        return Err(Error::LengthMismatch { left: measured.len(), right: predicted.len() });
    }
    if measured.is_empty() {
        return Err(Error::InsufficientData {
            message: "empty series in nRMSE".into(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in measured.iter().zip(predicted) {
        num += (x - y) * (x - y);
        den += x * x;
    }
    if den <= 0.0 {
        return Err(Error::AllZeroMeasurements);
    }
    Ok((num / den).sqrt())
}

/// Coefficient of variation: population standard deviation over mean.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData {
            message: "empty series in CV".into(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean.abs() < 1e-300 {
        return Err(Error::ZeroMean);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// Reference forecasting baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Next hour equals the previous hour's measurement.
    Persistence,
    /// Next hour equals the Solis clear-sky value.
    ClearSky,
    /// Next hour equals the training climatology of its (day, hour) slot.
    Average,
}

impl BaselineKind {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineKind::Persistence => "Persistence",
            BaselineKind::ClearSky => "Clear Sky",
            BaselineKind::Average => "Average",
        }
    }
}

/// Per-slot mean radiation over the training years (the "simple average"
/// baseline).
#[derive(Debug, Clone)]
pub struct AverageClimatology {
    slot_means: Vec<Option<f64>>,
}

impl AverageClimatology {
    /// Average the training radiation per nbH slot. Leap-day samples are
    /// skipped (they carry no slot).
    pub fn fit(radiation: &[f64], timestamps: &[DateTime<Utc>], longitude: f64) -> Result<Self> {
        if radiation.len() != timestamps.len() {
            return Err(Error::LengthMismatch { left: radiation.len(), right: timestamps.len() });
        }
        let mut sums = vec![(0.0, 0usize); NB_H];
        for (&x, &t) in radiation.iter().zip(timestamps) {
            match slot_of(longitude, t) {
                Ok(slot) => {
                    sums[slot].0 += x;
                    sums[slot].1 += 1;
                }
                Err(Error::LeapDay { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(Self {
            slot_means: sums
                .into_iter()
                .map(|(s, c)| if c > 0 { Some(s / c as f64) } else { None })
                .collect(),
        })
    }

    pub fn forecast(&self, slot: usize) -> Result<f64> {
        self.slot_means
            .get(slot)
            .copied()
            .flatten()
            .ok_or(Error::MissingClimatologySlot { slot })
    }
}

/// Everything a baseline may need to forecast the target hour.
#[derive(Debug, Clone, Copy)]
pub struct BaselineContext<'a> {
    /// Previous hour's measured radiation, when one exists.
    pub previous: Option<f64>,
    /// Timestamp of the target hour.
    pub timestamp: DateTime<Utc>,
    pub meta: &'a StationMeta,
    pub climatology: Option<&'a AverageClimatology>,
}

/// One baseline forecast in Wh/m2.
pub fn baseline_forecast(kind: BaselineKind, ctx: &BaselineContext<'_>) -> Result<f64> {
    match kind {
        BaselineKind::Persistence => ctx.previous.ok_or(Error::ColdStart),
        BaselineKind::ClearSky => {
            let instant = solar_instant(ctx.meta, ctx.timestamp);
            clearsky_ghi(ctx.meta, &instant)
        }
        BaselineKind::Average => {
            let clim = ctx.climatology.ok_or(Error::MissingClimatologySlot { slot: 0 })?;
            clim.forecast(slot_of(ctx.meta.longitude, ctx.timestamp)?)
        }
    }
}

/// Baseline forecasts for every sample of a measured test block.
///
/// `previous_tail` seeds the persistence forecast of the first test hour
/// (the last training measurement).
pub fn baseline_series(
    kind: BaselineKind,
    radiation: &[f64],
    timestamps: &[DateTime<Utc>],
    meta: &StationMeta,
    climatology: Option<&AverageClimatology>,
    previous_tail: Option<f64>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(radiation.len());
    let mut previous = previous_tail;
    for (i, &t) in timestamps.iter().enumerate() {
        let ctx = BaselineContext { previous, timestamp: t, meta, climatology };
        out.push(baseline_forecast(kind, &ctx)?);
        previous = Some(radiation[i]);
    }
    Ok(out)
}

/// nRMSE values per model, station and season, feeding the ranking.
#[derive(Debug, Clone)]
pub struct NrmseTable {
    pub models: Vec<String>,
    pub stations: Vec<String>,
    /// values[model][station][season], season order as [`Season::ALL`].
    pub values: Vec<Vec<[f64; 4]>>,
}

/// Seasonal point ranking: 1 point to the best predictor per station and
/// season, down to M points for the worst.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub models: Vec<String>,
    /// points[model][season], summed over stations.
    pub points: Vec<[usize; 4]>,
    /// Human-readable tie notes; ties are resolved by model-name order.
    pub ties: Vec<String>,
}

pub fn rank_predictors(table: &NrmseTable) -> Result<Ranking> {
    let m = table.models.len();
    let s = table.stations.len();
    if m < 2 || s == 0 {
        return Err(Error::InsufficientData {
            message: "ranking needs at least 2 predictors and 1 station".into(),
        });
    }
    if table.values.len() != m || table.values.iter().any(|v| v.len() != s) {
        return Err(Error::LengthMismatch { left: m, right: table.values.len() });
    }
    let mut points = vec![[0usize; 4]; m];
    let mut ties = Vec::new();
    for (si, station) in table.stations.iter().enumerate() {
        for season in 0..4 {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                table.values[a][si][season]
                    .partial_cmp(&table.values[b][si][season])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| table.models[a].cmp(&table.models[b]))
            });
            for (rank, &model) in order.iter().enumerate() {
                points[model][season] += rank + 1;
            }
            for pair in order.windows(2) {
                if table.values[pair[0]][si][season] == table.values[pair[1]][si][season] {
                    ties.push(format!(
                        "{station}/{}: tie between {} and {}",
                        Season::ALL[season].label(),
                        table.models[pair[0]],
                        table.models[pair[1]]
                    ));
                }
            }
        }
    }
    Ok(Ranking {
        models: table.models.clone(),
        points,
        ties,
    })
}

/// Reliability of each evaluated hour, 0..100.
#[derive(Debug, Clone)]
pub struct ReliabilitySeries {
    /// None where the measurement was zero (excluded).
    pub eta: Vec<Option<f64>>,
    pub excluded: usize,
}

/// Reliability index per hour: `100 * (1 - |forecast - measured| /
/// measured)`, clamped to 0 when the error exceeds the measurement itself.
/// Hours with zero measurement are excluded and counted.
pub fn reliability_index(measured: &[f64], predicted: &[f64]) -> Result<ReliabilitySeries> {
    if measured.len() != predicted.len() {
        return Err(Error::LengthMismatch { left: measured.len(), right: predicted.len() });
    }
    let mut eta = Vec::with_capacity(measured.len());
    let mut excluded = 0usize;
    for (&x, &y) in measured.iter().zip(predicted) {
        if x <= 0.0 {
            eta.push(None);
            excluded += 1;
            continue;
        }
        let err = (y - x).abs();
        eta.push(Some(if err > x { 0.0 } else { 100.0 * (1.0 - err / x) }));
    }
    Ok(ReliabilitySeries { eta, excluded })
}

/// Slot climatology of the reliability index over the nbH year.
pub fn reliability_climatology(
    series: &ReliabilitySeries,
    timestamps: &[DateTime<Utc>],
    longitude: f64,
) -> Result<Vec<Option<f64>>> {
    if series.eta.len() != timestamps.len() {
        return Err(Error::LengthMismatch { left: series.eta.len(), right: timestamps.len() });
    }
    let mut sums = vec![(0.0, 0usize); NB_H];
    for (eta, &t) in series.eta.iter().zip(timestamps) {
        let Some(eta) = eta else { continue };
        match slot_of(longitude, t) {
            Ok(slot) => {
                sums[slot].0 += eta;
                sums[slot].1 += 1;
            }
            Err(Error::LeapDay { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(sums
        .into_iter()
        .map(|(s, c)| if c > 0 { Some(s / c as f64) } else { None })
        .collect())
}

/// Confidence interval half-width: `IC = forecast * (1 - eta/100)`.
/// The band is reported as forecast +/- IC.
pub fn interval_confidence(forecast: f64, eta_slot: f64) -> f64 {
    forecast * ((100.0 - eta_slot) / 100.0)
}

/// Scores of one model over an evaluation window.
#[derive(Debug, Clone)]
pub struct ModelScore {
    pub name: String,
    pub annual: f64,
    /// Per-season nRMSE in [`Season::ALL`] order; NaN when a season has no
    /// samples in the window.
    pub seasonal: [f64; 4],
    /// Dispersion of the stationarized series the model worked on.
    pub cv: Option<f64>,
    pub stationarity: Option<String>,
    pub architecture: Option<String>,
    /// (ARMA hours, ANN hours) for hybrid models.
    pub branch_shares: Option<(usize, usize)>,
}

/// Annual and per-season nRMSE of one prediction series.
pub fn score_model(
    name: impl Into<String>,
    timestamps: &[DateTime<Utc>],
    measured: &[f64],
    predicted: &[f64],
    scheme: SeasonScheme,
) -> Result<ModelScore> {
    if timestamps.len() != measured.len() {
        return Err(Error::LengthMismatch { left: timestamps.len(), right: measured.len() });
    }
    let annual = nrmse(measured, predicted)?;
    let mut seasonal = [f64::NAN; 4];
    for (si, season) in Season::ALL.iter().enumerate() {
        let idx: Vec<usize> = timestamps
            .iter()
            .enumerate()
            .filter(|(_, &t)| season_of_with(scheme, t) == *season)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let x: Vec<f64> = idx.iter().map(|&i| measured[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| predicted[i]).collect();
        seasonal[si] = nrmse(&x, &y)?;
    }
    Ok(ModelScore {
        name: name.into(),
        annual,
        seasonal,
        cv: None,
        stationarity: None,
        architecture: None,
        branch_shares: None,
    })
}

fn pct(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{:.2}", 100.0 * v)
    }
}

/// Aligned-text table of model scores (annual and per-season nRMSE in %,
/// CV, stationarization method, architecture).
pub fn render_scores_text(title: &str, scores: &[ModelScore]) -> String {
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&format!(
        "{:<14} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}  {:<13} {}\n",
        "Model", "Annual", "Winter", "Spring", "Summer", "Autumn", "CV", "Stationarity", "Architecture"
    ));
    for s in scores {
        out.push_str(&format!(
            "{:<14} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}  {:<13} {}\n",
            s.name,
            pct(s.annual),
            pct(s.seasonal[0]),
            pct(s.seasonal[1]),
            pct(s.seasonal[2]),
            pct(s.seasonal[3]),
            s.cv.map_or("-".into(), |c| format!("{c:.2}")),
            s.stationarity.as_deref().unwrap_or("-"),
            s.architecture.as_deref().unwrap_or("-"),
        ));
        if let Some((arma, ann)) = s.branch_shares {
            out.push_str(&format!("{:<14} {arma} ARMA / {ann} ANN\n", ""));
        }
    }
    out
}

/// CSV twin of [`render_scores_text`] with full-precision ratios.
pub fn render_scores_csv(scores: &[ModelScore]) -> String {
    let mut out = String::from(
        "model,annual_nrmse,winter_nrmse,spring_nrmse,summer_nrmse,autumn_nrmse,cv,stationarity,architecture,arma_hours,ann_hours\n",
    );
    for s in scores {
        let cell = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            s.name,
            cell(s.annual),
            cell(s.seasonal[0]),
            cell(s.seasonal[1]),
            cell(s.seasonal[2]),
            cell(s.seasonal[3]),
            s.cv.map_or(String::new(), |c| format!("{c}")),
            s.stationarity.as_deref().unwrap_or(""),
            s.architecture.as_deref().unwrap_or(""),
            s.branch_shares.map_or(String::new(), |b| b.0.to_string()),
            s.branch_shares.map_or(String::new(), |b| b.1.to_string()),
        ));
    }
    out
}

/// Aligned-text ranking table: per-season rank and points per predictor.
pub fn render_ranking_text(ranking: &Ranking) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>16} {:>16} {:>16} {:>16}\n",
        "Model", "Winter", "Spring", "Summer", "Autumn"
    ));
    // Rank within each season by points.
    let mut season_rank = vec![[0usize; 4]; ranking.models.len()];
    for season in 0..4 {
        let mut order: Vec<usize> = (0..ranking.models.len()).collect();
        order.sort_by_key(|&m| (ranking.points[m][season], ranking.models[m].clone()));
        for (rank, &m) in order.iter().enumerate() {
            season_rank[m][season] = rank + 1;
        }
    }
    let mut rows: Vec<usize> = (0..ranking.models.len()).collect();
    rows.sort_by_key(|&m| ranking.points[m].iter().sum::<usize>());
    for m in rows {
        out.push_str(&format!(
            "{:<14} {:>16} {:>16} {:>16} {:>16}\n",
            ranking.models[m],
            format!("{} ({} pts)", ordinal(season_rank[m][0]), ranking.points[m][0]),
            format!("{} ({} pts)", ordinal(season_rank[m][1]), ranking.points[m][1]),
            format!("{} ({} pts)", ordinal(season_rank[m][2]), ranking.points[m][2]),
            format!("{} ({} pts)", ordinal(season_rank[m][3]), ranking.points[m][3]),
        ));
    }
    for tie in &ranking.ties {
        out.push_str(&format!("tie: {tie}\n"));
    }
    out
}

pub fn render_ranking_csv(ranking: &Ranking) -> String {
    let mut out = String::from("model,winter_pts,spring_pts,summer_pts,autumn_pts\n");
    for (m, name) in ranking.models.iter().enumerate() {
        out.push_str(&format!(
            "{name},{},{},{},{}\n",
            ranking.points[m][0], ranking.points[m][1], ranking.points[m][2], ranking.points[m][3]
        ));
    }
    out
}

fn ordinal(rank: usize) -> String {
    let suffix = match (rank % 10, rank % 100) {
        (1, 11) | (2, 12) | (3, 13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{rank}{suffix}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solar::SolisParams;
    use chrono::{Duration, TimeZone};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nrmse_hand_cases() {
        let x = vec![1.0, 2.0];
        assert_eq!(nrmse(&x, &x).unwrap(), 0.0);
        assert!((nrmse(&x, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let v = nrmse(&x, &[1.0, 0.0]).unwrap();
        assert!((v - 0.8f64.sqrt()).abs() < 1e-12, "got {v}");
        assert!(matches!(nrmse(&[0.0, 0.0], &x), Err(Error::AllZeroMeasurements)));
    }

    #[test]
    fn nrmse_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..100).map(|_| rng.gen_range(1.0..5.0)).collect();
        let y: Vec<f64> = (0..100).map(|_| rng.gen_range(1.0..5.0)).collect();
        let base = nrmse(&x, &y).unwrap();
        for k in [0.1, 7.0, 1234.5] {
            let xs: Vec<f64> = x.iter().map(|v| k * v).collect();
            let ys: Vec<f64> = y.iter().map(|v| k * v).collect();
            assert!((nrmse(&xs, &ys).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_of_variation_cases() {
        assert_eq!(coefficient_of_variation(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!((coefficient_of_variation(&[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            coefficient_of_variation(&[-1.0, 1.0]),
            Err(Error::ZeroMean)
        ));
    }

    fn meta() -> StationMeta {
        StationMeta::new("t", 41.9f64.to_radians(), 8.8f64.to_radians(), 0.0)
            .unwrap()
            .with_solis(SolisParams { tau: 0.0, b: 1.0 })
            .unwrap()
    }

    fn ts(y: i32, mo: u32, d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap()
    }

    #[test]
    fn persistence_baseline_repeats_previous_value() {
        let m = meta();
        let ctx = BaselineContext {
            previous: Some(500.0),
            timestamp: ts(2001, 6, 1, 11),
            meta: &m,
            climatology: None,
        };
        assert_eq!(baseline_forecast(BaselineKind::Persistence, &ctx).unwrap(), 500.0);
        let cold = BaselineContext { previous: None, ..ctx };
        assert!(matches!(
            baseline_forecast(BaselineKind::Persistence, &cold),
            Err(Error::ColdStart)
        ));
    }

    #[test]
    fn clear_sky_baseline_with_zero_tau_is_h0_sin_h() {
        let m = meta();
        let t = ts(2001, 6, 1, 11);
        let ctx = BaselineContext { previous: None, timestamp: t, meta: &m, climatology: None };
        let forecast = baseline_forecast(BaselineKind::ClearSky, &ctx).unwrap();
        let inst = solar_instant(&m, t);
        let h0 = crate::solar::extraterrestrial(&m, &inst).unwrap();
        assert!((forecast - h0 * inst.sin_elevation()).abs() < 1e-9);
    }

    #[test]
    fn average_baseline_is_slot_mean() {
        let m = meta();
        // Two years of data at the same clock hour: values 400 and 600.
        let t1 = ts(2001, 6, 15, 11);
        let t2 = ts(2002, 6, 15, 11);
        let clim = AverageClimatology::fit(&[400.0, 600.0], &[t1, t2], m.longitude).unwrap();
        let ctx = BaselineContext {
            previous: None,
            timestamp: ts(2003, 6, 15, 11),
            meta: &m,
            climatology: Some(&clim),
        };
        assert_eq!(baseline_forecast(BaselineKind::Average, &ctx).unwrap(), 500.0);
        // A slot never seen in training has no forecast.
        let missing = BaselineContext { timestamp: ts(2003, 1, 15, 11), ..ctx };
        assert!(matches!(
            baseline_forecast(BaselineKind::Average, &missing),
            Err(Error::MissingClimatologySlot { .. })
        ));
    }

    #[test]
    fn persistence_nrmse_matches_brute_force_on_iid_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m = meta();
        let t0 = ts(2001, 6, 1, 10);
        let timestamps: Vec<_> = (0..2000).map(|i| t0 + Duration::hours(i)).collect();
        let radiation: Vec<f64> = (0..2000).map(|_| rng.gen_range(100.0..900.0)).collect();
        let forecasts = baseline_series(
            BaselineKind::Persistence,
            &radiation,
            &timestamps,
            &m,
            None,
            Some(550.0),
        )
        .unwrap();
        let implementation = nrmse(&radiation, &forecasts).unwrap();
        // Independent straight-line recomputation on the same instance.
        let mut num = 0.0;
        let mut den = 0.0;
        let mut prev = 550.0;
        for &x in &radiation {
            num += (x - prev) * (x - prev);
            den += x * x;
            prev = x;
        }
        let brute = (num / den).sqrt();
        assert!((implementation - brute).abs() < 1e-12);
        // i.i.d. persistence error ~ sqrt(2) * noise-to-signal of the instance.
        assert!(implementation > 0.2 && implementation < 1.0);
    }

    fn hand_table() -> NrmseTable {
        // 6 predictors, 5 stations; predictor i scores i/100 everywhere, so
        // model 0 is best everywhere and model 5 worst everywhere.
        let models: Vec<String> = (0..6).map(|i| format!("m{i}")).collect();
        let stations: Vec<String> = (0..5).map(|i| format!("s{i}")).collect();
        let values = (0..6)
            .map(|i| vec![[0.01 * (i + 1) as f64; 4]; 5])
            .collect();
        NrmseTable { models, stations, values }
    }

    #[test]
    fn ranking_bounds_and_sums() {
        let ranking = rank_predictors(&hand_table()).unwrap();
        for season in 0..4 {
            assert_eq!(ranking.points[0][season], 5, "best everywhere scores 5");
            assert_eq!(ranking.points[5][season], 30, "worst everywhere scores 30");
            let total: usize = ranking.points.iter().map(|p| p[season]).sum();
            assert_eq!(total, 21 * 5);
        }
        assert!(ranking.ties.is_empty());
    }

    #[test]
    fn ranking_matches_hand_computation_on_mixed_table() {
        // Two stations, three predictors, winter season crafted by hand:
        //   station 0: a=0.10 b=0.20 c=0.30 -> a1 b2 c3
        //   station 1: b=0.10 c=0.20 a=0.30 -> b1 c2 a3
        // Winter points: a=4, b=3, c=5.
        let models = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let stations = vec!["s0".to_string(), "s1".to_string()];
        let mk = |w0: f64, w1: f64| vec![[w0, 0.5, 0.5, 0.5], [w1, 0.5, 0.5, 0.5]];
        let values = vec![mk(0.10, 0.30), mk(0.20, 0.10), mk(0.30, 0.20)];
        let ranking = rank_predictors(&NrmseTable { models, stations, values }).unwrap();
        assert_eq!(ranking.points[0][0], 4);
        assert_eq!(ranking.points[1][0], 3);
        assert_eq!(ranking.points[2][0], 5);
        // The crafted 0.5s tie in the other seasons and are flagged.
        assert!(!ranking.ties.is_empty());
    }

    #[test]
    fn reliability_hand_cases_and_clamping() {
        let r = reliability_index(&[400.0], &[400.0]).unwrap();
        assert_eq!(r.eta[0], Some(100.0));
        let r = reliability_index(&[400.0], &[800.0]).unwrap();
        assert_eq!(r.eta[0], Some(0.0), "error of 100% clamps to zero");
        let r = reliability_index(&[400.0], &[300.0]).unwrap();
        assert_eq!(r.eta[0], Some(75.0));
        let r = reliability_index(&[0.0, 200.0], &[10.0, 100.0]).unwrap();
        assert_eq!(r.eta[0], None);
        assert_eq!(r.excluded, 1);
    }

    #[test]
    fn reliability_stays_in_bounds_on_adversarial_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let x = rng.gen_range(1e-6..1000.0);
            let y = rng.gen_range(-1000.0..10_000.0);
            let r = reliability_index(&[x], &[y]).unwrap();
            let eta = r.eta[0].unwrap();
            assert!((0.0..=100.0).contains(&eta), "eta = {eta}");
        }
    }

    #[test]
    fn confidence_interval_endpoints() {
        assert_eq!(interval_confidence(750.0, 100.0), 0.0);
        assert_eq!(interval_confidence(750.0, 0.0), 750.0);
        assert_eq!(interval_confidence(500.0, 80.0), 100.0);
    }

    #[test]
    fn reliability_climatology_averages_by_slot() {
        let m = meta();
        let t1 = ts(2001, 6, 15, 11);
        let t2 = ts(2002, 6, 15, 11);
        let series = reliability_index(&[100.0, 100.0], &[90.0, 70.0]).unwrap();
        let clim = reliability_climatology(&series, &[t1, t2], m.longitude).unwrap();
        let slot = slot_of(m.longitude, t1).unwrap();
        assert_eq!(clim[slot], Some(80.0));
        assert_eq!(clim.len(), NB_H);
    }

    #[test]
    fn seasonal_scores_partition_by_calendar() {
        let timestamps = vec![
            ts(2001, 1, 10, 12), // winter
            ts(2001, 4, 10, 12), // spring
            ts(2001, 7, 10, 12), // summer
            ts(2001, 10, 10, 12), // autumn
        ];
        let measured = vec![100.0, 200.0, 300.0, 400.0];
        let predicted = vec![100.0, 100.0, 300.0, 400.0];
        let score = score_model(
            "toy",
            &timestamps,
            &measured,
            &predicted,
            SeasonScheme::Meteorological,
        )
        .unwrap();
        assert_eq!(score.seasonal[0], 0.0);
        assert!((score.seasonal[1] - 0.5).abs() < 1e-12);
        assert_eq!(score.seasonal[2], 0.0);
        assert_eq!(score.seasonal[3], 0.0);
        assert!(score.annual > 0.0);
    }

    #[test]
    fn rendered_tables_are_stable() {
        let ranking = rank_predictors(&hand_table()).unwrap();
        let text = render_ranking_text(&ranking);
        assert!(text.contains("1st (5 pts)"));
        assert!(text.contains("6th (30 pts)"));
        let csv = render_ranking_csv(&ranking);
        assert!(csv.lines().count() == 7);

        let score = ModelScore {
            name: "ARMA".into(),
            annual: 0.169,
            seasonal: [0.257, 0.159, 0.144, 0.193],
            cv: Some(0.46),
            stationarity: Some("CSI".into()),
            architecture: None,
            branch_shares: None,
        };
        let text = render_scores_text("nRMSE (%)", &[score.clone()]);
        assert!(text.contains("16.90"));
        assert!(text.contains("25.70"));
        let csv = render_scores_csv(&[score]);
        assert!(csv.contains("ARMA,0.169,"));
    }
}
