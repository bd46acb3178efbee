//! End-to-end orchestration behind the CLI subcommands: synthesize data,
//! fit models, forecast the test block, evaluate, rank and sweep.
//!
//! Every command is deterministic: given the same inputs, seeds and
//! configuration it produces byte-identical artifacts. All floating point
//! output destined for re-reading is written with the shortest round-trip
//! representation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Utc};

use heliocast::arma::{fit_yule_walker, select_order, ArmaForecaster, ArmaModel};
use heliocast::eval::{
    baseline_series, coefficient_of_variation, interval_confidence, nrmse, rank_predictors,
    reliability_climatology, reliability_index, render_ranking_csv, render_ranking_text,
    render_scores_csv, render_scores_text, score_model, AverageClimatology, BaselineKind,
    ModelScore, NrmseTable,
};
use heliocast::hybrid::{
    fit_hybrid, forecast_series, Branch, HybridMode, HybridModel, SelectionRecord,
};
use heliocast::ingest::{
    daytime_filter, load_csv, repair_missing, save_csv, split, ColumnMap, HourlySeries,
    RepairReport, SplitSpec,
};
use heliocast::mlp::{
    build_dataset, train_new, Dataset, ExoChannels, MlpArchitecture, MlpModel, TrainConfig,
};
use heliocast::solar::{fit_solis, SolisParams, StationMeta};
use heliocast::stationarize::{
    load_pc_csv, periodic_coefficients, save_pc_csv, slot_of, strip_leap_days, to_clearness_index,
    to_clearsky_index, to_csi_pc, without_transform, Method, StationarizedSeries,
};
use heliocast::stats::{select_endogenous_lags, select_exogenous_lags, ChannelSpec, CorrelationProfile};
use heliocast::synth::{generate, Scenario};

use crate::config::{PipelineConfig, StationFile};

const SUMMARY_VERSION: u32 = 1;

/// Fit-time context shared with forecast/evaluate through `summary.json`.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct FitSummary {
    schema_version: u32,
    station_id: String,
    method: String,
    architecture: String,
    cv_train: f64,
    arma_p: usize,
    arma_q: usize,
    residual_white: bool,
    endo_lags: Vec<usize>,
    exo_counts: [usize; 3],
    seeds: Vec<u64>,
    best_seed: u64,
    repair_fraction: f64,
    repair_exceeded_ceiling: bool,
}

/// Cleaned data plus its stationarized form and split boundaries.
struct Prepared {
    meta: StationMeta,
    filtered: HourlySeries,
    stationarized: StationarizedSeries,
    n_train: usize,
    n_val: usize,
    pc: Option<Vec<f64>>,
    repair: RepairReport,
}

impl Prepared {
    fn test_start(&self) -> usize {
        self.n_train + self.n_val
    }

    fn train_block(&self) -> HourlySeries {
        self.filtered.slice(0..self.n_train)
    }

    fn exo<'a>(&'a self, pressure_channel: &str) -> ExoChannels<'a> {
        exo_channels(&self.filtered, pressure_channel)
    }
}

/// Clamp non-typical index values (repair artifacts at low-sun hours).
fn cap_index(values: &mut [f64], cap: f64) {
    for v in values {
        if *v > cap {
            *v = cap;
        }
    }
}

fn exo_channels<'a>(series: &'a HourlySeries, pressure_channel: &str) -> ExoChannels<'a> {
    let pressure = match pressure_channel {
        "gradient" => series.pressure_gradient.as_deref(),
        _ => series.pressure.as_deref(),
    };
    ExoChannels {
        cloudiness: series.cloudiness.as_deref(),
        pressure,
        precipitation: series.precipitation.as_deref(),
    }
}

/// Load, repair, filter, strip leap days, fit or adopt Solis parameters and
/// stationarize. `solis` short-circuits fitting (used by forecast-time
/// commands to reuse the fit-time parameters); `pc` likewise for the
/// periodic coefficients.
fn prepare(
    cfg: &PipelineConfig,
    solis: Option<SolisParams>,
    pc: Option<Vec<f64>>,
) -> Result<Prepared> {
    let station = StationFile::load(&cfg.station_file)?;
    let mut meta = station.to_meta()?;

    let raw = load_csv(&cfg.data_file, &ColumnMap::default())
        .with_context(|| format!("loading {}", cfg.data_file.display()))?;
    let (repaired, repair) = repair_missing(&raw, cfg.max_missing_frac)?;
    if repair.exceeded_ceiling {
        eprintln!(
            "warning: repaired fraction {:.4} exceeds ceiling {:.4}",
            repair.fraction, repair.ceiling
        );
    }
    let filtered = daytime_filter(&repaired, &meta)?;
    let filtered = strip_leap_days(&filtered, &meta);

    let spec = SplitSpec::new(cfg.split[0], cfg.split[1], cfg.split[2])
        .map_err(|e| anyhow!("{e}"))?;
    let (train, val, _test) = split(&filtered, &spec)?;
    let (n_train, n_val) = (train.len(), val.len());

    if let Some(s) = solis {
        meta = meta.with_solis(s)?;
    } else if meta.solis.is_none() {
        let fitted = fit_solis(&train, &meta)?;
        meta = meta.with_solis(fitted)?;
    }

    let method = cfg.parse_method().map_err(|e| anyhow!("{e}"))?;
    let (mut stationarized, pc) = match method {
        Method::None => (without_transform(&filtered, &meta)?, None),
        Method::Ci => (to_clearness_index(&filtered, &meta)?, None),
        Method::Csi => (to_clearsky_index(&filtered, &meta)?, None),
        Method::CsiPc => {
            let csi = to_clearsky_index(&filtered, &meta)?;
            let pc = match pc {
                Some(pc) => pc,
                None => {
                    let mut train_csi = csi.slice(0..n_train);
                    cap_index(&mut train_csi.values, cfg.index_cap);
                    periodic_coefficients(&train_csi)?
                }
            };
            (to_csi_pc(&csi, &pc)?, Some(pc))
        }
    };
    if method != Method::None {
        cap_index(&mut stationarized.values, cfg.index_cap);
    }

    Ok(Prepared {
        meta,
        filtered,
        stationarized,
        n_train,
        n_val,
        pc,
        repair,
    })
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn run_synth(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("reading scenario {}", config.display()))?;
    let mut scenario: Scenario =
        toml::from_str(&text).with_context(|| format!("parsing scenario {}", config.display()))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let data = generate(&scenario)?;

    std::fs::create_dir_all(out)?;
    save_csv(&data.series, out.join("hours.csv"))?;
    // The station file intentionally omits the true Solis parameters; the
    // pipeline has to fit them. Ground truth lives in the sidecar.
    let mut station = StationFile::from_meta(&data.meta);
    station.tau = None;
    station.b = None;
    station.save(&out.join("station.toml"))?;
    std::fs::write(
        out.join("truth.json"),
        serde_json::to_string_pretty(&data.truth)?,
    )?;
    println!(
        "synth: {} hours for station '{}' -> {}",
        data.series.len(),
        scenario.station_id,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

/// Resolve the network shape: explicit canonical form, or lag selection on
/// the training block.
fn resolve_architecture(
    cfg: &PipelineConfig,
    prep: &Prepared,
) -> Result<(MlpArchitecture, Vec<usize>, [usize; 3])> {
    if let Some(form) = &cfg.mlp.architecture {
        let arch = MlpArchitecture::parse(form)?;
        return Ok((arch, Vec::new(), [arch.cloud_lags, arch.pressure_lags, arch.precip_lags]));
    }
    let train_values = &prep.stationarized.values[..prep.n_train];
    let mut profile = CorrelationProfile::compute(train_values, cfg.mlp.endo_cap)?;
    if let Some(bound) = cfg.mlp.significance_bound {
        profile = profile.with_significance_bound(bound);
    }
    let endo = select_endogenous_lags(&profile, cfg.mlp.endo_cap)?;
    let endo_count = *endo.last().expect("selection is nonempty");

    let train_block = prep.train_block();
    let exo = prep.exo(&cfg.mlp.pressure_channel);
    let mut channels = Vec::new();
    let names = ["cloudiness", "pressure", "precipitation"];
    let sources = [exo.cloudiness, exo.pressure, exo.precipitation];
    let thresholds = [
        cfg.mlp.cloud_threshold,
        cfg.mlp.other_threshold,
        cfg.mlp.other_threshold,
    ];
    for i in 0..3 {
        if let Some(values) = sources[i] {
            channels.push(ChannelSpec {
                name: names[i],
                values: &values[..prep.n_train],
                threshold: thresholds[i],
            });
        }
    }
    let selected = select_exogenous_lags(train_values, &channels, cfg.mlp.exo_scan_cap)?;
    let count_for = |name: &str| {
        selected
            .iter()
            .find(|(n, _)| n == name)
            .map_or(0, |(_, c)| *c)
    };
    let counts = [
        count_for("cloudiness"),
        count_for("pressure"),
        count_for("precipitation"),
    ];
    let arch = MlpArchitecture::new(endo_count, counts[0], counts[1], counts[2], cfg.mlp.hidden)?;
    drop(train_block);
    Ok((arch, endo, counts))
}

fn train_config(cfg: &PipelineConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        max_fail: cfg.mlp.max_fail,
        max_epochs: cfg.mlp.max_epochs,
        goal: cfg.mlp.goal,
        rng_seed: seed,
        ..TrainConfig::default()
    }
}

/// Best validation error reached during a training run.
fn best_validation(model: &MlpModel) -> f64 {
    model
        .training_log
        .iter()
        .map(|e| e.validation_mse)
        .fold(f64::INFINITY, f64::min)
}

pub fn run_fit(config: &Path, out: &Path, seeds: Option<Vec<u64>>) -> Result<()> {
    let mut cfg = PipelineConfig::load(config)?;
    if let Some(seeds) = seeds {
        cfg.mlp.seeds = seeds;
    }
    cfg.validate()?;
    let prep = prepare(&cfg, None, None)?;
    let method = cfg.parse_method().map_err(|e| anyhow!("{e}"))?;
    std::fs::create_dir_all(out)?;

    // Persist the fit-time station (with Solis parameters) and, for CSI+PC,
    // the periodic coefficients, so later commands reuse them verbatim.
    StationFile::from_meta(&prep.meta).save(&out.join("station_fitted.toml"))?;
    if let Some(pc) = &prep.pc {
        save_pc_csv(pc, out.join("pc.csv"))?;
    }

    let train_values = &prep.stationarized.values[..prep.n_train];
    let profile = CorrelationProfile::compute(train_values, cfg.mlp.endo_cap.max(12))?;
    std::fs::write(out.join("correlogram.csv"), profile.to_csv())?;

    // ARMA: fixed order or FPE grid search.
    let (arma, white) = match (cfg.arma.p, cfg.arma.q) {
        (Some(p), Some(q)) => {
            let model = fit_yule_walker(train_values, p, q)?;
            let white = heliocast::arma::residual_whiteness(train_values, &model);
            (model, white)
        }
        _ => {
            let sel = select_order(train_values, cfg.arma.p_max, cfg.arma.q_max)?;
            (sel.model, sel.residual_white)
        }
    };
    std::fs::write(out.join("arma.json"), arma.to_json())?;

    // MLP: one run per seed, the best validation error wins.
    let (arch, endo_lags, exo_counts) = resolve_architecture(&cfg, &prep)?;
    let exo = prep.exo(&cfg.mlp.pressure_channel);
    let train_channels = exo_slice(&exo, 0..prep.n_train);
    let val_channels = exo_slice(&exo, prep.n_train..prep.n_train + prep.n_val);
    let train_series = prep.stationarized.slice(0..prep.n_train);
    let val_series = prep
        .stationarized
        .slice(prep.n_train..prep.n_train + prep.n_val);
    let (train_set, _) = dataset_for(&train_series, &train_channels.as_exo(), &arch)?;
    let (val_set, _) = dataset_for(&val_series, &val_channels.as_exo(), &arch)?;

    let mut best: Option<(u64, MlpModel)> = None;
    for &seed in &cfg.mlp.seeds {
        let model = train_new(arch, &train_set, &val_set, &train_config(&cfg, seed))?;
        std::fs::write(out.join(format!("mlp_seed{seed}.json")), model.to_json())?;
        let better = match &best {
            Some((_, current)) => best_validation(&model) < best_validation(current),
            None => true,
        };
        if better {
            best = Some((seed, model));
        }
    }
    let (best_seed, mlp) = best.expect("at least one seed");
    std::fs::write(out.join("mlp.json"), mlp.to_json())?;

    // Hybrids. Modes A and C share the branches with the single models;
    // mode B retrains both on its seasonal subsets.
    let scheme = cfg.parse_scheme().map_err(|e| anyhow!("{e}"))?;
    for mode in cfg.parse_modes().map_err(|e| anyhow!("{e}"))? {
        let model = match mode {
            HybridMode::A | HybridMode::C => HybridModel {
                mode,
                season_scheme: scheme,
                arma: arma.clone(),
                mlp: mlp.clone(),
                arma_training_indices: (0..prep.n_train).collect(),
                mlp_training_positions: Vec::new(),
            },
            HybridMode::B => fit_hybrid(
                HybridMode::B,
                &train_series,
                &train_channels.as_exo(),
                &val_series,
                &val_channels.as_exo(),
                &heliocast::hybrid::BranchSpecs {
                    arma_order: (arma.p, arma.q),
                    architecture: arch,
                    train_cfg: train_config(&cfg, best_seed),
                    season_scheme: scheme,
                },
            )?,
        };
        std::fs::write(
            out.join(format!("hybrid_{}.json", mode.label().to_lowercase())),
            model.to_json(),
        )?;
    }

    let summary = FitSummary {
        schema_version: SUMMARY_VERSION,
        station_id: prep.meta.id.clone(),
        method: method.label().to_string(),
        architecture: arch.canonical_form(),
        cv_train: coefficient_of_variation(train_values)?,
        arma_p: arma.p,
        arma_q: arma.q,
        residual_white: white,
        endo_lags,
        exo_counts,
        seeds: cfg.mlp.seeds.clone(),
        best_seed,
        repair_fraction: prep.repair.fraction,
        repair_exceeded_ceiling: prep.repair.exceeded_ceiling,
    };
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    println!(
        "fit: {} / ARMA({},{}) / {} -> {}",
        method.label(),
        arma.p,
        arma.q,
        arch.canonical_form(),
        out.display()
    );
    Ok(())
}

/// Owned per-block copies of the exogenous channels.
struct ExoSlice {
    cloudiness: Option<Vec<f64>>,
    pressure: Option<Vec<f64>>,
    precipitation: Option<Vec<f64>>,
}

impl ExoSlice {
    fn as_exo(&self) -> ExoChannels<'_> {
        ExoChannels {
            cloudiness: self.cloudiness.as_deref(),
            pressure: self.pressure.as_deref(),
            precipitation: self.precipitation.as_deref(),
        }
    }
}

fn exo_slice(exo: &ExoChannels<'_>, range: std::ops::Range<usize>) -> ExoSlice {
    let cut = |v: Option<&[f64]>| v.map(|v| v[range.clone()].to_vec());
    ExoSlice {
        cloudiness: cut(exo.cloudiness),
        pressure: cut(exo.pressure),
        precipitation: cut(exo.precipitation),
    }
}

fn dataset_for(
    series: &StationarizedSeries,
    exo: &ExoChannels<'_>,
    arch: &MlpArchitecture,
) -> Result<(Dataset, Vec<usize>)> {
    let channels = exo.for_arch(arch, series.len())?;
    Ok(build_dataset(&series.values, &channels, arch.endo_lags)?)
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

enum FittedModel {
    Baseline(BaselineKind),
    Arma(ArmaModel),
    Mlp(MlpModel),
    Hybrid(HybridModel),
}

impl FittedModel {
    fn name(&self) -> String {
        match self {
            FittedModel::Baseline(k) => k.label().replace(' ', ""),
            FittedModel::Arma(_) => "ARMA".into(),
            FittedModel::Mlp(_) => "MLP".into(),
            FittedModel::Hybrid(h) => format!("Hybrid{}", h.mode.label()),
        }
    }
}

fn load_models(dir: &Path) -> Result<Vec<FittedModel>> {
    let read = |name: &str| -> Result<Option<String>> {
        let path = dir.join(name);
        if path.exists() {
            Ok(Some(std::fs::read_to_string(&path)?))
        } else {
            Ok(None)
        }
    };
    let mut models = vec![
        FittedModel::Baseline(BaselineKind::Persistence),
        FittedModel::Baseline(BaselineKind::ClearSky),
        FittedModel::Baseline(BaselineKind::Average),
    ];
    if let Some(text) = read("arma.json")? {
        models.push(FittedModel::Arma(ArmaModel::from_json(&text)?));
    }
    if let Some(text) = read("mlp.json")? {
        models.push(FittedModel::Mlp(MlpModel::from_json(&text)?));
    }
    for mode in ["a", "b", "c"] {
        if let Some(text) = read(&format!("hybrid_{mode}.json"))? {
            models.push(FittedModel::Hybrid(HybridModel::from_json(&text)?));
        }
    }
    Ok(models)
}

/// Forecasts in Wh/m2 for positions `start..end`, with history taken from
/// the samples before `start`. Also returns the destationarization clamp
/// count and, for hybrids, the selection log.
fn predict_whm2(
    prep: &Prepared,
    model: &FittedModel,
    pressure_channel: &str,
    start: usize,
    end: usize,
) -> Result<(Vec<f64>, usize, Option<Vec<SelectionRecord>>)> {
    let window = prep.stationarized.slice(start..end);
    match model {
        FittedModel::Baseline(kind) => {
            let climatology = match kind {
                BaselineKind::Average => {
                    let train = prep.train_block();
                    Some(AverageClimatology::fit(
                        &train.radiation,
                        &train.timestamps,
                        prep.meta.longitude,
                    )?)
                }
                _ => None,
            };
            let previous = if start > 0 {
                Some(prep.filtered.radiation[start - 1])
            } else {
                None
            };
            let preds = baseline_series(
                *kind,
                &prep.filtered.radiation[start..end],
                &prep.filtered.timestamps[start..end],
                &prep.meta,
                climatology.as_ref(),
                previous,
            )?;
            Ok((preds, 0, None))
        }
        FittedModel::Arma(arma) => {
            let mut forecaster = ArmaForecaster::new(arma.clone());
            forecaster.prime(&prep.stationarized.values[..start]);
            let mut preds = Vec::with_capacity(end - start);
            for t in start..end {
                preds.push(forecaster.forecast()?);
                forecaster.observe(prep.stationarized.values[t]);
            }
            let (whm2, clamped) = window.destationarize(&preds)?;
            Ok((whm2, clamped, None))
        }
        FittedModel::Mlp(mlp) => {
            let arch = mlp.architecture;
            let exo = prep.exo(pressure_channel);
            let channels = exo.for_arch(&arch, prep.stationarized.len())?;
            let mut preds = Vec::with_capacity(end - start);
            for t in start..end {
                let mut row = Vec::with_capacity(arch.input_count());
                for lag in 1..=arch.endo_lags {
                    row.push(prep.stationarized.values[t - lag]);
                }
                for (values, lags) in &channels {
                    for lag in 1..=*lags {
                        row.push(values[t - lag]);
                    }
                }
                preds.push(mlp.forecast_one_step(&row)?);
            }
            let (whm2, clamped) = window.destationarize(&preds)?;
            Ok((whm2, clamped, None))
        }
        FittedModel::Hybrid(hybrid) => {
            let head = prep.stationarized.slice(0..end);
            let exo_full = prep.exo(pressure_channel);
            let head_exo = exo_slice(&exo_full, 0..end);
            let log = forecast_series(hybrid, &head, &head_exo.as_exo(), start)?;
            let preds: Vec<f64> = log.iter().map(|r| r.selected).collect();
            let (whm2, clamped) = window.destationarize(&preds)?;
            Ok((whm2, clamped, Some(log)))
        }
    }
}

/// The earliest position every model can forecast from.
fn warm_up(models: &[FittedModel]) -> usize {
    let mut warm = 1usize;
    for model in models {
        match model {
            FittedModel::Baseline(_) => warm = warm.max(1),
            FittedModel::Arma(a) => warm = warm.max(a.p.max(a.q)),
            FittedModel::Mlp(m) => warm = warm.max(max_lag(&m.architecture)),
            FittedModel::Hybrid(h) => {
                warm = warm
                    .max(h.arma.p.max(h.arma.q))
                    .max(max_lag(&h.mlp.architecture))
            }
        }
    }
    warm
}

fn max_lag(arch: &MlpArchitecture) -> usize {
    arch.endo_lags
        .max(arch.cloud_lags)
        .max(arch.pressure_lags)
        .max(arch.precip_lags)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

pub fn run_forecast(config: &Path, models_dir: &Path, out: &Path) -> Result<()> {
    let cfg = PipelineConfig::load(config)?;
    let station = StationFile::load(&models_dir.join("station_fitted.toml"))
        .context("fit artifacts missing; run `heliocast fit` first")?;
    let solis = match (station.tau, station.b) {
        (Some(tau), Some(b)) => SolisParams { tau, b },
        _ => bail!("station_fitted.toml carries no Solis parameters"),
    };
    let pc_path = models_dir.join("pc.csv");
    let pc = if pc_path.exists() {
        Some(load_pc_csv(&pc_path)?)
    } else {
        None
    };
    let prep = prepare(&cfg, Some(solis), pc)?;
    let models = load_models(models_dir)?;
    if models.len() <= 3 {
        bail!("no fitted models found in {}", models_dir.display());
    }
    std::fs::create_dir_all(out)?;

    let warm = warm_up(&models);
    let test_start = prep.test_start();
    if test_start <= warm {
        bail!("test block starts at {test_start}, inside the warm-up window {warm}");
    }
    let n = prep.stationarized.len();

    for model in &models {
        let name = model.name();
        // Reliability climatology from the pre-test block, then the test
        // forecasts themselves.
        let (pre_preds, _, _) =
            predict_whm2(&prep, model, &cfg.mlp.pressure_channel, warm, test_start)?;
        let pre_measured = &prep.filtered.radiation[warm..test_start];
        let pre_eta = reliability_index(pre_measured, &pre_preds)?;
        let clim = reliability_climatology(
            &pre_eta,
            &prep.filtered.timestamps[warm..test_start],
            prep.meta.longitude,
        )?;

        let (preds, clamped, log) =
            predict_whm2(&prep, model, &cfg.mlp.pressure_channel, test_start, n)?;

        let mut file = String::from("timestamp,measured_whm2,predicted_whm2,branch,eta_slot,ic\n");
        for (i, t) in prep.filtered.timestamps[test_start..n].iter().enumerate() {
            let eta_slot = slot_of(prep.meta.longitude, *t)
                .ok()
                .and_then(|slot| clim[slot]);
            let ic = eta_slot.map(|eta| interval_confidence(preds[i], eta));
            let branch = log
                .as_ref()
                .map_or(String::new(), |l| l[i].branch.label().to_string());
            writeln!(
                file,
                "{},{},{},{},{},{}",
                t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                prep.filtered.radiation[test_start + i],
                preds[i],
                branch,
                fmt_opt(eta_slot),
                fmt_opt(ic),
            )?;
        }
        std::fs::write(out.join(format!("forecast_{name}.csv")), file)?;
        if clamped > 0 {
            eprintln!("note: {name}: {clamped} negative forecasts clamped to 0 Wh/m2");
        }

        if let Some(log) = log {
            let mut file = String::from(
                "timestamp,branch,ar_forecast,ann_forecast,ar_residual,ann_residual,selected_forecast\n",
            );
            for r in &log {
                writeln!(
                    file,
                    "{},{},{},{},{},{},{}",
                    r.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    r.branch.label(),
                    r.arma_forecast,
                    r.ann_forecast,
                    r.arma_residual,
                    r.ann_residual,
                    r.selected
                )?;
            }
            std::fs::write(out.join(format!("selection_log_{name}.csv")), file)?;
        }
    }
    println!(
        "forecast: {} models over {} test hours -> {}",
        models.len(),
        n - test_start,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct ForecastFile {
    timestamps: Vec<DateTime<Utc>>,
    measured: Vec<f64>,
    predicted: Vec<f64>,
}

fn read_forecast_file(path: &Path) -> Result<ForecastFile> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = ForecastFile {
        timestamps: Vec::new(),
        measured: Vec::new(),
        predicted: Vec::new(),
    };
    for record in reader.records() {
        let record = record?;
        if record.len() < 3 {
            bail!("short row in {}", path.display());
        }
        out.timestamps.push(
            DateTime::parse_from_rfc3339(&record[0])
                .map_err(|e| anyhow!("bad timestamp in {}: {e}", path.display()))?
                .with_timezone(&Utc),
        );
        out.measured.push(record[1].parse()?);
        out.predicted.push(record[2].parse()?);
    }
    Ok(out)
}

/// Canonical model ordering for reports.
fn model_order(name: &str) -> usize {
    [
        "Persistence",
        "ClearSky",
        "Average",
        "ARMA",
        "MLP",
        "HybridA",
        "HybridB",
        "HybridC",
    ]
    .iter()
    .position(|m| *m == name)
    .unwrap_or(usize::MAX)
}

pub fn run_evaluate(config: &Path, forecasts: &Path, out: &Path) -> Result<()> {
    let cfg = PipelineConfig::load(config)?;
    let scheme = cfg.parse_scheme().map_err(|e| anyhow!("{e}"))?;

    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(forecasts)? {
        let path = entry?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if let Some(name) = stem.strip_prefix("forecast_") {
            files.push((name.to_string(), path.clone()));
        }
    }
    if files.is_empty() {
        bail!("no forecast_*.csv files in {}", forecasts.display());
    }
    files.sort_by_key(|(name, _)| (model_order(name), name.clone()));

    let summary: Option<FitSummary> = {
        // The fit summary usually sits next to the forecasts or in the
        // models directory; accept either.
        let candidates = [forecasts.join("summary.json"), forecasts.join("../models/summary.json")];
        candidates.iter().find(|p| p.exists()).map(|p| -> Result<FitSummary> {
            Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?)
        }).transpose()?
    };

    std::fs::create_dir_all(out)?;
    let mut scores: Vec<ModelScore> = Vec::new();
    for (name, path) in &files {
        let data = read_forecast_file(path)?;
        let mut score = score_model(name.clone(), &data.timestamps, &data.measured, &data.predicted, scheme)?;
        if let Some(summary) = &summary {
            if matches!(name.as_str(), "ARMA" | "MLP" | "HybridA" | "HybridB" | "HybridC") {
                score.stationarity = Some(summary.method.clone());
                score.cv = Some(summary.cv_train);
            }
            if matches!(name.as_str(), "MLP" | "HybridA" | "HybridB" | "HybridC") {
                score.architecture = Some(summary.architecture.clone());
            }
        }
        let log_path = forecasts.join(format!("selection_log_{name}.csv"));
        if log_path.exists() {
            let mut reader = csv::Reader::from_path(&log_path)?;
            let mut arma_hours = 0usize;
            let mut total = 0usize;
            for record in reader.records() {
                let record = record?;
                if record.get(1) == Some(Branch::Arma.label()) {
                    arma_hours += 1;
                }
                total += 1;
            }
            score.branch_shares = Some((arma_hours, total - arma_hours));
        }

        // Reliability of the test-window predictions.
        let eta = reliability_index(&data.measured, &data.predicted)?;
        let mut file = String::from("timestamp,eta\n");
        for (t, e) in data.timestamps.iter().zip(&eta.eta) {
            writeln!(
                file,
                "{},{}",
                t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                fmt_opt(*e)
            )?;
        }
        std::fs::write(out.join(format!("reliability_{name}.csv")), file)?;

        scores.push(score);
    }

    let title = match &summary {
        Some(s) => format!("nRMSE (%) for station '{}'", s.station_id),
        None => "nRMSE (%)".to_string(),
    };
    std::fs::write(out.join("metrics.txt"), render_scores_text(&title, &scores))?;
    std::fs::write(out.join("metrics.csv"), render_scores_csv(&scores))?;

    // One rank-input row per model for this station.
    let station_id = summary.as_ref().map_or("station", |s| s.station_id.as_str());
    let mut row = String::from("model,station,winter,spring,summer,autumn\n");
    for s in &scores {
        writeln!(
            row,
            "{},{},{},{},{},{}",
            s.name,
            station_id,
            s.seasonal[0],
            s.seasonal[1],
            s.seasonal[2],
            s.seasonal[3]
        )?;
    }
    std::fs::write(out.join("nrmse_rows.csv"), row)?;

    println!("evaluate: {} models -> {}", scores.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

pub fn run_rank(input: &Path, out: &Path) -> Result<()> {
    let mut reader = csv::Reader::from_path(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let mut models: Vec<String> = Vec::new();
    let mut stations: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, String), [f64; 4]> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 6 {
            bail!(
                "{}: expected columns model,station,winter,spring,summer,autumn",
                input.display()
            );
        }
        let model = record[0].to_string();
        let station = record[1].to_string();
        let mut seasons = [0.0; 4];
        for (i, value) in seasons.iter_mut().enumerate() {
            *value = record[2 + i]
                .parse()
                .map_err(|e| anyhow!("bad nRMSE value '{}': {e}", &record[2 + i]))?;
        }
        if !models.contains(&model) {
            models.push(model.clone());
        }
        if !stations.contains(&station) {
            stations.push(station.clone());
        }
        cells.insert((model, station), seasons);
    }
    let values: Vec<Vec<[f64; 4]>> = models
        .iter()
        .map(|m| {
            stations
                .iter()
                .map(|s| {
                    cells
                        .get(&(m.clone(), s.clone()))
                        .copied()
                        .ok_or_else(|| anyhow!("missing nRMSE for model '{m}' at station '{s}'"))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let ranking = rank_predictors(&NrmseTable {
        models,
        stations,
        values,
    })?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("rank.txt"), render_ranking_text(&ranking))?;
    std::fs::write(out.join("rank.csv"), render_ranking_csv(&ranking))?;
    println!("rank: {} predictors -> {}", ranking.models.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn run_sweep(config: &Path, out: &Path, seeds: Option<Vec<u64>>) -> Result<()> {
    let mut cfg = PipelineConfig::load(config)?;
    if let Some(seeds) = seeds {
        cfg.sweep.seeds = seeds;
    }
    if cfg.sweep.seeds.is_empty() || cfg.sweep.hidden_grid.is_empty() {
        bail!("sweep needs at least one seed and one hidden count");
    }
    let prep = prepare(&cfg, None, None)?;
    let (base_arch, _, _) = resolve_architecture(&cfg, &prep)?;

    let exo = prep.exo(&cfg.mlp.pressure_channel);
    let train_channels = exo_slice(&exo, 0..prep.n_train);
    let train_series = prep.stationarized.slice(0..prep.n_train);
    let val_range = prep.n_train..prep.n_train + prep.n_val;
    let val_series = prep.stationarized.slice(val_range.clone());
    let val_channels = exo_slice(&exo, val_range.clone());
    let (train_set, _) = dataset_for(&train_series, &train_channels.as_exo(), &base_arch)?;
    let (val_set, _) = dataset_for(&val_series, &val_channels.as_exo(), &base_arch)?;
    let val_measured = &prep.filtered.radiation[val_range.clone()];

    let warm = max_lag(&base_arch);
    let mut rows = Vec::new();
    for &hidden in &cfg.sweep.hidden_grid {
        let arch = MlpArchitecture::new(
            base_arch.endo_lags,
            base_arch.cloud_lags,
            base_arch.pressure_lags,
            base_arch.precip_lags,
            hidden,
        )?;
        let mut per_seed = Vec::new();
        for &seed in &cfg.sweep.seeds {
            let model = train_new(arch, &train_set, &val_set, &train_config(&cfg, seed))?;
            // Validation nRMSE in Wh/m2 through the full inverse transform,
            // teacher-forced on the true history.
            let fitted = FittedModel::Mlp(model);
            let start = val_range.start.max(warm);
            let (preds, _, _) =
                predict_whm2(&prep, &fitted, &cfg.mlp.pressure_channel, start, val_range.end)?;
            let measured = &val_measured[start - val_range.start..];
            per_seed.push(nrmse(measured, &preds)?);
        }
        let n = per_seed.len() as f64;
        let mean = per_seed.iter().sum::<f64>() / n;
        let ci95 = if per_seed.len() > 1 {
            let var = per_seed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        } else {
            0.0
        };
        rows.push((hidden, mean, ci95, per_seed));
    }

    std::fs::create_dir_all(out)?;
    let mut csv_text = String::from("hidden,mean_val_nrmse,ci95,seeds\n");
    let mut txt = format!(
        "{:<8} {:>14} {:>10}   (over {} seeds)\n",
        "Hidden",
        "Val nRMSE (%)",
        "CI95 (%)",
        cfg.sweep.seeds.len()
    );
    for (hidden, mean, ci95, per_seed) in &rows {
        let seeds_joined = per_seed
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(csv_text, "{hidden},{mean},{ci95},{seeds_joined}")?;
        writeln!(
            txt,
            "{:<8} {:>14.2} {:>10.2}",
            hidden,
            100.0 * mean,
            100.0 * ci95
        )?;
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("nonempty grid");
    writeln!(txt, "best: {} hidden neurons", best.0)?;
    std::fs::write(out.join("sweep.csv"), csv_text)?;
    std::fs::write(out.join("sweep.txt"), txt)?;
    println!("sweep: {} grid points -> {}", rows.len(), out.display());
    Ok(())
}
