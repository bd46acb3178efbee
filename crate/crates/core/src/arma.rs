//! AR/ARMA(p,q) fitting by the Yule-Walker method and deterministic
//! one-step-ahead forecasting in index space.
//!
//! The AR coefficients solve the p-by-p Toeplitz system built from the
//! sample autocorrelations of the mean-centered series. Moving-average
//! coefficients, when requested, come from the innovations algorithm run on
//! the Yule-Walker residuals. Order selection walks a (p, q) grid and keeps
//! the smallest Akaike Final Prediction Error.

use serde::{Deserialize, Serialize};

use crate::stats::acf;
use crate::{linalg, Error, Result};

/// A fitted ARMA(p,q) model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaModel {
    pub p: usize,
    pub q: usize,
    /// AR coefficients phi_1..phi_p.
    pub phi: Vec<f64>,
    /// MA coefficients theta_1..theta_q.
    pub theta: Vec<f64>,
    /// Mean of the fitted series, removed before fitting and restored at
    /// forecast time.
    pub mean: f64,
    /// Mean squared one-step residual over the fitted series.
    pub loss_function: f64,
    /// Akaike Final Prediction Error: loss * (n + k) / (n - k), k = p + q.
    pub akaike_fpe: f64,
}

/// Stationarity of the AR polynomial via the reflection coefficients of the
/// Levinson step-down recursion: all must be inside the unit interval.
fn is_stationary(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    for m in (1..=a.len()).rev() {
        let kappa = a[m - 1];
        if kappa.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (1..m)
            .map(|j| (a[j - 1] + kappa * a[m - 1 - j]) / denom)
            .collect();
        a = prev;
    }
    true
}

/// Innovations algorithm over the autocovariances `gamma[0..=m_max]`;
/// returns the order-`m_max` row of theta estimates.
fn innovations(gamma: &[f64], m_max: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; m_max + 1];
    let mut theta = vec![vec![0.0; m_max + 1]; m_max + 1];
    v[0] = gamma[0];
    if v[0] <= 0.0 {
        return Err(Error::SingularSystem);
    }
    for m in 1..=m_max {
        for k in 0..m {
            let mut acc = gamma[m - k];
            for j in 0..k {
                acc -= theta[k][k - j] * theta[m][m - j] * v[j];
            }
            if v[k].abs() < 1e-300 {
                return Err(Error::SingularSystem);
            }
            theta[m][m - k] = acc / v[k];
        }
        v[m] = gamma[0] - (0..m).map(|j| theta[m][m - j] * theta[m][m - j] * v[j]).sum::<f64>();
        if !v[m].is_finite() {
            return Err(Error::SingularSystem);
        }
    }
    Ok(theta[m_max].clone())
}

fn autocovariance(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|lag| {
            (lag..n)
                .map(|t| (series[t] - mean) * (series[t - lag] - mean))
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

/// One-step residuals of the full ARMA recursion over the centered series;
/// pre-sample residuals are taken as zero.
fn residuals(centered: &[f64], phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let p = phi.len();
    let mut eps = vec![0.0; centered.len()];
    for t in p..centered.len() {
        let mut pred = 0.0;
        for (i, &f) in phi.iter().enumerate() {
            pred += f * centered[t - 1 - i];
        }
        for (j, &g) in theta.iter().enumerate() {
            if t >= p + 1 + j {
                pred += g * eps[t - 1 - j];
            }
        }
        eps[t] = centered[t] - pred;
    }
    eps.drain(..p);
    eps
}

/// Fit an ARMA(p,q) by Yule-Walker (AR part) and, for q > 0, the innovations
/// algorithm on the Yule-Walker residuals.
pub fn fit_yule_walker(series: &[f64], p: usize, q: usize) -> Result<ArmaModel> {
    if p + q == 0 {
        return Err(Error::BadArchitecture {
            message: "ARMA needs p + q >= 1".into(),
        });
    }
    let n = series.len();
    if n < 10 * (p + q) || n < p + q + 2 {
        return Err(Error::InsufficientData {
            message: format!("series of length {n} too short for ARMA({p},{q})"),
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();

    let phi = if p > 0 {
        let rho = acf(series, p)?;
        let at = |i: usize| -> f64 {
            if i == 0 {
                1.0
            } else {
                rho[i - 1]
            }
        };
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        for i in 0..p {
            for j in 0..p {
                a[i * p + j] = at(i.abs_diff(j));
            }
            b[i] = at(i + 1);
        }
        linalg::solve(&mut a, &mut b).ok_or(Error::SingularSystem)?
    } else {
        // q-only model still needs a variance check
        if centered.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVariance);
        }
        Vec::new()
    };
    if !is_stationary(&phi) {
        return Err(Error::NonStationary);
    }

    let theta = if q > 0 {
        let ar_resid = residuals(&centered, &phi, &[]);
        let m_max = (ar_resid.len() / 2).min(50).max(q);
        let gamma = autocovariance(&ar_resid, m_max);
        let row = innovations(&gamma, m_max)?;
        row[1..=q].to_vec()
    } else {
        Vec::new()
    };

    let eps = residuals(&centered, &phi, &theta);
    let loss = eps.iter().map(|e| e * e).sum::<f64>() / eps.len() as f64;
    let k = (p + q) as f64;
    let fpe = loss * (n as f64 + k) / (n as f64 - k);
    Ok(ArmaModel {
        p,
        q,
        phi,
        theta,
        mean,
        loss_function: loss,
        akaike_fpe: fpe,
    })
}

impl ArmaModel {
    /// One-step-ahead forecast from recent history.
    ///
    /// `values` holds the most recent observations with the latest LAST;
    /// `residuals` likewise for the most recent one-step residuals.
    pub fn forecast_one_step(&self, values: &[f64], residuals: &[f64]) -> Result<f64> {
        if values.len() < self.p {
            return Err(Error::InsufficientHistory {
                need: self.p,
                have: values.len(),
            });
        }
        if residuals.len() < self.q {
            return Err(Error::InsufficientHistory {
                need: self.q,
                have: residuals.len(),
            });
        }
        let mut pred = self.mean;
        for (i, &f) in self.phi.iter().enumerate() {
            pred += f * (values[values.len() - 1 - i] - self.mean);
        }
        for (j, &g) in self.theta.iter().enumerate() {
            pred += g * residuals[residuals.len() - 1 - j];
        }
        Ok(pred)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ArmaRecord::from(self)).expect("arma model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: ArmaRecord = serde_json::from_str(text)?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                got: record.schema_version,
            });
        }
        Ok(Self {
            p: record.p,
            q: record.q,
            phi: record.phi,
            theta: record.theta,
            mean: record.mean,
            loss_function: record.loss_function,
            akaike_fpe: record.akaike_fpe,
        })
    }
}

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ArmaRecord {
    schema_version: u32,
    p: usize,
    q: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    mean: f64,
    loss_function: f64,
    akaike_fpe: f64,
}

impl From<&ArmaModel> for ArmaRecord {
    fn from(m: &ArmaModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            p: m.p,
            q: m.q,
            phi: m.phi.clone(),
            theta: m.theta.clone(),
            mean: m.mean,
            loss_function: m.loss_function,
            akaike_fpe: m.akaike_fpe,
        }
    }
}

/// Result of the FPE grid search.
#[derive(Debug, Clone)]
pub struct OrderSelection {
    pub model: ArmaModel,
    /// True when every residual autocorrelation up to lag 20 sits inside the
    /// 1.96/sqrt(n) whiteness band.
    pub residual_white: bool,
    /// Every fitted candidate as (p, q, FPE).
    pub candidates: Vec<(usize, usize, f64)>,
}

/// Default grid bounds for order selection.
pub const DEFAULT_P_MAX: usize = 5;
pub const DEFAULT_Q_MAX: usize = 2;

/// Grid search over (p, q) minimizing the Akaike FPE; falls back to (1,0)
/// when no other candidate fits.
pub fn select_order(series: &[f64], p_max: usize, q_max: usize) -> Result<OrderSelection> {
    let mut best: Option<ArmaModel> = None;
    let mut candidates = Vec::new();
    for p in 0..=p_max {
        for q in 0..=q_max {
            if p + q == 0 {
                continue;
            }
            let Ok(model) = fit_yule_walker(series, p, q) else {
                continue;
            };
            candidates.push((p, q, model.akaike_fpe));
            if best.as_ref().map_or(true, |b| model.akaike_fpe < b.akaike_fpe) {
                best = Some(model);
            }
        }
    }
    let model = match best {
        Some(m) => m,
        None => fit_yule_walker(series, 1, 0)?,
    };
    let residual_white = residual_whiteness(series, &model);
    Ok(OrderSelection {
        model,
        residual_white,
        candidates,
    })
}

/// Check the residual autocorrelogram against the 1.96/sqrt(n) band.
pub fn residual_whiteness(series: &[f64], model: &ArmaModel) -> bool {
    let centered: Vec<f64> = series.iter().map(|x| x - model.mean).collect();
    let eps = residuals(&centered, &model.phi, &model.theta);
    let max_lag = 20.min(eps.len().saturating_sub(2));
    if max_lag == 0 {
        return false;
    }
    match acf(&eps, max_lag) {
        Ok(rho) => {
            let bound = 1.96 / (eps.len() as f64).sqrt();
            rho.iter().all(|r| r.abs() < bound)
        }
        Err(_) => false,
    }
}

/// Streaming one-step forecaster: feed observations in time order and ask
/// for the next-hour forecast at any point.
#[derive(Debug, Clone)]
pub struct ArmaForecaster {
    model: ArmaModel,
    values: Vec<f64>,
    residuals: Vec<f64>,
}

impl ArmaForecaster {
    pub fn new(model: ArmaModel) -> Self {
        Self {
            model,
            values: Vec::new(),
            residuals: Vec::new(),
        }
    }

    pub fn model(&self) -> &ArmaModel {
        &self.model
    }

    /// Forecast for the hour after the last observed one.
    pub fn forecast(&self) -> Result<f64> {
        self.model.forecast_one_step(&self.values, &self.residuals)
    }

    /// Push the next observed value, updating the residual state.
    pub fn observe(&mut self, x: f64) {
        let residual = match self.forecast() {
            Ok(pred) => x - pred,
            Err(_) => 0.0, // warm-up convention
        };
        self.residuals.push(residual);
        self.values.push(x);
        let keep = self.model.p.max(self.model.q).max(1) + 1;
        if self.values.len() > 4 * keep {
            self.values.drain(..self.values.len() - keep);
            self.residuals.drain(..self.residuals.len() - keep);
        }
    }

    /// Feed a block of history without recording forecasts.
    pub fn prime(&mut self, history: &[f64]) {
        for &x in history {
            self.observe(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn arma_series(phis: &[f64], thetas: &[f64], n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let warm = 500;
        let mut x = vec![0.0; n + warm];
        let mut e = vec![0.0; n + warm];
        for t in 0..x.len() {
            e[t] = normal.sample(&mut rng);
            let mut v = e[t];
            for (i, &phi) in phis.iter().enumerate() {
                if t > i {
                    v += phi * x[t - 1 - i];
                }
            }
            for (j, &th) in thetas.iter().enumerate() {
                if t > j {
                    v += th * e[t - 1 - j];
                }
            }
            x[t] = v;
        }
        x.split_off(warm)
    }

    #[test]
    fn order_one_fit_equals_lag_one_autocorrelation() {
        let x = arma_series(&[0.4], &[], 500, 3);
        let model = fit_yule_walker(&x, 1, 0).unwrap();
        let rho1 = acf(&x, 1).unwrap()[0];
        assert!((model.phi[0] - rho1).abs() < 1e-12);
    }

    #[test]
    fn recovers_ar1_scenario_coefficient() {
        let x = arma_series(&[0.5435], &[], 100_000, 7);
        let model = fit_yule_walker(&x, 1, 0).unwrap();
        assert!((model.phi[0] - 0.5435).abs() < 0.01, "phi = {}", model.phi[0]);
        assert!(model.loss_function > 0.0);
        assert!(model.akaike_fpe > model.loss_function);
    }

    #[test]
    fn recovers_ar2_scenario_coefficients() {
        let x = arma_series(&[0.4176, 0.1350], &[], 100_000, 17);
        let model = fit_yule_walker(&x, 2, 0).unwrap();
        assert!((model.phi[0] - 0.4176).abs() < 0.02, "phi1 = {}", model.phi[0]);
        assert!((model.phi[1] - 0.1350).abs() < 0.02, "phi2 = {}", model.phi[1]);
    }

    #[test]
    fn recovers_ma1_coefficient_via_innovations() {
        let x = arma_series(&[], &[0.5], 100_000, 23);
        let model = fit_yule_walker(&x, 0, 1).unwrap();
        assert!((model.theta[0] - 0.5).abs() < 0.05, "theta = {}", model.theta[0]);
    }

    #[test]
    fn arma11_fit_is_finite_and_forecasts() {
        let x = arma_series(&[0.5], &[0.4], 50_000, 29);
        let model = fit_yule_walker(&x, 1, 1).unwrap();
        assert_eq!(model.theta.len(), 1);
        assert!(model.phi[0].is_finite() && model.theta[0].is_finite());
        let f = model.forecast_one_step(&[1.0], &[0.2]).unwrap();
        assert!(f.is_finite());
    }

    #[test]
    fn forecast_hand_cases() {
        let unit = ArmaModel {
            p: 1,
            q: 0,
            phi: vec![1.0],
            theta: vec![],
            mean: 0.0,
            loss_function: 0.0,
            akaike_fpe: 0.0,
        };
        assert_eq!(unit.forecast_one_step(&[0.7], &[]).unwrap(), 0.7);

        let fixed_point = ArmaModel {
            p: 1,
            q: 0,
            phi: vec![0.5],
            theta: vec![],
            mean: 1.0,
            loss_function: 0.0,
            akaike_fpe: 0.0,
        };
        assert_eq!(fixed_point.forecast_one_step(&[1.0], &[]).unwrap(), 1.0);

        let ar2 = ArmaModel {
            p: 2,
            q: 0,
            phi: vec![0.4176, 0.1350],
            theta: vec![],
            mean: 0.0,
            loss_function: 0.0,
            akaike_fpe: 0.0,
        };
        // x_t = 0.9, x_{t-1} = 0.8 (latest last in the slice)
        let f = ar2.forecast_one_step(&[0.8, 0.9], &[]).unwrap();
        assert!((f - 0.48384).abs() < 1e-12);
    }

    #[test]
    fn forecast_rejects_short_history() {
        let ar2 = ArmaModel {
            p: 2,
            q: 0,
            phi: vec![0.4, 0.1],
            theta: vec![],
            mean: 0.0,
            loss_function: 0.0,
            akaike_fpe: 0.0,
        };
        assert!(matches!(
            ar2.forecast_one_step(&[0.9], &[]),
            Err(Error::InsufficientHistory { need: 2, have: 1 })
        ));
    }

    #[test]
    fn selects_ar1_on_ar1_data() {
        let x = arma_series(&[0.5435], &[], 100_000, 41);
        let sel = select_order(&x, DEFAULT_P_MAX, DEFAULT_Q_MAX).unwrap();
        assert_eq!((sel.model.p, sel.model.q), (1, 0), "candidates: {:?}", sel.candidates);
    }

    #[test]
    fn selects_ar2_on_ar2_data() {
        let x = arma_series(&[0.4176, 0.1350], &[], 100_000, 43);
        let sel = select_order(&x, DEFAULT_P_MAX, DEFAULT_Q_MAX).unwrap();
        assert_eq!((sel.model.p, sel.model.q), (2, 0), "candidates: {:?}", sel.candidates);
    }

    #[test]
    fn white_noise_selects_minimal_model_with_tiny_phi() {
        let x = arma_series(&[], &[], 50_000, 47);
        let sel = select_order(&x, 3, 1).unwrap();
        assert!(sel.model.p + sel.model.q <= 2);
        for &phi in &sel.model.phi {
            assert!(phi.abs() < 0.02, "phi = {phi}");
        }
    }

    #[test]
    fn fpe_strictly_exceeds_loss_on_finite_samples() {
        let x = arma_series(&[0.6], &[], 5_000, 53);
        let model = fit_yule_walker(&x, 1, 0).unwrap();
        assert!(model.akaike_fpe > model.loss_function);
        let ratio = model.akaike_fpe / model.loss_function;
        assert!((ratio - (5000.0 + 1.0) / (5000.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn stationarity_check_flags_explosive_polynomials() {
        assert!(is_stationary(&[0.5]));
        assert!(is_stationary(&[0.4176, 0.1350]));
        assert!(!is_stationary(&[1.2]));
        assert!(!is_stationary(&[0.9, 0.2]));
    }

    #[test]
    fn rejects_short_or_constant_series() {
        assert!(matches!(
            fit_yule_walker(&[1.0, 2.0, 3.0], 1, 0),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            fit_yule_walker(&[5.0; 100], 1, 0),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn json_round_trip() {
        let x = arma_series(&[0.5, 0.2], &[], 5_000, 59);
        let model = fit_yule_walker(&x, 2, 0).unwrap();
        let restored = ArmaModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, restored);
        let bad = model.to_json().replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(
            ArmaModel::from_json(&bad),
            Err(Error::SchemaVersion { .. })
        ));
    }

    #[test]
    fn streaming_forecaster_matches_direct_evaluation() {
        let x = arma_series(&[0.6, -0.2], &[], 300, 61);
        let model = fit_yule_walker(&x, 2, 0).unwrap();
        let mut fc = ArmaForecaster::new(model.clone());
        fc.prime(&x[..100]);
        let direct = model.forecast_one_step(&x[..100], &[]).unwrap();
        assert!((fc.forecast().unwrap() - direct).abs() < 1e-12);
        // Observing keeps the state consistent sample by sample.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 100..140 {
            let _ = rng.gen_range(0..2);
            fc.observe(x[t]);
            let direct = model.forecast_one_step(&x[..=t], &[]).unwrap();
            assert!((fc.forecast().unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn whiteness_holds_for_correct_specification() {
        let x = arma_series(&[0.55, 0.2], &[], 20_000, 67);
        let model = fit_yule_walker(&x, 2, 0).unwrap();
        assert!(residual_whiteness(&x, &model));
        // An underspecified model leaves structure behind.
        let under = fit_yule_walker(&x, 1, 0).unwrap();
        assert!(!residual_whiteness(&x, &under));
    }
}
