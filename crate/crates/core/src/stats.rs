//! Correlation machinery: autocorrelation, partial autocorrelation via the
//! Durbin-Levinson recursion, Pearson cross-correlation, and the lag
//! selection rules that feed the AR identification and the network inputs.

use crate::{Error, Result};

/// Sample autocorrelations for lags `1..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag == 0 || n <= max_lag {
        return Err(Error::InsufficientData {
            message: format!("series of length {n} cannot support lag {max_lag}"),
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut rho = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let num: f64 = (lag..n)
            .map(|t| (series[t] - mean) * (series[t - lag] - mean))
            .sum();
        rho.push(num / denom);
    }
    Ok(rho)
}

/// Partial autocorrelations from the autocorrelation sequence, computed with
/// the Durbin-Levinson recursion. `acf_values[0]` is the lag-1 value.
pub fn pacf(acf_values: &[f64]) -> Result<Vec<f64>> {
    let k = acf_values.len();
    if k == 0 {
        return Err(Error::InsufficientData {
            message: "empty autocorrelation vector".into(),
        });
    }
    let rho = |i: usize| acf_values[i - 1]; // 1-based lags
    let mut prev = vec![rho(1)];
    let mut diag = vec![rho(1)];
    for i in 2..=k {
        let num = rho(i) - (1..i).map(|j| prev[j - 1] * rho(i - j)).sum::<f64>();
        let den = 1.0 - (1..i).map(|j| prev[j - 1] * rho(j)).sum::<f64>();
        if den.abs() < 1e-12 {
            return Err(Error::SingularRecursion { lag: i });
        }
        let phi_ii = num / den;
        let mut next = vec![0.0; i];
        for j in 1..i {
            next[j - 1] = prev[j - 1] - phi_ii * prev[i - j - 1];
        }
        next[i - 1] = phi_ii;
        diag.push(phi_ii);
        prev = next;
    }
    Ok(diag)
}

/// Pearson correlation coefficient between two equally long series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            message: "need at least 2 samples for a correlation".into(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// ACF/PACF profile of a series plus the significance bound of the T-test.
#[derive(Debug, Clone)]
pub struct CorrelationProfile {
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub sample_size: usize,
    /// Two-sided significance bound; defaults to 1.96 / sqrt(n).
    pub significance_bound: f64,
}

impl CorrelationProfile {
    pub fn compute(series: &[f64], max_lag: usize) -> Result<Self> {
        let acf = acf(series, max_lag)?;
        let pacf = pacf(&acf)?;
        Ok(Self {
            sample_size: series.len(),
            significance_bound: 1.96 / (series.len() as f64).sqrt(),
            acf,
            pacf,
        })
    }

    pub fn with_significance_bound(mut self, bound: f64) -> Self {
        self.significance_bound = bound;
        self
    }

    /// Correlogram as CSV (lag, acf, pacf, significance bound), plot-ready.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,acf,pacf,significance_bound\n");
        for (i, (a, p)) in self.acf.iter().zip(&self.pacf).enumerate() {
            out.push_str(&format!("{},{a},{p},{}\n", i + 1, self.significance_bound));
        }
        out
    }
}

/// Default cap on the number of endogenous lags.
pub const DEFAULT_LAG_CAP: usize = 10;

/// Lags (1-based) whose autocorrelation clears the significance bound,
/// capped at `cap`. An empty selection is an error: the series carries no
/// usable memory.
pub fn select_endogenous_lags(profile: &CorrelationProfile, cap: usize) -> Result<Vec<usize>> {
    let lags: Vec<usize> = profile
        .acf
        .iter()
        .enumerate()
        .take(cap)
        .filter(|(_, rho)| rho.abs() > profile.significance_bound)
        .map(|(i, _)| i + 1)
        .collect();
    if lags.is_empty() {
        return Err(Error::NoSignificantLags);
    }
    Ok(lags)
}

/// One candidate exogenous channel with its Pearson threshold.
#[derive(Debug, Clone)]
pub struct ChannelSpec<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
    pub threshold: f64,
}

/// Default Pearson threshold for the cloudiness channel.
pub const CLOUDINESS_THRESHOLD: f64 = 0.50;
/// Default Pearson threshold for pressure and precipitation channels.
pub const OTHER_THRESHOLD: f64 = 0.15;

/// Retained lag count per exogenous channel: lags 0, 1, ... are kept while
/// |R| stays at or above the channel threshold (a contiguous prefix). A
/// channel may end up with zero lags, which simply drops it.
pub fn select_exogenous_lags(
    radiation: &[f64],
    channels: &[ChannelSpec<'_>],
    max_lags: usize,
) -> Result<Vec<(String, usize)>> {
    let n = radiation.len();
    let mut out = Vec::with_capacity(channels.len());
    for spec in channels {
        if spec.values.len() != n {
            return Err(Error::LengthMismatch { left: n, right: spec.values.len() });
        }
        let mut count = 0usize;
        for lag in 0..max_lags {
            if n <= lag + 2 {
                break;
            }
            let r = match pearson(&radiation[lag..], &spec.values[..n - lag]) {
                Ok(r) => r,
                Err(Error::ZeroVariance) => break,
                Err(e) => return Err(e),
            };
            if r.abs() >= spec.threshold {
                count += 1;
            } else {
                break;
            }
        }
        out.push((spec.name.to_string(), count));
    }
    Ok(out)
}
