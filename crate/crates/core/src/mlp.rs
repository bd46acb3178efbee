//! Single-hidden-layer perceptron with tanh hidden units and a linear
//! output, trained by Levenberg-Marquardt with validation-based early
//! stopping.
//!
//! The architecture follows the canonical form `(endo^e, N^n, P^ps, RP^pc) x
//! H x 1`: `e` lagged values of the stationarized radiation index, plus
//! optional lags of cloudiness (N), pressure (P) and precipitation (RP),
//! one hidden layer of `H` neurons, one output (the index at t+1). Inputs
//! are affinely mapped onto [-1, 1] from the training ranges; out-of-range
//! inference inputs extrapolate through the same map rather than clamping,
//! so clear-sky exceedances keep their meaning.
//!
//! Everything is deterministic: weights are seeded, training touches no
//! global state, and identical (seed, data, config) triples reproduce
//! bit-identical models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{linalg, Error, Result};

/// Network shape in the canonical form `(endo^e, N^n, P^ps, RP^pc) x H x 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub endo_lags: usize,
    pub cloud_lags: usize,
    pub pressure_lags: usize,
    pub precip_lags: usize,
    pub hidden: usize,
}

impl MlpArchitecture {
    pub fn new(
        endo_lags: usize,
        cloud_lags: usize,
        pressure_lags: usize,
        precip_lags: usize,
        hidden: usize,
    ) -> Result<Self> {
        let arch = Self { endo_lags, cloud_lags, pressure_lags, precip_lags, hidden };
        if endo_lags == 0 {
            return Err(Error::BadArchitecture {
                message: "need at least one endogenous lag".into(),
            });
        }
        if hidden == 0 {
            return Err(Error::BadArchitecture {
                message: "need at least one hidden neuron".into(),
            });
        }
        Ok(arch)
    }

    /// Endogenous-only shape.
    pub fn endogenous(endo_lags: usize, hidden: usize) -> Result<Self> {
        Self::new(endo_lags, 0, 0, 0, hidden)
    }

    pub fn input_count(&self) -> usize {
        self.endo_lags + self.cloud_lags + self.pressure_lags + self.precip_lags
    }

    pub fn weight_count(&self) -> usize {
        let inputs = self.input_count();
        self.hidden * inputs + self.hidden + self.hidden + 1
    }

    /// Canonical textual form, e.g. `(endo^10,N^2,P^1,RP^1)x15x1`.
    /// Channels with zero lags are omitted.
    pub fn canonical_form(&self) -> String {
        let mut parts = vec![format!("endo^{}", self.endo_lags)];
        for (tag, lags) in [("N", self.cloud_lags), ("P", self.pressure_lags), ("RP", self.precip_lags)] {
            if lags > 0 {
                parts.push(format!("{tag}^{lags}"));
            }
        }
        format!("({})x{}x1", parts.join(","), self.hidden)
    }

    /// Parse the canonical form; inverse of [`Self::canonical_form`].
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |message: String| Error::BadArchitecture { message };
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let open = s.find('(').ok_or_else(|| bad(format!("missing '(' in '{text}'")))?;
        let close = s.find(')').ok_or_else(|| bad(format!("missing ')' in '{text}'")))?;
        let mut endo = 0;
        let mut cloud = 0;
        let mut pressure = 0;
        let mut precip = 0;
        for part in s[open + 1..close].split(',') {
            let (tag, count) = part
                .split_once('^')
                .ok_or_else(|| bad(format!("bad input group '{part}'")))?;
            let count: usize = count
                .parse()
                .map_err(|_| bad(format!("bad lag count in '{part}'")))?;
            match tag {
                "endo" => endo = count,
                "N" => cloud = count,
                "P" => pressure = count,
                "RP" => precip = count,
                other => return Err(bad(format!("unknown input group '{other}'"))),
            }
        }
        let tail = &s[close + 1..];
        let mut dims = tail.split('x').filter(|p| !p.is_empty());
        let hidden: usize = dims
            .next()
            .ok_or_else(|| bad(format!("missing hidden count in '{text}'")))?
            .parse()
            .map_err(|_| bad(format!("bad hidden count in '{text}'")))?;
        let output: usize = dims
            .next()
            .ok_or_else(|| bad(format!("missing output count in '{text}'")))?
            .parse()
            .map_err(|_| bad(format!("bad output count in '{text}'")))?;
        if output != 1 {
            return Err(bad(format!("output layer must have 1 neuron, got {output}")));
        }
        Self::new(endo, cloud, pressure, precip, hidden)
    }
}

/// Per-input affine maps sending the training min/max onto -1/+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNormalization {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl InputNormalization {
    pub fn fit(inputs: &[Vec<f64>]) -> Result<Self> {
        let width = inputs.first().map_or(0, |r| r.len());
        let mut mins = vec![f64::INFINITY; width];
        let mut maxs = vec![f64::NEG_INFINITY; width];
        for row in inputs {
            for (i, &v) in row.iter().enumerate() {
                mins[i] = mins[i].min(v);
                maxs[i] = maxs[i].max(v);
            }
        }
        for i in 0..width {
            if !(maxs[i] > mins[i]) {
                return Err(Error::ConstantColumn { index: i });
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn apply(&self, raw: &[f64], out: &mut [f64]) {
        for i in 0..raw.len() {
            out[i] = -1.0 + 2.0 * (raw[i] - self.mins[i]) / (self.maxs[i] - self.mins[i]);
        }
    }
}

/// Training batch: raw (unnormalized) input rows plus targets.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Keep only the rows where `keep` is true.
    pub fn filter(&self, keep: &[bool]) -> Self {
        let mut out = Dataset::default();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                out.inputs.push(self.inputs[i].clone());
                out.targets.push(self.targets[i]);
            }
        }
        out
    }
}

/// Exogenous channels aligned sample-for-sample with the stationarized
/// series, in canonical order (N, P, RP).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExoChannels<'a> {
    pub cloudiness: Option<&'a [f64]>,
    pub pressure: Option<&'a [f64]>,
    pub precipitation: Option<&'a [f64]>,
}

impl<'a> ExoChannels<'a> {
    /// The channel/lag pairs an architecture needs, validating presence and
    /// alignment.
    pub fn for_arch(
        &self,
        arch: &MlpArchitecture,
        series_len: usize,
    ) -> Result<Vec<(&'a [f64], usize)>> {
        let mut out = Vec::new();
        for (name, channel, lags) in [
            ("cloudiness", self.cloudiness, arch.cloud_lags),
            ("pressure", self.pressure, arch.pressure_lags),
            ("precipitation", self.precipitation, arch.precip_lags),
        ] {
            if lags == 0 {
                continue;
            }
            let values = channel.ok_or_else(|| Error::BadArchitecture {
                message: format!("architecture needs the {name} channel, which is absent"),
            })?;
            if values.len() != series_len {
                return Err(Error::LengthMismatch { left: series_len, right: values.len() });
            }
            out.push((values, lags));
        }
        Ok(out)
    }
}

/// Lagged design matrix for one-step-ahead forecasting.
///
/// Row for target position `t` holds `endo[t-1] .. endo[t-e]` followed, per
/// exogenous channel, by `c[t-1] .. c[t-lags]`, matching the canonical input
/// ordering (endo, N, P, RP). Returns the dataset and the target positions.
pub fn build_dataset(
    endo: &[f64],
    channels: &[(&[f64], usize)],
    endo_lags: usize,
) -> Result<(Dataset, Vec<usize>)> {
    if endo_lags == 0 {
        return Err(Error::BadArchitecture {
            message: "need at least one endogenous lag".into(),
        });
    }
    for (values, _) in channels {
        if values.len() != endo.len() {
            return Err(Error::LengthMismatch { left: endo.len(), right: values.len() });
        }
    }
    let warm = endo_lags.max(channels.iter().map(|(_, l)| *l).max().unwrap_or(0));
    let mut data = Dataset::default();
    let mut positions = Vec::new();
    for t in warm..endo.len() {
        let mut row = Vec::with_capacity(endo_lags + channels.iter().map(|(_, l)| l).sum::<usize>());
        for lag in 1..=endo_lags {
            row.push(endo[t - lag]);
        }
        for (values, lags) in channels {
            for lag in 1..=*lags {
                row.push(values[t - lag]);
            }
        }
        data.inputs.push(row);
        data.targets.push(endo[t]);
        positions.push(t);
    }
    Ok((data, positions))
}

/// Levenberg-Marquardt training configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Consecutive validation failures tolerated before stopping.
    pub max_fail: usize,
    /// Damping multiplier after an accepted step.
    pub mu_decrease: f64,
    /// Damping multiplier after a rejected step.
    pub mu_increase: f64,
    /// Initial damping.
    pub mu_init: f64,
    /// Damping ceiling; training stops when no step is accepted below it.
    pub mu_max: f64,
    /// Target training MSE.
    pub goal: f64,
    pub max_epochs: usize,
    /// Seed for weight initialization in [`train_new`].
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_fail: 5,
            mu_decrease: 0.1,
            mu_increase: 10.0,
            mu_init: 1e-3,
            mu_max: 1e10,
            goal: 0.0,
            max_epochs: 1000,
            rng_seed: 0,
        }
    }
}

/// Per-epoch record of the training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

/// A (possibly trained) perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub architecture: MlpArchitecture,
    /// Hidden weights, row-major `hidden x inputs`.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    pub normalization: Option<InputNormalization>,
    pub training_log: Vec<EpochStats>,
}

/// Deterministically initialize a network: uniform [-0.5, 0.5] scaled by
/// 1/sqrt(fan-in).
pub fn build(architecture: MlpArchitecture, seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = architecture.input_count();
    let hidden = architecture.hidden;
    let scale_in = 1.0 / (inputs as f64).sqrt();
    let scale_h = 1.0 / (hidden as f64).sqrt();
    let draw = |scale: f64, rng: &mut ChaCha8Rng| rng.gen_range(-0.5..0.5) * scale;
    let w1: Vec<f64> = (0..hidden * inputs).map(|_| draw(scale_in, &mut rng)).collect();
    let b1: Vec<f64> = (0..hidden).map(|_| draw(scale_in, &mut rng)).collect();
    let w2: Vec<f64> = (0..hidden).map(|_| draw(scale_h, &mut rng)).collect();
    let b2 = draw(scale_h, &mut rng);
    MlpModel {
        architecture,
        w1,
        b1,
        w2,
        b2,
        normalization: None,
        training_log: Vec::new(),
    }
}

impl MlpModel {
    /// Fit the input normalization maps from training data.
    pub fn normalize_inputs(&mut self, data: &Dataset) -> Result<()> {
        for row in &data.inputs {
            if row.len() != self.architecture.input_count() {
                return Err(Error::ArityMismatch {
                    expected: self.architecture.input_count(),
                    got: row.len(),
                });
            }
        }
        self.normalization = Some(InputNormalization::fit(&data.inputs)?);
        Ok(())
    }

    /// Forward pass on an already normalized input.
    fn forward_normalized(&self, u: &[f64]) -> f64 {
        let inputs = self.architecture.input_count();
        let mut y = self.b2;
        for h in 0..self.architecture.hidden {
            let mut z = self.b1[h];
            let row = &self.w1[h * inputs..(h + 1) * inputs];
            for (w, &x) in row.iter().zip(u) {
                z += w * x;
            }
            y += self.w2[h] * z.tanh();
        }
        y
    }

    /// Deterministic one-step forecast from raw lagged inputs.
    pub fn forecast_one_step(&self, raw: &[f64]) -> Result<f64> {
        let expected = self.architecture.input_count();
        if raw.len() != expected {
            return Err(Error::ArityMismatch { expected, got: raw.len() });
        }
        let mut u = vec![0.0; raw.len()];
        match &self.normalization {
            Some(norm) => norm.apply(raw, &mut u),
            None => u.copy_from_slice(raw),
        }
        Ok(self.forward_normalized(&u))
    }

    /// Flattened weight vector, ordered [w1 row-major, b1, w2, b2].
    pub fn weights(&self) -> Vec<f64> {
        self.pack()
    }

    /// Replace every weight from a flattened vector (see [`Self::weights`]).
    pub fn set_weights(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.architecture.weight_count() {
            return Err(Error::ArityMismatch {
                expected: self.architecture.weight_count(),
                got: w.len(),
            });
        }
        self.unpack(w);
        Ok(())
    }

    fn pack(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.architecture.weight_count());
        w.extend_from_slice(&self.w1);
        w.extend_from_slice(&self.b1);
        w.extend_from_slice(&self.w2);
        w.push(self.b2);
        w
    }

    fn unpack(&mut self, w: &[f64]) {
        let inputs = self.architecture.input_count();
        let hidden = self.architecture.hidden;
        let (w1, rest) = w.split_at(hidden * inputs);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, rest) = rest.split_at(hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    /// Analytic Jacobian of the per-sample errors (output minus target)
    /// with respect to every weight, ordered as [w1 row-major, b1, w2, b2].
    /// Returns (jacobian rows, errors).
    pub fn jacobian(&self, batch: &[Vec<f64>], targets: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let inputs = self.architecture.input_count();
        let hidden = self.architecture.hidden;
        let n_w = self.architecture.weight_count();
        let mut rows = Vec::with_capacity(batch.len());
        let mut errors = Vec::with_capacity(batch.len());
        for (u, &t) in batch.iter().zip(targets) {
            let mut row = vec![0.0; n_w];
            let mut y = self.b2;
            for h in 0..hidden {
                let mut z = self.b1[h];
                let wrow = &self.w1[h * inputs..(h + 1) * inputs];
                for (w, &x) in wrow.iter().zip(u.iter()) {
                    z += w * x;
                }
                let a = z.tanh();
                y += self.w2[h] * a;
                let gain = self.w2[h] * (1.0 - a * a);
                for (i, &x) in u.iter().enumerate() {
                    row[h * inputs + i] = gain * x;
                }
                row[hidden * inputs + h] = gain; // b1
                row[hidden * inputs + hidden + h] = a; // w2
            }
            row[n_w - 1] = 1.0; // b2
            rows.push(row);
            errors.push(y - t);
        }
        (rows, errors)
    }

    fn mse_normalized(&self, batch: &[Vec<f64>], targets: &[f64]) -> f64 {
        let n = targets.len().max(1);
        batch
            .iter()
            .zip(targets)
            .map(|(u, &t)| {
                let e = self.forward_normalized(u) - t;
                e * e
            })
            .sum::<f64>()
            / n as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MlpRecord::from(self)).expect("mlp model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: MlpRecord = serde_json::from_str(text)?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                got: record.schema_version,
            });
        }
        let architecture = MlpArchitecture::parse(&record.canonical_form)?;
        let inputs = architecture.input_count();
        if record.w1.len() != architecture.hidden * inputs
            || record.b1.len() != architecture.hidden
            || record.w2.len() != architecture.hidden
        {
            return Err(Error::BadArchitecture {
                message: "weight arrays do not match the canonical form".into(),
            });
        }
        Ok(Self {
            architecture,
            w1: record.w1,
            b1: record.b1,
            w2: record.w2,
            b2: record.b2,
            normalization: record.normalization,
            training_log: record.training_log,
        })
    }
}

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MlpRecord {
    schema_version: u32,
    canonical_form: String,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    normalization: Option<InputNormalization>,
    training_log: Vec<EpochStats>,
}

impl From<&MlpModel> for MlpRecord {
    fn from(m: &MlpModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            canonical_form: m.architecture.canonical_form(),
            w1: m.w1.clone(),
            b1: m.b1.clone(),
            w2: m.w2.clone(),
            b2: m.b2,
            normalization: m.normalization.clone(),
            training_log: m.training_log.clone(),
        }
    }
}

/// Build a fresh network from `cfg.rng_seed` and train it.
pub fn train_new(
    architecture: MlpArchitecture,
    train: &Dataset,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<MlpModel> {
    let model = build(architecture, cfg.rng_seed);
    train_lm(model, train, validation, cfg)
}

/// Levenberg-Marquardt training with validation early stopping.
///
/// One epoch is one accepted damped Gauss-Newton step. Training stops at
/// `max_epochs`, when the training MSE reaches `goal`, when `max_fail`
/// consecutive epochs fail to improve the best validation error, or when the
/// damping exceeds `mu_max` without an acceptable step. The returned model
/// carries the weights of the best-validation epoch and the full epoch log.
pub fn train_lm(
    mut model: MlpModel,
    train: &Dataset,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<MlpModel> {
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InsufficientData {
            message: "training and validation sets must be nonempty".into(),
        });
    }
    if model.normalization.is_none() {
        model.normalize_inputs(train)?;
    }
    let norm = model.normalization.clone().expect("normalization fitted above");
    let prep = |data: &Dataset| -> Vec<Vec<f64>> {
        data.inputs
            .iter()
            .map(|raw| {
                let mut u = vec![0.0; raw.len()];
                norm.apply(raw, &mut u);
                u
            })
            .collect()
    };
    let train_in = prep(train);
    let val_in = prep(validation);

    let n_w = model.architecture.weight_count();
    let mut mu = cfg.mu_init;

    let mut train_mse = model.mse_normalized(&train_in, &train.targets);
    let mut val_mse = model.mse_normalized(&val_in, &validation.targets);
    if !train_mse.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    model.training_log.clear();
    model.training_log.push(EpochStats { epoch: 0, train_mse, validation_mse: val_mse });

    let mut best_weights = model.pack();
    let mut best_val = val_mse;
    let mut fails = 0usize;

    if train_mse <= cfg.goal {
        return Ok(model);
    }

    for epoch in 1..=cfg.max_epochs {
        let (jac, errors) = model.jacobian(&train_in, &train.targets);
        // Normal equations J^T J + mu I and gradient J^T e.
        let mut jtj = vec![0.0; n_w * n_w];
        let mut jte = vec![0.0; n_w];
        for (row, &e) in jac.iter().zip(&errors) {
            for i in 0..n_w {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                jte[i] += ri * e;
                let base = i * n_w;
                for j in i..n_w {
                    jtj[base + j] += ri * row[j];
                }
            }
        }
        for i in 0..n_w {
            for j in 0..i {
                jtj[i * n_w + j] = jtj[j * n_w + i];
            }
        }

        let sse: f64 = errors.iter().map(|e| e * e).sum();
        let current = model.pack();
        let mut accepted = false;
        while mu <= cfg.mu_max {
            let mut a = jtj.clone();
            for i in 0..n_w {
                a[i * n_w + i] += mu;
            }
            let mut rhs: Vec<f64> = jte.iter().map(|g| -g).collect();
            if let Some(step) = linalg::solve(&mut a, &mut rhs) {
                let trial: Vec<f64> = current.iter().zip(&step).map(|(w, d)| w + d).collect();
                model.unpack(&trial);
                let trial_sse: f64 = train_in
                    .iter()
                    .zip(&train.targets)
                    .map(|(u, &t)| {
                        let e = model.forward_normalized(u) - t;
                        e * e
                    })
                    .sum();
                if trial_sse.is_finite() && trial_sse < sse {
                    mu = (mu * cfg.mu_decrease).max(1e-20);
                    accepted = true;
                    break;
                }
                model.unpack(&current);
            }
            mu *= cfg.mu_increase;
        }
        if !accepted {
            break; // no descent direction left at any damping
        }

        train_mse = model.mse_normalized(&train_in, &train.targets);
        val_mse = model.mse_normalized(&val_in, &validation.targets);
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        model.training_log.push(EpochStats { epoch, train_mse, validation_mse: val_mse });

        if val_mse < best_val {
            best_val = val_mse;
            best_weights = model.pack();
            fails = 0;
        } else {
            fails += 1;
            if fails >= cfg.max_fail {
                break;
            }
        }
        if train_mse <= cfg.goal {
            break;
        }
    }

    model.unpack(&best_weights);
    Ok(model)
}
