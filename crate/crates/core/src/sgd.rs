//! Linear regression trained by plain SGD on the epsilon-insensitive squared
//! loss `max(0, |y - p| - eps)^2`, with L1 applied through the cumulative
//! penalty method (Tsuruoka, Tsujii & Ananiadou 2009).
//!
//! The cumulative method keeps, for every weight, how much L1 shrinkage it has
//! actually received (`applied`) against the total it should have received
//! (`total`). On each touch the weight is pulled toward zero by the
//! difference and clipped at zero, which is what produces exact zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::rng;

/// One training or evaluation example: a feature vector and its target in months.
pub type Example = (SparseVector, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub max_epochs: usize,
    pub eta0: f64,
    pub power_t: f64,
    pub early_stop_patience: usize,
    pub early_stop_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epsilon: 0.1,
            alpha: 0.001,
            max_epochs: 2000,
            eta0: 0.01,
            power_t: 0.25,
            early_stop_patience: 5,
            early_stop_tol: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return fail("epsilon must be finite and >= 0");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be finite and >= 0");
        }
        if self.max_epochs < 1 {
            return fail("max_epochs must be >= 1");
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return fail("eta0 must be finite and > 0");
        }
        if !self.power_t.is_finite() {
            return fail("power_t must be finite");
        }
        if self.early_stop_patience < 1 {
            return fail("early_stop_patience must be >= 1");
        }
        if !(self.early_stop_tol >= 0.0 && self.early_stop_tol.is_finite()) {
            return fail("early_stop_tol must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub config: TrainConfig,
    pub epochs_run: usize,
    pub stopped_early: bool,
    /// Epoch whose weights were kept (1-based).
    pub best_epoch: usize,
}

impl LinearModel {
    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::NonFinite(format!("{what} = {v}"))),
        None => Ok(()),
    }
}

#[inline]
fn loss_unchecked(y: f64, p: f64, epsilon: f64) -> f64 {
    let excess = ((y - p).abs() - epsilon).max(0.0);
    excess * excess
}

#[inline]
fn gradient_unchecked(y: f64, p: f64, epsilon: f64) -> f64 {
    let r = p - y;
    let excess = r.abs() - epsilon;
    if excess <= 0.0 {
        0.0
    } else {
        2.0 * excess * r.signum()
    }
}

/// `max(0, |y - p| - epsilon)^2`.
pub fn loss(y: f64, p: f64, epsilon: f64) -> Result<f64> {
    check_finite("loss input", &[y, p, epsilon])?;
    Ok(loss_unchecked(y, p, epsilon))
}

/// Derivative of [`loss`] with respect to the prediction `p`.
pub fn loss_gradient(y: f64, p: f64, epsilon: f64) -> Result<f64> {
    check_finite("loss input", &[y, p, epsilon])?;
    Ok(gradient_unchecked(y, p, epsilon))
}

fn check_examples(set: &[Example], dim: usize) -> Result<()> {
    for (x, y) in set {
        if x.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.dimension(),
            });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("label {y}")));
        }
        if let Some((i, v)) = x.entries().iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {i} = {v}")));
        }
    }
    Ok(())
}

/// Mean absolute error of a raw weight vector over `set`.
fn mean_abs_error(weights: &[f64], intercept: f64, set: &[Example]) -> f64 {
    set.iter()
        .map(|(x, y)| (y - (x.dot(weights) + intercept)).abs())
        .sum::<f64>()
        / set.len() as f64
}

struct L1State {
    /// Total shrinkage every weight should have received so far.
    total: f64,
    /// Signed shrinkage actually applied to each weight.
    applied: Vec<f64>,
}

impl L1State {
    fn apply(&mut self, weights: &mut [f64], j: usize) {
        let w = weights[j];
        let shrunk = if w > 0.0 {
            (w - (self.total + self.applied[j])).max(0.0)
        } else if w < 0.0 {
            (w + (self.total - self.applied[j])).min(0.0)
        } else {
            return;
        };
        weights[j] = shrunk;
        self.applied[j] += shrunk - w;
    }
}

struct SgdState {
    weights: Vec<f64>,
    intercept: f64,
    l1: L1State,
    /// 1-based update counter driving the step size.
    t: u64,
}

impl SgdState {
    fn zeros(dim: usize) -> Self {
        SgdState {
            weights: vec![0.0; dim],
            intercept: 0.0,
            l1: L1State {
                total: 0.0,
                applied: vec![0.0; dim],
            },
            t: 1,
        }
    }

    /// One pass over `set` in the given order.
    fn epoch(&mut self, set: &[Example], order: &[usize], config: &TrainConfig) {
        for &i in order {
            let (x, y) = &set[i];
            let eta = config.eta0 / (self.t as f64).powf(config.power_t);
            let p = x.dot(&self.weights) + self.intercept;
            let g = gradient_unchecked(*y, p, config.epsilon);
            if g != 0.0 {
                for &(j, v) in x.entries() {
                    self.weights[j] -= eta * g * v;
                }
                self.intercept -= eta * g;
            }
            if config.alpha > 0.0 {
                self.l1.total += eta * config.alpha;
                for &(j, _) in x.entries() {
                    self.l1.apply(&mut self.weights, j);
                }
            }
            self.t += 1;
        }
    }

    fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Trains a model from zero weights with seeded per-epoch shuffling and
/// validation-MAE early stopping. The returned weights are those of the
/// epoch with the lowest validation MAE.
pub fn train(
    train_set: &[Example],
    val_set: &[Example],
    dim: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_examples(train_set, dim)?;
    check_examples(val_set, dim)?;

    let mut state = SgdState::zeros(dim);
    let mut rng = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best_mae = f64::INFINITY;
    let mut best = (state.weights.clone(), state.intercept, 0usize);
    let mut stale_epochs = 0;
    let mut epochs_run = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        rng::shuffle(&mut rng, &mut order);
        state.epoch(train_set, &order, config);
        epochs_run = epoch;
        if !state.is_finite() {
            return Err(Error::Diverged { epoch });
        }

        let val_mae = mean_abs_error(&state.weights, state.intercept, val_set);
        if val_mae > best_mae - config.early_stop_tol {
            stale_epochs += 1;
        } else {
            stale_epochs = 0;
        }
        if val_mae < best_mae {
            best_mae = val_mae;
            best = (state.weights.clone(), state.intercept, epoch);
        }
        if stale_epochs >= config.early_stop_patience {
            stopped_early = true;
            break;
        }
    }

    let (weights, intercept, best_epoch) = best;
    Ok(LinearModel {
        weights,
        intercept,
        config: *config,
        epochs_run,
        stopped_early,
        best_epoch,
    })
}

/// `w . x + b`, never clamped.
pub fn predict(model: &LinearModel, x: &SparseVector) -> Result<f64> {
    if x.dimension() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: x.dimension(),
        });
    }
    Ok(x.dot(&model.weights) + model.intercept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mae: f64,
    /// `f64::NEG_INFINITY` when the targets have zero variance and the
    /// residuals are not all zero; serialized as `"undefined"`.
    #[serde(with = "r_squared_serde")]
    pub r_squared: f64,
    pub n: usize,
}

impl EvalMetrics {
    pub fn r_squared_defined(&self) -> bool {
        self.r_squared.is_finite()
    }
}

mod r_squared_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("undefined")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "undefined" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad r_squared `{s}`"))),
        }
    }
}

/// MAE and R² from paired truths and predictions.
pub fn metrics(truth: &[f64], predicted: &[f64]) -> Result<EvalMetrics> {
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let mut abs = 0.0;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (y, p) in truth.iter().zip(predicted) {
        abs += (y - p).abs();
        ss_res += (y - p) * (y - p);
        ss_tot += (y - mean) * (y - mean);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(EvalMetrics {
        mae: abs / n,
        r_squared,
        n: truth.len(),
    })
}

pub fn evaluate(model: &LinearModel, data: &[Example]) -> Result<EvalMetrics> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = data
        .iter()
        .map(|(x, _)| predict(model, x))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<f64> = data.iter().map(|(_, y)| *y).collect();
    metrics(&truth, &predicted)
}
