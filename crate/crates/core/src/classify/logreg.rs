use super::{check_len, dot, labeled, FeatureTransform, Label, Prediction, Scaling};
use crate::features::FeatureVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Unused by full-batch descent; kept so every trainer records a seed.
    pub seed: u64,
    pub scaling: Scaling,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            learning_rate: 0.1,
            epochs: 500,
            seed: 42,
            scaling: Scaling::LogStandardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub transform: FeatureTransform,
    pub config: LogRegConfig,
}

impl LogRegModel {
    /// Probability that `x` is fake.
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), x)?;
        Ok(sigmoid(
            dot(&self.weights, &self.transform.apply(x)) + self.bias,
        ))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let p = self.probability(x)?;
        Ok(Prediction {
            label: if p > 0.5 { Label::Fake } else { Label::Real },
            score: p,
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// ln(1 + exp(z)) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2 / 2 * ||w||^2` (bias unpenalized).
/// `ys` are 0/1 targets.
pub fn logreg_objective(weights: &[f64], bias: f64, xs: &[Vec<f64>], ys: &[f64], l2: f64) -> f64 {
    let n = xs.len() as f64;
    let nll: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let z = dot(weights, x) + bias;
            softplus(z) - y * z
        })
        .sum();
    nll / n + 0.5 * l2 * dot(weights, weights)
}

/// Gradient of [`logreg_objective`] as `(d/dw, d/db)`.
pub fn logreg_gradient(
    weights: &[f64],
    bias: f64,
    xs: &[Vec<f64>],
    ys: &[f64],
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut gw: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let r = (sigmoid(dot(weights, x) + bias) - y) / n;
        for (g, xj) in gw.iter_mut().zip(x) {
            *g += r * xj;
        }
        gb += r;
    }
    (gw, gb)
}

/// Full-batch gradient descent from zero weights.
pub fn train_logreg(train: &[FeatureVector], config: &LogRegConfig) -> Result<LogRegModel> {
    if !(config.l2 >= 0.0) || !(config.learning_rate > 0.0) {
        return Err(Error::usage(
            "logistic regression needs l2 >= 0 and a positive learning rate",
        ));
    }
    let data = labeled(train)?;
    let transform = FeatureTransform::fit(config.scaling, &data.xs);
    let xs: Vec<Vec<f64>> = data.xs.iter().map(|x| transform.apply(x)).collect();
    let ys: Vec<f64> = data.ys.iter().map(|l| l.as_u8() as f64).collect();
    let mut w = vec![0.0; xs[0].len()];
    let mut b = 0.0;
    for _ in 0..config.epochs {
        let (gw, gb) = logreg_gradient(&w, b, &xs, &ys, config.l2);
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= config.learning_rate * g;
        }
        b -= config.learning_rate * gb;
    }
    Ok(LogRegModel {
        weights: w,
        bias: b,
        transform,
        config: *config,
    })
}
