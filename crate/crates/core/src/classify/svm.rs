use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_len, dot, labeled, FeatureTransform, Label, Prediction, Scaling};
use crate::features::FeatureVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Inverse regularization strength; the objective is
    /// `mean hinge + ||w||^2 / (2 C)`.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub scaling: Scaling,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 200,
            seed: 42,
            scaling: Scaling::LogStandardize,
        }
    }
}

/// Linear soft-margin SVM. Scores are `w . T(x) + b` where `T` is the fitted transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub transform: FeatureTransform,
    pub config: SvmConfig,
}

impl SvmModel {
    /// Model over untransformed features.
    pub fn linear(weights: Vec<f64>, bias: f64) -> Self {
        Self {
            weights,
            bias,
            transform: FeatureTransform::identity(),
            config: SvmConfig {
                scaling: Scaling::None,
                ..SvmConfig::default()
            },
        }
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), x)?;
        Ok(dot(&self.weights, &self.transform.apply(x)) + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let score = self.decision(x)?;
        Ok(Prediction {
            label: Label::from_score(score),
            score,
        })
    }
}

/// Pegasos-style stochastic subgradient descent on the primal objective.
///
/// Each epoch visits the samples in a seeded random order. The step at
/// iteration `t` is `1 / (lambda t)` with `lambda = 1 / C`; the weights are
/// projected onto the ball of radius `1 / sqrt(lambda)` after every step. The
/// bias is updated with the same step but not regularized.
pub fn train_svm(train: &[FeatureVector], config: &SvmConfig) -> Result<SvmModel> {
    if !(config.c > 0.0) || !config.c.is_finite() {
        return Err(Error::usage(format!(
            "SVM C must be positive, got {}",
            config.c
        )));
    }
    let data = labeled(train)?;
    let transform = FeatureTransform::fit(config.scaling, &data.xs);
    let xs: Vec<Vec<f64>> = data.xs.iter().map(|x| transform.apply(x)).collect();
    let ys: Vec<f64> = data.ys.iter().map(|l| l.sign()).collect();
    let dim = xs[0].len();

    let lambda = 1.0 / config.c;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * (dot(&w, &xs[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&xs[i]) {
                    *wj += eta * ys[i] * xj;
                }
                b += eta * ys[i];
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    Ok(SvmModel {
        weights: w,
        bias: b,
        transform,
        config: *config,
    })
}
