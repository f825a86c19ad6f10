use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Profile values below this are treated as this value before taking logs.
pub const LOG_FLOOR: f64 = 1e-8;

/// Input scaling a detector applies to raw feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    None,
    /// `ln(max(x, 1e-8))` per component.
    Log,
    /// Zero mean, unit variance per component, statistics from the training set.
    Standardize,
    /// `Log` followed by `Standardize`.
    LogStandardize,
}

impl Scaling {
    fn uses_log(self) -> bool {
        matches!(self, Scaling::Log | Scaling::LogStandardize)
    }

    fn uses_stats(self) -> bool {
        matches!(self, Scaling::Standardize | Scaling::LogStandardize)
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::None => "none",
            Scaling::Log => "log",
            Scaling::Standardize => "standardize",
            Scaling::LogStandardize => "log_standardize",
        })
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Scaling::None),
            "log" => Ok(Scaling::Log),
            "standardize" => Ok(Scaling::Standardize),
            "log_standardize" => Ok(Scaling::LogStandardize),
            other => Err(Error::usage(format!("unknown scaling {other:?}"))),
        }
    }
}

/// A fitted [`Scaling`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform {
    pub scaling: Scaling,
    /// Per-component shift (empty unless the scaling standardizes).
    pub mean: Vec<f64>,
    /// Per-component divisor (empty unless the scaling standardizes).
    pub scale: Vec<f64>,
}

impl FeatureTransform {
    pub fn identity() -> Self {
        Self {
            scaling: Scaling::None,
            mean: Vec::new(),
            scale: Vec::new(),
        }
    }

    pub fn fit(scaling: Scaling, xs: &[&[f64]]) -> Self {
        let mut t = Self {
            scaling,
            mean: Vec::new(),
            scale: Vec::new(),
        };
        if !scaling.uses_stats() || xs.is_empty() {
            return t;
        }
        let dim = xs[0].len();
        let n = xs.len() as f64;
        let logged: Vec<Vec<f64>> = xs.iter().map(|x| t.pre(x)).collect();
        let mut mean = vec![0.0; dim];
        for x in &logged {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for x in &logged {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        t.scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        t.mean = mean;
        t
    }

    fn pre(&self, x: &[f64]) -> Vec<f64> {
        if self.scaling.uses_log() {
            x.iter().map(|v| v.max(LOG_FLOOR).ln()).collect()
        } else {
            x.to_vec()
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.pre(x);
        if self.scaling.uses_stats() && self.mean.len() == out.len() {
            for ((v, m), s) in out.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}
