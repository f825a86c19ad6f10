//! Versioned plain-text model files.
//!
//! ```text
//! specscope-model 1
//! model_kind svm
//! feature_len 300
//! scaling log_standardize
//! transform_mean <feature_len values>
//! transform_scale <feature_len values>
//! weights <feature_len values>
//! bias <value>
//! c 1.0000000000000000e0
//! epochs 200
//! seed 42
//! meta.split_seed 42
//! ```
//!
//! One `key value...` pair per line. Reals use 17 significant digits so the
//! file reproduces every parameter bit for bit. `meta.*` lines carry free-form
//! strings for the caller.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{
    FeatureTransform, KMeansConfig, KMeansModel, Label, LogRegConfig, LogRegModel, Model, Scaling,
    SvmConfig, SvmModel,
};
use crate::{Error, Result};

const MAGIC: &str = "specscope-model";
const VERSION: u32 = 1;

/// A model plus caller metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub meta: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(model: impl Into<Model>) -> Self {
        Self {
            model: model.into(),
            meta: BTreeMap::new(),
        }
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")
}

pub fn write_model_string(file: &ModelFile) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k} {v}");
    };
    line(MAGIC, VERSION.to_string());
    line("model_kind", file.model.kind().to_string());
    line("feature_len", file.model.feature_len().to_string());
    let transform = match &file.model {
        Model::Svm(m) => &m.transform,
        Model::LogReg(m) => &m.transform,
        Model::KMeans(m) => &m.transform,
    };
    line("scaling", transform.scaling.to_string());
    line("transform_mean", fmt_vec(&transform.mean));
    line("transform_scale", fmt_vec(&transform.scale));
    match &file.model {
        Model::Svm(m) => {
            line("weights", fmt_vec(&m.weights));
            line("bias", fmt_f64(m.bias));
            line("c", fmt_f64(m.config.c));
            line("epochs", m.config.epochs.to_string());
            line("seed", m.config.seed.to_string());
        }
        Model::LogReg(m) => {
            line("weights", fmt_vec(&m.weights));
            line("bias", fmt_f64(m.bias));
            line("l2", fmt_f64(m.config.l2));
            line("learning_rate", fmt_f64(m.config.learning_rate));
            line("epochs", m.config.epochs.to_string());
            line("seed", m.config.seed.to_string());
        }
        Model::KMeans(m) => {
            line("centroid_0", fmt_vec(&m.centroids[0]));
            line("centroid_1", fmt_vec(&m.centroids[1]));
            line(
                "cluster_to_label",
                format!("{} {}", m.cluster_to_label[0], m.cluster_to_label[1]),
            );
            line("inertia", fmt_f64(m.inertia));
            line("max_iter", m.config.max_iter.to_string());
            line("n_init", m.config.n_init.to_string());
            line("seed", m.config.seed.to_string());
        }
    }
    for (k, v) in &file.meta {
        line(&format!("meta.{k}"), v.clone());
    }
    out
}

/// Writes atomically (temporary file, then rename).
pub fn write_model(file: &ModelFile, path: &Path) -> Result<()> {
    crate::ingest::write_atomic(path, write_model_string(file).as_bytes())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

pub fn read_model_str(text: &str) -> Result<ModelFile> {
    parse(text, Path::new("<model>"))
}

struct Fields<'a> {
    path: &'a Path,
    map: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Fields<'a> {
    fn err(&self, line: usize, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: PathBuf::from(self.path),
            line,
            reason: reason.into(),
        }
    }

    fn raw(&self, key: &str) -> Result<(usize, &'a str)> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| self.err(0, format!("missing key {key:?}")))
    }

    fn scalar<T: FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.raw(key)?;
        v.trim()
            .parse()
            .map_err(|_| self.err(line, format!("bad value for {key}: {v:?}")))
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(line, format!("bad number {t:?} in {key}")))
            })
            .collect()
    }

    fn vector_of_len(&self, key: &str, len: usize) -> Result<Vec<f64>> {
        let v = self.vector(key)?;
        if v.len() != len {
            let (line, _) = self.raw(key)?;
            return Err(self.err(
                line,
                format!("{key} has {} values, expected {len}", v.len()),
            ));
        }
        Ok(v)
    }
}

fn parse(text: &str, path: &Path) -> Result<ModelFile> {
    let mut fields = Fields {
        path,
        map: BTreeMap::new(),
    };
    let mut meta = BTreeMap::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(' ').unwrap_or((line, ""));
        if !saw_header {
            if key != MAGIC {
                return Err(fields.err(lineno, "not a specscope model file"));
            }
            if value.trim() != VERSION.to_string() {
                return Err(fields.err(lineno, format!("unsupported version {value:?}")));
            }
            saw_header = true;
            continue;
        }
        if let Some(k) = key.strip_prefix("meta.") {
            meta.insert(k.to_string(), value.to_string());
        } else if fields.map.insert(key, (lineno, value)).is_some() {
            return Err(fields.err(lineno, format!("duplicate key {key:?}")));
        }
    }
    if !saw_header {
        return Err(fields.err(1, "empty model file"));
    }

    let feature_len: usize = fields.scalar("feature_len")?;
    let scaling: Scaling = fields.scalar("scaling")?;
    let standardizes = matches!(scaling, Scaling::Standardize | Scaling::LogStandardize);
    let stats_len = if standardizes { feature_len } else { 0 };
    let transform = FeatureTransform {
        scaling,
        mean: fields.vector_of_len("transform_mean", stats_len)?,
        scale: fields.vector_of_len("transform_scale", stats_len)?,
    };
    let kind: String = fields.scalar("model_kind")?;
    let model = match kind.as_str() {
        "svm" => Model::Svm(SvmModel {
            weights: fields.vector_of_len("weights", feature_len)?,
            bias: fields.scalar("bias")?,
            transform,
            config: SvmConfig {
                c: fields.scalar("c")?,
                epochs: fields.scalar("epochs")?,
                seed: fields.scalar("seed")?,
                scaling,
            },
        }),
        "logreg" => Model::LogReg(LogRegModel {
            weights: fields.vector_of_len("weights", feature_len)?,
            bias: fields.scalar("bias")?,
            transform,
            config: LogRegConfig {
                l2: fields.scalar("l2")?,
                learning_rate: fields.scalar("learning_rate")?,
                epochs: fields.scalar("epochs")?,
                seed: fields.scalar("seed")?,
                scaling,
            },
        }),
        "kmeans" => {
            let (line, map) = fields.raw("cluster_to_label")?;
            let labels: Vec<Label> = map
                .split_whitespace()
                .map(|t| t.parse::<u8>().ok().and_then(Label::from_u8))
                .collect::<Option<_>>()
                .ok_or_else(|| fields.err(line, "cluster_to_label must be two 0/1 labels"))?;
            if labels.len() != 2 || labels[0] == labels[1] {
                return Err(fields.err(line, "cluster_to_label must be a bijection"));
            }
            Model::KMeans(KMeansModel {
                centroids: [
                    fields.vector_of_len("centroid_0", feature_len)?,
                    fields.vector_of_len("centroid_1", feature_len)?,
                ],
                cluster_to_label: [labels[0], labels[1]],
                inertia: fields.scalar("inertia")?,
                transform,
                config: KMeansConfig {
                    seed: fields.scalar("seed")?,
                    max_iter: fields.scalar("max_iter")?,
                    n_init: fields.scalar("n_init")?,
                    scaling,
                },
            })
        }
        other => {
            let (line, _) = fields.raw("model_kind")?;
            return Err(fields.err(line, format!("unknown model_kind {other:?}")));
        }
    };
    Ok(ModelFile { model, meta })
}
