//! Real/fake detectors over spectral feature vectors.
//!
//! Three model families are supported: a linear soft-margin SVM trained with
//! seeded stochastic subgradient steps, L2-regularized logistic regression
//! trained with full-batch gradient descent, and 2-means clustering with a
//! cluster-to-label map. Every trainer is deterministic for a fixed seed.
//!
//! Decision rules shared by all models: a positive score means fake, and a
//! score of exactly zero predicts real. Video-level majority votes break ties
//! toward fake.

mod kmeans;
mod logreg;
mod model_io;
mod svm;
mod transform;

use std::collections::BTreeMap;
use std::fmt;

pub use kmeans::{fit_kmeans, KMeansConfig, KMeansFit, KMeansModel};
pub use logreg::{logreg_gradient, logreg_objective, train_logreg, LogRegConfig, LogRegModel};
pub use model_io::{read_model, read_model_str, write_model, write_model_string, ModelFile};
pub use svm::{train_svm, SvmConfig, SvmModel};
pub use transform::{FeatureTransform, Scaling};

use crate::features::FeatureVector;
use crate::{Error, Result};

/// Ground-truth or predicted class. `Real` is 0 and `Fake` is 1 on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Real),
            1 => Some(Label::Fake),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Real => 0,
            Label::Fake => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Real => Label::Fake,
            Label::Fake => Label::Real,
        }
    }

    /// `+1.0` for fake, `-1.0` for real.
    pub(crate) fn sign(self) -> f64 {
        match self {
            Label::Real => -1.0,
            Label::Fake => 1.0,
        }
    }

    fn from_score(score: f64) -> Self {
        if score > 0.0 {
            Label::Fake
        } else {
            Label::Real
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// SVM: margin `w.x + b`. Logistic regression: probability of fake.
    /// k-means: distance to the real centroid minus distance to the fake one.
    pub score: f64,
}

/// Any trained detector.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    LogReg(LogRegModel),
    KMeans(KMeansModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Svm(_) => "svm",
            Model::LogReg(_) => "logreg",
            Model::KMeans(_) => "kmeans",
        }
    }

    pub fn feature_len(&self) -> usize {
        match self {
            Model::Svm(m) => m.weights.len(),
            Model::LogReg(m) => m.weights.len(),
            Model::KMeans(m) => m.centroids[0].len(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            Model::Svm(m) => m.predict(x),
            Model::LogReg(m) => m.predict(x),
            Model::KMeans(m) => m.predict(x),
        }
    }
}

impl From<SvmModel> for Model {
    fn from(m: SvmModel) -> Self {
        Model::Svm(m)
    }
}

impl From<LogRegModel> for Model {
    fn from(m: LogRegModel) -> Self {
        Model::LogReg(m)
    }
}

impl From<KMeansModel> for Model {
    fn from(m: KMeansModel) -> Self {
        Model::KMeans(m)
    }
}

pub(crate) fn check_len(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::shape(format!(
            "feature length {} does not match model feature_len {expected}",
            x.len()
        )));
    }
    Ok(())
}

/// Feature rows and labels of a supervised training set, validated.
pub(crate) struct Labeled<'a> {
    pub xs: Vec<&'a [f64]>,
    pub ys: Vec<Label>,
}

pub(crate) fn labeled(samples: &[FeatureVector]) -> Result<Labeled<'_>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::usage("training set is empty"))?;
    let dim = first.len();
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for s in samples {
        let label = s
            .label
            .ok_or_else(|| Error::usage(format!("sample {:?} has no label", s.id)))?;
        if s.len() != dim {
            return Err(Error::usage(format!(
                "sample {:?} has {} features, expected {dim}",
                s.id,
                s.len()
            )));
        }
        xs.push(s.values.as_slice());
        ys.push(label);
    }
    if !ys.contains(&Label::Real) || !ys.contains(&Label::Fake) {
        return Err(Error::usage(
            "training data must contain both real and fake samples",
        ));
    }
    Ok(Labeled { xs, ys })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Accuracy and confusion counts. `confusion[truth][predicted]`, indices are label values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: [[usize; 2]; 2],
    pub n: usize,
    /// Accuracy under the better of the two cluster-to-label bijections (k-means only).
    pub best_mapping_accuracy: Option<f64>,
}

impl EvalReport {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Result<Self> {
        let mut confusion = [[0usize; 2]; 2];
        let mut n = 0;
        for (truth, pred) in pairs {
            confusion[truth.as_u8() as usize][pred.as_u8() as usize] += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::usage("cannot evaluate on an empty set"));
        }
        let correct = confusion[0][0] + confusion[1][1];
        Ok(Self {
            accuracy: correct as f64 / n as f64,
            confusion,
            n,
            best_mapping_accuracy: None,
        })
    }

    fn with_best_mapping(mut self) -> Self {
        self.best_mapping_accuracy = Some(self.accuracy.max(1.0 - self.accuracy));
        self
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "accuracy = {:.4}", self.accuracy)?;
        if let Some(best) = self.best_mapping_accuracy {
            writeln!(f, "best-mapping accuracy = {best:.4}")?;
        }
        writeln!(f, "confusion (rows truth, cols predicted):")?;
        writeln!(f, "           pred=0  pred=1")?;
        writeln!(
            f,
            "  truth=0  {:>6}  {:>6}",
            self.confusion[0][0], self.confusion[0][1]
        )?;
        write!(
            f,
            "  truth=1  {:>6}  {:>6}",
            self.confusion[1][0], self.confusion[1][1]
        )
    }
}

/// Per-sample predictions over a labeled set.
pub fn predict_all(model: &Model, samples: &[FeatureVector]) -> Result<Vec<Prediction>> {
    samples.iter().map(|s| model.predict(&s.values)).collect()
}

pub fn evaluate(model: &Model, test: &[FeatureVector]) -> Result<EvalReport> {
    let preds = predict_all(model, test)?;
    let pairs = test
        .iter()
        .zip(&preds)
        .map(|(s, p)| {
            s.label
                .map(|t| (t, p.label))
                .ok_or_else(|| Error::usage(format!("test sample {:?} has no label", s.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport::from_pairs(pairs)?;
    Ok(match model {
        Model::KMeans(_) => report.with_best_mapping(),
        _ => report,
    })
}

/// Most frequent label; an exact tie is called fake.
pub fn majority_vote(labels: &[Label]) -> Result<Label> {
    if labels.is_empty() {
        return Err(Error::usage("majority vote over no frames"));
    }
    let fakes = labels.iter().filter(|&&l| l == Label::Fake).count();
    Ok(if 2 * fakes >= labels.len() {
        Label::Fake
    } else {
        Label::Real
    })
}

/// Video-level outcome for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupVerdict {
    pub group: String,
    pub truth: Label,
    pub predicted: Label,
    pub frames: usize,
}

/// Majority-votes frame predictions within each group. Samples without a
/// group count as a group of their own, keyed by id.
pub fn vote_by_group(
    samples: &[FeatureVector],
    predictions: &[Label],
) -> Result<Vec<GroupVerdict>> {
    if samples.len() != predictions.len() {
        return Err(Error::usage("one prediction per sample is required"));
    }
    let mut groups: BTreeMap<String, (Vec<Label>, Vec<Label>)> = BTreeMap::new();
    for (s, &p) in samples.iter().zip(predictions) {
        let truth = s
            .label
            .ok_or_else(|| Error::usage(format!("sample {:?} has no label", s.id)))?;
        let key = s.group.clone().unwrap_or_else(|| s.id.clone());
        let entry = groups.entry(key).or_default();
        entry.0.push(truth);
        entry.1.push(p);
    }
    groups
        .into_iter()
        .map(|(group, (truths, preds))| {
            Ok(GroupVerdict {
                truth: majority_vote(&truths)?,
                predicted: majority_vote(&preds)?,
                frames: preds.len(),
                group,
            })
        })
        .collect()
}

pub fn evaluate_grouped(model: &Model, test: &[FeatureVector]) -> Result<EvalReport> {
    let preds: Vec<Label> = predict_all(model, test)?.iter().map(|p| p.label).collect();
    let verdicts = vote_by_group(test, &preds)?;
    EvalReport::from_pairs(verdicts.iter().map(|v| (v.truth, v.predicted)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_examples() {
        use Label::*;
        assert_eq!(majority_vote(&[Fake, Fake, Real]).unwrap(), Fake);
        assert_eq!(majority_vote(&[Real, Real, Real, Fake]).unwrap(), Real);
        assert_eq!(majority_vote(&[Real, Fake]).unwrap(), Fake);
        assert!(majority_vote(&[]).is_err());
    }

    #[test]
    fn report_examples() {
        use Label::*;
        let r = EvalReport::from_pairs([(Real, Real), (Fake, Fake), (Fake, Fake)]).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion, [[1, 0], [0, 2]]);

        let r = EvalReport::from_pairs([(Real, Real), (Fake, Real), (Real, Real), (Fake, Real)])
            .unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!(EvalReport::from_pairs(std::iter::empty()).is_err());
    }

    #[test]
    fn grouped_vote() {
        let mk =
            |id: &str, g: &str| FeatureVector::new(id, Some(Label::Fake), vec![0.0]).with_group(g);
        let samples = vec![mk("a", "v1"), mk("b", "v1"), mk("c", "v1"), mk("d", "v2")];
        use Label::*;
        let verdicts = vote_by_group(&samples, &[Fake, Fake, Real, Real]).unwrap();
        assert_eq!(verdicts.len(), 2);
        assert_eq!(verdicts[0].group, "v1");
        assert_eq!(verdicts[0].predicted, Fake);
        assert_eq!(verdicts[0].frames, 3);
        assert_eq!(verdicts[1].predicted, Real);
    }

    #[test]
    fn labeled_needs_both_classes() {
        let one = vec![
            FeatureVector::new("a", Some(Label::Real), vec![1.0]),
            FeatureVector::new("b", Some(Label::Real), vec![2.0]),
        ];
        assert!(matches!(labeled(&one), Err(Error::Usage(_))));
        let unlabeled = vec![FeatureVector::new("a", None, vec![1.0])];
        assert!(labeled(&unlabeled).is_err());
    }
}
