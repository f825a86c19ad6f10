use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, FeatureTransform, Label, Prediction, Scaling};
use crate::features::{top_quartile_mean, FeatureVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub seed: u64,
    pub max_iter: usize,
    pub n_init: usize,
    pub scaling: Scaling,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            max_iter: 100,
            n_init: 8,
            scaling: Scaling::Log,
        }
    }
}

/// Two centroids (in transformed feature space) and the label each one stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: [Vec<f64>; 2],
    pub cluster_to_label: [Label; 2],
    pub inertia: f64,
    pub transform: FeatureTransform,
    pub config: KMeansConfig,
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub model: KMeansModel,
    /// Inertia after each assignment step of the winning restart.
    pub history: Vec<f64>,
    /// Final inertia of every restart, in restart order.
    pub restart_inertia: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KMeansModel {
    /// Index of the nearest centroid; ties go to cluster 0.
    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        check_len(self.centroids[0].len(), x)?;
        let t = self.transform.apply(x);
        Ok(nearest(&self.centroids, &t).0)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_len(self.centroids[0].len(), x)?;
        let t = self.transform.apply(x);
        let fake = if self.cluster_to_label[0] == Label::Fake {
            0
        } else {
            1
        };
        let d_fake = sq_dist(&t, &self.centroids[fake]).sqrt();
        let d_real = sq_dist(&t, &self.centroids[1 - fake]).sqrt();
        let score = d_real - d_fake;
        Ok(Prediction {
            label: Label::from_score(score),
            score,
        })
    }
}

fn nearest(centroids: &[Vec<f64>; 2], x: &[f64]) -> (usize, f64) {
    let d0 = sq_dist(x, &centroids[0]);
    let d1 = sq_dist(x, &centroids[1]);
    if d1 < d0 {
        (1, d1)
    } else {
        (0, d0)
    }
}

struct Run {
    centroids: [Vec<f64>; 2],
    inertia: f64,
    history: Vec<f64>,
}

fn plus_plus_init(xs: &[Vec<f64>], rng: &mut ChaCha8Rng) -> [Vec<f64>; 2] {
    let first = rng.random_range(0..xs.len());
    let weights: Vec<f64> = xs.iter().map(|x| sq_dist(x, &xs[first])).collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut second = xs.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 && target < *w {
            second = i;
            break;
        }
        target -= w;
    }
    // float leftovers can walk past every positive weight; fall back to the farthest point
    if weights[second] == 0.0 {
        second = weights
            .iter()
            .enumerate()
            .fold(0, |best, (i, w)| if *w > weights[best] { i } else { best });
    }
    [xs[first].clone(), xs[second].clone()]
}

fn lloyd(xs: &[Vec<f64>], mut centroids: [Vec<f64>; 2], max_iter: usize) -> Run {
    let dim = xs[0].len();
    let mut assignment = vec![usize::MAX; xs.len()];
    let mut history = Vec::new();
    let mut inertia;
    let mut iter = 0;
    loop {
        let mut changed = false;
        inertia = 0.0;
        for (a, x) in assignment.iter_mut().zip(xs) {
            let (c, d) = nearest(&centroids, x);
            inertia += d;
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed || iter >= max_iter {
            break;
        }
        iter += 1;
        let mut sums = [vec![0.0; dim], vec![0.0; dim]];
        let mut counts = [0usize; 2];
        for (&a, x) in assignment.iter().zip(xs) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..2 {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                let n = counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s / n).collect();
            }
        }
    }
    Run {
        centroids,
        inertia,
        history,
    }
}

/// Lloyd's algorithm with k = 2 and k-means++ seeding, best of `n_init` restarts.
///
/// Restart `r` draws from the ChaCha stream `r` of the configured seed. The
/// cluster-to-label map comes from `calibration` when given (the bijection
/// agreeing with more calibration labels; ties fall through), otherwise the
/// centroid with the larger mean over its top quarter of bins is called fake.
pub fn fit_kmeans(
    features: &[FeatureVector],
    config: &KMeansConfig,
    calibration: Option<&[FeatureVector]>,
) -> Result<KMeansFit> {
    if features.len() < 2 {
        return Err(Error::usage("k-means needs at least 2 samples"));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::usage("k-means samples have different lengths"));
    }
    if features.iter().all(|f| f.values == features[0].values) {
        return Err(Error::DegenerateClustering);
    }
    let raw: Vec<&[f64]> = features.iter().map(|f| f.values.as_slice()).collect();
    let transform = FeatureTransform::fit(config.scaling, &raw);
    let xs: Vec<Vec<f64>> = raw.iter().map(|x| transform.apply(x)).collect();
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(Error::DegenerateClustering);
    }

    let mut best: Option<Run> = None;
    let mut restart_inertia = Vec::with_capacity(config.n_init.max(1));
    for r in 0..config.n_init.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let run = lloyd(&xs, plus_plus_init(&xs, &mut rng), config.max_iter);
        restart_inertia.push(run.inertia);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");

    let mut model = KMeansModel {
        centroids: run.centroids,
        cluster_to_label: [Label::Real, Label::Fake],
        inertia: run.inertia,
        transform,
        config: *config,
    };
    model.cluster_to_label = label_map(&model, calibration)?;
    Ok(KMeansFit {
        model,
        history: run.history,
        restart_inertia,
    })
}

fn label_map(model: &KMeansModel, calibration: Option<&[FeatureVector]>) -> Result<[Label; 2]> {
    if let Some(cal) = calibration {
        // agreement of the identity map (cluster 0 -> real) minus that of the swapped map
        let mut balance: i64 = 0;
        for s in cal {
            if let Some(truth) = s.label {
                let c = model.assign(&s.values)?;
                let identity = if c == 0 { Label::Real } else { Label::Fake };
                balance += if identity == truth { 1 } else { -1 };
            }
        }
        if balance > 0 {
            return Ok([Label::Real, Label::Fake]);
        }
        if balance < 0 {
            return Ok([Label::Fake, Label::Real]);
        }
    }
    let e0 = top_quartile_mean(&model.centroids[0]);
    let e1 = top_quartile_mean(&model.centroids[1]);
    Ok(if e0 > e1 {
        [Label::Fake, Label::Real]
    } else {
        [Label::Real, Label::Fake]
    })
}
