mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use specscope::classify::{
    evaluate, evaluate_grouped, fit_kmeans, logreg_gradient, logreg_objective, majority_vote,
    read_model_str, train_logreg, train_svm, write_model_string, KMeansConfig, Label, LogRegConfig,
    Model, ModelFile, Scaling, SvmConfig, SvmModel,
};
use specscope::features::{extract_feature, FeatureConfig, FeatureVector};
use specscope::ingest::split;
use specscope::synth::{generate, SynthConfig};
use specscope::Raster;

fn corpus(n: usize, size: usize) -> Vec<FeatureVector> {
    let cfg = SynthConfig {
        n_real: n,
        n_fake: n,
        size,
        ..SynthConfig::default()
    };
    generate(&cfg)
        .unwrap()
        .into_iter()
        .map(|(rec, img)| {
            let f = extract_feature(&Raster::Gray(img), &FeatureConfig::default()).unwrap();
            FeatureVector {
                id: rec.id,
                label: rec.label,
                ..f
            }
        })
        .collect()
}

#[test]
fn detectors_separate_a_small_corpus() {
    let data = corpus(40, 32);
    let s = split(&data, 0.25, 42, false).unwrap();
    let svm = train_svm(&s.train, &SvmConfig::default()).unwrap();
    assert!(evaluate(&svm.into(), &s.test).unwrap().accuracy >= 0.9);
    let lr = train_logreg(&s.train, &LogRegConfig::default()).unwrap();
    assert!(evaluate(&lr.into(), &s.test).unwrap().accuracy >= 0.9);
    let km = fit_kmeans(&data, &KMeansConfig::default(), None).unwrap();
    let report = evaluate(&km.model.into(), &data).unwrap();
    assert!(report.best_mapping_accuracy.unwrap() >= 0.85);
}

#[test]
fn trained_models_survive_the_file_format() {
    let data = corpus(10, 16);
    let models: Vec<Model> = vec![
        train_svm(
            &data,
            &SvmConfig {
                epochs: 20,
                ..SvmConfig::default()
            },
        )
        .unwrap()
        .into(),
        train_logreg(
            &data,
            &LogRegConfig {
                epochs: 20,
                ..LogRegConfig::default()
            },
        )
        .unwrap()
        .into(),
        fit_kmeans(&data, &KMeansConfig::default(), None)
            .unwrap()
            .model
            .into(),
    ];
    for m in models {
        let back = read_model_str(&write_model_string(&ModelFile::new(m.clone()))).unwrap();
        assert_eq!(back.model, m);
        for f in &data {
            let (a, b) = (
                m.predict(&f.values).unwrap(),
                back.model.predict(&f.values).unwrap(),
            );
            assert_eq!(a.label, b.label);
            assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }
}

#[test]
fn feature_length_mismatch_is_an_error() {
    let m: Model = SvmModel::linear(vec![1.0, 2.0], 0.0).into();
    assert!(m.predict(&[1.0]).is_err());
}

#[test]
fn decision_ties_and_examples() {
    let m = SvmModel::linear(vec![1.0, -1.0], 0.0);
    assert_eq!(m.predict(&[2.0, 2.0]).unwrap().label, Label::Real);
    assert_eq!(m.predict(&[3.0, 1.0]).unwrap().label, Label::Fake);
    assert_eq!(m.predict(&[1.0, 3.0]).unwrap().label, Label::Real);
}

/// Smallest within-cluster sum of squares over all 2-partitions.
fn best_two_partition(xs: &[Vec<f64>]) -> f64 {
    let n = xs.len();
    let mut best = f64::MAX;
    for mask in 1u32..(1 << (n - 1)) {
        let mut total = 0.0;
        for side in [true, false] {
            let members: Vec<&Vec<f64>> = (0..n)
                .filter(|&i| ((mask >> i) & 1 == 1) == side)
                .map(|i| &xs[i])
                .collect();
            let d = members[0].len();
            let mean: Vec<f64> = (0..d)
                .map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64)
                .collect();
            total += members
                .iter()
                .map(|m| {
                    m.iter()
                        .zip(&mean)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                })
                .sum::<f64>();
        }
        best = best.min(total);
    }
    best
}

#[test]
fn kmeans_reaches_the_global_optimum_on_small_sets() {
    let mut r = rng(40);
    for _ in 0..10 {
        let n = r.random_range(4..11);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let off = if i % 2 == 0 { 0.0 } else { 3.0 };
                vec![off + r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]
            })
            .collect();
        let fs: Vec<FeatureVector> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| FeatureVector::new(format!("{i}"), None, x.clone()))
            .collect();
        let cfg = KMeansConfig {
            scaling: Scaling::None,
            n_init: 16,
            ..KMeansConfig::default()
        };
        let fit = fit_kmeans(&fs, &cfg, None).unwrap();
        let opt = best_two_partition(&xs);
        assert!(
            fit.model.inertia <= opt * (1.0 + 1e-9),
            "{} vs {opt}",
            fit.model.inertia
        );
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn logreg_objective_matches_direct_formula() {
    let mut r = rng(41);
    let xs: Vec<Vec<f64>> = (0..7)
        .map(|_| (0..3).map(|_| r.random_range(-2.0..2.0)).collect())
        .collect();
    let ys: Vec<f64> = (0..7).map(|i| (i % 2) as f64).collect();
    let w = [0.3, -0.7, 1.1];
    let b = 0.2;
    let direct: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, &y)| {
            let z: f64 = x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
            let p = 1.0 / (1.0 + (-z).exp());
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / 7.0
        + 0.5 * 0.01 * w.iter().map(|v| v * v).sum::<f64>();
    assert!((logreg_objective(&w, b, &xs, &ys, 0.01) - direct).abs() < 1e-12);
}

#[test]
fn logreg_converges_to_a_stationary_point() {
    let data = corpus(15, 16);
    let cfg = LogRegConfig {
        l2: 0.1,
        learning_rate: 0.5,
        epochs: 3000,
        ..LogRegConfig::default()
    };
    let m = train_logreg(&data, &cfg).unwrap();
    let xs: Vec<Vec<f64>> = data.iter().map(|f| m.transform.apply(&f.values)).collect();
    let ys: Vec<f64> = data
        .iter()
        .map(|f| f.label.unwrap().as_u8() as f64)
        .collect();
    let (gw, gb) = logreg_gradient(&m.weights, m.bias, &xs, &ys, cfg.l2);
    let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
    assert!(norm < 1e-6, "{norm}");
}

#[test]
fn grouped_evaluation_votes_per_group() {
    // frames of group "v" predicted [fake, fake, real] -> group verdict fake
    let m: Model = SvmModel::linear(vec![1.0], 0.0).into();
    let frames = [1.0, 1.0, -1.0];
    let fs: Vec<FeatureVector> = frames
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            FeatureVector::new(format!("f{i}"), Some(Label::Fake), vec![v]).with_group("v")
        })
        .collect();
    let r = evaluate_grouped(&m, &fs).unwrap();
    assert_eq!(r.n, 1);
    assert_eq!(r.accuracy, 1.0);
}

proptest! {
    #[test]
    fn vote_agrees_with_counting(labels in prop::collection::vec(any::<bool>(), 1..50)) {
        let ls: Vec<Label> = labels.iter().map(|&b| if b { Label::Fake } else { Label::Real }).collect();
        let fakes = labels.iter().filter(|&&b| b).count();
        let expect = if 2 * fakes >= labels.len() { Label::Fake } else { Label::Real };
        prop_assert_eq!(majority_vote(&ls).unwrap(), expect);
    }
}
