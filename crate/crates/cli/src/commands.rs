use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use specscope::classify::{
    evaluate, evaluate_grouped, fit_kmeans, predict_all, read_model, train_logreg, train_svm,
    write_model, EvalReport, KMeansConfig, Label, LogRegConfig, Model, ModelFile, SvmConfig,
};
use specscope::features::{
    extract_feature, native_profile, top_quartile_mean, FeatureConfig, FeatureVector,
};
use specscope::ingest::{self, cache_read, cache_write, decode_image, split, FeatureCache};
use specscope::resample::{self, InterpMode, Kernel2D, Padding};
use specscope::spectral_loss::{combine_loss, mean_real_profile, spectral_loss_value_and_grad};
use specscope::spectrum::ai_stats;
use specscope::synth::{self, SynthConfig};
use specscope::GrayImage;

use crate::svg::{profile_plot, Series};
use crate::{
    usage, BandArg, ClusterArgs, EvalArgs, ExtractArgs, LossCheckArgs, ModelArg, StatsArgs,
    SynthArgs, TrainArgs, UpsampleArgs,
};

fn print_config(command: &str, entries: &[(&str, String)]) {
    println!("config.command = {command}");
    for (k, v) in entries {
        println!("config.{k} = {v}");
    }
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn load_cache(path: &Path) -> Result<FeatureCache> {
    cache_read(path).with_context(|| format!("reading feature cache {}", path.display()))
}

fn labeled_rows(cache: &FeatureCache) -> Vec<FeatureVector> {
    let rows: Vec<FeatureVector> = cache
        .rows
        .iter()
        .filter(|r| r.label.is_some())
        .cloned()
        .collect();
    let dropped = cache.rows.len() - rows.len();
    if dropped > 0 {
        warn(format!("ignoring {dropped} rows without a label"));
    }
    rows
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{}", e.error()))?;
    ingest::write_atomic(path, &bytes)?;
    Ok(())
}

fn report_rows(report: &EvalReport, prefix: &str) -> Vec<Vec<String>> {
    let c = report.confusion;
    let mut rows = vec![
        (format!("{prefix}n"), report.n.to_string()),
        (format!("{prefix}accuracy"), report.accuracy.to_string()),
        (format!("{prefix}true_real"), c[0][0].to_string()),
        (format!("{prefix}real_as_fake"), c[0][1].to_string()),
        (format!("{prefix}fake_as_real"), c[1][0].to_string()),
        (format!("{prefix}true_fake"), c[1][1].to_string()),
    ];
    if let Some(b) = report.best_mapping_accuracy {
        rows.push((format!("{prefix}best_mapping_accuracy"), b.to_string()));
    }
    rows.into_iter().map(|(k, v)| vec![k, v]).collect()
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_real: a.n_real,
        n_fake: a.n_fake,
        size: a.size,
        spectral_exponent: a.exponent,
        fake_mode: a.mode.into(),
        seed: a.seed,
        group_size: a.group_size,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    print_config(
        "synth",
        &[
            ("out", a.out.display().to_string()),
            ("n_real", cfg.n_real.to_string()),
            ("n_fake", cfg.n_fake.to_string()),
            ("size", cfg.size.to_string()),
            ("mode", cfg.fake_mode.to_string()),
            ("exponent", cfg.spectral_exponent.to_string()),
            ("seed", cfg.seed.to_string()),
            ("group_size", cfg.group_size.to_string()),
        ],
    );
    let records = synth::build_corpus(&cfg, &a.out)?;
    println!(
        "wrote {} images and {} to {}",
        records.len(),
        ingest::MANIFEST_NAME,
        a.out.display()
    );
    Ok(())
}

pub fn extract(a: ExtractArgs, threads: usize) -> Result<()> {
    if a.target_len < 2 {
        return Err(usage("--target-len must be at least 2"));
    }
    let layout = a.layout.resolve(&a.data);
    print_config(
        "extract",
        &[
            ("data", a.data.display().to_string()),
            ("layout", format!("{layout:?}")),
            ("out", a.out.display().to_string()),
            ("target_len", a.target_len.to_string()),
            ("threads", threads.to_string()),
        ],
    );
    let records = ingest::scan_dataset(&a.data, layout)?;
    if records.is_empty() {
        bail!("no images found under {}", a.data.display());
    }
    let cfg = FeatureConfig {
        target_len: a.target_len,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    let results: Vec<_> = pool.install(|| {
        records
            .par_iter()
            .map(|rec| {
                decode_image(&rec.path)
                    .and_then(|raster| extract_feature(&raster, &cfg))
                    .map(|f| FeatureVector {
                        id: rec.id.clone(),
                        label: rec.label,
                        group: rec.group.clone(),
                        ..f
                    })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (rec, res) in records.iter().zip(results) {
        match res {
            Ok(f) => rows.push(f),
            Err(e) => warn(format!("skipping {}: {e}", rec.id)),
        }
    }
    if rows.is_empty() {
        bail!(
            "every one of the {} images failed to decode or extract",
            records.len()
        );
    }
    let n = rows.len();
    cache_write(&FeatureCache::new(a.target_len, rows)?, &a.out)?;
    println!(
        "extracted {n} of {} images ({} skipped) into {}",
        records.len(),
        records.len() - n,
        a.out.display()
    );
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    if !(0.0..1.0).contains(&a.test_fraction) {
        return Err(usage("--test-fraction must be in [0, 1)"));
    }
    if !(a.c > 0.0) {
        return Err(usage("--c must be positive"));
    }
    if !(a.l2 >= 0.0) || !(a.learning_rate > 0.0) {
        return Err(usage("--l2 must be >= 0 and --learning-rate positive"));
    }
    let (kind, default_epochs, default_scaling) = match a.model {
        ModelArg::Svm => (
            "svm",
            SvmConfig::default().epochs,
            SvmConfig::default().scaling,
        ),
        ModelArg::Logreg => (
            "logreg",
            LogRegConfig::default().epochs,
            LogRegConfig::default().scaling,
        ),
    };
    let epochs = a.epochs.unwrap_or(default_epochs);
    let scaling = a.scaling.map(Into::into).unwrap_or(default_scaling);
    let mut config = vec![
        ("cache", a.cache.display().to_string()),
        ("model", kind.to_string()),
        ("out", a.out.display().to_string()),
        ("test_fraction", a.test_fraction.to_string()),
        ("seed", a.seed.to_string()),
        ("group_aware", a.group_aware.to_string()),
        ("scaling", scaling.to_string()),
        ("epochs", epochs.to_string()),
    ];
    match a.model {
        ModelArg::Svm => config.push(("c", a.c.to_string())),
        ModelArg::Logreg => {
            config.push(("l2", a.l2.to_string()));
            config.push(("learning_rate", a.learning_rate.to_string()));
        }
    }
    print_config("train", &config);

    let cache = load_cache(&a.cache)?;
    let rows = labeled_rows(&cache);
    if rows.is_empty() {
        bail!("{} has no labeled rows", a.cache.display());
    }
    let s = split(&rows, a.test_fraction, a.seed, a.group_aware)?;
    let model: Model = match a.model {
        ModelArg::Svm => train_svm(
            &s.train,
            &SvmConfig {
                c: a.c,
                epochs,
                seed: a.seed,
                scaling,
            },
        )?
        .into(),
        ModelArg::Logreg => train_logreg(
            &s.train,
            &LogRegConfig {
                l2: a.l2,
                learning_rate: a.learning_rate,
                epochs,
                seed: a.seed,
                scaling,
            },
        )?
        .into(),
    };
    let train_acc = evaluate(&model, &s.train)?.accuracy;
    println!("train rows: {}, test rows: {}", s.train.len(), s.test.len());
    println!("train accuracy = {train_acc:.4}");
    if !s.test.is_empty() {
        println!("test accuracy = {:.4}", evaluate(&model, &s.test)?.accuracy);
    }

    let mut file = ModelFile::new(model);
    let meta = &mut file.meta;
    meta.insert("split_seed".into(), a.seed.to_string());
    meta.insert("test_fraction".into(), a.test_fraction.to_string());
    meta.insert("group_aware".into(), a.group_aware.to_string());
    meta.insert("labeled_rows".into(), rows.len().to_string());
    meta.insert("train_rows".into(), s.train.len().to_string());
    meta.insert("test_rows".into(), s.test.len().to_string());
    write_model(&file, &a.out)?;
    println!("model written to {}", a.out.display());
    Ok(())
}

fn check_feature_len(model: &Model, cache: &FeatureCache, model_path: &Path) -> Result<()> {
    if model.feature_len() != cache.target_len {
        bail!(
            "model {} expects {} features but the cache rows have {}",
            model_path.display(),
            model.feature_len(),
            cache.target_len
        );
    }
    Ok(())
}

/// Rows the model was not trained on, re-derived from the split recorded at training time.
fn held_out(file: &ModelFile, rows: &[FeatureVector]) -> Result<Option<Vec<FeatureVector>>> {
    let meta = &file.meta;
    let (Some(seed), Some(frac), Some(group)) = (
        meta.get("split_seed"),
        meta.get("test_fraction"),
        meta.get("group_aware"),
    ) else {
        return Ok(None);
    };
    let parse_err = |k: &str| anyhow!("model metadata {k} is malformed");
    let seed: u64 = seed.parse().map_err(|_| parse_err("split_seed"))?;
    let frac: f64 = frac.parse().map_err(|_| parse_err("test_fraction"))?;
    let group: bool = group.parse().map_err(|_| parse_err("group_aware"))?;
    if let Some(n) = meta.get("labeled_rows") {
        if n.parse::<usize>().ok() != Some(rows.len()) {
            warn(format!(
                "model was trained on a cache with {n} labeled rows, this one has {}; the held-out split will differ",
                rows.len()
            ));
        }
    }
    Ok(Some(split(rows, frac, seed, group)?.test))
}

fn print_report(title: &str, report: &EvalReport) {
    println!("{title}");
    for line in report.to_string().lines() {
        println!("  {line}");
    }
}

fn prediction_rows(model: &Model, rows: &[FeatureVector]) -> Result<Vec<Vec<String>>> {
    let preds = predict_all(model, rows)?;
    Ok(rows
        .iter()
        .zip(preds)
        .map(|(r, p)| {
            vec![
                r.id.clone(),
                r.label.map(|l| l.to_string()).unwrap_or_default(),
                r.group.clone().unwrap_or_default(),
                p.label.to_string(),
                format!("{:.16e}", p.score),
            ]
        })
        .collect())
}

const PREDICTION_HEADER: [&str; 5] = ["id", "label", "group", "predicted", "score"];

pub fn eval(a: EvalArgs) -> Result<()> {
    print_config(
        "eval",
        &[
            ("cache", a.cache.display().to_string()),
            ("model", a.model.display().to_string()),
            ("all", a.all.to_string()),
            ("vote_by_group", a.vote_by_group.to_string()),
        ],
    );
    let file =
        read_model(&a.model).with_context(|| format!("reading model {}", a.model.display()))?;
    let cache = load_cache(&a.cache)?;
    check_feature_len(&file.model, &cache, &a.model)?;
    let rows = labeled_rows(&cache);
    if rows.is_empty() {
        bail!("{} has no labeled rows to evaluate", a.cache.display());
    }
    let subset = if a.all { None } else { held_out(&file, &rows)? };
    let (scope, rows) = match subset {
        Some(test) if !test.is_empty() => ("held-out split", test),
        Some(_) => {
            warn("the recorded split has no test rows; evaluating every row");
            ("all rows", rows)
        }
        None => ("all rows", rows),
    };
    println!("model kind: {}", file.model.kind());
    let report = evaluate(&file.model, &rows)?;
    print_report(&format!("frame-level ({scope}):"), &report);
    let mut csv_rows = report_rows(&report, "");
    if a.vote_by_group {
        let grouped = evaluate_grouped(&file.model, &rows)?;
        print_report("group-level (majority vote):", &grouped);
        csv_rows.extend(report_rows(&grouped, "group_"));
    }
    if let Some(p) = &a.out_csv {
        write_csv(p, &["metric", "value"], &csv_rows)?;
    }
    if let Some(p) = &a.predictions {
        write_csv(p, &PREDICTION_HEADER, &prediction_rows(&file.model, &rows)?)?;
    }
    Ok(())
}

pub fn cluster(a: ClusterArgs) -> Result<()> {
    if a.n_init == 0 || a.max_iter == 0 {
        return Err(usage("--n-init and --max-iter must be at least 1"));
    }
    let cfg = KMeansConfig {
        seed: a.seed,
        max_iter: a.max_iter,
        n_init: a.n_init,
        scaling: a.scaling.into(),
    };
    print_config(
        "cluster",
        &[
            ("cache", a.cache.display().to_string()),
            ("seed", cfg.seed.to_string()),
            ("n_init", cfg.n_init.to_string()),
            ("max_iter", cfg.max_iter.to_string()),
            ("scaling", cfg.scaling.to_string()),
            ("calibrate", a.calibrate.to_string()),
            ("vote_by_group", a.vote_by_group.to_string()),
        ],
    );
    let cache = load_cache(&a.cache)?;
    let labeled: Vec<FeatureVector> = cache
        .rows
        .iter()
        .filter(|r| r.label.is_some())
        .cloned()
        .collect();
    let calibration = if a.calibrate > 0 {
        if labeled.len() < a.calibrate {
            bail!(
                "--calibrate {} needs that many labeled rows, the cache has {}",
                a.calibrate,
                labeled.len()
            );
        }
        let mut pick = labeled.clone();
        pick.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
        pick.truncate(a.calibrate);
        Some(pick)
    } else {
        None
    };
    // labels never reach the clustering itself
    let unlabeled: Vec<FeatureVector> = cache
        .rows
        .iter()
        .map(|r| FeatureVector {
            label: None,
            ..r.clone()
        })
        .collect();
    let fit = fit_kmeans(&unlabeled, &cfg, calibration.as_deref())?;
    let model: Model = fit.model.clone().into();
    let sizes = unlabeled.iter().try_fold([0usize; 2], |mut acc, r| {
        acc[fit.model.assign(&r.values)?] += 1;
        Ok::<_, specscope::Error>(acc)
    })?;
    println!("inertia = {:.6e}", fit.model.inertia);
    println!(
        "cluster sizes: {} (labeled {}), {} (labeled {})",
        sizes[0], fit.model.cluster_to_label[0], sizes[1], fit.model.cluster_to_label[1]
    );
    let mut csv_rows = vec![
        vec!["inertia".to_string(), fit.model.inertia.to_string()],
        vec!["cluster_0_size".to_string(), sizes[0].to_string()],
        vec!["cluster_1_size".to_string(), sizes[1].to_string()],
    ];
    if labeled.is_empty() {
        println!("no labels present; accuracy not reported");
    } else {
        let report = evaluate(&model, &labeled)?;
        print_report("labeled rows:", &report);
        csv_rows.extend(report_rows(&report, ""));
        if a.vote_by_group {
            let grouped = evaluate_grouped(&model, &labeled)?;
            print_report("group-level (majority vote):", &grouped);
            csv_rows.extend(report_rows(&grouped, "group_"));
        }
    }
    if let Some(p) = &a.out_csv {
        write_csv(p, &["metric", "value"], &csv_rows)?;
    }
    if let Some(p) = &a.out {
        write_model(&ModelFile::new(model), p)?;
        println!("model written to {}", p.display());
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    print_config(
        "stats",
        &[
            ("cache", a.cache.display().to_string()),
            ("out_csv", a.out_csv.display().to_string()),
            ("out_svg", a.out_svg.display().to_string()),
            ("band", format!("{:?}", a.band).to_lowercase()),
        ],
    );
    let cache = load_cache(&a.cache)?;
    let mut csv_rows = Vec::new();
    let mut series = Vec::new();
    for (label, name, color) in [
        (Label::Real, "real", "#1f77b4"),
        (Label::Fake, "fake", "#d62728"),
    ] {
        let profiles: Vec<&[f64]> = cache
            .rows
            .iter()
            .filter(|r| r.label == Some(label))
            .map(|r| r.values.as_slice())
            .collect();
        if profiles.is_empty() {
            warn(format!("no {name} rows; {name} curve omitted"));
            continue;
        }
        let s = ai_stats(&profiles)?;
        let std = s.std_dev();
        for (i, ((m, v), sd)) in s.mean.iter().zip(&s.variance).zip(&std).enumerate() {
            csv_rows.push(vec![
                name.to_string(),
                i.to_string(),
                format!("{m:.16e}"),
                format!("{v:.16e}"),
                format!("{sd:.16e}"),
                s.count.to_string(),
            ]);
        }
        println!(
            "{name}: {} rows, top-quartile mean {:.6e}",
            s.count,
            top_quartile_mean(&s.mean)
        );
        series.push(Series {
            name: name.to_string(),
            color: color.to_string(),
            band: match a.band {
                BandArg::Std => std,
                BandArg::Variance => s.variance,
            },
            mean: s.mean,
        });
    }
    if series.is_empty() {
        bail!("{} has no labeled rows", a.cache.display());
    }
    write_csv(
        &a.out_csv,
        &["class", "bin", "mean", "variance", "std", "count"],
        &csv_rows,
    )?;
    let band = match a.band {
        BandArg::Std => "1 std",
        BandArg::Variance => "variance",
    };
    let svg = profile_plot(&series, &format!("Azimuthal power profile (mean ± {band})"));
    ingest::write_atomic(&a.out_svg, svg.as_bytes())?;
    println!("wrote {} and {}", a.out_csv.display(), a.out_svg.display());
    Ok(())
}

/// Largest centred square with an even side.
fn even_square(img: &GrayImage) -> Result<GrayImage> {
    let side = img.width().min(img.height()) & !1;
    if side < 8 {
        bail!(
            "image {}x{} is too small; need at least 8x8",
            img.width(),
            img.height()
        );
    }
    let x0 = (img.width() - side) / 2;
    let y0 = (img.height() - side) / 2;
    Ok(img.crop(x0, y0, side, side)?)
}

pub fn upsample_analyze(a: UpsampleArgs) -> Result<()> {
    let source = match (&a.image, a.size) {
        (Some(p), None) => {
            let raster = decode_image(p)?;
            specscope::features::raster_to_gray(&raster)
        }
        (None, Some(size)) => {
            let cfg = SynthConfig {
                size,
                spectral_exponent: a.exponent,
                seed: a.seed,
                ..SynthConfig::default()
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            synth::gen_real(&cfg, 0)
        }
        _ => return Err(usage("exactly one of --image or --size is required")),
    };
    let mut config = vec![("out", a.out.display().to_string())];
    match &a.image {
        Some(p) => config.push(("image", p.display().to_string())),
        None => {
            config.push(("size", a.size.unwrap_or_default().to_string()));
            config.push(("exponent", a.exponent.to_string()));
            config.push(("seed", a.seed.to_string()));
        }
    }
    print_config("upsample-analyze", &config);

    let img = even_square(&source)?;
    let low = resample::decimate_2x(&img)?;
    let zero = resample::zero_insert_2d(&low);
    let bil = resample::interp_upsample_2d(&low, InterpMode::Bilinear);
    let smooth = |x: &GrayImage| resample::conv2d(x, &Kernel2D::box3(), Padding::Periodic);
    let variants = [
        ("original", img.clone()),
        ("transconv", zero.clone()),
        ("upconv", bil.clone()),
        ("transconv_smooth", smooth(&zero)?),
        ("upconv_smooth", smooth(&bil)?),
    ];
    let len = img.width() / 2;
    let mut rows = Vec::new();
    let mut base_tq = None;
    for (name, v) in &variants {
        let profile = native_profile(v).with_context(|| format!("profile of {name}"))?;
        let tq = top_quartile_mean(profile.values());
        let base = *base_tq.get_or_insert(tq);
        println!(
            "{name:<17} top-quartile mean {tq:.6e} ({:+.3e} vs original)",
            tq - base
        );
        let mut row = vec![name.to_string()];
        row.extend(profile.values().iter().map(|x| format!("{x:.16e}")));
        rows.push(row);
    }
    let mut header = vec!["profile".to_string()];
    header.extend((0..len).map(|i| format!("v{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&a.out, &header, &rows)?;
    println!(
        "wrote {} profiles of {len} bins to {}",
        rows.len(),
        a.out.display()
    );
    Ok(())
}

pub fn loss_check(a: LossCheckArgs) -> Result<()> {
    if a.image.is_none() && (a.n_random == 0 || a.size < 4) {
        return Err(usage("random checks need --n-random >= 1 and --size >= 4"));
    }
    if !(a.h > 0.0) || !(a.lambda >= 0.0) {
        return Err(usage("--h must be positive and --lambda non-negative"));
    }
    let mut config = vec![
        ("real_cache", a.real_cache.display().to_string()),
        ("h", a.h.to_string()),
        ("lambda", a.lambda.to_string()),
        ("seed", a.seed.to_string()),
    ];
    match &a.image {
        Some(p) => config.push(("image", p.display().to_string())),
        None => {
            config.push(("n_random", a.n_random.to_string()));
            config.push(("size", a.size.to_string()));
        }
    }
    print_config("loss-check", &config);

    let cache = load_cache(&a.real_cache)?;
    let reals: Vec<FeatureVector> = cache
        .rows
        .iter()
        .filter(|r| r.label == Some(Label::Real))
        .cloned()
        .collect();
    if reals.is_empty() {
        bail!("{} has no real (label 0) rows", a.real_cache.display());
    }
    let reference = mean_real_profile(&reals)?;
    println!("reference profile from {} real rows", reference.n_source());

    let images: Vec<(String, GrayImage)> = match &a.image {
        Some(p) => {
            let gray = specscope::features::raster_to_gray(&decode_image(p)?);
            vec![(
                p.display().to_string(),
                specscope::features::center_crop_square(&gray),
            )]
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..a.n_random)
                .map(|i| {
                    let img =
                        GrayImage::from_fn(a.size, a.size, |_, _| rng.random_range(0.0..255.0));
                    (format!("random_{i}"), img)
                })
                .collect()
        }
    };

    let mut worst = 0.0f64;
    for (name, img) in &images {
        let native = reference.resampled(img.width() / 2)?;
        let eval = spectral_loss_value_and_grad(img, &native)?;
        let grad_norm = eval.grad.data().iter().map(|g| g * g).sum::<f64>().sqrt();
        let (residual, checked, skipped) = fd_residual(img, &native, &eval, a.h)?;
        worst = worst.max(residual);
        println!(
            "{name}: loss = {:.10e}, |grad| = {grad_norm:.6e}, max relative residual = {residual:.3e} ({checked} pixels, {skipped} skipped at clamp boundaries)",
            eval.loss
        );
        let combined = combine_loss(0.0, eval.loss, a.lambda)?;
        println!(
            "  generator 0 + lambda {} x spectral = final {:.10e}",
            combined.lambda, combined.final_loss
        );
    }
    println!("max relative residual over all images = {worst:.3e}");
    Ok(())
}

/// Central-difference check on up to 256 evenly spaced pixels.
fn fd_residual(
    img: &GrayImage,
    reference: &specscope::spectral_loss::ReferenceProfile,
    eval: &specscope::spectral_loss::SpectralLossEval,
    h: f64,
) -> Result<(f64, usize, usize)> {
    let n = img.width() * img.height();
    let stride = n.div_ceil(256).max(1);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for idx in (0..n).step_by(stride) {
        let (x, y) = (idx % img.width(), idx / img.width());
        let mut plus = img.clone();
        plus.set(x, y, img.get(x, y) + h);
        let mut minus = img.clone();
        minus.set(x, y, img.get(x, y) - h);
        let ep = spectral_loss_value_and_grad(&plus, reference)?;
        let em = spectral_loss_value_and_grad(&minus, reference)?;
        if ep.clamped != eval.clamped || em.clamped != eval.clamped {
            skipped += 1;
            continue;
        }
        let fd = (ep.loss - em.loss) / (2.0 * h);
        let an = eval.grad.get(x, y);
        let denom = an.abs().max(fd.abs());
        if denom > 0.0 {
            worst = worst.max((an - fd).abs() / denom);
        }
        checked += 1;
    }
    Ok((worst, checked, skipped))
}
