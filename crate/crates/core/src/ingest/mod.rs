//! Dataset scanning, image decoding, train/test splits and the feature cache.
//!
//! Two dataset layouts are understood:
//!
//! * labeled directories: every image below `root/real` is label 0, every
//!   image below `root/fake` is label 1. Images inside a subdirectory share
//!   that subdirectory as their group (e.g. frames of one video).
//! * a manifest: `manifest.csv` with header `id,path,label,group`, paths
//!   relative to the manifest, empty label for unknown, empty group for none.
//!
//! The feature cache is a CSV with header `id,label,group,v0,...,v{L-1}`.

pub mod pnm;

use std::collections::{BTreeMap, HashSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::Label;
use crate::features::FeatureVector;
use crate::{Error, Raster, Result};

pub const MANIFEST_NAME: &str = "manifest.csv";

const IMAGE_EXTENSIONS: &[&str] = &["pgm", "ppm", "pnm", "png", "jpg", "jpeg"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub id: String,
    pub path: PathBuf,
    pub label: Option<Label>,
    pub group: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    LabeledDirs,
    Manifest,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labeled-dirs" => Ok(Layout::LabeledDirs),
            "manifest" => Ok(Layout::Manifest),
            other => Err(Error::usage(format!(
                "unknown layout {other:?} (expected labeled-dirs or manifest)"
            ))),
        }
    }
}

/// Lists the samples of a dataset, sorted by id. Returned paths are absolute
/// or relative to the working directory (ready to open).
pub fn scan_dataset(root: &Path, layout: Layout) -> Result<Vec<SampleRecord>> {
    if !root.exists() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root does not exist"),
        ));
    }
    match layout {
        Layout::LabeledDirs => scan_labeled_dirs(root),
        Layout::Manifest => {
            let manifest = if root.is_dir() {
                root.join(MANIFEST_NAME)
            } else {
                root.to_path_buf()
            };
            let base = manifest.parent().unwrap_or(Path::new("."));
            let mut records = read_manifest(&manifest)?;
            for r in &mut records {
                r.path = base.join(&r.path);
            }
            Ok(records)
        }
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn scan_labeled_dirs(root: &Path) -> Result<Vec<SampleRecord>> {
    let mut records = Vec::new();
    for (dir, label) in [("real", Label::Real), ("fake", Label::Fake)] {
        let class_root = root.join(dir);
        if !class_root.is_dir() {
            continue;
        }
        for entry in walkdir::WalkDir::new(&class_root).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                let path = e.path().unwrap_or(&class_root).to_path_buf();
                Error::io(path, e.into())
            })?;
            let name = entry.file_name().to_string_lossy();
            if !entry.file_type().is_file() || name.starts_with('.') || !is_image(entry.path()) {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walk stays under root");
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            let group = rel
                .parent()
                .filter(|p| p.components().count() > 1)
                .map(|p| {
                    p.components()
                        .map(|c| c.as_os_str().to_string_lossy())
                        .collect::<Vec<_>>()
                        .join("/")
                });
            records.push(SampleRecord {
                id,
                path: entry.path().to_path_buf(),
                label: Some(label),
                group,
            });
        }
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

fn parse_label(s: &str) -> Option<Option<Label>> {
    match s.trim() {
        "" => Some(None),
        "0" => Some(Some(Label::Real)),
        "1" => Some(Some(Label::Fake)),
        _ => None,
    }
}

fn label_field(label: Option<Label>) -> String {
    label.map(|l| l.to_string()).unwrap_or_default()
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_error(path, line, format!("{kind:?}")),
    }
}

/// Reads a manifest; paths stay exactly as written (relative to the manifest).
pub fn read_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["id", "path", "label", "group"];
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!(
                "manifest header must be id,path,label,group, got {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        ));
    }
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != 4 {
            return Err(parse_error(
                path,
                line,
                format!("expected 4 fields, found {}", row.len()),
            ));
        }
        let id = row[0].trim().to_string();
        if id.is_empty() || row[1].trim().is_empty() {
            return Err(parse_error(path, line, "empty id or path"));
        }
        let label = parse_label(&row[2]).ok_or_else(|| {
            parse_error(
                path,
                line,
                format!("label must be 0, 1 or empty, got {:?}", &row[2]),
            )
        })?;
        if !seen.insert(id.clone()) {
            return Err(parse_error(path, line, format!("duplicate id {id:?}")));
        }
        records.push(SampleRecord {
            id,
            path: PathBuf::from(row[1].trim()),
            label,
            group: non_empty(row[3].trim()),
        });
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

pub fn write_manifest(records: &[SampleRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| csv_error(path, e);
    writer
        .write_record(["id", "path", "label", "group"])
        .map_err(csv_err)?;
    for r in records {
        let p = r
            .path
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        writer
            .write_record([
                r.id.as_str(),
                p.as_str(),
                label_field(r.label).as_str(),
                r.group.as_deref().unwrap_or(""),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

/// Writes through a temporary file in the same directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Decodes PGM/PPM natively; PNG and JPEG need the `image-formats` feature.
pub fn decode_image(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.first() == Some(&b'P') {
        return pnm::decode_pnm(&bytes, path);
    }
    decode_other(&bytes, path)
}

#[cfg(feature = "image-formats")]
fn decode_other(bytes: &[u8], path: &Path) -> Result<Raster> {
    use crate::{GrayImage, RgbImage};

    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let shape_err = |e: Error| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let data = rgb
            .pixels()
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect();
        RgbImage::new(w, h, data)
            .map(Raster::Rgb)
            .map_err(shape_err)
    } else {
        let gray = img.to_luma8();
        let data = gray.pixels().map(|p| p[0] as f64).collect();
        GrayImage::new(w, h, data)
            .map(Raster::Gray)
            .map_err(shape_err)
    }
}

#[cfg(not(feature = "image-formats"))]
fn decode_other(_bytes: &[u8], path: &Path) -> Result<Raster> {
    Err(Error::Decode {
        path: path.to_path_buf(),
        reason: "unsupported format (PNG/JPEG need the image-formats feature)".into(),
    })
}

/// Whether PNG/JPEG decoding was compiled in.
pub const fn has_image_formats() -> bool {
    cfg!(feature = "image-formats")
}

/// Anything that can be split: it has an id-independent label and optional group.
pub trait SplitItem {
    fn label(&self) -> Option<Label>;
    fn group(&self) -> Option<&str>;
}

impl SplitItem for SampleRecord {
    fn label(&self) -> Option<Label> {
        self.label
    }

    fn group(&self) -> Option<&str> {
        self.group.as_deref()
    }
}

impl SplitItem for FeatureVector {
    fn label(&self) -> Option<Label> {
        self.label
    }

    fn group(&self) -> Option<&str> {
        self.group.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded, label-stratified split.
///
/// The test side receives `round(test_fraction * n)` items, allotted to the
/// label strata by largest remainder; a stratum with at least two units keeps
/// at least one unit on each side. With `group_aware`, items sharing a group
/// form one unit and never straddle the split (the test side may then
/// overshoot its quota by part of a group). Both sides keep input order.
pub fn split<T: SplitItem + Clone>(
    items: &[T],
    test_fraction: f64,
    seed: u64,
    group_aware: bool,
) -> Result<Split<T>> {
    if items.is_empty() {
        return Err(Error::usage("cannot split an empty dataset"));
    }
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::usage(format!(
            "test fraction must be within [0, 1], got {test_fraction}"
        )));
    }

    // units in order of first appearance
    let mut units: Vec<Vec<usize>> = Vec::new();
    let mut by_group: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        match item.group().filter(|_| group_aware) {
            Some(g) => {
                let u = *by_group.entry(g).or_insert_with(|| {
                    units.push(Vec::new());
                    units.len() - 1
                });
                units[u].push(i);
            }
            None => units.push(vec![i]),
        }
    }

    let stratum_of = |u: &Vec<usize>| match items[u[0]].label() {
        Some(Label::Real) => 0,
        Some(Label::Fake) => 1,
        None => 2,
    };
    let mut strata: [Vec<usize>; 3] = Default::default();
    for (u, members) in units.iter().enumerate() {
        strata[stratum_of(members)].push(u);
    }
    let sizes: Vec<usize> = strata
        .iter()
        .map(|s| s.iter().map(|&u| units[u].len()).sum())
        .collect();

    let total_test = (test_fraction * items.len() as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&n| test_fraction * n as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut leftover = total_test.saturating_sub(quota.iter().sum());
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &s in &order {
        if leftover == 0 {
            break;
        }
        if quota[s] < sizes[s] && exact[s] > quota[s] as f64 {
            quota[s] += 1;
            leftover -= 1;
        }
    }
    for s in 0..3 {
        let n_units = strata[s].len();
        if n_units >= 2 && test_fraction > 0.0 && test_fraction < 1.0 {
            let largest = strata[s].iter().map(|&u| units[u].len()).max().unwrap_or(0);
            quota[s] = quota[s].clamp(1, sizes[s] - largest.min(sizes[s] - 1));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; items.len()];
    for (s, stratum) in strata.iter_mut().enumerate() {
        stratum.shuffle(&mut rng);
        let mut taken = 0;
        for &u in stratum.iter() {
            if taken >= quota[s] {
                break;
            }
            for &i in &units[u] {
                in_test[i] = true;
            }
            taken += units[u].len();
        }
    }

    let mut out = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (item, &t) in items.iter().zip(&in_test) {
        if t {
            out.test.push(item.clone());
        } else {
            out.train.push(item.clone());
        }
    }
    Ok(out)
}

/// Feature vectors of one length.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub target_len: usize,
    pub rows: Vec<FeatureVector>,
}

impl FeatureCache {
    pub fn new(target_len: usize, rows: Vec<FeatureVector>) -> Result<Self> {
        let cache = Self { target_len, rows };
        cache.validate()?;
        Ok(cache)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.rows {
            if r.len() != self.target_len {
                return Err(Error::usage(format!(
                    "row {:?} has {} values, cache length is {}",
                    r.id,
                    r.len(),
                    self.target_len
                )));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::usage(format!("duplicate id {:?} in cache", r.id)));
            }
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the cache atomically; reals carry 17 significant digits.
pub fn cache_write(cache: &FeatureCache, path: &Path) -> Result<()> {
    cache.validate()?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| csv_error(path, e);
    let mut header = vec!["id".to_string(), "label".into(), "group".into()];
    header.extend((0..cache.target_len).map(|i| format!("v{i}")));
    writer.write_record(&header).map_err(csv_err)?;
    for r in &cache.rows {
        let mut row = vec![
            r.id.clone(),
            label_field(r.label),
            r.group.clone().unwrap_or_default(),
        ];
        row.extend(r.values.iter().map(|&v| fmt_f64(v)));
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn cache_read(path: &Path) -> Result<FeatureCache> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" || &header[2] != "group" {
        return Err(parse_error(
            path,
            1,
            "cache header must start with id,label,group",
        ));
    }
    let target_len = header.len() - 3;
    for (i, name) in header.iter().skip(3).enumerate() {
        if name != format!("v{i}") {
            return Err(parse_error(
                path,
                1,
                format!("column {} should be v{i}, got {name:?}", i + 3),
            ));
        }
    }
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let label = parse_label(&row[1])
            .ok_or_else(|| parse_error(path, line, format!("bad label {:?}", &row[1])))?;
        let values = row
            .iter()
            .skip(3)
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(path, line, format!("bad value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let id = row[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(parse_error(path, line, format!("duplicate id {id:?}")));
        }
        rows.push(FeatureVector {
            id,
            label,
            group: non_empty(&row[2]),
            values,
        });
    }
    Ok(FeatureCache { target_len, rows })
}
