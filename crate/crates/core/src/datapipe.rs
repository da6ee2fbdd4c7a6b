//! Windowing, contrastive batch sampling, normalization, and subject-dataset ingestion.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use ndarray::{s, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simgen::SimSeries;

/// Standard deviation below which a channel is treated as constant.
pub const ZSCORE_EPS: f64 = 1e-8;

/// A channels x width slice of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub values: Array2<f64>,
    pub series_id: usize,
    pub start: usize,
}

impl Window {
    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn channels(&self) -> usize {
        self.values.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSequence {
    pub windows: Vec<Window>,
    pub hop: usize,
    pub width: usize,
}

impl WindowSequence {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Windows stacked as (count, channels, width).
    pub fn to_tensor(&self) -> Array3<f64> {
        stack_windows(&self.windows)
    }
}

pub fn window_count(len: usize, width: usize, hop: usize) -> usize {
    if len < width || width == 0 || hop == 0 {
        0
    } else {
        (len - width) / hop + 1
    }
}

fn check_window_args(len: usize, width: usize, hop: usize) -> Result<()> {
    if width == 0 || hop == 0 {
        return Err(Error::InvalidConfig(format!("width {width} and hop {hop} must be positive")));
    }
    if len < width {
        return Err(Error::EmptySequence(format!(
            "series of length {len} is shorter than window width {width}"
        )));
    }
    Ok(())
}

pub fn slide_windows(series: &Array2<f64>, width: usize, hop: usize) -> Result<WindowSequence> {
    slide_windows_of(0, series.view(), width, hop)
}

pub fn slide_windows_of(
    series_id: usize,
    series: ArrayView2<f64>,
    width: usize,
    hop: usize,
) -> Result<WindowSequence> {
    check_window_args(series.ncols(), width, hop)?;
    let windows = (0..window_count(series.ncols(), width, hop))
        .map(|i| {
            let start = i * hop;
            Window {
                values: series.slice(s![.., start..start + width]).to_owned(),
                series_id,
                start,
            }
        })
        .collect();
    Ok(WindowSequence { windows, hop, width })
}

/// Sliding windows of one series stacked as (count, channels, width).
pub fn window_tensor(series: ArrayView2<f64>, width: usize, hop: usize) -> Result<Array3<f64>> {
    check_window_args(series.ncols(), width, hop)?;
    let count = window_count(series.ncols(), width, hop);
    let mut out = Array3::zeros((count, series.nrows(), width));
    for i in 0..count {
        out.slice_mut(s![i, .., ..])
            .assign(&series.slice(s![.., i * hop..i * hop + width]));
    }
    Ok(out)
}

pub fn stack_windows(windows: &[Window]) -> Array3<f64> {
    let (c, w) = windows.first().map_or((0, 0), |w| w.values.dim());
    let mut out = Array3::zeros((windows.len(), c, w));
    for (i, win) in windows.iter().enumerate() {
        out.slice_mut(s![i, .., ..]).assign(&win.values);
    }
    out
}

/// Anchor windows at time t and their immediate successors at t + width.
/// For anchor i, every `positives[j]` with j != i serves as a negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveBatch {
    pub anchors: Vec<Window>,
    pub positives: Vec<Window>,
}

impl ContrastiveBatch {
    pub fn size(&self) -> usize {
        self.anchors.len()
    }

    /// Anchors followed by positives, stacked as (2B, channels, width).
    pub fn stacked(&self) -> Array3<f64> {
        let all: Vec<Window> = self.anchors.iter().chain(&self.positives).cloned().collect();
        stack_windows(&all)
    }
}

/// Samples `batch_size` distinct anchor positions uniformly over every segment that
/// can host a pair of consecutive non-overlapping windows. Pairs never cross segments.
pub fn sample_contrastive_batch(
    segments: &[ArrayView2<f64>],
    batch_size: usize,
    width: usize,
    rng: &mut impl rand::Rng,
) -> Result<ContrastiveBatch> {
    if batch_size < 2 {
        return Err(Error::InvalidConfig(format!("batch size {batch_size} must be at least 2")));
    }
    if width == 0 {
        return Err(Error::InvalidConfig("window width must be positive".into()));
    }
    // cumulative anchor-position counts per segment
    let mut cum = Vec::with_capacity(segments.len());
    let mut total = 0usize;
    for seg in segments {
        total += (seg.ncols() + 1).saturating_sub(2 * width);
        cum.push(total);
    }
    if total == 0 {
        return Err(Error::EmptySequence(format!(
            "no segment is long enough for two consecutive width-{width} windows"
        )));
    }
    if total < batch_size {
        return Err(Error::EmptySequence(format!(
            "only {total} anchor positions available for a batch of {batch_size}"
        )));
    }
    let mut seen = HashSet::with_capacity(batch_size);
    let mut anchors = Vec::with_capacity(batch_size);
    let mut positives = Vec::with_capacity(batch_size);
    while anchors.len() < batch_size {
        let u = rng.random_range(0..total);
        if !seen.insert(u) {
            continue;
        }
        let sid = cum.partition_point(|&c| c <= u);
        let start = u - if sid == 0 { 0 } else { cum[sid - 1] };
        let seg = &segments[sid];
        anchors.push(Window {
            values: seg.slice(s![.., start..start + width]).to_owned(),
            series_id: sid,
            start,
        });
        positives.push(Window {
            values: seg.slice(s![.., start + width..start + 2 * width]).to_owned(),
            series_id: sid,
            start: start + width,
        });
    }
    Ok(ContrastiveBatch { anchors, positives })
}

/// Per-channel (row) standardization; constant channels become zeros.
pub fn zscore_normalize(series: &Array2<f64>) -> Array2<f64> {
    let mut out = series.clone();
    for mut row in out.rows_mut() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > ZSCORE_EPS {
            row.mapv_inplace(|v| (v - mean) / std);
        } else {
            row.fill(0.0);
        }
    }
    out
}

/// A labelled multichannel series, the common currency of downstream training.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub id: String,
    /// Leakage group (graph id for simulations, subject index otherwise).
    pub group: u64,
    pub label: usize,
    /// channels x time
    pub values: Array2<f64>,
}

impl From<&SimSeries> for LabeledSeries {
    fn from(s: &SimSeries) -> Self {
        Self {
            id: format!("g{}-{:016x}", s.graph_id, s.seed),
            group: s.graph_id,
            label: s.label.class(),
            values: s.values.clone(),
        }
    }
}

impl From<&SubjectRecord> for LabeledSeries {
    fn from(r: &SubjectRecord) -> Self {
        Self {
            id: r.id.clone(),
            group: label_free_group(&r.id),
            label: r.label,
            values: r.values.clone(),
        }
    }
}

fn label_free_group(id: &str) -> u64 {
    id.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

// ---------------------------------------------------------------------------
// Subject datasets: manifest.json + one headerless CSV per subject

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub label: usize,
    /// components x time
    pub values: Array2<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SubjectEntry {
    pub id: String,
    /// CSV path relative to the manifest's directory
    pub file: String,
    pub label: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SubjectManifest {
    pub n_components: usize,
    pub subjects: Vec<SubjectEntry>,
    pub label_names: BTreeMap<String, usize>,
}

impl SubjectManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

fn read_subject_csv(id: &str, path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::SubjectFile {
        subject: id.to_string(),
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Schema(format!("subject `{id}`: {e}")))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Schema(format!("subject `{id}`: bad value `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Schema(format!("subject `{id}`: ragged rows")));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Schema(format!("subject `{id}`: {e}")))
}

/// Loads every subject listed in a manifest, validating component counts and labels.
pub fn load_subject_dataset(manifest_path: impl AsRef<Path>) -> Result<Vec<SubjectRecord>> {
    let manifest_path = manifest_path.as_ref();
    let manifest = SubjectManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let known: HashSet<usize> = manifest.label_names.values().copied().collect();
    let mut ids = HashSet::new();
    manifest
        .subjects
        .iter()
        .map(|entry| {
            if !known.contains(&entry.label) {
                return Err(Error::Schema(format!(
                    "subject `{}`: label {} not declared in label_names",
                    entry.id, entry.label
                )));
            }
            if !ids.insert(entry.id.as_str()) {
                return Err(Error::Schema(format!("duplicate subject id `{}`", entry.id)));
            }
            let values = read_subject_csv(&entry.id, &base.join(&entry.file))?;
            if values.nrows() != manifest.n_components {
                return Err(Error::Schema(format!(
                    "subject `{}`: {} rows, manifest declares {} components",
                    entry.id,
                    values.nrows(),
                    manifest.n_components
                )));
            }
            Ok(SubjectRecord {
                id: entry.id.clone(),
                label: entry.label,
                values,
            })
        })
        .collect()
}

/// Writes `manifest.json` and `subjects/<id>.csv` under `dir`; returns the manifest path.
pub fn save_subject_dataset(
    dir: impl AsRef<Path>,
    records: &[SubjectRecord],
    label_names: &BTreeMap<String, usize>,
) -> Result<std::path::PathBuf> {
    let dir = dir.as_ref();
    let sub = dir.join("subjects");
    std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    let n_components = records.first().map_or(0, |r| r.values.nrows());
    let mut subjects = Vec::with_capacity(records.len());
    for r in records {
        if r.values.nrows() != n_components {
            return Err(Error::Dimension(format!(
                "subject `{}` has {} components, expected {n_components}",
                r.id,
                r.values.nrows()
            )));
        }
        let file = format!("subjects/{}.csv", r.id);
        let mut text = String::new();
        for row in r.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            text.push_str(&line.join(","));
            text.push('\n');
        }
        let path = dir.join(&file);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        subjects.push(SubjectEntry {
            id: r.id.clone(),
            file,
            label: r.label,
        });
    }
    let manifest = SubjectManifest {
        n_components,
        subjects,
        label_names: label_names.clone(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;

    #[test]
    fn window_counts() {
        let x = Array2::<f64>::zeros((53, 140));
        assert_eq!(slide_windows(&x, 20, 10).unwrap().len(), 13);
        let x = Array2::<f64>::zeros((10, 20));
        for hop in [1, 5, 20, 100] {
            assert_eq!(slide_windows(&x, 20, hop).unwrap().len(), 1);
        }
        let x = Array2::<f64>::zeros((10, 4000));
        assert_eq!(slide_windows(&x, 20, 20).unwrap().len(), 200);
    }

    #[test]
    fn short_series_is_an_empty_sequence_error() {
        let x = Array2::<f64>::zeros((3, 19));
        assert!(matches!(slide_windows(&x, 20, 10), Err(Error::EmptySequence(_))));
    }

    #[test]
    fn windows_reference_contiguous_columns() {
        let x = Array2::from_shape_fn((2, 50), |(c, t)| (c * 100 + t) as f64);
        let seq = slide_windows(&x, 7, 3).unwrap();
        for (i, w) in seq.windows.iter().enumerate() {
            assert_eq!(w.start, i * 3);
            assert_eq!(w.values, x.slice(s![.., i * 3..i * 3 + 7]));
        }
        assert_eq!(window_tensor(x.view(), 7, 3).unwrap(), seq.to_tensor());
    }

    #[test]
    fn zscore_basic_cases() {
        let z = zscore_normalize(&array![[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]);
        let r = z.row(0);
        assert!(r.mean().unwrap().abs() < 1e-12);
        assert!((r.std(0.0) - 1.0).abs() < 1e-12);
        assert_eq!(z.row(1), array![0.0, 0.0, 0.0]);
    }

    #[test]
    fn contrastive_pairs_are_consecutive_and_within_series() {
        let segs: Vec<Array2<f64>> = (0..3)
            .map(|k| Array2::from_shape_fn((2, 60 + 10 * k), |(c, t)| (1000 * k + 100 * c + t) as f64))
            .collect();
        let views: Vec<_> = segs.iter().map(|s| s.view()).collect();
        let b = sample_contrastive_batch(&views, 8, 10, &mut seed::rng(5)).unwrap();
        assert_eq!(b.size(), 8);
        for (a, p) in b.anchors.iter().zip(&b.positives) {
            assert_eq!(a.series_id, p.series_id);
            assert_eq!(p.start, a.start + 10);
            assert_eq!(a.values[[0, 9]] + 1.0, p.values[[0, 0]]);
        }
        let again = sample_contrastive_batch(&views, 8, 10, &mut seed::rng(5)).unwrap();
        assert_eq!(b, again);
    }

    #[test]
    fn too_short_corpus_cannot_host_pairs() {
        let seg = Array2::<f64>::zeros((2, 39));
        let err = sample_contrastive_batch(&[seg.view()], 2, 20, &mut seed::rng(0)).unwrap_err();
        assert!(matches!(err, Error::EmptySequence(_)));
        assert!(sample_contrastive_batch(&[seg.view()], 1, 5, &mut seed::rng(0)).is_err());
    }
}
