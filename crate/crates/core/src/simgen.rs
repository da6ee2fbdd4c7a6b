//! Stable linear dynamics and VAR/SVAR corpus generation.

use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, Array3};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::tensorfile::{NamedTensor, TensorFile};

/// Class of a simulated series. `Var` is class 0, `Svar` is class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeriesLabel {
    #[serde(rename = "VAR")]
    Var,
    #[serde(rename = "SVAR")]
    Svar,
}

impl SeriesLabel {
    pub fn class(self) -> usize {
        match self {
            SeriesLabel::Var => 0,
            SeriesLabel::Svar => 1,
        }
    }
}

/// Square dynamics matrix of a first-order VAR process.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: Array2<f64>,
    graph_id: u64,
}

impl TransitionMatrix {
    pub fn new(entries: Array2<f64>, graph_id: u64) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "transition matrix must be square and non-empty, got {:?}",
                entries.dim()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transition matrix entry".into()));
        }
        Ok(Self { entries, graph_id })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn graph_id(&self) -> u64 {
        self.graph_id
    }

    pub fn with_graph_id(mut self, graph_id: u64) -> Self {
        self.graph_id = graph_id;
        self
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.entries)
    }
}

/// Largest eigenvalue modulus, via a real Schur decomposition.
pub fn spectral_radius(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    dm.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Draws a standard-normal matrix and rescales it to spectral radius `target_radius`.
pub fn random_stable_transition(
    n: usize,
    target_radius: f64,
    rng: &mut impl rand::Rng,
) -> Result<TransitionMatrix> {
    if n == 0 {
        return Err(Error::InvalidConfig("node count must be at least 1".into()));
    }
    if !(target_radius > 0.0 && target_radius < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "spectral radius target {target_radius} outside (0, 1)"
        )));
    }
    loop {
        let raw = Array2::from_shape_simple_fn((n, n), || rng.sample::<f64, _>(StandardNormal));
        let rho = spectral_radius(&raw);
        // A nilpotent or all-zero draw cannot be rescaled.
        if !(rho > 1e-12) {
            continue;
        }
        let entries = raw * (target_radius / rho);
        return TransitionMatrix::new(entries, 0);
    }
}

fn check_noise(noise_std: f64) -> Result<()> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidConfig(format!("noise_std {noise_std} must be finite and >= 0")));
    }
    Ok(())
}

fn innovation(n: usize, noise_std: f64, rng: &mut impl rand::Rng) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || noise_std * rng.sample::<f64, _>(StandardNormal))
}

/// First-order VAR: `x_t = A x_{t-1} + e_t`, with `x_0 = e_0`. Returns channels x time.
pub fn generate_var(
    a: &TransitionMatrix,
    len: usize,
    noise_std: f64,
    rng: &mut impl rand::Rng,
) -> Result<Array2<f64>> {
    check_noise(noise_std)?;
    let x0 = innovation(a.n(), noise_std, rng);
    run_var(a, x0, len, noise_std, rng)
}

/// Same recurrence as [`generate_var`] but starting from a given state.
pub fn generate_var_from(
    a: &TransitionMatrix,
    x0: &Array1<f64>,
    len: usize,
    noise_std: f64,
    rng: &mut impl rand::Rng,
) -> Result<Array2<f64>> {
    check_noise(noise_std)?;
    if x0.len() != a.n() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries for a {}-node system",
            x0.len(),
            a.n()
        )));
    }
    run_var(a, x0.clone(), len, noise_std, rng)
}

fn run_var(
    a: &TransitionMatrix,
    x0: Array1<f64>,
    len: usize,
    noise_std: f64,
    rng: &mut impl rand::Rng,
) -> Result<Array2<f64>> {
    if len == 0 {
        return Err(Error::InvalidConfig("series length must be at least 1".into()));
    }
    let n = a.n();
    let mut out = Array2::zeros((n, len));
    out.column_mut(0).assign(&x0);
    let mut x = x0;
    for t in 1..len {
        let mut next = a.entries().dot(&x);
        next += &innovation(n, noise_std, rng);
        out.column_mut(t).assign(&next);
        x = next;
    }
    Ok(out)
}

fn check_rate(rate: usize) -> Result<()> {
    if rate < 1 {
        return Err(Error::InvalidConfig("undersampling rate must be at least 1".into()));
    }
    Ok(())
}

fn decimate(full: Array2<f64>, rate: usize) -> Array2<f64> {
    if rate == 1 {
        return full;
    }
    full.slice(s![.., ..;rate]).to_owned()
}

/// VAR of length `rate * len` keeping every `rate`-th column (starting at column 0).
pub fn generate_svar(
    a: &TransitionMatrix,
    len: usize,
    rate: usize,
    noise_std: f64,
    rng: &mut impl rand::Rng,
) -> Result<Array2<f64>> {
    check_rate(rate)?;
    let full = generate_var(a, len * rate, noise_std, rng)?;
    Ok(decimate(full, rate))
}

pub fn generate_svar_from(
    a: &TransitionMatrix,
    x0: &Array1<f64>,
    len: usize,
    rate: usize,
    noise_std: f64,
    rng: &mut impl rand::Rng,
) -> Result<Array2<f64>> {
    check_rate(rate)?;
    let full = generate_var_from(a, x0, len * rate, noise_std, rng)?;
    Ok(decimate(full, rate))
}

/// One simulated series, or a contiguous time segment of one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSeries {
    /// channels x time
    pub values: Array2<f64>,
    pub label: SeriesLabel,
    pub graph_id: u64,
    pub seed: u64,
    /// Start column of this segment within the generated series.
    pub offset: usize,
}

impl SimSeries {
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SimCorpusConfig {
    pub n_nodes: usize,
    pub pretrain_series: usize,
    pub pretrain_length: usize,
    /// train / val / test lengths along time
    pub pretrain_split: [usize; 3],
    pub n_graphs_downstream: usize,
    pub samples_per_graph: usize,
    pub downstream_length: usize,
    /// train / val / test sample counts
    pub downstream_split: [usize; 3],
    pub noise_std: f64,
    pub spectral_radius_target: f64,
    pub svar_rate: usize,
    pub master_seed: u64,
}

impl Default for SimCorpusConfig {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            pretrain_series: 50,
            pretrain_length: 20_000,
            pretrain_split: [14_000, 4_000, 2_000],
            n_graphs_downstream: 400,
            samples_per_graph: 5,
            downstream_length: 4_000,
            downstream_split: [1_600, 200, 200],
            noise_std: 1.0,
            spectral_radius_target: 0.8,
            svar_rate: 2,
            master_seed: 0,
        }
    }
}

impl SimCorpusConfig {
    /// Small corpus that trains in minutes on one CPU core.
    pub fn desk() -> Self {
        Self {
            pretrain_series: 5,
            pretrain_length: 2_000,
            pretrain_split: [1_400, 400, 200],
            downstream_length: 200,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_nodes == 0 {
            return bad("n_nodes must be at least 1".into());
        }
        if self.pretrain_split.iter().sum::<usize>() != self.pretrain_length {
            return bad(format!(
                "pretrain_split {:?} does not sum to pretrain_length {}",
                self.pretrain_split, self.pretrain_length
            ));
        }
        if self.pretrain_split.contains(&0) {
            return bad("pretrain split segments must be non-empty".into());
        }
        let total = self.n_graphs_downstream * self.samples_per_graph;
        if self.downstream_split.iter().sum::<usize>() != total {
            return bad(format!(
                "downstream_split {:?} does not sum to {} graphs x {} samples = {total}",
                self.downstream_split, self.n_graphs_downstream, self.samples_per_graph
            ));
        }
        if self.samples_per_graph == 0 {
            return bad("samples_per_graph must be at least 1".into());
        }
        if self
            .downstream_split
            .iter()
            .any(|n| n % self.samples_per_graph != 0)
        {
            return bad(format!(
                "downstream_split {:?} must be multiples of samples_per_graph {} to keep splits graph-disjoint",
                self.downstream_split, self.samples_per_graph
            ));
        }
        if self.downstream_length == 0 {
            return bad("downstream_length must be at least 1".into());
        }
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return bad(format!("noise_std {} must be > 0", self.noise_std));
        }
        if !(self.spectral_radius_target > 0.0 && self.spectral_radius_target < 1.0) {
            return bad(format!(
                "spectral_radius_target {} outside (0, 1)",
                self.spectral_radius_target
            ));
        }
        check_rate(self.svar_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Splits<T> {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Vec<T>)> {
        [("train", &self.train), ("val", &self.val), ("test", &self.test)].into_iter()
    }
}

pub type PretrainCorpus = Splits<SimSeries>;
pub type DownstreamCorpus = Splits<SimSeries>;

fn graph_transition(cfg: &SimCorpusConfig, root: u64, index: usize) -> Result<(u64, TransitionMatrix)> {
    let graph_seed = seed::derive_indexed(root, "graph", index as u64);
    let a = random_stable_transition(cfg.n_nodes, cfg.spectral_radius_target, &mut seed::rng(graph_seed))?
        .with_graph_id(index as u64);
    Ok((graph_seed, a))
}

/// The transition matrix behind each pre-training series, in series order.
pub fn pretrain_transitions(cfg: &SimCorpusConfig) -> Result<Vec<TransitionMatrix>> {
    cfg.validate()?;
    let root = seed::derive(cfg.master_seed, "pretrain");
    (0..cfg.pretrain_series)
        .map(|i| graph_transition(cfg, root, i).map(|(_, a)| a))
        .collect()
}

/// The transition matrix of each downstream graph, in graph order.
pub fn downstream_transitions(cfg: &SimCorpusConfig) -> Result<Vec<TransitionMatrix>> {
    cfg.validate()?;
    let root = seed::derive(cfg.master_seed, "downstream");
    (0..cfg.n_graphs_downstream)
        .map(|g| graph_transition(cfg, root, g).map(|(_, a)| a))
        .collect()
}

/// VAR series, each from its own graph, cut contiguously along time into train/val/test.
pub fn build_pretrain_corpus(cfg: &SimCorpusConfig) -> Result<PretrainCorpus> {
    cfg.validate()?;
    let root = seed::derive(cfg.master_seed, "pretrain");
    let full: Vec<(u64, u64, Array2<f64>)> = (0..cfg.pretrain_series)
        .into_par_iter()
        .map(|i| {
            let (graph_seed, a) = graph_transition(cfg, root, i)?;
            let series_seed = seed::derive(graph_seed, "series");
            let values = generate_var(&a, cfg.pretrain_length, cfg.noise_std, &mut seed::rng(series_seed))?;
            Ok((i as u64, series_seed, values))
        })
        .collect::<Result<_>>()?;

    let [n_train, n_val, _] = cfg.pretrain_split;
    let bounds = [(0, n_train), (n_train, n_train + n_val), (n_train + n_val, cfg.pretrain_length)];
    let cut = |(lo, hi): (usize, usize)| -> Vec<SimSeries> {
        full.iter()
            .map(|(gid, sd, v)| SimSeries {
                values: v.slice(s![.., lo..hi]).to_owned(),
                label: SeriesLabel::Var,
                graph_id: *gid,
                seed: *sd,
                offset: lo,
            })
            .collect()
    };
    Ok(Splits {
        train: cut(bounds[0]),
        val: cut(bounds[1]),
        test: cut(bounds[2]),
    })
}

/// Labelled VAR/SVAR series. Even graphs yield VAR samples, odd graphs SVAR;
/// graphs are assigned to splits in contiguous blocks so no graph spans two splits.
pub fn build_downstream_corpus(cfg: &SimCorpusConfig) -> Result<DownstreamCorpus> {
    cfg.validate()?;
    let root = seed::derive(cfg.master_seed, "downstream");
    let per_graph: Vec<Vec<SimSeries>> = (0..cfg.n_graphs_downstream)
        .into_par_iter()
        .map(|g| {
            let (graph_seed, a) = graph_transition(cfg, root, g)?;
            let label = if g % 2 == 0 { SeriesLabel::Var } else { SeriesLabel::Svar };
            (0..cfg.samples_per_graph)
                .map(|k| {
                    let sample_seed = seed::derive_indexed(graph_seed, "sample", k as u64);
                    let mut srng = seed::rng(sample_seed);
                    let values = match label {
                        SeriesLabel::Var => generate_var(&a, cfg.downstream_length, cfg.noise_std, &mut srng)?,
                        SeriesLabel::Svar => generate_svar(
                            &a,
                            cfg.downstream_length,
                            cfg.svar_rate,
                            cfg.noise_std,
                            &mut srng,
                        )?,
                    };
                    Ok(SimSeries {
                        values,
                        label,
                        graph_id: g as u64,
                        seed: sample_seed,
                        offset: 0,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let graphs = |n: usize| n / cfg.samples_per_graph;
    let [tr, va, _] = cfg.downstream_split;
    let mut it = per_graph.into_iter();
    let train = it.by_ref().take(graphs(tr)).flatten().collect();
    let val = it.by_ref().take(graphs(va)).flatten().collect();
    let test = it.flatten().collect();
    Ok(Splits { train, val, test })
}

// ---------------------------------------------------------------------------
// On-disk corpus

pub const CORPUS_KIND: &str = "stdim-sim-corpus";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeriesMeta {
    pub graph_id: u64,
    pub seed: u64,
    pub label: SeriesLabel,
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplitManifest {
    pub name: String,
    pub file: String,
    /// series x channels x time
    pub shape: [usize; 3],
    pub n_var: usize,
    pub n_svar: usize,
    pub series: Vec<SeriesMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusManifest {
    pub kind: String,
    pub format_version: u32,
    pub config: SimCorpusConfig,
    pub splits: Vec<SplitManifest>,
}

/// Both simulated corpora, as written by [`write_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimCorpus {
    pub config: SimCorpusConfig,
    pub pretrain: PretrainCorpus,
    pub downstream: DownstreamCorpus,
}

impl SimCorpus {
    pub fn generate(cfg: &SimCorpusConfig) -> Result<Self> {
        Ok(Self {
            config: cfg.clone(),
            pretrain: build_pretrain_corpus(cfg)?,
            downstream: build_downstream_corpus(cfg)?,
        })
    }
}

fn stack(series: &[SimSeries], n_nodes: usize) -> Result<Array3<f64>> {
    let len = series.first().map_or(0, SimSeries::len);
    let mut out = Array3::zeros((series.len(), n_nodes, len));
    for (i, s) in series.iter().enumerate() {
        if s.values.dim() != (n_nodes, len) {
            return Err(Error::Dimension(format!(
                "series {i} has shape {:?}, expected ({n_nodes}, {len})",
                s.values.dim()
            )));
        }
        out.slice_mut(s![i, .., ..]).assign(&s.values);
    }
    Ok(out)
}

/// Writes one tensor file per split plus `manifest.json`.
pub fn write_corpus(dir: impl AsRef<Path>, corpus: &SimCorpus) -> Result<CorpusManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut splits = Vec::new();
    let groups = [("pretrain", &corpus.pretrain), ("downstream", &corpus.downstream)];
    for (group, sp) in groups {
        for (part, series) in sp.iter() {
            let name = format!("{group}_{part}");
            let file = format!("{name}.tensors");
            let values = stack(series, corpus.config.n_nodes)?;
            let shape = [values.dim().0, values.dim().1, values.dim().2];
            let mut tf = TensorFile::new(serde_json::json!({ "kind": CORPUS_KIND, "split": name }));
            tf.push(NamedTensor::new("values", shape.to_vec(), values.into_raw_vec_and_offset().0)?);
            tf.save(dir.join(&file))?;
            let count = |l| series.iter().filter(|s| s.label == l).count();
            splits.push(SplitManifest {
                name,
                file,
                shape,
                n_var: count(SeriesLabel::Var),
                n_svar: count(SeriesLabel::Svar),
                series: series
                    .iter()
                    .map(|s| SeriesMeta {
                        graph_id: s.graph_id,
                        seed: s.seed,
                        label: s.label,
                        offset: s.offset,
                    })
                    .collect(),
            });
        }
    }
    let manifest = CorpusManifest {
        kind: CORPUS_KIND.into(),
        format_version: 1,
        config: corpus.config.clone(),
        splits,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_corpus(dir: impl AsRef<Path>) -> Result<SimCorpus> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if manifest.kind != CORPUS_KIND {
        return Err(Error::Schema(format!("{} is not a simulated corpus manifest", path.display())));
    }
    let load = |name: &str| -> Result<Vec<SimSeries>> {
        let sm = manifest
            .splits
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Schema(format!("manifest lacks split `{name}`")))?;
        let tf = TensorFile::load(dir.join(&sm.file))?;
        let t = tf
            .get("values")
            .ok_or_else(|| Error::MissingTensor(format!("{}: values", sm.file)))?;
        if t.shape != sm.shape.to_vec() || sm.series.len() != sm.shape[0] {
            return Err(Error::Schema(format!(
                "split `{name}`: tensor shape {:?} disagrees with manifest {:?} / {} series",
                t.shape,
                sm.shape,
                sm.series.len()
            )));
        }
        let arr = Array3::from_shape_vec(sm.shape, t.data.clone())
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Ok(sm
            .series
            .iter()
            .enumerate()
            .map(|(i, m)| SimSeries {
                values: arr.slice(s![i, .., ..]).to_owned(),
                label: m.label,
                graph_id: m.graph_id,
                seed: m.seed,
                offset: m.offset,
            })
            .collect())
    };
    Ok(SimCorpus {
        config: manifest.config.clone(),
        pretrain: Splits {
            train: load("pretrain_train")?,
            val: load("pretrain_val")?,
            test: load("pretrain_test")?,
        },
        downstream: Splits {
            train: load("downstream_train")?,
            val: load("downstream_val")?,
            test: load("downstream_test")?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_by_one_radius_is_the_absolute_entry() {
        for seed in 0..20 {
            let a = random_stable_transition(1, 0.37, &mut seed::rng(seed)).unwrap();
            assert!((a.entries()[[0, 0]].abs() - 0.37).abs() < 1e-15);
        }
    }

    #[test]
    fn rescaling_hits_the_target() {
        let mut rng = seed::rng(3);
        for n in [2, 5, 10, 17] {
            let a = random_stable_transition(n, 0.8, &mut rng).unwrap();
            assert!((a.spectral_radius() - 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn target_outside_unit_interval_is_rejected() {
        let mut rng = seed::rng(0);
        for bad in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                random_stable_transition(4, bad, &mut rng),
                Err(Error::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn white_noise_has_unit_variance() {
        let a = TransitionMatrix::new(Array2::zeros((10, 10)), 0).unwrap();
        let x = generate_var(&a, 10_000, 1.0, &mut seed::rng(11)).unwrap();
        for row in x.rows() {
            let var = row.var(1.0);
            assert!((var - 1.0).abs() < 0.05, "variance {var}");
        }
    }

    #[test]
    fn noiseless_decay_is_geometric() {
        let a = TransitionMatrix::new(Array2::eye(3) * 0.5, 0).unwrap();
        let v = array![1.0, -2.0, 4.0];
        let x = generate_var_from(&a, &v, 12, 0.0, &mut seed::rng(0)).unwrap();
        for t in 0..12 {
            let expect = &v * 0.5f64.powi(t as i32);
            assert_eq!(x.column(t), expect);
        }
        let y = generate_svar_from(&a, &v, 6, 2, 0.0, &mut seed::rng(0)).unwrap();
        for t in 0..6 {
            let expect = &v * 0.25f64.powi(t as i32);
            assert_eq!(y.column(t), expect);
        }
    }

    #[test]
    fn negative_noise_and_zero_rate_are_config_errors() {
        let a = TransitionMatrix::new(Array2::eye(2) * 0.5, 0).unwrap();
        assert!(matches!(generate_var(&a, 5, -1.0, &mut seed::rng(0)), Err(Error::InvalidConfig(_))));
        assert!(matches!(generate_svar(&a, 5, 0, 1.0, &mut seed::rng(0)), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn config_validation_catches_bad_splits() {
        let mut cfg = SimCorpusConfig::desk();
        cfg.pretrain_split = [1000, 400, 200];
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let mut cfg = SimCorpusConfig::desk();
        cfg.downstream_split = [241, 79, 80];
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        SimCorpusConfig::default().validate().unwrap();
        SimCorpusConfig::desk().validate().unwrap();
    }

    #[test]
    fn desk_pretrain_shapes_scale() {
        let cfg = SimCorpusConfig::desk();
        let c = build_pretrain_corpus(&cfg).unwrap();
        for (name, split, len) in [("train", &c.train, 1400), ("val", &c.val, 400), ("test", &c.test, 200)] {
            assert_eq!(split.len(), 5, "{name}");
            assert!(split.iter().all(|s| s.values.dim() == (10, len)));
        }
        // contiguous partition of [0, T)
        assert_eq!(c.train[0].offset, 0);
        assert_eq!(c.val[0].offset, 1400);
        assert_eq!(c.test[0].offset, 1800);
    }

    #[test]
    fn downstream_is_balanced_and_graph_disjoint() {
        let cfg = SimCorpusConfig::desk();
        let c = build_downstream_corpus(&cfg).unwrap();
        assert_eq!((c.train.len(), c.val.len(), c.test.len()), (1600, 200, 200));
        let ids = |v: &Vec<SimSeries>| v.iter().map(|s| s.graph_id).collect::<std::collections::HashSet<_>>();
        assert!(ids(&c.train).is_disjoint(&ids(&c.val)));
        assert!(ids(&c.train).is_disjoint(&ids(&c.test)));
        assert!(ids(&c.val).is_disjoint(&ids(&c.test)));
        for (_, split) in c.iter() {
            let var = split.iter().filter(|s| s.label == SeriesLabel::Var).count() as i64;
            let svar = split.len() as i64 - var;
            assert!((var - svar).abs() <= cfg.samples_per_graph as i64);
        }
    }
}
