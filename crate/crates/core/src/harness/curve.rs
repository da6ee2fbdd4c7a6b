use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datapipe::{load_subject_dataset, LabeledSeries};
use crate::error::{Error, Result};
use crate::model::Checkpoint;
use crate::seed;
use crate::simgen::read_corpus;
use crate::training::{prepare_series, train_downstream, DownstreamConfig, MetricKind, PreparedSeries, TrainMode};

/// Where a learning curve reads its series from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// A simulated corpus directory: the downstream train and validation splits form
    /// the pool, the test split is the held-out set.
    Sim { dir: PathBuf },
    /// A subject manifest: a stratified held-out set of `test_size` subjects is
    /// drawn once, the rest form the pool.
    Subjects { manifest: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveConfig {
    pub modes: Vec<TrainMode>,
    /// Training series per class, ascending.
    pub train_sizes: Vec<usize>,
    pub n_trials: usize,
    /// Held-out series; 0 keeps the whole test split.
    pub test_size: usize,
    /// Validation series per class, redrawn from the pool for every cell.
    pub val_size: usize,
    pub metric: MetricKind,
    pub master_seed: u64,
    pub data: Option<DataSource>,
    pub downstream: DownstreamConfig,
    pub workers: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            modes: TrainMode::ALL.to_vec(),
            train_sizes: vec![10, 20, 40, 80, 160],
            n_trials: 10,
            test_size: 64,
            val_size: 16,
            metric: MetricKind::Accuracy,
            master_seed: 0,
            data: None,
            downstream: DownstreamConfig::default(),
            workers: 1,
        }
    }
}

impl CurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("no training modes".into()));
        }
        let unique: HashSet<_> = self.modes.iter().collect();
        if unique.len() != self.modes.len() {
            return Err(Error::InvalidConfig("duplicate training modes".into()));
        }
        if self.train_sizes.is_empty() || self.train_sizes[0] == 0 {
            return Err(Error::InvalidConfig("train sizes must be non-empty and positive".into()));
        }
        if self.train_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("train sizes must be strictly ascending".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        if self.val_size == 0 {
            return Err(Error::InvalidConfig("val_size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        self.downstream.hyper.validate()
    }

    pub fn n_cells(&self) -> usize {
        self.modes.len() * self.train_sizes.len() * self.n_trials
    }
}

/// One learning-curve cell: a trained model's held-out metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub mode: TrainMode,
    pub train_size: usize,
    pub trial: usize,
    pub metric: MetricKind,
    pub value: f64,
    pub seed: u64,
}

/// Everything measured in a cell beyond the reported value.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellDetail {
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub val_metric: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub config: CurveConfig,
    pub test_ids: Vec<String>,
    pub records: Vec<CurveRecord>,
    /// Aligned with `records`.
    pub details: Vec<CellDetail>,
}

fn by_class(items: &[PreparedSeries]) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in items.iter().enumerate() {
        out.entry(p.label).or_default().push(i);
    }
    out
}

/// Stratified split of `items` into `(held_out, rest)` with `n` held-out series in total.
fn stratified_holdout(items: Vec<PreparedSeries>, n: usize, rng: &mut seed::Rng) -> Result<(Vec<PreparedSeries>, Vec<PreparedSeries>)> {
    let classes = by_class(&items);
    let k = classes.len().max(1);
    let mut chosen = HashSet::new();
    for (c, (_, mut idx)) in classes.into_iter().enumerate() {
        let take = n / k + usize::from(c < n % k);
        if take > idx.len() {
            return Err(Error::InvalidConfig(format!("test size {n} exceeds available series")));
        }
        idx.shuffle(rng);
        chosen.extend(idx.into_iter().take(take));
    }
    let (mut held, mut rest) = (Vec::new(), Vec::new());
    for (i, p) in items.into_iter().enumerate() {
        if chosen.contains(&i) {
            held.push(p);
        } else {
            rest.push(p);
        }
    }
    Ok((held, rest))
}

/// Loads the pool and the fixed held-out set named by `cfg.data`.
pub fn load_curve_data(cfg: &CurveConfig) -> Result<(Vec<PreparedSeries>, Vec<PreparedSeries>)> {
    let width = cfg.downstream.encoder.width;
    let hop = cfg.downstream.hop;
    let mut rng = seed::sub_rng(cfg.master_seed, "curve/test");
    match &cfg.data {
        None => Err(Error::InvalidConfig("curve config names no data source".into())),
        Some(DataSource::Sim { dir }) => {
            let corpus = read_corpus(dir)?;
            let to_prepared = |v: &[crate::simgen::SimSeries]| {
                let labeled: Vec<LabeledSeries> = v.iter().map(LabeledSeries::from).collect();
                prepare_series(&labeled, width, hop)
            };
            let mut pool = to_prepared(&corpus.downstream.train)?;
            pool.extend(to_prepared(&corpus.downstream.val)?);
            let test = to_prepared(&corpus.downstream.test)?;
            let test = if cfg.test_size == 0 || cfg.test_size >= test.len() {
                test
            } else {
                stratified_holdout(test, cfg.test_size, &mut rng)?.0
            };
            Ok((pool, test))
        }
        Some(DataSource::Subjects { manifest }) => {
            let records = load_subject_dataset(manifest)?;
            let labeled: Vec<LabeledSeries> = records.iter().map(LabeledSeries::from).collect();
            let all = prepare_series(&labeled, width, hop)?;
            let (test, pool) = stratified_holdout(all, cfg.test_size, &mut rng)?;
            Ok((pool, test))
        }
    }
}

/// Seed that fixes the training and validation subset of `(size, trial)`; shared by
/// every mode so the regimes are compared on identical data.
pub fn subset_seed(master: u64, train_size: usize, trial: usize) -> u64 {
    let s = seed::derive_indexed(master, "curve/subset", train_size as u64);
    seed::derive_indexed(s, "trial", trial as u64)
}

/// Training seed of one `(mode, size, trial)` cell.
pub fn cell_seed(master: u64, mode: TrainMode, train_size: usize, trial: usize) -> u64 {
    let s = seed::derive(master, &format!("curve/cell/{mode}"));
    let s = seed::derive_indexed(s, "size", train_size as u64);
    seed::derive_indexed(s, "trial", trial as u64)
}

/// Stratified training and validation indices into `pool` for one `(size, trial)`.
pub fn resample(pool: &[PreparedSeries], per_class: usize, val_per_class: usize, seed_value: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = seed::rng(seed_value);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (label, mut idx) in by_class(pool) {
        if per_class + val_per_class > idx.len() {
            return Err(Error::InvalidConfig(format!(
                "{per_class} training + {val_per_class} validation series of class {label} requested, pool has {}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..per_class]);
        val.extend_from_slice(&idx[per_class..per_class + val_per_class]);
    }
    Ok((train, val))
}

fn run_cell(
    cfg: &CurveConfig,
    dcfg: &DownstreamConfig,
    pool: &[PreparedSeries],
    test: &[&PreparedSeries],
    pretrained: Option<&Checkpoint>,
    (mode, size, trial): (TrainMode, usize, usize),
) -> Result<(CurveRecord, CellDetail)> {
    let (train_idx, val_idx) = resample(pool, size, cfg.val_size, subset_seed(cfg.master_seed, size, trial))?;
    let train: Vec<&PreparedSeries> = train_idx.iter().map(|&i| &pool[i]).collect();
    let val: Vec<&PreparedSeries> = val_idx.iter().map(|&i| &pool[i]).collect();
    let seed_value = cell_seed(cfg.master_seed, mode, size, trial);
    let mut dcfg = dcfg.clone();
    dcfg.hyper.seed = seed_value;
    dcfg.metric = cfg.metric;
    let init = if mode.needs_pretrained() { pretrained } else { None };
    let out = train_downstream(mode, init, &train, &val, test, &dcfg)?;
    log::info!(
        "curve cell {mode} size {size} trial {trial}: acc {:.3} auc {:?}",
        out.test.accuracy,
        out.test.auc
    );
    let record = CurveRecord {
        mode,
        train_size: size,
        trial,
        metric: cfg.metric,
        value: out.test.get(cfg.metric),
        seed: seed_value,
    };
    let detail = CellDetail {
        accuracy: out.test.accuracy,
        auc: out.test.auc,
        val_metric: out.val.get(cfg.metric),
        best_epoch: out.history.best_epoch,
        epochs_run: out.history.epochs.len(),
        train_ids: train.iter().map(|p| p.id.clone()).collect(),
        val_ids: val.iter().map(|p| p.id.clone()).collect(),
    };
    Ok((record, detail))
}

/// Runs every `(mode, size, trial)` cell on already prepared data.
///
/// Cells run on a pool of `cfg.workers` threads; results are ordered by
/// `(mode, size, trial)` so the output does not depend on scheduling.
pub fn run_learning_curve_on(
    cfg: &CurveConfig,
    pool: &[PreparedSeries],
    test: &[PreparedSeries],
    pretrained: Option<&Checkpoint>,
) -> Result<CurveResult> {
    cfg.validate()?;
    if cfg.modes.iter().any(|m| m.needs_pretrained()) && pretrained.is_none() {
        return Err(Error::InvalidConfig("fpt and ufpt cells need a pre-trained checkpoint".into()));
    }
    let test_ids: Vec<String> = test.iter().map(|p| p.id.clone()).collect();
    let held: HashSet<&str> = test_ids.iter().map(String::as_str).collect();
    if let Some(p) = pool.iter().find(|p| held.contains(p.id.as_str())) {
        return Err(Error::Schema(format!("series `{}` is in both the pool and the test set", p.id)));
    }
    let mut dcfg = cfg.downstream.clone();
    if let Some(ck) = pretrained {
        // from-scratch cells use the same architecture as the pre-trained encoder
        dcfg.encoder = ck.encoder.config.clone();
    }
    let mut cells = Vec::with_capacity(cfg.n_cells());
    for &mode in &cfg.modes {
        for &size in &cfg.train_sizes {
            for trial in 0..cfg.n_trials {
                cells.push((mode, size, trial));
            }
        }
    }
    let test_refs: Vec<&PreparedSeries> = test.iter().collect();
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut results = threads.install(|| {
        cells
            .par_iter()
            .map(|&cell| run_cell(cfg, &dcfg, pool, &test_refs, pretrained, cell))
            .collect::<Result<Vec<_>>>()
    })?;
    let rank = |m: TrainMode| cfg.modes.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    results.sort_by_key(|(r, _)| (rank(r.mode), r.train_size, r.trial));
    let (records, details) = results.into_iter().unzip();
    Ok(CurveResult {
        config: cfg.clone(),
        test_ids,
        records,
        details,
    })
}

/// Loads the data named in `cfg` and runs the learning curve.
pub fn run_learning_curve(cfg: &CurveConfig, pretrained: Option<&Checkpoint>) -> Result<CurveResult> {
    cfg.validate()?;
    let (pool, test) = load_curve_data(cfg)?;
    run_learning_curve_on(cfg, &pool, &test, pretrained)
}
