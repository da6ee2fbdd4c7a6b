//! Command implementations behind the `stdim` binary. Each returns a JSON summary
//! that the binary prints on stdout.

use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use super::{emit_report, run_learning_curve, summarize, CurveConfig};
use crate::datapipe::{sample_contrastive_batch, LabeledSeries};
use crate::error::{Error, Result};
use crate::model::{
    zeros_like, Checkpoint, ClassifierConfig, ConvSpec, CriticHeads, Encoder, EncoderConfig, Params,
    SequenceClassifier,
};
use crate::objective::{infonce_loss, infonce_loss_and_grad, stdim_loss, stdim_loss_and_grads, ScoreMatrix};
use crate::seed;
use crate::simgen::{read_corpus, write_corpus, SimCorpus, SimCorpusConfig};
use crate::training::{
    downstream_loss_and_grads, evaluate_contrastive, gradient_check, normalized_segments, prepare_series, pretrain,
    train_downstream, DownstreamConfig, GradCheckReport, PreparedSeries, PretrainConfig, TrainMode,
};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    /// Overrides the seed in the command's configuration.
    pub seed: Option<u64>,
    /// Worker threads; overrides the configuration where one exists.
    pub workers: Option<usize>,
}

pub fn read_json_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = workers.unwrap_or(1);
    if n == 0 {
        return Err(Error::InvalidConfig("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

pub fn simgen(config: &Path, out: &Path, opts: &GlobalOptions) -> Result<Value> {
    let mut cfg: SimCorpusConfig = read_json_config(config)?;
    if let Some(s) = opts.seed {
        cfg.master_seed = s;
    }
    let corpus = worker_pool(opts.workers)?.install(|| SimCorpus::generate(&cfg))?;
    let manifest = write_corpus(out, &corpus)?;
    Ok(json!({
        "command": "simgen",
        "out": out,
        "splits": manifest.splits.iter().map(|s| json!({
            "name": s.name, "shape": s.shape, "n_var": s.n_var, "n_svar": s.n_svar,
        })).collect::<Vec<_>>(),
    }))
}

fn history_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("history.jsonl")
}

pub fn pretrain_cmd(data: &Path, config: &Path, out: &Path, opts: &GlobalOptions) -> Result<Value> {
    let mut cfg: PretrainConfig = read_json_config(config)?;
    if let Some(s) = opts.seed {
        cfg.hyper.seed = s;
    }
    let corpus = read_corpus(data)?;
    let train = normalized_segments(&corpus.pretrain.train);
    let val = normalized_segments(&corpus.pretrain.val);
    let outcome = pretrain(&cfg, &train, &val)?;
    outcome.checkpoint.save(out)?;
    let hist = history_path(out);
    outcome.history.write_jsonl(&hist)?;
    let best = outcome.history.best().cloned();
    Ok(json!({
        "command": "pretrain",
        "checkpoint": out,
        "history": hist,
        "epochs": outcome.history.epochs.len(),
        "best": best,
    }))
}

pub fn eval_contrastive(ckpt: &Path, data: &Path, opts: &GlobalOptions) -> Result<Value> {
    let ck = Checkpoint::load(ckpt)?;
    let heads = ck
        .heads
        .as_ref()
        .ok_or_else(|| Error::MissingTensor("checkpoint has no critic heads".into()))?;
    let corpus = read_corpus(data)?;
    let test = normalized_segments(&corpus.pretrain.test);
    let eval = evaluate_contrastive(&ck.encoder, heads, &test, 32, 16, opts.seed.unwrap_or(0))?;
    Ok(json!({ "command": "eval-contrastive", "split": "pretrain_test", "result": eval }))
}

fn refs(v: &[PreparedSeries]) -> Vec<&PreparedSeries> {
    v.iter().collect()
}

fn prepared(series: &[crate::simgen::SimSeries], cfg: &DownstreamConfig) -> Result<Vec<PreparedSeries>> {
    let labeled: Vec<LabeledSeries> = series.iter().map(LabeledSeries::from).collect();
    prepare_series(&labeled, cfg.encoder.width, cfg.hop)
}

pub fn downstream(
    mode: TrainMode,
    ckpt: Option<&Path>,
    data: &Path,
    out: &Path,
    config: Option<&Path>,
    opts: &GlobalOptions,
) -> Result<Value> {
    let mut cfg: DownstreamConfig = match config {
        Some(p) => read_json_config(p)?,
        None => DownstreamConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.hyper.seed = s;
    }
    let init = ckpt.map(Checkpoint::load).transpose()?;
    if let Some(ck) = &init {
        cfg.encoder = ck.encoder.config.clone();
    }
    let corpus = read_corpus(data)?;
    let train = prepared(&corpus.downstream.train, &cfg)?;
    let val = prepared(&corpus.downstream.val, &cfg)?;
    let test = prepared(&corpus.downstream.test, &cfg)?;
    let outcome = train_downstream(mode, init.as_ref(), &refs(&train), &refs(&val), &refs(&test), &cfg)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    outcome.checkpoint.save(out.join("checkpoint.tensors"))?;
    outcome.history.write_jsonl(out.join("history.jsonl"))?;
    let summary = json!({
        "command": "downstream",
        "mode": mode,
        "best_epoch": outcome.history.best_epoch,
        "epochs": outcome.history.epochs.len(),
        "val": outcome.val,
        "test": outcome.test,
    });
    let path = out.join("metrics.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary).map_err(|e| Error::json(&path, e))?)
        .map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

pub fn curve(config: &Path, ckpt: Option<&Path>, out: &Path, opts: &GlobalOptions) -> Result<Value> {
    let mut cfg: CurveConfig = read_json_config(config)?;
    if let Some(s) = opts.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    let init = ckpt.map(Checkpoint::load).transpose()?;
    let result = run_learning_curve(&cfg, init.as_ref())?;
    let files = emit_report(&result, out)?;
    let cells: Vec<Value> = summarize(&result)
        .iter()
        .map(|c| json!({"mode": c.mode, "train_size": c.train_size, "mean": c.value.mean, "std": c.value.std}))
        .collect();
    Ok(json!({
        "command": "curve",
        "records": result.records.len(),
        "csv": files.curve_csv,
        "summary": cells,
    }))
}

/// Score matrix as a parameter set, for finite-difference checks.
#[derive(Clone)]
struct Scores(Array2<f64>);

impl Params for Scores {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        crate::model::visit_array(&crate::model::join(prefix, "scores"), &self.0, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        crate::model::visit_array_mut(&crate::model::join(prefix, "scores"), &mut self.0, f);
    }
}

/// Two channels, width 8, two convolutions; small enough for exhaustive
/// finite differences.
pub fn tiny_encoder_config() -> EncoderConfig {
    EncoderConfig {
        in_channels: 2,
        width: 8,
        conv_specs: vec![
            ConvSpec {
                out_channels: 3,
                kernel: 3,
                stride: 1,
            },
            ConvSpec {
                out_channels: 4,
                kernel: 2,
                stride: 1,
            },
        ],
        latent_dim: 6,
        spatial_tap_layer: 2,
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GradCheckEntry {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub worst: String,
    pub analytic: f64,
    pub numeric: f64,
    pub coords: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn entry(name: &'static str, r: GradCheckReport, tolerance: f64) -> GradCheckEntry {
    GradCheckEntry {
        name,
        max_rel_error: r.max_rel_error,
        passed: r.max_rel_error < tolerance,
        worst: r.worst,
        analytic: r.worst_pair.0,
        numeric: r.worst_pair.1,
        coords: r.coords,
        tolerance,
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut seed::Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

/// Central-difference checks of the contrastive and classification gradients.
pub fn gradcheck_suite(seed_value: u64) -> Result<Vec<GradCheckEntry>> {
    let mut rng = seed::sub_rng(seed_value, "gradcheck");
    let mut out = Vec::new();

    let scores = Scores(normal_matrix(6, 6, &mut rng) * 2.0);
    let (_, g) = infonce_loss_and_grad(&ScoreMatrix::new(scores.0.clone())?);
    let r = gradient_check(
        &scores,
        &Scores(g),
        |s| infonce_loss(&ScoreMatrix::new(s.0.clone()).expect("finite scores")),
        1e-5,
    );
    out.push(entry("infonce_scores", r, 1e-5));

    let cfg = tiny_encoder_config();
    let mut encoder = Encoder::new(cfg.clone(), &mut rng)?;
    // zero biases put some units exactly on a ReLU kink; move off it
    for conv in &mut encoder.convs {
        conv.bias.mapv_inplace(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            0.1 * v
        });
    }
    let heads = CriticHeads::new(encoder.latent_dim(), encoder.spatial_dim(), 5, &mut rng);
    let segment = normal_matrix(2, 64, &mut rng);
    let batch = sample_contrastive_batch(&[segment.view()], 4, cfg.width, &mut rng)?;
    let mut g_enc = zeros_like(&encoder);
    let mut g_heads = zeros_like(&heads);
    stdim_loss_and_grads(&batch, &encoder, &heads, &mut g_enc, &mut g_heads)?;
    let r = gradient_check(
        &encoder,
        &g_enc,
        |e| stdim_loss(&batch, e, &heads).expect("valid batch").total,
        1e-6,
    );
    out.push(entry("stdim_encoder", r, 1e-3));
    let r = gradient_check(
        &heads,
        &g_heads,
        |h| stdim_loss(&batch, &encoder, h).expect("valid batch").total,
        1e-6,
    );
    out.push(entry("stdim_heads", r, 1e-3));

    let clf = SequenceClassifier::new(
        ClassifierConfig {
            input_dim: encoder.latent_dim(),
            recurrent_hidden: 3,
            head_hidden: 4,
            n_classes: 2,
        },
        &mut rng,
    )?;
    let series: Vec<PreparedSeries> = (0..3)
        .map(|i| {
            let values = Array3::from_shape_fn((3, 2, cfg.width), |_| {
                StandardNormal.sample(&mut rng)
            });
            PreparedSeries {
                id: format!("s{i}"),
                group: i,
                label: (i % 2) as usize,
                windows: values,
            }
        })
        .collect();
    let refs: Vec<&PreparedSeries> = series.iter().collect();
    let (_, g_enc, g_clf) = downstream_loss_and_grads(TrainMode::Ufpt, &encoder, &clf, &refs)?;
    let loss_of = |e: &Encoder, c: &SequenceClassifier| {
        downstream_loss_and_grads(TrainMode::Fpt, e, c, &refs).expect("valid batch").0
    };
    let r = gradient_check(&clf, &g_clf, |c| loss_of(&encoder, c), 1e-6);
    out.push(entry("classifier", r, 1e-3));
    let r = gradient_check(&encoder, &g_enc, |e| loss_of(e, &clf), 1e-6);
    out.push(entry("classifier_encoder", r, 1e-3));
    Ok(out)
}

pub fn gradcheck(opts: &GlobalOptions) -> Result<Value> {
    let entries = gradcheck_suite(opts.seed.unwrap_or(0))?;
    if let Some(bad) = entries.iter().find(|e| !e.passed) {
        return Err(Error::GradientMismatch(format!(
            "`{}`: relative error {:.3e} at {} (analytic {:e}, numeric {:e}) exceeds {:.0e}",
            bad.name, bad.max_rel_error, bad.worst, bad.analytic, bad.numeric, bad.tolerance
        )));
    }
    Ok(json!({ "command": "gradcheck", "checks": entries }))
}
