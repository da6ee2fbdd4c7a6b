use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{s, Array2, Array3, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Adam, EpochRecord, Hyperparams, TrainHistory, TrainMode};
use crate::datapipe::{window_tensor, zscore_normalize, LabeledSeries};
use crate::error::{Error, Result};
use crate::harness::{compute_accuracy, compute_auc};
use crate::model::{fill_zero, zeros_like, Checkpoint, ClassifierConfig, Encoder, EncoderConfig, SequenceClassifier};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Accuracy,
    Auc,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Auc => "auc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DownstreamConfig {
    pub encoder: EncoderConfig,
    pub classifier: ClassifierConfig,
    pub hyper: Hyperparams,
    /// Window hop; equal to the window width for non-overlapping windows.
    pub hop: usize,
    /// Validation metric used for early stopping.
    pub metric: MetricKind,
}

impl Default for DownstreamConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::sim(),
            classifier: ClassifierConfig::default(),
            hyper: Hyperparams::downstream(),
            hop: 20,
            metric: MetricKind::Accuracy,
        }
    }
}

/// A normalized series cut into encoder windows.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSeries {
    pub id: String,
    pub group: u64,
    pub label: usize,
    /// (windows, channels, width)
    pub windows: Array3<f64>,
}

impl PreparedSeries {
    pub fn steps(&self) -> usize {
        self.windows.dim().0
    }
}

/// Z-scores each series and cuts it into `width`-wide windows every `hop` steps.
pub fn prepare_series(series: &[LabeledSeries], width: usize, hop: usize) -> Result<Vec<PreparedSeries>> {
    series
        .iter()
        .map(|s| {
            let norm = zscore_normalize(&s.values);
            Ok(PreparedSeries {
                id: s.id.clone(),
                group: s.group,
                label: s.label,
                windows: window_tensor(norm.view(), width, hop)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    pub loss: f64,
    pub n: usize,
}

impl EvalMetrics {
    pub fn get(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Accuracy => self.accuracy,
            MetricKind::Auc => self.auc.unwrap_or(self.accuracy),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DownstreamOutcome {
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
    pub val: EvalMetrics,
    pub test: EvalMetrics,
}

/// Stacks the windows of equal-length series as (batch * steps, channels, width),
/// series-major.
fn stack_group(group: &[&PreparedSeries]) -> Array3<f64> {
    let (w, c, width) = group[0].windows.dim();
    let mut out = Array3::zeros((group.len() * w, c, width));
    for (b, p) in group.iter().enumerate() {
        out.slice_mut(s![b * w..(b + 1) * w, .., ..]).assign(&p.windows);
    }
    out
}

/// Reorders series-major rows (`b * steps + t`) into time-major rows (`t * batch + b`).
fn to_time_major(z: ArrayView2<f64>, batch: usize, steps: usize) -> Array2<f64> {
    let mut out = Array2::zeros(z.dim());
    for b in 0..batch {
        for t in 0..steps {
            out.row_mut(t * batch + b).assign(&z.row(b * steps + t));
        }
    }
    out
}

fn to_series_major(x: ArrayView2<f64>, batch: usize, steps: usize) -> Array2<f64> {
    let mut out = Array2::zeros(x.dim());
    for b in 0..batch {
        for t in 0..steps {
            out.row_mut(b * steps + t).assign(&x.row(t * batch + b));
        }
    }
    out
}

fn softmax_xent(logits: &Array2<f64>, labels: &[usize], scale: f64) -> Result<(f64, Array2<f64>)> {
    let mut grad = Array2::zeros(logits.dim());
    let mut loss = 0.0;
    for (i, (row, &y)) in logits.rows().into_iter().zip(labels).enumerate() {
        if y >= row.len() {
            return Err(Error::Schema(format!("label {y} outside {} classes", row.len())));
        }
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[y];
        for (j, &v) in row.iter().enumerate() {
            grad[[i, j]] = scale * ((v - lse).exp() - if j == y { 1.0 } else { 0.0 });
        }
    }
    Ok((loss, grad))
}

fn group_by_steps<'a>(items: &[(usize, &'a PreparedSeries)]) -> BTreeMap<usize, Vec<(usize, &'a PreparedSeries)>> {
    let mut groups: BTreeMap<usize, Vec<(usize, &PreparedSeries)>> = BTreeMap::new();
    for &(i, p) in items {
        groups.entry(p.steps()).or_default().push((i, p));
    }
    groups
}

/// Time-major classifier input for a group, plus the encoder cache when the encoder
/// participates in backpropagation.
fn group_inputs(
    encoder: &Encoder,
    group: &[(usize, &PreparedSeries)],
    frozen: Option<&[Array2<f64>]>,
) -> Result<(Array2<f64>, Option<crate::model::EncoderPass>)> {
    let batch = group.len();
    let steps = group[0].1.steps();
    match frozen {
        Some(lat) => {
            let mut xs = Array2::zeros((batch * steps, encoder.latent_dim()));
            for (b, (i, _)) in group.iter().enumerate() {
                for t in 0..steps {
                    xs.row_mut(t * batch + b).assign(&lat[*i].row(t));
                }
            }
            Ok((xs, None))
        }
        None => {
            let series: Vec<&PreparedSeries> = group.iter().map(|(_, p)| *p).collect();
            let pass = encoder.forward(stack_group(&series).view())?;
            let xs = to_time_major(pass.z.view(), batch, steps);
            Ok((xs, Some(pass)))
        }
    }
}

/// Latent sequences (steps x latent) of every series under a fixed encoder.
fn encode_all(encoder: &Encoder, series: &[&PreparedSeries]) -> Result<Vec<Array2<f64>>> {
    series
        .chunks(64)
        .map(|chunk| -> Result<Vec<Array2<f64>>> {
            let mut out = Vec::with_capacity(chunk.len());
            for p in chunk {
                out.push(encoder.forward(p.windows.view())?.z);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

/// Summed cross-entropy over `batch`, accumulating gradients scaled by `scale`.
/// The encoder receives gradients only when `frozen` is `None`.
fn accumulate(
    encoder: &Encoder,
    clf: &SequenceClassifier,
    batch: &[(usize, &PreparedSeries)],
    frozen: Option<&[Array2<f64>]>,
    scale: f64,
    g_enc: &mut Encoder,
    g_clf: &mut SequenceClassifier,
) -> Result<f64> {
    let mut total = 0.0;
    for (steps, group) in group_by_steps(batch) {
        let n = group.len();
        let (xs, pass) = group_inputs(encoder, &group, frozen)?;
        let cp = clf.forward(xs.view(), steps, n)?;
        let labels: Vec<usize> = group.iter().map(|(_, p)| p.label).collect();
        let (loss, dlogits) = softmax_xent(&cp.logits, &labels, scale)?;
        total += loss;
        let dxs = clf.backward(xs.view(), &cp, dlogits.view(), g_clf, pass.is_some());
        if let (Some(pass), Some(dxs)) = (pass, dxs) {
            let dz = to_series_major(dxs.view(), n, steps);
            encoder.backward(&pass, dz.view(), None, g_enc);
        }
    }
    Ok(total)
}

/// Mean cross-entropy of `batch` and its gradients. Under `TrainMode::Fpt` the
/// encoder is treated as a constant and its gradient is identically zero.
pub fn downstream_loss_and_grads(
    mode: TrainMode,
    encoder: &Encoder,
    clf: &SequenceClassifier,
    batch: &[&PreparedSeries],
) -> Result<(f64, Encoder, SequenceClassifier)> {
    let mut g_enc = zeros_like(encoder);
    let mut g_clf = zeros_like(clf);
    let items: Vec<(usize, &PreparedSeries)> = batch.iter().copied().enumerate().collect();
    let frozen = match mode {
        TrainMode::Fpt => Some(encode_all(encoder, batch)?),
        _ => None,
    };
    let scale = 1.0 / batch.len() as f64;
    let loss = accumulate(encoder, clf, &items, frozen.as_deref(), scale, &mut g_enc, &mut g_clf)?;
    Ok((loss * scale, g_enc, g_clf))
}

fn evaluate_with(
    encoder: &Encoder,
    clf: &SequenceClassifier,
    series: &[&PreparedSeries],
    frozen: Option<&[Array2<f64>]>,
) -> Result<EvalMetrics> {
    if series.is_empty() {
        return Err(Error::EmptySequence("no series to evaluate".into()));
    }
    let items: Vec<(usize, &PreparedSeries)> = series.iter().copied().enumerate().collect();
    let mut scores = vec![0.0; series.len()];
    let mut preds = vec![0usize; series.len()];
    let mut loss = 0.0;
    for chunk in items.chunks(64) {
        for (steps, group) in group_by_steps(chunk) {
            let (xs, _) = group_inputs(encoder, &group, frozen)?;
            let cp = clf.forward(xs.view(), steps, group.len())?;
            let labels: Vec<usize> = group.iter().map(|(_, p)| p.label).collect();
            loss += softmax_xent(&cp.logits, &labels, 1.0)?.0;
            for (row, (i, _)) in cp.logits.rows().into_iter().zip(&group) {
                // positive-class score: log-odds of class 1 against the rest
                let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                scores[*i] = (row[1] - lse).exp();
                preds[*i] = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc })
                    .0;
            }
        }
    }
    let labels: Vec<usize> = series.iter().map(|p| p.label).collect();
    let accuracy = compute_accuracy(&preds, &labels)?;
    let auc = if labels.iter().all(|&l| l <= 1) {
        compute_auc(&scores, &labels).ok()
    } else {
        None
    };
    Ok(EvalMetrics {
        accuracy,
        auc,
        loss: loss / series.len() as f64,
        n: series.len(),
    })
}

/// Accuracy, AUC and mean loss of an encoder + classifier on `series`.
pub fn evaluate_downstream(
    encoder: &Encoder,
    clf: &SequenceClassifier,
    series: &[&PreparedSeries],
) -> Result<EvalMetrics> {
    evaluate_with(encoder, clf, series, None)
}

/// Trains a sequence classifier on top of the encoder in the given regime.
///
/// Early-stops on the configured validation metric (ties broken by lower
/// validation loss) and evaluates the best epoch's parameters on `test`.
pub fn train_downstream(
    mode: TrainMode,
    init: Option<&Checkpoint>,
    train: &[&PreparedSeries],
    val: &[&PreparedSeries],
    test: &[&PreparedSeries],
    cfg: &DownstreamConfig,
) -> Result<DownstreamOutcome> {
    let h = &cfg.hyper;
    h.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySequence("empty training set".into()));
    }
    let mut encoder = match (mode, init) {
        (TrainMode::Npt, None) => Encoder::new(cfg.encoder.clone(), &mut seed::sub_rng(h.seed, "downstream/init/encoder"))?,
        (TrainMode::Npt, Some(_)) => {
            return Err(Error::InvalidConfig("npt trains from scratch and takes no checkpoint".into()))
        }
        (_, Some(ck)) => ck.encoder.clone(),
        (m, None) => return Err(Error::InvalidConfig(format!("{m} requires a pre-trained checkpoint"))),
    };
    let (_, c, w) = train[0].windows.dim();
    if c != encoder.config.in_channels || w != encoder.config.width {
        return Err(Error::Dimension(format!(
            "encoder expects {}x{} windows, data has {c}x{w}",
            encoder.config.in_channels, encoder.config.width
        )));
    }
    let clf_cfg = ClassifierConfig {
        input_dim: encoder.latent_dim(),
        ..cfg.classifier.clone()
    };
    let mut clf = SequenceClassifier::new(clf_cfg, &mut seed::sub_rng(h.seed, "downstream/init/classifier"))?;

    let frozen = mode == TrainMode::Fpt;
    let cache = |set: &[&PreparedSeries]| -> Result<Option<Vec<Array2<f64>>>> {
        if frozen {
            encode_all(&encoder, set).map(Some)
        } else {
            Ok(None)
        }
    };
    let train_lat = cache(train)?;
    let val_lat = cache(val)?;

    let mut opt_enc = Adam::new(h);
    let mut opt_clf = Adam::new(h);
    let mut g_enc = zeros_like(&encoder);
    let mut g_clf = zeros_like(&clf);
    let mut rng = seed::sub_rng(h.seed, "downstream/batches");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, f64, Encoder, SequenceClassifier, EvalMetrics)> = None;
    let mut since_best = 0;
    let started = Instant::now();

    for epoch in 0..h.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(h.batch_size) {
            let items: Vec<(usize, &PreparedSeries)> = chunk.iter().map(|&i| (i, train[i])).collect();
            fill_zero(&mut g_clf);
            if !frozen {
                fill_zero(&mut g_enc);
            }
            let scale = 1.0 / items.len() as f64;
            let loss = accumulate(&encoder, &clf, &items, train_lat.as_deref(), scale, &mut g_enc, &mut g_clf)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("non-finite classification loss at epoch {epoch}")));
            }
            loss_sum += loss;
            opt_clf.step(&mut clf, &g_clf);
            if !frozen {
                opt_enc.step(&mut encoder, &g_enc);
            }
        }
        let val_m = evaluate_with(&encoder, &clf, val, val_lat.as_deref())?;
        let metric = val_m.get(cfg.metric);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss: val_m.loss,
            val_metric: metric,
            wall_clock_s: started.elapsed().as_secs_f64(),
        });
        let improved = best
            .as_ref()
            .is_none_or(|(m, l, ..)| metric > *m || (metric == *m && val_m.loss < *l));
        if improved {
            best = Some((metric, val_m.loss, encoder.clone(), clf.clone(), val_m));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= h.patience {
                break;
            }
        }
    }
    let (_, _, encoder, clf, val_m) = best.expect("at least one epoch ran");
    let test_m = if test.is_empty() {
        EvalMetrics {
            accuracy: f64::NAN,
            auc: None,
            loss: f64::NAN,
            n: 0,
        }
    } else {
        evaluate_downstream(&encoder, &clf, test)?
    };
    Ok(DownstreamOutcome {
        checkpoint: Checkpoint {
            encoder,
            heads: init.and_then(|c| c.heads.clone()),
            classifier: Some(clf),
        },
        history,
        val: val_m,
        test: test_m,
    })
}
