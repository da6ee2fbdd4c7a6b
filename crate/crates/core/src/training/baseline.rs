use std::time::Instant;

use ndarray::{s, Array1, Array2, Array3};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Adam, EpochRecord, Hyperparams, PreparedSeries, TrainHistory};
use crate::error::{Error, Result};
use crate::model::{fill_zero, zeros_like, Encoder, EncoderConfig, Linear, Params};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowBaselineConfig {
    pub encoder: EncoderConfig,
    pub hyper: Hyperparams,
    /// Permute series labels in the training and validation sets before training.
    pub shuffle_labels: bool,
}

impl Default for WindowBaselineConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::sim(),
            hyper: Hyperparams {
                batch_size: 64,
                max_epochs: 30,
                patience: 5,
                ..Hyperparams::default()
            },
            shuffle_labels: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindowBaselineOutcome {
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub history: TrainHistory,
    pub train_windows: usize,
}

#[derive(Clone)]
struct WindowModel {
    encoder: Encoder,
    head: Linear,
}

impl Params for WindowModel {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.encoder.visit(&crate::model::join(prefix, "encoder"), f);
        self.head.visit(&crate::model::join(prefix, "head"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.encoder.visit_mut(&crate::model::join(prefix, "encoder"), f);
        self.head.visit_mut(&crate::model::join(prefix, "head"), f);
    }
}

/// (series index, window index, label) for every window.
fn flatten_windows(set: &[&PreparedSeries], labels: &[usize]) -> Vec<(usize, usize, usize)> {
    set.iter()
        .zip(labels)
        .enumerate()
        .flat_map(|(i, (p, &y))| (0..p.steps()).map(move |w| (i, w, y)))
        .collect()
}

fn gather(set: &[&PreparedSeries], items: &[(usize, usize, usize)]) -> Array3<f64> {
    let (_, c, w) = set[0].windows.dim();
    let mut x = Array3::zeros((items.len(), c, w));
    for (r, &(i, t, _)) in items.iter().enumerate() {
        x.slice_mut(s![r, .., ..]).assign(&set[i].windows.slice(s![t, .., ..]));
    }
    x
}

fn logits(model: &WindowModel, x: &Array3<f64>) -> Result<(crate::model::EncoderPass, Array2<f64>)> {
    let pass = model.encoder.forward(x.view())?;
    let out = model.head.forward(pass.z.view());
    Ok((pass, out))
}

fn accuracy(model: &WindowModel, set: &[&PreparedSeries], items: &[(usize, usize, usize)]) -> Result<(f64, f64)> {
    let mut correct = 0usize;
    let mut loss = 0.0;
    for chunk in items.chunks(256) {
        let (_, out) = logits(model, &gather(set, chunk))?;
        for (row, &(_, _, y)) in out.rows().into_iter().zip(chunk) {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - row[y];
            let others_lower = row.iter().enumerate().all(|(j, &v)| j == y || v < row[y]);
            correct += usize::from(others_lower);
        }
    }
    let n = items.len() as f64;
    Ok((correct as f64 / n, loss / n))
}

/// Encoder plus a linear head trained on individual windows, each inheriting its
/// series label. With `shuffle_labels` set it serves as a label-permutation control.
pub fn window_supervised_baseline(
    cfg: &WindowBaselineConfig,
    train: &[&PreparedSeries],
    val: &[&PreparedSeries],
    test: &[&PreparedSeries],
) -> Result<WindowBaselineOutcome> {
    let h = &cfg.hyper;
    h.validate()?;
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::EmptySequence("baseline needs non-empty train, val and test sets".into()));
    }
    let mut train_labels: Vec<usize> = train.iter().map(|p| p.label).collect();
    let mut val_labels: Vec<usize> = val.iter().map(|p| p.label).collect();
    if cfg.shuffle_labels {
        let mut rng = seed::sub_rng(h.seed, "baseline/shuffle");
        train_labels.shuffle(&mut rng);
        val_labels.shuffle(&mut rng);
    }
    let n_classes = train_labels.iter().chain(&val_labels).max().copied().unwrap_or(0).max(1) + 1;
    let mut model = WindowModel {
        encoder: Encoder::new(cfg.encoder.clone(), &mut seed::sub_rng(h.seed, "baseline/init/encoder"))?,
        head: Linear::new(cfg.encoder.latent_dim, n_classes, &mut seed::sub_rng(h.seed, "baseline/init/head")),
    };
    let mut train_items = flatten_windows(train, &train_labels);
    let val_items = flatten_windows(val, &val_labels);
    let test_labels: Vec<usize> = test.iter().map(|p| p.label).collect();
    let test_items = flatten_windows(test, &test_labels);

    let mut opt = Adam::new(h);
    let mut grads = zeros_like(&model);
    let mut rng = seed::sub_rng(h.seed, "baseline/batches");
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, f64, WindowModel)> = None;
    let mut since_best = 0;
    let started = Instant::now();
    for epoch in 0..h.max_epochs {
        train_items.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in train_items.chunks(h.batch_size) {
            fill_zero(&mut grads);
            let x = gather(train, chunk);
            let (pass, out) = logits(&model, &x)?;
            let scale = 1.0 / chunk.len() as f64;
            let mut dlogits = Array2::zeros(out.dim());
            for (i, (row, &(_, _, y))) in out.rows().into_iter().zip(chunk).enumerate() {
                let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                loss_sum += lse - row[y];
                let p: Array1<f64> = row.mapv(|v| (v - lse).exp());
                for j in 0..p.len() {
                    dlogits[[i, j]] = scale * (p[j] - f64::from(u8::from(j == y)));
                }
            }
            let dz = model
                .head
                .backward(pass.z.view(), dlogits.view(), &mut grads.head, true)
                .expect("requested");
            model.encoder.backward(&pass, dz.view(), None, &mut grads.encoder);
            opt.step(&mut model, &grads);
        }
        if !loss_sum.is_finite() {
            return Err(Error::Diverged(format!("non-finite baseline loss at epoch {epoch}")));
        }
        let (val_acc, val_loss) = accuracy(&model, val, &val_items)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_items.len() as f64,
            val_loss,
            val_metric: val_acc,
            wall_clock_s: started.elapsed().as_secs_f64(),
        });
        if best
            .as_ref()
            .is_none_or(|(a, l, _)| val_acc > *a || (val_acc == *a && val_loss < *l))
        {
            best = Some((val_acc, val_loss, model.clone()));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= h.patience {
                break;
            }
        }
    }
    let (val_accuracy, _, model) = best.expect("at least one epoch ran");
    let (test_accuracy, _) = accuracy(&model, test, &test_items)?;
    Ok(WindowBaselineOutcome {
        val_accuracy,
        test_accuracy,
        history,
        train_windows: train_items.len(),
    })
}
