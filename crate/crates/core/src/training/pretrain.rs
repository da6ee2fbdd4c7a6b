use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{Adam, EpochRecord, Hyperparams, TrainHistory};
use crate::datapipe::{sample_contrastive_batch, zscore_normalize, ContrastiveBatch};
use crate::error::{Error, Result};
use crate::model::{fill_zero, zeros_like, Checkpoint, CriticHeads, Encoder, EncoderConfig};
use crate::objective::{contrastive_accuracy, stdim_loss, stdim_loss_and_grads, stdim_scores};
use crate::seed;
use crate::simgen::SimSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub encoder: EncoderConfig,
    pub embed_dim: usize,
    pub hyper: Hyperparams,
    /// Batches per epoch; 0 means one pass over the non-overlapping window pairs.
    pub batches_per_epoch: usize,
    /// Fixed validation batches drawn once per run.
    pub val_batches: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::sim(),
            embed_dim: 128,
            hyper: Hyperparams::pretrain(),
            batches_per_epoch: 0,
            val_batches: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    /// Encoder and critic heads from the best validation epoch.
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveEval {
    /// Accuracy of the latent-to-spatial critic.
    pub ls_accuracy: f64,
    /// Accuracy of the spatial-to-spatial critic.
    pub ss_accuracy: f64,
    pub loss: f64,
    pub batches: usize,
    pub batch_size: usize,
}

/// Per-channel z-scored copies of each segment.
pub fn normalized_segments(series: &[SimSeries]) -> Vec<Array2<f64>> {
    series.iter().map(|s| zscore_normalize(&s.values)).collect()
}

fn anchor_positions(segments: &[Array2<f64>], width: usize) -> usize {
    segments.iter().map(|s| (s.ncols() + 1).saturating_sub(2 * width)).sum()
}

fn sample_batches(
    segments: &[ArrayView2<f64>],
    batch_size: usize,
    width: usize,
    count: usize,
    rng: &mut seed::Rng,
) -> Result<Vec<ContrastiveBatch>> {
    (0..count)
        .map(|_| sample_contrastive_batch(segments, batch_size, width, rng))
        .collect()
}

/// Mean contrastive accuracies and loss over `n_batches` seeded batches.
pub fn evaluate_contrastive(
    encoder: &Encoder,
    heads: &CriticHeads,
    segments: &[Array2<f64>],
    batch_size: usize,
    n_batches: usize,
    seed_value: u64,
) -> Result<ContrastiveEval> {
    let width = encoder.config.width;
    let b = batch_size.min(anchor_positions(segments, width));
    let views: Vec<_> = segments.iter().map(|s| s.view()).collect();
    let batches = sample_batches(&views, b, width, n_batches.max(1), &mut seed::rng(seed_value))?;
    evaluate_batches(encoder, heads, &batches)
}

fn evaluate_batches(encoder: &Encoder, heads: &CriticHeads, batches: &[ContrastiveBatch]) -> Result<ContrastiveEval> {
    let (mut ls, mut ss, mut loss) = (0.0, 0.0, 0.0);
    for batch in batches {
        let scores = stdim_scores(batch, encoder, heads)?;
        ls += contrastive_accuracy(&scores.ls);
        ss += contrastive_accuracy(&scores.ss);
        loss += stdim_loss(batch, encoder, heads)?.total;
    }
    let n = batches.len() as f64;
    Ok(ContrastiveEval {
        ls_accuracy: ls / n,
        ss_accuracy: ss / n,
        loss: loss / n,
        batches: batches.len(),
        batch_size: batches.first().map_or(0, ContrastiveBatch::size),
    })
}

/// Trains encoder and critic heads on the summed InfoNCE objective. Early-stops on
/// validation contrastive accuracy of the latent-to-spatial critic and returns the
/// best epoch's parameters.
pub fn pretrain(cfg: &PretrainConfig, train: &[Array2<f64>], val: &[Array2<f64>]) -> Result<PretrainOutcome> {
    let h = &cfg.hyper;
    h.validate()?;
    let width = cfg.encoder.width;
    let b = h.batch_size;
    if b < 2 {
        return Err(Error::InvalidConfig("contrastive batch size must be at least 2".into()));
    }
    let mut encoder = Encoder::new(cfg.encoder.clone(), &mut seed::sub_rng(h.seed, "pretrain/init/encoder"))?;
    let mut heads = CriticHeads::new(
        encoder.latent_dim(),
        encoder.spatial_dim(),
        cfg.embed_dim,
        &mut seed::sub_rng(h.seed, "pretrain/init/heads"),
    );

    let train_views: Vec<_> = train.iter().map(|s| s.view()).collect();
    let val_views: Vec<_> = val.iter().map(|s| s.view()).collect();
    let val_b = b.min(anchor_positions(val, width));
    let val_set = sample_batches(
        &val_views,
        val_b,
        width,
        cfg.val_batches.max(1),
        &mut seed::sub_rng(h.seed, "pretrain/val"),
    )?;
    let per_epoch = if cfg.batches_per_epoch > 0 {
        cfg.batches_per_epoch
    } else {
        let pairs: usize = train.iter().map(|s| (s.ncols() / width).saturating_sub(1)).sum();
        (pairs / b).max(1)
    };

    let mut batch_rng = seed::sub_rng(h.seed, "pretrain/batches");
    let mut opt_enc = Adam::new(h);
    let mut opt_heads = Adam::new(h);
    let mut g_enc = zeros_like(&encoder);
    let mut g_heads = zeros_like(&heads);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Encoder, CriticHeads)> = None;
    let mut since_best = 0;
    let started = Instant::now();

    for epoch in 0..h.max_epochs {
        let mut loss_sum = 0.0;
        for k in 0..per_epoch {
            let batch = sample_contrastive_batch(&train_views, b, width, &mut batch_rng)?;
            fill_zero(&mut g_enc);
            fill_zero(&mut g_heads);
            let (loss, _) = stdim_loss_and_grads(&batch, &encoder, &heads, &mut g_enc, &mut g_heads)?;
            if !loss.total.is_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite contrastive loss at epoch {epoch}, batch {k}"
                )));
            }
            loss_sum += loss.total;
            opt_enc.step(&mut encoder, &g_enc);
            opt_heads.step(&mut heads, &g_heads);
        }
        let eval = evaluate_batches(&encoder, &heads, &val_set)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / per_epoch as f64,
            val_loss: eval.loss,
            val_metric: eval.ls_accuracy,
            wall_clock_s: started.elapsed().as_secs_f64(),
        });
        log::debug!(
            "pretrain epoch {epoch}: loss {:.4} val acc {:.3}/{:.3}",
            loss_sum / per_epoch as f64,
            eval.ls_accuracy,
            eval.ss_accuracy
        );
        let improved = best.as_ref().is_none_or(|(m, ..)| eval.ls_accuracy > *m);
        if improved {
            best = Some((eval.ls_accuracy, encoder.clone(), heads.clone()));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= h.patience {
                break;
            }
        }
    }
    let (_, encoder, heads) = best.expect("at least one epoch ran");
    Ok(PretrainOutcome {
        checkpoint: Checkpoint {
            encoder,
            heads: Some(heads),
            classifier: None,
        },
        history,
    })
}
