//! Pre-trains the windowed encoder on a small simulated VAR corpus and reports
//! held-out contrastive accuracy.
//!
//! `cargo run --release --example pretrain_encoder [epochs] [learning_rate] [batches_per_epoch] [seed]`

use stdim::simgen::{build_pretrain_corpus, SimCorpusConfig};
use stdim::training::{evaluate_contrastive, normalized_segments, pretrain, PretrainConfig};

fn main() -> stdim::Result<()> {
    let arg = |i: usize| std::env::args().nth(i);
    let epochs: usize = arg(1).and_then(|a| a.parse().ok()).unwrap_or(60);
    let lr: f64 = arg(2).and_then(|a| a.parse().ok()).unwrap_or(3e-4);
    let per_epoch: usize = arg(3).and_then(|a| a.parse().ok()).unwrap_or(0);
    let seed: u64 = arg(4).and_then(|a| a.parse().ok()).unwrap_or(0);
    let corpus = build_pretrain_corpus(&SimCorpusConfig::desk())?;
    let train = normalized_segments(&corpus.train);
    let val = normalized_segments(&corpus.val);
    let test = normalized_segments(&corpus.test);

    let mut cfg = PretrainConfig::default();
    cfg.hyper.max_epochs = epochs;
    cfg.hyper.patience = epochs.min(15);
    cfg.hyper.learning_rate = lr;
    cfg.batches_per_epoch = per_epoch;
    cfg.hyper.seed = seed;
    let out = pretrain(&cfg, &train, &val)?;
    for e in &out.history.epochs {
        println!(
            "epoch {:3}  train loss {:.4}  val loss {:.4}  val acc {:.3}  {:.1}s",
            e.epoch, e.train_loss, e.val_loss, e.val_metric, e.wall_clock_s
        );
    }
    let (enc, heads) = (&out.checkpoint.encoder, out.checkpoint.heads.as_ref().expect("heads"));
    let eval = evaluate_contrastive(enc, heads, &test, 32, 32, 7)?;
    println!(
        "best epoch {}; held-out accuracy at B=32: ls {:.3}, ss {:.3} (chance 0.031)",
        out.history.best_epoch, eval.ls_accuracy, eval.ss_accuracy
    );
    Ok(())
}
