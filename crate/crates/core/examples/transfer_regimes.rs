//! Trains one downstream classifier per regime on a simulated VAR-vs-SVAR dataset
//! and prints training histories and held-out metrics.
//!
//! `cargo run --release --example transfer_regimes [max_epochs] [per_class] [series_length] [learning_rate] [modes] [svar_rate]`

use stdim::datapipe::LabeledSeries;
use stdim::simgen::{build_downstream_corpus, build_pretrain_corpus, SimCorpusConfig, SimSeries};
use stdim::training::{
    normalized_segments, prepare_series, pretrain, train_downstream, DownstreamConfig, PreparedSeries,
    PretrainConfig, TrainMode,
};

fn prepare(series: &[SimSeries], cfg: &DownstreamConfig) -> stdim::Result<Vec<PreparedSeries>> {
    let labeled: Vec<LabeledSeries> = series.iter().map(LabeledSeries::from).collect();
    prepare_series(&labeled, cfg.encoder.width, cfg.hop)
}

/// The first `n` series of each class.
fn pick(v: &[PreparedSeries], n: usize) -> Vec<&PreparedSeries> {
    let mut out: Vec<&PreparedSeries> = v.iter().filter(|p| p.label == 0).take(n).collect();
    out.extend(v.iter().filter(|p| p.label == 1).take(n));
    out
}

fn main() -> stdim::Result<()> {
    let arg = |i: usize| std::env::args().nth(i);
    let max_epochs: usize = arg(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let per_class: usize = arg(2).and_then(|a| a.parse().ok()).unwrap_or(120);
    let length: usize = arg(3).and_then(|a| a.parse().ok()).unwrap_or(200);
    let lr: f64 = arg(4).and_then(|a| a.parse().ok()).unwrap_or(3e-4);
    let modes: Vec<TrainMode> = arg(5)
        .map(|a| a.split(',').filter_map(|m| m.parse().ok()).collect())
        .unwrap_or_else(|| TrainMode::ALL.to_vec());
    let sim = SimCorpusConfig {
        downstream_length: length,
        svar_rate: arg(6).and_then(|a| a.parse().ok()).unwrap_or(2),
        ..SimCorpusConfig::desk()
    };
    let pre_corpus = build_pretrain_corpus(&sim)?;
    let mut pcfg = PretrainConfig::default();
    pcfg.batches_per_epoch = 20;
    pcfg.hyper.max_epochs = 20;
    let pre = pretrain(
        &pcfg,
        &normalized_segments(&pre_corpus.train),
        &normalized_segments(&pre_corpus.val),
    )?;

    let data = build_downstream_corpus(&sim)?;
    let mut cfg = DownstreamConfig::default();
    cfg.hyper.max_epochs = max_epochs;
    cfg.hyper.patience = max_epochs.min(10);
    cfg.hyper.learning_rate = lr;
    let train = prepare(&data.train, &cfg)?;
    let val = prepare(&data.val, &cfg)?;
    let test = prepare(&data.test, &cfg)?;
    let (train, val, test) = (pick(&train, per_class), pick(&val, 1000), pick(&test, 1000));

    for mode in modes {
        let init = mode.needs_pretrained().then_some(&pre.checkpoint);
        let out = train_downstream(mode, init, &train, &val, &test, &cfg)?;
        println!("== {mode}");
        for e in &out.history.epochs {
            println!(
                "  epoch {:2}  train {:.4}  val loss {:.4}  val acc {:.3}  {:.0}s",
                e.epoch, e.train_loss, e.val_loss, e.val_metric, e.wall_clock_s
            );
        }
        println!(
            "  best epoch {}: test accuracy {:.3}, auc {:.3}",
            out.history.best_epoch,
            out.test.accuracy,
            out.test.auc.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
