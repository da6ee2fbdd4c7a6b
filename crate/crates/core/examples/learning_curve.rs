//! Desk-scale learning curve: simulate, pre-train, then compare training from
//! scratch (npt) against frozen (fpt) and fine-tuned (ufpt) pre-trained encoders
//! over growing training sets.
//!
//! `cargo run --release --example learning_curve [out_dir] [trials] [max_epochs] [sizes,...]`

use std::path::PathBuf;
use std::time::Instant;

use stdim::harness::{emit_report, run_learning_curve, summarize, CurveConfig, DataSource};
use stdim::simgen::{write_corpus, SimCorpus, SimCorpusConfig};
use stdim::training::{normalized_segments, pretrain, PretrainConfig};

fn main() -> stdim::Result<()> {
    let arg = |i: usize| std::env::args().nth(i);
    let out = PathBuf::from(arg(1).unwrap_or_else(|| "target/learning_curve".into()));
    let trials: usize = arg(2).and_then(|a| a.parse().ok()).unwrap_or(10);
    let max_epochs: usize = arg(3).and_then(|a| a.parse().ok()).unwrap_or(15);
    let sizes: Vec<usize> = arg(4)
        .map(|a| a.split(',').filter_map(|s| s.parse().ok()).collect())
        .unwrap_or_else(|| vec![10, 20, 40, 80]);

    let started = Instant::now();
    let corpus = SimCorpus::generate(&SimCorpusConfig::desk())?;
    let data_dir = out.join("corpus");
    write_corpus(&data_dir, &corpus)?;

    let mut pcfg = PretrainConfig::default();
    pcfg.batches_per_epoch = 20;
    pcfg.hyper.max_epochs = 20;
    let pre = pretrain(
        &pcfg,
        &normalized_segments(&corpus.pretrain.train),
        &normalized_segments(&corpus.pretrain.val),
    )?;
    println!("pre-trained in {:.1}s", started.elapsed().as_secs_f64());

    let mut cfg = CurveConfig {
        train_sizes: sizes,
        n_trials: trials,
        test_size: 0,
        val_size: 32,
        data: Some(DataSource::Sim { dir: data_dir }),
        ..CurveConfig::default()
    };
    cfg.downstream.hyper.max_epochs = max_epochs;
    cfg.downstream.hyper.patience = max_epochs.min(5);
    let result = run_learning_curve(&cfg, Some(&pre.checkpoint))?;
    emit_report(&result, &out)?;
    for cell in summarize(&result) {
        println!(
            "{:>4} size {:>3}: mean {:.3} std {:.3} (min {:.3}, max {:.3})",
            cell.mode, cell.train_size, cell.value.mean, cell.value.std, cell.value.min, cell.value.max
        );
    }
    println!("total {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
