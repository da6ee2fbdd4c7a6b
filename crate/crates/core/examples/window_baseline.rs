//! Window-level supervised VAR-vs-SVAR classification, with a label-shuffled
//! control.
//!
//! `cargo run --release --example window_baseline [max_epochs] [seed]`

use stdim::datapipe::LabeledSeries;
use stdim::simgen::{build_downstream_corpus, SimCorpusConfig, SimSeries};
use stdim::training::{prepare_series, window_supervised_baseline, PreparedSeries, WindowBaselineConfig};

fn prepared(s: &[SimSeries]) -> stdim::Result<Vec<PreparedSeries>> {
    let labeled: Vec<LabeledSeries> = s.iter().map(LabeledSeries::from).collect();
    prepare_series(&labeled, 20, 20)
}

fn main() -> stdim::Result<()> {
    let arg = |i: usize| std::env::args().nth(i);
    let epochs: usize = arg(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let seed: u64 = arg(2).and_then(|a| a.parse().ok()).unwrap_or(0);
    let d = build_downstream_corpus(&SimCorpusConfig::desk())?;
    let (train, val, test) = (prepared(&d.train)?, prepared(&d.val)?, prepared(&d.test)?);
    let (tr, va, te): (Vec<_>, Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect(), test.iter().collect());
    for shuffle in [false, true] {
        let mut cfg = WindowBaselineConfig {
            shuffle_labels: shuffle,
            ..WindowBaselineConfig::default()
        };
        cfg.hyper.max_epochs = epochs;
        cfg.hyper.patience = cfg.hyper.patience.min(epochs);
        cfg.hyper.seed = seed;
        let out = window_supervised_baseline(&cfg, &tr, &va, &te)?;
        println!(
            "{}: {} training windows, best epoch {}, val {:.3}, test {:.3}",
            if shuffle { "shuffled labels" } else { "true labels    " },
            out.train_windows,
            out.history.best_epoch,
            out.val_accuracy,
            out.test_accuracy
        );
    }
    Ok(())
}
