//! Evaluates the two-term contrastive objective of an untrained encoder on one
//! batch of consecutive window pairs, then shows how the InfoNCE value responds
//! to a score matrix with a growing diagonal margin.
//!
//! `cargo run --release --example infonce_objective [batch_size]`

use ndarray::Array2;
use stdim::datapipe::sample_contrastive_batch;
use stdim::model::{CriticHeads, Encoder, EncoderConfig};
use stdim::objective::{contrastive_accuracy, infonce_loss, stdim_loss, stdim_scores, ScoreMatrix};
use stdim::seed;
use stdim::simgen::{build_pretrain_corpus, SimCorpusConfig};
use stdim::training::normalized_segments;

fn main() -> stdim::Result<()> {
    let b: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(32);
    let corpus = build_pretrain_corpus(&SimCorpusConfig::desk())?;
    let segs = normalized_segments(&corpus.train);
    let views: Vec<_> = segs.iter().map(|s| s.view()).collect();
    let batch = sample_contrastive_batch(&views, b, 20, &mut seed::rng(1))?;

    let enc = Encoder::new(EncoderConfig::sim(), &mut seed::rng(2))?;
    let heads = CriticHeads::new(256, enc.spatial_dim(), 128, &mut seed::rng(3));
    let loss = stdim_loss(&batch, &enc, &heads)?;
    let scores = stdim_scores(&batch, &enc, &heads)?;
    println!(
        "untrained: total {:.4} (ls {:.4}, ss {:.4}); ln B = {:.4}",
        loss.total,
        loss.ls_term,
        loss.ss_term,
        (b as f64).ln()
    );
    println!(
        "contrastive accuracy: ls {:.3}, ss {:.3}; chance {:.3}",
        contrastive_accuracy(&scores.ls),
        contrastive_accuracy(&scores.ss),
        1.0 / b as f64
    );

    for margin in [0.0, 1.0, 2.0, 5.0, 10.0] {
        let s = Array2::from_shape_fn((b, b), |(i, j)| if i == j { margin } else { 0.0 });
        println!("diagonal margin {margin:>4}: loss {:.4}", infonce_loss(&ScoreMatrix::new(s)?));
    }
    Ok(())
}
