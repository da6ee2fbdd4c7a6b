//! Accuracy and ROC AUC on a handful of score vectors, including ties.
//!
//! `cargo run --example auc_metrics`

use stdim::harness::{compute_accuracy, compute_auc};

fn main() -> stdim::Result<()> {
    let cases: [(&str, Vec<f64>, Vec<usize>); 4] = [
        ("separated", vec![0.9, 0.8, 0.4, 0.3], vec![1, 1, 0, 0]),
        ("inverted", vec![0.9, 0.8, 0.4, 0.3], vec![0, 0, 1, 1]),
        ("one tie", vec![0.5, 0.5, 0.2], vec![1, 0, 0]),
        ("all tied", vec![0.5; 4], vec![1, 0, 1, 0]),
    ];
    for (name, scores, labels) in &cases {
        let preds: Vec<usize> = scores.iter().map(|&s| usize::from(s > 0.5)).collect();
        println!(
            "{name:<10} auc {:.3}  accuracy at 0.5 {:.3}",
            compute_auc(scores, labels)?,
            compute_accuracy(&preds, labels)?
        );
    }
    match compute_auc(&[0.1, 0.7], &[1, 1]) {
        Err(e) => println!("single class: {e}"),
        Ok(v) => println!("single class unexpectedly gave {v}"),
    }
    Ok(())
}
