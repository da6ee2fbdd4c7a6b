//! Writes a synthetic subject-style dataset (manifest plus one CSV per subject),
//! reloads it, and runs a short AUC learning curve on it with a frozen and a
//! fine-tuned pre-trained encoder against training from scratch.
//!
//! `cargo run --release --example subject_dataset [out_dir]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use stdim::datapipe::{load_subject_dataset, save_subject_dataset, zscore_normalize, SubjectRecord};
use stdim::harness::{emit_report, run_learning_curve, summarize, CurveConfig, DataSource};
use stdim::model::{EncoderConfig, EncoderVariant};
use stdim::seed;
use stdim::simgen::{generate_var, random_stable_transition};
use stdim::training::{pretrain, MetricKind, PretrainConfig};

const COMPONENTS: usize = 12;
const LENGTH: usize = 140;

/// Class 1 subjects carry slower dynamics than class 0.
fn subject(i: usize) -> stdim::Result<SubjectRecord> {
    let label = i % 2;
    let mut rng = seed::rng(seed::derive_indexed(11, "subject", i as u64));
    let rho = if label == 1 { 0.9 } else { 0.5 };
    let a = random_stable_transition(COMPONENTS, rho, &mut rng)?;
    let mut values = generate_var(&a, LENGTH, 1.0, &mut rng)?;
    values.mapv_inplace(|v| {
        let jitter: f64 = StandardNormal.sample(&mut rng);
        v + 0.1 * jitter
    });
    Ok(SubjectRecord {
        id: format!("subject{i:03}"),
        label,
        values,
    })
}

fn main() -> stdim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/subject_dataset".into()));
    let records = (0..80).map(subject).collect::<stdim::Result<Vec<_>>>()?;
    let names = BTreeMap::from([("fast".to_string(), 0), ("slow".to_string(), 1)]);
    let manifest = save_subject_dataset(out.join("data"), &records, &names)?;
    let loaded = load_subject_dataset(&manifest)?;
    println!("{} subjects reloaded, identical: {}", loaded.len(), loaded == records);

    let encoder: EncoderConfig = EncoderVariant::Real.config(COMPONENTS, 20);
    // unlabeled VAR segments for pre-training
    let mut rng = seed::rng(5);
    let norm: Vec<Array2<f64>> = (0..6)
        .map(|_| {
            let a = random_stable_transition(COMPONENTS, 0.8, &mut rng)?;
            Ok(zscore_normalize(&generate_var(&a, 1200, 1.0, &mut rng)?))
        })
        .collect::<stdim::Result<_>>()?;
    let mut pcfg = PretrainConfig {
        encoder: encoder.clone(),
        batches_per_epoch: 10,
        ..PretrainConfig::default()
    };
    pcfg.hyper.max_epochs = 10;
    let pre = pretrain(&pcfg, &norm[..5], &norm[5..])?;

    let mut cfg = CurveConfig {
        train_sizes: vec![5, 10, 20],
        n_trials: 3,
        test_size: 20,
        val_size: 5,
        metric: MetricKind::Auc,
        data: Some(DataSource::Subjects { manifest }),
        ..CurveConfig::default()
    };
    cfg.downstream.encoder = encoder;
    cfg.downstream.hyper.max_epochs = 10;
    cfg.downstream.hyper.patience = 5;
    let result = run_learning_curve(&cfg, Some(&pre.checkpoint))?;
    emit_report(&result, out.join("report"))?;
    for c in summarize(&result) {
        println!("{:>4} size {:>2}: auc {:.3} +- {:.3}", c.mode, c.train_size, c.value.mean, c.value.std);
    }
    Ok(())
}
