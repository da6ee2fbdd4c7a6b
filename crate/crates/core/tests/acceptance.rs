//! Acceptance suite. Runs each criterion in turn, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any failed.
//!
//! `cargo test --release --test acceptance [-- <criterion numbers>]`

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use stdim::datapipe::{load_subject_dataset, save_subject_dataset, LabeledSeries, SubjectRecord};
use stdim::harness::cli::gradcheck_suite;
use stdim::harness::*;
use stdim::model::{bit_equal, Checkpoint};
use stdim::objective::{infonce_loss, ScoreMatrix};
use stdim::seed;
use stdim::simgen::*;
use stdim::training::*;

mod common;
use common::{naive_infonce, pairwise_auc, gelfand_radius};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Pre-trained desk checkpoint shared by the criteria that need one.
struct Shared {
    corpus: SimCorpus,
    pretrained: Option<PretrainOutcome>,
}

impl Shared {
    fn pretrained(&mut self) -> &PretrainOutcome {
        if self.pretrained.is_none() {
            let mut cfg = PretrainConfig::default();
            cfg.batches_per_epoch = 20;
            cfg.hyper.max_epochs = 20;
            let train = normalized_segments(&self.corpus.pretrain.train);
            let val = normalized_segments(&self.corpus.pretrain.val);
            self.pretrained = Some(pretrain(&cfg, &train, &val).expect("desk pre-training"));
        }
        self.pretrained.as_ref().unwrap()
    }

    fn prepared(&self, series: &[SimSeries]) -> Vec<PreparedSeries> {
        let labeled: Vec<LabeledSeries> = series.iter().map(LabeledSeries::from).collect();
        prepare_series(&labeled, 20, 20).expect("prepare")
    }
}

fn refs(v: &[PreparedSeries]) -> Vec<&PreparedSeries> {
    v.iter().collect()
}

fn infonce_oracle() -> Outcome {
    let mut rng = seed::rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let b = rng.random_range(2..=8);
        let s = Array2::from_shape_fn((b, b), |_| rng.random_range(-10.0..10.0));
        let got = infonce_loss(&ScoreMatrix::new(s.clone()).unwrap());
        worst = worst.max((got - naive_infonce(&s)).abs());
    }
    let uniform = infonce_loss(&ScoreMatrix::new(Array2::zeros((4, 4))).unwrap());
    let margin = infonce_loss(&ScoreMatrix::new(ndarray::array![[10.0, 0.0], [0.0, 10.0]]).unwrap());
    let e1 = (uniform - 4f64.ln()).abs();
    let e2 = (margin - (-10f64).exp().ln_1p()).abs();
    outcome(
        worst < 1e-10 && e1 < 1e-9 && e2 < 1e-9,
        format!("max oracle gap {worst:.1e}; ln 4 gap {e1:.1e}; ln(1+e^-10) gap {e2:.1e}"),
    )
}

fn gradients() -> Outcome {
    let entries = gradcheck_suite(0).expect("gradient check");
    let pass = entries.iter().all(|e| e.passed);
    let detail = entries
        .iter()
        .map(|e| format!("{} {:.1e}/{:.0e}", e.name, e.max_rel_error, e.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn simulation(shared: &Shared) -> Outcome {
    let cfg = &shared.corpus.config;
    let mats: Vec<TransitionMatrix> = pretrain_transitions(cfg)
        .unwrap()
        .into_iter()
        .chain(downstream_transitions(cfg).unwrap())
        .collect();
    let oracle: Vec<f64> = mats.iter().map(|a| gelfand_radius(a.entries())).collect();
    let max_rho = oracle.iter().copied().fold(0.0f64, f64::max);
    let max_dev = mats
        .iter()
        .zip(&oracle)
        .map(|(a, o)| (a.spectral_radius() - o).abs())
        .fold(0.0f64, f64::max);
    let a = &mats[0];
    let var = generate_var(a, 500, 1.0, &mut seed::rng(3)).unwrap();
    let rate1 = generate_svar(a, 500, 1, 1.0, &mut seed::rng(3)).unwrap();
    let full = generate_var(a, 1000, 1.0, &mut seed::rng(4)).unwrap();
    let rate2 = generate_svar(a, 500, 2, 1.0, &mut seed::rng(4)).unwrap();
    let decimated = full.slice(ndarray::s![.., ..;2]).to_owned();
    let again = SimCorpus::generate(cfg).unwrap();
    let checks = [max_rho < 1.0, var == rate1, rate2 == decimated, again == shared.corpus];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "{} matrices, max oracle radius {max_rho:.6} (max deviation from stored {max_dev:.1e}); rate-1 equal {}; rate-2 decimation equal {}; reproducible {}",
            mats.len(),
            checks[1],
            checks[2],
            checks[3]
        ),
    )
}

fn pretraining(shared: &mut Shared) -> Outcome {
    let test = normalized_segments(&shared.corpus.pretrain.test);
    let out = shared.pretrained();
    let ck = &out.checkpoint;
    let eval = evaluate_contrastive(&ck.encoder, ck.heads.as_ref().unwrap(), &test, 32, 16, 7).unwrap();
    let first = out.history.epochs[0].train_loss;
    let best = out.history.best().unwrap().train_loss;
    outcome(
        eval.ls_accuracy > 0.094 && best < first,
        format!(
            "held-out accuracy at B=32 {:.3} (threshold 0.094); train loss {first:.3} -> {best:.3} at best epoch {}",
            eval.ls_accuracy, out.history.best_epoch
        ),
    )
}

fn window_baseline(shared: &Shared) -> Outcome {
    let d = &shared.corpus.downstream;
    let (train, val, test) = (shared.prepared(&d.train), shared.prepared(&d.val), shared.prepared(&d.test));
    let run = |shuffle: bool| {
        let cfg = WindowBaselineConfig {
            shuffle_labels: shuffle,
            ..WindowBaselineConfig::default()
        };
        window_supervised_baseline(&cfg, &refs(&train), &refs(&val), &refs(&test)).expect("baseline")
    };
    let real = run(false).test_accuracy;
    let control = run(true).test_accuracy;
    outcome(
        real > 0.55 && (control - 0.5).abs() <= 0.05,
        format!("window accuracy {real:.3} (threshold 0.55); shuffled-label control {control:.3} (0.50 +- 0.05)"),
    )
}

fn transfer_ordering(shared: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &shared.corpus).unwrap();
    let mut cfg = CurveConfig {
        train_sizes: vec![10, 20, 40, 80],
        n_trials: 10,
        test_size: 0,
        val_size: 32,
        data: Some(DataSource::Sim {
            dir: dir.path().to_path_buf(),
        }),
        ..CurveConfig::default()
    };
    cfg.downstream.hyper.max_epochs = 15;
    cfg.downstream.hyper.patience = 5;
    let ck = shared.pretrained().checkpoint.clone();
    let result = run_learning_curve(&cfg, Some(&ck)).expect("learning curve");
    let mean = |mode: TrainMode, size: usize| {
        let v: Vec<f64> = result
            .records
            .iter()
            .filter(|r| r.mode == mode && r.train_size == size)
            .map(|r| r.value)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (lo, hi) = (10, 80);
    let [n0, f0, u0] = TrainMode::ALL.map(|m| mean(m, lo));
    let [n1, f1, u1] = TrainMode::ALL.map(|m| mean(m, hi));
    // gap between the pre-trained regimes (averaged) and training from scratch
    let gap_lo = (f0 + u0) / 2.0 - n0;
    let gap_hi = (f1 + u1) / 2.0 - n1;
    outcome(
        f0 >= n0 && u0 >= n0 && gap_hi < gap_lo,
        format!(
            "size {lo}: npt {n0:.3} fpt {f0:.3} ufpt {u0:.3}; size {hi}: npt {n1:.3} fpt {f1:.3} ufpt {u1:.3}; gap {gap_lo:.3} -> {gap_hi:.3}"
        ),
    )
}

fn freeze_contract(shared: &mut Shared) -> Outcome {
    let d = &shared.corpus.downstream;
    let train = shared.prepared(&d.train[..40]);
    let val = shared.prepared(&d.val[..20]);
    let test = shared.prepared(&d.test[..20]);
    let ck = shared.pretrained().checkpoint.clone();
    let mut cfg = DownstreamConfig::default();
    cfg.hyper.max_epochs = 2;
    cfg.hyper.patience = 2;
    let fpt = train_downstream(TrainMode::Fpt, Some(&ck), &refs(&train), &refs(&val), &refs(&test), &cfg).unwrap();
    let ufpt = train_downstream(TrainMode::Ufpt, Some(&ck), &refs(&train), &refs(&val), &refs(&test), &cfg).unwrap();
    let frozen = bit_equal(&fpt.checkpoint.encoder, &ck.encoder);
    let changed = !bit_equal(&ufpt.checkpoint.encoder, &ck.encoder);
    outcome(
        frozen && changed,
        format!("fpt encoder bit-identical {frozen}; ufpt encoder changed {changed}"),
    )
}

fn auc_oracle() -> Outcome {
    let mut rng = seed::rng(8);
    let mut mismatches = 0;
    for k in 0..1000 {
        let n = rng.random_range(2..50);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.random();
                if k % 2 == 0 {
                    (v * 4.0).floor() / 4.0
                } else {
                    v
                }
            })
            .collect();
        if compute_auc(&scores, &labels).unwrap() != pairwise_auc(&scores, &labels) {
            mismatches += 1;
        }
    }
    let tie = compute_auc(&[0.5, 0.5, 0.2], &[1, 0, 0]).unwrap();
    outcome(
        mismatches == 0 && tie == 0.75,
        format!("{mismatches} mismatches in 1000 fixtures; tie fixture {tie}"),
    )
}

fn stdim_bin(args: &[&str], dir: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_stdim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn stdim");
    assert!(
        out.status.success(),
        "stdim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn cli_pipeline(dir: &Path, workers: &str, tag: &str) -> Vec<u8> {
    let data = format!("data-{tag}");
    let ckpt = format!("pre-{tag}.tensors");
    let report = format!("curve-{tag}");
    stdim_bin(&["--quiet", "--seed", "5", "--workers", workers, "simgen", "--config", "sim.json", "--out", &data], dir);
    stdim_bin(&["--quiet", "--seed", "5", "pretrain", "--data", &data, "--config", "pretrain.json", "--out", &ckpt], dir);
    let curve = serde_json::json!({
        "train_sizes": [2, 4],
        "n_trials": 2,
        "test_size": 0,
        "val_size": 2,
        "data": {"kind": "sim", "dir": data},
        "downstream": {"hyper": {"max_epochs": 2, "patience": 2, "batch_size": 4}},
    });
    std::fs::write(dir.join(format!("curve-{tag}.json")), curve.to_string()).unwrap();
    stdim_bin(
        &[
            "--quiet", "--seed", "5", "--workers", workers, "curve", "--config", &format!("curve-{tag}.json"), "--ckpt",
            &ckpt, "--out", &report,
        ],
        dir,
    );
    std::fs::read(dir.join(report).join("curve.csv")).unwrap()
}

fn plumbing(shared: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    let ck = shared.pretrained().checkpoint.clone();
    ck.save(p.join("ck.tensors")).unwrap();
    let back = Checkpoint::load(p.join("ck.tensors")).unwrap();
    let ckpt_ok = bit_equal(&ck.encoder, &back.encoder) && bit_equal(ck.heads.as_ref().unwrap(), back.heads.as_ref().unwrap());

    let mut rng = seed::rng(12);
    let subjects: Vec<SubjectRecord> = (0..6)
        .map(|i| SubjectRecord {
            id: format!("subject{i}"),
            label: i % 2,
            values: Array2::from_shape_fn((53, 30), |_| StandardNormal.sample(&mut rng)),
        })
        .collect();
    let names = BTreeMap::from([("control".to_string(), 0), ("patient".to_string(), 1)]);
    let manifest = save_subject_dataset(p.join("subjects"), &subjects, &names).unwrap();
    let dataset_ok = load_subject_dataset(manifest).unwrap() == subjects;

    let cfg = SimCorpusConfig {
        pretrain_series: 2,
        pretrain_length: 400,
        pretrain_split: [240, 100, 60],
        n_graphs_downstream: 40,
        samples_per_graph: 2,
        downstream_length: 100,
        downstream_split: [48, 16, 16],
        ..SimCorpusConfig::default()
    };
    std::fs::write(p.join("sim.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let mut pcfg = PretrainConfig::default();
    pcfg.batches_per_epoch = 2;
    pcfg.hyper.max_epochs = 2;
    pcfg.hyper.patience = 2;
    pcfg.hyper.batch_size = 16;
    pcfg.val_batches = 2;
    std::fs::write(p.join("pretrain.json"), serde_json::to_string(&pcfg).unwrap()).unwrap();

    let a = cli_pipeline(p, "1", "a");
    let b = cli_pipeline(p, "1", "b");
    cli_pipeline(p, "4", "c");
    let records = read_curve_csv(p.join("curve-a/curve.csv")).unwrap();
    let parallel = read_curve_csv(p.join("curve-c/curve.csv")).unwrap();
    let csv_ok = records.len() == 12 && records.iter().all(|r| r.value.is_finite());
    let bytes_ok = a == b;
    let values_ok = records == parallel;
    outcome(
        ckpt_ok && dataset_ok && csv_ok && bytes_ok && values_ok,
        format!(
            "checkpoint {ckpt_ok}; subject dataset {dataset_ok}; curve csv reload {csv_ok}; workers=1 byte-identical {bytes_ok}; workers=4 values identical {values_ok}"
        ),
    )
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let mut shared = Shared {
        corpus: SimCorpus::generate(&SimCorpusConfig::desk()).expect("desk corpus"),
        pretrained: None,
    };
    let mut failed = Vec::new();
    let mut check = |n: usize, name: &str, f: &mut dyn FnMut(&mut Shared) -> Outcome| {
        if !run(n) {
            return;
        }
        let t = Instant::now();
        let o = f(&mut shared);
        println!(
            "criterion {n} {name}: {} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(n);
        }
    };
    check(1, "infonce oracle", &mut |_| infonce_oracle());
    check(2, "gradient correctness", &mut |_| gradients());
    check(3, "simulation integrity", &mut |s| simulation(s));
    check(4, "pre-training learns", &mut pretraining);
    check(5, "window baseline", &mut |s| window_baseline(s));
    check(6, "transfer ordering", &mut transfer_ordering);
    check(7, "freeze contract", &mut freeze_contract);
    check(8, "auc oracle", &mut |_| auc_oracle());
    check(9, "pipeline plumbing", &mut plumbing);
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
