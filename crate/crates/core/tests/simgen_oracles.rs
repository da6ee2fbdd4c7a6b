use ndarray::{array, s, Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use stdim::seed;
use stdim::simgen::*;

mod common;
use common::gelfand_radius;

#[test]
fn radius_matches_gelfand_oracle() {
    for s in 0..20u64 {
        let a = random_stable_transition(10, 0.8, &mut seed::rng(s)).unwrap();
        let oracle = gelfand_radius(a.entries());
        assert!((oracle - 0.8).abs() < 1e-8, "seed {s}: oracle radius {oracle}");
        assert!((a.spectral_radius() - oracle).abs() < 1e-8);
    }
}

#[test]
fn radius_seed_seven_reference() {
    let a = random_stable_transition(10, 0.8, &mut seed::rng(7)).unwrap();
    assert!((gelfand_radius(a.entries()) - 0.8).abs() < 1e-8);
}

#[test]
fn oracle_handles_rotation_blocks() {
    // eigenvalues 0.3 and 0.6 * exp(+-i theta)
    let (c, sn) = (0.6 * 0.7f64.cos(), 0.6 * 0.7f64.sin());
    let m = array![[c, -sn, 0.0], [sn, c, 0.0], [0.0, 0.0, 0.3]];
    assert!((gelfand_radius(&m) - 0.6).abs() < 1e-12);
    assert!((spectral_radius(&m) - 0.6).abs() < 1e-12);
}

#[test]
fn every_corpus_transition_is_stable() {
    let cfg = SimCorpusConfig::desk();
    let all: Vec<TransitionMatrix> = pretrain_transitions(&cfg)
        .unwrap()
        .into_iter()
        .chain(downstream_transitions(&cfg).unwrap())
        .collect();
    assert_eq!(all.len(), cfg.pretrain_series + cfg.n_graphs_downstream);
    for a in &all {
        let oracle = gelfand_radius(a.entries());
        assert!(oracle < 1.0);
        assert!((oracle - a.spectral_radius()).abs() < 1e-8);
    }
}

#[test]
fn var_matches_recurrence_oracle() {
    let a = TransitionMatrix::new(array![[0.5, -0.2], [0.1, 0.3]], 0).unwrap();
    let got = generate_var(&a, 5, 0.7, &mut seed::rng(11)).unwrap();

    let mut rng = seed::rng(11);
    let mut draw = || -> f64 { 0.7 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng) };
    let mut x = [draw(), draw()];
    let mut cols = vec![x];
    for _ in 1..5 {
        let e = [draw(), draw()];
        x = [
            0.5 * x[0] - 0.2 * x[1] + e[0],
            0.1 * x[0] + 0.3 * x[1] + e[1],
        ];
        cols.push(x);
    }
    for (t, c) in cols.iter().enumerate() {
        assert_eq!(got[[0, t]], c[0]);
        assert_eq!(got[[1, t]], c[1]);
    }
}

#[test]
fn svar_rate_one_is_var() {
    let a = random_stable_transition(4, 0.8, &mut seed::rng(1)).unwrap();
    let v = generate_var(&a, 300, 1.0, &mut seed::rng(2)).unwrap();
    let w = generate_svar(&a, 300, 1, 1.0, &mut seed::rng(2)).unwrap();
    assert_eq!(v, w);
}

#[test]
fn svar_equals_generate_then_decimate() {
    let a = random_stable_transition(6, 0.8, &mut seed::rng(3)).unwrap();
    for rate in [2, 3] {
        let full = generate_var(&a, 100 * rate, 1.0, &mut seed::rng(4)).unwrap();
        let got = generate_svar(&a, 100, rate, 1.0, &mut seed::rng(4)).unwrap();
        assert_eq!(got.dim(), (6, 100));
        for t in 0..100 {
            assert_eq!(got.column(t), full.column(rate * t));
        }
    }
}

#[test]
fn noiseless_decimated_decay() {
    let a = TransitionMatrix::new(Array2::eye(3) * 0.5, 0).unwrap();
    let v = Array1::from(vec![1.0, -2.0, 4.0]);
    let x = generate_svar_from(&a, &v, 6, 2, 0.0, &mut seed::rng(0)).unwrap();
    for t in 0..6 {
        let expect = &v * 0.25f64.powi(t as i32);
        assert_eq!(x.column(t), expect);
    }
}

#[test]
fn corpora_reproduce_bit_exactly() {
    let cfg = SimCorpusConfig::desk();
    let a = SimCorpus::generate(&cfg).unwrap();
    let b = SimCorpus::generate(&cfg).unwrap();
    assert_eq!(a, b);
    let other = SimCorpus::generate(&SimCorpusConfig {
        master_seed: 1,
        ..cfg
    })
    .unwrap();
    assert_ne!(a.pretrain.train[0].values, other.pretrain.train[0].values);
}

#[test]
fn default_scale_series_stay_bounded() {
    let a = random_stable_transition(10, 0.8, &mut seed::rng(5)).unwrap();
    let x = generate_var(&a, 20_000, 1.0, &mut seed::rng(6)).unwrap();
    let max = x.fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max.is_finite() && max < 1e6);
}

#[test]
fn downstream_splits_are_graph_disjoint_and_balanced() {
    let cfg = SimCorpusConfig::desk();
    let d = build_downstream_corpus(&cfg).unwrap();
    let ids = |v: &[SimSeries]| v.iter().map(|s| s.graph_id).collect::<std::collections::HashSet<_>>();
    let (tr, va, te) = (ids(&d.train), ids(&d.val), ids(&d.test));
    assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
    for (_, split) in d.iter() {
        let var = split.iter().filter(|s| s.label == SeriesLabel::Var).count();
        let svar = split.len() - var;
        assert!(var.abs_diff(svar) <= cfg.samples_per_graph);
    }
    assert_eq!(
        [d.train.len(), d.val.len(), d.test.len()],
        cfg.downstream_split
    );
}

#[test]
fn pretrain_segments_partition_time() {
    let cfg = SimCorpusConfig::desk();
    let p = build_pretrain_corpus(&cfg).unwrap();
    let [a, b, c] = cfg.pretrain_split;
    assert_eq!(p.train[0].values.dim(), (cfg.n_nodes, a));
    assert_eq!(p.val[0].offset, a);
    assert_eq!(p.test[0].offset + c, cfg.pretrain_length);
    assert_eq!(p.val[0].values.ncols(), b);
    let full = generate_var(
        &pretrain_transitions(&cfg).unwrap()[0],
        cfg.pretrain_length,
        cfg.noise_std,
        &mut seed::rng(p.train[0].seed),
    )
    .unwrap();
    assert_eq!(full.slice(s![.., a..a + b]), p.val[0].values);
}
