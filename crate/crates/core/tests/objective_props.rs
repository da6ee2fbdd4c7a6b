use ndarray::{array, Array2};
use proptest::prelude::*;
use stdim::datapipe::sample_contrastive_batch;
use stdim::model::{critic_embed, CriticHeads, Embedding, Encoder, EncoderConfig};
use stdim::objective::*;
use stdim::seed;

mod common;
use common::naive_infonce;

fn scores(v: Array2<f64>) -> ScoreMatrix {
    ScoreMatrix::new(v).unwrap()
}

fn square(max_b: usize, range: f64) -> impl Strategy<Value = Array2<f64>> {
    (2..=max_b).prop_flat_map(move |b| {
        prop::collection::vec(-range..range, b * b)
            .prop_map(move |v| Array2::from_shape_vec((b, b), v).unwrap())
    })
}

#[test]
fn closed_form_values() {
    assert!((infonce_loss(&scores(Array2::zeros((4, 4)))) - 4f64.ln()).abs() < 1e-15);
    let two = scores(array![[10.0, 0.0], [0.0, 10.0]]);
    assert!((infonce_loss(&two) - (-10f64).exp().ln_1p()).abs() < 1e-15);
    let big = scores(array![[800.0, 0.0], [0.0, 800.0]]);
    assert!(infonce_loss(&big).is_finite());
}

#[test]
fn zero_heads_give_two_ln_b() {
    let enc = Encoder::new(EncoderConfig::sim(), &mut seed::rng(0)).unwrap();
    let heads = CriticHeads::zeros(256, 1536, 128);
    let seg = Array2::from_shape_fn((10, 200), |(c, t)| ((c * 31 + t * 7) as f64).sin());
    let batch = sample_contrastive_batch(&[seg.view()], 4, 20, &mut seed::rng(1)).unwrap();
    let v = stdim_loss(&batch, &enc, &heads).unwrap();
    assert!((v.total - 2.0 * 4f64.ln()).abs() < 1e-12);
    assert_eq!(v.ls_term, v.ss_term);
}

#[test]
fn critic_scores_are_separable_dot_products() {
    let enc = Encoder::new(EncoderConfig::sim(), &mut seed::rng(2)).unwrap();
    let heads = CriticHeads::new(256, 1536, 128, &mut seed::rng(3));
    let seg = Array2::from_shape_fn((10, 120), |(c, t)| ((c + 1) as f64 * 0.1 * t as f64).cos());
    let batch = sample_contrastive_batch(&[seg.view()], 2, 20, &mut seed::rng(4)).unwrap();
    let s = stdim_scores(&batch, &enc, &heads).unwrap();
    let out = |w| enc.encode(w).unwrap();
    for i in 0..2 {
        let a = out(&batch.anchors[i]);
        let phi = critic_embed(&heads, Embedding::Latent, a.z.view()).unwrap();
        let psi_a = critic_embed(&heads, Embedding::Spatial, a.c3.view()).unwrap();
        for j in 0..2 {
            let p = out(&batch.positives[j]);
            let psi_p = critic_embed(&heads, Embedding::Spatial, p.c3.view()).unwrap();
            let ls = phi.dot(&psi_p);
            let ss = psi_a.dot(&psi_p);
            assert!((s.ls.view()[[i, j]] - ls).abs() < 1e-9 * (1.0 + ls.abs()));
            assert!((s.ss.view()[[i, j]] - ss).abs() < 1e-9 * (1.0 + ss.abs()));
        }
    }
}

#[test]
fn spatial_term_ignores_latent_head() {
    let enc = Encoder::new(EncoderConfig::sim(), &mut seed::rng(5)).unwrap();
    let heads = CriticHeads::new(256, 1536, 128, &mut seed::rng(6));
    let seg = Array2::from_shape_fn((10, 300), |(c, t)| ((c * 13 + t) as f64 * 0.37).sin());
    let batch = sample_contrastive_batch(&[seg.view()], 8, 20, &mut seed::rng(7)).unwrap();
    let base = stdim_loss(&batch, &enc, &heads).unwrap();
    let mut moved = heads.clone();
    moved.phi.weight.mapv_inplace(|v| v * 3.0 + 0.01);
    let other = stdim_loss(&batch, &enc, &moved).unwrap();
    assert_eq!(base.ss_term, other.ss_term);
    assert_ne!(base.ls_term, other.ls_term);
    assert!((base.total - base.ls_term - base.ss_term).abs() < 1e-12);
}

proptest! {
    #[test]
    fn matches_textbook_form(s in square(8, 5.0)) {
        let got = infonce_loss(&scores(s.clone()));
        prop_assert!((got - naive_infonce(&s)).abs() < 1e-10);
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn row_shift_invariance(s in square(6, 20.0), shift in -50.0f64..50.0, row in 0usize..6) {
        let row = row % s.nrows();
        let mut t = s.clone();
        t.row_mut(row).mapv_inplace(|v| v + shift);
        let (a, b) = (infonce_loss(&scores(s)), infonce_loss(&scores(t)));
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn raising_a_positive_lowers_the_loss(s in square(6, 5.0), i in 0usize..6, bump in 0.01f64..3.0) {
        let i = i % s.nrows();
        let mut t = s.clone();
        t[[i, i]] += bump;
        prop_assert!(infonce_loss(&scores(t)) < infonce_loss(&scores(s)));
    }

    #[test]
    fn gradient_rows_sum_to_zero(s in square(6, 5.0)) {
        let (loss, g) = infonce_loss_and_grad(&scores(s.clone()));
        prop_assert!((loss - infonce_loss(&scores(s))).abs() < 1e-12);
        for row in g.rows() {
            prop_assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn accuracy_counts_strict_row_maxima(s in square(8, 3.0)) {
        let s = s.mapv(|v| (v * 2.0).round() / 2.0); // coarse grid to provoke ties
        let b = s.nrows();
        let hits = (0..b)
            .filter(|&i| (0..b).filter(|&j| j != i).all(|j| s[[i, j]] < s[[i, i]]))
            .count();
        let acc = contrastive_accuracy(&scores(s));
        prop_assert_eq!(acc, hits as f64 / b as f64);
        prop_assert!((0.0..=1.0).contains(&acc));
    }
}
