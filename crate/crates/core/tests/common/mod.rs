//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;

/// Spectral radius by Gelfand's formula `rho = lim ||A^k||^(1/k)`, with `k = 2^60`
/// reached by repeated squaring of a normalized matrix (log-norms accumulated).
pub fn gelfand_radius(a: &Array2<f64>) -> f64 {
    let frob = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n0 = frob(a);
    if n0 == 0.0 {
        return 0.0;
    }
    let mut b = a / n0;
    // A^(2^m) = exp(log_s) * b with ||b|| = 1
    let mut log_s = n0.ln();
    let mut k = 1.0f64;
    for _ in 0..60 {
        let sq = b.dot(&b);
        let n = frob(&sq);
        if n == 0.0 {
            return 0.0;
        }
        log_s = 2.0 * log_s + n.ln();
        k *= 2.0;
        b = sq / n;
    }
    (log_s / k).exp()
}

/// AUC by enumerating every positive/negative pair.
pub fn pairwise_auc(scores: &[f64], labels: &[usize]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

/// Unshifted textbook form: mean_i [ -ln( exp(s_ii) / sum_j exp(s_ij) ) ].
pub fn naive_infonce(s: &Array2<f64>) -> f64 {
    let b = s.nrows();
    (0..b)
        .map(|i| {
            let denom: f64 = (0..b).map(|j| s[[i, j]].exp()).sum();
            -(s[[i, i]].exp() / denom).ln()
        })
        .sum::<f64>()
        / b as f64
}
