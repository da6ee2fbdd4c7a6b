//! InfoNCE over in-batch score matrices and the two spatiotemporal critic pairings.
//!
//! For a batch of B anchors and their B successor windows, entry (i, j) of a score
//! matrix is the critic value of anchor i against candidate j; the diagonal holds
//! the positive pairs. The loss is the mean over anchors of
//! `logsumexp_j s_ij - s_ii`, i.e. the positive is included in the denominator.

use ndarray::{Array2, ArrayView2, Axis};

use crate::datapipe::ContrastiveBatch;
use crate::error::{Error, Result};
use crate::model::{CriticHeads, Embedding, Encoder, EncoderPass};

/// Square B x B critic scores; the positive of row i sits at column i.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix(Array2<f64>);

impl ScoreMatrix {
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        if scores.nrows() != scores.ncols() {
            return Err(Error::Dimension(format!(
                "score matrix must be square, got {:?}",
                scores.dim()
            )));
        }
        if scores.nrows() < 2 {
            return Err(Error::Dimension("score matrix needs at least 2 rows".into()));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("score matrix entry".into()));
        }
        Ok(Self(scores))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

fn row_logsumexp(row: ndarray::ArrayView1<f64>) -> f64 {
    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn infonce_loss(scores: &ScoreMatrix) -> f64 {
    let s = &scores.0;
    let b = s.nrows();
    s.rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| row_logsumexp(row) - row[i])
        .sum::<f64>()
        / b as f64
}

/// Loss and its gradient with respect to every score: `(softmax(row) - onehot) / B`.
pub fn infonce_loss_and_grad(scores: &ScoreMatrix) -> (f64, Array2<f64>) {
    let s = &scores.0;
    let b = s.nrows();
    let mut grad = Array2::zeros(s.dim());
    let mut loss = 0.0;
    for (i, (row, mut g)) in s.rows().into_iter().zip(grad.rows_mut()).enumerate() {
        let lse = row_logsumexp(row);
        loss += lse - row[i];
        for (gj, &v) in g.iter_mut().zip(row) {
            *gj = (v - lse).exp() / b as f64;
        }
        g[i] -= 1.0 / b as f64;
    }
    (loss / b as f64, grad)
}

/// Fraction of rows whose strict maximum is on the diagonal; ties count as misses.
pub fn contrastive_accuracy(scores: &ScoreMatrix) -> f64 {
    let s = &scores.0;
    let hits = s
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(i, row)| row.iter().enumerate().all(|(j, &v)| j == *i || v < row[*i]))
        .count();
    hits as f64 / s.nrows() as f64
}

/// Latent-to-future-spatial and spatial-to-spatial score matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct StdimScores {
    pub ls: ScoreMatrix,
    pub ss: ScoreMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdimLossValue {
    pub total: f64,
    pub ls_term: f64,
    pub ss_term: f64,
}

/// Intermediate values needed to backpropagate the objective.
struct StdimForward {
    pass: EncoderPass,
    phi_z: Array2<f64>,
    psi_anchor: Array2<f64>,
    psi_pos: Array2<f64>,
    scores: StdimScores,
}

fn stdim_forward(batch: &ContrastiveBatch, encoder: &Encoder, heads: &CriticHeads) -> Result<StdimForward> {
    let b = batch.size();
    let pass = encoder.forward(batch.stacked().view())?;
    let z_anchor = pass.z.slice(ndarray::s![..b, ..]);
    let spatial = pass.spatial();
    let phi_z = heads.embed(Embedding::Latent, z_anchor)?;
    let psi_all = heads.embed(Embedding::Spatial, spatial)?;
    let psi_anchor = psi_all.slice(ndarray::s![..b, ..]).to_owned();
    let psi_pos = psi_all.slice(ndarray::s![b.., ..]).to_owned();
    let ls = ScoreMatrix::new(phi_z.dot(&psi_pos.t()))?;
    let ss = ScoreMatrix::new(psi_anchor.dot(&psi_pos.t()))?;
    Ok(StdimForward {
        pass,
        phi_z,
        psi_anchor,
        psi_pos,
        scores: StdimScores { ls, ss },
    })
}

/// `ls(i, j) = phi(z_i) . psi(c_j+)`, `ss(i, j) = psi(c_i) . psi(c_j+)`, where `+`
/// marks the batch positives. psi is shared by both sides of `ss`.
pub fn stdim_scores(batch: &ContrastiveBatch, encoder: &Encoder, heads: &CriticHeads) -> Result<StdimScores> {
    Ok(stdim_forward(batch, encoder, heads)?.scores)
}

pub fn stdim_loss(batch: &ContrastiveBatch, encoder: &Encoder, heads: &CriticHeads) -> Result<StdimLossValue> {
    let s = stdim_scores(batch, encoder, heads)?;
    let ls_term = infonce_loss(&s.ls);
    let ss_term = infonce_loss(&s.ss);
    Ok(StdimLossValue {
        total: ls_term + ss_term,
        ls_term,
        ss_term,
    })
}

/// Loss value, scores, and gradients accumulated into `enc_grads` / `head_grads`.
pub fn stdim_loss_and_grads(
    batch: &ContrastiveBatch,
    encoder: &Encoder,
    heads: &CriticHeads,
    enc_grads: &mut Encoder,
    head_grads: &mut CriticHeads,
) -> Result<(StdimLossValue, StdimScores)> {
    let b = batch.size();
    let fw = stdim_forward(batch, encoder, heads)?;
    let (ls_term, d_ls) = infonce_loss_and_grad(&fw.scores.ls);
    let (ss_term, d_ss) = infonce_loss_and_grad(&fw.scores.ss);

    // ls = phi_z psi_pos^T ; ss = psi_anchor psi_pos^T
    let d_phi_z = d_ls.dot(&fw.psi_pos);
    let d_psi_anchor = d_ss.dot(&fw.psi_pos);
    let d_psi_pos = d_ls.t().dot(&fw.phi_z) + d_ss.t().dot(&fw.psi_anchor);
    let d_psi_all = ndarray::concatenate![Axis(0), d_psi_anchor, d_psi_pos];

    let z_anchor = fw.pass.z.slice(ndarray::s![..b, ..]);
    let dz_anchor = heads
        .phi
        .backward(z_anchor, d_phi_z.view(), &mut head_grads.phi, true)
        .expect("requested");
    let dspatial = heads
        .psi
        .backward(fw.pass.spatial(), d_psi_all.view(), &mut head_grads.psi, true)
        .expect("requested");
    let mut dz = Array2::zeros(fw.pass.z.dim());
    dz.slice_mut(ndarray::s![..b, ..]).assign(&dz_anchor);
    encoder.backward(&fw.pass, dz.view(), Some(dspatial.view()), enc_grads);
    Ok((
        StdimLossValue {
            total: ls_term + ss_term,
            ls_term,
            ss_term,
        },
        fw.scores,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_scores_give_ln_b() {
        let s = ScoreMatrix::new(Array2::zeros((4, 4))).unwrap();
        assert!((infonce_loss(&s) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_candidate_closed_form() {
        let s = ScoreMatrix::new(array![[10.0, 0.0], [0.0, 10.0]]).unwrap();
        let expect = (1.0 + (-10f64).exp()).ln();
        assert!((infonce_loss(&s) - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(ScoreMatrix::new(Array2::zeros((2, 3))), Err(Error::Dimension(_))));
        assert!(matches!(
            ScoreMatrix::new(array![[0.0, f64::NAN], [0.0, 0.0]]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn accuracy_tie_rule() {
        let eq = ScoreMatrix::new(Array2::from_elem((3, 3), 0.5)).unwrap();
        assert_eq!(contrastive_accuracy(&eq), 0.0);
        let dom = ScoreMatrix::new(array![[3.0, 1.0, 2.0], [0.0, 1.0, -1.0], [0.0, 0.0, 0.1]]).unwrap();
        assert_eq!(contrastive_accuracy(&dom), 1.0);
    }
}
