use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::{join, Linear, Params};
use crate::error::{Error, Result};

/// Which critic embedding to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    /// phi, applied to latent states
    Latent,
    /// psi, applied to flattened spatial states
    Spatial,
}

/// Separable critic embeddings: `f(u, v) = phi(u) . psi(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticHeads {
    pub phi: Linear,
    pub psi: Linear,
}

impl CriticHeads {
    pub fn new(latent_dim: usize, spatial_dim: usize, embed_dim: usize, rng: &mut impl rand::Rng) -> Self {
        Self {
            phi: Linear::new(latent_dim, embed_dim, rng),
            psi: Linear::new(spatial_dim, embed_dim, rng),
        }
    }

    pub fn zeros(latent_dim: usize, spatial_dim: usize, embed_dim: usize) -> Self {
        Self {
            phi: Linear::zeros(latent_dim, embed_dim),
            psi: Linear::zeros(spatial_dim, embed_dim),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.phi.outputs()
    }

    pub fn head(&self, which: Embedding) -> &Linear {
        match which {
            Embedding::Latent => &self.phi,
            Embedding::Spatial => &self.psi,
        }
    }

    /// Embeds a batch of row vectors.
    pub fn embed(&self, which: Embedding, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let head = self.head(which);
        if x.ncols() != head.inputs() {
            return Err(Error::Dimension(format!(
                "{which:?} head expects {} inputs, got {}",
                head.inputs(),
                x.ncols()
            )));
        }
        Ok(head.forward(x))
    }
}

/// Embeds a single latent (`Embedding::Latent`) or spatial (`Embedding::Spatial`) vector.
pub fn critic_embed(heads: &CriticHeads, which: Embedding, v: ArrayView1<f64>) -> Result<Array1<f64>> {
    let row = v.insert_axis(ndarray::Axis(0));
    Ok(heads.embed(which, row)?.row(0).to_owned())
}

impl Params for CriticHeads {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.phi.visit(&join(prefix, "phi"), f);
        self.psi.visit(&join(prefix, "psi"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.phi.visit_mut(&join(prefix, "phi"), f);
        self.psi.visit_mut(&join(prefix, "psi"), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_input_zero_bias_gives_zero() {
        let h = CriticHeads::new(6, 9, 4, &mut seed::rng(1));
        let e = critic_embed(&h, Embedding::Spatial, Array1::zeros(9).view()).unwrap();
        assert_eq!(e, Array1::<f64>::zeros(4));
    }

    #[test]
    fn dims_are_checked() {
        let h = CriticHeads::new(6, 9, 4, &mut seed::rng(1));
        assert!(matches!(
            critic_embed(&h, Embedding::Latent, Array1::zeros(9).view()),
            Err(Error::Dimension(_))
        ));
    }
}
