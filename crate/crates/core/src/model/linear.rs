use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, Ix2};

use super::{join, visit_array, visit_array_mut, xavier_init, Params};

/// Affine map `y = x W^T + b` over a batch of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// out x in
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn new(inputs: usize, outputs: usize, rng: &mut impl rand::Rng) -> Self {
        let weight = xavier_init(&[outputs, inputs], rng)
            .into_dimensionality::<Ix2>()
            .expect("2-d");
        Self {
            weight,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = Array2::zeros((x.nrows(), self.outputs()));
        y += &self.bias;
        general_mat_mul(1.0, &x, &self.weight.t(), 1.0, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grads`; returns `dL/dx` when asked.
    pub fn backward(
        &self,
        x: ArrayView2<f64>,
        dy: ArrayView2<f64>,
        grads: &mut Linear,
        want_dx: bool,
    ) -> Option<Array2<f64>> {
        general_mat_mul(1.0, &dy.t(), &x, 1.0, &mut grads.weight);
        grads.bias += &dy.sum_axis(Axis(0));
        want_dx.then(|| dy.dot(&self.weight))
    }
}

impl Params for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        visit_array(&join(prefix, "weight"), &self.weight, f);
        visit_array(&join(prefix, "bias"), &self.bias, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        visit_array_mut(&join(prefix, "weight"), &mut self.weight, f);
        visit_array_mut(&join(prefix, "bias"), &mut self.bias, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn forward_matches_dense_loop() {
        let mut rng = seed::rng(2);
        let mut l = Linear::new(5, 3, &mut rng);
        l.bias = Array1::from(vec![0.1, -0.2, 0.3]);
        let x = Array2::from_shape_fn((4, 5), |(i, j)| (i as f64 - 1.5) * 0.3 + j as f64 * 0.1);
        let y = l.forward(x.view());
        for i in 0..4 {
            for o in 0..3 {
                let mut acc = l.bias[o];
                for j in 0..5 {
                    acc += l.weight[[o, j]] * x[[i, j]];
                }
                assert!((acc - y[[i, o]]).abs() < 1e-12);
            }
        }
    }
}
