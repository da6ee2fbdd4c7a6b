use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array3, ArrayView2, Axis, Ix3};

use super::{join, visit_array, visit_array_mut, xavier_init, Params};

/// Valid (unpadded) 1-D convolution.
///
/// Activations are row-major `(batch * length) x channels` matrices: row
/// `n * len + t` holds every channel of sample `n` at time `t`. The weight is
/// stored as `(out, kernel, in)` so that an im2col row is a contiguous copy of
/// `kernel` consecutive activation rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub weight: Array3<f64>,
    pub bias: Array1<f64>,
    pub stride: usize,
}

impl Conv1d {
    pub fn new(inputs: usize, outputs: usize, kernel: usize, stride: usize, rng: &mut impl rand::Rng) -> Self {
        let weight = xavier_init(&[outputs, kernel, inputs], rng)
            .into_dimensionality::<Ix3>()
            .expect("3-d");
        Self {
            weight,
            bias: Array1::zeros(outputs),
            stride,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.dim().2
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dim().0
    }

    pub fn kernel(&self) -> usize {
        self.weight.dim().1
    }

    pub fn out_len(&self, len: usize) -> usize {
        (len - self.kernel()) / self.stride + 1
    }

    fn weight2d(&self) -> ArrayView2<'_, f64> {
        let (o, k, i) = self.weight.dim();
        self.weight.view().into_shape_with_order((o, k * i)).expect("contiguous")
    }

    /// `(batch * out_len) x (kernel * in)` patch matrix.
    pub fn im2col(&self, x: ArrayView2<f64>, batch: usize, len: usize) -> Array2<f64> {
        let cin = self.in_channels();
        let k = self.kernel();
        let lo = self.out_len(len);
        let xs = x.as_slice().expect("standard layout");
        let mut cols = Array2::zeros((batch * lo, k * cin));
        let cs = cols.as_slice_mut().unwrap();
        let row = k * cin;
        for n in 0..batch {
            for t in 0..lo {
                let src = (n * len + t * self.stride) * cin;
                let dst = (n * lo + t) * row;
                cs[dst..dst + row].copy_from_slice(&xs[src..src + row]);
            }
        }
        cols
    }

    /// Pre-activation output `(batch * out_len) x out` computed from a patch matrix.
    pub fn forward_cols(&self, cols: &Array2<f64>) -> Array2<f64> {
        let mut y = Array2::zeros((cols.nrows(), self.out_channels()));
        y += &self.bias;
        general_mat_mul(1.0, cols, &self.weight2d().t(), 1.0, &mut y);
        y
    }

    pub fn forward(&self, x: ArrayView2<f64>, batch: usize, len: usize) -> Array2<f64> {
        self.forward_cols(&self.im2col(x, batch, len))
    }

    /// Accumulates parameter gradients and optionally returns the input gradient.
    pub fn backward(
        &self,
        cols: &Array2<f64>,
        dy: ArrayView2<f64>,
        batch: usize,
        len: usize,
        grads: &mut Conv1d,
        want_dx: bool,
    ) -> Option<Array2<f64>> {
        let (o, k, i) = grads.weight.dim();
        {
            let mut gw = grads
                .weight
                .view_mut()
                .into_shape_with_order((o, k * i))
                .expect("contiguous");
            general_mat_mul(1.0, &dy.t(), cols, 1.0, &mut gw);
        }
        grads.bias += &dy.sum_axis(Axis(0));
        if !want_dx {
            return None;
        }
        let dcols = dy.dot(&self.weight2d());
        let cin = i;
        let lo = self.out_len(len);
        let row = k * cin;
        let mut dx = Array2::zeros((batch * len, cin));
        let dxs = dx.as_slice_mut().unwrap();
        let dcs = dcols.as_slice().unwrap();
        for n in 0..batch {
            for t in 0..lo {
                let dst = (n * len + t * self.stride) * cin;
                let src = (n * lo + t) * row;
                for (d, s) in dxs[dst..dst + row].iter_mut().zip(&dcs[src..src + row]) {
                    *d += s;
                }
            }
        }
        Some(dx)
    }
}

impl Params for Conv1d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        visit_array(&join(prefix, "weight"), &self.weight, f);
        visit_array(&join(prefix, "bias"), &self.bias, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        visit_array_mut(&join(prefix, "weight"), &mut self.weight, f);
        visit_array_mut(&join(prefix, "bias"), &mut self.bias, f);
    }
}
