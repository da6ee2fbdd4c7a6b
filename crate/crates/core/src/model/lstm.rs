use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Ix2};

use super::{join, visit_array, visit_array_mut, xavier_init, Params};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single-direction LSTM. Gate blocks in `w_ih`/`w_hh`/`bias` are ordered
/// input, forget, cell, output. Sequences are time-major `(steps * batch) x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmPass {
    steps: usize,
    batch: usize,
    reverse: bool,
    /// activated gates per processing step, batch x 4H
    gates: Vec<Array2<f64>>,
    /// cell state after each processing step
    cells: Vec<Array2<f64>>,
    /// hidden state after each processing step
    hidden: Vec<Array2<f64>>,
}

impl LstmPass {
    pub fn final_hidden(&self) -> &Array2<f64> {
        self.hidden.last().expect("at least one step")
    }

    fn time(&self, k: usize) -> usize {
        if self.reverse {
            self.steps - 1 - k
        } else {
            k
        }
    }
}

impl Lstm {
    pub fn new(inputs: usize, hidden: usize, rng: &mut impl rand::Rng) -> Self {
        let w_ih = xavier_init(&[4 * hidden, inputs], rng).into_dimensionality::<Ix2>().unwrap();
        let w_hh = xavier_init(&[4 * hidden, hidden], rng).into_dimensionality::<Ix2>().unwrap();
        Self {
            w_ih,
            w_hh,
            bias: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn inputs(&self) -> usize {
        self.w_ih.ncols()
    }

    pub fn forward(&self, xs: ArrayView2<f64>, steps: usize, batch: usize, reverse: bool) -> LstmPass {
        let h = self.hidden();
        let mut xproj = Array2::zeros((steps * batch, 4 * h));
        xproj += &self.bias;
        general_mat_mul(1.0, &xs, &self.w_ih.t(), 1.0, &mut xproj);

        let mut pass = LstmPass {
            steps,
            batch,
            reverse,
            gates: Vec::with_capacity(steps),
            cells: Vec::with_capacity(steps),
            hidden: Vec::with_capacity(steps),
        };
        let mut h_prev = Array2::<f64>::zeros((batch, h));
        let mut c_prev = Array2::<f64>::zeros((batch, h));
        for k in 0..steps {
            let t = pass.time(k);
            let mut g = xproj.slice(s![t * batch..(t + 1) * batch, ..]).to_owned();
            if k > 0 {
                general_mat_mul(1.0, &h_prev, &self.w_hh.t(), 1.0, &mut g);
            }
            let mut c = Array2::zeros((batch, h));
            let mut hn = Array2::zeros((batch, h));
            {
                let gs = g.as_slice_mut().unwrap();
                let cp = c_prev.as_slice().unwrap();
                let cs = c.as_slice_mut().unwrap();
                let hs = hn.as_slice_mut().unwrap();
                for b in 0..batch {
                    let row = &mut gs[b * 4 * h..(b + 1) * 4 * h];
                    for j in 0..h {
                        let i = sigmoid(row[j]);
                        let f = sigmoid(row[h + j]);
                        let gg = row[2 * h + j].tanh();
                        let o = sigmoid(row[3 * h + j]);
                        row[j] = i;
                        row[h + j] = f;
                        row[2 * h + j] = gg;
                        row[3 * h + j] = o;
                        let cv = f * cp[b * h + j] + i * gg;
                        cs[b * h + j] = cv;
                        hs[b * h + j] = o * cv.tanh();
                    }
                }
            }
            pass.gates.push(g);
            pass.cells.push(c.clone());
            pass.hidden.push(hn.clone());
            c_prev = c;
            h_prev = hn;
        }
        pass
    }

    /// Backpropagation through time from a gradient on the final hidden state only.
    pub fn backward(
        &self,
        xs: ArrayView2<f64>,
        pass: &LstmPass,
        dh_final: ArrayView2<f64>,
        grads: &mut Lstm,
        want_dx: bool,
    ) -> Option<Array2<f64>> {
        let h = self.hidden();
        let batch = pass.batch;
        let mut dxproj = Array2::<f64>::zeros((pass.steps * batch, 4 * h));
        let mut dh = dh_final.to_owned();
        let mut dc = Array2::<f64>::zeros((batch, h));
        let zeros = Array2::<f64>::zeros((batch, h));
        for k in (0..pass.steps).rev() {
            let t = pass.time(k);
            let gates = pass.gates[k].as_slice().unwrap();
            let c = pass.cells[k].as_slice().unwrap();
            let c_prev = if k > 0 { &pass.cells[k - 1] } else { &zeros };
            let cp = c_prev.as_slice().unwrap();
            let mut dpre = dxproj.slice_mut(s![t * batch..(t + 1) * batch, ..]);
            {
                let dhs = dh.as_slice().unwrap();
                let dcs = dc.as_slice_mut().unwrap();
                for b in 0..batch {
                    let g = &gates[b * 4 * h..(b + 1) * 4 * h];
                    let mut drow = dpre.row_mut(b);
                    let dr = drow.as_slice_mut().unwrap();
                    for j in 0..h {
                        let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                        let idx = b * h + j;
                        let tc = c[idx].tanh();
                        let dhv = dhs[idx];
                        let dct = dcs[idx] + dhv * o * (1.0 - tc * tc);
                        dr[j] = dct * gg * i * (1.0 - i);
                        dr[h + j] = dct * cp[idx] * f * (1.0 - f);
                        dr[2 * h + j] = dct * i * (1.0 - gg * gg);
                        dr[3 * h + j] = dhv * tc * o * (1.0 - o);
                        dcs[idx] = dct * f;
                    }
                }
            }
            if k > 0 {
                general_mat_mul(1.0, &dpre.t(), &pass.hidden[k - 1], 1.0, &mut grads.w_hh);
                dh = dpre.dot(&self.w_hh);
            }
        }
        general_mat_mul(1.0, &dxproj.t(), &xs, 1.0, &mut grads.w_ih);
        grads.bias += &dxproj.sum_axis(Axis(0));
        want_dx.then(|| dxproj.dot(&self.w_ih))
    }
}

impl Params for Lstm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        visit_array(&join(prefix, "w_ih"), &self.w_ih, f);
        visit_array(&join(prefix, "w_hh"), &self.w_hh, f);
        visit_array(&join(prefix, "bias"), &self.bias, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        visit_array_mut(&join(prefix, "w_ih"), &mut self.w_ih, f);
        visit_array_mut(&join(prefix, "w_hh"), &mut self.w_hh, f);
        visit_array_mut(&join(prefix, "bias"), &mut self.bias, f);
    }
}

/// Forward and backward LSTMs over the same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

impl BiLstm {
    pub fn new(inputs: usize, hidden: usize, rng: &mut impl rand::Rng) -> Self {
        Self {
            forward: Lstm::new(inputs, hidden, rng),
            backward: Lstm::new(inputs, hidden, rng),
        }
    }
}

impl Params for BiLstm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.forward.visit(&join(prefix, "fwd"), f);
        self.backward.visit(&join(prefix, "bwd"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.forward.visit_mut(&join(prefix, "fwd"), f);
        self.backward.visit_mut(&join(prefix, "bwd"), f);
    }
}
