use crate::model::Params;

use super::Hyperparams;

/// Adam with bias-corrected moments. State is allocated on the first step, so a
/// parameter group that never steps holds no optimizer state at all.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(h: &Hyperparams) -> Self {
        Self {
            lr: h.learning_rate,
            beta1: h.adam_beta1,
            beta2: h.adam_beta2,
            eps: h.adam_eps,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn state_len(&self) -> usize {
        self.m.iter().map(Vec::len).sum()
    }

    pub fn step<P: Params>(&mut self, params: &mut P, grads: &P) {
        let mut g_flat: Vec<Vec<f64>> = Vec::new();
        grads.visit("", &mut |_, _, d| g_flat.push(d.to_vec()));
        if self.m.is_empty() {
            self.m = g_flat.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let mut idx = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        params.visit_mut("", &mut |_, _, p| {
            let g = &g_flat[idx];
            let m = &mut ms[idx];
            let v = &mut vs[idx];
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                p[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
            idx += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Linear;
    use ndarray::array;

    #[test]
    fn first_step_matches_hand_computation() {
        let h = Hyperparams {
            learning_rate: 0.1,
            ..Hyperparams::default()
        };
        let mut p = Linear::zeros(2, 1);
        p.weight = array![[1.0, -2.0]];
        let mut g = Linear::zeros(2, 1);
        g.weight = array![[0.5, -3.0]];
        g.bias = array![0.25];
        let mut opt = Adam::new(&h);
        opt.step(&mut p, &g);
        // m_hat = g, v_hat = g^2 after one step, so the delta is -lr * g / (|g| + eps).
        for (w0, gw, w1) in [(1.0, 0.5, p.weight[[0, 0]]), (-2.0, -3.0, p.weight[[0, 1]]), (0.0, 0.25, p.bias[0])] {
            let m = (1.0 - 0.9) * gw;
            let v = (1.0 - 0.999) * gw * gw;
            let mhat = m / (1.0 - 0.9);
            let vhat = v / (1.0 - 0.999);
            let expect = w0 - 0.1 * mhat / (f64::sqrt(vhat) + 1e-8);
            assert!((w1 - expect).abs() < 1e-15, "{w1} vs {expect}");
        }
    }
}
