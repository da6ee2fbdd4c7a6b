use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{join, BiLstm, Linear, LstmPass, Params};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub input_dim: usize,
    /// per direction
    pub recurrent_hidden: usize,
    pub head_hidden: usize,
    pub n_classes: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            input_dim: 256,
            recurrent_hidden: 200,
            head_hidden: 200,
            n_classes: 2,
        }
    }
}

/// Bidirectional LSTM over a sequence of latent states; the two final hidden
/// states are concatenated and mapped through affine -> ReLU -> affine to logits.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceClassifier {
    pub config: ClassifierConfig,
    pub rnn: BiLstm,
    pub fc1: Linear,
    pub fc2: Linear,
}

#[derive(Debug, Clone)]
pub struct ClassifierPass {
    pub steps: usize,
    pub batch: usize,
    fwd: LstmPass,
    bwd: LstmPass,
    hcat: Array2<f64>,
    hidden: Array2<f64>,
    /// batch x n_classes
    pub logits: Array2<f64>,
}

impl SequenceClassifier {
    pub fn new(config: ClassifierConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        if config.input_dim == 0 || config.recurrent_hidden == 0 || config.head_hidden == 0 || config.n_classes < 2 {
            return Err(Error::InvalidConfig(format!("degenerate classifier config {config:?}")));
        }
        let rnn = BiLstm::new(config.input_dim, config.recurrent_hidden, rng);
        let fc1 = Linear::new(2 * config.recurrent_hidden, config.head_hidden, rng);
        let fc2 = Linear::new(config.head_hidden, config.n_classes, rng);
        Ok(Self { config, rnn, fc1, fc2 })
    }

    /// `xs` is time-major: row `t * batch + b` is step `t` of sequence `b`.
    pub fn forward(&self, xs: ArrayView2<f64>, steps: usize, batch: usize) -> Result<ClassifierPass> {
        if steps == 0 || batch == 0 {
            return Err(Error::EmptySequence("classifier needs at least one step".into()));
        }
        if xs.dim() != (steps * batch, self.config.input_dim) {
            return Err(Error::Dimension(format!(
                "classifier expects ({}, {}) inputs, got {:?}",
                steps * batch,
                self.config.input_dim,
                xs.dim()
            )));
        }
        let fwd = self.rnn.forward.forward(xs, steps, batch, false);
        let bwd = self.rnn.backward.forward(xs, steps, batch, true);
        let hcat = concatenate![Axis(1), *fwd.final_hidden(), *bwd.final_hidden()];
        let mut hidden = self.fc1.forward(hcat.view());
        hidden.mapv_inplace(|v| v.max(0.0));
        let logits = self.fc2.forward(hidden.view());
        Ok(ClassifierPass {
            steps,
            batch,
            fwd,
            bwd,
            hcat,
            hidden,
            logits,
        })
    }

    /// Accumulates gradients for `dlogits`; returns the input-sequence gradient when asked.
    pub fn backward(
        &self,
        xs: ArrayView2<f64>,
        pass: &ClassifierPass,
        dlogits: ArrayView2<f64>,
        grads: &mut SequenceClassifier,
        want_dx: bool,
    ) -> Option<Array2<f64>> {
        let mut dhidden = self
            .fc2
            .backward(pass.hidden.view(), dlogits, &mut grads.fc2, true)
            .unwrap();
        ndarray::Zip::from(&mut dhidden).and(&pass.hidden).for_each(|d, &a| {
            if a <= 0.0 {
                *d = 0.0
            }
        });
        let dh = self
            .fc1
            .backward(pass.hcat.view(), dhidden.view(), &mut grads.fc1, true)
            .unwrap();
        let hsz = self.config.recurrent_hidden;
        let dxf = self.rnn.forward.backward(
            xs,
            &pass.fwd,
            dh.slice(s![.., ..hsz]),
            &mut grads.rnn.forward,
            want_dx,
        );
        let dxb = self.rnn.backward.backward(
            xs,
            &pass.bwd,
            dh.slice(s![.., hsz..]),
            &mut grads.rnn.backward,
            want_dx,
        );
        match (dxf, dxb) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        }
    }
}

/// Logits for one sequence of latent states (steps x input_dim).
pub fn classify_sequence(clf: &SequenceClassifier, z_sequence: ArrayView2<f64>) -> Result<Array1<f64>> {
    if z_sequence.nrows() == 0 {
        return Err(Error::EmptySequence("empty latent sequence".into()));
    }
    let pass = clf.forward(z_sequence, z_sequence.nrows(), 1)?;
    Ok(pass.logits.row(0).to_owned())
}

impl Params for SequenceClassifier {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.rnn.visit(&join(prefix, "rnn"), f);
        self.fc1.visit(&join(prefix, "fc1"), f);
        self.fc2.visit(&join(prefix, "fc2"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.rnn.visit_mut(&join(prefix, "rnn"), f);
        self.fc1.visit_mut(&join(prefix, "fc1"), f);
        self.fc2.visit_mut(&join(prefix, "fc2"), f);
    }
}
