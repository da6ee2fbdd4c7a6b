//! Encoder, critic heads, and recurrent classifier, with hand-written backward passes.
//!
//! Every trainable struct implements [`Params`]; a gradient is represented as a
//! value of the same type, so optimizer state, finite-difference checks and
//! checkpoints all walk parameters and gradients in the same fixed order.

mod checkpoint;
mod classifier;
mod conv;
mod critic;
mod encoder;
mod init;
mod linear;
mod lstm;

pub use checkpoint::Checkpoint;
pub use classifier::{classify_sequence, ClassifierConfig, ClassifierPass, SequenceClassifier};
pub use conv::Conv1d;
pub use critic::{critic_embed, CriticHeads, Embedding};
pub use encoder::{ConvSpec, Encoder, EncoderConfig, EncoderOutput, EncoderPass, EncoderVariant};
pub use init::{xavier_init, xavier_uniform};
pub use linear::Linear;
pub use lstm::{BiLstm, Lstm, LstmPass};

use ndarray::{ArrayBase, DataMut, Dimension, OwnedRepr};

use crate::error::{Error, Result};
use crate::tensorfile::{NamedTensor, TensorFile};

/// Fixed-order traversal over named parameter tensors.
pub trait Params {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64]));
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub(crate) fn visit_array<D: Dimension>(
    name: &str,
    a: &ArrayBase<OwnedRepr<f64>, D>,
    f: &mut dyn FnMut(&str, &[usize], &[f64]),
) {
    f(name, a.shape(), a.as_slice().expect("parameters are kept in standard layout"));
}

pub(crate) fn visit_array_mut<S: DataMut<Elem = f64>, D: Dimension>(
    name: &str,
    a: &mut ArrayBase<S, D>,
    f: &mut dyn FnMut(&str, &[usize], &mut [f64]),
) {
    let shape = a.shape().to_vec();
    f(name, &shape, a.as_slice_mut().expect("parameters are kept in standard layout"));
}

pub fn param_count(p: &impl Params) -> usize {
    let mut n = 0;
    p.visit("", &mut |_, _, d| n += d.len());
    n
}

pub fn flatten(p: &impl Params) -> Vec<f64> {
    let mut out = Vec::new();
    p.visit("", &mut |_, _, d| out.extend_from_slice(d));
    out
}

/// Overwrites every parameter from a flat vector in traversal order.
pub fn assign_flat(p: &mut impl Params, values: &[f64]) {
    let mut at = 0;
    p.visit_mut("", &mut |_, _, d| {
        d.copy_from_slice(&values[at..at + d.len()]);
        at += d.len();
    });
    assert_eq!(at, values.len(), "flat vector length mismatch");
}

pub fn zeros_like<P: Params + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.visit_mut("", &mut |_, _, d| d.fill(0.0));
    z
}

pub fn fill_zero(p: &mut impl Params) {
    p.visit_mut("", &mut |_, _, d| d.fill(0.0));
}

pub fn add_assign(dst: &mut impl Params, src: &impl Params) {
    let flat = flatten(src);
    let mut at = 0;
    dst.visit_mut("", &mut |_, _, d| {
        let n = d.len();
        for (x, y) in d.iter_mut().zip(&flat[at..at + n]) {
            *x += y;
        }
        at += n;
    });
}

pub fn all_finite(p: &impl Params) -> bool {
    let mut ok = true;
    p.visit("", &mut |_, _, d| ok &= d.iter().all(|v| v.is_finite()));
    ok
}

/// Bitwise equality of every tensor.
pub fn bit_equal(a: &impl Params, b: &impl Params) -> bool {
    let fa = flatten(a);
    let fb = flatten(b);
    fa.len() == fb.len() && fa.iter().zip(&fb).all(|(x, y)| x.to_bits() == y.to_bits())
}

pub fn named_tensors(p: &impl Params, prefix: &str) -> Vec<NamedTensor> {
    let mut out = Vec::new();
    p.visit(prefix, &mut |name, shape, data| {
        out.push(NamedTensor {
            name: name.to_string(),
            shape: shape.to_vec(),
            data: data.to_vec(),
        })
    });
    out
}

/// Fills `p` from the tensors under `prefix.` in `file`. All names and shapes are
/// validated before anything is written, so a failed load leaves `p` untouched.
pub fn load_params(p: &mut impl Params, prefix: &str, file: &TensorFile) -> Result<()> {
    let mut expected: Vec<(String, Vec<usize>)> = Vec::new();
    p.visit(prefix, &mut |name, shape, _| expected.push((name.to_string(), shape.to_vec())));
    let dotted = format!("{prefix}.");
    for t in file.tensors.iter().filter(|t| t.name.starts_with(&dotted)) {
        match expected.iter().find(|(n, _)| *n == t.name) {
            None => return Err(Error::UnknownTensor(t.name.clone())),
            Some((_, shape)) if *shape != t.shape => {
                return Err(Error::Dimension(format!(
                    "tensor `{}` has shape {:?}, model expects {:?}",
                    t.name, t.shape, shape
                )))
            }
            Some(_) => {}
        }
    }
    for (name, _) in &expected {
        if file.get(name).is_none() {
            return Err(Error::MissingTensor(name.clone()));
        }
    }
    p.visit_mut(prefix, &mut |name, _, d| {
        d.copy_from_slice(&file.get(name).expect("validated above").data);
    });
    Ok(())
}
