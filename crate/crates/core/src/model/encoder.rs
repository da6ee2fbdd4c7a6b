use ndarray::{Array1, Array2, ArrayView2, ArrayView3};
use serde::{Deserialize, Serialize};

use super::{join, Conv1d, Linear, Params};
use crate::datapipe::Window;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub const fn new(out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            out_channels,
            kernel,
            stride,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderVariant {
    /// Four conv layers (32, 64, 128, 64), kernels (4, 4, 3, 2).
    Sim,
    /// Three conv layers (64, 128, 200), kernels (4, 4, 3).
    Real,
}

impl EncoderVariant {
    pub fn config(self, in_channels: usize, width: usize) -> EncoderConfig {
        let conv_specs = match self {
            EncoderVariant::Sim => vec![
                ConvSpec::new(32, 4, 1),
                ConvSpec::new(64, 4, 1),
                ConvSpec::new(128, 3, 1),
                ConvSpec::new(64, 2, 1),
            ],
            EncoderVariant::Real => vec![
                ConvSpec::new(64, 4, 1),
                ConvSpec::new(128, 4, 1),
                ConvSpec::new(200, 3, 1),
            ],
        };
        EncoderConfig {
            in_channels,
            width,
            conv_specs,
            latent_dim: 256,
            spatial_tap_layer: 3,
        }
    }
}

/// Architecture of the windowed convolutional encoder. Convolutions are unpadded
/// and each is followed by a ReLU; the last conv output is flattened into an affine
/// map to the latent state. `spatial_tap_layer` (1-based) names the conv layer whose
/// flattened output is the spatial state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub in_channels: usize,
    pub width: usize,
    pub conv_specs: Vec<ConvSpec>,
    pub latent_dim: usize,
    pub spatial_tap_layer: usize,
}

impl EncoderConfig {
    pub fn sim() -> Self {
        EncoderVariant::Sim.config(10, 20)
    }

    pub fn real() -> Self {
        EncoderVariant::Real.config(53, 20)
    }

    /// Temporal length entering each layer, followed by the final length.
    pub fn lengths(&self) -> Result<Vec<usize>> {
        if self.in_channels == 0 || self.width == 0 || self.latent_dim == 0 {
            return Err(Error::InvalidConfig(
                "encoder channels, width and latent_dim must be positive".into(),
            ));
        }
        if self.conv_specs.is_empty() {
            return Err(Error::InvalidConfig("encoder needs at least one conv layer".into()));
        }
        if !(1..=self.conv_specs.len()).contains(&self.spatial_tap_layer) {
            return Err(Error::InvalidConfig(format!(
                "spatial_tap_layer {} outside 1..={}",
                self.spatial_tap_layer,
                self.conv_specs.len()
            )));
        }
        let mut lens = vec![self.width];
        for (i, c) in self.conv_specs.iter().enumerate() {
            let len = *lens.last().unwrap();
            if c.kernel == 0 || c.stride == 0 || c.out_channels == 0 {
                return Err(Error::InvalidConfig(format!("conv layer {} has a zero size", i + 1)));
            }
            if c.kernel > len {
                return Err(Error::InvalidConfig(format!(
                    "conv layer {} kernel {} exceeds running length {len}",
                    i + 1,
                    c.kernel
                )));
            }
            lens.push((len - c.kernel) / c.stride + 1);
        }
        Ok(lens)
    }

    pub fn spatial_dim(&self) -> Result<usize> {
        let lens = self.lengths()?;
        let tap = self.spatial_tap_layer;
        Ok(lens[tap] * self.conv_specs[tap - 1].out_channels)
    }

    pub fn flat_dim(&self) -> Result<usize> {
        let lens = self.lengths()?;
        Ok(lens.last().unwrap() * self.conv_specs.last().unwrap().out_channels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub convs: Vec<Conv1d>,
    pub head: Linear,
}

/// Latent and flattened spatial state of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub z: Array1<f64>,
    pub c3: Array1<f64>,
}

/// Forward cache for a batch of windows.
#[derive(Debug, Clone)]
pub struct EncoderPass {
    pub batch: usize,
    lens: Vec<usize>,
    cols: Vec<Array2<f64>>,
    acts: Vec<Array2<f64>>,
    /// batch x latent_dim
    pub z: Array2<f64>,
    tap: usize,
}

impl EncoderPass {
    /// batch x spatial_dim, flattened time-major (index `t * channels + c`).
    pub fn spatial(&self) -> ArrayView2<'_, f64> {
        let a = &self.acts[self.tap - 1];
        let d = a.len() / self.batch;
        a.view().into_shape_with_order((self.batch, d)).expect("contiguous")
    }

    /// Post-ReLU output of conv layer `layer` (0-based) as `(batch * len) x channels`.
    pub fn activation(&self, layer: usize) -> &Array2<f64> {
        &self.acts[layer]
    }

    pub fn layer_len(&self, layer: usize) -> usize {
        self.lens[layer + 1]
    }
}

impl Encoder {
    pub fn new(config: EncoderConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        let flat = config.flat_dim()?;
        let mut convs = Vec::with_capacity(config.conv_specs.len());
        let mut cin = config.in_channels;
        for c in &config.conv_specs {
            convs.push(Conv1d::new(cin, c.out_channels, c.kernel, c.stride, rng));
            cin = c.out_channels;
        }
        let head = Linear::new(flat, config.latent_dim, rng);
        Ok(Self { config, convs, head })
    }

    pub fn spatial_dim(&self) -> usize {
        self.config.spatial_dim().expect("validated at construction")
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    /// Encodes a `(batch, channels, width)` stack of windows.
    pub fn forward(&self, x: ArrayView3<f64>) -> Result<EncoderPass> {
        let (n, c, w) = x.dim();
        if c != self.config.in_channels || w != self.config.width {
            return Err(Error::Dimension(format!(
                "encoder expects windows of {}x{}, got {c}x{w}",
                self.config.in_channels, self.config.width
            )));
        }
        if n == 0 {
            return Err(Error::EmptySequence("empty window batch".into()));
        }
        let lens = self.config.lengths()?;
        let rows = x
            .permuted_axes([0, 2, 1])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((n * w, c))
            .expect("contiguous");
        let mut cols = Vec::with_capacity(self.convs.len());
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.convs.len());
        for (i, conv) in self.convs.iter().enumerate() {
            let input = if i == 0 { rows.view() } else { acts[i - 1].view() };
            let col = conv.im2col(input, n, lens[i]);
            let mut y = conv.forward_cols(&col);
            y.mapv_inplace(|v| v.max(0.0));
            cols.push(col);
            acts.push(y);
        }
        let last = acts.last().unwrap();
        let flat = last
            .view()
            .into_shape_with_order((n, last.len() / n))
            .expect("contiguous");
        let z = self.head.forward(flat);
        Ok(EncoderPass {
            batch: n,
            lens,
            cols,
            acts,
            z,
            tap: self.config.spatial_tap_layer,
        })
    }

    pub fn encode(&self, window: &Window) -> Result<EncoderOutput> {
        let x = window.values.view().insert_axis(ndarray::Axis(0));
        let pass = self.forward(x)?;
        Ok(EncoderOutput {
            z: pass.z.row(0).to_owned(),
            c3: pass.spatial().row(0).to_owned(),
        })
    }

    /// Backpropagates `dz` (batch x latent) and an optional spatial-state gradient
    /// (batch x spatial_dim), accumulating into `grads`.
    pub fn backward(
        &self,
        pass: &EncoderPass,
        dz: ArrayView2<f64>,
        dspatial: Option<ArrayView2<f64>>,
        grads: &mut Encoder,
    ) {
        let n = pass.batch;
        let nl = self.convs.len();
        let last = &pass.acts[nl - 1];
        let flat = last
            .view()
            .into_shape_with_order((n, last.len() / n))
            .expect("contiguous");
        let dflat = self
            .head
            .backward(flat, dz, &mut grads.head, true)
            .expect("requested");
        let mut dact = dflat
            .into_shape_with_order((last.nrows(), last.ncols()))
            .expect("contiguous");
        for l in (0..nl).rev() {
            if l + 1 == pass.tap {
                if let Some(ds) = dspatial {
                    let a = &pass.acts[l];
                    dact += &ds.into_shape_with_order((a.nrows(), a.ncols())).expect("contiguous");
                }
            }
            ndarray::Zip::from(&mut dact)
                .and(&pass.acts[l])
                .for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
            let dx = self.convs[l].backward(
                &pass.cols[l],
                dact.view(),
                n,
                pass.lens[l],
                &mut grads.convs[l],
                l > 0,
            );
            match dx {
                Some(d) => dact = d,
                None => break,
            }
        }
    }
}

impl Params for Encoder {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        for (i, c) in self.convs.iter().enumerate() {
            c.visit(&join(prefix, &format!("conv{i}")), f);
        }
        self.head.visit(&join(prefix, "latent"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        for (i, c) in self.convs.iter_mut().enumerate() {
            c.visit_mut(&join(prefix, &format!("conv{i}")), f);
        }
        self.head.visit_mut(&join(prefix, "latent"), f);
    }
}
