//! Self-supervised spatiotemporal pre-training for multichannel time series.
//!
//! The crate simulates VAR/SVAR dynamics, pre-trains a windowed 1-D
//! convolutional encoder with a two-term InfoNCE objective (latent-to-future
//! spatial and spatial-to-spatial critics), and measures transfer to
//! whole-sequence classification with a bidirectional LSTM when the encoder is
//! untrained, frozen, or fine-tuned.
//!
//! Modules follow the pipeline:
//!
//! - [`simgen`]: stable transition matrices, VAR/SVAR series, corpora on disk
//! - [`datapipe`]: windows, contrastive batches, normalization, subject datasets
//! - [`model`]: encoder, critic heads, recurrent classifier, checkpoints
//! - [`objective`]: InfoNCE, the two critic pairings, contrastive accuracy
//! - [`training`]: Adam, pre-training, downstream regimes, gradient checks
//! - [`harness`]: learning curves, AUC/accuracy, reports, CLI commands

pub mod datapipe;
pub mod error;
pub mod harness;
pub mod model;
pub mod objective;
pub mod seed;
pub mod simgen;
pub mod tensorfile;
pub mod training;

pub use error::{Error, Result};
