use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_params, named_tensors, ClassifierConfig, CriticHeads, Encoder, EncoderConfig, SequenceClassifier};
use crate::error::{Error, Result};
use crate::seed;
use crate::tensorfile::TensorFile;

const KIND: &str = "stdim-checkpoint";

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    kind: String,
    encoder: EncoderConfig,
    #[serde(default)]
    embed_dim: Option<usize>,
    #[serde(default)]
    classifier: Option<ClassifierConfig>,
}

/// Encoder parameters plus, optionally, critic heads and a sequence classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub encoder: Encoder,
    pub heads: Option<CriticHeads>,
    pub classifier: Option<SequenceClassifier>,
}

impl Checkpoint {
    pub fn to_file(&self) -> TensorFile {
        let meta = Meta {
            kind: KIND.into(),
            encoder: self.encoder.config.clone(),
            embed_dim: self.heads.as_ref().map(CriticHeads::embed_dim),
            classifier: self.classifier.as_ref().map(|c| c.config.clone()),
        };
        let mut file = TensorFile::new(serde_json::to_value(meta).expect("meta serializes"));
        file.tensors.extend(named_tensors(&self.encoder, "encoder"));
        if let Some(h) = &self.heads {
            file.tensors.extend(named_tensors(h, "heads"));
        }
        if let Some(c) = &self.classifier {
            file.tensors.extend(named_tensors(c, "classifier"));
        }
        file
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(&TensorFile::load(path)?, None)
    }

    /// Loads into an encoder built from `expected` rather than the stored config, so
    /// an incompatible checkpoint fails with a dimension error naming the tensor.
    pub fn load_expecting(path: impl AsRef<Path>, expected: &EncoderConfig) -> Result<Self> {
        Self::from_file(&TensorFile::load(path)?, Some(expected))
    }

    pub fn from_file(file: &TensorFile, expected: Option<&EncoderConfig>) -> Result<Self> {
        let meta: Meta = serde_json::from_value(file.meta.clone())
            .map_err(|e| Error::Schema(format!("checkpoint metadata: {e}")))?;
        if meta.kind != KIND {
            return Err(Error::Schema(format!("not a checkpoint (kind `{}`)", meta.kind)));
        }
        for t in &file.tensors {
            let known = t.name.starts_with("encoder.")
                || (meta.embed_dim.is_some() && t.name.starts_with("heads."))
                || (meta.classifier.is_some() && t.name.starts_with("classifier."));
            if !known {
                return Err(Error::UnknownTensor(t.name.clone()));
            }
        }
        let cfg = expected.cloned().unwrap_or(meta.encoder);
        let mut rng = seed::rng(0);
        let mut encoder = Encoder::new(cfg, &mut rng)?;
        load_params(&mut encoder, "encoder", file)?;
        let heads = match meta.embed_dim {
            Some(d) => {
                let mut h = CriticHeads::zeros(encoder.latent_dim(), encoder.spatial_dim(), d);
                load_params(&mut h, "heads", file)?;
                Some(h)
            }
            None => None,
        };
        let classifier = match meta.classifier {
            Some(c) => {
                let mut clf = SequenceClassifier::new(c, &mut rng)?;
                load_params(&mut clf, "classifier", file)?;
                Some(clf)
            }
            None => None,
        };
        Ok(Self {
            encoder,
            heads,
            classifier,
        })
    }
}
