use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 16,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn pretrain() -> Self {
        Self {
            batch_size: 64,
            ..Self::default()
        }
    }

    pub fn downstream() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.adam_beta1, self.adam_beta2, self.adam_eps];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate and Adam constants must be positive: {self:?}"
            )));
        }
        if self.adam_beta1 >= 1.0 || self.adam_beta2 >= 1.0 {
            return Err(Error::InvalidConfig("Adam betas must be below 1".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, max_epochs and patience must be positive".into(),
            ));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidConfig(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// How the encoder enters downstream training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// Encoder trained from a fresh Xavier initialization.
    Npt,
    /// Pre-trained encoder, frozen.
    Fpt,
    /// Pre-trained encoder, fine-tuned with the classifier.
    Ufpt,
}

impl TrainMode {
    pub const ALL: [TrainMode; 3] = [TrainMode::Npt, TrainMode::Fpt, TrainMode::Ufpt];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Npt => "npt",
            TrainMode::Fpt => "fpt",
            TrainMode::Ufpt => "ufpt",
        }
    }

    pub fn needs_pretrained(self) -> bool {
        !matches!(self, TrainMode::Npt)
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "npt" => Ok(TrainMode::Npt),
            "fpt" => Ok(TrainMode::Fpt),
            "ufpt" => Ok(TrainMode::Ufpt),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}
