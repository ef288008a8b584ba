use serde::{Deserialize, Serialize};

use super::spec::{GammaSchedule, PriorSpec};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, DEFAULT_LEAKY_SLOPE};

/// Which adversarial objective is trained. The reduced modes drop the parts
/// of the full model they do not use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// G(z), D(x).
    Gan,
    /// G(z, c), D(c, x).
    Cgan,
    /// G(z), E(x) → z, D(z, x).
    Bigan,
    /// G(z, c), E(x) → (z, c), D(z, c, x), plus the weighted extrinsic loss.
    #[default]
    Bicogan,
}

impl ObjectiveMode {
    /// Generator and discriminator see c.
    pub fn conditional(self) -> bool {
        matches!(self, ObjectiveMode::Cgan | ObjectiveMode::Bicogan)
    }

    /// An encoder exists and the discriminator judges (code, x) pairs.
    pub fn bidirectional(self) -> bool {
        matches!(self, ObjectiveMode::Bigan | ObjectiveMode::Bicogan)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    /// Minimise the discriminator's own objective.
    Minimax,
    /// Flip the targets instead; stronger gradients when D is confident.
    #[default]
    NonSaturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub generator_hidden: Vec<usize>,
    pub encoder_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub leaky_slope: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            generator_hidden: vec![128, 128],
            encoder_hidden: vec![128, 128],
            discriminator_hidden: vec![128, 128],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub gamma: GammaSchedule,
    pub mode: ObjectiveMode,
    pub generator_loss: GeneratorLoss,
    pub prior: PriorSpec,
    pub architecture: Architecture,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            seed: 0,
            adam: AdamConfig::default(),
            gamma: GammaSchedule::default(),
            mode: ObjectiveMode::Bicogan,
            generator_loss: GeneratorLoss::NonSaturating,
            prior: PriorSpec::default(),
            architecture: Architecture::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::contract("epochs must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::contract("batch_size must be at least 1"));
        }
        if self.prior.z_dim < 1 {
            return Err(Error::contract("z_dim must be at least 1"));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(Error::contract(format!("invalid adam hyperparameters {a:?}")));
        }
        let arch = &self.architecture;
        if [&arch.generator_hidden, &arch.encoder_hidden, &arch.discriminator_hidden]
            .iter()
            .any(|h| h.contains(&0))
        {
            return Err(Error::contract("hidden layer widths must be positive"));
        }
        self.gamma.validate()
    }
}
