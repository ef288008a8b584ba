use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::bicogan::ExtrinsicSpec;
use crate::data::batch_indices;
use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, AdamConfig, Mlp};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Fixed budget for every auxiliary classifier so that scores are
/// comparable across models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 30,
            batch_size: 64,
            adam: AdamConfig {
                learning_rate: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
        }
    }
}

/// Smallest training set a classifier is fitted on.
pub const MIN_CLASSIFIER_TRAIN: usize = 16;

/// One-hidden-layer network predicting c from its input.
#[derive(Clone, Debug)]
pub struct Classifier<T> {
    pub net: Mlp<T>,
    pub spec: ExtrinsicSpec,
}

impl<T: Scalar> Classifier<T> {
    pub fn fit(x: &Tensor<T>, c: &Tensor<T>, spec: ExtrinsicSpec, config: &ClassifierConfig, seed: u64) -> Result<Self> {
        if x.rows() < MIN_CLASSIFIER_TRAIN {
            return Err(Error::contract(format!(
                "classifier needs at least {MIN_CLASSIFIER_TRAIN} samples, got {}",
                x.rows()
            )));
        }
        if c.rows() != x.rows() {
            return Err(Error::dims("classifier", x.shape(), c.shape()));
        }
        let mut net = Mlp::init(
            &[x.cols(), config.hidden, spec.dim()],
            &[Activation::leaky(), Activation::Identity],
            derive_seed(seed, "classifier/init"),
        )?;
        let mut opt = Adam::new(config.adam, &net.params());
        let shuffle = derive_seed(seed, "classifier/shuffle");
        for epoch in 0..config.epochs {
            for idx in batch_indices(x.rows(), config.batch_size, shuffle, epoch as u64) {
                let mut tape = Tape::new();
                let bound = net.bind(&mut tape, true);
                let xv = tape.constant(x.select_rows(&idx));
                let cv = tape.constant(c.select_rows(&idx));
                let out = bound.forward(&mut tape, xv)?;
                let loss = spec.efl(&mut tape, cv, out)?;
                let mut grads = tape.backward(loss)?;
                let g = bound.grads(&mut grads);
                opt.step(&mut net.params_mut(), &g)?;
            }
        }
        Ok(Self { net, spec })
    }

    pub fn predict_raw(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.net.predict(x)
    }

    /// Hard codes under the spec's decision rule.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.spec.decide(&self.net.predict(x)?))
    }
}
