//! On-disk model: `header.json` plus one parameter file per network.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ObjectiveMode;
use super::model::BiCoGan;
use super::spec::{ExtrinsicSpec, PriorSpec};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::nn::{decode_tensors, encode_tensors, Activation, DenseLayer, Mlp};
use crate::scalar::Scalar;

pub const HEADER_FILE: &str = "header.json";
pub const GENERATOR_FILE: &str = "generator.bcgp";
pub const ENCODER_FILE: &str = "encoder.bcgp";
pub const DISCRIMINATOR_FILE: &str = "discriminator.bcgp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl NetworkLayout {
    fn of<T: Scalar>(net: &Mlp<T>) -> Self {
        Self {
            dims: net.dims(),
            activations: net.activations(),
        }
    }

    fn build<T: Scalar>(&self, tensors: Vec<Tensor<T>>) -> Result<Mlp<T>> {
        if self.dims.len() < 2 || self.activations.len() + 1 != self.dims.len() {
            return Err(Error::contract(format!("malformed layout {self:?}")));
        }
        if tensors.len() != 2 * self.activations.len() {
            return Err(Error::format(
                8,
                format!("{} tensors for a {}-layer network", tensors.len(), self.activations.len()),
            ));
        }
        let mut it = tensors.into_iter();
        let mut layers = Vec::new();
        for (w, &activation) in self.dims.windows(2).zip(&self.activations) {
            let weight = it.next().expect("counted");
            let bias = it.next().expect("counted");
            if weight.shape() != [w[0], w[1]] || bias.shape() != [w[1]] {
                return Err(Error::dims("checkpoint layer", &[w[0], w[1]], weight.shape()));
            }
            layers.push(DenseLayer {
                weight,
                bias,
                activation,
            });
        }
        Mlp::from_layers(layers)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub mode: ObjectiveMode,
    pub x_dim: usize,
    pub prior: PriorSpec,
    pub extrinsic: ExtrinsicSpec,
    pub generator: NetworkLayout,
    pub encoder: Option<NetworkLayout>,
    pub discriminator: NetworkLayout,
    /// Whatever configuration produced the model, verbatim.
    pub config: serde_json::Value,
}

pub fn save_checkpoint<T: Scalar>(
    model: &BiCoGan<T>,
    config: &serde_json::Value,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        mode: model.mode,
        x_dim: model.x_dim,
        prior: model.prior,
        extrinsic: model.extrinsic,
        generator: NetworkLayout::of(&model.generator),
        encoder: model.encoder.as_ref().map(NetworkLayout::of),
        discriminator: NetworkLayout::of(&model.discriminator),
        config: config.clone(),
    };
    let mut json = serde_json::to_string_pretty(&header)?;
    json.push('\n');
    fs::write(dir.join(HEADER_FILE), json)?;
    fs::write(dir.join(GENERATOR_FILE), encode_tensors(&model.generator.params()))?;
    let enc: Vec<&Tensor<T>> = model.encoder.as_ref().map(|e| e.params()).unwrap_or_default();
    fs::write(dir.join(ENCODER_FILE), encode_tensors(&enc))?;
    fs::write(dir.join(DISCRIMINATOR_FILE), encode_tensors(&model.discriminator.params()))?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(dir: impl AsRef<Path>) -> Result<(BiCoGan<T>, CheckpointHeader)> {
    let dir = dir.as_ref();
    let header: CheckpointHeader = serde_json::from_slice(&fs::read(dir.join(HEADER_FILE))?)?;
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::contract(format!("unsupported checkpoint version {}", header.version)));
    }
    let read = |name: &str| -> Result<Vec<Tensor<T>>> { decode_tensors(&fs::read(dir.join(name))?) };
    let generator = header.generator.build(read(GENERATOR_FILE)?)?;
    let enc_tensors = read(ENCODER_FILE)?;
    let encoder = match &header.encoder {
        Some(layout) => Some(layout.build(enc_tensors)?),
        None if enc_tensors.is_empty() => None,
        None => return Err(Error::format(8, "encoder file holds tensors but header declares none")),
    };
    let discriminator = header.discriminator.build(read(DISCRIMINATOR_FILE)?)?;
    let model = BiCoGan::from_parts(
        generator,
        encoder,
        discriminator,
        header.prior,
        header.extrinsic,
        header.mode,
    )?;
    if model.x_dim != header.x_dim {
        return Err(Error::dims("checkpoint x_dim", &[header.x_dim], &[model.x_dim]));
    }
    Ok((model, header))
}
