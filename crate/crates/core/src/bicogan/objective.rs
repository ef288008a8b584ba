//! Adversarial objectives and the extrinsic factor loss, built on a tape.

use super::config::{GeneratorLoss, ObjectiveMode};
use super::model::{BiCoGan, Bound};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real samples with their extrinsic codes.
#[derive(Clone, Copy, Debug)]
pub struct RealBatch<'a, T> {
    pub x: &'a Tensor<T>,
    pub c: &'a Tensor<T>,
}

/// Prior draws `z̃ = [z, c]`.
#[derive(Clone, Copy, Debug)]
pub struct FakeBatch<'a, T> {
    pub z: &'a Tensor<T>,
    pub c: &'a Tensor<T>,
}

pub(crate) struct Graph {
    pub real_logits: Var,
    pub fake_logits: Var,
    /// Present only in bicogan mode.
    pub efl: Option<Var>,
}

pub(crate) fn build_graph<T: Scalar>(
    model: &BiCoGan<T>,
    tape: &mut Tape<T>,
    nets: &Bound,
    real: RealBatch<'_, T>,
    fake: FakeBatch<'_, T>,
) -> Result<Graph> {
    if real.x.rank() != 2 || real.x.shape()[1] != model.x_dim {
        return Err(Error::dims("real batch", real.x.shape(), &[real.x.rows(), model.x_dim]));
    }
    if real.x.rows() == 0 || fake.z.rows() == 0 {
        return Err(Error::contract("empty batch"));
    }
    if model.mode.conditional() {
        model.extrinsic.validate(real.c)?;
        if real.c.rows() != real.x.rows() {
            return Err(Error::dims("real batch", real.x.shape(), real.c.shape()));
        }
    }
    let z_dim = model.prior.z_dim;
    let xv = tape.constant(real.x.clone());

    let mut efl = None;
    let real_code = match model.mode {
        ObjectiveMode::Gan => None,
        ObjectiveMode::Cgan => Some(tape.constant(real.c.clone())),
        ObjectiveMode::Bigan => {
            let enc = nets.encoder.as_ref().expect("bigan has an encoder");
            Some(enc.forward(tape, xv)?)
        }
        ObjectiveMode::Bicogan => {
            let enc = nets.encoder.as_ref().expect("bicogan has an encoder");
            let e = enc.forward(tape, xv)?;
            let ez = tape.slice(e, 1, 0, z_dim)?;
            let ec_raw = tape.slice(e, 1, z_dim, model.extrinsic.dim())?;
            let c_true = tape.constant(real.c.clone());
            efl = Some(model.extrinsic.efl(tape, c_true, ec_raw)?);
            let ec = model.extrinsic.post_map(tape, ec_raw);
            Some(tape.concat(&[ez, ec], 1)?)
        }
    };
    let d_real_in = match real_code {
        Some(code) => tape.concat(&[code, xv], 1)?,
        None => xv,
    };
    let real_logits = nets.discriminator.forward(tape, d_real_in)?;

    let g_in = model.prior_input(tape, fake.z, fake.c)?;
    let gx = nets.generator.forward(tape, g_in)?;
    let fake_code = match model.mode {
        ObjectiveMode::Gan => None,
        ObjectiveMode::Cgan => Some(tape.constant(fake.c.clone())),
        ObjectiveMode::Bigan | ObjectiveMode::Bicogan => Some(g_in),
    };
    let d_fake_in = match fake_code {
        Some(code) => tape.concat(&[code, gx], 1)?,
        None => gx,
    };
    let fake_logits = nets.discriminator.forward(tape, d_fake_in)?;

    Ok(Graph {
        real_logits,
        fake_logits,
        efl,
    })
}

fn bce_against<T: Scalar>(tape: &mut Tape<T>, logits: Var, target: f64) -> Result<Var> {
    let t = Tensor::filled(tape.value(logits).shape(), T::of(target));
    let tv = tape.constant(t);
    tape.bce_with_logits(logits, tv)
}

/// Loss D minimises: BCE with target 1 on real pairs plus target 0 on
/// generated pairs, each averaged over its batch.
pub(crate) fn d_loss_var<T: Scalar>(tape: &mut Tape<T>, g: &Graph) -> Result<Var> {
    let real = bce_against(tape, g.real_logits, 1.0)?;
    let fake = bce_against(tape, g.fake_logits, 0.0)?;
    tape.add(real, fake)
}

pub(crate) struct GeVars {
    pub total: Var,
    pub adversarial: Var,
}

pub(crate) fn ge_loss_var<T: Scalar>(
    tape: &mut Tape<T>,
    g: &Graph,
    gamma: f64,
    style: GeneratorLoss,
) -> Result<GeVars> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::contract(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    let adversarial = match style {
        GeneratorLoss::NonSaturating => {
            // −log(1 − D(E(x), x)) − log D(z̃, G(z̃))
            let real = bce_against(tape, g.real_logits, 0.0)?;
            let fake = bce_against(tape, g.fake_logits, 1.0)?;
            tape.add(real, fake)?
        }
        GeneratorLoss::Minimax => {
            // log D(E(x), x) + log(1 − D(z̃, G(z̃)))
            let d = d_loss_var(tape, g)?;
            tape.scale(d, -T::one())
        }
    };
    let total = match g.efl {
        Some(efl) => {
            let weighted = tape.scale(efl, T::of(gamma));
            tape.add(adversarial, weighted)?
        }
        None => adversarial,
    };
    Ok(GeVars { total, adversarial })
}

/// Generator/encoder loss broken into its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeLoss {
    pub total: f64,
    pub adversarial: f64,
    pub efl: Option<f64>,
}

pub fn discriminator_loss<T: Scalar>(
    model: &BiCoGan<T>,
    real: RealBatch<'_, T>,
    fake: FakeBatch<'_, T>,
) -> Result<f64> {
    let mut tape = Tape::new();
    let nets = model.bind_all(&mut tape, true);
    let g = build_graph(model, &mut tape, &nets, real, fake)?;
    let loss = d_loss_var(&mut tape, &g)?;
    Ok(tape.value(loss).item().to_f64_exact())
}

pub fn generator_encoder_loss<T: Scalar>(
    model: &BiCoGan<T>,
    real: RealBatch<'_, T>,
    fake: FakeBatch<'_, T>,
    gamma: f64,
    style: GeneratorLoss,
) -> Result<GeLoss> {
    generator_encoder_gradients(model, real, fake, gamma, style, false).map(|r| r.loss)
}

pub struct GeGradients<T> {
    pub loss: GeLoss,
    pub generator: Vec<Tensor<T>>,
    pub encoder: Option<Vec<Tensor<T>>>,
}

/// Generator/encoder loss together with its gradients for θ_G and θ_E (in
/// [`crate::nn::Mlp::params`] order). The discriminator is frozen.
pub fn generator_encoder_gradients<T: Scalar>(
    model: &BiCoGan<T>,
    real: RealBatch<'_, T>,
    fake: FakeBatch<'_, T>,
    gamma: f64,
    style: GeneratorLoss,
    with_grads: bool,
) -> Result<GeGradients<T>> {
    let mut tape = Tape::new();
    let nets = model.bind_all(&mut tape, false);
    let g = build_graph(model, &mut tape, &nets, real, fake)?;
    let vars = ge_loss_var(&mut tape, &g, gamma, style)?;
    let loss = GeLoss {
        total: tape.value(vars.total).item().to_f64_exact(),
        adversarial: tape.value(vars.adversarial).item().to_f64_exact(),
        efl: g.efl.map(|v| tape.value(v).item().to_f64_exact()),
    };
    if !with_grads {
        return Ok(GeGradients {
            loss,
            generator: Vec::new(),
            encoder: None,
        });
    }
    let mut grads = tape.backward(vars.total)?;
    Ok(GeGradients {
        loss,
        generator: nets.generator.grads(&mut grads),
        encoder: nets.encoder.as_ref().map(|e| e.grads(&mut grads)),
    })
}
