use rand::Rng;

use super::config::{Architecture, ObjectiveMode};
use super::spec::{ExtrinsicSpec, PriorSpec};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::{Activation, BoundMlp, Mlp};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Generator, optional encoder, and discriminator with the specs that fix
/// their dimensions.
///
/// Discriminator input is laid out as `[z, c, x]`, dropping whichever code
/// parts the objective mode does not use. The encoder emits `[z, c_raw]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiCoGan<T> {
    pub generator: Mlp<T>,
    pub encoder: Option<Mlp<T>>,
    pub discriminator: Mlp<T>,
    pub prior: PriorSpec,
    pub extrinsic: ExtrinsicSpec,
    pub x_dim: usize,
    pub mode: ObjectiveMode,
}

/// Encoder output split at `z_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding<T> {
    pub z: Tensor<T>,
    /// Logits (categorical / binary) or values (continuous); empty width in
    /// bigan mode.
    pub c_raw: Tensor<T>,
}

fn hidden_chain(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(output))
        .collect()
}

fn activations(hidden: usize, slope: f64, last: Activation) -> Vec<Activation> {
    let mut a = vec![Activation::LeakyRelu(slope); hidden];
    a.push(last);
    a
}

impl<T: Scalar> BiCoGan<T> {
    pub fn new(
        x_dim: usize,
        prior: PriorSpec,
        extrinsic: ExtrinsicSpec,
        mode: ObjectiveMode,
        arch: &Architecture,
        seed: u64,
    ) -> Result<Self> {
        if x_dim == 0 || prior.z_dim == 0 || extrinsic.k == 0 {
            return Err(Error::contract("x_dim, z_dim and c_dim must all be positive"));
        }
        let c_dim = if mode.conditional() { extrinsic.dim() } else { 0 };
        let slope = arch.leaky_slope;

        let g_dims = hidden_chain(prior.z_dim + c_dim, &arch.generator_hidden, x_dim);
        let generator = Mlp::init(
            &g_dims,
            &activations(arch.generator_hidden.len(), slope, Activation::Tanh),
            derive_seed(seed, "init/generator"),
        )?;

        let encoder = if mode.bidirectional() {
            let e_dims = hidden_chain(x_dim, &arch.encoder_hidden, prior.z_dim + c_dim);
            Some(Mlp::init(
                &e_dims,
                &activations(arch.encoder_hidden.len(), slope, Activation::Identity),
                derive_seed(seed, "init/encoder"),
            )?)
        } else {
            None
        };

        let code_dim = c_dim + if mode.bidirectional() { prior.z_dim } else { 0 };
        let d_dims = hidden_chain(code_dim + x_dim, &arch.discriminator_hidden, 1);
        let discriminator = Mlp::init(
            &d_dims,
            &activations(arch.discriminator_hidden.len(), slope, Activation::Identity),
            derive_seed(seed, "init/discriminator"),
        )?;

        Ok(Self {
            generator,
            encoder,
            discriminator,
            prior,
            extrinsic,
            x_dim,
            mode,
        })
    }

    /// Assembles a model from existing networks, checking the dimension chain.
    pub fn from_parts(
        generator: Mlp<T>,
        encoder: Option<Mlp<T>>,
        discriminator: Mlp<T>,
        prior: PriorSpec,
        extrinsic: ExtrinsicSpec,
        mode: ObjectiveMode,
    ) -> Result<Self> {
        let x_dim = generator.output_dim();
        let model = Self {
            generator,
            encoder,
            discriminator,
            prior,
            extrinsic,
            x_dim,
            mode,
        };
        model.check_dims()?;
        Ok(model)
    }

    fn check_dims(&self) -> Result<()> {
        let c = self.c_dim();
        let z = self.prior.z_dim;
        if self.generator.input_dim() != z + c {
            return Err(Error::dims("generator input", &[self.generator.input_dim()], &[z + c]));
        }
        match (&self.encoder, self.mode.bidirectional()) {
            (Some(e), true) => {
                if e.input_dim() != self.x_dim || e.output_dim() != z + c {
                    return Err(Error::dims("encoder", &e.dims(), &[self.x_dim, z + c]));
                }
            }
            (None, false) => {}
            _ => return Err(Error::contract(format!("encoder presence does not match mode {:?}", self.mode))),
        }
        let d_in = self.code_dim() + self.x_dim;
        if self.discriminator.input_dim() != d_in || self.discriminator.output_dim() != 1 {
            return Err(Error::dims("discriminator", &self.discriminator.dims(), &[d_in, 1]));
        }
        Ok(())
    }

    /// Width of c as the networks see it (0 for unconditional modes).
    pub fn c_dim(&self) -> usize {
        if self.mode.conditional() {
            self.extrinsic.dim()
        } else {
            0
        }
    }

    /// Width of the code half of the discriminator input.
    pub fn code_dim(&self) -> usize {
        self.c_dim() + if self.mode.bidirectional() { self.prior.z_dim } else { 0 }
    }

    pub fn encoder(&self) -> Result<&Mlp<T>> {
        self.encoder
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("{:?} mode has no encoder", self.mode)))
    }

    fn check_batch(&self, what: &'static str, t: &Tensor<T>, width: usize) -> Result<()> {
        if t.rank() != 2 || t.shape()[1] != width {
            return Err(Error::dims(what, t.shape(), &[t.rows(), width]));
        }
        Ok(())
    }

    /// Generator input for a batch: `[z, c]`, or just `z` when unconditional.
    pub(crate) fn prior_input(&self, tape: &mut Tape<T>, z: &Tensor<T>, c: &Tensor<T>) -> Result<Var> {
        self.check_batch("prior z", z, self.prior.z_dim)?;
        let zv = tape.constant(z.clone());
        if !self.mode.conditional() {
            return Ok(zv);
        }
        self.check_batch("prior c", c, self.extrinsic.dim())?;
        if c.rows() != z.rows() {
            return Err(Error::dims("prior", z.shape(), c.shape()));
        }
        let cv = tape.constant(c.clone());
        tape.concat(&[zv, cv], 1)
    }

    /// `x = G([z, c])`.
    pub fn generate(&self, z: &Tensor<T>, c: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let g = self.generator.bind(&mut tape, false);
        let input = self.prior_input(&mut tape, z, c)?;
        let x = g.forward(&mut tape, input)?;
        Ok(tape.value(x).clone())
    }

    pub fn encode(&self, x: &Tensor<T>) -> Result<Encoding<T>> {
        let enc = self.encoder()?;
        self.check_batch("encode", x, self.x_dim)?;
        let out = enc.predict(x)?;
        let mut tape = Tape::new();
        let ov = tape.constant(out);
        let z = tape.slice(ov, 1, 0, self.prior.z_dim)?;
        let c = tape.slice(ov, 1, self.prior.z_dim, self.c_dim())?;
        Ok(Encoding {
            z: tape.value(z).clone(),
            c_raw: tape.value(c).clone(),
        })
    }

    /// Hard extrinsic prediction for each row of `x`.
    pub fn predict_c(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if !self.mode.conditional() {
            return Err(Error::Unsupported(format!("{:?} mode does not encode c", self.mode)));
        }
        let enc = self.encode(x)?;
        Ok(self.extrinsic.decide(&enc.c_raw))
    }

    /// Embedding `(ẑ, c)` with the decision rule applied to c.
    pub fn embed(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let enc = self.encode(x)?;
        let c = if self.mode.conditional() {
            self.extrinsic.decide(&enc.c_raw)
        } else {
            enc.c_raw
        };
        Ok((enc.z, c))
    }

    /// `G([E_z(x), c_new])`. With `c_new` equal to the decided encoding this
    /// is a plain reconstruction.
    pub fn reconstruct_varied(&self, x: &Tensor<T>, c_new: &Tensor<T>) -> Result<Tensor<T>> {
        let enc = self.encode(x)?;
        self.generate(&enc.z, c_new)
    }

    pub fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (z, c) = self.embed(x)?;
        self.generate(&z, &c)
    }

    /// Decodes `steps` evenly spaced points on the segment between the
    /// embeddings of single samples `x1` and `x2` (both `1 × x_dim`).
    pub fn interpolate(&self, x1: &Tensor<T>, x2: &Tensor<T>, steps: usize) -> Result<Vec<Tensor<T>>> {
        if steps < 2 {
            return Err(Error::contract(format!("interpolation needs at least 2 steps, got {steps}")));
        }
        let (z1, c1) = self.embed(x1)?;
        let (z2, c2) = self.embed(x2)?;
        if z1.rows() != 1 || z2.rows() != 1 {
            return Err(Error::contract("interpolate takes single-row inputs"));
        }
        let lerp = |a: &Tensor<T>, b: &Tensor<T>, w: T| {
            let data = a.data().iter().zip(b.data()).map(|(&p, &q)| p + (q - p) * w).collect();
            Tensor::new(a.shape().to_vec(), data).expect("same shape")
        };
        (0..steps)
            .map(|i| {
                let w = T::of(i as f64 / (steps - 1) as f64);
                self.generate(&lerp(&z1, &z2, w), &lerp(&c1, &c2, w))
            })
            .collect()
    }

    /// Discriminator logits for explicit `(code, x)` rows.
    pub fn discriminate(&self, code: &Tensor<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let d = self.discriminator.bind(&mut tape, false);
        let xv = tape.constant(x.clone());
        let input = if self.code_dim() == 0 {
            xv
        } else {
            let cv = tape.constant(code.clone());
            tape.concat(&[cv, xv], 1)?
        };
        let out = d.forward(&mut tape, input)?;
        Ok(tape.value(out).clone())
    }

    pub(crate) fn bind_all(&self, tape: &mut Tape<T>, train_d: bool) -> Bound {
        Bound {
            generator: self.generator.bind(tape, !train_d),
            encoder: self.encoder.as_ref().map(|e| e.bind(tape, !train_d)),
            discriminator: self.discriminator.bind(tape, train_d),
        }
    }
}

pub(crate) struct Bound {
    pub generator: BoundMlp,
    pub encoder: Option<BoundMlp>,
    pub discriminator: BoundMlp,
}

/// Draws `n` prior codes: z from `prior`, c uniformly with replacement from
/// the rows of `c_source`.
pub fn sample_prior<T: Scalar>(
    n: usize,
    prior: &PriorSpec,
    c_source: &Tensor<T>,
    rng: &mut impl Rng,
) -> Result<(Tensor<T>, Tensor<T>)> {
    if c_source.rows() == 0 || c_source.rank() != 2 {
        return Err(Error::contract("sample_prior needs a non-empty label source"));
    }
    let z = prior.sample(n, rng);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..c_source.rows())).collect();
    Ok((z, c_source.select_rows(&idx)))
}
