use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use super::model::{sample_prior, BiCoGan};
use super::objective::{build_graph, d_loss_var, generator_encoder_gradients, FakeBatch, GeLoss, RealBatch};
use crate::autodiff::{Tape, Tensor};
use crate::data::batch_indices;
use crate::error::{Error, Result};
use crate::nn::Adam;
use crate::rng::{derive_rng, derive_seed, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub d_loss: f64,
    pub ge_loss: f64,
    pub adversarial: f64,
    pub efl: Option<f64>,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub gamma: f64,
    pub d_loss: f64,
    pub ge_loss: f64,
    pub efl: Option<f64>,
    pub steps: usize,
}

/// Alternating single-step D and G+E updates with Adam.
pub struct Trainer<T> {
    pub model: BiCoGan<T>,
    config: TrainingConfig,
    opt_g: Adam<T>,
    opt_e: Option<Adam<T>>,
    opt_d: Adam<T>,
    c_source: Tensor<T>,
    prior_rng: Rng,
}

impl<T: Scalar> Trainer<T> {
    /// `c_source` holds the training labels that prior codes are drawn from.
    pub fn new(model: BiCoGan<T>, config: TrainingConfig, c_source: Tensor<T>) -> Result<Self> {
        config.validate()?;
        if c_source.rows() == 0 {
            return Err(Error::contract("training labels are empty"));
        }
        let opt_g = Adam::new(config.adam, &model.generator.params());
        let opt_e = model.encoder.as_ref().map(|e| Adam::new(config.adam, &e.params()));
        let opt_d = Adam::new(config.adam, &model.discriminator.params());
        let prior_rng = derive_rng(config.seed, "train/prior");
        Ok(Self {
            model,
            config,
            opt_g,
            opt_e,
            opt_d,
            c_source,
            prior_rng,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn into_model(self) -> BiCoGan<T> {
        self.model
    }

    /// One D update followed by one G+E update on the same real batch and
    /// the same fresh prior draw. On failure the model is left as it was.
    pub fn train_step(&mut self, x: &Tensor<T>, c: &Tensor<T>, epoch: usize) -> Result<StepReport> {
        let gamma = self.config.gamma.gamma_at(epoch as i64)?;
        let (z, c_fake) = sample_prior(x.rows(), &self.model.prior, &self.c_source, &mut self.prior_rng)?;
        let real = RealBatch { x, c };
        let fake = FakeBatch { z: &z, c: &c_fake };

        let d_before = self.model.discriminator.clone();
        let d_loss = self.discriminator_step(real, fake, epoch)?;
        let ge = match self.generator_encoder_step(real, fake, gamma, epoch) {
            Ok(ge) => ge,
            Err(e) => {
                self.model.discriminator = d_before;
                return Err(e);
            }
        };
        Ok(StepReport {
            d_loss,
            ge_loss: ge.total,
            adversarial: ge.adversarial,
            efl: ge.efl,
            gamma,
        })
    }

    /// Adam step on θ_D alone; returns the loss before the step.
    pub fn discriminator_step(&mut self, real: RealBatch<'_, T>, fake: FakeBatch<'_, T>, epoch: usize) -> Result<f64> {
        let mut tape = Tape::new();
        let nets = self.model.bind_all(&mut tape, true);
        let graph = build_graph(&self.model, &mut tape, &nets, real, fake)?;
        let d_loss_v = d_loss_var(&mut tape, &graph)?;
        let d_loss = tape.value(d_loss_v).item().to_f64_exact();
        if !d_loss.is_finite() {
            return Err(Error::Numeric(format!("discriminator loss is {d_loss} at epoch {epoch}")));
        }
        let mut grads = tape.backward(d_loss_v)?;
        let d_grads = nets.discriminator.grads(&mut grads);
        drop(tape);
        self.opt_d.step(&mut self.model.discriminator.params_mut(), &d_grads)?;
        Ok(d_loss)
    }

    /// Adam steps on θ_G and θ_E with the discriminator frozen; returns the
    /// loss before the step. Nothing changes if the loss or a gradient is
    /// not finite.
    pub fn generator_encoder_step(
        &mut self,
        real: RealBatch<'_, T>,
        fake: FakeBatch<'_, T>,
        gamma: f64,
        epoch: usize,
    ) -> Result<GeLoss> {
        let ge = generator_encoder_gradients(&self.model, real, fake, gamma, self.config.generator_loss, true)?;
        if !ge.loss.total.is_finite() {
            return Err(Error::Numeric(format!(
                "generator/encoder loss is {} at epoch {epoch}",
                ge.loss.total
            )));
        }
        let grads_ok = ge.generator.iter().all(Tensor::is_finite) && ge.encoder.iter().flatten().all(Tensor::is_finite);
        if !grads_ok {
            return Err(Error::Numeric(format!("non-finite generator/encoder gradient at epoch {epoch}")));
        }
        self.opt_g.step(&mut self.model.generator.params_mut(), &ge.generator)?;
        if let (Some(enc), Some(opt), Some(g)) = (self.model.encoder.as_mut(), self.opt_e.as_mut(), ge.encoder.as_ref()) {
            opt.step(&mut enc.params_mut(), g)?;
        }
        Ok(ge.loss)
    }

    /// One pass over `(x, c)` in a shuffled order fixed by (seed, epoch).
    pub fn train_epoch(&mut self, x: &Tensor<T>, c: &Tensor<T>, epoch: usize) -> Result<EpochReport> {
        if x.rows() != c.rows() {
            return Err(Error::dims("train_epoch", x.shape(), c.shape()));
        }
        let gamma = self.config.gamma.gamma_at(epoch as i64)?;
        let shuffle_seed = derive_seed(self.config.seed, "train/shuffle");
        let mut sums = (0.0, 0.0, 0.0);
        let mut has_efl = false;
        let batches = batch_indices(x.rows(), self.config.batch_size, shuffle_seed, epoch as u64);
        let steps = batches.len();
        for idx in batches {
            let (bx, bc) = (x.select_rows(&idx), c.select_rows(&idx));
            let r = self.train_step(&bx, &bc, epoch)?;
            sums.0 += r.d_loss;
            sums.1 += r.ge_loss;
            if let Some(e) = r.efl {
                sums.2 += e;
                has_efl = true;
            }
        }
        let n = steps.max(1) as f64;
        Ok(EpochReport {
            epoch,
            gamma,
            d_loss: sums.0 / n,
            ge_loss: sums.1 / n,
            efl: has_efl.then_some(sums.2 / n),
            steps,
        })
    }

    /// Runs all configured epochs, calling `on_epoch` after each.
    pub fn fit(
        &mut self,
        x: &Tensor<T>,
        c: &Tensor<T>,
        mut on_epoch: impl FnMut(&EpochReport, &BiCoGan<T>) -> Result<()>,
    ) -> Result<Vec<EpochReport>> {
        let mut out = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            let r = self.train_epoch(x, c, epoch)?;
            on_epoch(&r, &self.model)?;
            out.push(r);
        }
        Ok(out)
    }
}

/// Builds a model for `config` and trains it on `(x, c)`; `c` doubles as the
/// prior's label source.
pub fn train<T: Scalar>(
    x: &Tensor<T>,
    c: &Tensor<T>,
    extrinsic: super::spec::ExtrinsicSpec,
    config: &TrainingConfig,
) -> Result<(BiCoGan<T>, Vec<EpochReport>)> {
    let model = BiCoGan::new(
        x.cols(),
        config.prior,
        extrinsic,
        config.mode,
        &config.architecture,
        config.seed,
    )?;
    let mut trainer = Trainer::new(model, config.clone(), c.clone())?;
    let reports = trainer.fit(x, c, |_, _| Ok(()))?;
    Ok((trainer.into_model(), reports))
}
