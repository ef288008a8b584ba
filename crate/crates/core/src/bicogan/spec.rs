use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorDistribution {
    #[default]
    StandardNormal,
    /// Uniform on (−1, 1).
    Uniform,
}

/// Distribution of the intrinsic code z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub z_dim: usize,
    #[serde(default)]
    pub distribution: PriorDistribution,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            z_dim: 16,
            distribution: PriorDistribution::StandardNormal,
        }
    }
}

impl PriorSpec {
    pub fn sample<T: Scalar>(&self, n: usize, rng: &mut impl Rng) -> Tensor<T> {
        let data = (0..n * self.z_dim)
            .map(|_| {
                let v: f64 = match self.distribution {
                    PriorDistribution::StandardNormal => StandardNormal.sample(rng),
                    PriorDistribution::Uniform => rng.random_range(-1.0..1.0),
                };
                T::of(v)
            })
            .collect();
        Tensor::new(vec![n, self.z_dim], data).expect("sized above")
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    pub fn std_dev(&self) -> f64 {
        match self.distribution {
            PriorDistribution::StandardNormal => 1.0,
            PriorDistribution::Uniform => (1.0f64 / 3.0).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrinsicKind {
    /// One of k classes, carried one-hot.
    Categorical,
    /// k independent {0,1} attributes.
    BinaryVector,
    /// k real values.
    Continuous,
}

/// Form of the extrinsic factor c.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtrinsicSpec {
    pub kind: ExtrinsicKind,
    pub k: usize,
}

impl ExtrinsicSpec {
    pub fn categorical(k: usize) -> Self {
        Self {
            kind: ExtrinsicKind::Categorical,
            k,
        }
    }

    pub fn binary(k: usize) -> Self {
        Self {
            kind: ExtrinsicKind::BinaryVector,
            k,
        }
    }

    pub fn continuous(k: usize) -> Self {
        Self {
            kind: ExtrinsicKind::Continuous,
            k,
        }
    }

    /// Width of c as a vector.
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn one_hot<T: Scalar>(&self, class: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.k];
        v[class] = T::one();
        v
    }

    /// Checks every row of `c` against this spec.
    pub fn validate<T: Scalar>(&self, c: &Tensor<T>) -> Result<()> {
        if c.rank() != 2 || c.shape()[1] != self.k {
            return Err(Error::dims("extrinsic", c.shape(), &[c.rows(), self.k]));
        }
        for i in 0..c.rows() {
            let row = c.row(i);
            let ok = match self.kind {
                ExtrinsicKind::Categorical => {
                    row.iter().all(|&v| v == T::zero() || v == T::one())
                        && row.iter().filter(|&&v| v == T::one()).count() == 1
                }
                ExtrinsicKind::BinaryVector => row.iter().all(|&v| v == T::zero() || v == T::one()),
                ExtrinsicKind::Continuous => row.iter().all(|v| v.is_finite()),
            };
            if !ok {
                return Err(Error::contract(format!(
                    "row {i} is not a valid {:?} code: {row:?}",
                    self.kind
                )));
            }
        }
        Ok(())
    }

    /// Maps raw encoder output to the form the discriminator sees alongside
    /// prior samples: softmax, sigmoid, or identity.
    pub fn post_map<T: Scalar>(&self, tape: &mut Tape<T>, raw: Var) -> Var {
        match self.kind {
            ExtrinsicKind::Categorical => tape.softmax(raw),
            ExtrinsicKind::BinaryVector => tape.sigmoid(raw),
            ExtrinsicKind::Continuous => raw,
        }
    }

    /// Hard prediction from raw encoder output: one-hot argmax, threshold at
    /// logit 0, or the value itself.
    pub fn decide<T: Scalar>(&self, raw: &Tensor<T>) -> Tensor<T> {
        match self.kind {
            ExtrinsicKind::Categorical => {
                let mut out = Tensor::zeros(raw.shape());
                for (i, j) in raw.argmax_rows().into_iter().enumerate() {
                    out.row_mut(i)[j] = T::one();
                }
                out
            }
            ExtrinsicKind::BinaryVector => raw.map(|v| if v > T::zero() { T::one() } else { T::zero() }),
            ExtrinsicKind::Continuous => raw.clone(),
        }
    }

    /// Extrinsic factor loss between true codes and raw encoder output.
    pub fn efl<T: Scalar>(&self, tape: &mut Tape<T>, c_true: Var, c_raw: Var) -> Result<Var> {
        let (ts, ps) = (tape.value(c_true).shape(), tape.value(c_raw).shape());
        if ts != ps || ts.len() != 2 || ts[1] != self.k {
            return Err(Error::contract(format!(
                "EFL shapes {ts:?} / {ps:?} do not fit {:?} with k={}",
                self.kind, self.k
            )));
        }
        match self.kind {
            ExtrinsicKind::Categorical => tape.softmax_cross_entropy(c_raw, c_true),
            ExtrinsicKind::BinaryVector => tape.bce_with_logits(c_raw, c_true),
            ExtrinsicKind::Continuous => tape.mse(c_raw, c_true),
        }
    }
}

/// Weight on the extrinsic factor loss as a function of completed epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GammaSchedule {
    Constant { gamma: f64 },
    /// `min(alpha · e^{rho·t}, phi)`.
    Dynamic { alpha: f64, rho: f64, phi: f64 },
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Dynamic {
            alpha: 5.0,
            rho: 0.25,
            phi: 10.0,
        }
    }
}

impl GammaSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GammaSchedule::Constant { gamma } => gamma >= 0.0 && gamma.is_finite(),
            GammaSchedule::Dynamic { alpha, rho, phi } => {
                [alpha, rho, phi].iter().all(|v| *v >= 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("gamma schedule parameters must be finite and non-negative: {self:?}")))
        }
    }

    pub fn gamma_at(&self, epoch: i64) -> Result<f64> {
        if epoch < 0 {
            return Err(Error::contract(format!("epoch {epoch} is negative")));
        }
        Ok(match *self {
            GammaSchedule::Constant { gamma } => gamma,
            GammaSchedule::Dynamic { alpha, rho, phi } => (alpha * (rho * epoch as f64).exp()).min(phi),
        })
    }
}
