//! Bidirectional conditional GAN on a small reverse-mode autodiff engine.
//!
//! The math is generic over [`Scalar`] (`f64` and `f32`); the aliases below
//! fix the working precision to `f64`.

pub mod autodiff;
pub mod bicogan;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{max_threads, set_max_threads, Scalar};

pub type Tensor = autodiff::Tensor<f64>;
pub type Tape = autodiff::Tape<f64>;
pub type Mlp = nn::Mlp<f64>;
pub type Adam = nn::Adam<f64>;
pub type BiCoGan = bicogan::BiCoGan<f64>;
pub type Trainer = bicogan::Trainer<f64>;

pub type Tensor32 = autodiff::Tensor<f32>;
pub type BiCoGan32 = bicogan::BiCoGan<f32>;
