//! Bidirectional conditional GAN: generator G(z, c), encoder E(x) → (z, c)
//! and discriminator D(z, c, x), trained jointly with a weighted extrinsic
//! factor loss on the encoder's c output. `gan`, `cgan` and `bigan` modes
//! drop the corresponding parts for ablations.

mod checkpoint;
mod config;
mod model;
mod objective;
mod spec;
mod train;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointHeader, NetworkLayout, DISCRIMINATOR_FILE, ENCODER_FILE,
    GENERATOR_FILE, HEADER_FILE,
};
pub use config::{Architecture, GeneratorLoss, ObjectiveMode, TrainingConfig};
pub use model::{sample_prior, BiCoGan, Encoding};
pub use objective::{
    discriminator_loss, generator_encoder_gradients, generator_encoder_loss, FakeBatch, GeGradients, GeLoss,
    RealBatch,
};
pub use spec::{ExtrinsicKind, ExtrinsicSpec, GammaSchedule, PriorDistribution, PriorSpec};
pub use train::{train, EpochReport, StepReport, Trainer};
