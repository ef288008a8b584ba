//! Feed-forward networks, Adam, and parameter persistence.

mod adam;
mod mlp;
mod persist;

pub use adam::{Adam, AdamConfig};
pub use mlp::{Activation, BoundMlp, DenseLayer, Mlp, DEFAULT_LEAKY_SLOPE};
pub use persist::{decode_tensors, encode_tensors, load_params, save_params, FORMAT_VERSION, MAGIC};

use crate::scalar::Scalar;
use std::hash::{DefaultHasher, Hash, Hasher};

/// Fingerprint of the exact parameter bits; used to prove a network was
/// left untouched by an update.
pub fn param_hash<T: Scalar>(net: &Mlp<T>) -> u64 {
    let mut h = DefaultHasher::new();
    for p in net.params() {
        p.shape().hash(&mut h);
        for v in p.data() {
            v.to_f64_exact().to_bits().hash(&mut h);
        }
    }
    h.finish()
}

#[cfg(test)]
mod tests;
