//! Datasets: synthetic families with known intrinsic factors, and IDX files.

mod idx;
mod oracle;
mod synthetic;

pub use idx::{
    decode_idx, encode_idx, load_idx, parse_images, parse_labels, pixel_to_unit, unit_to_pixel, IDX_CLASSES,
    IMAGES_MAGIC, LABELS_MAGIC,
};
pub use oracle::{angle_distance, Oracle};
pub use synthetic::{
    angle_to_c, bars_companion_row, c_to_angle, make_bars, make_gaussian_ring, make_ring_continuous, render_bar,
    ring_center_angle, SyntheticFamily, SyntheticSpec, BARS_MIN_BRIGHTNESS, BARS_SIDE, DEFAULT_ANGLE_RANGE,
};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::bicogan::ExtrinsicSpec;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Synthetic(SyntheticFamily),
    Idx,
}

/// Samples in [−1, 1] with their extrinsic codes.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Tensor<f64>,
    pub c: Tensor<f64>,
    pub extrinsic: ExtrinsicSpec,
    /// Ground-truth intrinsic factors (synthetic families only).
    pub intrinsic_truth: Option<Tensor<f64>>,
    pub split: Split,
    pub family: Family,
    /// `(rows, cols)` when samples are images.
    pub image_shape: Option<(usize, usize)>,
    /// Angle range that c spans (continuous ring only).
    pub angle_range: Option<(f64, f64)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.rows() != self.len() {
            return Err(Error::dims("dataset", self.x.shape(), self.c.shape()));
        }
        if let Some(t) = &self.intrinsic_truth {
            if t.rows() != self.len() {
                return Err(Error::dims("dataset intrinsic", self.x.shape(), t.shape()));
            }
        }
        if self.x.data().iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::contract("dataset pixels outside [−1, 1]"));
        }
        self.extrinsic.validate(&self.c)
    }

    pub fn oracle(&self) -> Option<Oracle> {
        match self.family {
            Family::Synthetic(SyntheticFamily::GaussianRing) => Some(Oracle::GaussianRing { classes: self.extrinsic.k }),
            Family::Synthetic(SyntheticFamily::Bars) => Some(Oracle::Bars { classes: self.extrinsic.k }),
            Family::Synthetic(SyntheticFamily::RingContinuous) => Some(Oracle::RingContinuous {
                range: self.angle_range.unwrap_or(DEFAULT_ANGLE_RANGE),
            }),
            Family::Idx => None,
        }
    }

    /// Class index per row (categorical datasets).
    pub fn labels(&self) -> Vec<usize> {
        self.c.argmax_rows()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            c: self.c.select_rows(idx),
            intrinsic_truth: self.intrinsic_truth.as_ref().map(|t| t.select_rows(idx)),
            ..self.clone()
        }
    }

    /// Batches of `(x, c)` in the epoch's shuffled order.
    pub fn batches(&self, batch_size: usize, seed: u64, epoch: u64) -> impl Iterator<Item = (Tensor<f64>, Tensor<f64>)> + '_ {
        batch_indices(self.len(), batch_size, seed, epoch)
            .into_iter()
            .map(|idx| (self.x.select_rows(&idx), self.c.select_rows(&idx)))
    }
}

/// Shuffled index batches; the order depends only on `(seed ⊕ epoch)` and
/// the last batch may be short.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(derive_seed(seed ^ epoch, "batches")));
    idx.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
