use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Family, Split};
use crate::autodiff::Tensor;
use crate::bicogan::ExtrinsicSpec;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

pub const BARS_SIDE: usize = 8;
pub const BARS_MIN_BRIGHTNESS: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticFamily {
    /// k Gaussian blobs evenly spaced on the unit circle in R².
    GaussianRing,
    /// 8×8 images with one lit row per class.
    Bars,
    /// Points on the unit circle labelled by their angle.
    RingContinuous,
}

fn default_noise() -> f64 {
    0.05
}

/// Half circle: a full turn would put c = −1 and c = 1 at the same point.
pub const DEFAULT_ANGLE_RANGE: (f64, f64) = (0.0, PI);

fn default_range() -> (f64, f64) {
    DEFAULT_ANGLE_RANGE
}

fn default_true() -> bool {
    true
}

/// Recipe for a synthetic dataset with known intrinsic factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: SyntheticFamily,
    /// Class count for categorical families; ignored by `ring_continuous`.
    #[serde(default)]
    pub classes: usize,
    /// Standard deviation of the intrinsic offsets (ring families) or of
    /// additive pixel noise (bars).
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Angle range in radians for `ring_continuous`.
    #[serde(default = "default_range")]
    pub angle_range: (f64, f64),
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Equal class counts (up to remainder) instead of i.i.d. labels.
    #[serde(default = "default_true")]
    pub stratified: bool,
}

impl SyntheticSpec {
    pub fn gaussian_ring(classes: usize, noise: f64, n_train: usize, n_test: usize, seed: u64) -> Self {
        Self {
            family: SyntheticFamily::GaussianRing,
            classes,
            noise,
            angle_range: default_range(),
            n_train,
            n_test,
            seed,
            stratified: true,
        }
    }

    pub fn bars(classes: usize, noise: f64, n_train: usize, n_test: usize, seed: u64) -> Self {
        Self {
            family: SyntheticFamily::Bars,
            ..Self::gaussian_ring(classes, noise, n_train, n_test, seed)
        }
    }

    pub fn ring_continuous(range: (f64, f64), noise: f64, n_train: usize, n_test: usize, seed: u64) -> Self {
        Self {
            family: SyntheticFamily::RingContinuous,
            classes: 0,
            angle_range: range,
            ..Self::gaussian_ring(0, noise, n_train, n_test, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::contract(format!("noise must be finite and non-negative, got {}", self.noise)));
        }
        match self.family {
            SyntheticFamily::GaussianRing if self.classes < 2 => {
                Err(Error::contract("gaussian_ring needs at least 2 classes"))
            }
            SyntheticFamily::Bars if !(2..=BARS_SIDE).contains(&self.classes) => {
                Err(Error::contract(format!("bars supports 2..={BARS_SIDE} classes")))
            }
            SyntheticFamily::RingContinuous => {
                let (lo, hi) = self.angle_range;
                if !(lo.is_finite() && lo < hi && hi - lo <= 2.0 * PI) {
                    Err(Error::contract(format!("angle range {:?} must be increasing and span at most 2π", self.angle_range)))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn extrinsic(&self) -> ExtrinsicSpec {
        match self.family {
            SyntheticFamily::RingContinuous => ExtrinsicSpec::continuous(1),
            _ => ExtrinsicSpec::categorical(self.classes),
        }
    }

    pub fn generate(&self, split: Split) -> Result<Dataset> {
        match self.family {
            SyntheticFamily::GaussianRing => make_gaussian_ring(self, split),
            SyntheticFamily::Bars => make_bars(self, split),
            SyntheticFamily::RingContinuous => make_ring_continuous(self, split),
        }
    }

    fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.n_train,
            Split::Test => self.n_test,
        }
    }

    fn rng(&self, split: Split) -> crate::rng::Rng {
        derive_rng(self.seed, &format!("data/{:?}/{:?}", self.family, split))
    }

    fn labels(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        if self.stratified {
            (0..n).map(|i| i % self.classes).collect()
        } else {
            (0..n).map(|_| rng.random_range(0..self.classes)).collect()
        }
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated noise")
}

/// Angle of class `i` out of `k` on the ring.
pub fn ring_center_angle(i: usize, k: usize) -> f64 {
    2.0 * PI * i as f64 / k as f64
}

pub fn make_gaussian_ring(spec: &SyntheticSpec, split: Split) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.count(split);
    let k = spec.classes;
    let mut rng = spec.rng(split);
    let labels = spec.labels(n, &mut rng);
    let noise = normal(spec.noise);
    let extrinsic = spec.extrinsic();
    let mut x = Vec::with_capacity(2 * n);
    let mut c = Vec::with_capacity(k * n);
    let mut truth = Vec::with_capacity(2 * n);
    for &label in &labels {
        let theta = ring_center_angle(label, k);
        let (s, co) = theta.sin_cos();
        let radial = noise.sample(&mut rng);
        let tangential = noise.sample(&mut rng);
        x.push((co + radial * co - tangential * s).clamp(-1.0, 1.0));
        x.push((s + radial * s + tangential * co).clamp(-1.0, 1.0));
        c.extend(extrinsic.one_hot::<f64>(label));
        truth.extend([radial, tangential]);
    }
    Ok(Dataset {
        x: Tensor::new(vec![n, 2], x)?,
        c: Tensor::new(vec![n, k], c)?,
        extrinsic,
        intrinsic_truth: Some(Tensor::new(vec![n, 2], truth)?),
        split,
        family: Family::Synthetic(spec.family),
        image_shape: None,
        angle_range: None,
    })
}

/// Row lit at half brightness when a bar is two rows thick.
pub fn bars_companion_row(row: usize) -> usize {
    if row + 1 < BARS_SIDE {
        row + 1
    } else {
        row - 1
    }
}

/// Clean 8×8 bar image in [−1, 1].
pub fn render_bar(class: usize, brightness: f64, thickness: usize) -> Vec<f64> {
    let mut img = vec![-1.0; BARS_SIDE * BARS_SIDE];
    let lit = -1.0 + 2.0 * brightness;
    img[class * BARS_SIDE..(class + 1) * BARS_SIDE].fill(lit);
    if thickness == 2 {
        let r = bars_companion_row(class);
        img[r * BARS_SIDE..(r + 1) * BARS_SIDE].fill(-1.0 + brightness);
    }
    img
}

pub fn make_bars(spec: &SyntheticSpec, split: Split) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.count(split);
    let k = spec.classes;
    let mut rng = spec.rng(split);
    let labels = spec.labels(n, &mut rng);
    let extrinsic = spec.extrinsic();
    let d = BARS_SIDE * BARS_SIDE;
    let mut x = Vec::with_capacity(d * n);
    let mut c = Vec::with_capacity(k * n);
    let mut truth = Vec::with_capacity(2 * n);
    for &label in &labels {
        let brightness = rng.random_range(BARS_MIN_BRIGHTNESS..=1.0);
        let thickness = if rng.random_bool(0.5) { 2 } else { 1 };
        let img = render_bar(label, brightness, thickness);
        if spec.noise > 0.0 {
            let noise = normal(spec.noise);
            x.extend(img.into_iter().map(|v| (v + noise.sample(&mut rng)).clamp(-1.0, 1.0)));
        } else {
            x.extend(img);
        }
        c.extend(extrinsic.one_hot::<f64>(label));
        truth.extend([brightness, thickness as f64]);
    }
    Ok(Dataset {
        x: Tensor::new(vec![n, d], x)?,
        c: Tensor::new(vec![n, k], c)?,
        extrinsic,
        intrinsic_truth: Some(Tensor::new(vec![n, 2], truth)?),
        split,
        family: Family::Synthetic(spec.family),
        image_shape: Some((BARS_SIDE, BARS_SIDE)),
        angle_range: None,
    })
}

/// Maps `range` linearly onto c ∈ [−1, 1].
pub fn angle_to_c(theta: f64, range: (f64, f64)) -> f64 {
    2.0 * (theta - range.0) / (range.1 - range.0) - 1.0
}

pub fn c_to_angle(c: f64, range: (f64, f64)) -> f64 {
    range.0 + (c + 1.0) / 2.0 * (range.1 - range.0)
}

pub fn make_ring_continuous(spec: &SyntheticSpec, split: Split) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.count(split);
    let mut rng = spec.rng(split);
    let noise = normal(spec.noise);
    let (lo, hi) = spec.angle_range;
    let mut x = Vec::with_capacity(2 * n);
    let mut c = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let theta = if spec.stratified {
            // one uniform draw per equal-width stratum
            let w = (hi - lo) / n as f64;
            lo + w * (i as f64 + rng.random_range(0.0..1.0))
        } else {
            rng.random_range(lo..hi)
        };
        let radial = noise.sample(&mut rng);
        let (s, co) = theta.sin_cos();
        x.push(((1.0 + radial) * co).clamp(-1.0, 1.0));
        x.push(((1.0 + radial) * s).clamp(-1.0, 1.0));
        c.push(angle_to_c(theta, spec.angle_range));
        truth.push(radial);
    }
    Ok(Dataset {
        x: Tensor::new(vec![n, 2], x)?,
        c: Tensor::new(vec![n, 1], c)?,
        extrinsic: spec.extrinsic(),
        intrinsic_truth: Some(Tensor::new(vec![n, 1], truth)?),
        split,
        family: Family::Synthetic(spec.family),
        image_shape: None,
        angle_range: Some(spec.angle_range),
    })
}
