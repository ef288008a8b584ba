//! Exact inverses of the synthetic constructions. They read ground-truth
//! factors back out of any point or image, generated or real.

use std::f64::consts::PI;

use super::synthetic::{angle_to_c, bars_companion_row, ring_center_angle, BARS_SIDE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oracle {
    GaussianRing { classes: usize },
    Bars { classes: usize },
    RingContinuous { range: (f64, f64) },
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

/// Smallest absolute difference between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(2.0 * PI - d)
}

fn row_brightness(x: &[f64], row: usize) -> f64 {
    let r = &x[row * BARS_SIDE..(row + 1) * BARS_SIDE];
    (r.iter().sum::<f64>() / BARS_SIDE as f64 + 1.0) / 2.0
}

impl Oracle {
    /// Class read from `x`, for categorical families.
    pub fn class(&self, x: &[f64]) -> Option<usize> {
        match *self {
            Oracle::GaussianRing { classes } => {
                let step = 2.0 * PI / classes as f64;
                let a = wrap_angle(x[1].atan2(x[0]));
                Some(((a / step).round() as usize) % classes)
            }
            Oracle::Bars { classes } => {
                // row-argmax of row sums, restricted to rows that carry a class
                let mut best = 0;
                for r in 1..classes {
                    if row_brightness(x, r) > row_brightness(x, best) {
                        best = r;
                    }
                }
                Some(best)
            }
            Oracle::RingContinuous { .. } => None,
        }
    }

    /// Extrinsic value read from `x` as a code vector (one-hot or c).
    pub fn extrinsic(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Oracle::GaussianRing { classes } | Oracle::Bars { classes } => {
                let mut v = vec![0.0; classes];
                v[self.class(x).expect("categorical")] = 1.0;
                v
            }
            Oracle::RingContinuous { range } => {
                // unwrap around the range midpoint so slightly-out-of-range
                // angles map just past ±1 instead of jumping a full turn
                let mid = (range.0 + range.1) / 2.0;
                let offset = (self.angle(x).expect("ring") - mid + PI).rem_euclid(2.0 * PI) - PI;
                vec![angle_to_c(mid + offset, range)]
            }
        }
    }

    /// Polar angle in [0, 2π) for ring families.
    pub fn angle(&self, x: &[f64]) -> Option<f64> {
        match self {
            Oracle::Bars { .. } => None,
            _ => Some(wrap_angle(x[1].atan2(x[0]))),
        }
    }

    /// Intrinsic factors in the same layout as the dataset's
    /// `intrinsic_truth`: (radial, tangential) offsets from the nearest class
    /// centre, (brightness, thickness), or the radial offset.
    pub fn intrinsic(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Oracle::GaussianRing { classes } => {
                let theta = ring_center_angle(self.class(x).expect("categorical"), classes);
                let (s, c) = theta.sin_cos();
                vec![x[0] * c + x[1] * s - 1.0, -x[0] * s + x[1] * c]
            }
            Oracle::Bars { .. } => {
                let class = self.class(x).expect("categorical");
                let b = row_brightness(x, class);
                let thick = self.companion_brightness(x, class) > b / 4.0;
                vec![b, if thick { 2.0 } else { 1.0 }]
            }
            Oracle::RingContinuous { .. } => vec![x[0].hypot(x[1]) - 1.0],
        }
    }

    fn companion_brightness(&self, x: &[f64], class: usize) -> f64 {
        let mut best = row_brightness(x, bars_companion_row(class));
        if class > 0 {
            best = best.max(row_brightness(x, class - 1));
        }
        best
    }

    /// A binary attribute that is never supplied as c, for downstream
    /// prediction from embeddings: bar thickness 2, or a point lying outside
    /// the unit circle.
    pub fn held_out_attribute(&self, intrinsic: &[f64]) -> bool {
        match self {
            Oracle::Bars { .. } => intrinsic[1] > 1.5,
            Oracle::GaussianRing { .. } | Oracle::RingContinuous { .. } => intrinsic[0] > 0.0,
        }
    }
}
