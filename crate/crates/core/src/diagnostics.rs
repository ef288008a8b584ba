//! Finite-difference sweep over every differentiable tape op and a composed
//! three-layer network loss.

use rand::Rng;

use crate::autodiff::{grad_check, Tape, Tensor, Var};
use crate::error::Result;
use crate::rng::derive_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct OpCheck {
    pub name: &'static str,
    pub points: usize,
    pub worst_rel_err: f64,
    pub passed: bool,
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOL: f64 = 1e-4;

type Check = fn(&mut Tape<f64>, Var, &[Tensor<f64>]) -> Result<Var>;
type KinkDistance = fn(&Tensor<f64>, &[Tensor<f64>]) -> f64;

struct Case {
    name: &'static str,
    /// Shape of the checked input.
    shape: &'static [usize],
    /// Shapes of fixed auxiliary operands, drawn fresh per point.
    aux: &'static [&'static [usize]],
    /// Input values stay away from zero (kinks, log domain).
    positive: bool,
    /// Multiplies every drawn value.
    scale: f64,
    /// Distance from the nearest kink at a drawn point; points closer than
    /// [`KINK_MARGIN`] are redrawn because the central difference straddles
    /// the kink there.
    kink: Option<KinkDistance>,
    f: Check,
}

pub const KINK_MARGIN: f64 = 100.0 * FD_STEP;

fn weighted_sum(tape: &mut Tape<f64>, y: Var, w: &Tensor<f64>) -> Result<Var> {
    let wv = tape.constant(w.clone());
    let p = tape.mul(y, wv)?;
    Ok(tape.sum(p))
}

fn konst(tape: &mut Tape<f64>, t: &Tensor<f64>) -> Var {
    tape.constant(t.clone())
}

/// Three dense layers (leaky-ReLU, tanh, identity) with a BCE-on-logits loss;
/// `slot` picks which of (x, w1, w2, w3) is the checked input.
fn mlp3(tape: &mut Tape<f64>, input: Var, aux: &[Tensor<f64>], slot: usize) -> Result<Var> {
    // aux layout: x, w1, b1, w2, b2, w3, b3, targets (the slot entry is ignored)
    let mut vars: Vec<Var> = aux.iter().map(|t| tape.constant(t.clone())).collect();
    let pos = [0, 1, 3, 5][slot];
    vars[pos] = input;
    let h = tape.matmul(vars[0], vars[1])?;
    let h = tape.add_bias(h, vars[2])?;
    let h = tape.leaky_relu(h, 0.2);
    let h = tape.matmul(h, vars[3])?;
    let h = tape.add_bias(h, vars[4])?;
    let h = tape.tanh(h);
    let h = tape.matmul(h, vars[5])?;
    let logits = tape.add_bias(h, vars[6])?;
    tape.bce_with_logits(logits, vars[7])
}

/// Keeps hidden units out of tanh saturation, where gradients shrink to the
/// size of the finite-difference noise.
const MLP_SCALE: f64 = 0.5;

/// Smallest |pre-activation| of the leaky-ReLU layer.
fn mlp3_kink(input: &Tensor<f64>, aux: &[Tensor<f64>], slot: usize) -> f64 {
    let x = if slot == 0 { input } else { &aux[0] };
    let w = if slot == 1 { input } else { &aux[1] };
    let b = aux[2].data();
    let (n, k, m) = (x.rows(), x.cols(), w.cols());
    let mut closest = f64::INFINITY;
    for i in 0..n {
        for j in 0..m {
            let pre: f64 = (0..k).map(|l| x.row(i)[l] * w.row(l)[j]).sum::<f64>() + b[j];
            closest = closest.min(pre.abs());
        }
    }
    closest
}

const MLP_AUX: &[&[usize]] = &[&[4, 3], &[3, 5], &[5], &[5, 5], &[5], &[5, 2], &[2], &[4, 2]];

fn cases() -> Vec<Case> {
    vec![
        Case { name: "matmul_lhs", shape: &[3, 4], aux: &[&[4, 2], &[3, 2]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let b = konst(t, &a[0]); let y = t.matmul(x, b)?; weighted_sum(t, y, &a[1]) } },
        Case { name: "matmul_rhs", shape: &[4, 2], aux: &[&[3, 4], &[3, 2]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let b = konst(t, &a[0]); let y = t.matmul(b, x)?; weighted_sum(t, y, &a[1]) } },
        Case { name: "add", shape: &[3, 4], aux: &[&[3, 4], &[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let b = konst(t, &a[0]); let y = t.add(x, b)?; let y = t.mul(y, y)?; weighted_sum(t, y, &a[1]) } },
        Case { name: "sub", shape: &[3, 4], aux: &[&[3, 4], &[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let b = konst(t, &a[0]); let y = t.sub(b, x)?; let y = t.mul(y, y)?; weighted_sum(t, y, &a[1]) } },
        Case { name: "mul", shape: &[3, 4], aux: &[&[3, 4], &[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let b = konst(t, &a[0]); let y = t.mul(x, b)?; let y = t.mul(y, x)?; weighted_sum(t, y, &a[1]) } },
        Case { name: "scale", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.scale(x, -1.7); weighted_sum(t, y, &a[0]) } },
        Case { name: "add_bias", shape: &[4], aux: &[&[3, 4], &[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let m = konst(t, &a[0]); let y = t.add_bias(m, x)?; let y = t.tanh(y); weighted_sum(t, y, &a[1]) } },
        Case { name: "sigmoid", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.sigmoid(x); weighted_sum(t, y, &a[0]) } },
        Case { name: "tanh", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.tanh(x); weighted_sum(t, y, &a[0]) } },
        Case { name: "leaky_relu", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.leaky_relu(x, 0.2); weighted_sum(t, y, &a[0]) } },
        Case { name: "exp", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.exp(x); weighted_sum(t, y, &a[0]) } },
        Case { name: "log", shape: &[3, 4], aux: &[&[3, 4]], positive: true, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.log(x)?; weighted_sum(t, y, &a[0]) } },
        Case { name: "softmax", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.softmax(x); weighted_sum(t, y, &a[0]) } },
        Case { name: "concat", shape: &[3, 2], aux: &[&[3, 3], &[3, 5]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let b = konst(t, &a[0]); let y = t.concat(&[b, x], 1)?; let y = t.mul(y, y)?; weighted_sum(t, y, &a[1]) } },
        Case { name: "slice", shape: &[3, 5], aux: &[&[3, 2]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let y = t.slice(x, 1, 2, 2)?; let y = t.mul(y, y)?; weighted_sum(t, y, &a[0]) } },
        Case { name: "sum", shape: &[3, 4], aux: &[], positive: false, scale: 1.0, kink: None,
            f: |t, x, _| { let y = t.tanh(x); Ok(t.sum(y)) } },
        Case { name: "mean", shape: &[3, 4], aux: &[], positive: false, scale: 1.0, kink: None,
            f: |t, x, _| { let y = t.sigmoid(x); Ok(t.mean(y)) } },
        Case { name: "bce_with_logits", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let tv = konst(t, &a[0].map(|v| (v + 2.0) / 4.0)); t.bce_with_logits(x, tv) } },
        Case { name: "softmax_cross_entropy", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let tv = konst(t, &a[0].map(|v| (v + 2.0) / 4.0)); t.softmax_cross_entropy(x, tv) } },
        Case { name: "mse", shape: &[3, 4], aux: &[&[3, 4]], positive: false, scale: 1.0, kink: None,
            f: |t, x, a| { let tv = konst(t, &a[0]); t.mse(x, tv) } },
        Case { name: "mlp3_input", shape: &[4, 3], aux: MLP_AUX, positive: false, scale: MLP_SCALE,
            kink: Some(|x, a| mlp3_kink(x, a, 0)), f: |t, x, a| mlp3(t, x, a, 0) },
        Case { name: "mlp3_layer1", shape: &[3, 5], aux: MLP_AUX, positive: false, scale: MLP_SCALE,
            kink: Some(|x, a| mlp3_kink(x, a, 1)), f: |t, x, a| mlp3(t, x, a, 1) },
        Case { name: "mlp3_layer2", shape: &[5, 5], aux: MLP_AUX, positive: false, scale: MLP_SCALE,
            kink: Some(|x, a| mlp3_kink(x, a, 2)), f: |t, x, a| mlp3(t, x, a, 2) },
        Case { name: "mlp3_layer3", shape: &[5, 2], aux: MLP_AUX, positive: false, scale: MLP_SCALE,
            kink: Some(|x, a| mlp3_kink(x, a, 3)), f: |t, x, a| mlp3(t, x, a, 3) },
    ]
}

fn random(shape: &[usize], positive: bool, rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            if positive {
                rng.random_range(0.2..3.0)
            } else {
                // keep clear of the leaky-ReLU kink at 0
                let v: f64 = rng.random_range(0.05..2.0);
                if rng.random_bool(0.5) { v } else { -v }
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("sized above")
}

/// Runs every case at `points` random points with step [`FD_STEP`] and
/// tolerance [`FD_TOL`].
pub fn gradient_suite(points: usize, seed: u64) -> Result<Vec<OpCheck>> {
    let mut out = Vec::new();
    for case in cases() {
        let mut rng = derive_rng(seed, case.name);
        let mut worst: f64 = 0.0;
        for _ in 0..points {
            let (x, aux) = loop {
                let x = random(case.shape, case.positive, &mut rng).map(|v| v * case.scale);
                let aux: Vec<Tensor<f64>> = case
                    .aux
                    .iter()
                    .map(|s| random(s, false, &mut rng).map(|v| v * case.scale))
                    .collect();
                match case.kink {
                    Some(dist) if dist(&x, &aux) < KINK_MARGIN => continue,
                    _ => break (x, aux),
                }
            };
            let f = case.f;
            let report = grad_check(|t, v| f(t, v, &aux), &x, FD_STEP, FD_TOL)?;
            worst = worst.max(report.max_rel_err);
        }
        out.push(OpCheck {
            name: case.name,
            points,
            worst_rel_err: worst,
            passed: worst < FD_TOL,
        });
    }
    Ok(out)
}
