//! Central-difference verification of tape gradients.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub max_rel_err: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Relative error with the denominator floored at 1e-8.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares the tape gradient of scalar `f` at `point` against
/// `(f(x+h) − f(x−h)) / 2h` coordinate by coordinate.
pub fn grad_check<T, F>(f: F, point: &Tensor<T>, h: f64, tol: f64) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, Var) -> Result<Var>,
{
    let eval = |x: &Tensor<T>| -> Result<f64> {
        let mut tape = Tape::new();
        let v = tape.constant(x.clone());
        let out = f(&mut tape, v)?;
        let val = tape.value(out);
        if val.len() != 1 {
            return Err(Error::contract("grad_check needs a scalar-valued function"));
        }
        let y = val.item().to_f64_exact();
        if !y.is_finite() {
            return Err(Error::Numeric(format!("non-finite evaluation {y}")));
        }
        Ok(y)
    };

    let mut tape = Tape::new();
    let x = tape.leaf(point.clone());
    let out = f(&mut tape, x)?;
    if !tape.value(out).item().to_f64_exact().is_finite() {
        return Err(Error::Numeric("non-finite evaluation at point".into()));
    }
    let analytic: Vec<f64> = tape
        .backward(out)?
        .wrt(x)
        .data()
        .iter()
        .map(|v| v.to_f64_exact())
        .collect();

    let mut numeric = Vec::with_capacity(point.len());
    let mut probe = point.clone();
    for i in 0..point.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + T::of(h);
        let up = eval(&probe)?;
        probe.data_mut()[i] = orig - T::of(h);
        let down = eval(&probe)?;
        probe.data_mut()[i] = orig;
        numeric.push((up - down) / (2.0 * h));
    }

    let rel_err: Vec<f64> = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &b)| relative_error(a, b))
        .collect();
    let max_rel_err = rel_err.iter().copied().fold(0.0, f64::max);
    Ok(GradCheckReport {
        analytic,
        numeric,
        rel_err,
        max_rel_err,
        tol,
        passed: max_rel_err < tol,
    })
}
