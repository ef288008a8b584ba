use serde::{Deserialize, Serialize};

use crate::bicogan::{ExtrinsicKind, ExtrinsicSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub f1: f64,
}

/// F1 from confusion counts; 0 when there are no true positives.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Accuracy and macro-F1 over the classes present in either sequence.
pub fn multiclass_scores(truth: &[usize], pred: &[usize]) -> Result<Scores> {
    if truth.is_empty() || truth.len() != pred.len() {
        return Err(Error::contract(format!(
            "scoring needs equal, non-empty label sequences ({} vs {})",
            truth.len(),
            pred.len()
        )));
    }
    let k = truth.iter().chain(pred).max().copied().unwrap_or(0) + 1;
    let (mut tp, mut fp, mut fn_) = (vec![0; k], vec![0; k], vec![0; k]);
    let mut correct = 0;
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let present: Vec<usize> = (0..k).filter(|&c| tp[c] + fp[c] + fn_[c] > 0).collect();
    let macro_f1 = present.iter().map(|&c| f1(tp[c], fp[c], fn_[c])).sum::<f64>() / present.len() as f64;
    Ok(Scores {
        accuracy: correct as f64 / truth.len() as f64,
        f1: macro_f1,
    })
}

/// Per-attribute accuracy and positive-class F1, averaged over attributes.
/// Rows are flattened `n × k` {0,1} codes.
pub fn binary_scores(truth: &[f64], pred: &[f64], k: usize) -> Result<Scores> {
    if truth.is_empty() || truth.len() != pred.len() || k == 0 || !truth.len().is_multiple_of(k) {
        return Err(Error::contract("binary scoring needs equal, non-empty n×k codes"));
    }
    let n = truth.len() / k;
    let (mut acc, mut f) = (0.0, 0.0);
    for j in 0..k {
        let (mut tp, mut fp, mut fn_, mut correct) = (0, 0, 0, 0);
        for i in 0..n {
            let (t, p) = (truth[i * k + j] > 0.5, pred[i * k + j] > 0.5);
            match (t, p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
            if t == p {
                correct += 1;
            }
        }
        acc += correct as f64 / n as f64;
        f += f1(tp, fp, fn_);
    }
    Ok(Scores {
        accuracy: acc / k as f64,
        f1: f / k as f64,
    })
}

/// Scores hard predicted codes against true codes under `spec`.
pub fn code_scores(spec: &ExtrinsicSpec, truth: &[f64], pred: &[f64]) -> Result<Scores> {
    let k = spec.dim();
    match spec.kind {
        ExtrinsicKind::Categorical => {
            let argmax = |v: &[f64]| -> Vec<usize> {
                v.chunks(k)
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .fold(0, |b, (j, &x)| if x > r[b] { j } else { b })
                    })
                    .collect()
            };
            multiclass_scores(&argmax(truth), &argmax(pred))
        }
        ExtrinsicKind::BinaryVector => binary_scores(truth, pred, k),
        ExtrinsicKind::Continuous => Err(Error::Unsupported(
            "accuracy/F1 are undefined for continuous c".into(),
        )),
    }
}
