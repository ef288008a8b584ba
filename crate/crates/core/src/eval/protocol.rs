use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::classifier::{Classifier, ClassifierConfig};
use super::scores::{code_scores, Scores};
use crate::autodiff::Tensor;
use crate::bicogan::{sample_prior, BiCoGan, ExtrinsicKind, ExtrinsicSpec};
use crate::data::{angle_distance, c_to_angle, Dataset, Oracle};
use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::scalar::Scalar;

fn flat<T: Scalar>(t: &Tensor<T>) -> Vec<f64> {
    t.data().iter().map(|v| v.to_f64_exact()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingMetrics {
    pub a_c: Option<f64>,
    pub f_c: Option<f64>,
    /// Mean squared error of encoded c (continuous specs only).
    pub c_mse: Option<f64>,
}

/// How well the encoder recovers c on held-out real data.
pub fn encoding_metrics<T: Scalar>(model: &BiCoGan<T>, test: &Dataset) -> Result<EncodingMetrics> {
    if test.is_empty() {
        return Err(Error::contract("encoding metrics on an empty test set"));
    }
    if test.extrinsic != model.extrinsic {
        return Err(Error::contract(format!(
            "test set codes {:?} do not match model {:?}",
            test.extrinsic, model.extrinsic
        )));
    }
    let enc = model.encode(&test.x.cast::<T>())?;
    if enc.c_raw.cols() != model.extrinsic.dim() {
        return Err(Error::Unsupported(format!("{:?} mode does not encode c", model.mode)));
    }
    if model.extrinsic.kind == ExtrinsicKind::Continuous {
        let pred = flat(&enc.c_raw);
        let mse = pred
            .iter()
            .zip(test.c.data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / pred.len() as f64;
        return Ok(EncodingMetrics {
            a_c: None,
            f_c: None,
            c_mse: Some(mse),
        });
    }
    let pred = flat(&model.extrinsic.decide(&enc.c_raw));
    let s = code_scores(&model.extrinsic, test.c.data(), &pred)?;
    Ok(EncodingMetrics {
        a_c: Some(s.accuracy),
        f_c: Some(s.f1),
        c_mse: None,
    })
}

/// External classifier fitted on real training data.
pub fn train_external_classifier<T: Scalar>(
    train: &Dataset,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<Classifier<T>> {
    Classifier::fit(&train.x.cast(), &train.c.cast(), train.extrinsic, config, seed)
}

pub fn classifier_scores<T: Scalar>(clf: &Classifier<T>, x: &Tensor<T>, c: &Tensor<T>) -> Result<Scores> {
    let pred = clf.predict(x)?;
    code_scores(&clf.spec, &flat(c), &flat(&pred))
}

/// `n` generated samples: each pairs a random z with a c drawn from `c_train`.
pub fn generate_set<T: Scalar>(
    model: &BiCoGan<T>,
    c_train: &Tensor<f64>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(Tensor<T>, Tensor<T>)> {
    if n == 0 {
        return Err(Error::contract("generated set size must be at least 1"));
    }
    let (z, c) = sample_prior(n, &model.prior, &c_train.cast::<T>(), rng)?;
    let x = model.generate(&z, &c)?;
    Ok((x, c))
}

/// Scores of `classifier` on generated samples against their intended c.
pub fn generation_quality<T: Scalar>(
    model: &BiCoGan<T>,
    classifier: &Classifier<T>,
    c_train: &Tensor<f64>,
    n: usize,
    seed: u64,
) -> Result<Scores> {
    let (x, c) = generate_set(model, c_train, n, &mut derive_rng(seed, "eval/generation"))?;
    classifier_scores(classifier, &x, &c)
}

/// Accuracy on real test data of a classifier trained only on `n`
/// generated samples.
pub fn adversarial_accuracy<T: Scalar>(
    model: &BiCoGan<T>,
    test: &Dataset,
    c_train: &Tensor<f64>,
    n: usize,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<f64> {
    let (x, c) = generate_set(model, c_train, n, &mut derive_rng(seed, "eval/adversarial"))?;
    let clf = Classifier::fit(&x, &c, model.extrinsic, config, seed ^ 0x5eed)?;
    Ok(classifier_scores(&clf, &test.x.cast(), &test.c.cast())?.accuracy)
}

/// Mean of `exp(−‖oracle(G(z, c_base)) − oracle(G(z, c_var))‖)` over every
/// base row and every variation.
pub fn preservation_score<T: Scalar>(
    model: &BiCoGan<T>,
    oracle: &Oracle,
    z: &Tensor<T>,
    c_base: &Tensor<T>,
    variations: &[Tensor<T>],
) -> Result<f64> {
    if variations.is_empty() || z.rows() == 0 {
        return Err(Error::contract("intrinsic preservation needs base samples and variations"));
    }
    let base = model.generate(z, c_base)?.cast::<f64>();
    let base_f: Vec<Vec<f64>> = (0..base.rows()).map(|i| oracle.intrinsic(base.row(i))).collect();
    let mut total = 0.0;
    for c_var in variations {
        let var = model.generate(z, c_var)?.cast::<f64>();
        for (i, bf) in base_f.iter().enumerate() {
            let vf = oracle.intrinsic(var.row(i));
            let d = bf.iter().zip(&vf).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            total += (-d).exp();
        }
    }
    Ok(total / (variations.len() * base_f.len()) as f64)
}

/// Variations of each base code: other classes (categorical), single
/// attribute flips (binary), or evenly spaced shifts wrapped into [−1, 1)
/// (continuous).
pub fn code_variations<T: Scalar>(
    spec: &ExtrinsicSpec,
    c_base: &Tensor<T>,
    k_variations: usize,
    rng: &mut impl Rng,
) -> Vec<Tensor<T>> {
    let n = c_base.rows();
    let k = spec.dim();
    match spec.kind {
        ExtrinsicKind::Categorical => {
            let count = k_variations.min(k - 1);
            let mut out = vec![Tensor::zeros(c_base.shape()); count];
            for (i, base) in c_base.argmax_rows().into_iter().enumerate() {
                let others: Vec<usize> = (0..k).filter(|&j| j != base).collect();
                for (v, pick) in sample(rng, others.len(), count).into_iter().enumerate() {
                    out[v].row_mut(i)[others[pick]] = T::one();
                }
            }
            out
        }
        ExtrinsicKind::BinaryVector => (0..k_variations.min(k))
            .map(|j| {
                let mut t = c_base.clone();
                for i in 0..n {
                    let r = t.row_mut(i);
                    r[j] = T::one() - r[j];
                }
                t
            })
            .collect(),
        ExtrinsicKind::Continuous => (1..=k_variations)
            .map(|j| {
                let shift = T::of(2.0 * j as f64 / (k_variations + 1) as f64);
                c_base.map(|v| {
                    let s = v + shift + T::one();
                    let two = T::of(2.0);
                    s - two * (s / two).floor() - T::one()
                })
            })
            .collect(),
    }
}

/// Intrinsic-preservation score on `n_base` fresh prior draws.
pub fn intrinsic_preservation<T: Scalar>(
    model: &BiCoGan<T>,
    oracle: Option<Oracle>,
    c_train: &Tensor<f64>,
    n_base: usize,
    k_variations: usize,
    seed: u64,
) -> Result<f64> {
    let oracle = oracle.ok_or_else(|| Error::Unsupported("dataset family has no intrinsic oracle".into()))?;
    if !model.mode.conditional() {
        return Err(Error::Unsupported("intrinsic preservation needs a conditional generator".into()));
    }
    let mut rng = derive_rng(seed, "eval/preservation");
    let (z, c_base) = sample_prior(n_base, &model.prior, &c_train.cast::<T>(), &mut rng)?;
    let variations = code_variations(&model.extrinsic, &c_base, k_variations, &mut rng);
    preservation_score(model, &oracle, &z, &c_base, &variations)
}

/// How closely generated samples realise their requested c according to
/// the oracle: accuracy (categorical) or mean absolute angle error in
/// radians (continuous ring).
pub fn oracle_generation_error<T: Scalar>(
    model: &BiCoGan<T>,
    oracle: &Oracle,
    c_train: &Tensor<f64>,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let (x, c) = generate_set(model, c_train, n, &mut derive_rng(seed, "eval/oracle"))?;
    let (x, c) = (x.cast::<f64>(), c.cast::<f64>());
    match oracle {
        Oracle::RingContinuous { range } => {
            let total: f64 = (0..x.rows())
                .map(|i| angle_distance(oracle.angle(x.row(i)).expect("ring"), c_to_angle(c.row(i)[0], *range)))
                .sum();
            Ok(total / x.rows() as f64)
        }
        _ => {
            let want = c.argmax_rows();
            let hits = (0..x.rows())
                .filter(|&i| oracle.class(x.row(i)) == Some(want[i]))
                .count();
            Ok(hits as f64 / x.rows() as f64)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownstreamResult {
    pub attribute: String,
    pub accuracy: f64,
    pub majority_baseline: f64,
    /// The attribute is constant, so accuracy says nothing.
    pub degenerate: bool,
}

/// Predicts the family's held-out attribute from encoder embeddings `(ẑ, c)`
/// with a small classifier trained on `train` and scored on `test`.
pub fn downstream_prediction<T: Scalar>(
    model: &BiCoGan<T>,
    train: &Dataset,
    test: &Dataset,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<DownstreamResult> {
    let oracle = train
        .oracle()
        .ok_or_else(|| Error::Unsupported("dataset exposes no held-out attribute".into()))?;
    let attribute = |ds: &Dataset| -> Result<Tensor<T>> {
        let truth = ds
            .intrinsic_truth
            .as_ref()
            .ok_or_else(|| Error::Unsupported("dataset exposes no held-out attribute".into()))?;
        let v: Vec<f64> = (0..truth.rows())
            .map(|i| if oracle.held_out_attribute(truth.row(i)) { 1.0 } else { 0.0 })
            .collect();
        Tensor::from_f64(vec![v.len(), 1], &v)
    };
    let embed = |ds: &Dataset| -> Result<Tensor<T>> {
        let (z, c) = model.embed(&ds.x.cast())?;
        let mut rows = Vec::with_capacity(z.rows());
        for i in 0..z.rows() {
            rows.push(z.row(i).iter().chain(c.row(i)).copied().collect::<Vec<T>>());
        }
        Tensor::from_rows(&rows)
    };
    let name = match oracle {
        Oracle::Bars { .. } => "thick_bar",
        _ => "outside_unit_circle",
    }
    .to_string();

    let (y_train, y_test) = (attribute(train)?, attribute(test)?);
    let positives = y_test.data().iter().filter(|&&v| v > T::of(0.5)).count();
    let majority = positives.max(y_test.rows() - positives) as f64 / y_test.rows().max(1) as f64;
    let train_pos = y_train.data().iter().filter(|&&v| v > T::of(0.5)).count();
    if train_pos == 0 || train_pos == y_train.rows() {
        // the only sensible predictor repeats the constant training label
        let constant_hits = if train_pos == 0 { y_test.rows() - positives } else { positives };
        return Ok(DownstreamResult {
            attribute: name,
            accuracy: constant_hits as f64 / y_test.rows().max(1) as f64,
            majority_baseline: majority,
            degenerate: true,
        });
    }
    let spec = ExtrinsicSpec::binary(1);
    let clf = Classifier::fit(&embed(train)?, &y_train, spec, config, seed)?;
    let accuracy = classifier_scores(&clf, &embed(test)?, &y_test)?.accuracy;
    Ok(DownstreamResult {
        attribute: name,
        accuracy,
        majority_baseline: majority,
        degenerate: false,
    })
}
