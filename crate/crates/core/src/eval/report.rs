use serde::{Deserialize, Serialize};

use super::classifier::ClassifierConfig;
use super::protocol::{
    adversarial_accuracy, classifier_scores, downstream_prediction, encoding_metrics, generation_quality,
    intrinsic_preservation, oracle_generation_error, train_external_classifier, DownstreamResult,
};
use crate::bicogan::{BiCoGan, ExtrinsicKind, GammaSchedule};
use crate::data::{Dataset, Oracle};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Size of the generated set used for A_ext_gen, F_ext_gen and AA.
    pub n_gen: usize,
    pub classifier: ClassifierConfig,
    pub ips_bases: usize,
    pub ips_variations: usize,
    pub downstream: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_gen: 2000,
            classifier: ClassifierConfig::default(),
            ips_bases: 500,
            ips_variations: 7,
            downstream: true,
        }
    }
}

/// Scores of one evaluation run. Scores that do not apply to the model's
/// mode or extrinsic form are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub epoch: usize,
    pub gamma: GammaSchedule,
    pub a_c: Option<f64>,
    pub f_c: Option<f64>,
    pub c_mse: Option<f64>,
    pub a_ext_gen: Option<f64>,
    pub f_ext_gen: Option<f64>,
    pub a_ext_real: Option<f64>,
    pub f_ext_real: Option<f64>,
    pub aa: Option<f64>,
    pub ips: Option<f64>,
    /// Oracle accuracy of generated samples (categorical) or mean absolute
    /// angle error in radians (continuous ring).
    pub oracle_gen: Option<f64>,
    pub downstream: Vec<DownstreamResult>,
    pub n_gen: usize,
    pub classifier: ClassifierConfig,
}

pub const CSV_COLUMNS: [&str; 17] = [
    "seed",
    "epoch",
    "gamma",
    "a_c",
    "f_c",
    "c_mse",
    "a_ext_gen",
    "f_ext_gen",
    "a_ext_real",
    "f_ext_real",
    "aa",
    "ips",
    "oracle_gen",
    "downstream_attribute",
    "downstream_accuracy",
    "downstream_majority",
    "n_gen",
];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn gamma_label(g: &GammaSchedule) -> String {
    match *g {
        GammaSchedule::Constant { gamma } => format!("constant({gamma})"),
        GammaSchedule::Dynamic { alpha, rho, phi } => format!("dynamic({alpha};{rho};{phi})"),
    }
}

impl MetricsReport {
    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    /// One CSV row in [`CSV_COLUMNS`] order; inapplicable cells are empty.
    pub fn csv_row(&self) -> String {
        let d = self.downstream.first();
        [
            self.seed.to_string(),
            self.epoch.to_string(),
            gamma_label(&self.gamma),
            opt(self.a_c),
            opt(self.f_c),
            opt(self.c_mse),
            opt(self.a_ext_gen),
            opt(self.f_ext_gen),
            opt(self.a_ext_real),
            opt(self.f_ext_real),
            opt(self.aa),
            opt(self.ips),
            opt(self.oracle_gen),
            d.map(|d| d.attribute.clone()).unwrap_or_default(),
            opt(d.map(|d| d.accuracy)),
            opt(d.map(|d| d.majority_baseline)),
            self.n_gen.to_string(),
        ]
        .join(",")
    }

    /// Every score that is present lies in [0, 1] (`c_mse` and the angle
    /// error excepted).
    pub fn scores_in_unit_interval(&self) -> bool {
        [
            self.a_c,
            self.f_c,
            self.a_ext_gen,
            self.f_ext_gen,
            self.a_ext_real,
            self.f_ext_real,
            self.aa,
            self.ips,
        ]
        .into_iter()
        .flatten()
        .chain(self.downstream.iter().flat_map(|d| [d.accuracy, d.majority_baseline]))
        .all(|v| (0.0..=1.0).contains(&v))
    }
}

/// Runs the full evaluation protocol. Each metric draws from its own
/// randomness stream derived from `seed`.
pub fn evaluate<T: Scalar>(
    model: &BiCoGan<T>,
    train: &Dataset,
    test: &Dataset,
    config: &EvalConfig,
    gamma: GammaSchedule,
    epoch: usize,
    seed: u64,
) -> Result<MetricsReport> {
    let mut r = MetricsReport {
        seed,
        epoch,
        gamma,
        a_c: None,
        f_c: None,
        c_mse: None,
        a_ext_gen: None,
        f_ext_gen: None,
        a_ext_real: None,
        f_ext_real: None,
        aa: None,
        ips: None,
        oracle_gen: None,
        downstream: Vec::new(),
        n_gen: config.n_gen,
        classifier: config.classifier.clone(),
    };
    let conditional = model.mode.conditional();

    if conditional && model.encoder.is_some() {
        let enc = encoding_metrics(model, test)?;
        r.a_c = enc.a_c;
        r.f_c = enc.f_c;
        r.c_mse = enc.c_mse;
    }

    let classifiable = model.extrinsic.kind != ExtrinsicKind::Continuous;
    if classifiable {
        let ext_seed = derive_seed(seed, "eval/external");
        let clf = train_external_classifier::<T>(train, &config.classifier, ext_seed)?;
        let real = classifier_scores(&clf, &test.x.cast(), &test.c.cast())?;
        r.a_ext_real = Some(real.accuracy);
        r.f_ext_real = Some(real.f1);
        if conditional {
            let gen = generation_quality(model, &clf, &train.c, config.n_gen, seed)?;
            r.a_ext_gen = Some(gen.accuracy);
            r.f_ext_gen = Some(gen.f1);
            r.aa = Some(adversarial_accuracy(
                model,
                test,
                &train.c,
                config.n_gen,
                &config.classifier,
                derive_seed(seed, "eval/aa-classifier"),
            )?);
        }
    }

    let oracle: Option<Oracle> = train.oracle();
    if let (Some(o), true) = (oracle, conditional) {
        r.ips = Some(intrinsic_preservation(
            model,
            Some(o),
            &train.c,
            config.ips_bases,
            config.ips_variations,
            seed,
        )?);
        r.oracle_gen = Some(oracle_generation_error(model, &o, &train.c, config.n_gen, seed)?);
    }

    if config.downstream && oracle.is_some() && model.encoder.is_some() {
        r.downstream.push(downstream_prediction(
            model,
            train,
            test,
            &config.classifier,
            derive_seed(seed, "eval/downstream"),
        )?);
    }
    Ok(r)
}
