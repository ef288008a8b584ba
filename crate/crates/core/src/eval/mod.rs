//! Evaluation protocol: encoding accuracy, external-classifier generation
//! quality, adversarial accuracy, oracle-based intrinsic preservation and
//! downstream prediction from embeddings.

mod classifier;
mod protocol;
mod report;
mod scores;

pub use classifier::{Classifier, ClassifierConfig, MIN_CLASSIFIER_TRAIN};
pub use protocol::{
    adversarial_accuracy, classifier_scores, code_variations, downstream_prediction, encoding_metrics,
    generate_set, generation_quality, intrinsic_preservation, oracle_generation_error, preservation_score,
    train_external_classifier, DownstreamResult, EncodingMetrics,
};
pub use report::{evaluate, gamma_label, EvalConfig, MetricsReport, CSV_COLUMNS};
pub use scores::{binary_scores, code_scores, f1, multiclass_scores, Scores};
