//! Evaluation harnesses: retrieval agreement against a reference metric,
//! KNN classification, timing, and prototype learning through a frozen model.

mod knn;
mod metric;
mod prototypes;
mod retrieval;
mod timing;

pub use knn::{knn_macro_f1, knn_predict, macro_f1, ClassifReport};
pub use metric::{MetricHandle, MetricKind, MetricSpec, PairMetric};
pub use prototypes::{
    classify_by_prototype, init_prototypes, prototype_accuracy, train_prototypes, DifferentiableMetric,
    PrototypeConfig, PrototypeReport, PrototypeSet,
};
pub use retrieval::{agreement_from_matrices, nn_retrieval_agreement, ranking, RetrievalReport};
pub use timing::{timing_bench, TimingReport, TimingRow};

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
