//! Evaluation of frozen representations: weighted K-NN voting and a linear
//! probe.

mod bank;
mod knn;
mod probe;

pub use bank::{encode_set, EmbeddingBank, EvalConfig};
pub use knn::{knn_accuracy, knn_classify, top_k};
pub use probe::{linear_probe, linear_probe_features};
