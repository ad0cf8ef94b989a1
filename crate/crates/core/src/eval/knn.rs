use std::cmp::Ordering;

use rayon::prelude::*;

use super::bank::{EmbeddingBank, EvalConfig};
use crate::data::LabeledImageSet;
use crate::error::{Error, Result};
use crate::model::EncoderModel;

// Higher similarity first, then lower bank index.
fn rank(a: &(usize, f32), b: &(usize, f32)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Indices and similarities of the `k` most similar rows, best first.
pub fn top_k(similarities: &[f32], k: usize) -> Vec<(usize, f32)> {
    let mut idx: Vec<(usize, f32)> = similarities.iter().copied().enumerate().collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, rank);
        idx.truncate(k);
    }
    idx.sort_by(rank);
    idx
}

/// Predicts a label by similarity-weighted voting among the `k` nearest bank
/// rows (cosine similarity). Each neighbor adds `exp(sim / t)` to its label;
/// the highest score wins, the lower label on ties.
pub fn knn_classify(bank: &EmbeddingBank, query: &[f32], config: &EvalConfig) -> Result<usize> {
    if bank.is_empty() {
        return Err(Error::EmptyInput("embedding bank"));
    }
    if config.k == 0 || config.k > bank.len() {
        return Err(Error::param(
            "k",
            format!("must be in 1..={} (bank size), got {}", bank.len(), config.k),
        ));
    }
    if query.len() != bank.dim() {
        return Err(Error::Shape(format!("query has {} dims, bank has {}", query.len(), bank.dim())));
    }
    let qnorm = query.iter().map(|v| v * v).sum::<f32>().sqrt();
    if !(qnorm > 0.0) {
        return Err(Error::Numeric("query has zero norm".into()));
    }
    let sims: Vec<f32> = bank
        .normalized
        .data
        .chunks(bank.dim())
        .map(|row| row.iter().zip(query).map(|(a, b)| a * b).sum::<f32>() / qnorm)
        .collect();

    let classes = bank.labels.iter().max().map_or(0, |m| m + 1);
    let mut scores = vec![0.0f64; classes];
    for (i, s) in top_k(&sims, config.k) {
        scores[bank.labels[i]] += (f64::from(s) / config.knn_temperature).exp();
    }
    let mut best = 0;
    for (label, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = label;
        }
    }
    Ok(best)
}

/// Top-1 K-NN accuracy of `test` against a bank built from `train`.
pub fn knn_accuracy(
    model: &EncoderModel<f32>,
    train: &LabeledImageSet,
    test: &LabeledImageSet,
    config: &EvalConfig,
) -> Result<f64> {
    config.validate()?;
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let bank = EmbeddingBank::from_set(model, train, config)?;
    let queries = super::bank::encode_set(model, test, config)?;
    let correct = (0..test.len())
        .into_par_iter()
        .map(|i| knn_classify(&bank, queries.row(i), config).map(|p| usize::from(p == test.labels[i])))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / test.len() as f64)
}
