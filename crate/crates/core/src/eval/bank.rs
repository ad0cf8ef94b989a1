use serde::{Deserialize, Serialize};

use crate::curation::DistanceSpace;
use crate::data::LabeledImageSet;
use crate::error::{Error, Result};
use crate::geometry::{extract_and_resize, Rect};
use crate::model::{l2_normalize_rows, EncoderModel, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    pub knn_temperature: f64,
    pub probe_epochs: usize,
    pub probe_lr: f64,
    pub probe_batch_size: usize,
    /// Evaluate on `h` (default) or on the projection `z`.
    pub space: DistanceSpace,
    /// Side length images are resized to before encoding; `None` keeps the
    /// native size.
    pub input_size: Option<usize>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 200,
            knn_temperature: 0.5,
            probe_epochs: 100,
            probe_lr: 0.1,
            probe_batch_size: 256,
            space: DistanceSpace::Representation,
            input_size: None,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        if !(self.knn_temperature > 0.0) {
            return Err(Error::param("knn_temperature", "must be > 0"));
        }
        if self.probe_batch_size == 0 {
            return Err(Error::param("probe_batch_size", "must be at least 1"));
        }
        if !(self.probe_lr >= 0.0) {
            return Err(Error::param("probe_lr", "must be >= 0"));
        }
        Ok(())
    }
}

/// Labeled embeddings with unit-norm copies for cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBank {
    pub embeddings: Tensor<f32>,
    pub normalized: Tensor<f32>,
    pub labels: Vec<usize>,
}

impl EmbeddingBank {
    pub fn new(embeddings: Tensor<f32>, labels: Vec<usize>) -> Result<Self> {
        if embeddings.shape.len() != 2 || embeddings.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} labels for embeddings of shape {:?}",
                labels.len(),
                embeddings.shape
            )));
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput("embedding bank"));
        }
        let (normalized, _) = l2_normalize_rows(&embeddings)?;
        Ok(Self {
            embeddings,
            normalized,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.row_len()
    }

    /// Encodes every image of `set` and keeps its label.
    pub fn from_set(model: &EncoderModel<f32>, set: &LabeledImageSet, config: &EvalConfig) -> Result<Self> {
        let emb = encode_set(model, set, config)?;
        Self::new(emb, set.labels.clone())
    }
}

const ENCODE_CHUNK: usize = 256;

/// Encodes a whole image set in chunks, returning `M x D` embeddings in the
/// configured space.
pub fn encode_set(model: &EncoderModel<f32>, set: &LabeledImageSet, config: &EvalConfig) -> Result<Tensor<f32>> {
    let dim = match config.space {
        DistanceSpace::Projection => model.config.proj_dim,
        DistanceSpace::Representation => model.config.rep_dim,
    };
    let mut out = Vec::with_capacity(set.len() * dim);
    for chunk in set.images.chunks(ENCODE_CHUNK) {
        let first = &chunk[0];
        let size = config.input_size.unwrap_or(first.height);
        let mut data = Vec::with_capacity(chunk.len() * first.channels * size * size);
        for img in chunk {
            if img.height == size && img.width == size {
                data.extend_from_slice(&img.data);
            } else {
                let full = Rect::full(img.width as u32, img.height as u32);
                data.extend_from_slice(&extract_and_resize(img, &full, size)?.data);
            }
        }
        let views = Tensor::new(vec![chunk.len(), first.channels, size, size], data)?;
        let enc = model.encode(&views)?;
        let t = match config.space {
            DistanceSpace::Projection => enc.z,
            DistanceSpace::Representation => enc.h,
        };
        out.extend_from_slice(&t.data);
    }
    Tensor::new(vec![set.len(), dim], out)
}
