//! Random-resized-crop geometry analysis and batch curation for contrastive
//! representation learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: crop sampling, pair-configuration classification,
//!   constrained pair samplers, coverage heatmaps and Monte Carlo statistics.
//! - [`model`]: a small convolutional encoder with hand-written backward
//!   passes, the NT-Xent loss, SGD with momentum and checkpoints.
//! - [`curation`]: the batch curator that resamples views until every
//!   positive pair is closer than every negative pair.
//! - [`eval`]: K-NN and linear-probe evaluation of frozen representations.
//! - [`data`]: CIFAR-10 binary loading, a synthetic dataset, run configs and
//!   metrics files.
//! - [`experiment`]: the training loop that ties the pieces together.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curation;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geometry;
pub mod model;

pub use error::{Error, Result};

pub use curation::{
    compute_distances, curate_batch, CurationReport, CuratorConfig, DistanceSpace,
    DistanceSummary, ViewBatch, ViewProvenance,
};
pub use data::{LabeledImageSet, RunConfig};
pub use eval::{EmbeddingBank, EvalConfig};
pub use geometry::{
    classify_pair, classify_pair_with, config_statistics, config_statistics_sharded, coverage_heatmap,
    extract_and_resize, HeatmapAccumulator,
    photometric_augment, sample_crop, sample_pair, AugConfig, ConfigStats, CoverageHeatmap,
    CropParams, Image, PairConfiguration, PairGeometry, Rect, RegimeKind, SamplingRegime,
};
pub use model::{EncoderConfig, EncoderModel, Tensor, TrainConfig};
