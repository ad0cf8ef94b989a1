//! Crop geometry: random resized crops, pair configurations and the Monte
//! Carlo statistics built on them.

mod crop;
mod heatmap;
mod image;
mod pair;
mod photometric;
mod rect;
mod stats;

pub use crop::{sample_crop, CropParams};
pub use heatmap::{coverage_heatmap, CoverageHeatmap, HeatmapAccumulator};
pub use image::{extract_and_resize, Image};
pub use pair::{
    classify_pair, classify_pair_with, sample_pair, PairConfiguration, PairGeometry, RegimeKind,
    SamplingRegime, REJECTION_BUDGET,
};
pub use photometric::{apply_augmentation, photometric_augment, AugConfig, AugRecord};
pub use rect::Rect;
pub use stats::{config_statistics, config_statistics_sharded, ConfigStats, SHARD_SIZE};
