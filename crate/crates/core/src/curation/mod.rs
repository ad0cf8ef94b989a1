//! Batch curation: resample views until every positive pair is closer than
//! every negative pair, judged by the model being trained.

mod batch;
mod curator;
mod distance;

pub use batch::{ViewBatch, ViewProvenance};
pub use curator::{
    curate_batch, violating_instances, CurationReport, CuratorConfig, Embedder, Resampler,
};
pub use distance::{compute_distances, DistanceSpace, DistanceSummary};
