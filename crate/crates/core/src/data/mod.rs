//! Datasets, run configuration and metrics files.

mod cifar;
mod config;
mod metrics;
mod synthetic;

pub use cifar::{load_cifar10, parse_cifar_batch, RECORD_BYTES, TEST_FILE, TRAIN_FILES};
pub use config::{load_config, save_config, DatasetSpec, RunConfig};
pub use metrics::{append_summary_row, CurationStepRecord, EpochRecord, MetricRecord, MetricsWriter, SummaryRow, SUMMARY_HEADER};
pub use synthetic::{make_synthetic_set, SyntheticSpec};

use crate::error::{Error, Result};
use crate::geometry::Image;

/// Images with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImageSet {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledImageSet {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::param("labels", format!("label {bad} >= {num_classes} classes")));
        }
        Ok(Self {
            images,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Subset by indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}
