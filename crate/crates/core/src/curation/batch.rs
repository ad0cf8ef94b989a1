use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AugRecord, Image, Rect};
use crate::model::Tensor;

/// Where a view came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewProvenance {
    /// Index of the source image in the dataset.
    pub source: usize,
    pub rect: Rect,
    pub aug: AugRecord,
}

/// `N` source instances and their `2N` views. Views `2i` and `2i + 1` belong
/// to instance `i` and form its positive pair; every cross-instance view
/// pair is a negative pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBatch {
    pub instances: Vec<usize>,
    /// `2N x C x S x S`
    pub views: Tensor<f32>,
    pub provenance: Vec<ViewProvenance>,
}

impl ViewBatch {
    pub fn new(instances: Vec<usize>, views: Tensor<f32>, provenance: Vec<ViewProvenance>) -> Result<Self> {
        let n = instances.len();
        if views.rows() != 2 * n || provenance.len() != 2 * n {
            return Err(Error::Shape(format!(
                "{n} instances need {} views and provenance records, got {} and {}",
                2 * n,
                views.rows(),
                provenance.len()
            )));
        }
        if views.shape.len() != 4 {
            return Err(Error::Shape(format!("views must be 2N x C x S x S, got {:?}", views.shape)));
        }
        for (v, p) in provenance.iter().enumerate() {
            if p.source != instances[v / 2] {
                return Err(Error::Shape(format!(
                    "view {v} comes from image {}, but its instance is {}",
                    p.source,
                    instances[v / 2]
                )));
            }
        }
        Ok(Self {
            instances,
            views,
            provenance,
        })
    }

    /// Number of instances `N`.
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Overwrites view `v` with a new image and its provenance.
    pub fn set_view(&mut self, v: usize, image: &Image, provenance: ViewProvenance) -> Result<()> {
        let row = self.views.row_len();
        if image.data.len() != row {
            return Err(Error::Shape(format!(
                "view {v} needs {row} values, got {}",
                image.data.len()
            )));
        }
        if provenance.source != self.instances[v / 2] {
            return Err(Error::Resample(format!(
                "view {v} must come from image {}, not {}",
                self.instances[v / 2],
                provenance.source
            )));
        }
        self.views.row_mut(v).copy_from_slice(&image.data);
        self.provenance[v] = provenance;
        Ok(())
    }

    /// Views of the given instances, in order, as a `2k x C x S x S` tensor.
    pub fn views_of(&self, instances: &[usize]) -> Tensor<f32> {
        let mut shape = self.views.shape.clone();
        shape[0] = 2 * instances.len();
        let data = instances
            .iter()
            .flat_map(|&i| [self.views.row(2 * i), self.views.row(2 * i + 1)])
            .flatten()
            .copied()
            .collect();
        Tensor { shape, data }
    }
}
