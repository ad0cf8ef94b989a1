use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::batch::ViewBatch;
use super::distance::{compute_distances, DistanceSpace, DistanceSummary};
use crate::error::{Error, Result};
use crate::model::{EncoderModel, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuratorConfig {
    /// Curation is skipped while `epoch < warmup_epochs`.
    pub warmup_epochs: usize,
    /// Resampling rounds before giving up on a batch.
    pub max_rounds: usize,
    pub space: DistanceSpace,
}

impl Default for CuratorConfig {
    fn default() -> Self {
        Self {
            warmup_epochs: 0,
            max_rounds: 10,
            space: DistanceSpace::Projection,
        }
    }
}

impl CuratorConfig {
    /// Warm-up of 20% of the total epochs.
    pub fn for_epochs(epochs: usize) -> Self {
        Self {
            warmup_epochs: epochs / 5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::param("max_rounds", "must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of curating one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    /// False when the batch was passed through during warm-up.
    pub applied: bool,
    pub rounds_used: usize,
    /// Instance resamplings summed over all rounds.
    pub resampled: usize,
    pub satisfied: bool,
    /// `d_d - d_s` of the returned batch; `None` during warm-up.
    pub margin: Option<f64>,
    /// Distances of the batch as it came in.
    pub initial_d_s: Option<f64>,
    pub initial_d_d: Option<f64>,
    /// Distances of the returned batch.
    pub final_d_s: Option<f64>,
    pub final_d_d: Option<f64>,
}

impl CurationReport {
    fn pass_through() -> Self {
        Self {
            applied: false,
            rounds_used: 0,
            resampled: 0,
            satisfied: false,
            margin: None,
            initial_d_s: None,
            initial_d_d: None,
            final_d_s: None,
            final_d_d: None,
        }
    }
}

/// Maps views to embeddings. Implemented by [`EncoderModel`]; tests plug in
/// hand-built stubs.
pub trait Embedder {
    fn embed(&self, views: &Tensor<f32>, space: DistanceSpace) -> Result<Tensor<f32>>;
}

impl Embedder for EncoderModel<f32> {
    fn embed(&self, views: &Tensor<f32>, space: DistanceSpace) -> Result<Tensor<f32>> {
        let out = self.encode(views)?;
        Ok(match space {
            DistanceSpace::Projection => out.z,
            DistanceSpace::Representation => out.h,
        })
    }
}

/// Draws fresh views for the listed instances (batch positions), writing
/// them into views `2i` and `2i + 1`.
pub trait Resampler {
    fn resample(&mut self, batch: &mut ViewBatch, instances: &[usize]) -> Result<()>;
}

impl<F> Resampler for F
where
    F: FnMut(&mut ViewBatch, &[usize]) -> Result<()>,
{
    fn resample(&mut self, batch: &mut ViewBatch, instances: &[usize]) -> Result<()> {
        self(batch, instances)
    }
}

/// Instances to resample after a failed check, sorted ascending:
///
/// - every instance whose positive distance reaches `d_d`;
/// - for every negative pair no farther apart than `d_s`, whichever of the
///   two instances has the larger positive distance (the lower index on a
///   tie).
pub fn violating_instances(summary: &DistanceSummary) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for (i, &ms) in summary.m_s.iter().enumerate() {
        if ms >= summary.d_d {
            set.insert(i);
        }
    }
    for (a, b, d) in summary.dissimilar_pairs() {
        if d <= summary.d_s {
            let (ia, ib) = (a / 2, b / 2);
            let pick = match summary.m_s[ia].partial_cmp(&summary.m_s[ib]) {
                Some(std::cmp::Ordering::Greater) => ia,
                Some(std::cmp::Ordering::Less) => ib,
                _ => ia.min(ib),
            };
            set.insert(pick);
        }
    }
    set.into_iter().collect()
}

/// Curates `batch` with the current model.
///
/// Before `config.warmup_epochs` the batch is returned untouched. Afterwards
/// the views are embedded and, while `d_s < d_d` fails, the violating
/// instances get fresh views from `resampler` and only those views are
/// re-embedded. After `max_rounds` unsuccessful rounds the batch with the
/// largest margin seen (earliest on ties) is returned with
/// `satisfied = false`.
pub fn curate_batch<E, R>(
    batch: ViewBatch,
    model: &E,
    epoch: usize,
    config: &CuratorConfig,
    resampler: &mut R,
) -> Result<(ViewBatch, CurationReport)>
where
    E: Embedder + ?Sized,
    R: Resampler + ?Sized,
{
    config.validate()?;
    if batch.len() < 2 {
        return Err(Error::InsufficientBatch {
            instances: batch.len(),
        });
    }
    if epoch < config.warmup_epochs {
        return Ok((batch, CurationReport::pass_through()));
    }

    let mut batch = batch;
    let mut emb = model.embed(&batch.views, config.space)?;
    if emb.rows() != batch.views.rows() {
        return Err(Error::Shape(format!(
            "embedder returned {} rows for {} views",
            emb.rows(),
            batch.views.rows()
        )));
    }
    let mut summary = compute_distances(&emb)?;
    let initial = (summary.d_s, summary.d_d);
    let mut rounds = 0;
    let mut resampled = 0;
    let mut best: Option<(DistanceSummary, ViewBatch)> = None;

    loop {
        if summary.satisfied() {
            let report = CurationReport {
                applied: true,
                rounds_used: rounds,
                resampled,
                satisfied: true,
                margin: Some(summary.margin()),
                initial_d_s: Some(initial.0),
                initial_d_d: Some(initial.1),
                final_d_s: Some(summary.d_s),
                final_d_d: Some(summary.d_d),
            };
            return Ok((batch, report));
        }
        if best.as_ref().is_none_or(|(b, _)| summary.margin() > b.margin()) {
            best = Some((summary.clone(), batch.clone()));
        }
        if rounds == config.max_rounds {
            break;
        }

        let violators = violating_instances(&summary);
        resampler.resample(&mut batch, &violators)?;
        let fresh = model.embed(&batch.views_of(&violators), config.space)?;
        for (k, &i) in violators.iter().enumerate() {
            emb.row_mut(2 * i).copy_from_slice(fresh.row(2 * k));
            emb.row_mut(2 * i + 1).copy_from_slice(fresh.row(2 * k + 1));
        }
        summary = compute_distances(&emb)?;
        rounds += 1;
        resampled += violators.len();
    }

    let (summary, batch) = best.expect("at least one round evaluated");
    let report = CurationReport {
        applied: true,
        rounds_used: rounds,
        resampled,
        satisfied: false,
        margin: Some(summary.margin()),
        initial_d_s: Some(initial.0),
        initial_d_d: Some(initial.1),
        final_d_s: Some(summary.d_s),
        final_d_d: Some(summary.d_d),
    };
    Ok((batch, report))
}
