//! Training loop: sample views per regime, optionally curate, take an SGD
//! step, and periodically run K-NN evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curation::{curate_batch, Resampler, ViewBatch, ViewProvenance};
use crate::data::{CurationStepRecord, EpochRecord, LabeledImageSet, MetricRecord};
use crate::error::{Error, Result};
use crate::eval::{knn_accuracy, EvalConfig};
use crate::geometry::{extract_and_resize, photometric_augment, sample_pair, AugConfig, Image, SamplingRegime};
use crate::model::{EncoderModel, Tensor, TrainConfig, Trainer};

pub const STREAM_SHUFFLE: u64 = 0;
pub const STREAM_VIEWS: u64 = 1;
pub const STREAM_CURATION: u64 = 2;

/// Independent ChaCha8 stream `stream` under `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws augmented view pairs from a dataset.
pub struct ViewSampler<'a> {
    data: &'a LabeledImageSet,
    regime: SamplingRegime,
    augment: AugConfig,
    rng: ChaCha8Rng,
}

impl<'a> ViewSampler<'a> {
    pub fn new(data: &'a LabeledImageSet, regime: SamplingRegime, augment: AugConfig, rng: ChaCha8Rng) -> Self {
        Self {
            data,
            regime,
            augment,
            rng,
        }
    }

    /// Two views of dataset image `source`.
    pub fn draw_pair(&mut self, source: usize) -> Result<[(Image, ViewProvenance); 2]> {
        let img = self
            .data
            .images
            .get(source)
            .ok_or_else(|| Error::Resample(format!("no image {source} in dataset")))?;
        let (a, b) = sample_pair(&mut self.rng, img.width as u32, img.height as u32, &self.regime)?;
        let out = self.regime.crop.out_size as usize;
        let mut view = |rect| -> Result<(Image, ViewProvenance)> {
            let crop = extract_and_resize(img, &rect, out)?;
            let (aug_img, aug) = photometric_augment(&mut self.rng, &crop, &self.augment);
            Ok((aug_img, ViewProvenance { source, rect, aug }))
        };
        Ok([view(a)?, view(b)?])
    }

    pub fn sample_batch(&mut self, instances: &[usize]) -> Result<ViewBatch> {
        let channels = self.data.images.first().map_or(3, |i| i.channels);
        let out = self.regime.crop.out_size as usize;
        let mut data = Vec::with_capacity(2 * instances.len() * channels * out * out);
        let mut provenance = Vec::with_capacity(2 * instances.len());
        for &src in instances {
            for (img, prov) in self.draw_pair(src)? {
                data.extend_from_slice(&img.data);
                provenance.push(prov);
            }
        }
        let views = Tensor::new(vec![2 * instances.len(), channels, out, out], data)?;
        ViewBatch::new(instances.to_vec(), views, provenance)
    }
}

impl Resampler for ViewSampler<'_> {
    fn resample(&mut self, batch: &mut ViewBatch, instances: &[usize]) -> Result<()> {
        for &i in instances {
            let source = *batch
                .instances
                .get(i)
                .ok_or_else(|| Error::Resample(format!("instance {i} not in batch")))?;
            let [(a, pa), (b, pb)] = self.draw_pair(source)?;
            batch.set_view(2 * i, &a, pa)?;
            batch.set_view(2 * i + 1, &b, pb)?;
        }
        Ok(())
    }
}

/// Result of [`run_training`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EncoderModel<f32>,
    pub epochs: Vec<EpochRecord>,
    pub curation_steps: Vec<CurationStepRecord>,
    /// Highest K-NN accuracy over all evaluations.
    pub best_knn: Option<f64>,
    pub final_knn: Option<f64>,
    /// Mean `w*h / (W*H)` over all views used for training.
    pub mean_area_fraction: f64,
}

impl TrainOutcome {
    /// Fraction of curated (post-warm-up) steps that ended satisfied.
    pub fn satisfied_fraction(&self) -> Option<f64> {
        (!self.curation_steps.is_empty()).then(|| {
            self.curation_steps.iter().filter(|r| r.satisfied).count() as f64
                / self.curation_steps.len() as f64
        })
    }
}

/// Batches per epoch; a trailing partial batch is dropped unless it is the
/// only one.
pub fn steps_per_epoch(dataset_len: usize, batch_size: usize) -> usize {
    (dataset_len / batch_size).max(usize::from(dataset_len >= 2))
}

/// Trains a fresh encoder on `train`. Every metric record is passed to
/// `sink` as soon as it exists.
pub fn run_training(
    config: &TrainConfig,
    eval: &EvalConfig,
    train: &LabeledImageSet,
    test: &LabeledImageSet,
    sink: &mut dyn FnMut(&MetricRecord) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    eval.validate()?;
    if train.len() < 2 {
        return Err(Error::InsufficientBatch { instances: train.len() });
    }
    let batch_size = config.batch_size.min(train.len());
    let steps = steps_per_epoch(train.len(), batch_size);
    let model = EncoderModel::<f32>::new(config.encoder.clone(), config.seed)?;
    let mut trainer = Trainer::new(model, config, steps * config.epochs);

    let mut shuffle_rng = rng_stream(config.seed, STREAM_SHUFFLE);
    let mut sampler = ViewSampler::new(train, config.regime, config.augment, rng_stream(config.seed, STREAM_VIEWS));
    let mut resampler = ViewSampler::new(train, config.regime, config.augment, rng_stream(config.seed, STREAM_CURATION));
    let eval = EvalConfig {
        input_size: Some(config.regime.crop.out_size as usize),
        ..*eval
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut curation_steps = Vec::new();
    let (mut area_sum, mut area_count) = (0.0f64, 0usize);
    let mut best_knn: Option<f64> = None;
    let mut final_knn = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        let (mut curated, mut satisfied, mut resampled) = (0usize, 0usize, 0usize);
        for step in 0..steps {
            let instances = &order[step * batch_size..(step + 1) * batch_size];
            let mut batch = sampler.sample_batch(instances)?;
            if let Some(cur) = &config.curation {
                let (b, report) = curate_batch(batch, &trainer.model, epoch, cur, &mut resampler)?;
                batch = b;
                if report.applied {
                    curated += 1;
                    satisfied += usize::from(report.satisfied);
                    resampled += report.resampled;
                    let rec = CurationStepRecord {
                        epoch,
                        step,
                        rounds_used: report.rounds_used,
                        resampled: report.resampled,
                        satisfied: report.satisfied,
                        margin: report.margin.unwrap_or(0.0),
                    };
                    sink(&MetricRecord::Curation(rec.clone()))?;
                    curation_steps.push(rec);
                }
            }
            for p in &batch.provenance {
                let src = &train.images[p.source];
                area_sum += p.rect.area_fraction(src.width as u32, src.height as u32);
                area_count += 1;
            }
            loss_sum += f64::from(trainer.train_step(&batch)?);
        }

        let last = epoch + 1 == config.epochs;
        let knn = if config.eval_every > 0 && ((epoch + 1) % config.eval_every == 0 || last) {
            let acc = knn_accuracy(&trainer.model, train, test, &EvalConfig {
                k: eval.k.min(train.len()),
                ..eval
            })?;
            best_knn = Some(best_knn.map_or(acc, |b| b.max(acc)));
            if last {
                final_knn = Some(acc);
            }
            Some(acc)
        } else {
            None
        };
        let record = EpochRecord {
            epoch,
            loss: loss_sum / steps as f64,
            knn_acc: knn,
            curation_satisfied: (curated > 0).then(|| satisfied as f64 / curated as f64),
            curation_resampled: (curated > 0).then_some(resampled),
        };
        sink(&MetricRecord::Epoch(record.clone()))?;
        epochs.push(record);
    }

    Ok(TrainOutcome {
        model: trainer.model,
        epochs,
        curation_steps,
        best_knn,
        final_knn,
        mean_area_fraction: area_sum / area_count.max(1) as f64,
    })
}
