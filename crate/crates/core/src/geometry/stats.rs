use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pair::{classify_pair_with, sample_pair_unchecked};
use super::SamplingRegime;
use crate::error::{Error, Result};

/// Pairs per shard in [`config_statistics_sharded`]. The shard layout, and
/// therefore the result, does not depend on the number of worker threads.
pub const SHARD_SIZE: u64 = 1 << 16;

/// Configuration frequencies and mean patch size over a batch of sampled
/// pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigStats {
    pub n_samples: u64,
    pub freq_global_local: f64,
    pub freq_adjacent: f64,
    pub freq_intersection: f64,
    /// Mean of `w*h / (W*H)` over both patches of every pair.
    pub mean_area_fraction: f64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    counts: [u64; 3],
    pairs: u64,
    area_sum: f64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (c, o) in self.counts.iter_mut().zip(other.counts) {
            *c += o;
        }
        self.pairs += other.pairs;
        self.area_sum += other.area_sum;
        self
    }

    fn finish(self) -> ConfigStats {
        let n = self.pairs as f64;
        ConfigStats {
            n_samples: self.pairs,
            freq_global_local: self.counts[0] as f64 / n,
            freq_adjacent: self.counts[1] as f64 / n,
            freq_intersection: self.counts[2] as f64 / n,
            mean_area_fraction: self.area_sum / (2.0 * n),
        }
    }
}

fn tally_pairs<R: rand::Rng + ?Sized>(
    rng: &mut R,
    image_w: u32,
    image_h: u32,
    regime: &SamplingRegime,
    pairs: u64,
) -> Result<Tally> {
    let mut tally = Tally::default();
    let image_area = f64::from(image_w) * f64::from(image_h);
    for _ in 0..pairs {
        let (a, b) = sample_pair_unchecked(rng, image_w, image_h, regime)?;
        tally.counts[classify_pair_with(&a, &b, regime.geometry).index()] += 1;
        tally.area_sum += (a.area() + b.area()) as f64 / image_area;
        tally.pairs += 1;
    }
    Ok(tally)
}

fn check_args(image_w: u32, image_h: u32, regime: &SamplingRegime, n_samples: u64) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    if image_w == 0 || image_h == 0 {
        return Err(Error::Geometry(format!("image {image_w}x{image_h} is empty")));
    }
    regime.crop.validate()
}

/// Samples `n_samples` pairs from one random stream and tallies them.
pub fn config_statistics<R: rand::Rng + ?Sized>(
    rng: &mut R,
    image_w: u32,
    image_h: u32,
    regime: &SamplingRegime,
    n_samples: u64,
) -> Result<ConfigStats> {
    check_args(image_w, image_h, regime, n_samples)?;
    Ok(tally_pairs(rng, image_w, image_h, regime, n_samples)?.finish())
}

/// Parallel variant: shard `i` draws up to [`SHARD_SIZE`] pairs from ChaCha8
/// stream `i` of `seed`, and shard tallies are merged in index order.
pub fn config_statistics_sharded(
    seed: u64,
    image_w: u32,
    image_h: u32,
    regime: &SamplingRegime,
    n_samples: u64,
) -> Result<ConfigStats> {
    check_args(image_w, image_h, regime, n_samples)?;
    let shards = n_samples.div_ceil(SHARD_SIZE);
    let tallies = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let pairs = SHARD_SIZE.min(n_samples - i * SHARD_SIZE);
            tally_pairs(&mut rng, image_w, image_h, regime, pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tallies
        .into_iter()
        .fold(Tally::default(), Tally::merge)
        .finish())
}
