//! Fixtures shared by the benchmarks.

use cropcurate::{EncoderConfig, Image, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(channels: usize, size: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    let data = (0..channels * size * size).map(|_| r.gen::<f32>()).collect();
    Image::new(channels, size, size, data).expect("valid image")
}

/// A `[n, 3, size, size]` batch of uniform noise.
pub fn random_views(n: usize, size: usize, seed: u64) -> Tensor<f32> {
    let mut r = rng(seed);
    let data = (0..n * 3 * size * size).map(|_| r.gen::<f32>()).collect();
    Tensor::new(vec![n, 3, size, size], data).expect("valid tensor")
}

/// The small encoder used for desk-scale runs.
pub fn small_encoder() -> EncoderConfig {
    EncoderConfig {
        in_channels: 3,
        channels: vec![8, 16, 32],
        rep_dim: 64,
        proj_hidden: 64,
        proj_dim: 32,
    }
}
