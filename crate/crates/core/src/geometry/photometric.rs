use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Image;

/// Photometric augmentation strengths. Jitter factors are drawn from
/// `[max(0, 1 - s), 1 + s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugConfig {
    pub flip_prob: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub grayscale_prob: f64,
}

impl Default for AugConfig {
    fn default() -> Self {
        Self {
            flip_prob: 0.5,
            brightness: 0.4,
            contrast: 0.4,
            saturation: 0.4,
            grayscale_prob: 0.2,
        }
    }
}

impl AugConfig {
    /// No-op configuration.
    pub fn none() -> Self {
        Self {
            flip_prob: 0.0,
            brightness: 0.0,
            contrast: 0.0,
            saturation: 0.0,
            grayscale_prob: 0.0,
        }
    }
}

/// What was applied to a view, kept as provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugRecord {
    pub flipped: bool,
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
    pub grayscale: bool,
}

impl Default for AugRecord {
    fn default() -> Self {
        Self {
            flipped: false,
            brightness: 1.0,
            contrast: 1.0,
            saturation: 1.0,
            grayscale: false,
        }
    }
}

fn factor<R: Rng + ?Sized>(rng: &mut R, strength: f64) -> f32 {
    if strength <= 0.0 {
        return 1.0;
    }
    let lo = (1.0 - strength).max(0.0);
    let hi = 1.0 + strength;
    (lo + (hi - lo) * rng.gen::<f64>()) as f32
}

fn luma(img: &Image, i: usize) -> f32 {
    let n = img.height * img.width;
    0.299 * img.data[i] + 0.587 * img.data[n + i] + 0.114 * img.data[2 * n + i]
}

/// Applies a fixed set of adjustments, in the order flip, brightness,
/// contrast, saturation, grayscale. Results are clamped to `[0, 1]`.
pub fn apply_augmentation(image: &Image, record: &AugRecord) -> Image {
    let mut out = image.clone();
    let (h, w) = (out.height, out.width);
    let n = h * w;
    if record.flipped {
        for c in 0..out.channels {
            for y in 0..h {
                out.data[c * n + y * w..c * n + (y + 1) * w].reverse();
            }
        }
    }
    if record.brightness != 1.0 {
        for v in &mut out.data {
            *v = (*v * record.brightness).clamp(0.0, 1.0);
        }
    }
    let rgb = out.channels == 3;
    if record.contrast != 1.0 {
        let mean = if rgb {
            (0..n).map(|i| luma(&out, i)).sum::<f32>() / n as f32
        } else {
            out.data.iter().sum::<f32>() / out.data.len() as f32
        };
        for v in &mut out.data {
            *v = (mean + (*v - mean) * record.contrast).clamp(0.0, 1.0);
        }
    }
    if rgb && record.saturation != 1.0 {
        for i in 0..n {
            let gray = luma(&out, i);
            for c in 0..3 {
                let v = &mut out.data[c * n + i];
                *v = (gray + (*v - gray) * record.saturation).clamp(0.0, 1.0);
            }
        }
    }
    if rgb && record.grayscale {
        for i in 0..n {
            let gray = luma(&out, i).clamp(0.0, 1.0);
            for c in 0..3 {
                out.data[c * n + i] = gray;
            }
        }
    }
    out
}

/// Draws an [`AugRecord`] from `config` and applies it.
pub fn photometric_augment<R: Rng + ?Sized>(
    rng: &mut R,
    image: &Image,
    config: &AugConfig,
) -> (Image, AugRecord) {
    let record = AugRecord {
        flipped: config.flip_prob > 0.0 && rng.gen::<f64>() < config.flip_prob,
        brightness: factor(rng, config.brightness),
        contrast: factor(rng, config.contrast),
        saturation: factor(rng, config.saturation),
        grayscale: config.grayscale_prob > 0.0 && rng.gen::<f64>() < config.grayscale_prob,
    };
    (apply_augmentation(image, &record), record)
}
