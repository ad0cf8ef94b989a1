use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Rect;
use crate::error::{Error, Result};

/// Random-resized-crop parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropParams {
    pub scale_lo: f64,
    pub scale_hi: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub max_attempts: u32,
    pub out_size: u32,
}

impl Default for CropParams {
    fn default() -> Self {
        Self {
            scale_lo: 0.08,
            scale_hi: 1.0,
            ratio_lo: 3.0 / 4.0,
            ratio_hi: 4.0 / 3.0,
            max_attempts: 10,
            out_size: 32,
        }
    }
}

impl CropParams {
    pub fn with_scale(mut self, lo: f64, hi: f64) -> Self {
        self.scale_lo = lo;
        self.scale_hi = hi;
        self
    }

    pub fn with_ratio(mut self, lo: f64, hi: f64) -> Self {
        self.ratio_lo = lo;
        self.ratio_hi = hi;
        self
    }

    pub fn with_out_size(mut self, out_size: u32) -> Self {
        self.out_size = out_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale_lo > 0.0) {
            return Err(Error::param("scale", format!("lower bound {} must be > 0", self.scale_lo)));
        }
        if !(self.scale_lo <= self.scale_hi) || self.scale_hi > 1.0 {
            return Err(Error::param(
                "scale",
                format!("need 0 < lo <= hi <= 1, got [{}, {}]", self.scale_lo, self.scale_hi),
            ));
        }
        if !(self.ratio_lo > 0.0) || !(self.ratio_lo <= self.ratio_hi) || !self.ratio_hi.is_finite() {
            return Err(Error::param(
                "ratio",
                format!("need 0 < lo <= hi, got [{}, {}]", self.ratio_lo, self.ratio_hi),
            ));
        }
        if self.max_attempts == 0 {
            return Err(Error::param("max_attempts", "must be at least 1"));
        }
        if self.out_size == 0 {
            return Err(Error::param("out_size", "must be at least 1"));
        }
        Ok(())
    }
}

// Draws from [lo, hi]; unlike `gen_range` this accepts lo == hi.
fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Samples a random resized crop.
///
/// Each attempt draws a target area uniformly from the scale range and a
/// log-uniform aspect ratio, rounds the side lengths half away from zero and
/// accepts the first rect that fits, placing it uniformly. After
/// `max_attempts` misses the largest rect with the image's own aspect
/// ratio (clamped into the ratio range) is center-cropped.
pub fn sample_crop<R: Rng + ?Sized>(
    rng: &mut R,
    image_w: u32,
    image_h: u32,
    params: &CropParams,
) -> Result<Rect> {
    params.validate()?;
    if image_w == 0 || image_h == 0 {
        return Err(Error::Geometry(format!("image {image_w}x{image_h} is empty")));
    }
    Ok(sample_crop_unchecked(rng, image_w, image_h, params))
}

pub(crate) fn sample_crop_unchecked<R: Rng + ?Sized>(
    rng: &mut R,
    image_w: u32,
    image_h: u32,
    params: &CropParams,
) -> Rect {
    let (wf, hf) = (f64::from(image_w), f64::from(image_h));
    let area = wf * hf;
    let (log_lo, log_hi) = (params.ratio_lo.ln(), params.ratio_hi.ln());

    for _ in 0..params.max_attempts {
        let target_area = area * uniform(rng, params.scale_lo, params.scale_hi);
        let aspect = uniform(rng, log_lo, log_hi).exp();
        let w = (target_area * aspect).sqrt().round();
        let h = (target_area / aspect).sqrt().round();
        if w > 0.0 && w <= wf && h > 0.0 && h <= hf {
            let (w, h) = (w as u32, h as u32);
            let x = rng.gen_range(0..=image_w - w);
            let y = rng.gen_range(0..=image_h - h);
            return Rect { x, y, w, h };
        }
    }

    let in_ratio = wf / hf;
    let (w, h) = if in_ratio < params.ratio_lo {
        (image_w, ((wf / params.ratio_lo).round() as u32).clamp(1, image_h))
    } else if in_ratio > params.ratio_hi {
        (((hf * params.ratio_hi).round() as u32).clamp(1, image_w), image_h)
    } else {
        (image_w, image_h)
    };
    Rect {
        x: (image_w - w) / 2,
        y: (image_h - h) / 2,
        w,
        h,
    }
}
