use super::Rect;
use crate::error::{Error, Result};

/// Channel-planar (`C x H x W`) image with `f32` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "{} values for a {channels}x{height}x{width} image",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }
}

// Source coordinate for output index `i` when mapping `src_len` samples onto
// `dst_len` with half-pixel centers (corners not aligned). Returns the two
// neighbors and the weight of the upper one.
fn taps(i: usize, src_len: usize, dst_len: usize) -> (usize, usize, f32) {
    let scale = src_len as f64 / dst_len as f64;
    let pos = ((i as f64 + 0.5) * scale - 0.5).max(0.0);
    let lo = (pos.floor() as usize).min(src_len - 1);
    let hi = (lo + 1).min(src_len - 1);
    let frac = (pos - lo as f64).clamp(0.0, 1.0) as f32;
    (lo, hi, frac)
}

/// Crops `rect` out of `image` and bilinearly resizes it to
/// `out_size x out_size`.
///
/// Sampling uses half-pixel centers without corner alignment: output pixel
/// `i` reads source position `(i + 0.5) * in / out - 0.5`, clamped to the
/// crop. No antialiasing is applied when shrinking.
pub fn extract_and_resize(image: &Image, rect: &Rect, out_size: usize) -> Result<Image> {
    rect.check_within(image.width as u32, image.height as u32)?;
    if out_size == 0 {
        return Err(Error::param("out_size", "must be at least 1"));
    }
    let (cw, ch) = (rect.w as usize, rect.h as usize);
    let (ox, oy) = (rect.x as usize, rect.y as usize);
    let xs: Vec<_> = (0..out_size).map(|i| taps(i, cw, out_size)).collect();
    let ys: Vec<_> = (0..out_size).map(|i| taps(i, ch, out_size)).collect();

    let mut out = Image::filled(image.channels, out_size, out_size, 0.0);
    for c in 0..image.channels {
        for (oy_i, &(y0, y1, fy)) in ys.iter().enumerate() {
            for (ox_i, &(x0, x1, fx)) in xs.iter().enumerate() {
                let p00 = image.get(c, oy + y0, ox + x0);
                let p01 = image.get(c, oy + y0, ox + x1);
                let p10 = image.get(c, oy + y1, ox + x0);
                let p11 = image.get(c, oy + y1, ox + x1);
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                out.set(c, oy_i, ox_i, top + (bottom - top) * fy);
            }
        }
    }
    Ok(out)
}
