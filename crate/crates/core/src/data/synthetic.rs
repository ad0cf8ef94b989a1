use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LabeledImageSet;
use crate::error::{Error, Result};
use crate::geometry::Image;

/// Parameters of the synthetic class-conditional image set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub image_size: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            per_class: 500,
            image_size: 32,
            noise: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Disc,
    Square,
    Triangle,
    Cross,
    Ring,
    Diamond,
    Bars,
    Frame,
}

const SHAPES: [Shape; 8] = [
    Shape::Disc,
    Shape::Square,
    Shape::Triangle,
    Shape::Cross,
    Shape::Ring,
    Shape::Diamond,
    Shape::Bars,
    Shape::Frame,
];

impl Shape {
    /// Whether offset `(dx, dy)` from the center, in units of the radius,
    /// is inside the shape.
    fn covers(self, dx: f64, dy: f64) -> bool {
        let (ax, ay) = (dx.abs(), dy.abs());
        match self {
            Shape::Disc => dx * dx + dy * dy <= 1.0,
            Shape::Square => ax <= 0.8 && ay <= 0.8,
            Shape::Triangle => dy <= 0.8 && dy >= -1.0 + 2.0 * ax,
            Shape::Cross => (ax <= 0.3 && ay <= 1.0) || (ay <= 0.3 && ax <= 1.0),
            Shape::Ring => {
                let r2 = dx * dx + dy * dy;
                (0.45..=1.0).contains(&r2)
            }
            Shape::Diamond => ax + ay <= 1.0,
            Shape::Bars => ay <= 1.0 && ax <= 1.0 && ((dx + 1.0) * 2.5).floor() as i64 % 2 == 0,
            Shape::Frame => ax <= 1.0 && ay <= 1.0 && (ax >= 0.6 || ay >= 0.6),
        }
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let i = h.floor();
    let f = h - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i as i64 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Generates a class-conditional set that is separable by construction.
///
/// Class `c` fixes a base hue and a shape; each image jitters the hue
/// slightly, places the shape at a random position and size, adds a random
/// linear shading gradient and Gaussian pixel noise. Samples are interleaved
/// by class so every prefix is close to balanced.
pub fn make_synthetic_set(spec: &SyntheticSpec) -> Result<LabeledImageSet> {
    if spec.classes == 0 || spec.per_class == 0 {
        return Err(Error::param("synthetic", "classes and per_class must be >= 1"));
    }
    if spec.image_size < 4 {
        return Err(Error::param("image_size", "must be at least 4"));
    }
    if !(spec.noise >= 0.0) {
        return Err(Error::param("noise", "must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise).expect("finite sigma");
    let size = spec.image_size;
    let sf = size as f64;

    let total = spec.classes * spec.per_class;
    let mut images = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let class = i % spec.classes;
        let base_hue = class as f64 / spec.classes as f64;
        let hue = base_hue + rng.gen_range(-0.02..0.02);
        let bg = hsv_to_rgb(hue, 0.55, rng.gen_range(0.45..0.6));
        let fg = hsv_to_rgb(hue + 0.5, 0.35, rng.gen_range(0.8..0.95));
        let shape = SHAPES[class % SHAPES.len()];
        let radius = sf * rng.gen_range(0.22..0.34);
        let cx = rng.gen_range(radius..sf - radius);
        let cy = rng.gen_range(radius..sf - radius);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let (gx, gy) = (angle.cos() * 0.15, angle.sin() * 0.15);

        let mut img = Image::filled(3, size, size, 0.0);
        for y in 0..size {
            for x in 0..size {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let inside = shape.covers((px - cx) / radius, (py - cy) / radius);
                let base = if inside { fg } else { bg };
                let shade = gx * (px / sf - 0.5) + gy * (py / sf - 0.5);
                for (c, &b) in base.iter().enumerate() {
                    let v = b + shade + noise.sample(&mut rng);
                    img.set(c, y, x, v.clamp(0.0, 1.0) as f32);
                }
            }
        }
        images.push(img);
        labels.push(class);
    }
    LabeledImageSet::new(images, labels, spec.classes)
}
