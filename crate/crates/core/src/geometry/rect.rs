use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned integer crop region. Covers pixel columns `x..x + w` and
/// rows `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::Geometry(format!("rect {w}x{h} has zero extent")));
        }
        Ok(Self { x, y, w, h })
    }

    /// The whole `image_w` x `image_h` image.
    pub fn full(image_w: u32, image_h: u32) -> Self {
        Self {
            x: 0,
            y: 0,
            w: image_w,
            h: image_h,
        }
    }

    /// Exclusive right edge.
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn area_fraction(&self, image_w: u32, image_h: u32) -> f64 {
        self.area() as f64 / (f64::from(image_w) * f64::from(image_h))
    }

    pub fn fits_in(&self, image_w: u32, image_h: u32) -> bool {
        self.w >= 1
            && self.h >= 1
            && u64::from(self.x) + u64::from(self.w) <= u64::from(image_w)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(image_h)
    }

    pub fn check_within(&self, image_w: u32, image_h: u32) -> Result<()> {
        if self.fits_in(image_w, image_h) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "rect {self:?} is not inside a {image_w}x{image_h} image"
            )))
        }
    }

    /// Pixel-set containment: every pixel of `other` is a pixel of `self`.
    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// `other` lies strictly inside `self`, touching none of its edges.
    pub fn contains_strictly(&self, other: &Rect) -> bool {
        other.x > self.x
            && other.y > self.y
            && other.right() < self.right()
            && other.bottom() < self.bottom()
    }

    /// Overlap of the pixel sets.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        })
    }

    /// True when there is at least one pixel of empty space between the two
    /// rects along some axis, so they neither overlap nor touch.
    pub fn separated_from(&self, other: &Rect) -> bool {
        self.right() < other.x
            || other.right() < self.x
            || self.bottom() < other.y
            || other.bottom() < self.y
    }
}
