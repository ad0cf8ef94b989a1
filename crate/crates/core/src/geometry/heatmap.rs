use std::io::{self, Write};

use super::Rect;
use crate::error::{Error, Result};

/// Per-pixel crop coverage, max-normalized so the most covered pixel is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageHeatmap {
    pub width: u32,
    pub height: u32,
    /// Row-major, `height` rows of `width` values.
    pub grid: Vec<f64>,
}

impl CoverageHeatmap {
    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.grid[(y * self.width + x) as usize]
    }

    /// One line per pixel row, comma-separated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.grid.chunks(self.width as usize) {
            let line = row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Binary 8-bit PGM (`P5`), pixel value `round(255 * v)`.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .grid
            .iter()
            .map(|v| (255.0 * v).round().clamp(0.0, 255.0) as u8)
            .collect();
        out.write_all(&bytes)
    }
}

/// Streaming coverage counter. Each rect costs O(1) via a 2-D difference
/// array; counts are materialized once in [`HeatmapAccumulator::finish`].
#[derive(Debug, Clone)]
pub struct HeatmapAccumulator {
    width: u32,
    height: u32,
    diff: Vec<i64>,
    rects: u64,
}

impl HeatmapAccumulator {
    pub fn new(width: u32, height: u32) -> Self {
        let cells = (width as usize + 1) * (height as usize + 1);
        Self {
            width,
            height,
            diff: vec![0; cells],
            rects: 0,
        }
    }

    pub fn add(&mut self, rect: &Rect) -> Result<()> {
        rect.check_within(self.width, self.height)?;
        let stride = self.width as usize + 1;
        let (x0, y0) = (rect.x as usize, rect.y as usize);
        let (x1, y1) = (rect.right() as usize, rect.bottom() as usize);
        self.diff[y0 * stride + x0] += 1;
        self.diff[y0 * stride + x1] -= 1;
        self.diff[y1 * stride + x0] -= 1;
        self.diff[y1 * stride + x1] += 1;
        self.rects += 1;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects == 0
    }

    /// Raw per-pixel cover counts, row-major.
    pub fn counts(&self) -> Vec<u64> {
        let (w, h) = (self.width as usize, self.height as usize);
        let stride = w + 1;
        let mut acc = vec![0i64; (w + 1) * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                let up = if y > 0 { acc[(y - 1) * stride + x] } else { 0 };
                let left = if x > 0 { acc[y * stride + x - 1] } else { 0 };
                let diag = if x > 0 && y > 0 { acc[(y - 1) * stride + x - 1] } else { 0 };
                acc[y * stride + x] = self.diff[y * stride + x] + up + left - diag;
            }
        }
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (y, x)))
            .map(|(y, x)| acc[y * stride + x] as u64)
            .collect()
    }

    pub fn finish(&self) -> Result<CoverageHeatmap> {
        if self.rects == 0 {
            return Err(Error::EmptyInput("coverage heatmap needs at least one rect"));
        }
        let counts = self.counts();
        let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        Ok(CoverageHeatmap {
            width: self.width,
            height: self.height,
            grid: counts.into_iter().map(|c| c as f64 / peak).collect(),
        })
    }
}

/// Counts how many rects cover each pixel and divides by the maximum count.
pub fn coverage_heatmap<'a, I>(rects: I, image_w: u32, image_h: u32) -> Result<CoverageHeatmap>
where
    I: IntoIterator<Item = &'a Rect>,
{
    let mut acc = HeatmapAccumulator::new(image_w, image_h);
    for r in rects {
        acc.add(r)?;
    }
    acc.finish()
}
