use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Tensor;

/// Which encoder output the curator measures distances in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSpace {
    /// Projection-head output `z`, the space the loss acts on.
    #[default]
    Projection,
    /// Encoder representation `h`.
    Representation,
}

/// Cosine distances among the `2N` views of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    /// `m_s[i]`: distance between the two views of instance `i`.
    pub m_s: Vec<f64>,
    /// `2N x 2N` row-major distances between views of different instances.
    /// Entries for two views of the same instance are `+inf`.
    pub m_d: Vec<f64>,
    /// `max(m_s)`
    pub d_s: f64,
    /// `min(m_d)`
    pub d_d: f64,
}

impl DistanceSummary {
    pub fn views(&self) -> usize {
        2 * self.m_s.len()
    }

    /// The acceptance test `d_s < d_d`.
    pub fn satisfied(&self) -> bool {
        self.d_s < self.d_d
    }

    pub fn margin(&self) -> f64 {
        self.d_d - self.d_s
    }

    /// `(a, b, distance)` for every negative view pair with `a < b`.
    pub fn dissimilar_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let v = self.views();
        (0..v).flat_map(move |a| {
            ((a + 1)..v)
                .filter(move |&b| a / 2 != b / 2)
                .map(move |b| (a, b, self.m_d[a * v + b]))
        })
    }
}

/// Cosine distance `1 - cos(a, b)` between all view pairs, split into the
/// positive (`m_s`) and negative (`m_d`) sets.
pub fn compute_distances(z: &Tensor<f32>) -> Result<DistanceSummary> {
    if z.shape.len() != 2 || !z.rows().is_multiple_of(2) {
        return Err(Error::Shape(format!("expected 2N x D embeddings, got {:?}", z.shape)));
    }
    let views = z.rows();
    let n = views / 2;
    if n < 2 {
        return Err(Error::InsufficientBatch { instances: n });
    }
    let d = z.row_len();
    let unit: Vec<f64> = (0..views)
        .map(|i| {
            let row = z.row(i);
            let norm = row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                Ok(row.iter().map(|&v| f64::from(v) / norm).collect::<Vec<_>>())
            } else {
                Err(Error::Numeric(format!("embedding row {i} has norm {norm}")))
            }
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let dist = |a: usize, b: usize| {
        let dot: f64 = unit[a * d..(a + 1) * d]
            .iter()
            .zip(&unit[b * d..(b + 1) * d])
            .map(|(x, y)| x * y)
            .sum();
        (1.0 - dot).clamp(0.0, 2.0)
    };

    let m_s: Vec<f64> = (0..n).map(|i| dist(2 * i, 2 * i + 1)).collect();
    let mut m_d = vec![f64::INFINITY; views * views];
    for a in 0..views {
        for b in (a + 1)..views {
            if a / 2 != b / 2 {
                let v = dist(a, b);
                m_d[a * views + b] = v;
                m_d[b * views + a] = v;
            }
        }
    }
    let d_s = m_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d_d = m_d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DistanceSummary { m_s, m_d, d_s, d_d })
}
