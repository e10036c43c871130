//! Axis-aligned boxes and regular sampling grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a point lies inside a box.
pub const BOX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Domain(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (l, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!(
                    "degenerate axis {l}: [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            intervals.iter().map(|i| i.0).collect(),
            intervals.iter().map(|i| i.1).collect(),
        )
    }

    /// The unit box `[0,1]^m`.
    pub fn unit(m: usize) -> Self {
        Self {
            lower: vec![0.0; m],
            upper: vec![1.0; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.lower.iter().copied().zip(self.upper.iter().copied()).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        self.lower.iter().all(|&a| a == 0.0) && self.upper.iter().all(|&b| b == 1.0)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    /// Affine map from this box onto `[0,1]^m`.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (a, b))| (v - a) / (b - a))
            .collect()
    }

    /// Affine map from `[0,1]^m` onto this box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (a, b))| a + (b - a) * v)
            .collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (a, b))| v.clamp(*a, *b))
            .collect()
    }

    /// Regular grid with `resolution` cells (so `resolution + 1` nodes) per
    /// axis, in lexicographic order with the last axis varying fastest.
    pub fn grid(&self, resolution: usize) -> Vec<Vec<f64>> {
        let m = self.dim();
        let per_axis = resolution + 1;
        let total = per_axis.pow(m as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; m];
        for _ in 0..total {
            out.push(
                idx.iter()
                    .enumerate()
                    .map(|(l, &k)| {
                        let t = k as f64 / resolution as f64;
                        self.lower[l] + (self.upper[l] - self.lower[l]) * t
                    })
                    .collect(),
            );
            for l in (0..m).rev() {
                idx[l] += 1;
                if idx[l] < per_axis {
                    break;
                }
                idx[l] = 0;
            }
        }
        out
    }

    /// Smallest box containing every point; `None` for an empty set.
    pub fn bounding(points: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = points.first()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in points {
            for (l, v) in p.iter().enumerate() {
                lo[l] = lo[l].min(*v);
                hi[l] = hi[l].max(*v);
            }
        }
        Some((lo, hi))
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_axis() {
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
    }

    #[test]
    fn unit_round_trip() {
        let b = BoxDomain::from_intervals(&[(-3.0, 3.0), (1.0, 2.0)]).unwrap();
        let u = b.to_unit(&[0.0, 1.5]);
        assert_eq!(u, vec![0.5, 0.5]);
        assert_eq!(b.from_unit(&u), vec![0.0, 1.5]);
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = BoxDomain::unit(2).grid(2);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[3], vec![0.5, 0.0]);
    }
}
