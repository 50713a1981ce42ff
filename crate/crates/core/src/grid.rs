//! Uniform grids of values on `[0, extent]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a [`ValueGrid`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Numerical solution of the Hamilton-Jacobi problem from the origin.
    Solution,
    /// Relative value function from a base point; zero below the base.
    Relative,
    /// Last passage times divided by the scale parameter.
    ScaledPassage,
}

/// Values `U(i, j)` at the points `(i h, j h)`, `0 <= i < n1`, `0 <= j < n2`,
/// stored with `j` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    pub base: (usize, usize),
    pub kind: GridKind,
    pub values: Vec<f64>,
    pub description: String,
    pub caveats: Vec<String>,
}

impl ValueGrid {
    pub fn new(h: f64, n1: usize, n2: usize, kind: GridKind, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n1 * n2, "value count does not match grid dims");
        ValueGrid {
            h,
            n1,
            n2,
            base: (0, 0),
            kind,
            values,
            description: String::new(),
            caveats: Vec::new(),
        }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(h: f64, n1: usize, n2: usize, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                values.push(f([i as f64 * h, j as f64 * h]));
            }
        }
        ValueGrid::new(h, n1, n2, GridKind::Solution, values)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    pub fn try_get(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.n1 || j >= self.n2 {
            return Err(Error::OutOfRange {
                i,
                j,
                n1: self.n1,
                n2: self.n2,
            });
        }
        Ok(self.get(i, j))
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub fn extent(&self) -> [f64; 2] {
        [
            (self.n1 - 1) as f64 * self.h,
            (self.n2 - 1) as f64 * self.h,
        ]
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        let e = self.extent();
        let slack = 1e-12 * self.h;
        x[0] >= 0.0 && x[1] >= 0.0 && x[0] <= e[0] + slack && x[1] <= e[1] + slack
    }

    /// Bilinear interpolation. Points below the quadrant give 0; points past
    /// the far edge are clamped onto it.
    pub fn interpolate(&self, x: [f64; 2]) -> f64 {
        if x[0] < 0.0 || x[1] < 0.0 {
            return 0.0;
        }
        let (i0, t) = Self::locate(x[0] / self.h, self.n1);
        let (j0, s) = Self::locate(x[1] / self.h, self.n2);
        let i1 = (i0 + 1).min(self.n1 - 1);
        let j1 = (j0 + 1).min(self.n2 - 1);
        let u00 = self.get(i0, j0);
        let u10 = self.get(i1, j0);
        let u01 = self.get(i0, j1);
        let u11 = self.get(i1, j1);
        (1.0 - t) * ((1.0 - s) * u00 + s * u01) + t * ((1.0 - s) * u10 + s * u11)
    }

    fn locate(r: f64, n: usize) -> (usize, f64) {
        if n == 1 {
            return (0, 0.0);
        }
        let max = (n - 1) as f64;
        let r = r.min(max);
        let k = (r.floor() as usize).min(n - 2);
        (k, r - k as f64)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Nearest grid index to a coordinate, clamped to the grid.
    pub fn nearest_index(&self, x: [f64; 2]) -> (usize, usize) {
        let i = ((x[0] / self.h).round().max(0.0) as usize).min(self.n1 - 1);
        let j = ((x[1] / self.h).round().max(0.0) as usize).min(self.n2 - 1);
        (i, j)
    }
}
