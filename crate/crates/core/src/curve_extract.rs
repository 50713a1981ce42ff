//! Near-optimal maximizing curves from a solved value grid.
//!
//! Starting at `x0` the extractor walks back to the origin in steps of
//! length `eps`: at `x_k` it picks the direction `(1 - s, s)` maximizing
//!
//! ```text
//! U(x_k - (1 - s, s) eps) + 2 sigma(x_k) eps sqrt(s (1 - s))
//! ```
//!
//! over a uniform grid of `s` in `[0, 1]`, moves there (clamped to the
//! quadrant), and stops once it reaches an axis, appending the origin.
//! The value grid and the field do not have to match: for discontinuous
//! fields a caller may pass a Lipschitz approximation of the field together
//! with the grid solved for it, and certify the resulting curve against the
//! original field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ValueGrid;
use crate::weight_field::WeightField;

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_S_STEP: f64 = 0.01;

/// Quadrature cells per unit of segment length in [`curve_energy`].
pub const DEFAULT_QUADRATURE_DENSITY: f64 = 1000.0;

/// Coordinatewise non-decreasing polyline, origin first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCurve {
    pub points: Vec<[f64; 2]>,
    pub epsilon: f64,
    /// Maximizing `s` of each step, in extraction order (from `x0` backwards).
    pub s_star: Vec<f64>,
}

impl MonotoneCurve {
    /// Polyline through `points` (origin first) with no extraction metadata.
    pub fn from_points(points: Vec<[f64; 2]>) -> Self {
        MonotoneCurve {
            points,
            epsilon: 0.0,
            s_star: Vec::new(),
        }
    }

    pub fn endpoint(&self) -> Option<[f64; 2]> {
        self.points.last().copied()
    }

    pub fn check_monotone(&self) -> Result<()> {
        for (k, w) in self.points.windows(2).enumerate() {
            if w[1][0] < w[0][0] || w[1][1] < w[0][1] {
                return Err(Error::NotMonotone { index: k + 1 });
            }
        }
        Ok(())
    }
}

fn s_grid_len(s_step: f64) -> Result<usize> {
    if !(s_step > 0.0 && s_step <= 1.0) {
        return Err(Error::Domain(format!("s_step must lie in (0, 1], got {s_step}")));
    }
    let n = (1.0 / s_step).round();
    if (n * s_step - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("s_step {s_step} does not divide 1")));
    }
    Ok(n as usize)
}

/// Best `s` on the grid `k / n`, smallest `s` winning ties, and its objective value.
fn best_direction(vg: &ValueGrid, x: [f64; 2], sigma: f64, eps: f64, n: usize) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..=n {
        let s = k as f64 / n as f64;
        let y = [x[0] - (1.0 - s) * eps, x[1] - s * eps];
        let value = vg.interpolate(y) + 2.0 * sigma * eps * (s * (1.0 - s)).sqrt();
        if value > best.1 {
            best = (s, value);
        }
    }
    best
}

/// Maximized step objective at `x` (exposed for refinement checks).
pub fn step_objective(vg: &ValueGrid, field: &WeightField, x: [f64; 2], eps: f64, s_step: f64) -> Result<(f64, f64)> {
    let n = s_grid_len(s_step)?;
    Ok(best_direction(vg, x, field.sigma(x), eps, n))
}

pub fn extract_curve(vg: &ValueGrid, field: &WeightField, x0: [f64; 2], eps: f64, s_step: f64) -> Result<MonotoneCurve> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let n = s_grid_len(s_step)?;
    if !vg.contains(x0) {
        return Err(Error::Domain(format!("start point {x0:?} is outside the grid")));
    }

    // Every step moves at least eps/2 along one axis.
    let max_steps = (2.0 * (x0[0] + x0[1]) / eps).ceil() as usize + 2;
    let mut points = vec![x0];
    let mut s_star = Vec::new();
    let mut x = x0;
    while x[0] > 0.0 && x[1] > 0.0 {
        if s_star.len() > max_steps {
            return Err(Error::Domain("curve extraction did not terminate".into()));
        }
        let (s, _) = best_direction(vg, x, field.sigma(x), eps, n);
        x = [
            (x[0] - (1.0 - s) * eps).max(0.0),
            (x[1] - s * eps).max(0.0),
        ];
        s_star.push(s);
        points.push(x);
    }
    points.push([0.0, 0.0]);
    points.reverse();
    Ok(MonotoneCurve {
        points,
        epsilon: eps,
        s_star,
    })
}

/// Energy `J = int l(gamma, gamma') dt` with `l(x, p) = mu(x)(p1 + p2) + 2 sigma(x) sqrt(p1 p2)`.
pub fn curve_energy(curve: &MonotoneCurve, field: &WeightField) -> Result<f64> {
    curve_energy_with(curve, field, DEFAULT_QUADRATURE_DENSITY)
}

/// [`curve_energy`] with `ceil(density * |segment|_1)` midpoint cells per segment.
pub fn curve_energy_with(curve: &MonotoneCurve, field: &WeightField, density: f64) -> Result<f64> {
    curve.check_monotone()?;
    let mut total = 0.0;
    for w in curve.points.windows(2) {
        let (p, q) = (w[0], w[1]);
        let d = [q[0] - p[0], q[1] - p[1]];
        let len = d[0] + d[1];
        if len == 0.0 {
            continue;
        }
        let cells = (density * len).ceil().max(1.0) as usize;
        let dt = 1.0 / cells as f64;
        let cross = (d[0] * d[1]).sqrt();
        let mut seg = 0.0;
        for k in 0..cells {
            let t = (k as f64 + 0.5) * dt;
            let x = [p[0] + t * d[0], p[1] + t * d[1]];
            seg += field.continuum_mean(x) * len + 2.0 * field.sigma(x) * cross;
        }
        total += seg * dt;
    }
    Ok(total)
}

/// Acceptance threshold `per_eps * eps + per_sqrt_h * sqrt(h)` on the energy gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTolerance {
    pub per_eps: f64,
    pub per_sqrt_h: f64,
}

impl Default for GapTolerance {
    fn default() -> Self {
        // Calibrated on constant and Lipschitz presets at eps in [0.005, 0.05], h in [1/1000, 1/125].
        GapTolerance {
            per_eps: 5.0,
            per_sqrt_h: 1.0,
        }
    }
}

impl GapTolerance {
    pub fn eval(&self, eps: f64, h: f64) -> f64 {
        self.per_eps * eps + self.per_sqrt_h * h.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub reference: f64,
    pub gap: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare the curve's energy with the grid value at its endpoint.
pub fn certify(vg: &ValueGrid, field: &WeightField, curve: &MonotoneCurve, tol: GapTolerance) -> Result<EnergyReport> {
    let x0 = curve
        .endpoint()
        .ok_or_else(|| Error::Domain("empty curve".into()))?;
    let energy = curve_energy(curve, field)?;
    let reference = vg.interpolate(x0);
    let gap = reference - energy;
    let tolerance = tol.eval(curve.epsilon, vg.h);
    Ok(EnergyReport {
        energy,
        reference,
        gap,
        epsilon: curve.epsilon,
        tolerance,
        pass: gap <= tolerance,
    })
}
