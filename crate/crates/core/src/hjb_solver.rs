//! Monotone single-sweep solver for `(U_x1 - mu)_+ (U_x2 - mu)_+ = sigma^2`.
//!
//! With backward differences the discrete equation at `(i, j)` is
//!
//! ```text
//! (U - U_left - h mu)_+ (U - U_down - h mu)_+ = h^2 sigma^2
//! ```
//!
//! and its largest root is
//!
//! ```text
//! U = (U_left + U_down)/2 + h mu + sqrt((U_left - U_down)^2 + 4 h^2 sigma^2)/2.
//! ```
//!
//! Values outside the quadrant are zero, which imposes the boundary trace
//! implicitly. Any visiting order in which `(i-1, j)` and `(i, j-1)` come
//! before `(i, j)` gives the same grid, so the solver offers a row-major
//! sweep and an anti-diagonal wavefront.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::grid::{GridKind, ValueGrid};
use crate::weight_field::WeightField;

const WAVEFRONT_MIN_PAR: usize = 2048;

/// Visiting order of the sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SweepOrder {
    #[default]
    RowMajor,
    Wavefront(Exec),
}

/// One update of the scheme given the two upwind neighbours and `h mu`, `h sigma`.
#[inline(always)]
pub fn scheme_update(left: f64, down: f64, h_mu: f64, h_sigma: f64) -> f64 {
    let d = left - down;
    0.5 * (left + down) + h_mu + 0.5 * (d * d + 4.0 * h_sigma * h_sigma).sqrt()
}

/// `U(x) = mu (x1 + x2) + 2 sigma sqrt(x1 x2)`: the exact solution for constant coefficients.
pub fn closed_form_iid(mu: f64, sigma: f64, x: [f64; 2]) -> f64 {
    mu * (x[0] + x[1]) + 2.0 * sigma * (x[0] * x[1]).sqrt()
}

fn grid_dims(h: f64, extent: [f64; 2]) -> Result<(usize, usize)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
    }
    if extent.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::Domain(format!("extent must be finite and >= 0, got {extent:?}")));
    }
    let n1 = (extent[0] / h).round() as usize + 1;
    let n2 = (extent[1] / h).round() as usize + 1;
    Ok((n1, n2))
}

/// Precomputed `(h mu, h sigma)` for every grid point at or above `base`.
fn coefficients(
    field: &WeightField,
    h: f64,
    n1: usize,
    n2: usize,
    base: (usize, usize),
    include_boundary: bool,
) -> Result<Vec<(f64, f64)>> {
    let mut coef = vec![(0.0, 0.0); n1 * n2];
    exec::try_for_each_chunk_mut(&mut coef, n2, Exec::default(), |i, row| {
        if i < base.0 {
            return Ok(());
        }
        for (j, c) in row.iter_mut().enumerate().skip(base.1) {
            let s = field.grid_coefficients(i, j, h, include_boundary);
            if !(s.mu.is_finite() && s.sigma.is_finite()) || s.mu < 0.0 {
                return Err(Error::NonFiniteGridPoint {
                    i,
                    j,
                    mu: s.mu,
                    sigma: s.sigma,
                });
            }
            *c = (h * s.mu, h * s.sigma);
        }
        Ok(())
    })?;
    Ok(coef)
}

fn sweep(coef: &[(f64, f64)], n1: usize, n2: usize, base: (usize, usize), order: SweepOrder) -> Vec<f64> {
    let mut u = vec![0.0; n1 * n2];
    let (b1, b2) = base;
    let neighbours = |u: &[f64], i: usize, j: usize| {
        let left = if i > b1 { u[(i - 1) * n2 + j] } else { 0.0 };
        let down = if j > b2 { u[i * n2 + j - 1] } else { 0.0 };
        (left, down)
    };
    match order {
        SweepOrder::RowMajor => {
            for i in b1..n1 {
                for j in b2..n2 {
                    let (left, down) = neighbours(&u, i, j);
                    let (hm, hs) = coef[i * n2 + j];
                    u[i * n2 + j] = scheme_update(left, down, hm, hs);
                }
            }
        }
        SweepOrder::Wavefront(exec) => {
            let (m1, m2) = (n1 - b1, n2 - b2);
            for d in 0..(m1 + m2 - 1) {
                let lo = d.saturating_sub(m2 - 1);
                let hi = d.min(m1 - 1);
                let len = hi - lo + 1;
                let mode = if len >= WAVEFRONT_MIN_PAR { exec } else { Exec::Sequential };
                let cur = &u;
                let diag = exec::map_range(len, mode, |k| {
                    let i = b1 + lo + k;
                    let j = b2 + d - (lo + k);
                    let (left, down) = neighbours(cur, i, j);
                    let (hm, hs) = coef[i * n2 + j];
                    scheme_update(left, down, hm, hs)
                });
                for (k, v) in diag.into_iter().enumerate() {
                    let i = b1 + lo + k;
                    let j = b2 + d - (lo + k);
                    u[i * n2 + j] = v;
                }
            }
        }
    }
    u
}

/// Solve on `[0, extent]` with spacing `h`, row-major sweep.
pub fn solve(field: &WeightField, h: f64, extent: [f64; 2]) -> Result<ValueGrid> {
    solve_with(field, h, extent, SweepOrder::RowMajor)
}

pub fn solve_with(field: &WeightField, h: f64, extent: [f64; 2], order: SweepOrder) -> Result<ValueGrid> {
    let (n1, n2) = grid_dims(h, extent)?;
    let coef = coefficients(field, h, n1, n2, (0, 0), true)?;
    let values = sweep(&coef, n1, n2, (0, 0), order);
    let mut g = ValueGrid::new(h, n1, n2, GridKind::Solution, values);
    g.description = field.description.clone();
    g.caveats = field.caveats();
    Ok(g)
}

/// Relative value function `W(z, .)` from grid point `z`: the same sweep on
/// `[z, extent]` with zero extension below `z` and without the axis source.
pub fn solve_relative(field: &WeightField, h: f64, extent: [f64; 2], z: (usize, usize)) -> Result<ValueGrid> {
    solve_relative_with(field, h, extent, z, SweepOrder::RowMajor)
}

pub fn solve_relative_with(
    field: &WeightField,
    h: f64,
    extent: [f64; 2],
    z: (usize, usize),
    order: SweepOrder,
) -> Result<ValueGrid> {
    let (n1, n2) = grid_dims(h, extent)?;
    if z.0 >= n1 || z.1 >= n2 {
        return Err(Error::OutOfRange {
            i: z.0,
            j: z.1,
            n1,
            n2,
        });
    }
    let coef = coefficients(field, h, n1, n2, z, false)?;
    let values = sweep(&coef, n1, n2, z, order);
    let mut g = ValueGrid::new(h, n1, n2, GridKind::Relative, values);
    g.base = z;
    g.description = field.description.clone();
    g.caveats = field.caveats();
    Ok(g)
}

/// Largest deviation of the grid along its base axes from the discrete
/// trace `h * sum_k mu_k`, over the axis points other than the base corner.
pub fn boundary_residual(vg: &ValueGrid, field: &WeightField) -> f64 {
    let include_boundary = vg.kind != GridKind::Relative;
    let (b1, b2) = vg.base;
    let h = vg.h;
    let mu = |i, j| field.grid_coefficients(i, j, h, include_boundary).mu;

    let mut worst: f64 = 0.0;
    let mut acc = h * mu(b1, b2);
    for i in (b1 + 1)..vg.n1 {
        acc += h * mu(i, b2);
        worst = worst.max((vg.get(i, b2) - acc).abs());
    }
    let mut acc = h * mu(b1, b2);
    for j in (b2 + 1)..vg.n2 {
        acc += h * mu(b1, j);
        worst = worst.max((vg.get(b1, j) - acc).abs());
    }
    worst
}

/// Boundary trace `phi(x) = (x1 + x2) * int_0^1 mu(t x) + mu_s(t x) dt` for
/// `x` on an axis, by composite midpoint rule with `ceil(|x| / h)` cells.
pub fn boundary_trace(field: &WeightField, x: [f64; 2], h: f64) -> f64 {
    let len = x[0] + x[1];
    if len == 0.0 {
        return 0.0;
    }
    let cells = (len / h).ceil().max(1.0) as usize;
    let dt = 1.0 / cells as f64;
    let sum: f64 = (0..cells)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            field.continuum_mean([t * x[0], t * x[1]])
        })
        .sum();
    len * sum * dt
}

/// `V(x) = mu_sup (x1 + x2) + 2 sigma_sup sqrt(x1 x2) + 1`, an upper bound for the scheme.
pub fn stability_barrier(mu_sup: f64, sigma_sup: f64, x: [f64; 2]) -> f64 {
    closed_form_iid(mu_sup, sigma_sup, x) + 1.0
}

/// Residual of the discrete equation at `(i, j)` and the round-off scale it
/// should be measured against. Requires `i, j >= 1`.
pub fn discrete_residual(vg: &ValueGrid, field: &WeightField, i: usize, j: usize) -> (f64, f64) {
    let h = vg.h;
    let c = field.grid_coefficients(i, j, h, vg.kind != GridKind::Relative);
    let u = vg.get(i, j);
    let p = (u - vg.get(i - 1, j) - h * c.mu).max(0.0);
    let q = (u - vg.get(i, j - 1) - h * c.mu).max(0.0);
    let rhs = (h * c.sigma) * (h * c.sigma);
    let unit = f64::EPSILON * (u * (p + q) + rhs);
    (p * q - rhs, unit)
}
