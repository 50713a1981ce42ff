//! TASEP observables derived from last passage data.
//!
//! The grown cluster `A(t) = {(m, n) : L(m, n) <= t}` is a Young diagram.
//! Rotating its boundary by 45 degrees gives a height profile over the
//! anti-diagonals `j = m - n`. Heights are anchored at the empty-diagram
//! wedge `h_j = |j|`, and every covered cell raises its diagonal by 2. In
//! one-based lattice coordinates `(m', n') = (m + 1, n + 1)` this gives the
//! exact identity
//!
//! ```text
//! L(m, n) <= t  <=>  h_{m'-n'}(t) >= m' + n'.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::ValueGrid;
use crate::lattice_sim::{run_trials, PassageField, TrialSummary};
use crate::weight_field::{Preset, WeightField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub t: f64,
    /// Diagonal index of `heights[0]`.
    pub j_min: i64,
    pub heights: Vec<i64>,
}

impl HeightProfile {
    pub fn j_max(&self) -> i64 {
        self.j_min + self.heights.len() as i64 - 1
    }

    /// Height at diagonal `j`; outside the stored range the wedge `|j|` continues.
    pub fn get(&self, j: i64) -> i64 {
        if j < self.j_min || j > self.j_max() {
            j.abs()
        } else {
            self.heights[(j - self.j_min) as usize]
        }
    }

    pub fn has_unit_steps(&self) -> bool {
        self.heights.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
    }

    /// Whether zero-based cell `(m, n)` is in the grown cluster.
    pub fn covers(&self, m: usize, n: usize) -> bool {
        self.get(m as i64 - n as i64) >= (m + n + 2) as i64
    }

    /// Membership of every cell of an `n1 x n2` lattice, `n` fastest.
    pub fn sublevel_set(&self, n1: usize, n2: usize) -> Vec<bool> {
        let mut out = Vec::with_capacity(n1 * n2);
        for m in 0..n1 {
            for n in 0..n2 {
                out.push(self.covers(m, n));
            }
        }
        out
    }
}

/// Height profile of `{L <= t}` over diagonals `-n2 ..= n1`.
pub fn height_function(pf: &PassageField, t: f64) -> HeightProfile {
    let (n1, n2) = (pf.n1 as i64, pf.n2 as i64);
    let j_min = -n2;
    let heights = (j_min..=n1)
        .map(|j| {
            let (mut m, mut n) = if j >= 0 { (j, 0) } else { (0, -j) };
            let mut covered = 0;
            // L is non-decreasing along a diagonal, so covered cells form a prefix.
            while m < n1 && n < n2 && pf.get(m as usize, n as usize) <= t {
                covered += 1;
                m += 1;
                n += 1;
            }
            j.abs() + 2 * covered
        })
        .collect();
    HeightProfile { t, j_min, heights }
}

/// Direct sub-level set `{L <= t}`, `n` fastest.
pub fn direct_sublevel_set(pf: &PassageField, t: f64) -> Vec<bool> {
    pf.values.iter().map(|&v| v <= t).collect()
}

/// Macroscopic density `rho = U_x1 / (U_x1 + U_x2)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    /// NaN where `U_x1 + U_x2 <= 0`.
    pub rho: Vec<f64>,
    /// TASEP chart coordinates `(s, t) = (x1 - x2, U(x))` of every grid point.
    pub chart: Vec<[f64; 2]>,
}

impl DensitySample {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.rho[i * self.n2 + j];
        (!r.is_nan()).then_some(r)
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.rho.iter().copied().filter(|r| !r.is_nan())
    }
}

fn difference(vg: &ValueGrid, i: usize, j: usize, axis: usize) -> f64 {
    let (n, k) = if axis == 0 { (vg.n1, i) } else { (vg.n2, j) };
    let at = |k: usize| if axis == 0 { vg.get(k, j) } else { vg.get(i, k) };
    if n < 2 {
        return 0.0;
    }
    if k == 0 {
        (at(1) - at(0)) / vg.h
    } else if k == n - 1 {
        (at(k) - at(k - 1)) / vg.h
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * vg.h)
    }
}

/// Density from central differences in the interior, one-sided on the edges.
pub fn density_from_value(vg: &ValueGrid) -> DensitySample {
    let mut rho = Vec::with_capacity(vg.values.len());
    let mut chart = Vec::with_capacity(vg.values.len());
    for i in 0..vg.n1 {
        for j in 0..vg.n2 {
            let d1 = difference(vg, i, j, 0);
            let d2 = difference(vg, i, j, 1);
            let total = d1 + d2;
            rho.push(if total > 0.0 { d1 / total } else { f64::NAN });
            let x = vg.point(i, j);
            chart.push([x[0] - x[1], vg.get(i, j)]);
        }
    }
    DensitySample {
        h: vg.h,
        n1: vg.n1,
        n2: vg.n2,
        rho,
        chart,
    }
}

pub const SLOW_BOND_CAVEAT: &str = "the Hamilton-Jacobi continuum limit is not expected to hold for \
sources along diagonal lines; naive_pde = 4/r is reported for reference only and is not a valid \
prediction of kappa(r)";

/// Known bounds `max{4, (r^2 + 2(1 + r)) / (2 r (1 + r))} <= kappa(r) <= 3 + 1/r`.
pub fn kappa_bounds(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("slow bond rate must lie in (0, 1], got {r}")));
    }
    let lower = (r * r + 2.0 * (1.0 + r)) / (2.0 * r * (1.0 + r));
    Ok((lower.max(4.0), 3.0 + 1.0 / r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowBondReport {
    pub r: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub kappa_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub naive_pde: f64,
    pub naive_pde_valid: bool,
    pub caveat: String,
    pub per_trial: Vec<TrialSummary>,
}

/// Estimate `kappa(r) = lim L(N, N) / N` for the slow-bond field by averaging trials.
pub fn slow_bond_estimate(r: f64, n: usize, trials: usize, seed: u64, exec: Exec) -> Result<SlowBondReport> {
    let (lower, upper) = kappa_bounds(r)?;
    if n == 0 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    let field: WeightField = Preset::SlowBond { r }.build()?;
    let per_trial = run_trials(&field, n + 1, n + 1, n, trials, seed, exec)?;
    let kappa_hat = per_trial.iter().map(|t| t.corner_scaled).sum::<f64>() / trials as f64;
    Ok(SlowBondReport {
        r,
        n,
        trials,
        kappa_hat,
        lower,
        upper,
        naive_pde: 4.0 / r,
        naive_pde_valid: false,
        caveat: SLOW_BOND_CAVEAT.to_string(),
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjb_solver::{closed_form_iid, solve};
    use crate::lattice_sim::{last_passage, sample_lattice, LatticeSample};
    use crate::weight_field::{DistributionFamily::*, WeightField};

    fn two_by_two() -> PassageField {
        // L(0,0)=1, L(1,0)=3, L(0,1)=4, L(1,1)=8
        last_passage(&LatticeSample::from_weights(2, 2, 1, vec![1.0, 3.0, 2.0, 4.0]).unwrap())
    }

    #[test]
    fn wedge_at_time_zero() {
        let f = WeightField::constant(Exponential, 1.0);
        let pf = last_passage(&sample_lattice(&f, 5, 4, 4, 1).unwrap());
        let hp = height_function(&pf, 0.0);
        for j in -6..=7 {
            assert_eq!(hp.get(j), j.abs());
        }
        assert!(hp.has_unit_steps());
    }

    #[test]
    fn two_by_two_profile() {
        let pf = two_by_two();
        let hp = height_function(&pf, 3.5);
        // covered: (0,0) on diagonal 0 and (1,0) on diagonal 1
        assert_eq!(hp.get(0), 2);
        assert_eq!(hp.get(1), 3);
        assert_eq!(hp.get(-1), 1);
        assert_eq!(hp.get(2), 2);
        assert_eq!(hp.get(-2), 2);
        assert!(hp.has_unit_steps());
        assert_eq!(hp.sublevel_set(2, 2), direct_sublevel_set(&pf, 3.5));

        let full = height_function(&pf, 100.0);
        assert_eq!((full.get(-1), full.get(0), full.get(1)), (3, 4, 3));
        assert!(full.has_unit_steps());
    }

    #[test]
    fn heights_grow_in_time() {
        let f = crate::weight_field::preset("lambda3").unwrap();
        let pf = last_passage(&sample_lattice(&f, 12, 9, 10, 3).unwrap());
        let times = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
        for w in times.windows(2) {
            let (a, b) = (height_function(&pf, w[0]), height_function(&pf, w[1]));
            for j in -10..=13 {
                assert!(a.get(j) <= b.get(j));
            }
        }
    }

    #[test]
    fn density_of_linear_function_is_half() {
        let g = ValueGrid::from_fn(0.1, 11, 11, |x| 2.0 * x[0] + 2.0 * x[1]);
        let d = density_from_value(&g);
        for r in d.defined() {
            assert!((r - 0.5).abs() < 1e-12);
        }
        assert_eq!(d.defined().count(), 121);
    }

    #[test]
    fn density_undefined_on_flat_grid() {
        let g = ValueGrid::from_fn(0.1, 4, 4, |_| 1.0);
        assert!(density_from_value(&g).defined().next().is_none());
    }

    #[test]
    fn density_constant_field_examples() {
        let g = solve(&WeightField::constant(Exponential, 1.0), 1.0 / 400.0, [1.5, 1.5]).unwrap();
        let d = density_from_value(&g);
        // off-diagonal point (0.25, 1.0): rho = 3 / (3 + 1.5)
        let r = d.get(100, 400).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 0.01, "{r}");
        let r = d.get(200, 200).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        // chart coordinates
        let c = d.chart[100 * g.n2 + 400];
        assert!((c[0] + 0.75).abs() < 1e-12);
        assert!((c[1] - closed_form_iid(1.0, 1.0, [0.25, 1.0])).abs() < 0.05);
    }

    #[test]
    fn kappa_bound_examples() {
        assert_eq!(kappa_bounds(0.5).unwrap(), (4.0, 5.0));
        assert_eq!(kappa_bounds(1.0).unwrap(), (4.0, 4.0));
        let (lo, hi) = kappa_bounds(0.1).unwrap();
        assert!((lo - (0.01 + 2.2) / 0.22).abs() < 1e-12);
        assert!((hi - 13.0).abs() < 1e-12);
        assert!(kappa_bounds(0.0).is_err());
        assert!(kappa_bounds(-1.0).is_err());
        assert!(slow_bond_estimate(0.0, 100, 1, 0, Exec::Sequential).is_err());
    }
}
