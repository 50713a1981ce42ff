//! Lattice sampling and last passage times.
//!
//! Weights are built from a single family of i.i.d. standard exponentials
//! `Y(i, j)` (see [`crate::rng`]): `X = m Y` in the exponential family and
//! `X = floor(nu(m) Y)` in the geometric family, where `m` is the effective
//! mean at the site. Two fields sampled with the same seed are therefore
//! coupled: pointwise larger means give pointwise larger weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::grid::{GridKind, ValueGrid};
use crate::rng;
use crate::weight_field::{nu_unchecked, DistributionFamily, WeightField};

/// Anti-diagonals shorter than this are processed inline even in parallel mode.
const WAVEFRONT_MIN_PAR: usize = 4096;

/// One realization of the weights on `n1 x n2` lattice points
/// (`i < n1`, `j < n2`), stored with `j` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSample {
    pub n1: usize,
    pub n2: usize,
    pub scale_n: usize,
    pub family: DistributionFamily,
    pub seed: u64,
    pub weights: Vec<f64>,
    pub field_description: String,
}

impl LatticeSample {
    /// Build a sample from explicit weights (tests, imported data).
    pub fn from_weights(n1: usize, n2: usize, scale_n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n1 * n2 || n1 == 0 || n2 == 0 {
            return Err(Error::Domain(format!(
                "expected {n1}x{n2} weights, got {}",
                weights.len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::NonFiniteSite {
                i: k / n2,
                j: k % n2,
                value: weights[k],
            });
        }
        Ok(LatticeSample {
            n1,
            n2,
            scale_n,
            family: DistributionFamily::Exponential,
            seed: 0,
            weights,
            field_description: "explicit".into(),
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n2 + j]
    }
}

#[inline]
fn site_weight(field: &WeightField, i: usize, j: usize, scale_n: usize, seed: u64) -> Result<f64> {
    let m = field.effective_mean(i, j, scale_n);
    if !m.is_finite() || m < 0.0 {
        return Err(Error::NonFiniteSite { i, j, value: m });
    }
    let y = rng::site_exponential(seed, i as u64, j as u64);
    Ok(match field.family {
        DistributionFamily::Exponential => m * y,
        DistributionFamily::Geometric => (nu_unchecked(m) * y).floor(),
    })
}

fn check_dims(n1: usize, n2: usize, scale_n: usize) -> Result<()> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Domain(format!("lattice dims must be positive, got {n1}x{n2}")));
    }
    if scale_n == 0 {
        return Err(Error::Domain("scale parameter N must be >= 1".into()));
    }
    Ok(())
}

/// Sample the weights for `field` on an `n1 x n2` lattice with scale `scale_n`.
pub fn sample_lattice(field: &WeightField, n1: usize, n2: usize, scale_n: usize, seed: u64) -> Result<LatticeSample> {
    sample_lattice_with(field, n1, n2, scale_n, seed, Exec::default())
}

pub fn sample_lattice_with(
    field: &WeightField,
    n1: usize,
    n2: usize,
    scale_n: usize,
    seed: u64,
    exec: Exec,
) -> Result<LatticeSample> {
    check_dims(n1, n2, scale_n)?;
    let mut weights = vec![0.0; n1 * n2];
    exec::try_for_each_chunk_mut(&mut weights, n2, exec, |i, row| {
        for (j, w) in row.iter_mut().enumerate() {
            *w = site_weight(field, i, j, scale_n, seed)?;
        }
        Ok(())
    })?;
    Ok(LatticeSample {
        n1,
        n2,
        scale_n,
        family: field.family,
        seed,
        weights,
        field_description: field.description.clone(),
    })
}

/// Last passage times `L(i, j)` from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageField {
    pub n1: usize,
    pub n2: usize,
    pub scale_n: usize,
    pub seed: u64,
    pub field_description: String,
    pub values: Vec<f64>,
}

/// Up/right lattice path, origin first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    pub points: Vec<(usize, usize)>,
}

impl LatticePath {
    pub fn weight(&self, sample: &LatticeSample) -> f64 {
        let mut it = self.points.iter();
        let Some(&(i0, j0)) = it.next() else { return 0.0 };
        let mut s = sample.get(i0, j0);
        for &(i, j) in it {
            s += sample.get(i, j);
        }
        s
    }

    pub fn is_up_right(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| (w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1) || (w[1].0 == w[0].0 && w[1].1 == w[0].1 + 1))
    }
}

/// `L(i, j) = X(i, j) + max(L(i-1, j), L(i, j-1))`, missing neighbours count as 0.
#[inline(always)]
fn dp_update(x: f64, left: f64, down: f64) -> f64 {
    x + left.max(down)
}

/// Row-by-row dynamic program; one pass, `O(n1 n2)`.
pub fn last_passage(sample: &LatticeSample) -> PassageField {
    let (n1, n2) = (sample.n1, sample.n2);
    let mut values = vec![0.0; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            let left = if i > 0 { values[(i - 1) * n2 + j] } else { 0.0 };
            let down = if j > 0 { values[i * n2 + j - 1] } else { 0.0 };
            values[i * n2 + j] = dp_update(sample.get(i, j), left, down);
        }
    }
    passage_from(sample, values)
}

/// Anti-diagonal wavefront variant of [`last_passage`]; bit-identical output.
pub fn last_passage_wavefront(sample: &LatticeSample, exec: Exec) -> PassageField {
    let (n1, n2) = (sample.n1, sample.n2);
    let mut values = vec![0.0; n1 * n2];
    for d in 0..(n1 + n2 - 1) {
        let lo = d.saturating_sub(n2 - 1);
        let hi = d.min(n1 - 1);
        let len = hi - lo + 1;
        let mode = if len >= WAVEFRONT_MIN_PAR { exec } else { Exec::Sequential };
        let vals = &values;
        let diag = exec::map_range(len, mode, |k| {
            let i = lo + k;
            let j = d - i;
            let left = if i > 0 { vals[(i - 1) * n2 + j] } else { 0.0 };
            let down = if j > 0 { vals[i * n2 + j - 1] } else { 0.0 };
            dp_update(sample.get(i, j), left, down)
        });
        for (k, v) in diag.into_iter().enumerate() {
            let i = lo + k;
            values[i * n2 + (d - i)] = v;
        }
    }
    passage_from(sample, values)
}

fn passage_from(sample: &LatticeSample, values: Vec<f64>) -> PassageField {
    PassageField {
        n1: sample.n1,
        n2: sample.n2,
        scale_n: sample.scale_n,
        seed: sample.seed,
        field_description: sample.field_description.clone(),
        values,
    }
}

impl PassageField {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n2 + j]
    }

    pub fn corner(&self) -> f64 {
        self.get(self.n1 - 1, self.n2 - 1)
    }

    /// Backtrack a maximizing path to `endpoint`. At each step the
    /// predecessor with the larger passage time is taken; ties go to
    /// `(i - 1, j)`.
    pub fn optimal_path(&self, endpoint: (usize, usize)) -> Result<LatticePath> {
        let (mut i, mut j) = endpoint;
        if i >= self.n1 || j >= self.n2 {
            return Err(Error::OutOfRange {
                i,
                j,
                n1: self.n1,
                n2: self.n2,
            });
        }
        let mut points = Vec::with_capacity(i + j + 1);
        points.push((i, j));
        while i > 0 || j > 0 {
            if j == 0 || (i > 0 && self.get(i - 1, j) >= self.get(i, j - 1)) {
                i -= 1;
            } else {
                j -= 1;
            }
            points.push((i, j));
        }
        points.reverse();
        Ok(LatticePath { points })
    }

    /// `L / N` on the grid of spacing `1 / N`.
    pub fn scaled_field(&self) -> ValueGrid {
        let n = self.scale_n as f64;
        let values = self.values.iter().map(|v| v / n).collect();
        let mut g = ValueGrid::new(1.0 / n, self.n1, self.n2, GridKind::ScaledPassage, values);
        g.description = self.field_description.clone();
        g
    }
}

/// `L(n1 - 1, n2 - 1)` computed with a single row of storage, sampling
/// weights on the fly. Bit-identical to the full dynamic program.
pub fn corner_passage_time(field: &WeightField, n1: usize, n2: usize, scale_n: usize, seed: u64) -> Result<f64> {
    check_dims(n1, n2, scale_n)?;
    let mut row = vec![0.0; n2];
    for i in 0..n1 {
        let mut down = 0.0;
        for (j, cell) in row.iter_mut().enumerate() {
            let x = site_weight(field, i, j, scale_n, seed)?;
            down = dp_update(x, *cell, down);
            *cell = down;
        }
    }
    Ok(row[n2 - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    /// `L(n1 - 1, n2 - 1)`
    pub corner: f64,
    /// `corner / N`
    pub corner_scaled: f64,
}

/// Run independent trials in low-memory mode. Trial `k` uses
/// [`rng::derive_seed`]`(base_seed, k)`, so results do not depend on the
/// number of worker threads.
pub fn run_trials(
    field: &WeightField,
    n1: usize,
    n2: usize,
    scale_n: usize,
    n_trials: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<Vec<TrialSummary>> {
    if n_trials == 0 {
        return Err(Error::Domain("n_trials must be >= 1".into()));
    }
    check_dims(n1, n2, scale_n)?;
    exec::map_range(n_trials, exec, |k| {
        let seed = rng::derive_seed(base_seed, k as u64);
        corner_passage_time(field, n1, n2, scale_n, seed).map(|corner| TrialSummary {
            trial: k,
            seed,
            corner,
            corner_scaled: corner / scale_n as f64,
        })
    })
    .into_iter()
    .collect()
}

/// Run trials keeping the full passage field, handing each to `f`.
#[allow(clippy::too_many_arguments)]
pub fn map_trials<T, F>(
    field: &WeightField,
    n1: usize,
    n2: usize,
    scale_n: usize,
    n_trials: usize,
    base_seed: u64,
    exec: Exec,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &LatticeSample, PassageField) -> T + Sync + Send,
{
    if n_trials == 0 {
        return Err(Error::Domain("n_trials must be >= 1".into()));
    }
    check_dims(n1, n2, scale_n)?;
    exec::map_range(n_trials, exec, |k| {
        let seed = rng::derive_seed(base_seed, k as u64);
        let sample = sample_lattice_with(field, n1, n2, scale_n, seed, Exec::Sequential)?;
        let pf = last_passage(&sample);
        Ok(f(k, &sample, pf))
    })
    .into_iter()
    .collect()
}
