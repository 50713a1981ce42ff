//! Level sets, error metrics and comparison pipelines between simulated
//! passage times and numerical solutions.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::ValueGrid;
use crate::hjb_solver::{boundary_residual, closed_form_iid, solve};
use crate::lattice_sim::map_trials;
use crate::weight_field::WeightField;

pub type Polyline = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

impl LevelSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polylines.iter().flatten().copied()
    }
}

/// Grid edge identifier: `(axis, i, j)` where axis 0 joins `(i, j)-(i+1, j)`
/// and axis 1 joins `(i, j)-(i, j+1)`.
type EdgeKey = (u8, usize, usize);

struct Contourer<'a> {
    vg: &'a ValueGrid,
    level: f64,
}

impl Contourer<'_> {
    fn high(&self, i: usize, j: usize) -> bool {
        self.vg.get(i, j) >= self.level
    }

    fn vertex(&self, e: EdgeKey) -> [f64; 2] {
        let (axis, i, j) = e;
        let (i2, j2) = if axis == 0 { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (self.vg.get(i, j), self.vg.get(i2, j2));
        let frac = if b == a { 0.0 } else { ((self.level - a) / (b - a)).clamp(0.0, 1.0) };
        let p = self.vg.point(i, j);
        let q = self.vg.point(i2, j2);
        [p[0] + frac * (q[0] - p[0]), p[1] + frac * (q[1] - p[1])]
    }

    /// Segments of cell `(i, j)` as pairs of edges.
    fn cell_segments(&self, i: usize, j: usize, out: &mut Vec<(EdgeKey, EdgeKey)>) {
        let c = [
            self.high(i, j),
            self.high(i + 1, j),
            self.high(i + 1, j + 1),
            self.high(i, j + 1),
        ];
        let bottom = (0, i, j);
        let right = (1, i + 1, j);
        let top = (0, i, j + 1);
        let left = (1, i, j);
        let crossing = [c[0] != c[1], c[1] != c[2], c[3] != c[2], c[0] != c[3]];
        let edges = [bottom, right, top, left];
        let crossed: Vec<EdgeKey> = (0..4).filter(|&k| crossing[k]).map(|k| edges[k]).collect();
        match crossed.len() {
            2 => out.push((crossed[0], crossed[1])),
            4 => {
                let centre = 0.25
                    * (self.vg.get(i, j) + self.vg.get(i + 1, j) + self.vg.get(i + 1, j + 1) + self.vg.get(i, j + 1));
                let centre_high = centre >= self.level;
                // c[0] == c[2] here; corners 0 and 2 are either both high or both low.
                if centre_high == c[0] {
                    // corners 1 and 3 are cut off
                    out.push((bottom, right));
                    out.push((top, left));
                } else {
                    out.push((left, bottom));
                    out.push((right, top));
                }
            }
            _ => {}
        }
    }
}

/// Marching-squares contour at level `t`, linear interpolation along edges.
///
/// Polylines are emitted in a deterministic order: open chains first (by the
/// row-major position of their first cell), then closed loops.
pub fn level_set(vg: &ValueGrid, t: f64) -> LevelSet {
    let empty = LevelSet {
        level: t,
        polylines: Vec::new(),
    };
    if vg.n1 < 2 || vg.n2 < 2 || !t.is_finite() || t < vg.min_value() || t > vg.max_value() {
        return empty;
    }
    let ctr = Contourer { vg, level: t };
    let mut segments = Vec::new();
    for i in 0..vg.n1 - 1 {
        for j in 0..vg.n2 - 1 {
            ctr.cell_segments(i, j, &mut segments);
        }
    }
    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(k);
        incident.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_seg: usize, start_edge: EdgeKey, used: &mut Vec<bool>| -> Polyline {
        let mut line = vec![ctr.vertex(start_edge)];
        let mut seg = start_seg;
        let mut from = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let to = if a == from { b } else { a };
            let p = ctr.vertex(to);
            if line.last() != Some(&p) {
                line.push(p);
            }
            match incident[&to].iter().find(|&&s| !used[s]) {
                Some(&next) => {
                    seg = next;
                    from = to;
                }
                None => break,
            }
        }
        line
    };

    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        let start = if incident[&a].len() == 1 {
            Some(a)
        } else if incident[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(e) = start {
            polylines.push(walk(k, e, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let a = segments[k].0;
            polylines.push(walk(k, a, &mut used));
        }
    }
    LevelSet { level: t, polylines }
}

/// Levels at the deciles of the grid's value range.
pub fn decile_levels(vg: &ValueGrid) -> Vec<f64> {
    let (lo, hi) = (vg.min_value(), vg.max_value());
    (1..10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect()
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

type Segment = ([f64; 2], [f64; 2]);

/// Uniform bucket index over the segments of a level set.
struct SegmentIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<Segment>>,
    bounds: (i64, i64, i64, i64),
}

impl SegmentIndex {
    fn new(set: &LevelSet, cell: f64) -> Option<Self> {
        let mut buckets: HashMap<(i64, i64), Vec<_>> = HashMap::new();
        let mut bounds = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        let key = |v: f64| (v / cell).floor() as i64;
        for line in &set.polylines {
            let segs: Vec<_> = if line.len() == 1 {
                vec![(line[0], line[0])]
            } else {
                line.windows(2).map(|w| (w[0], w[1])).collect()
            };
            for (a, b) in segs {
                let (x0, x1) = (key(a[0].min(b[0])), key(a[0].max(b[0])));
                let (y0, y1) = (key(a[1].min(b[1])), key(a[1].max(b[1])));
                for bx in x0..=x1 {
                    for by in y0..=y1 {
                        buckets.entry((bx, by)).or_default().push((a, b));
                    }
                }
                bounds = (bounds.0.min(x0), bounds.1.max(x1), bounds.2.min(y0), bounds.3.max(y1));
            }
        }
        (!buckets.is_empty()).then_some(SegmentIndex { cell, buckets, bounds })
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        let (px, py) = ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64);
        let mut best = f64::INFINITY;
        let reach = [
            (px - self.bounds.0).abs(),
            (px - self.bounds.1).abs(),
            (py - self.bounds.2).abs(),
            (py - self.bounds.3).abs(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        for ring in 0..=reach {
            // anything in a farther ring is at least `ring * cell` away
            if best <= ring as f64 * self.cell {
                break;
            }
            for bx in (px - ring)..=(px + ring) {
                for by in (py - ring)..=(py + ring) {
                    if (bx - px).abs() != ring && (by - py).abs() != ring {
                        continue;
                    }
                    if let Some(segs) = self.buckets.get(&(bx, by)) {
                        for &(a, b) in segs {
                            best = best.min(point_segment_distance(p, a, b));
                        }
                    }
                }
            }
        }
        best
    }
}

/// One-sided Hausdorff distance `sup_{a in A} dist(a, B)` between contour sets.
/// Infinite when `B` is empty and `A` is not; zero when `A` is empty.
pub fn hausdorff_one_sided(a: &LevelSet, b: &LevelSet, cell: f64) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let Some(index) = SegmentIndex::new(b, cell) else {
        return f64::INFINITY;
    };
    a.vertices().map(|p| index.distance(p)).fold(0.0, f64::max)
}

/// Largest `|scaled - solved|` over the points of `scaled`, sampling `solved`
/// at the nearest grid point when the spacings differ.
pub fn sup_error(scaled: &ValueGrid, solved: &ValueGrid) -> Result<f64> {
    let (ea, eb) = (scaled.extent(), solved.extent());
    let slack = scaled.h.max(solved.h) * (1.0 + 1e-9);
    if (ea[0] - eb[0]).abs() > slack || (ea[1] - eb[1]).abs() > slack {
        return Err(Error::Incommensurate(format!(
            "extents {ea:?} (h={}) and {eb:?} (h={})",
            scaled.h, solved.h
        )));
    }
    let same = (scaled.h - solved.h).abs() <= 1e-12 * scaled.h.max(solved.h);
    let mut worst: f64 = 0.0;
    for i in 0..scaled.n1 {
        for j in 0..scaled.n2 {
            let (k, l) = if same {
                if i >= solved.n1 || j >= solved.n2 {
                    continue;
                }
                (i, j)
            } else {
                solved.nearest_index(scaled.point(i, j))
            };
            worst = worst.max((scaled.get(i, j) - solved.get(k, l)).abs());
        }
    }
    Ok(worst)
}

/// Largest deviation of a grid from a closed-form function.
pub fn sup_error_against(vg: &ValueGrid, exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..vg.n1 {
        for j in 0..vg.n2 {
            worst = worst.max((vg.get(i, j) - exact(vg.point(i, j))).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reference {
    /// `mu (x1 + x2) + 2 sigma sqrt(x1 x2)`
    ClosedForm { mu: f64, sigma: f64 },
    /// Self-convergence against a solve at spacing `h`.
    Finest { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub sup_error: f64,
    pub boundary_residual: f64,
    pub runtime_ms: f64,
}

pub fn convergence_study(
    field: &WeightField,
    h_list: &[f64],
    extent: [f64; 2],
    reference: Reference,
) -> Result<Vec<ConvergenceRow>> {
    if h_list.is_empty() {
        return Err(Error::Domain("h_list is empty".into()));
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("h_list must be strictly decreasing".into()));
    }
    let fine = match reference {
        Reference::Finest { h } => {
            if h >= *h_list.last().unwrap() {
                return Err(Error::Domain("reference spacing must be finer than every h".into()));
            }
            Some(solve(field, h, extent)?)
        }
        Reference::ClosedForm { .. } => None,
    };
    h_list
        .iter()
        .map(|&h| {
            let start = Instant::now();
            let vg = solve(field, h, extent)?;
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            let err = match (&fine, reference) {
                (Some(f), _) => sup_error(&vg, f)?,
                (None, Reference::ClosedForm { mu, sigma }) => sup_error_against(&vg, |x| closed_form_iid(mu, sigma, x)),
                (None, Reference::Finest { .. }) => unreachable!(),
            };
            Ok(ConvergenceRow {
                h,
                sup_error: err,
                boundary_residual: boundary_residual(&vg, field),
                runtime_ms,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub level: f64,
    /// Mean over trials of `sup_{sim} dist(., pde)`.
    pub sim_to_pde: f64,
    /// Mean over trials of `sup_{pde} dist(., sim)`.
    pub pde_to_sim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub field: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub sup_errors: Vec<f64>,
    pub sup_error: f64,
    pub median_sup_error: f64,
    pub corner_scaled: Vec<f64>,
    pub levels: Vec<LevelComparison>,
    pub caveats: Vec<String>,
    pub runtime_ms: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Output of [`compare`]: the report plus the data behind it.
pub struct Comparison {
    pub report: ComparisonReport,
    pub solution: ValueGrid,
    pub pde_levels: Vec<LevelSet>,
    /// Level sets of each trial's scaled passage field.
    pub sim_levels: Vec<Vec<LevelSet>>,
}

/// Solve on `[0, extent]`, simulate `trials` lattices at scale `n` on the
/// same box, and compare them pointwise and through their level sets.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    field: &WeightField,
    n: usize,
    h: f64,
    extent: [f64; 2],
    trials: usize,
    base_seed: u64,
    levels: Option<&[f64]>,
    exec: Exec,
) -> Result<Comparison> {
    let start = Instant::now();
    let solution = solve(field, h, extent)?;
    let levels: Vec<f64> = levels.map_or_else(|| decile_levels(&solution), <[f64]>::to_vec);
    let pde_levels: Vec<LevelSet> = levels.iter().map(|&t| level_set(&solution, t)).collect();
    let n1 = (extent[0] * n as f64).round() as usize + 1;
    let n2 = (extent[1] * n as f64).round() as usize + 1;
    let cell = 4.0 * h.max(1.0 / n as f64);

    let per_trial = map_trials(field, n1, n2, n, trials, base_seed, exec, |_, sample, pf| {
        let scaled = pf.scaled_field();
        let err = sup_error(&scaled, &solution);
        let sets: Vec<LevelSet> = levels.iter().map(|&t| level_set(&scaled, t)).collect();
        let dists: Vec<(f64, f64)> = sets
            .iter()
            .zip(&pde_levels)
            .map(|(s, p)| (hausdorff_one_sided(s, p, cell), hausdorff_one_sided(p, s, cell)))
            .collect();
        (sample.seed, err, pf.corner() / n as f64, sets, dists)
    })?;

    let mut seeds = Vec::new();
    let mut sup_errors = Vec::new();
    let mut corner_scaled = Vec::new();
    let mut sim_levels = Vec::new();
    let mut sums = vec![(0.0, 0.0); levels.len()];
    for (seed, err, corner, sets, dists) in per_trial {
        seeds.push(seed);
        sup_errors.push(err?);
        corner_scaled.push(corner);
        sim_levels.push(sets);
        for (acc, d) in sums.iter_mut().zip(dists) {
            acc.0 += d.0;
            acc.1 += d.1;
        }
    }
    let level_report = levels
        .iter()
        .zip(sums)
        .map(|(&level, (a, b))| LevelComparison {
            level,
            sim_to_pde: a / trials as f64,
            pde_to_sim: b / trials as f64,
        })
        .collect();
    let report = ComparisonReport {
        field: field.description.clone(),
        n,
        h,
        base_seed,
        seeds,
        sup_error: sup_errors.iter().copied().fold(0.0, f64::max),
        median_sup_error: median(&sup_errors),
        sup_errors,
        corner_scaled,
        levels: level_report,
        caveats: field.caveats(),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Comparison {
        report,
        solution,
        pde_levels,
        sim_levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight_field::{preset, DistributionFamily::*, WeightField};

    #[test]
    fn linear_level_set_is_one_segment_chain() {
        let g = ValueGrid::from_fn(0.125, 9, 9, |x| x[0] + x[1]);
        let ls = level_set(&g, 1.0);
        assert_eq!(ls.polylines.len(), 1);
        let line = &ls.polylines[0];
        let (a, b) = (line[0], *line.last().unwrap());
        let ends = if a[0] > b[0] { (a, b) } else { (b, a) };
        assert!((ends.0[0] - 1.0).abs() <= 0.125 && ends.0[1].abs() <= 0.125);
        assert!((ends.1[1] - 1.0).abs() <= 0.125 && ends.1[0].abs() <= 0.125);
        for p in ls.vertices() {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn level_outside_range_is_empty() {
        let g = ValueGrid::from_fn(0.1, 11, 11, |x| x[0] + x[1]);
        assert!(level_set(&g, -0.5).is_empty());
        assert!(level_set(&g, 2.5).is_empty());
    }

    #[test]
    fn closed_loop_around_bump() {
        let g = ValueGrid::from_fn(0.05, 21, 21, |x| (-((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)) * 20.0).exp());
        let ls = level_set(&g, 0.5);
        assert_eq!(ls.polylines.len(), 1);
        let line = &ls.polylines[0];
        assert_eq!(line.first(), line.last());
        for p in ls.vertices() {
            assert!((g.interpolate(p) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn level_set_of_constant_solution_matches_closed_form() {
        let h = 1.0 / 200.0;
        let g = solve(&WeightField::constant(Exponential, 1.0), h, [1.0, 1.0]).unwrap();
        let ls = level_set(&g, 1.0);
        assert!(!ls.is_empty());
        for p in ls.vertices() {
            let exact = closed_form_iid(1.0, 1.0, p);
            assert!((exact - 1.0).abs() <= 0.05, "{p:?} -> {exact}");
        }
    }

    #[test]
    fn hausdorff_basics() {
        let a = LevelSet {
            level: 0.0,
            polylines: vec![vec![[0.0, 0.0], [1.0, 0.0]]],
        };
        let b = LevelSet {
            level: 0.0,
            polylines: vec![vec![[0.0, 0.5], [2.0, 0.5]]],
        };
        assert!((hausdorff_one_sided(&a, &b, 0.1) - 0.5).abs() < 1e-12);
        // far end of b sits at distance sqrt(1 + 0.25) from a
        assert!((hausdorff_one_sided(&b, &a, 0.1) - 1.25f64.sqrt()).abs() < 1e-12);
        let empty = LevelSet {
            level: 0.0,
            polylines: vec![],
        };
        assert_eq!(hausdorff_one_sided(&empty, &a, 0.1), 0.0);
        assert_eq!(hausdorff_one_sided(&a, &empty, 0.1), f64::INFINITY);
    }

    #[test]
    fn sup_error_identical_and_incommensurate() {
        let g = solve(&preset("lambda2").unwrap(), 0.01, [1.0, 1.0]).unwrap();
        assert_eq!(sup_error(&g, &g).unwrap(), 0.0);
        let small = solve(&preset("lambda2").unwrap(), 0.01, [0.5, 1.0]).unwrap();
        assert!(matches!(sup_error(&g, &small), Err(Error::Incommensurate(_))));
        // resampling onto a finer grid
        let fine = solve(&preset("lambda2").unwrap(), 0.005, [1.0, 1.0]).unwrap();
        assert!(sup_error(&g, &fine).unwrap() < 0.05);
    }

    #[test]
    fn convergence_examples() {
        let f = WeightField::constant(Exponential, 1.0);
        let rows = convergence_study(
            &f,
            &[1.0 / 125.0, 1.0 / 250.0, 1.0 / 500.0],
            [1.0, 1.0],
            Reference::ClosedForm { mu: 1.0, sigma: 1.0 },
        )
        .unwrap();
        assert!(rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error));

        let z = WeightField::constant(Exponential, 0.0);
        let rows = convergence_study(&z, &[0.1, 0.05], [1.0, 1.0], Reference::ClosedForm { mu: 0.0, sigma: 0.0 }).unwrap();
        assert!(rows.iter().all(|r| r.sup_error == 0.0 && r.boundary_residual == 0.0));

        assert!(convergence_study(&f, &[0.01, 0.1], [1.0, 1.0], Reference::ClosedForm { mu: 1.0, sigma: 1.0 }).is_err());
        assert!(convergence_study(&f, &[0.1], [1.0, 1.0], Reference::Finest { h: 0.1 }).is_err());
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
