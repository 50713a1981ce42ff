//! Macroscopic weight fields.
//!
//! A [`WeightField`] describes the mean of the site weights as a function of
//! the rescaled position `x = (i/N, j/N)`: a bulk mean, an extra source on
//! the coordinate axes, and optional additive sources concentrated on a
//! lattice row, column or diagonal. The same description drives both the
//! lattice sampler and the PDE solver, so all evaluation here is pure and
//! pointwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide that a continuum point lies on a line source.
const ON_LINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionFamily {
    Exponential,
    Geometric,
}

impl fmt::Display for DistributionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionFamily::Exponential => f.write_str("exponential"),
            DistributionFamily::Geometric => f.write_str("geometric"),
        }
    }
}

fn check_mean(mu: f64) -> Result<()> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::Domain(format!("mean must be finite and >= 0, got {mu}")));
    }
    Ok(())
}

/// Standard deviation of a weight with mean `mu` in the given family.
///
/// Exponential weights have `sigma = mu`; geometric weights have
/// `sigma = sqrt(mu (1 + mu))`.
pub fn sigma_from_mean(family: DistributionFamily, mu: f64) -> Result<f64> {
    check_mean(mu)?;
    Ok(sigma_unchecked(family, mu))
}

#[inline]
pub(crate) fn sigma_unchecked(family: DistributionFamily, mu: f64) -> f64 {
    match family {
        DistributionFamily::Exponential => mu,
        DistributionFamily::Geometric => (mu * (1.0 + mu)).sqrt(),
    }
}

/// Scale `nu` such that `floor(nu * Y)` has mean `mu` when `Y` is a
/// standard exponential: `nu = 1 / (ln(1 + mu) - ln(mu))`, and `0` for `mu = 0`.
pub fn geometric_nu(mu: f64) -> Result<f64> {
    check_mean(mu)?;
    Ok(nu_unchecked(mu))
}

#[inline]
pub(crate) fn nu_unchecked(mu: f64) -> f64 {
    if mu == 0.0 {
        0.0
    } else {
        // ln(1 + mu) - ln(mu) = ln(1 + 1/mu); ln_1p keeps precision for large mu.
        1.0 / (1.0 / mu).ln_1p()
    }
}

/// Region of the plane used by piecewise-constant fields. Regions are closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { center: [f64; 2], radius: f64 },
    /// `normal . x >= offset`
    Halfplane { normal: [f64; 2], offset: f64 },
}

impl Region {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match *self {
            Region::Rect { x0, y0, x1, y1 } => x[0] >= x0 && x[0] <= x1 && x[1] >= y0 && x[1] <= y1,
            Region::Disk { center, radius } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Region::Halfplane { normal, offset } => normal[0] * x[0] + normal[1] * x[1] >= offset,
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Region::Rect { x0, y0, x1, y1 } => vec![x0, y0, x1, y1],
            Region::Disk { center, radius } => vec![center[0], center[1], radius],
            Region::Halfplane { normal, offset } => vec![normal[0], normal[1], offset],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePiece {
    pub region: Region,
    pub mu: f64,
}

/// Bulk mean on the closed quadrant.
#[derive(Debug, Clone, PartialEq)]
pub enum BulkMean {
    Constant(f64),
    /// 1 outside the square `[0, 0.5)^2`, 0 inside.
    Lambda1,
    /// Sum of two Gaussian bumps centred at (0.25, 0.75) and (0.75, 0.25).
    Lambda2,
    /// 0.5 on the disks of radius 0.7 about (1, 0) and (0, 1), 1 elsewhere.
    Lambda3,
    /// Mean `(1 - q)/q` for the geometric parameter `q` that is 0.5 outside
    /// `[0, 0.5)^2` and 1 inside.
    GeoQ,
    /// First matching piece wins.
    Piecewise {
        pieces: Vec<PiecewisePiece>,
        default_mu: f64,
    },
}

fn geo_q(x: [f64; 2]) -> f64 {
    if x[0] >= 0.5 || x[1] >= 0.5 {
        0.5
    } else {
        1.0
    }
}

impl BulkMean {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            BulkMean::Constant(mu) => *mu,
            BulkMean::Lambda1 => {
                if x[0] >= 0.5 || x[1] >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            BulkMean::Lambda2 => {
                let g = |c: [f64; 2]| {
                    let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                    (-10.0 * (dx * dx + dy * dy)).exp()
                };
                g([0.25, 0.75]) + g([0.75, 0.25])
            }
            BulkMean::Lambda3 => {
                let d2 = |c: [f64; 2]| {
                    let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                    dx * dx + dy * dy
                };
                if d2([1.0, 0.0]) <= 0.49 || d2([0.0, 1.0]) <= 0.49 {
                    0.5
                } else {
                    1.0
                }
            }
            BulkMean::GeoQ => {
                let q = geo_q(x);
                (1.0 - q) / q
            }
            BulkMean::Piecewise { pieces, default_mu } => pieces
                .iter()
                .find(|p| p.region.contains(x))
                .map_or(*default_mu, |p| p.mu),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BulkMean::Constant(mu) => check_mean(*mu),
            BulkMean::Piecewise { pieces, default_mu } => {
                check_mean(*default_mu)?;
                for p in pieces {
                    check_mean(p.mu)?;
                    if p.region.params().iter().any(|v| !v.is_finite()) {
                        return Err(Error::Domain(format!("non-finite region {:?}", p.region)));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryAxis {
    /// The axis `{x2 = 0}`.
    Horizontal,
    /// The axis `{x1 = 0}`.
    Vertical,
}

/// Source of strength `strength` on `[from, to]` along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSegment {
    pub axis: BoundaryAxis,
    pub from: f64,
    pub to: f64,
    pub strength: f64,
}

/// Extra mean on the coordinate axes.
///
/// Along each axis the value is the uniform strength plus every segment
/// covering the point. At the origin, which lies on both axes, the larger of
/// the two axis values is used so that the source stays a single function.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySource {
    #[serde(default)]
    pub horizontal: f64,
    #[serde(default)]
    pub vertical: f64,
    #[serde(default)]
    pub segments: Vec<AxisSegment>,
}

impl BoundarySource {
    pub fn uniform(horizontal: f64, vertical: f64) -> Self {
        BoundarySource {
            horizontal,
            vertical,
            segments: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.horizontal == 0.0 && self.vertical == 0.0 && self.segments.iter().all(|s| s.strength == 0.0)
    }

    fn along(&self, axis: BoundaryAxis, t: f64) -> f64 {
        let base = match axis {
            BoundaryAxis::Horizontal => self.horizontal,
            BoundaryAxis::Vertical => self.vertical,
        };
        base + self
            .segments
            .iter()
            .filter(|s| s.axis == axis && t >= s.from && t <= s.to)
            .map(|s| s.strength)
            .sum::<f64>()
    }

    /// Source at `x`; zero on the open quadrant.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match (x[0] == 0.0, x[1] == 0.0) {
            (true, true) => self
                .along(BoundaryAxis::Horizontal, 0.0)
                .max(self.along(BoundaryAxis::Vertical, 0.0)),
            (false, true) => self.along(BoundaryAxis::Horizontal, x[0]),
            (true, false) => self.along(BoundaryAxis::Vertical, x[1]),
            (false, false) => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        check_mean(self.horizontal)?;
        check_mean(self.vertical)?;
        for s in &self.segments {
            check_mean(s.strength)?;
            if !(s.from.is_finite() && s.to.is_finite()) || s.from > s.to {
                return Err(Error::Domain(format!("bad boundary segment [{}, {}]", s.from, s.to)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineAxis {
    /// Row `{x2 = offset}`.
    Horizontal,
    /// Column `{x1 = offset}`.
    Vertical,
    /// `{x1 - x2 = offset}`.
    Diagonal,
}

impl FromStr for LineAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "horizontal" | "h" => Ok(LineAxis::Horizontal),
            "vertical" | "v" => Ok(LineAxis::Vertical),
            "diagonal" | "d" => Ok(LineAxis::Diagonal),
            other => Err(Error::Domain(format!("unknown line axis `{other}`"))),
        }
    }
}

/// Additive mean bonus on the lattice line nearest `offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSource {
    pub axis: LineAxis,
    pub offset: f64,
    pub strength: f64,
}

impl LineSource {
    /// Whether grid point `(i, j)` at spacing `h` lies on the snapped line
    /// (index `round(offset / h)`).
    #[inline]
    pub fn contains_site(&self, i: usize, j: usize, h: f64) -> bool {
        let k = (self.offset / h).round();
        match self.axis {
            LineAxis::Horizontal => j as f64 == k,
            LineAxis::Vertical => i as f64 == k,
            LineAxis::Diagonal => i as f64 - j as f64 == k,
        }
    }

    /// Whether a continuum point lies exactly on the line.
    pub fn contains_point(&self, x: [f64; 2]) -> bool {
        let d = match self.axis {
            LineAxis::Horizontal => x[1] - self.offset,
            LineAxis::Vertical => x[0] - self.offset,
            LineAxis::Diagonal => x[0] - x[1] - self.offset,
        };
        d.abs() <= ON_LINE_TOL
    }
}

/// Complete macroscopic description of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub family: DistributionFamily,
    pub bulk: BulkMean,
    pub boundary: BoundarySource,
    pub line_sources: Vec<LineSource>,
    pub description: String,
}

/// Mean and standard deviation entering one grid update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteCoefficients {
    pub mu: f64,
    pub sigma: f64,
}

impl WeightField {
    pub fn constant(family: DistributionFamily, mu: f64) -> Self {
        WeightField {
            family,
            bulk: BulkMean::Constant(mu),
            boundary: BoundarySource::default(),
            line_sources: Vec::new(),
            description: format!("constant({mu})"),
        }
    }

    pub fn with_family(mut self, family: DistributionFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundarySource) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_line_source(mut self, source: LineSource) -> Self {
        self.line_sources.push(source);
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bulk.validate()?;
        self.boundary.validate()?;
        for l in &self.line_sources {
            check_mean(l.strength)?;
            if !l.offset.is_finite() {
                return Err(Error::Domain(format!("non-finite line offset {}", l.offset)));
            }
        }
        Ok(())
    }

    pub fn bulk_mean(&self, x: [f64; 2]) -> f64 {
        self.bulk.eval(x)
    }

    pub fn boundary_source(&self, x: [f64; 2]) -> f64 {
        self.boundary.eval(x)
    }

    /// Bulk mean plus the strengths of the line sources through `x`.
    pub fn interior_mean(&self, x: [f64; 2]) -> f64 {
        self.bulk.eval(x)
            + self
                .line_sources
                .iter()
                .filter(|l| l.contains_point(x))
                .map(|l| l.strength)
                .sum::<f64>()
    }

    /// Total continuum mean at `x`, including the axis source.
    pub fn continuum_mean(&self, x: [f64; 2]) -> f64 {
        self.interior_mean(x) + self.boundary.eval(x)
    }

    /// Standard deviation at a continuum point. The axis source carries no
    /// variance term.
    pub fn sigma(&self, x: [f64; 2]) -> f64 {
        sigma_unchecked(self.family, self.interior_mean(x))
    }

    fn snapped_lines(&self, i: usize, j: usize, h: f64) -> f64 {
        self.line_sources
            .iter()
            .filter(|l| l.contains_site(i, j, h))
            .map(|l| l.strength)
            .sum()
    }

    /// Coefficients at grid point `(i, j)` of a grid with spacing `h`.
    ///
    /// `mu` includes the axis source when `include_boundary` is set; `sigma`
    /// is derived from the bulk mean and line sources only.
    pub fn grid_coefficients(&self, i: usize, j: usize, h: f64, include_boundary: bool) -> SiteCoefficients {
        let x = [i as f64 * h, j as f64 * h];
        let interior = self.bulk.eval(x) + self.snapped_lines(i, j, h);
        let mut mu = interior;
        if include_boundary && (i == 0 || j == 0) {
            mu += self.boundary.eval(x);
        }
        SiteCoefficients {
            mu,
            sigma: sigma_unchecked(self.family, interior),
        }
    }

    /// Mean of the weight at lattice site `(i, j)` for scale parameter `n`.
    pub fn effective_mean(&self, i: usize, j: usize, n: usize) -> f64 {
        let nf = n as f64;
        let x = [i as f64 / nf, j as f64 / nf];
        let mut mu = self.bulk.eval(x) + self.snapped_lines(i, j, 1.0 / nf);
        if i == 0 || j == 0 {
            mu += self.boundary.eval(x);
        }
        mu
    }

    /// True when the field has a diagonal line source, which lies outside
    /// the hypotheses under which the continuum limit is known to hold.
    pub fn outside_hypotheses(&self) -> bool {
        self.line_sources.iter().any(|l| l.axis == LineAxis::Diagonal && l.strength > 0.0)
    }

    /// Human-readable caveats to attach to results computed on this field.
    pub fn caveats(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.outside_hypotheses() {
            out.push(
                "diagonal line source: the Hamilton-Jacobi continuum limit is not expected to hold".to_string(),
            );
        }
        if self
            .line_sources
            .iter()
            .any(|l| l.axis != LineAxis::Diagonal && l.strength > 0.0)
        {
            out.push(
                "interior line source: the value function may be discontinuous and uniqueness of the \
                 viscosity solution is unproven; the scheme's output is reported as-is"
                    .to_string(),
            );
        }
        out
    }

    /// Upper bound of the total mean over the lattice/grid points of `[0, extent]`,
    /// sampled at spacing `h`. Used for the stability barrier.
    pub fn sup_norms(&self, h: f64, extent: [f64; 2]) -> (f64, f64) {
        let n1 = (extent[0] / h).round() as usize;
        let n2 = (extent[1] / h).round() as usize;
        let mut mu_max: f64 = 0.0;
        let mut sigma_max: f64 = 0.0;
        for i in 0..=n1 {
            for j in 0..=n2 {
                let c = self.grid_coefficients(i, j, h, true);
                mu_max = mu_max.max(c.mu);
                sigma_max = sigma_max.max(c.sigma);
            }
        }
        (mu_max, sigma_max)
    }
}

/// Named fields used in the experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Lambda1,
    Lambda2,
    Lambda3,
    GeoQ,
    SlowBond { r: f64 },
    LineSource { axis: LineAxis, offset: f64, strength: f64 },
    Constant { mu: f64 },
}

pub const PRESET_NAMES: &str =
    "lambda1, lambda2, lambda3, geo_q, slow_bond(r), line_source(axis, offset, strength), constant(mu)";

fn parse_args(name: &str, args: Option<&str>, expected: usize) -> Result<Vec<String>> {
    let args: Vec<String> = args
        .map(|a| a.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();
    if args.len() != expected {
        return Err(Error::Domain(format!(
            "preset `{name}` takes {expected} argument(s), got {}",
            args.len()
        )));
    }
    Ok(args)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Domain(format!("`{s}` is not a number")))
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|&c| c > open)
                    .ok_or_else(|| Error::Domain(format!("unbalanced parentheses in `{s}`")))?;
                (&s[..open], Some(&s[open + 1..close]))
            }
            None => (s, None),
        };
        let name = name.trim();
        let preset = match name {
            "lambda1" | "lambda2" | "lambda3" | "geo_q" => {
                parse_args(name, args, 0)?;
                match name {
                    "lambda1" => Preset::Lambda1,
                    "lambda2" => Preset::Lambda2,
                    "lambda3" => Preset::Lambda3,
                    _ => Preset::GeoQ,
                }
            }
            "slow_bond" => {
                let a = parse_args(name, args, 1)?;
                Preset::SlowBond { r: parse_f64(&a[0])? }
            }
            "line_source" => {
                let a = parse_args(name, args, 3)?;
                Preset::LineSource {
                    axis: a[0].parse()?,
                    offset: parse_f64(&a[1])?,
                    strength: parse_f64(&a[2])?,
                }
            }
            "constant" => {
                let a = parse_args(name, args, 1)?;
                Preset::Constant { mu: parse_f64(&a[0])? }
            }
            _ => {
                return Err(Error::UnknownPreset {
                    name: name.to_string(),
                    available: PRESET_NAMES.to_string(),
                })
            }
        };
        Ok(preset)
    }
}

impl Preset {
    pub fn build(&self) -> Result<WeightField> {
        use DistributionFamily::*;
        let field = match *self {
            Preset::Lambda1 => WeightField {
                bulk: BulkMean::Lambda1,
                description: "lambda1".into(),
                ..WeightField::constant(Exponential, 0.0)
            },
            Preset::Lambda2 => WeightField {
                bulk: BulkMean::Lambda2,
                description: "lambda2".into(),
                ..WeightField::constant(Exponential, 0.0)
            },
            Preset::Lambda3 => WeightField {
                bulk: BulkMean::Lambda3,
                description: "lambda3".into(),
                ..WeightField::constant(Exponential, 0.0)
            },
            Preset::GeoQ => WeightField {
                bulk: BulkMean::GeoQ,
                description: "geo_q".into(),
                ..WeightField::constant(Geometric, 0.0)
            },
            Preset::SlowBond { r } => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::Domain(format!("slow bond rate must lie in (0, 1], got {r}")));
                }
                WeightField::constant(Exponential, 1.0)
                    .with_line_source(LineSource {
                        axis: LineAxis::Diagonal,
                        offset: 0.0,
                        strength: 1.0 / r - 1.0,
                    })
                    .with_description(format!("slow_bond({r})"))
            }
            Preset::LineSource { axis, offset, strength } => WeightField::constant(Exponential, 1.0)
                .with_line_source(LineSource { axis, offset, strength })
                .with_description(format!(
                    "line_source({}, {offset}, {strength})",
                    serde_json::to_value(axis).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
                )),
            Preset::Constant { mu } => WeightField::constant(Exponential, mu),
        };
        field.validate()?;
        Ok(field)
    }
}

/// Build a preset field from its textual name, e.g. `"lambda2"` or `"slow_bond(0.5)"`.
pub fn preset(name: &str) -> Result<WeightField> {
    name.parse::<Preset>()?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::site_exponential;
    use DistributionFamily::*;

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_from_mean(Exponential, 2.0).unwrap(), 2.0);
        assert!((sigma_from_mean(Geometric, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sigma_from_mean(Exponential, 0.0).unwrap(), 0.0);
        assert!(sigma_from_mean(Exponential, -1.0).is_err());
        assert!(sigma_from_mean(Geometric, f64::NAN).is_err());
        assert!(sigma_from_mean(Geometric, f64::INFINITY).is_err());
    }

    #[test]
    fn nu_examples() {
        let nu = geometric_nu(1.0).unwrap();
        assert!((nu - 1.0 / 2f64.ln()).abs() < 1e-15);
        assert!((nu - std::f64::consts::LOG2_E).abs() < 1e-15);
        assert_eq!(geometric_nu(0.0).unwrap(), 0.0);
        // q = 1 - exp(-1/nu) recovers 1/(1 + mu)
        let q = 1.0 - (-1.0 / nu).exp();
        assert!((q - 0.5).abs() < 1e-15);
        assert!(geometric_nu(-0.1).is_err());
    }

    #[test]
    fn nu_strictly_increasing() {
        let mut prev = geometric_nu(0.0).unwrap();
        for k in 1..=1000 {
            let mu = k as f64 * 0.01;
            let nu = geometric_nu(mu).unwrap();
            assert!(nu > prev, "nu not increasing at mu={mu}");
            prev = nu;
        }
    }

    #[test]
    fn floor_nu_y_has_mean_mu() {
        let n = 1_000_000u64;
        for &mu in &[0.3, 1.0, 2.5] {
            let nu = geometric_nu(mu).unwrap();
            let sum: f64 = (0..n)
                .map(|k| (nu * site_exponential(99, k, 0)).floor())
                .sum();
            let mean = sum / n as f64;
            assert!(((mean - mu) / mu).abs() < 0.01, "mu={mu} mean={mean}");
        }
    }

    #[test]
    fn effective_mean_examples() {
        let c = WeightField::constant(Exponential, 1.0);
        assert_eq!(c.effective_mean(5, 7, 100), 1.0);

        let b = c.clone().with_boundary(BoundarySource::uniform(2.0, 2.0));
        assert_eq!(b.effective_mean(0, 7, 100), 3.0);
        assert_eq!(b.effective_mean(7, 0, 100), 3.0);
        assert_eq!(b.effective_mean(0, 0, 100), 3.0);
        assert_eq!(b.effective_mean(1, 1, 100), 1.0);

        let l = c.with_line_source(LineSource {
            axis: LineAxis::Horizontal,
            offset: 0.25,
            strength: 2.0,
        });
        assert_eq!(l.effective_mean(10, 25, 100), 3.0);
        assert_eq!(l.effective_mean(10, 24, 100), 1.0);
    }

    #[test]
    fn line_sources_snap_to_nearest_row() {
        let l = LineSource {
            axis: LineAxis::Horizontal,
            offset: 0.333,
            strength: 1.0,
        };
        // 0.333 * 10 = 3.33 -> row 3
        assert!(l.contains_site(0, 3, 0.1));
        assert!(!l.contains_site(0, 4, 0.1));
        let d = LineSource {
            axis: LineAxis::Diagonal,
            offset: 0.0,
            strength: 1.0,
        };
        assert!(d.contains_site(4, 4, 0.01));
        assert!(!d.contains_site(4, 5, 0.01));
    }

    #[test]
    fn boundary_source_is_zero_in_open_quadrant() {
        let b = BoundarySource {
            horizontal: 2.0,
            vertical: 1.0,
            segments: vec![AxisSegment {
                axis: BoundaryAxis::Horizontal,
                from: 0.0,
                to: 0.5,
                strength: 4.0,
            }],
        };
        assert_eq!(b.eval([0.1, 1e-9]), 0.0);
        assert_eq!(b.eval([0.25, 0.0]), 6.0);
        assert_eq!(b.eval([0.75, 0.0]), 2.0);
        assert_eq!(b.eval([0.0, 0.75]), 1.0);
        assert_eq!(b.eval([0.0, 0.0]), 6.0);
    }

    #[test]
    fn preset_examples() {
        let l2 = preset("lambda2").unwrap();
        let v = l2.bulk_mean([0.25, 0.75]);
        assert!((v - (1.0 + (-5.0f64).exp())).abs() < 1e-15);
        assert!((v - 1.0067).abs() < 1e-4);

        let q = preset("geo_q").unwrap();
        assert_eq!(q.family, Geometric);
        assert_eq!(q.bulk_mean([0.25, 0.25]), 0.0);
        assert_eq!(q.bulk_mean([0.25, 0.5]), 1.0);

        let l3 = preset("lambda3").unwrap();
        assert_eq!(l3.bulk_mean([1.0, 0.0]), 0.5);
        assert_eq!(l3.bulk_mean([0.5, 0.5]), 1.0);
        // boundary of the disk belongs to the slow region
        assert_eq!(l3.bulk_mean([0.3, 0.0]), 0.5);

        let l1 = preset("lambda1").unwrap();
        assert_eq!(l1.bulk_mean([0.5, 0.0]), 1.0);
        assert_eq!(l1.bulk_mean([0.4999, 0.4999]), 0.0);

        let sb = preset("slow_bond(0.5)").unwrap();
        assert!(sb.outside_hypotheses());
        assert_eq!(sb.effective_mean(7, 7, 100), 2.0);
        assert_eq!(sb.effective_mean(7, 8, 100), 1.0);

        let ls = preset("line_source(horizontal, 0.25, 2)").unwrap();
        assert_eq!(ls.effective_mean(10, 25, 100), 3.0);
        assert!(!ls.caveats().is_empty());

        assert_eq!(preset("constant(2.5)").unwrap().bulk_mean([3.0, 4.0]), 2.5);
    }

    #[test]
    fn preset_errors() {
        match preset("lambda9") {
            Err(Error::UnknownPreset { available, .. }) => assert!(available.contains("lambda1")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(preset("slow_bond(0)").is_err());
        assert!(preset("slow_bond(1.5)").is_err());
        assert!(preset("constant(-1)").is_err());
        assert!(preset("constant").is_err());
        assert!(preset("line_source(sideways, 0.2, 1)").is_err());
    }

    #[test]
    fn sigma_field_consistent_with_sigma_from_mean() {
        let names = [
            "lambda1",
            "lambda2",
            "lambda3",
            "geo_q",
            "slow_bond(0.5)",
            "line_source(vertical, 0.5, 2)",
            "constant(1.5)",
        ];
        for name in names {
            let f = preset(name).unwrap();
            for a in 0..=20 {
                for b in 0..=20 {
                    let x = [a as f64 * 0.05, b as f64 * 0.05];
                    let mu = f.interior_mean(x);
                    assert!(mu >= 0.0 && f.boundary_source(x) >= 0.0);
                    assert_eq!(f.sigma(x), sigma_from_mean(f.family, mu).unwrap(), "{name} at {x:?}");
                }
            }
        }
    }

    #[test]
    fn effective_mean_is_bulk_in_open_quadrant_without_lines() {
        let f = preset("lambda2").unwrap().with_boundary(BoundarySource::uniform(3.0, 1.0));
        for i in 1..30 {
            for j in 1..30 {
                assert_eq!(f.effective_mean(i, j, 20), f.bulk_mean([i as f64 / 20.0, j as f64 / 20.0]));
            }
        }
    }
}
