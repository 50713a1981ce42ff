//! Experiment configuration (JSON).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use dlpp_core::analysis::Reference;
use dlpp_core::curve_extract::{GapTolerance, DEFAULT_EPS, DEFAULT_S_STEP};
use dlpp_core::weight_field::{
    sigma_from_mean, BoundarySource, BulkMean, LineSource, PiecewisePiece, Preset,
};
use dlpp_core::{DistributionFamily, WeightField};

use crate::CliError;

/// Either a named preset (optionally with `params`) or a piecewise-constant bulk mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piecewise: Option<Vec<PiecewisePiece>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowBondOptions {
    pub r: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasepOptions {
    /// Times for height profiles; deciles of the corner passage time when empty.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub slow_bond: Option<SlowBondOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceOptions {
    #[serde(default = "default_h_list")]
    pub h_list: Vec<f64>,
    /// Closed form for constant fields, otherwise a solve at a quarter of the finest `h`.
    #[serde(default)]
    pub reference: Option<Reference>,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            h_list: default_h_list(),
            reference: None,
        }
    }
}

fn default_h_list() -> Vec<f64> {
    vec![1.0 / 125.0, 1.0 / 250.0, 1.0 / 500.0]
}

fn default_h() -> f64 {
    1.0 / 500.0
}

fn default_extent() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_n() -> usize {
    200
}

fn default_trials() -> usize {
    1
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_s_step() -> f64 {
    DEFAULT_S_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    /// Overrides the family of the preset.
    #[serde(default)]
    pub family: Option<DistributionFamily>,
    #[serde(default)]
    pub boundary_source: Option<BoundarySource>,
    #[serde(default)]
    pub line_sources: Vec<LineSource>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_extent")]
    pub extent: [f64; 2],
    /// Base point (grid indices) for relative solves.
    #[serde(default)]
    pub base: Option<[usize; 2]>,
    #[serde(default = "default_n", rename = "N")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Contour levels; deciles of the solution range when absent.
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    #[serde(default)]
    pub endpoints: Vec<[f64; 2]>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_s_step")]
    pub s_step: f64,
    #[serde(default)]
    pub gap_tolerance: Option<GapTolerance>,
    #[serde(default)]
    pub binary: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tasep: TasepOptions,
    #[serde(default)]
    pub convergence: ConvergenceOptions,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn param_text(v: &Value) -> Result<String, CliError> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        other => Err(config_err(format!("preset parameter must be a number or string, got {other}"))),
    }
}

impl FieldSpec {
    fn preset_string(&self, name: &str) -> Result<String, CliError> {
        if self.params.is_empty() {
            return Ok(name.to_string());
        }
        if name.contains('(') {
            return Err(config_err("give preset arguments either inline or in `params`, not both"));
        }
        let order: &[&str] = match name {
            "constant" => &["mu"],
            "slow_bond" => &["r"],
            "line_source" => &["axis", "offset", "strength"],
            _ => &[],
        };
        if let Some(k) = self.params.keys().find(|k| !order.contains(&k.as_str())) {
            return Err(config_err(format!("unknown parameter `{k}` for preset `{name}`")));
        }
        let args = order
            .iter()
            .map(|k| {
                self.params
                    .get(*k)
                    .ok_or_else(|| config_err(format!("preset `{name}` needs parameter `{k}`")))
                    .and_then(param_text)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(format!("{name}({})", args.join(",")))
    }

    pub fn build(&self) -> Result<WeightField, CliError> {
        match (&self.preset, &self.piecewise) {
            (Some(name), None) => {
                if self.default_mu.is_some() {
                    return Err(config_err("`default_mu` only applies to piecewise fields"));
                }
                let text = self.preset_string(name)?;
                let preset: Preset = text.parse()?;
                Ok(preset.build()?)
            }
            (None, Some(pieces)) => {
                if !self.params.is_empty() {
                    return Err(config_err("`params` only applies to presets"));
                }
                let default_mu = self
                    .default_mu
                    .ok_or_else(|| config_err("piecewise fields need `default_mu`"))?;
                Ok(WeightField {
                    bulk: BulkMean::Piecewise {
                        pieces: pieces.clone(),
                        default_mu,
                    },
                    description: "piecewise".into(),
                    ..WeightField::constant(DistributionFamily::Exponential, 0.0)
                })
            }
            (Some(_), Some(_)) => Err(config_err("field has both `preset` and `piecewise`")),
            (None, None) => Err(config_err("field needs `preset` or `piecewise`")),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// The weight field with family, boundary and line overrides applied.
    pub fn weight_field(&self) -> Result<WeightField, CliError> {
        let mut field = self.field.build().map_err(|e| match e {
            CliError::Core(e) => config_err(e.to_string()),
            other => other,
        })?;
        if let Some(family) = self.family {
            field = field.with_family(family);
        }
        if let Some(b) = &self.boundary_source {
            field = field.with_boundary(b.clone());
        }
        for l in &self.line_sources {
            field = field.with_line_source(l.clone());
        }
        field.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(field)
    }

    /// Reject anything that would fail later, before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.weight_field()?;
        positive("h", self.h)?;
        positive("extent[0]", self.extent[0])?;
        positive("extent[1]", self.extent[1])?;
        positive("eps", self.eps)?;
        if self.h > self.extent[0].min(self.extent[1]) {
            return Err(config_err("`h` exceeds the extent"));
        }
        if self.n == 0 {
            return Err(config_err("`N` must be >= 1"));
        }
        if self.trials == 0 {
            return Err(config_err("`trials` must be >= 1"));
        }
        if !(self.s_step > 0.0 && self.s_step <= 1.0) || ((1.0 / self.s_step).round() * self.s_step - 1.0).abs() > 1e-9 {
            return Err(config_err(format!("`s_step` must divide 1, got {}", self.s_step)));
        }
        if let Some(levels) = &self.levels {
            if levels.iter().any(|t| !t.is_finite()) {
                return Err(config_err("levels must be finite"));
            }
        }
        for p in &self.endpoints {
            if !(p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= self.extent[0] && p[1] <= self.extent[1]) {
                return Err(config_err(format!("endpoint {p:?} lies outside the extent")));
            }
        }
        if let Some([i, j]) = self.base {
            let n1 = (self.extent[0] / self.h).round() as usize + 1;
            let n2 = (self.extent[1] / self.h).round() as usize + 1;
            if i >= n1 || j >= n2 {
                return Err(config_err(format!("base ({i}, {j}) lies outside the {n1}x{n2} grid")));
            }
        }
        if self.tasep.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(config_err("tasep times must be finite and non-negative"));
        }
        if let Some(sb) = &self.tasep.slow_bond {
            if sb.r.is_empty() || sb.r.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
                return Err(config_err("slow bond rates must lie in (0, 1]"));
            }
            if sb.n == 0 || sb.trials == 0 {
                return Err(config_err("slow bond `N` and `trials` must be >= 1"));
            }
        }
        let hs = &self.convergence.h_list;
        if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) || hs.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("convergence `h_list` must be positive and strictly decreasing"));
        }
        Ok(())
    }

    /// Reference for the convergence table.
    pub fn convergence_reference(&self, field: &WeightField) -> Result<Reference, CliError> {
        if let Some(r) = self.convergence.reference {
            return Ok(r);
        }
        if let (BulkMean::Constant(mu), true, true) =
            (&field.bulk, field.boundary.is_zero(), field.line_sources.is_empty())
        {
            let sigma = sigma_from_mean(field.family, *mu)?;
            return Ok(Reference::ClosedForm { mu: *mu, sigma });
        }
        Ok(Reference::Finest {
            h: self.convergence.h_list.last().copied().unwrap_or(self.h) / 4.0,
        })
    }

    pub fn gap_tolerance(&self) -> GapTolerance {
        self.gap_tolerance.unwrap_or_default()
    }
}
