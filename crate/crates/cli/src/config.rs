//! Run-configuration schema: JSON documents with strict key checking,
//! path-aware errors, and loss-free emission for reproducibility.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptor::FnDescriptor;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// The document is not well-formed JSON.
    #[error("parse error: {0}")]
    Parse(String),
    /// Well-formed document violating the schema (unknown key, missing
    /// field, or an invariant), with the path to the offending key.
    #[error("schema error at '{path}': {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Scenario selection: a registered preset name or an inline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioConfig {
    Preset(String),
    Inline(Box<InlineScenario>),
}

/// Inline model description in the restricted descriptor language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    pub flux: FluxConfig,
    pub diffusion: DiffusionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<JumpsConfig>,
    #[serde(default)]
    pub support_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_range: Option<(f64, f64)>,
    pub initial: FnDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub f: FnDescriptor,
    /// Declared Lipschitz bound; estimated from the derivative over the
    /// state range when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub phi: FnDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    pub sigma: FnDescriptor,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsConfig {
    /// Separable jump coefficient `eta(u, z) = eta_u(u) * eta_z(z)`.
    pub eta_u: FnDescriptor,
    pub eta_z: FnDescriptor,
    /// Contraction factor `lambda*` in `[0, 1)`.
    pub lipschitz_factor: f64,
    pub levy: LevyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensator: Option<CompensatorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    /// Closed-form inverse CDF `q(u)`.
    InverseCdf { q: FnDescriptor },
    /// Every mark equals `value`.
    PointMass { value: f64 },
    /// Quantile table built once from a density on `support`.
    QuantileTable {
        density: FnDescriptor,
        support: (f64, f64),
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompensatorConfig {
    /// Closed form for `c(u) = integral of eta(u; z) m(dz)`.
    ClosedForm { c: FnDescriptor },
    /// Quadrature of `eta(u, z) density(z)` over `support`.
    Quadrature {
        density: FnDescriptor,
        support: (f64, f64),
        #[serde(default = "default_quad_tol")]
        tol: f64,
    },
    /// Finite atomic measure as `(z, weight)` pairs.
    Atoms { atoms: Vec<(f64, f64)> },
}

fn default_quad_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    /// Derive the cell width from the stability condition at the configured
    /// dt (mutually exclusive with `dx`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_cfl: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub linf: f64,
    pub tv: f64,
    pub max_linf_violation_fraction: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            linf: 0.02,
            tv: 0.05,
            max_linf_violation_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlagConfig {
    pub clip_to_invariant_interval: bool,
    pub allow_subcycling: bool,
}

impl Default for FlagConfig {
    fn default() -> Self {
        Self {
            clip_to_invariant_interval: false,
            allow_subcycling: true,
        }
    }
}

fn default_grid() -> GridConfig {
    GridConfig {
        half_width: 1.0,
        dx: None,
        from_cfl: Some(true),
    }
}

fn default_time() -> TimeConfig {
    TimeConfig {
        horizon: 1.0,
        dt: 0.002,
    }
}

fn default_n_paths() -> usize {
    64
}

fn default_stride() -> usize {
    10
}

fn default_output_dir() -> String {
    "out".into()
}

/// Full run description. Everything needed to reproduce a run byte for
/// byte, except the thread count (which never changes results).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub theta: f64,
    #[serde(default = "default_grid")]
    pub grid: GridConfig,
    #[serde(default = "default_time")]
    pub time: TimeConfig,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub flags: FlagConfig,
}

impl RunConfig {
    /// Minimal config for a preset scenario, with every default filled.
    pub fn preset(name: &str, theta: f64) -> Self {
        Self {
            scenario: ScenarioConfig::Preset(name.to_string()),
            theta,
            grid: default_grid(),
            time: default_time(),
            n_paths: default_n_paths(),
            root_seed: 0,
            snapshot_stride: default_stride(),
            output_dir: default_output_dir(),
            tolerances: ToleranceConfig::default(),
            flags: FlagConfig::default(),
        }
    }

    /// Emits the canonical JSON document (parse-emit round trips are exact).
    pub fn emit(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(schema(
                "theta",
                format!("must lie strictly inside (0, 1), got {}", self.theta),
            ));
        }
        match (&self.grid.dx, &self.grid.from_cfl) {
            (Some(_), Some(true)) => {
                return Err(schema("grid", "supply exactly one of 'dx' or 'from_cfl'"))
            }
            (None, None) | (None, Some(false)) => {
                return Err(schema("grid", "supply exactly one of 'dx' or 'from_cfl'"))
            }
            _ => {}
        }
        if !(self.grid.half_width > 0.0) {
            return Err(schema("grid.half_width", "must be positive"));
        }
        if let Some(dx) = self.grid.dx {
            if !(dx > 0.0) {
                return Err(schema("grid.dx", "must be positive"));
            }
        }
        if !(self.time.horizon > 0.0) {
            return Err(schema("time.horizon", "must be positive"));
        }
        if !(self.time.dt > 0.0) || self.time.dt > self.time.horizon {
            return Err(schema("time.dt", "must lie in (0, horizon]"));
        }
        if self.n_paths == 0 {
            return Err(schema("n_paths", "must be at least 1"));
        }
        if self.snapshot_stride == 0 {
            return Err(schema("snapshot_stride", "must be at least 1"));
        }
        for (value, path) in [
            (self.tolerances.linf, "tolerances.linf"),
            (self.tolerances.tv, "tolerances.tv"),
            (
                self.tolerances.max_linf_violation_fraction,
                "tolerances.max_linf_violation_fraction",
            ),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(schema(path, "must be a finite nonnegative number"));
            }
        }
        match &self.scenario {
            ScenarioConfig::Preset(name) => {
                if fractsplit_core::lookup_scenario(name).is_err() {
                    return Err(schema("scenario", format!("unknown preset '{name}'")));
                }
            }
            ScenarioConfig::Inline(inline) => inline.validate("scenario")?,
        }
        Ok(())
    }
}

impl InlineScenario {
    fn validate(&self, base: &str) -> Result<(), ConfigError> {
        self.flux.f.validate(&format!("{base}.flux.f"))?;
        self.diffusion.phi.validate(&format!("{base}.diffusion.phi"))?;
        self.initial.validate(&format!("{base}.initial"))?;
        if !(self.support_bound >= 0.0) {
            return Err(schema(
                format!("{base}.support_bound"),
                "must be nonnegative",
            ));
        }
        if let Some((lo, hi)) = self.state_range {
            if !(lo < hi) {
                return Err(schema(
                    format!("{base}.state_range"),
                    "must be an ordered interval",
                ));
            }
        }
        if let Some(s) = &self.sigma {
            s.sigma.validate(&format!("{base}.sigma.sigma"))?;
            if !(s.lipschitz >= 0.0) {
                return Err(schema(format!("{base}.sigma.lipschitz"), "must be nonnegative"));
            }
            if self.support_bound <= 0.0 {
                return Err(schema(
                    format!("{base}.support_bound"),
                    "must be positive when noise is present",
                ));
            }
        }
        if let Some(j) = &self.jumps {
            j.eta_u.validate(&format!("{base}.jumps.eta_u"))?;
            j.eta_z.validate(&format!("{base}.jumps.eta_z"))?;
            if !(0.0..1.0).contains(&j.lipschitz_factor) {
                return Err(schema(
                    format!("{base}.jumps.lipschitz_factor"),
                    "must lie in [0, 1)",
                ));
            }
            if !(j.levy.alpha >= 0.0) || !j.levy.alpha.is_finite() {
                return Err(schema(
                    format!("{base}.jumps.levy.alpha"),
                    "must be finite and nonnegative",
                ));
            }
            if j.levy.alpha > 0.0 && j.levy.sampler.is_none() {
                return Err(schema(
                    format!("{base}.jumps.levy.sampler"),
                    "required when alpha > 0",
                ));
            }
            if let Some(SamplerConfig::InverseCdf { q }) = &j.levy.sampler {
                q.validate(&format!("{base}.jumps.levy.sampler.q"))?;
            }
            if let Some(SamplerConfig::QuantileTable { density, support }) = &j.levy.sampler {
                density.validate(&format!("{base}.jumps.levy.sampler.density"))?;
                if !(support.0 < support.1) {
                    return Err(schema(
                        format!("{base}.jumps.levy.sampler.support"),
                        "must be an ordered interval",
                    ));
                }
            }
            match &j.levy.compensator {
                Some(CompensatorConfig::ClosedForm { c }) => {
                    c.validate(&format!("{base}.jumps.levy.compensator.c"))?
                }
                Some(CompensatorConfig::Quadrature { density, support, tol }) => {
                    density.validate(&format!("{base}.jumps.levy.compensator.density"))?;
                    if !(support.0 < support.1) || !(tol > &0.0) {
                        return Err(schema(
                            format!("{base}.jumps.levy.compensator"),
                            "support must be ordered and tol positive",
                        ));
                    }
                }
                Some(CompensatorConfig::Atoms { atoms }) => {
                    if atoms.iter().any(|(z, w)| !z.is_finite() || !w.is_finite()) {
                        return Err(schema(
                            format!("{base}.jumps.levy.compensator.atoms"),
                            "atoms must be finite",
                        ));
                    }
                }
                None => {
                    if j.levy.alpha > 0.0 {
                        return Err(schema(
                            format!("{base}.jumps.levy.compensator"),
                            "required when alpha > 0",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let config: RunConfig =
        serde_path_to_error::deserialize(&mut deserializer).map_err(|err| {
            let inner = err.inner();
            match inner.classify() {
                serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
                    ConfigError::Parse(inner.to_string())
                }
                _ => ConfigError::Schema {
                    path: err.path().to_string(),
                    message: inner.to_string(),
                },
            }
        })?;
    config.validate()?;
    Ok(config)
}
