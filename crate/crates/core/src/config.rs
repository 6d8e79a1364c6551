//! JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compensator::{Engine, LocalJumpWindow, WindowEnd};
use crate::error::{HazardError, Result};
use crate::markov::{
    validate_generator, DefaultRule, JumpLaw, ModelKind, ModelSpec, ObservationSchedule, RegimeParams, SimConfig,
};
use crate::verification::{VerifySettings, DEFAULT_Z_MAX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub generator: Vec<Vec<f64>>,
    #[serde(default)]
    pub regimes: Vec<RegimeParams>,
    #[serde(default)]
    pub jump_laws: Vec<JumpLaw>,
    #[serde(default)]
    pub barrier: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub initial_regime: usize,
    #[serde(default)]
    pub default_rule: Option<DefaultRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Explicit observation times starting at 0; overrides `step`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "yes")]
    pub observe_regime_jumps: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default)]
    pub start: f64,
    pub end: f64,
    /// Defaults to the model's `x0`.
    #[serde(default)]
    pub x_start: Option<f64>,
    /// Defaults to the model's initial regime.
    #[serde(default)]
    pub regime: Option<usize>,
    /// Defaults to `end − start`.
    #[serde(default)]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityConfig {
    #[serde(default)]
    pub engine: Engine,
    pub window: WindowConfig,
    #[serde(default = "default_knots")]
    pub knots: usize,
}

fn default_knots() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub n_paths: usize,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_z")]
    pub z_max: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default = "default_window_knots")]
    pub knots_per_window: usize,
    #[serde(default = "one")]
    pub bias_factor: f64,
    #[serde(default)]
    pub wrong_regime_sigma: bool,
    #[serde(default = "yes")]
    pub orthogonality: bool,
}

fn default_times() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_z() -> f64 {
    DEFAULT_Z_MAX
}
fn default_window_knots() -> usize {
    32
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_paths: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub simulation: SimConfig,
    #[serde(default)]
    pub intensity: Option<IntensityConfig>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn at(text: &str, key: &str, e: HazardError) -> HazardError {
    let msg = match &e {
        HazardError::Validation(m) | HazardError::Config(m) | HazardError::Domain(m) => m.clone(),
        other => other.to_string(),
    };
    match line_of(text, key) {
        Some(l) => HazardError::Config(format!("line {l} ({key}): {msg}")),
        None => HazardError::Config(format!("{key}: {msg}")),
    }
}

impl RunConfig {
    /// Parses and validates a configuration; errors carry the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| HazardError::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HazardError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self, text: &str) -> Result<()> {
        let model = self.model_spec().map_err(|e| at(text, model_key(&e), e))?;
        self.schedule().map_err(|e| at(text, "schedule", e))?;
        let s = &self.simulation;
        if !(s.max_step > 0.0 && s.max_step.is_finite()) {
            return Err(at(text, "max_step", HazardError::Validation("max_step must be positive".into())));
        }
        if let Some(i) = &self.intensity {
            self.window(i, &model).map_err(|e| at(text, "window", e))?;
            if i.knots == 0 {
                return Err(at(text, "knots", HazardError::Validation("knots must be positive".into())));
            }
        }
        if let Some(v) = &self.verify {
            let settings = self.settings_for(v, v.seed.unwrap_or(0));
            crate::verification::check_settings(&model, &self.schedule()?, &settings)
                .map_err(|e| at(text, "verify", e))?;
        }
        if let Some(sim) = &self.simulate {
            if sim.n_paths == 0 {
                return Err(at(text, "simulate", HazardError::Validation("n_paths must be positive".into())));
            }
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let generator = validate_generator(m.generator.clone())?;
        let default_rule = match (&m.default_rule, m.kind) {
            (Some(r), _) => r.clone(),
            (None, ModelKind::ChainOnly) => {
                return Err(HazardError::Validation("chain-only models need a regime_set default rule".into()))
            }
            (None, _) => DefaultRule::Barrier,
        };
        let spec = ModelSpec {
            kind: m.kind,
            generator,
            regimes: m.regimes.clone(),
            jump_laws: m.jump_laws.clone(),
            barrier: m.barrier,
            x0: m.x0,
            initial_regime: m.initial_regime,
            default_rule,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn schedule(&self) -> Result<ObservationSchedule> {
        let s = &self.schedule;
        match (&s.times, s.step, s.horizon) {
            (Some(times), None, None) => ObservationSchedule::new(times.clone(), s.observe_regime_jumps),
            (None, Some(step), Some(horizon)) => ObservationSchedule::uniform(step, horizon, s.observe_regime_jumps),
            _ => Err(HazardError::Validation("give either times, or step and horizon".into())),
        }
    }

    pub fn window(&self, i: &IntensityConfig, model: &ModelSpec) -> Result<LocalJumpWindow> {
        let w = &i.window;
        if !(w.end > w.start && w.start >= 0.0 && w.end.is_finite()) {
            return Err(HazardError::Validation(format!("window ({}, {}] is empty", w.start, w.end)));
        }
        let len = w.end - w.start;
        let residual = w.residual.unwrap_or(len);
        if !(residual >= len) {
            return Err(HazardError::Validation(format!(
                "residual {residual} is shorter than the window length {len}"
            )));
        }
        let regime = w.regime.unwrap_or(model.initial_regime);
        if regime >= model.generator.n_states() {
            return Err(HazardError::Validation(format!("window regime {regime} does not exist")));
        }
        let x_start = w.x_start.unwrap_or(model.x0);
        if model.kind == ModelKind::ChainOnly {
            return Err(HazardError::Validation("intensity curves need a price model".into()));
        }
        if !(x_start > model.barrier) {
            return Err(HazardError::Validation(format!(
                "window state {x_start} is not above the barrier {}",
                model.barrier
            )));
        }
        Ok(LocalJumpWindow {
            start: w.start,
            end: w.end,
            x_start,
            regime,
            residual,
            survivor: 1.0,
            end_reason: if residual == len { WindowEnd::Observation } else { WindowEnd::RegimeJump },
        })
    }

    pub fn settings_for(&self, v: &VerifyConfig, seed: u64) -> VerifySettings {
        VerifySettings {
            n_paths: v.n_paths,
            times: v.times.clone(),
            z_max: v.z_max,
            seed,
            engine: v.engine,
            knots_per_window: v.knots_per_window,
            bias_factor: v.bias_factor,
            wrong_regime_sigma: v.wrong_regime_sigma,
            orthogonality: v.orthogonality,
        }
    }
}

fn model_key(e: &HazardError) -> &'static str {
    let msg = e.to_string();
    if msg.contains("row") || msg.contains("q[") || msg.contains("generator") {
        "generator"
    } else if msg.contains("sigma") || msg.contains("mu") || msg.contains("parameter set") {
        "regimes"
    } else if msg.contains("jump") || msg.contains("alpha") || msg.contains("beta") || msg.contains("factor") {
        "jump_laws"
    } else if ["rule", "barrier_in_regime", "target regime", "default regime"].iter().any(|k| msg.contains(k)) {
        "default_rule"
    } else if msg.contains("x0") {
        "x0"
    } else if msg.contains("barrier") {
        "barrier"
    } else if msg.contains("initial regime") {
        "initial_regime"
    } else {
        "model"
    }
}
