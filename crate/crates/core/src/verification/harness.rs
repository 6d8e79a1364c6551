use serde::Serialize;

use crate::compensator::{window_increments, Engine};
use crate::error::{HazardError, Result};
use crate::levy::{chain_hit_compensator, default_region_compensator, LevySystemSpec};
use crate::markov::{
    build_windows, simulate_price_path, DefaultCause, DefaultRule, ModelKind, ModelSpec, ObservationSchedule,
    SimConfig, SimPath,
};
use crate::verification::{
    map_paths, martingale_residual_test, orthogonality_test, Bucketing, MartingaleReport, ObservedState, PathOutcome,
    DEFAULT_Z_MAX, MIN_PATHS,
};

/// Which compensator a model's default rule calls for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Chain entering a set of regimes.
    ChainHit,
    /// Barrier passage seen through observation windows.
    WindowedBarrier,
    /// Price below a level while the chain enters the default regime.
    DefaultRegion,
}

impl Scenario {
    pub fn for_model(model: &ModelSpec) -> Scenario {
        match (&model.default_rule, model.kind) {
            (DefaultRule::RegimeSet { .. }, _) | (_, ModelKind::ChainOnly) => Scenario::ChainHit,
            (DefaultRule::BarrierInRegime { .. }, _) => Scenario::DefaultRegion,
            (DefaultRule::Barrier, _) => Scenario::WindowedBarrier,
        }
    }

    fn bucketing(self) -> Bucketing {
        match self {
            Scenario::ChainHit => Bucketing::Regime,
            _ => Bucketing::RegimePrice,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySettings {
    pub n_paths: usize,
    pub times: Vec<f64>,
    pub z_max: f64,
    pub seed: u64,
    pub engine: Engine,
    /// Knots per window for the sampled engines.
    pub knots_per_window: usize,
    /// Multiplies every compensator (1 for the true one).
    pub bias_factor: f64,
    /// Compute the compensator with each regime's σ replaced by the next
    /// regime's.
    pub wrong_regime_sigma: bool,
    pub orthogonality: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            times: vec![0.5, 1.0, 2.0],
            z_max: DEFAULT_Z_MAX,
            seed: 0,
            engine: Engine::Named,
            knots_per_window: 32,
            bias_factor: 1.0,
            wrong_regime_sigma: false,
            orthogonality: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub scenario: Scenario,
    pub residual: MartingaleReport,
    pub orthogonality: Option<MartingaleReport>,
}

impl VerifyOutcome {
    pub fn pass(&self) -> bool {
        self.residual.pass && self.orthogonality.as_ref().is_none_or(|r| r.pass)
    }
}

fn settings_error(msg: impl Into<String>) -> HazardError {
    HazardError::Config(msg.into())
}

/// Checks that `settings` can be run against `model` and `schedule`.
pub fn check_settings(model: &ModelSpec, schedule: &ObservationSchedule, settings: &VerifySettings) -> Result<()> {
    model.validate()?;
    if settings.n_paths < MIN_PATHS {
        return Err(HazardError::Validation(format!(
            "n_paths = {} is below the minimum of {MIN_PATHS}",
            settings.n_paths
        )));
    }
    if settings.times.is_empty() {
        return Err(settings_error("at least one test time is required"));
    }
    if settings.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(settings_error("test times must be strictly increasing"));
    }
    let horizon = schedule.horizon();
    if settings.times.iter().any(|&t| !(t > 0.0 && t <= horizon)) {
        return Err(settings_error(format!("test times must lie in (0, {horizon}]")));
    }
    if !(settings.z_max > 0.0) {
        return Err(settings_error("z_max must be positive"));
    }
    if !(settings.bias_factor > 0.0 && settings.bias_factor.is_finite()) {
        return Err(settings_error("bias_factor must be positive"));
    }
    if settings.wrong_regime_sigma && (model.kind == ModelKind::ChainOnly || model.regimes.len() < 2) {
        return Err(settings_error("wrong_regime_sigma needs a price model with at least two regimes"));
    }
    if Scenario::for_model(model) == Scenario::WindowedBarrier
        && model.kind != ModelKind::PlainGbm
        && !schedule.observe_regime_jumps
    {
        return Err(settings_error("barrier compensators of chain-driven models need observed regime jumps"));
    }
    Ok(())
}

/// The model used to compute compensators, possibly perturbed.
fn compensator_model(model: &ModelSpec, settings: &VerifySettings) -> ModelSpec {
    let mut m = model.clone();
    if settings.wrong_regime_sigma {
        let n = m.regimes.len();
        for r in 0..n {
            m.regimes[r].sigma = model.regimes[(r + 1) % n].sigma;
        }
    }
    m
}

fn observed_state(path: &SimPath, t: f64, chain_only: bool) -> ObservedState {
    let alive = path.tau > t;
    if chain_only {
        return ObservedState { alive, regime: path.regime_at(t), log_x: 0.0 };
    }
    let last = path.observations.iter().rev().find(|o| o.time <= t);
    match last {
        Some(o) => ObservedState { alive, regime: o.regime, log_x: o.log_x },
        None => ObservedState { alive, regime: path.regime_at(0.0), log_x: 0.0 },
    }
}

/// `A(t_k ∧ τ)` for one path, with the skipped floor mass.
fn path_compensator(
    scenario: Scenario,
    model: &ModelSpec,
    comp_model: &ModelSpec,
    schedule: &ObservationSchedule,
    settings: &VerifySettings,
    path: &SimPath,
) -> Result<(Vec<f64>, f64)> {
    let times = &settings.times;
    match scenario {
        Scenario::ChainHit => {
            let spec = LevySystemSpec::from_model(comp_model)?;
            let a = chain_hit_compensator(&spec, &path.segments, path.tau)?;
            Ok((times.iter().map(|&t| a.value_at(t)).collect(), 0.0))
        }
        Scenario::DefaultRegion => {
            let spec = LevySystemSpec::from_model(comp_model)?;
            Ok((default_region_compensator(&spec, comp_model, path, times)?, 0.0))
        }
        Scenario::WindowedBarrier => {
            let mut acc = vec![0.0; times.len()];
            let mut skipped = 0.0;
            let mut offsets = Vec::with_capacity(times.len());
            let mut slots = Vec::with_capacity(times.len());
            for w in build_windows(path, schedule, model) {
                offsets.clear();
                slots.clear();
                for (k, &t) in times.iter().enumerate() {
                    if t > w.start {
                        offsets.push(t.min(w.end) - w.start);
                        slots.push(k);
                    }
                }
                if offsets.is_empty() {
                    continue;
                }
                let (inc, s) = window_increments(comp_model, &w, settings.engine, settings.knots_per_window, &offsets)?;
                skipped += s;
                for (&k, v) in slots.iter().zip(inc) {
                    acc[k] += v;
                }
            }
            Ok((acc, skipped))
        }
    }
}

/// Simulates `settings.n_paths` paths and collects their residual ingredients.
pub fn simulate_outcomes(
    model: &ModelSpec,
    schedule: &ObservationSchedule,
    sim: &SimConfig,
    settings: &VerifySettings,
) -> Result<(Vec<PathOutcome>, f64)> {
    check_settings(model, schedule, settings)?;
    let scenario = Scenario::for_model(model);
    let comp_model = compensator_model(model, settings);
    let chain_only = model.kind == ModelKind::ChainOnly;
    let results = map_paths(settings.n_paths, settings.seed, |_, rng| {
        let path = simulate_price_path(model, schedule, sim, rng)?;
        let (mut a, skipped) = path_compensator(scenario, model, &comp_model, schedule, settings, &path)?;
        for v in &mut a {
            *v *= settings.bias_factor;
        }
        let counted = match scenario {
            Scenario::WindowedBarrier => path.tau.is_finite(),
            // only entries by a chain jump: the totally inaccessible part
            _ => path.cause == Some(DefaultCause::Jump),
        };
        let state = settings.times.iter().map(|&t| observed_state(&path, t, chain_only)).collect();
        Ok((PathOutcome { tau: path.tau, counted, compensator: a, state }, skipped))
    })?;
    let skipped = results.iter().map(|r| r.1).sum();
    Ok((results.into_iter().map(|r| r.0).collect(), skipped))
}

/// Full verification run: residual test and, if enabled, orthogonality test.
pub fn run_verification(
    model: &ModelSpec,
    schedule: &ObservationSchedule,
    sim: &SimConfig,
    settings: &VerifySettings,
) -> Result<VerifyOutcome> {
    let scenario = Scenario::for_model(model);
    let (outcomes, skipped) = simulate_outcomes(model, schedule, sim, settings)?;
    let mut residual = martingale_residual_test(&outcomes, &settings.times, settings.z_max)?;
    residual.skipped_mass = skipped;
    let orthogonality = if settings.orthogonality {
        let mut r = orthogonality_test(&outcomes, &settings.times, scenario.bucketing(), settings.z_max)?;
        r.skipped_mass = skipped;
        Some(r)
    } else {
        None
    };
    Ok(VerifyOutcome { scenario, residual, orthogonality })
}
