//! Model specifications for regime-switching and jump-diffusion price
//! processes, and their exact-in-law simulation.

mod simulate;
mod windows;

pub use simulate::{
    first_passage_detect, simulate_chain, simulate_price_path, CrossingTime, DefaultCause, GridPoint, JumpMark,
    Observation, RegimeSegment, SimConfig, SimPath,
};
pub use windows::build_windows;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{HazardError, Result};
use crate::gaussian::DriftParams;
use crate::quadrature::GaussLegendre;

/// Transition-rate matrix of a finite continuous-time Markov chain.
///
/// Row `i` holds the rates out of state `i`; `q_ii = −Σ_{j≠i} q_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    q: Vec<Vec<f64>>,
}

const ROW_SUM_TOL: f64 = 1e-12;

impl GeneratorMatrix {
    pub fn new(q: Vec<Vec<f64>>) -> Result<Self> {
        validate_generator(q)
    }

    pub fn n_states(&self) -> usize {
        self.q.len()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[from][to]
    }

    /// Total exit rate `q_i = −q_ii`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.q[state][state]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.q
    }
}

/// Checks the generator invariants and returns the validated matrix.
pub fn validate_generator(q: Vec<Vec<f64>>) -> Result<GeneratorMatrix> {
    let n = q.len();
    if n == 0 {
        return Err(HazardError::Validation("generator is empty".into()));
    }
    for (i, row) in q.iter().enumerate() {
        if row.len() != n {
            return Err(HazardError::Validation(format!("generator row {i} has {} entries, expected {n}", row.len())));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(HazardError::Validation(format!("q[{i}][{j}] is not finite")));
            }
            if i != j && v < 0.0 {
                return Err(HazardError::Validation(format!("off-diagonal q[{i}][{j}] = {v} is negative")));
            }
        }
        let sum: f64 = row.iter().sum();
        let scale = row[i].abs().max(1.0);
        if sum.abs() > ROW_SUM_TOL * scale {
            return Err(HazardError::Validation(format!("row {i} sums to {sum}, expected 0")));
        }
    }
    Ok(GeneratorMatrix { q })
}

/// Drift and volatility of the price in one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeParams {
    pub mu: f64,
    pub sigma: f64,
}

impl RegimeParams {
    pub fn drift(&self) -> DriftParams {
        DriftParams { eta: self.mu / self.sigma - self.sigma / 2.0 }
    }

    /// Drift of the log price, `μ − σ²/2`.
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }
}

/// Law of the multiplicative jump factor applied when the chain enters a regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    /// Deterministic factor `z ∈ (0, 1]`.
    PointMass { z: f64 },
    /// Beta(α, β) on (0, 1); both shapes at least 1 so the density is bounded.
    Beta { alpha: f64, beta: f64 },
}

impl Default for JumpLaw {
    fn default() -> Self {
        JumpLaw::PointMass { z: 1.0 }
    }
}

const JUMP_LAW_NODES: usize = 48;
const END_POWER: i32 = 4;
const PIECE_NODES: usize = 24;

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::PointMass { z } if !(z > 0.0 && z <= 1.0) => {
                Err(HazardError::Validation(format!("jump factor must lie in (0, 1], got {z}")))
            }
            JumpLaw::Beta { alpha, beta } if !(alpha >= 1.0 && beta >= 1.0) => {
                Err(HazardError::Validation(format!("beta jump law needs alpha, beta >= 1, got ({alpha}, {beta})")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::PointMass { z } => z,
            JumpLaw::Beta { alpha, beta } => {
                let d = Beta::new(alpha, beta).expect("validated shapes");
                d.sample(rng).max(f64::MIN_POSITIVE)
            }
        }
    }

    fn log_beta_fn(alpha: f64, beta: f64) -> f64 {
        libm::lgamma(alpha) + libm::lgamma(beta) - libm::lgamma(alpha + beta)
    }

    /// Density of the factor (Beta variant only).
    pub fn density(&self, z: f64) -> f64 {
        match *self {
            JumpLaw::PointMass { .. } => 0.0,
            JumpLaw::Beta { alpha, beta } => {
                if z <= 0.0 || z >= 1.0 {
                    return if (z == 0.0 && alpha == 1.0) || (z == 1.0 && beta == 1.0) {
                        (-Self::log_beta_fn(alpha, beta)).exp()
                    } else {
                        0.0
                    };
                }
                ((alpha - 1.0) * z.ln() + (beta - 1.0) * (1.0 - z).ln() - Self::log_beta_fn(alpha, beta)).exp()
            }
        }
    }

    /// `P(Z ≤ z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            JumpLaw::PointMass { z: p } => f64::from(u8::from(z >= p)),
            JumpLaw::Beta { alpha, beta } => {
                if z <= 0.0 {
                    0.0
                } else if z >= 1.0 {
                    1.0
                } else {
                    statrs::function::beta::beta_reg(alpha, beta, z)
                }
            }
        }
    }

    /// `∫ g(z) F(dz)` by fixed-order Gauss–Legendre. The end pieces of a
    /// Beta law use `z = b s⁴` and `1 − z = c s⁴`, so the weight behaves like
    /// `s^{4α−1}` and `s^{4β−1}` there.
    pub fn expect<F: FnMut(f64) -> f64>(&self, g: F) -> f64 {
        self.expect_piecewise(g, &[])
    }

    /// As [`JumpLaw::expect`], with the Beta integral also split at `breaks`
    /// (points outside (0, 1) are ignored).
    pub fn expect_piecewise<F: FnMut(f64) -> f64>(&self, mut g: F, breaks: &[f64]) -> f64 {
        if let JumpLaw::PointMass { z } = *self {
            return g(z);
        }
        thread_local! {
            static RULE: GaussLegendre = GaussLegendre::new(JUMP_LAW_NODES);
            static PIECE: GaussLegendre = GaussLegendre::new(PIECE_NODES);
        }
        let key = if breaks.is_empty() { &RULE } else { &PIECE };
        let mut pts = vec![0.0, 0.5, 1.0];
        pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        key.with(|rule| {
            let mut total = 0.0;
            for p in pts.windows(2) {
                let (a, b) = (p[0], p[1]);
                total += if a == 0.0 {
                    rule.integrate(0.0, 1.0, |s| {
                        let z = b * s.powi(END_POWER);
                        g(z) * self.density(z) * b * f64::from(END_POWER) * s.powi(END_POWER - 1)
                    })
                } else if b == 1.0 {
                    let c = 1.0 - a;
                    rule.integrate(0.0, 1.0, |s| {
                        let z = 1.0 - c * s.powi(END_POWER);
                        g(z) * self.density(z) * c * f64::from(END_POWER) * s.powi(END_POWER - 1)
                    })
                } else {
                    rule.integrate(a, b, |z| g(z) * self.density(z))
                };
            }
            total
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// One regime, no chain.
    PlainGbm,
    /// Regime-dependent (μ, σ), continuous price.
    RegimeSwitching,
    /// Price multiplied by a random factor at each regime switch.
    JumpDiffusion,
    /// Pure chain, no price.
    ChainOnly,
}

/// Which event defines the default time τ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DefaultRule {
    /// First time the price is at or below the barrier.
    Barrier,
    /// First time the chain enters one of the listed regimes.
    RegimeSet { regimes: Vec<usize> },
    /// First time the price is below the barrier while the chain sits in `regime`.
    BarrierInRegime { regime: usize },
}

/// Full model: chain, per-regime dynamics, jump laws, barrier and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub generator: GeneratorMatrix,
    pub regimes: Vec<RegimeParams>,
    /// Indexed by target regime; empty unless `kind == JumpDiffusion`.
    pub jump_laws: Vec<JumpLaw>,
    pub barrier: f64,
    pub x0: f64,
    pub initial_regime: usize,
    pub default_rule: DefaultRule,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.generator.n_states();
        let bad = |m: String| Err(HazardError::Validation(m));
        if self.initial_regime >= n {
            return bad(format!("initial regime {} outside 0..{n}", self.initial_regime));
        }
        if self.kind != ModelKind::ChainOnly {
            if self.regimes.len() != n {
                return bad(format!("{} regime parameter sets for {n} states", self.regimes.len()));
            }
            for (i, r) in self.regimes.iter().enumerate() {
                if !(r.sigma > 0.0 && r.sigma.is_finite()) {
                    return bad(format!("regime {i}: sigma must be positive, got {}", r.sigma));
                }
                if !r.mu.is_finite() {
                    return bad(format!("regime {i}: mu must be finite"));
                }
            }
            if !(self.barrier > 0.0 && self.barrier.is_finite()) {
                return bad(format!("barrier must be positive, got {}", self.barrier));
            }
            if !(self.x0 > self.barrier && self.x0.is_finite()) {
                return bad(format!("x0 = {} must lie above the barrier {}", self.x0, self.barrier));
            }
        }
        if self.kind == ModelKind::JumpDiffusion {
            if self.jump_laws.len() != n {
                return bad(format!("{} jump laws for {n} states", self.jump_laws.len()));
            }
            for law in &self.jump_laws {
                law.validate()?;
            }
        }
        match (&self.default_rule, self.kind) {
            (DefaultRule::RegimeSet { regimes }, ModelKind::ChainOnly) => {
                if let Some(r) = regimes.iter().find(|&&r| r >= n) {
                    return bad(format!("target regime {r} outside 0..{n}"));
                }
            }
            (DefaultRule::RegimeSet { .. }, _) | (_, ModelKind::ChainOnly) => {
                return bad("chain-only models use the regime_set rule and vice versa".into());
            }
            (DefaultRule::BarrierInRegime { regime }, k) => {
                if *regime >= n {
                    return bad(format!("default regime {regime} outside 0..{n}"));
                }
                if k != ModelKind::RegimeSwitching {
                    return bad("barrier_in_regime requires a regime-switching model".into());
                }
            }
            (DefaultRule::Barrier, _) => {}
        }
        Ok(())
    }

    pub fn params(&self, regime: usize) -> RegimeParams {
        self.regimes[regime]
    }

    pub fn jump_law(&self, regime: usize) -> JumpLaw {
        self.jump_laws.get(regime).copied().unwrap_or_default()
    }
}

/// Deterministic observation times, plus whether chain jump times are observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSchedule {
    times: Vec<f64>,
    pub observe_regime_jumps: bool,
}

impl ObservationSchedule {
    pub fn new(times: Vec<f64>, observe_regime_jumps: bool) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(HazardError::Validation("observation times must start at 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(HazardError::Validation("observation times must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HazardError::Validation("observation times must be strictly increasing".into()));
        }
        Ok(Self { times, observe_regime_jumps })
    }

    /// `0, step, 2 step, …, horizon` (the horizon is always included).
    pub fn uniform(step: f64, horizon: f64, observe_regime_jumps: bool) -> Result<Self> {
        if !(step > 0.0) || !(horizon >= 0.0) {
            return Err(HazardError::Validation("step must be positive, horizon non-negative".into()));
        }
        let mut times = vec![0.0];
        let mut k = 1;
        loop {
            let t = k as f64 * step;
            if t >= horizon * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        if horizon > 0.0 {
            times.push(horizon);
        }
        Self::new(times, observe_regime_jumps)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty schedule")
    }

    /// First observation time strictly after `t`, or the horizon.
    pub fn next_after(&self, t: f64) -> f64 {
        self.times.iter().copied().find(|&s| s > t).unwrap_or_else(|| self.horizon())
    }
}
