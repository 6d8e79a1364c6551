//! Compensators of hitting times for processes driven by a finite-state
//! chain, from the chain's Lévy system (clock `U_t = t`, kernel given by the
//! off-diagonal generator entries).

use serde::Serialize;

use crate::compensator::CompensatorPath;
use crate::error::{contract, Result};
use crate::gaussian::phi_std;
use crate::markov::{DefaultRule, GeneratorMatrix, ModelKind, ModelSpec, RegimeSegment, SimPath};
use crate::quadrature::GaussLegendre;

/// Target set `D` of the product state (price, regime).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSet {
    /// A set of regimes, whatever the price.
    Regimes { regimes: Vec<usize> },
    /// Price strictly below `level` while the chain is in `regime`.
    PriceBelow { level: f64, regime: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevySystemSpec {
    pub generator: GeneratorMatrix,
    pub target: TargetSet,
}

impl LevySystemSpec {
    pub fn new(generator: GeneratorMatrix, target: TargetSet) -> Result<Self> {
        let n = generator.n_states();
        let bad = match &target {
            TargetSet::Regimes { regimes } => regimes.iter().any(|&r| r >= n),
            TargetSet::PriceBelow { regime, level } => *regime >= n || !(level.is_finite()),
        };
        if bad {
            return contract("target set refers to a state outside the chain");
        }
        Ok(Self { generator, target })
    }

    /// Derives the Lévy system of a model's default rule.
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        let target = match (&model.default_rule, model.kind) {
            (DefaultRule::RegimeSet { regimes }, _) => TargetSet::Regimes { regimes: regimes.clone() },
            (DefaultRule::BarrierInRegime { regime }, ModelKind::RegimeSwitching) => {
                TargetSet::PriceBelow { level: model.barrier, regime: *regime }
            }
            _ => return contract("the default rule has no chain-driven Lévy system"),
        };
        Self::new(model.generator.clone(), target)
    }

    /// `K(i, {j})`, zero on the diagonal.
    pub fn kernel_mass(&self, from: usize, to: usize) -> f64 {
        if from == to {
            0.0
        } else {
            self.generator.rate(from, to)
        }
    }

    /// `P_y(τ = 0)` for a state outside `D`. Every chain state has a positive
    /// holding time, and the price boundary `{x = level}` is visited on a
    /// Lebesgue-null time set, so this is zero.
    pub fn entry_at_zero(&self, _x: f64, _regime: usize) -> f64 {
        0.0
    }

    /// `∫ (1_D + 1_{D^c} P_·(τ = 0)) K((x, i), ·)`: the rate of jumping into `D`.
    pub fn entry_rate(&self, x: f64, regime: usize) -> f64 {
        match &self.target {
            TargetSet::Regimes { regimes } => regimes.iter().map(|&j| self.kernel_mass(regime, j)).sum(),
            TargetSet::PriceBelow { level, regime: d } => {
                if regime != *d && x <= *level {
                    self.kernel_mass(regime, *d)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Compensator of the first entry of the chain into a set of regimes:
/// density `Σ_{j∈D} q_{ε(t) j}` up to `τ`, zero if the chain starts in `D`.
pub fn chain_hit_compensator(spec: &LevySystemSpec, segments: &[RegimeSegment], tau: f64) -> Result<CompensatorPath> {
    let TargetSet::Regimes { regimes } = &spec.target else {
        return contract("chain_hit_compensator needs a regime target set");
    };
    let Some(first) = segments.first() else {
        return contract("no regime segments");
    };
    if regimes.contains(&first.regime) {
        return CompensatorPath::new(vec![0.0], vec![0.0], vec![], 0.0);
    }
    let mut knots = Vec::with_capacity(2 * segments.len());
    let mut density = Vec::with_capacity(2 * segments.len());
    for s in segments {
        if s.start >= tau {
            break;
        }
        let rate = spec.entry_rate(0.0, s.regime);
        knots.push(s.start);
        density.push(rate);
        knots.push(s.end.min(tau));
        density.push(rate);
    }
    CompensatorPath::new(knots, density, vec![], tau)
}

/// Default-region intensity `1{ε ≠ d} q_{ε d} 1{X ≤ x}`.
pub fn intensity_default_region(spec: &LevySystemSpec, x_t: f64, regime: usize) -> f64 {
    spec.entry_rate(x_t, regime)
}

const OCCUPATION_NODES: usize = 16;
/// Bridges whose endpoints are this many standard deviations from the level
/// are treated as entirely above or below it.
const OCCUPATION_CUTOFF: f64 = 9.0;

/// Expected time a Brownian bridge from `a` to `b` over `[0, dt]` with
/// volatility `sigma` spends below `level`, restricted to `[0, upto]`.
pub fn bridge_occupation_below(
    a: f64,
    b: f64,
    sigma: f64,
    dt: f64,
    upto: f64,
    level: f64,
    rule: &GaussLegendre,
) -> f64 {
    let upto = upto.clamp(0.0, dt);
    if upto <= 0.0 {
        return 0.0;
    }
    let spread = OCCUPATION_CUTOFF * sigma * (0.25 * dt).sqrt();
    if a.min(b) > level + spread {
        return 0.0;
    }
    if a.max(b) < level - spread {
        return upto;
    }
    rule.integrate(0.0, upto, |s| {
        let mean = a + (b - a) * s / dt;
        let var = sigma * sigma * s * (dt - s) / dt;
        if var <= 0.0 {
            if mean <= level {
                1.0
            } else {
                0.0
            }
        } else {
            phi_std((level - mean) / var.sqrt())
        }
    })
}

/// `E[A(t ∧ τ) | simulated grid]` for the default-region compensator, with
/// the price between grid points integrated out as a Brownian bridge.
/// Returns one value per entry of `times`.
pub fn default_region_compensator(
    spec: &LevySystemSpec,
    model: &ModelSpec,
    path: &SimPath,
    times: &[f64],
) -> Result<Vec<f64>> {
    let TargetSet::PriceBelow { level, regime: d } = spec.target else {
        return contract("default_region_compensator needs a price target set");
    };
    let log_level = level.ln();
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(OCCUPATION_NODES);
    }
    RULE.with(|rule| {
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let stop = t.min(path.tau);
            let mut acc = 0.0;
            for w in path.grid.windows(2) {
                let (g0, g1) = (w[0], w[1]);
                if g0.t >= stop {
                    break;
                }
                let regime = g0.regime;
                let rate = spec.kernel_mass(regime, d);
                if regime == d || rate == 0.0 {
                    continue;
                }
                let sigma = model.params(regime).sigma;
                let dt = g1.t - g0.t;
                // a jump at g1 changes the regime but not the continuous price
                let occ = bridge_occupation_below(g0.log_x, g1.log_x, sigma, dt, stop - g0.t, log_level, rule);
                acc += rate * occ;
            }
            out.push(acc);
        }
        Ok(out)
    })
}
