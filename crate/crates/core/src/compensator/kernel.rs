//! Survival kernels `f(x, z, u) = P_x(τ > u | g(V_1, z) > u)` bound to the
//! frozen data `(X_S, V_2)` of one window.

use crate::compensator::named::expected_kill;
use crate::compensator::{DurationLaw, LocalJumpWindow};
use crate::error::{contract, HazardError, Result};
use crate::gaussian::{killed_density, passage_density, psi_complement_unchecked, psi_unchecked};
use crate::markov::{DefaultRule, JumpLaw, ModelKind, ModelSpec};
use crate::quadrature::{integrate_adaptive, GaussLegendre};

/// A survival kernel as a function of the elapsed time `u = t − S`.
pub trait SurvivalKernel {
    /// `f(u)`.
    fn survival(&self, u: f64) -> f64;

    /// `∂f/∂u`.
    fn survival_rate(&self, u: f64) -> f64;

    /// `h(u) = f(u−) − P(τ > u | g(V_1, z) = u)`.
    fn gap(&self, u: f64) -> Result<f64>;

    /// `P(τ ∈ (u, u+h] | τ > u, T − S > u)`, the quantity whose rate limit
    /// defines the intensity.
    fn conditional_default(&self, u: f64, h: f64) -> Result<f64> {
        let f0 = self.survival(u);
        Ok((f0 - self.survival(u + h)) / f0)
    }
}

/// `f(u) = e^{−λu}`, `h ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialKernel {
    pub rate: f64,
}

impl SurvivalKernel for ExponentialKernel {
    fn survival(&self, u: f64) -> f64 {
        (-self.rate * u).exp()
    }
    fn survival_rate(&self, u: f64) -> f64 {
        -self.rate * (-self.rate * u).exp()
    }
    fn gap(&self, _u: f64) -> Result<f64> {
        Ok(0.0)
    }
    fn conditional_default(&self, _u: f64, h: f64) -> Result<f64> {
        Ok(-(-self.rate * h).exp_m1())
    }
}

/// Continuous first passage of a GBM started at distance `y < 0` (volatility
/// units) from the barrier, `f = ψ(η, u, y)`, `h ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct GbmKernel {
    pub eta: f64,
    pub y: f64,
}

impl GbmKernel {
    pub fn new(eta: f64, y: f64) -> Result<Self> {
        if !(y < 0.0) {
            return contract(format!("start must lie above the barrier (y = {y})"));
        }
        Ok(Self { eta, y })
    }

    /// `ψ(u) − ψ(v)` for `v ≥ u`, without cancellation near one.
    pub(crate) fn drop_between(&self, u: f64, v: f64) -> f64 {
        let fu = self.survival(u);
        if fu > 0.5 {
            self.complement(v) - self.complement(u)
        } else {
            fu - self.survival(v)
        }
    }

    fn complement(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            psi_complement_unchecked(self.eta, u, self.y)
        }
    }
}

impl SurvivalKernel for GbmKernel {
    fn survival(&self, u: f64) -> f64 {
        if u <= 0.0 {
            1.0
        } else {
            psi_unchecked(self.eta, u, self.y)
        }
    }
    fn survival_rate(&self, u: f64) -> f64 {
        -passage_density(self.eta, u, self.y)
    }
    fn gap(&self, _u: f64) -> Result<f64> {
        Ok(0.0)
    }
    fn conditional_default(&self, u: f64, h: f64) -> Result<f64> {
        Ok(self.drop_between(u, u + h) / self.survival(u))
    }
}

/// One possible exit of the current regime: rate `q_ij` and the jump law of
/// the factor applied on entry to `j`.
#[derive(Debug, Clone, Copy)]
pub struct Exit {
    pub rate: f64,
    pub law: JumpLaw,
}

/// Jump diffusion between chain jumps: continuous passage kernel `ψ` plus a
/// gap `h(u) = P(τ = T_1 | T_1 = u)` for `u < V_2`, zero at the
/// deterministic endpoint.
#[derive(Debug, Clone)]
pub struct JumpDiffusionKernel {
    pub diffusion: GbmKernel,
    pub sigma: f64,
    pub residual: f64,
    pub exits: Vec<Exit>,
}

const KILL_TOL: f64 = 1e-12;
const LAPLACE_NODES: usize = 8;

impl JumpDiffusionKernel {
    pub fn exit_rate(&self) -> f64 {
        self.exits.iter().map(|e| e.rate).sum()
    }

    /// Upper coordinate `(1/σ) log(x / (z X_S)) = y − log(z)/σ`.
    fn post_jump_coord(&self, z: f64) -> f64 {
        self.diffusion.y - z.ln() / self.sigma
    }

    /// `P(inf_{s≤u} W^(η) > y, W^(η)_u ≤ y2)` by quadrature of the killed
    /// transition density; independent of the closed-form joint law.
    fn killed_mass(&self, u: f64, y2: f64) -> Result<f64> {
        let (eta, y) = (self.diffusion.eta, self.diffusion.y);
        if y2 <= y {
            return Ok(0.0);
        }
        if u <= 0.0 {
            return Ok(if y2 > 0.0 {
                1.0
            } else if y2 == 0.0 {
                0.5
            } else {
                0.0
            });
        }
        let sd = u.sqrt();
        let hi = y2.min(eta * u + 40.0 * sd).max(y);
        let mut breaks = vec![y];
        let centre = eta * u;
        for b in [centre - 2.0 * sd, centre, centre + 2.0 * sd] {
            if b > y && b < hi {
                breaks.push(b);
            }
        }
        breaks.push(hi);
        if hi <= y {
            return Ok(0.0);
        }
        let r = integrate_adaptive(|w| killed_density(eta, u, y, w), &breaks, KILL_TOL, 2000)?;
        Ok(r.value)
    }

    /// `E[killed_mass(u, y − log Z / σ)]` for a continuous law, as one
    /// integral of the killed density against `P(Z ≤ e^{σ(y − w)})`.
    fn killed_mass_under(&self, u: f64, law: &JumpLaw) -> Result<f64> {
        let (eta, y, sigma) = (self.diffusion.eta, self.diffusion.y, self.sigma);
        if u <= 0.0 {
            return Ok(law.cdf((sigma * y).exp()));
        }
        let sd = u.sqrt();
        let hi = eta * u + 40.0 * sd;
        if hi <= y {
            return Ok(0.0);
        }
        let mut breaks = vec![y];
        for b in [eta * u - 2.0 * sd, eta * u, eta * u + 2.0 * sd] {
            if b > y && b < hi {
                breaks.push(b);
            }
        }
        breaks.push(hi);
        let f = |w: f64| killed_density(eta, u, y, w) * law.cdf((sigma * (y - w)).exp());
        Ok(integrate_adaptive(f, &breaks, KILL_TOL, 2000)?.value)
    }

    /// `Σ_j q_ij ∫ F_j(dz) φ(η, u, y, y − log z / σ)` with the closed-form joint law.
    pub fn jump_kill_rate(&self, u: f64) -> f64 {
        let (eta, y) = (self.diffusion.eta, self.diffusion.y);
        self.exits.iter().map(|e| e.rate * expected_kill(&e.law, self.sigma, eta, u, y)).sum()
    }
}

impl SurvivalKernel for JumpDiffusionKernel {
    fn survival(&self, u: f64) -> f64 {
        self.diffusion.survival(u)
    }

    fn survival_rate(&self, u: f64) -> f64 {
        self.diffusion.survival_rate(u)
    }

    fn gap(&self, u: f64) -> Result<f64> {
        let q = self.exit_rate();
        if u >= self.residual || q <= 0.0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for e in &self.exits {
            if e.rate <= 0.0 {
                continue;
            }
            let v = match e.law {
                JumpLaw::PointMass { z } => self.killed_mass(u, self.post_jump_coord(z))?,
                JumpLaw::Beta { .. } => self.killed_mass_under(u, &e.law)?,
            };
            total += e.rate / q * v;
        }
        Ok(total)
    }

    /// Probability that the first of {diffusive crossing, chain jump} in
    /// `(u, u+h]` is a default: the diffusion crosses before any jump, or the
    /// jump lands below the barrier. Default after a surviving jump inside
    /// the same step is `O(h^{3/2})` and excluded.
    fn conditional_default(&self, u: f64, h: f64) -> Result<f64> {
        let q = self.exit_rate();
        let f0 = self.survival(u);
        let rule = GaussLegendre::new(LAPLACE_NODES);
        let jumps = rule.integrate(u, u + h, |s| {
            let kill = if q > 0.0 { self.jump_kill_rate(s) / q } else { 0.0 };
            q * (-q * (s - u)).exp() * (self.diffusion.drop_between(u, s) + kill)
        });
        Ok(((-q * h).exp() * self.diffusion.drop_between(u, u + h) + jumps) / f0)
    }
}

/// Kernel of a price model on one window.
#[derive(Debug, Clone)]
pub enum ModelKernel {
    Gbm(GbmKernel),
    JumpDiffusion(JumpDiffusionKernel),
}

impl ModelKernel {
    /// Builds the kernel and the law of `T − S` for `window` under `model`.
    pub fn for_window(model: &ModelSpec, window: &LocalJumpWindow) -> Result<(Self, DurationLaw)> {
        if model.kind == ModelKind::ChainOnly {
            return Err(HazardError::Contract("chain-only models have no price kernel".into()));
        }
        if model.default_rule != DefaultRule::Barrier {
            return contract("price kernels describe the barrier default rule only");
        }
        if !(window.x_start > model.barrier) {
            return contract(format!("window state {} is not above the barrier {}", window.x_start, model.barrier));
        }
        let p = model.params(window.regime);
        let y = (model.barrier / window.x_start).ln() / p.sigma;
        let diffusion = GbmKernel::new(p.drift().eta, y)?;
        let rate = match model.kind {
            ModelKind::PlainGbm => 0.0,
            _ => model.generator.exit_rate(window.regime),
        };
        let law = DurationLaw::new(rate, window.residual);
        let kernel = match model.kind {
            ModelKind::JumpDiffusion => {
                let i = window.regime;
                let exits = (0..model.generator.n_states())
                    .filter(|&j| j != i)
                    .map(|j| Exit { rate: model.generator.rate(i, j), law: model.jump_law(j) })
                    .collect();
                ModelKernel::JumpDiffusion(JumpDiffusionKernel {
                    diffusion,
                    sigma: p.sigma,
                    residual: window.residual,
                    exits,
                })
            }
            _ => ModelKernel::Gbm(diffusion),
        };
        Ok((kernel, law))
    }
}

impl SurvivalKernel for ModelKernel {
    fn survival(&self, u: f64) -> f64 {
        match self {
            ModelKernel::Gbm(k) => k.survival(u),
            ModelKernel::JumpDiffusion(k) => k.survival(u),
        }
    }
    fn survival_rate(&self, u: f64) -> f64 {
        match self {
            ModelKernel::Gbm(k) => k.survival_rate(u),
            ModelKernel::JumpDiffusion(k) => k.survival_rate(u),
        }
    }
    fn gap(&self, u: f64) -> Result<f64> {
        match self {
            ModelKernel::Gbm(k) => k.gap(u),
            ModelKernel::JumpDiffusion(k) => k.gap(u),
        }
    }
    fn conditional_default(&self, u: f64, h: f64) -> Result<f64> {
        match self {
            ModelKernel::Gbm(k) => k.conditional_default(u, h),
            ModelKernel::JumpDiffusion(k) => k.conditional_default(u, h),
        }
    }
}
