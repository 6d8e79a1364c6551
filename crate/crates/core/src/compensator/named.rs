//! Closed-form intensities of the standard examples, written directly from
//! `ψ`, `ψ_t` and `φ` so they can be checked against the generic route.

use crate::compensator::{LocalJumpWindow, F_FLOOR};
use crate::error::{contract, HazardError, Result};
use crate::gaussian::{passage_density, phi_unchecked, psi_complement_unchecked, psi_unchecked};
use crate::markov::{JumpLaw, ModelKind, ModelSpec};
use crate::quadrature::GaussLegendre;

fn diffusion_ratio(eta: f64, u: f64, y: f64) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    let psi = psi_unchecked(eta, u, y);
    if !(psi > F_FLOOR) {
        return Err(HazardError::SingularKernel { from: u, to: u });
    }
    Ok(passage_density(eta, u, y) / psi)
}

fn window_coords(window: &LocalJumpWindow, model: &ModelSpec, t: f64) -> Result<(f64, f64, f64)> {
    // t = S gives the right limit
    if !(t >= window.start && t <= window.end) {
        return contract(format!("t = {t} outside [{}, {}]", window.start, window.end));
    }
    let (eta, y) = frozen_coords(window, model)?;
    Ok((eta, y, t - window.start))
}

fn frozen_coords(window: &LocalJumpWindow, model: &ModelSpec) -> Result<(f64, f64)> {
    if !(window.x_start > model.barrier) {
        return contract(format!("observed state {} is not above the barrier {}", window.x_start, model.barrier));
    }
    let p = model.params(window.regime);
    let y = (model.barrier / window.x_start).ln() / p.sigma;
    Ok((p.drift().eta, y))
}

/// `−f′/f` for GBM first passage observed at deterministic times, at
/// elapsed time `u` after the last observation `x_obs`.
pub fn intensity_deterministic_obs(x_obs: f64, model: &ModelSpec, u: f64) -> Result<f64> {
    if !(x_obs > model.barrier) {
        return contract(format!("observed state {x_obs} is not above the barrier {}", model.barrier));
    }
    if !(u >= 0.0) {
        return contract(format!("elapsed time must be non-negative, got {u}"));
    }
    let p = model.params(model.initial_regime);
    let y = (model.barrier / x_obs).ln() / p.sigma;
    diffusion_ratio(p.drift().eta, u, y)
}

/// `−ψ_t/ψ` with the parameters of the regime frozen at the window start.
pub fn intensity_regime_switching(window: &LocalJumpWindow, model: &ModelSpec, t: f64) -> Result<f64> {
    let (eta, y, u) = window_coords(window, model, t)?;
    diffusion_ratio(eta, u, y)
}

/// Diffusion term `−ψ_t/ψ` plus the jump-risk term
/// `Σ_{j≠i} q_ij ∫ F_j(dz) φ(η, u, y, y − log z / σ) / ψ`.
pub fn intensity_jump_diffusion(window: &LocalJumpWindow, model: &ModelSpec, t: f64) -> Result<f64> {
    if model.kind != ModelKind::JumpDiffusion {
        return contract("intensity_jump_diffusion needs a jump-diffusion model");
    }
    let (eta, y, u) = window_coords(window, model, t)?;
    let diffusion = diffusion_ratio(eta, u, y)?;
    let jump = jump_kill_rate(window, model, eta, y, u);
    if jump == 0.0 {
        return Ok(diffusion);
    }
    Ok(diffusion + jump / psi_unchecked(eta, u, y))
}

fn jump_kill_rate(window: &LocalJumpWindow, model: &ModelSpec, eta: f64, y: f64, u: f64) -> f64 {
    let sigma = model.params(window.regime).sigma;
    let i = window.regime;
    let mut jump = 0.0;
    for j in 0..model.generator.n_states() {
        let q = model.generator.rate(i, j);
        if j == i || q <= 0.0 {
            continue;
        }
        jump += q * expected_kill(&model.jump_law(j), sigma, eta, u, y);
    }
    jump
}

/// `∫ F(dz) φ(η, u, y, y − log z / σ)`. For small `u` the integrand has
/// near-steps where the post-jump coordinate crosses `ηu` and its reflection
/// `2y + ηu`, so the law is split around both.
pub(crate) fn expected_kill(law: &JumpLaw, sigma: f64, eta: f64, u: f64, y: f64) -> f64 {
    let post = |z: f64| (y - z.ln() / sigma).max(y);
    if let JumpLaw::Beta { .. } = law {
        if u <= 0.0 {
            return law.cdf((sigma * y).exp());
        }
        let sd = u.sqrt();
        let mut breaks = Vec::with_capacity(10);
        for centre in [eta * u, 2.0 * y + eta * u] {
            for k in [-6.0, -2.0, 0.0, 2.0, 6.0] {
                let c = centre + k * sd;
                if c > y {
                    breaks.push((sigma * (y - c)).exp());
                }
            }
        }
        return law.expect_piecewise(|z| phi_unchecked(eta, u, y, post(z)), &breaks);
    }
    law.expect(|z| phi_unchecked(eta, u, y, post(z)))
}

const CUMULATIVE_NODES: usize = 32;

/// `∫_S^{S+u} λ` for the named intensity of `model` on `window`. The
/// diffusion part is exactly `−log ψ(u)`; the jump part of the
/// jump-diffusion model is integrated by Gauss–Legendre in `w = √(s/u)`.
pub fn window_cumulative(window: &LocalJumpWindow, model: &ModelSpec, u: f64) -> Result<f64> {
    if !(u >= 0.0 && u <= window.len() * (1.0 + 1e-12)) {
        return contract(format!("elapsed time {u} outside [0, {}]", window.len()));
    }
    let (eta, y) = frozen_coords(window, model)?;
    if u <= 0.0 {
        return Ok(0.0);
    }
    let psi = psi_unchecked(eta, u, y);
    let diffusion = if psi > 0.5 {
        -(-psi_complement_unchecked(eta, u, y)).ln_1p()
    } else if psi > 0.0 {
        -psi.ln()
    } else {
        return Err(HazardError::SingularKernel { from: window.start, to: window.start + u });
    };
    if model.kind != ModelKind::JumpDiffusion {
        return Ok(diffusion);
    }
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(CUMULATIVE_NODES);
    }
    let jump = RULE.with(|rule| {
        rule.integrate(0.0, 1.0, |w| {
            let s = u * w * w;
            let p = if s > 0.0 { psi_unchecked(eta, s, y) } else { 1.0 };
            jump_kill_rate(window, model, eta, y, s) / p * 2.0 * u * w
        })
    });
    Ok(diffusion + jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compensator::WindowEnd;
    use crate::markov::{DefaultRule, GeneratorMatrix, JumpLaw, RegimeParams};

    const TARGET: f64 = 0.354_437_452_613_603_4;

    fn gbm_model(sigma: f64) -> ModelSpec {
        ModelSpec {
            kind: ModelKind::PlainGbm,
            generator: GeneratorMatrix::new(vec![vec![0.0]]).unwrap(),
            regimes: vec![RegimeParams { mu: sigma * sigma / 2.0, sigma }],
            jump_laws: vec![],
            barrier: 1.0,
            x0: std::f64::consts::E,
            initial_regime: 0,
            default_rule: DefaultRule::Barrier,
        }
    }

    fn window(x: f64, regime: usize) -> LocalJumpWindow {
        LocalJumpWindow {
            start: 0.0,
            end: 1.0,
            x_start: x,
            regime,
            residual: 1.0,
            survivor: 1.0,
            end_reason: WindowEnd::Observation,
        }
    }

    #[test]
    fn deterministic_observation_examples() {
        let m = gbm_model(1.0);
        let e = std::f64::consts::E;
        assert!((intensity_deterministic_obs(e, &m, 1.0).unwrap() - TARGET).abs() < 1e-14);
        assert_eq!(intensity_deterministic_obs(e, &m, 0.0).unwrap(), 0.0);
        assert!(intensity_deterministic_obs(e, &m, 1e-4).unwrap() < 1e-100);
        let far = intensity_deterministic_obs(e * e, &m, 1.0).unwrap();
        assert!(far < TARGET);
        assert!(intensity_deterministic_obs(0.5, &m, 1.0).is_err());
    }

    fn two_regime(kind: ModelKind, laws: Vec<JumpLaw>) -> ModelSpec {
        ModelSpec {
            kind,
            generator: GeneratorMatrix::new(vec![vec![-0.8, 0.8], vec![0.3, -0.3]]).unwrap(),
            regimes: vec![RegimeParams { mu: 0.5, sigma: 1.0 }; 2],
            jump_laws: laws,
            barrier: 1.0,
            x0: std::f64::consts::E,
            initial_regime: 0,
            default_rule: DefaultRule::Barrier,
        }
    }

    #[test]
    fn regime_switching_examples() {
        let m = two_regime(ModelKind::RegimeSwitching, vec![]);
        let w0 = window(std::f64::consts::E, 0);
        let w1 = window(std::f64::consts::E, 1);
        let a = intensity_regime_switching(&w0, &m, 1.0).unwrap();
        assert!((a - TARGET).abs() < 1e-14);
        assert_eq!(a, intensity_regime_switching(&w1, &m, 1.0).unwrap());
        assert!(intensity_regime_switching(&w0, &m, 1.5).is_err());
    }

    #[test]
    fn jump_diffusion_examples() {
        let unit = JumpLaw::PointMass { z: 1.0 };
        let m = two_regime(ModelKind::JumpDiffusion, vec![unit, unit]);
        let w = window(std::f64::consts::E, 0);
        assert_eq!(intensity_jump_diffusion(&w, &m, 1.0).unwrap(), intensity_regime_switching(&w, &m, 1.0).unwrap());
        // the jump lands exactly on the barrier
        let at_barrier = JumpLaw::PointMass { z: (-1.0f64).exp() };
        let m = two_regime(ModelKind::JumpDiffusion, vec![unit, at_barrier]);
        let jump = intensity_jump_diffusion(&w, &m, 1.0).unwrap() - TARGET;
        assert!((jump - 0.8 * 0.300_926_887_628_163_8).abs() < 1e-12, "{jump}");
    }

    #[test]
    fn cumulative_integrates_the_intensity() {
        let unit = JumpLaw::PointMass { z: 1.0 };
        let m = two_regime(ModelKind::JumpDiffusion, vec![unit, JumpLaw::PointMass { z: 0.6 }]);
        let w = window(std::f64::consts::E, 0);
        let rule = GaussLegendre::new(64);
        for u in [0.1, 0.5, 1.0] {
            let direct = rule.integrate(0.0, u, |s| intensity_jump_diffusion(&w, &m, s).unwrap());
            let c = window_cumulative(&w, &m, u).unwrap();
            assert!((c - direct).abs() < 1e-8 * c.max(1.0), "{c} vs {direct}");
        }
        let rs = two_regime(ModelKind::RegimeSwitching, vec![]);
        let psi = psi_unchecked(0.0, 1.0, -1.0);
        assert!((window_cumulative(&w, &rs, 1.0).unwrap() + psi.ln()).abs() < 1e-14);
    }
}
