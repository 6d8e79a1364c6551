use serde::{Deserialize, Serialize};

use crate::compensator::{
    general_compensator_eq5, intensity_deterministic_obs, intensity_jump_diffusion, intensity_regime_switching,
    jeulin_yor_transform, window_cumulative, window_supermartingale, CompensatorPath, LocalJumpWindow, ModelKernel,
    WindowEnd,
};
use crate::error::{contract, Result};
use crate::markov::{ModelKind, ModelSpec};

/// Route used to compute a window compensator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Engine {
    /// Closed-form intensity of the model.
    #[default]
    #[serde(rename = "named")]
    Named,
    /// Generic kernel formula `−f_u/f + (h/f) κ/P(T−S ≥ u)`.
    #[serde(rename = "eq5-generic", alias = "eq5")]
    Eq5Generic,
    /// Jeulin–Yor transform of the window's Azéma supermartingale.
    #[serde(rename = "jy-transform", alias = "jy")]
    JyTransform,
}

impl Engine {
    pub fn label(self) -> &'static str {
        match self {
            Engine::Named => "named",
            Engine::Eq5Generic => "eq5-generic",
            Engine::JyTransform => "jy-transform",
        }
    }
}

/// Human-readable formula behind the intensity of `model` under `engine`.
pub fn formula(model: &ModelSpec, engine: Engine) -> &'static str {
    match (engine, model.kind) {
        (Engine::Named, ModelKind::PlainGbm) => "deterministic observations: -f'(X_tk, t-tk)/f(X_tk, t-tk), f = psi",
        (Engine::Named, ModelKind::RegimeSwitching) => {
            "regime switching: -psi_t(eta_e, u, y)/psi(eta_e, u, y), u = t - (t_k v T_n)"
        }
        (Engine::Named, ModelKind::JumpDiffusion) => {
            "jump diffusion: -psi_t/psi + sum_j q_ij int F_j(dz) phi(eta, u, y, y - log(z)/sigma) / psi"
        }
        (Engine::Eq5Generic, _) => "generic: -f_u/f + (h/f) kappa(u)/P(T-S >= u), atoms (h/f) p_i/P(T-S >= u_i)",
        (Engine::JyTransform, _) => "Jeulin-Yor: dA/Z_- with Z = f(u) P(tau > S | F_S)",
        (Engine::Named, ModelKind::ChainOnly) => "chain hit: sum_{j in D} q_(e(t), j)",
    }
}

fn knots(window: &LocalJumpWindow, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let span = window.len();
    (0..=n).map(|k| if k == n { window.end } else { window.start + span * k as f64 / n as f64 }).collect()
}

fn stop_of(window: &LocalJumpWindow) -> f64 {
    if window.end_reason == WindowEnd::Default {
        window.end
    } else {
        f64::INFINITY
    }
}

/// Named intensity at time `t` inside `window`.
pub fn named_intensity(model: &ModelSpec, window: &LocalJumpWindow, t: f64) -> Result<f64> {
    match model.kind {
        ModelKind::PlainGbm => {
            if !(t >= window.start && t <= window.end) {
                return contract(format!("t = {t} outside [{}, {}]", window.start, window.end));
            }
            intensity_deterministic_obs(window.x_start, model, t - window.start)
        }
        ModelKind::RegimeSwitching => intensity_regime_switching(window, model, t),
        ModelKind::JumpDiffusion => intensity_jump_diffusion(window, model, t),
        ModelKind::ChainOnly => contract("chain-only models have no window intensity"),
    }
}

/// Compensator of `window` sampled on `n_knots + 1` knots.
pub fn window_compensator(
    model: &ModelSpec,
    window: &LocalJumpWindow,
    engine: Engine,
    n_knots: usize,
) -> Result<CompensatorPath> {
    match engine {
        Engine::Named => {
            let ks = knots(window, n_knots);
            let density = ks.iter().map(|&t| named_intensity(model, window, t)).collect::<Result<_>>()?;
            CompensatorPath::new(ks, density, Vec::new(), stop_of(window))
        }
        Engine::Eq5Generic => {
            let (kernel, law) = ModelKernel::for_window(model, window)?;
            general_compensator_eq5(window, &kernel, &law, n_knots)
        }
        Engine::JyTransform => {
            let (kernel, law) = ModelKernel::for_window(model, window)?;
            let z = window_supermartingale(window, &kernel, &law, n_knots)?;
            Ok(jeulin_yor_transform(&z, stop_of(window))?.compensator)
        }
    }
}

/// `A(S + u) − A(S)` on `window` for each `u` in `offsets`, with the dA
/// mass skipped by the Jeulin–Yor floor. The named engine integrates its
/// closed form exactly; the others use their sampled compensator path.
pub fn window_increments(
    model: &ModelSpec,
    window: &LocalJumpWindow,
    engine: Engine,
    n_knots: usize,
    offsets: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let (path, skipped) = match engine {
        Engine::Named => {
            let mut v: Vec<f64> = Vec::with_capacity(offsets.len());
            for (i, &u) in offsets.iter().enumerate() {
                // later report times past the window end share its offset
                let x = match offsets[..i].iter().position(|&p| p == u) {
                    Some(j) => v[j],
                    None => window_cumulative(window, model, u)?,
                };
                v.push(x);
            }
            return Ok((v, 0.0));
        }
        Engine::Eq5Generic => (window_compensator(model, window, engine, n_knots)?, 0.0),
        Engine::JyTransform => {
            let (kernel, law) = ModelKernel::for_window(model, window)?;
            let z = window_supermartingale(window, &kernel, &law, n_knots)?;
            let jy = jeulin_yor_transform(&z, stop_of(window))?;
            (jy.compensator, jy.skipped_mass)
        }
    };
    Ok((offsets.iter().map(|&u| path.value_at(window.start + u)).collect(), skipped))
}
