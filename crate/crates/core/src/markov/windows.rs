use super::{DefaultRule, JumpLaw, ModelKind, ModelSpec, ObservationSchedule, SimPath};
use crate::compensator::{LocalJumpWindow, WindowEnd};

/// Splits `[0, τ ∧ horizon]` into the windows `(S, T]` on which the observed
/// information is frozen: `S = t_k ∨ T_n`, `T = t_{k+1} ∧ T_{n+1}`, the last
/// window truncated at τ.
///
/// Each window carries `V_2 = t_{k+1} − S` and the running conditional
/// survival `P(τ > S | F_S)` computed from the observed endpoints.
pub fn build_windows(path: &SimPath, schedule: &ObservationSchedule, model: &ModelSpec) -> Vec<LocalJumpWindow> {
    let stop = path.tau.min(path.horizon);
    let mut bounds: Vec<(f64, WindowEnd)> = schedule.times().iter().map(|&t| (t, WindowEnd::Observation)).collect();
    if schedule.observe_regime_jumps {
        bounds.extend(path.jumps.iter().map(|j| (j.time, WindowEnd::RegimeJump)));
    }
    // ties between an observation and a jump resolve to the observation
    bounds.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))));
    bounds.dedup_by(|a, b| a.0 == b.0);

    let mut windows = Vec::new();
    let mut survivor = 1.0;
    for pair in bounds.windows(2) {
        let (start, _) = pair[0];
        let (natural_end, reason) = pair[1];
        if start >= stop {
            break;
        }
        let (end, end_reason) =
            if path.tau <= natural_end { (path.tau, WindowEnd::Default) } else { (natural_end, reason) };
        let regime = path.regime_at(start);
        let log_x = observed_log_x(path, start);
        let window = LocalJumpWindow {
            start,
            end,
            x_start: if model.kind == ModelKind::ChainOnly { 0.0 } else { log_x.exp() },
            regime,
            residual: schedule.next_after(start) - start,
            survivor,
            end_reason,
        };
        if end_reason != WindowEnd::Default {
            survivor *= endpoint_survival(path, model, &window);
        }
        windows.push(window);
    }
    windows
}

fn observed_log_x(path: &SimPath, t: f64) -> f64 {
    path.observations.iter().rev().find(|o| o.time <= t).map(|o| o.log_x).or_else(|| path.log_x_at(t)).unwrap_or(0.0)
}

/// `P(no default in (S, T] | X_S, X_T, chain path)` for a window whose end was
/// observed alive. Only barrier defaults under partial observation need
/// this; in the other settings τ is a stopping time of the observed
/// filtration and the factor is one.
fn endpoint_survival(path: &SimPath, model: &ModelSpec, w: &LocalJumpWindow) -> f64 {
    if model.default_rule != DefaultRule::Barrier || model.kind == ModelKind::ChainOnly {
        return 1.0;
    }
    let p = model.params(w.regime);
    let dt = w.end - w.start;
    let lb = model.barrier.ln();
    let a = w.x_start.ln() - lb;
    let end_log = observed_log_x(path, w.end);
    let s2dt = p.sigma * p.sigma * dt;
    let bridge = |pre_jump_end: f64| {
        let b = pre_jump_end - lb;
        if b <= 0.0 {
            0.0
        } else {
            -(-2.0 * a * b / s2dt).exp_m1()
        }
    };
    let jump = path.jumps.iter().find(|j| j.time == w.end);
    match (model.kind, w.end_reason, jump) {
        (ModelKind::JumpDiffusion, WindowEnd::RegimeJump, Some(j)) => {
            let law: JumpLaw = model.jump_law(j.to);
            match law {
                JumpLaw::PointMass { z } => bridge(end_log - z.ln()),
                JumpLaw::Beta { .. } => {
                    // posterior of the factor given the observed post-jump price
                    let m = p.log_drift() * dt;
                    let w_dens = |z: f64| {
                        let d = (end_log - z.ln() - w.x_start.ln() - m) / (p.sigma * dt.sqrt());
                        (-0.5 * d * d).exp() / z
                    };
                    let norm = law.expect(&w_dens);
                    if norm > 0.0 {
                        law.expect(|z| w_dens(z) * bridge(end_log - z.ln())) / norm
                    } else {
                        1.0
                    }
                }
            }
        }
        _ => bridge(end_log),
    }
}
