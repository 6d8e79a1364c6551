use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DefaultRule, GeneratorMatrix, ModelKind, ModelSpec, ObservationSchedule};
use crate::error::{contract, Result};

/// Maximal interval on which the chain stays in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeSegment {
    pub start: f64,
    pub end: f64,
    pub regime: usize,
}

/// Log price on the simulation grid. `regime` is the regime in force right
/// after `t`; at a jump time `log_x` is the post-jump value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub t: f64,
    pub log_x: f64,
    pub regime: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpMark {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    /// Multiplicative price factor (1 for continuous models).
    pub factor: f64,
}

/// One observed marked point `(t, X_t, ε(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub time: f64,
    pub log_x: f64,
    pub regime: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultCause {
    /// Diffusive crossing inside a step.
    Diffusion,
    /// Caused by a chain jump (price jump below the barrier, or entry into a target regime).
    Jump,
    /// The initial state already belongs to the default set.
    Initial,
}

/// A simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub horizon: f64,
    pub segments: Vec<RegimeSegment>,
    /// Price grid up to `min(τ, horizon)`; empty for chain-only models.
    pub grid: Vec<GridPoint>,
    pub jumps: Vec<JumpMark>,
    /// Default time, `+∞` if none before the horizon.
    pub tau: f64,
    pub cause: Option<DefaultCause>,
    pub observations: Vec<Observation>,
}

impl SimPath {
    pub fn regime_at(&self, t: f64) -> usize {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or(self.segments.last())
            .map(|s| s.regime)
            .expect("at least one segment")
    }

    /// Log price at a grid time (exact match or the last grid point before `t`).
    pub fn log_x_at(&self, t: f64) -> Option<f64> {
        let idx = self.grid.partition_point(|g| g.t <= t);
        idx.checked_sub(1).map(|i| self.grid[i].log_x)
    }

    pub fn defaulted_by(&self, t: f64) -> bool {
        self.tau <= t
    }
}

/// How a crossing time is placed inside a step once a crossing is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossingTime {
    /// Sample from the exact conditional first-hitting-time law of the bridge.
    #[default]
    Exact,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Maximal diffusion step.
    pub max_step: f64,
    pub bridge_correction: bool,
    pub crossing_time: CrossingTime,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { max_step: 1.0 / 64.0, bridge_correction: true, crossing_time: CrossingTime::Exact }
    }
}

/// Exact simulation of the chain on `[0, horizon]`.
pub fn simulate_chain<R: Rng + ?Sized>(
    generator: &GeneratorMatrix,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Vec<RegimeSegment> {
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut state = start;
    loop {
        let rate = generator.exit_rate(state);
        let hold = if rate > 0.0 { Exp::new(rate).expect("positive rate").sample(rng) } else { f64::INFINITY };
        let end = t + hold;
        if end >= horizon {
            segments.push(RegimeSegment { start: t, end: horizon, regime: state });
            return segments;
        }
        segments.push(RegimeSegment { start: t, end, regime: state });
        // next state j ≠ i with probability q_ij / q_i
        let mut u = rng.random::<f64>() * rate;
        let mut next = state;
        for (j, &q) in generator.rows()[state].iter().enumerate() {
            if j == state || q <= 0.0 {
                continue;
            }
            next = j;
            if u < q {
                break;
            }
            u -= q;
        }
        state = next;
        t = end;
    }
}

const HIT_TIME_NODES: usize = 1024;

/// Detects a barrier crossing of a Brownian path (volatility `sigma`) over a
/// step of length `dt` between log prices `start` and `end`.
///
/// Returns the crossing offset inside the step, or `None`. Without an endpoint
/// below the barrier the crossing happens with the bridge probability
/// `exp(−2ab/(σ²dt))`.
pub fn first_passage_detect<R: Rng + ?Sized>(
    sigma: f64,
    dt: f64,
    start: f64,
    end: f64,
    log_barrier: f64,
    placement: CrossingTime,
    rng: &mut R,
) -> Result<Option<f64>> {
    let a = start - log_barrier;
    if !(a > 0.0) {
        return contract(format!("step starts at or below the barrier (distance {a})"));
    }
    let b = end - log_barrier;
    // drawn even when the endpoint is below the barrier, so that models
    // differing only in the barrier consume the same stream
    let u = rng.random::<f64>();
    if b > 0.0 && !(u < (-2.0 * a * b / (sigma * sigma * dt)).exp()) {
        return Ok(None);
    }
    Ok(Some(match placement {
        CrossingTime::Midpoint => 0.5 * dt,
        CrossingTime::Exact => sample_hitting_time(a, b, sigma, dt, rng),
    }))
}

/// Samples the first time a Brownian bridge from `a > 0` to `b` (relative to
/// the barrier) over `[0, dt]` reaches zero, conditional on it doing so.
///
/// The conditional density is proportional to
/// `s^{-3/2} e^{−a²/(2σ²s)} (dt−s)^{-1/2} e^{−b²/(2σ²(dt−s))}`; it is
/// tabulated on a cosine-clustered grid and inverted.
fn sample_hitting_time<R: Rng + ?Sized>(a: f64, b: f64, sigma: f64, dt: f64, rng: &mut R) -> f64 {
    let s2 = sigma * sigma;
    let n = HIT_TIME_NODES;
    let mut log_w = Vec::with_capacity(n + 1);
    let mut grid = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let v = k as f64 / n as f64;
        let s = 0.5 * dt * (1.0 - (std::f64::consts::PI * v).cos());
        let ds = 0.5 * dt * std::f64::consts::PI * (std::f64::consts::PI * v).sin();
        let r = dt - s;
        let lw = if s <= 0.0 || r <= 0.0 || ds <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -1.5 * s.ln() - a * a / (2.0 * s2 * s) - 0.5 * r.ln() - b * b / (2.0 * s2 * r) + ds.ln()
        };
        grid.push(s);
        log_w.push(lw);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return 0.5 * dt;
    }
    let w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let mut cum = vec![0.0; n + 1];
    for k in 1..=n {
        cum[k] = cum[k - 1] + 0.5 * (w[k] + w[k - 1]);
    }
    let total = cum[n];
    if !(total > 0.0) {
        return 0.5 * dt;
    }
    let target = rng.random::<f64>() * total;
    let k = cum.partition_point(|&c| c < target).clamp(1, n);
    let frac = if cum[k] > cum[k - 1] { (target - cum[k - 1]) / (cum[k] - cum[k - 1]) } else { 0.5 };
    (grid[k - 1] + frac * (grid[k] - grid[k - 1])).clamp(0.0, dt)
}

/// Simulates one path of `model` observed on `schedule`.
///
/// The chain is simulated exactly over the whole horizon; the log price is
/// advanced with exact Gaussian increments on a grid containing the
/// observation times, the chain jump times and multiples of `cfg.max_step`,
/// and stops at the default time.
pub fn simulate_price_path<R: Rng + ?Sized>(
    model: &ModelSpec,
    schedule: &ObservationSchedule,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SimPath> {
    let horizon = schedule.horizon();
    let segments = match model.kind {
        ModelKind::PlainGbm => {
            vec![RegimeSegment { start: 0.0, end: horizon, regime: model.initial_regime }]
        }
        _ => simulate_chain(&model.generator, model.initial_regime, horizon, rng),
    };
    let jump_times: Vec<(f64, usize, usize)> =
        segments.windows(2).map(|w| (w[1].start, w[0].regime, w[1].regime)).collect();

    if model.kind == ModelKind::ChainOnly {
        return Ok(chain_only_path(model, schedule, horizon, segments, &jump_times));
    }

    let mut events: Vec<f64> = schedule.times().to_vec();
    events.extend(jump_times.iter().map(|j| j.0));
    let steps = (horizon / cfg.max_step).ceil() as usize;
    events.extend((1..steps).map(|k| k as f64 * cfg.max_step).filter(|&t| t < horizon));
    events.sort_by(f64::total_cmp);
    events.dedup();

    let log_barrier = model.barrier.ln();
    let mut log_x = model.x0.ln();
    let mut regime = model.initial_regime;
    let mut grid = vec![GridPoint { t: 0.0, log_x, regime }];
    let mut jumps = Vec::with_capacity(jump_times.len());
    let mut observations = vec![Observation { time: 0.0, log_x, regime }];
    let mut tau = f64::INFINITY;
    let mut cause = None;
    let mut next_jump = 0;
    let mut next_obs = 1;
    let obs_times = schedule.times();

    let watches = |rule: &DefaultRule, regime: usize| match rule {
        DefaultRule::Barrier => true,
        DefaultRule::BarrierInRegime { regime: r } => *r == regime,
        DefaultRule::RegimeSet { .. } => false,
    };

    if matches!(model.default_rule, DefaultRule::BarrierInRegime { .. })
        && watches(&model.default_rule, regime)
        && log_x < log_barrier
    {
        tau = 0.0;
        cause = Some(DefaultCause::Initial);
    }

    let mut t = 0.0;
    for &t_next in events.iter().filter(|&&e| e > 0.0) {
        if tau.is_finite() {
            break;
        }
        let dt = t_next - t;
        let p = model.params(regime);
        let start = log_x;
        let end = start + p.log_drift() * dt + p.sigma * dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
        if watches(&model.default_rule, regime) {
            let crossed = if cfg.bridge_correction {
                first_passage_detect(p.sigma, dt, start, end, log_barrier, cfg.crossing_time, rng)?
            } else if end <= log_barrier {
                Some(dt)
            } else {
                None
            };
            if let Some(offset) = crossed {
                tau = t + offset;
                cause = Some(DefaultCause::Diffusion);
                grid.push(GridPoint { t: tau, log_x: log_barrier, regime });
                break;
            }
        }
        log_x = end;
        t = t_next;

        if next_jump < jump_times.len() && jump_times[next_jump].0 == t {
            let (_, from, to) = jump_times[next_jump];
            next_jump += 1;
            let factor = if model.kind == ModelKind::JumpDiffusion { model.jump_law(to).sample(rng) } else { 1.0 };
            log_x += factor.ln();
            regime = to;
            jumps.push(JumpMark { time: t, from, to, factor });
            let defaulted = match model.default_rule {
                DefaultRule::Barrier => log_x <= log_barrier,
                DefaultRule::BarrierInRegime { regime: r } => to == r && log_x < log_barrier,
                DefaultRule::RegimeSet { .. } => false,
            };
            grid.push(GridPoint { t, log_x, regime });
            if defaulted {
                tau = t;
                cause = Some(DefaultCause::Jump);
                break;
            }
            if schedule.observe_regime_jumps {
                observations.push(Observation { time: t, log_x, regime });
            }
        } else {
            grid.push(GridPoint { t, log_x, regime });
        }
        while next_obs < obs_times.len() && obs_times[next_obs] <= t {
            if obs_times[next_obs] == t && observations.last().map(|o| o.time) != Some(t) {
                observations.push(Observation { time: t, log_x, regime });
            }
            next_obs += 1;
        }
    }

    Ok(SimPath { horizon, segments, grid, jumps, tau, cause, observations })
}

fn chain_only_path(
    model: &ModelSpec,
    schedule: &ObservationSchedule,
    horizon: f64,
    segments: Vec<RegimeSegment>,
    jump_times: &[(f64, usize, usize)],
) -> SimPath {
    let targets: &[usize] = match &model.default_rule {
        DefaultRule::RegimeSet { regimes } => regimes,
        _ => &[],
    };
    let (tau, cause) = if targets.contains(&model.initial_regime) {
        (0.0, Some(DefaultCause::Initial))
    } else {
        jump_times
            .iter()
            .find(|j| targets.contains(&j.2))
            .map(|j| (j.0, Some(DefaultCause::Jump)))
            .unwrap_or((f64::INFINITY, None))
    };
    let jumps = jump_times.iter().map(|&(time, from, to)| JumpMark { time, from, to, factor: 1.0 }).collect();
    let mut observations: Vec<Observation> = schedule
        .times()
        .iter()
        .filter(|&&t| t <= tau)
        .map(|&t| Observation { time: t, log_x: 0.0, regime: regime_in(&segments, t) })
        .collect();
    if schedule.observe_regime_jumps {
        observations.extend(jump_times.iter().filter(|j| j.0 <= tau).map(|j| Observation {
            time: j.0,
            log_x: 0.0,
            regime: j.2,
        }));
        observations.sort_by(|a, b| a.time.total_cmp(&b.time));
        observations.dedup_by(|a, b| a.time == b.time);
    }
    SimPath { horizon, segments, grid: Vec::new(), jumps, tau, cause, observations }
}

fn regime_in(segments: &[RegimeSegment], t: f64) -> usize {
    segments.iter().find(|s| t >= s.start && t < s.end).or(segments.last()).map(|s| s.regime).expect("non-empty")
}
