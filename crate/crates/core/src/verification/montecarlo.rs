use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{contract, HazardError, Result};
use crate::markov::{simulate_price_path, ModelKind, ModelSpec, ObservationSchedule, SimConfig};
use crate::verification::MIN_PATHS;

/// Independent generator for path `index`: the seed picks the key, the
/// index the stream, so results do not depend on scheduling.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` for paths `0..n` in parallel and returns the results in index order.
pub fn map_paths<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..n as u64).into_par_iter().map(|i| f(i, &mut path_rng(seed, i))).collect()
}

/// Runs `f` on a pool of `threads` workers (the global pool when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HazardError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub probability: f64,
    pub se: f64,
    pub n_paths: usize,
}

/// Monte Carlo estimate of `P(τ > t)` for `model` started from its initial state.
pub fn mc_survival(model: &ModelSpec, t: f64, n_paths: usize, seed: u64, cfg: &SimConfig) -> Result<SurvivalEstimate> {
    if n_paths < MIN_PATHS {
        return contract(format!("{n_paths} paths; at least {MIN_PATHS} required"));
    }
    if !(t >= 0.0) {
        return contract(format!("t must be non-negative, got {t}"));
    }
    if model.kind != ModelKind::ChainOnly && model.x0 <= model.barrier {
        return Ok(SurvivalEstimate { probability: 0.0, se: 0.0, n_paths });
    }
    if t == 0.0 {
        return Ok(SurvivalEstimate { probability: 1.0, se: 0.0, n_paths });
    }
    model.validate()?;
    let schedule = ObservationSchedule::new(vec![0.0, t], false)?;
    let alive = map_paths(n_paths, seed, |_, rng| Ok(simulate_price_path(model, &schedule, cfg, rng)?.tau > t))?;
    let k = alive.iter().filter(|&&a| a).count();
    let p = k as f64 / n_paths as f64;
    Ok(SurvivalEstimate { probability: p, se: (p * (1.0 - p) / n_paths as f64).sqrt(), n_paths })
}
