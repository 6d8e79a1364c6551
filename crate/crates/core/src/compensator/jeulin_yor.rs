use serde::Serialize;

use crate::compensator::{CompensatorPath, SupermartingalePath, Z_FLOOR};
use crate::error::{contract, Result};

/// dA mass on `{Z_− ≤ z_floor}` above which the input is flagged.
pub const SKIP_REPORT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JeulinYor {
    pub compensator: CompensatorPath,
    /// dA mass dropped because `Z_−` was at or below the floor.
    pub skipped_mass: f64,
    pub integrity_warning: Option<String>,
}

/// `Ã_t = ∫_0^{t∧τ} dA_s / Z_{s−}`.
pub fn jeulin_yor_transform(zpath: &SupermartingalePath, tau: f64) -> Result<JeulinYor> {
    zpath.validate()?;
    let n = zpath.times.len();
    let mut density = Vec::with_capacity(n);
    let mut dropped = Vec::with_capacity(n);
    for k in 0..n {
        let (zl, da) = (zpath.z_left[k], zpath.da_density[k]);
        if zl > Z_FLOOR {
            density.push(da / zl);
            dropped.push(0.0);
        } else {
            density.push(0.0);
            dropped.push(da);
        }
    }
    let mut skipped = 0.0;
    for k in 1..n {
        let (a, b) = (zpath.times[k - 1], zpath.times[k].min(tau));
        if b > a {
            skipped += 0.5 * (dropped[k - 1] + dropped[k]) * (b - a);
        }
    }
    let mut atoms = Vec::new();
    for &(t, mass, zl) in &zpath.atoms {
        if t > tau {
            continue;
        }
        if zl > Z_FLOOR {
            atoms.push((t, mass / zl));
        } else {
            skipped += mass;
        }
    }
    let integrity_warning = (skipped > SKIP_REPORT_THRESHOLD)
        .then(|| format!("dA carries mass {skipped:.3e} where Z_- <= {Z_FLOOR:e}; input path is suspect"));
    Ok(JeulinYor {
        compensator: CompensatorPath::new(zpath.times.clone(), density, atoms, tau)?,
        skipped_mass: skipped,
        integrity_warning,
    })
}

/// Samples of a continuous nonincreasing `Z` with its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSupermartingale {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
}

impl SmoothSupermartingale {
    pub fn from_fn(times: Vec<f64>, z: impl Fn(f64) -> f64, dz: impl Fn(f64) -> f64) -> Self {
        Self { z: times.iter().map(|&t| z(t)).collect(), dz: times.iter().map(|&t| dz(t)).collect(), times }
    }

    fn check(&self) -> Result<()> {
        if self.z.len() != self.times.len() || self.dz.len() != self.times.len() {
            return contract("Z samples differ in length");
        }
        if self.dz.iter().any(|d| *d > 0.0) || self.z.windows(2).any(|w| w[1] > w[0]) {
            return contract("Z increases; the grad-log intensity needs a nonincreasing Z");
        }
        Ok(())
    }

    /// As a supermartingale path with `A = Z_0 − Z`.
    pub fn to_supermartingale(&self) -> Result<SupermartingalePath> {
        self.check()?;
        Ok(SupermartingalePath {
            times: self.times.clone(),
            z: self.z.clone(),
            z_left: self.z.clone(),
            da_density: self.dz.iter().map(|d| -d).collect(),
            atoms: Vec::new(),
        })
    }
}

/// `λ_t = −Z′_t / Z_t`, linearly interpolated between samples.
pub fn intensity_grad_log(path: &SmoothSupermartingale, t: f64) -> Result<f64> {
    path.check()?;
    let ts = &path.times;
    if ts.is_empty() || t < ts[0] || t > *ts.last().unwrap() {
        return contract(format!("t = {t} outside the sampled range"));
    }
    let rate = |k: usize| {
        if path.z[k] > Z_FLOOR {
            -path.dz[k] / path.z[k]
        } else {
            0.0
        }
    };
    let k = ts.partition_point(|&s| s < t);
    if k == 0 || ts[k] == t {
        return Ok(rate(k));
    }
    let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    Ok(rate(k - 1) + w * (rate(k) - rate(k - 1)))
}
