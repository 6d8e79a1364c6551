use serde::Serialize;

use crate::error::{contract, Result};

/// Compensator `A` of `1{τ ≤ t}`: a density sampled on knots (linear between
/// knots, a repeated knot marks a jump in the density), plus atoms, frozen
/// after `stop`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensatorPath {
    pub knots: Vec<f64>,
    pub density: Vec<f64>,
    pub atoms: Vec<(f64, f64)>,
    /// `τ` (or infinity); `A` is constant after it.
    pub stop: f64,
}

impl Default for CompensatorPath {
    fn default() -> Self {
        Self { knots: Vec::new(), density: Vec::new(), atoms: Vec::new(), stop: f64::INFINITY }
    }
}

impl CompensatorPath {
    pub fn new(knots: Vec<f64>, density: Vec<f64>, atoms: Vec<(f64, f64)>, stop: f64) -> Result<Self> {
        if knots.len() != density.len() {
            return contract("knots and density samples differ in length");
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return contract("knots must be nondecreasing");
        }
        if density.iter().any(|d| !(*d >= 0.0)) {
            return contract("compensator density must be non-negative");
        }
        if atoms.iter().any(|a| !(a.1 >= 0.0)) {
            return contract("atom masses must be non-negative");
        }
        Ok(Self { knots, density, atoms, stop })
    }

    /// `A(t)`.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = t.min(self.stop);
        let mut acc = 0.0;
        for k in 1..self.knots.len() {
            let (a, b) = (self.knots[k - 1], self.knots[k]);
            if a >= t {
                break;
            }
            let (da, db) = (self.density[k - 1], self.density[k]);
            if b <= t {
                acc += 0.5 * (da + db) * (b - a);
            } else {
                let w = (t - a) / (b - a);
                let dt = da + w * (db - da);
                acc += 0.5 * (da + dt) * (t - a);
            }
        }
        acc + self.atoms.iter().filter(|a| a.0 <= t).map(|a| a.1).sum::<f64>()
    }

    /// Density `λ(t)` by linear interpolation; zero outside the knot range
    /// and after `stop`. At a repeated knot the left value is returned.
    pub fn density_at(&self, t: f64) -> f64 {
        if t > self.stop || self.knots.is_empty() {
            return 0.0;
        }
        let first = self.knots[0];
        let last = *self.knots.last().unwrap();
        if t < first || t > last {
            return 0.0;
        }
        let k = self.knots.partition_point(|&x| x < t);
        if k == 0 {
            return self.density[0];
        }
        let (a, b) = (self.knots[k - 1], self.knots[k]);
        let w = (t - a) / (b - a);
        self.density[k - 1] + w * (self.density[k] - self.density[k - 1])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            knots: self.knots.clone(),
            density: self.density.iter().map(|d| d * c).collect(),
            atoms: self.atoms.iter().map(|&(t, m)| (t, m * c)).collect(),
            stop: self.stop,
        }
    }

    /// Concatenates a later piece; its knots must not start before ours end.
    pub fn append(&mut self, other: CompensatorPath) -> Result<()> {
        if let (Some(&end), Some(&start)) = (self.knots.last(), other.knots.first()) {
            if start < end {
                return contract(format!("appended piece starts at {start} before {end}"));
            }
        }
        self.knots.extend(other.knots);
        self.density.extend(other.density);
        self.atoms.extend(other.atoms);
        self.stop = self.stop.min(other.stop);
        Ok(())
    }
}

/// Sampled Azéma supermartingale `Z` with the increments of its
/// Doob–Meyer compensator on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermartingalePath {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub z_left: Vec<f64>,
    /// Density of `dA` at each sample.
    pub da_density: Vec<f64>,
    /// `(time, mass, Z_{time−})`.
    pub atoms: Vec<(f64, f64, f64)>,
}

impl SupermartingalePath {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.z.len() != n || self.z_left.len() != n || self.da_density.len() != n {
            return contract("supermartingale samples differ in length");
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return contract("sample times must be nondecreasing");
        }
        let in_unit = |v: &f64| (0.0..=1.0 + 1e-12).contains(v);
        if !self.z.iter().all(in_unit) || !self.z_left.iter().all(in_unit) {
            return contract("Z must lie in [0, 1]");
        }
        if self.da_density.iter().any(|d| !(*d >= 0.0)) || self.atoms.iter().any(|a| !(a.1 >= 0.0)) {
            return contract("dA must be non-negative");
        }
        Ok(())
    }
}
