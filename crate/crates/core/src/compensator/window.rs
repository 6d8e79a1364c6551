use serde::Serialize;

/// Why a window `(S, T]` ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum WindowEnd {
    /// Next deterministic observation time `t_{k+1}` (or the horizon).
    Observation = 0,
    /// Next jump of the chain `T_{n+1}`.
    RegimeJump = 1,
    /// Truncated at the default time.
    Default = 2,
}

/// One interval `(S, T]` on which the observed filtration is frozen at its
/// value at `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalJumpWindow {
    pub start: f64,
    pub end: f64,
    /// Observed price at `S` (0 for chain-only models).
    pub x_start: f64,
    pub regime: usize,
    /// `V_2 = t_{k+1} − S`, time left until the next deterministic observation.
    pub residual: f64,
    /// `P(τ > S | F_S)`.
    pub survivor: f64,
    pub end_reason: WindowEnd,
}

impl LocalJumpWindow {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.start && t <= self.end
    }
}

/// Conditional law of `T − S` given `F_S`: an exponential density with rate
/// `rate` (the exit rate of the current regime) on `(0, cap)` plus an atom of
/// mass `e^{−rate·cap}` at `cap = V_2`. `rate = 0` gives the deterministic
/// observation case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationLaw {
    pub rate: f64,
    pub cap: f64,
}

impl DurationLaw {
    pub fn new(rate: f64, cap: f64) -> Self {
        debug_assert!(rate >= 0.0 && cap > 0.0);
        Self { rate, cap }
    }

    /// Density part `κ(u)` (right-continuous at 0).
    pub fn density(&self, u: f64) -> f64 {
        if u >= 0.0 && u < self.cap {
            self.rate * (-self.rate * u).exp()
        } else {
            0.0
        }
    }

    pub fn atoms(&self) -> Vec<(f64, f64)> {
        vec![(self.cap, (-self.rate * self.cap).exp())]
    }

    /// `P(T − S ≥ u)`.
    pub fn tail(&self, u: f64) -> f64 {
        if u <= self.cap {
            (-self.rate * u).exp()
        } else {
            0.0
        }
    }

    /// Generalised hazard density `κ(u) / P(T − S ≥ u)`.
    pub fn hazard(&self, u: f64) -> f64 {
        let tail = self.tail(u);
        if tail > 0.0 {
            self.density(u) / tail
        } else {
            0.0
        }
    }

    /// Total mass of the law over `(0, ∞]`.
    pub fn total_mass(&self) -> f64 {
        let continuous = -(-self.rate * self.cap).exp_m1();
        continuous + self.atoms().iter().map(|a| a.1).sum::<f64>()
    }
}
