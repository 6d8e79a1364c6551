//! First-passage functionals of a unit-volatility Brownian motion with drift,
//! `W^(η)_t = W_t + η t`.
//!
//! * `psi(η, t, y)  = P(inf_{s≤t} W^(η)_s > y)` for `y < 0`
//! * `psi_t`        = its derivative in `t`
//! * `phi(η, t, y1, y2) = P(inf_{s≤t} W^(η)_s > y1, W^(η)_t ≤ y2)` for `y1 ≤ y2`
//!
//! The survival probability has two independent implementations (adaptive
//! quadrature of the first-passage density and the reflection closed form)
//! which are expected to agree to 1e-8.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, Result};
use crate::quadrature::integrate_adaptive;

/// Absolute tolerance for the first-passage density integral.
pub const PSI_QUAD_TOL: f64 = 1e-10;

const MAX_SEGMENTS: usize = 4000;

/// Drift of the unit-volatility Brownian motion driving a GBM's log price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub eta: f64,
}

impl DriftParams {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() {
            return domain(format!("drift must be finite, got {eta}"));
        }
        Ok(Self { eta })
    }

    /// `η = μ/σ − σ/2` for `dX = μ X dt + σ X dW`.
    pub fn from_gbm(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return domain(format!("volatility must be positive, got {sigma}"));
        }
        Self::new(mu / sigma - sigma / 2.0)
    }
}

/// Log-distance to a barrier in units of volatility, `y = (1/σ) log(x / X_S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierCoord {
    pub y: f64,
}

impl BarrierCoord {
    pub fn from_prices(barrier: f64, state: f64, sigma: f64) -> Result<Self> {
        if !(barrier > 0.0 && state > 0.0) {
            return domain("prices must be positive");
        }
        if !(sigma > 0.0) {
            return domain(format!("volatility must be positive, got {sigma}"));
        }
        Ok(Self { y: (barrier / state).ln() / sigma })
    }
}

#[inline]
pub(crate) fn phi_std(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("norm_cdf of non-finite value {x}"));
    }
    Ok(phi_std(x))
}

fn check_args(eta: f64, t: f64, y: f64) -> Result<()> {
    if !(eta.is_finite() && t.is_finite() && y.is_finite()) {
        return domain("arguments must be finite");
    }
    if t <= 0.0 {
        return domain(format!("time must be positive, got {t}"));
    }
    if y >= 0.0 {
        return domain(format!("barrier coordinate must be negative, got {y}"));
    }
    Ok(())
}

/// First-passage density of `W^(η)` to level `y`, zero at `s = 0`.
#[inline]
pub(crate) fn passage_density(eta: f64, s: f64, y: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let z = y - eta * s;
    y.abs() / (2.0 * PI * s * s * s).sqrt() * (-z * z / (2.0 * s)).exp()
}

/// Location of the maximum of the first-passage density in `s`.
fn density_peak(eta: f64, y: f64) -> f64 {
    if eta == 0.0 {
        y * y / 3.0
    } else {
        let e2 = eta * eta;
        // positive root of η² s² + 3 s − y² = 0
        2.0 * y * y / (3.0 + (9.0 + 4.0 * e2 * y * y).sqrt())
    }
}

/// Survival probability by adaptive quadrature of the first-passage density.
pub fn psi_quadrature(eta: f64, t: f64, y: f64) -> Result<f64> {
    check_args(eta, t, y)?;
    let peak = density_peak(eta, y);
    let mut breaks = vec![0.0];
    // extra break points around the peak help the subdivision find the mass
    for s in [peak / 4.0, peak, 4.0 * peak] {
        if s > 0.0 && s < t {
            breaks.push(s);
        }
    }
    breaks.push(t);
    let r = integrate_adaptive(|s| passage_density(eta, s, y), &breaks, PSI_QUAD_TOL, MAX_SEGMENTS)?;
    Ok((1.0 - r.value).clamp(0.0, 1.0))
}

/// Survival probability from the reflection-principle closed form
/// `Φ((−y+ηt)/√t) − e^{2ηy} Φ((y+ηt)/√t)`.
pub fn psi_closed(eta: f64, t: f64, y: f64) -> Result<f64> {
    check_args(eta, t, y)?;
    Ok(psi_unchecked(eta, t, y))
}

pub(crate) fn psi_unchecked(eta: f64, t: f64, y: f64) -> f64 {
    let st = t.sqrt();
    let a = (-y + eta * t) / st;
    let b = (y + eta * t) / st;
    let e = (2.0 * eta * y).exp();
    let v = if b > 0.0 {
        // both arguments in the upper half: work with tails to keep precision
        -(2.0 * eta * y).exp_m1() - phi_std(-a) + e * phi_std(-b)
    } else {
        phi_std(a) - e * phi_std(b)
    };
    v.clamp(0.0, 1.0)
}

/// `1 − psi`, computed without cancellation when the survival is close to one.
pub fn psi_complement(eta: f64, t: f64, y: f64) -> Result<f64> {
    check_args(eta, t, y)?;
    Ok(psi_complement_unchecked(eta, t, y))
}

pub(crate) fn psi_complement_unchecked(eta: f64, t: f64, y: f64) -> f64 {
    let st = t.sqrt();
    let a = (-y + eta * t) / st;
    let b = (y + eta * t) / st;
    let e = (2.0 * eta * y).exp();
    // sum of two non-negative terms, no cancellation
    (phi_std(-a) + e * phi_std(b)).clamp(0.0, 1.0)
}

/// Time derivative of the survival probability, i.e. minus the first-passage
/// density evaluated at the upper limit.
pub fn psi_t(eta: f64, t: f64, y: f64) -> Result<f64> {
    check_args(eta, t, y)?;
    Ok(-passage_density(eta, t, y))
}

/// Joint law of survival and terminal position,
/// `P(inf_{s≤t} W^(η)_s > y1, W^(η)_t ≤ y2)`.
pub fn phi_joint(eta: f64, t: f64, y1: f64, y2: f64) -> Result<f64> {
    check_args(eta, t, y1)?;
    if y2.is_nan() || y2 < y1 {
        return domain(format!("phi_joint needs y1 <= y2, got y1={y1}, y2={y2}"));
    }
    Ok(phi_unchecked(eta, t, y1, y2))
}

/// `Φ(hi) − Φ(lo)`, from the upper tails when both points are positive.
fn phi_between(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        phi_std(-lo) - phi_std(-hi)
    } else {
        phi_std(hi) - phi_std(lo)
    }
}

pub(crate) fn phi_unchecked(eta: f64, t: f64, y1: f64, y2: f64) -> f64 {
    if y2 == y1 {
        return 0.0;
    }
    if t <= 0.0 {
        // right limit: W_0 = 0 > y1
        return if y2 > 0.0 {
            1.0
        } else if y2 == 0.0 {
            0.5
        } else {
            0.0
        };
    }
    let st = t.sqrt();
    let et = eta * t;
    let direct = phi_between((y1 - et) / st, (y2 - et) / st);
    let reflected = phi_between((-y1 - et) / st, (y2 - 2.0 * y1 - et) / st);
    let v = direct - (2.0 * eta * y1).exp() * reflected;
    v.clamp(0.0, psi_unchecked(eta, t, y1))
}

/// Density of `W^(η)_t` at `w` on the event that the path stayed above `y`.
pub(crate) fn killed_density(eta: f64, t: f64, y: f64, w: f64) -> f64 {
    if w <= y {
        return 0.0;
    }
    let st = t.sqrt();
    let free = normal_pdf((w - eta * t) / st);
    let image = (2.0 * eta * y).exp() * normal_pdf((w - 2.0 * y - eta * t) / st);
    ((free - image) / st).max(0.0)
}

/// Survival of a GBM `dX = μX dt + σX dW` above `barrier` over `[0, t]`.
pub fn gbm_survival(state: f64, barrier: f64, mu: f64, sigma: f64, t: f64) -> Result<f64> {
    let drift = DriftParams::from_gbm(mu, sigma)?;
    if !(t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    if state <= barrier {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let y = BarrierCoord::from_prices(barrier, state, sigma)?;
    psi_closed(drift.eta, t, y.y)
}

/// Time derivative of [`gbm_survival`].
pub fn gbm_survival_dt(state: f64, barrier: f64, mu: f64, sigma: f64, t: f64) -> Result<f64> {
    let drift = DriftParams::from_gbm(mu, sigma)?;
    if !(t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    if state <= barrier || t == 0.0 {
        return Ok(0.0);
    }
    let y = BarrierCoord::from_prices(barrier, state, sigma)?;
    psi_t(drift.eta, t, y.y)
}
