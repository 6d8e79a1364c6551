use crate::compensator::{
    CompensatorPath, DurationLaw, LocalJumpWindow, SupermartingalePath, SurvivalKernel, WindowEnd, F_FLOOR,
};
use crate::error::{contract, HazardError, Result};

/// Density of the compensator at elapsed time `u` inside a window:
/// `−f_u/f + (h/f) κ(u) / P(T − S ≥ u)`.
pub fn eq5_density<K: SurvivalKernel + ?Sized>(kernel: &K, law: &DurationLaw, u: f64) -> Result<f64> {
    let f = kernel.survival(u);
    if !(f > F_FLOOR) {
        return Err(HazardError::SingularKernel { from: u, to: u });
    }
    let hazard = law.hazard(u);
    let jump = if hazard > 0.0 { kernel.gap(u)? / f * hazard } else { 0.0 };
    Ok((-kernel.survival_rate(u) / f + jump).max(0.0))
}

fn atom_masses<K: SurvivalKernel + ?Sized>(kernel: &K, law: &DurationLaw, span: f64) -> Result<Vec<(f64, f64)>> {
    let mut atoms = Vec::new();
    for (u, p) in law.atoms() {
        if u > 0.0 && u <= span && p > 0.0 {
            let f = kernel.survival(u);
            if !(f > F_FLOOR) {
                return Err(HazardError::SingularKernel { from: u, to: u });
            }
            let mass = kernel.gap(u)? / f * p / law.tail(u);
            if mass > 0.0 {
                atoms.push((u, mass));
            }
        }
    }
    Ok(atoms)
}

/// Elapsed times of `n + 1` equally spaced knots on `[0, span]`.
fn knot_offsets(span: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| if k == n { span } else { span * k as f64 / n as f64 }).collect()
}

/// The right endpoint is sampled as a left limit; densities live on the
/// open window interior. `end − start` can overshoot the cap by an ulp, so
/// the limit is taken below both.
fn interior(u: f64, span: f64, cap: f64) -> f64 {
    if u >= span && u > 0.0 {
        u.min(cap).next_down()
    } else {
        u
    }
}

/// Compensator of `1{τ ≤ t}` on `(S, T]` from the general
/// local-jumping-filtration formula, sampled on `n_knots + 1` knots.
pub fn general_compensator_eq5<K: SurvivalKernel + ?Sized>(
    window: &LocalJumpWindow,
    kernel: &K,
    law: &DurationLaw,
    n_knots: usize,
) -> Result<CompensatorPath> {
    if window.is_empty() {
        return contract(format!("empty window ({}, {}]", window.start, window.end));
    }
    let span = window.len();
    let offsets = knot_offsets(span, n_knots);
    let mut density = Vec::with_capacity(offsets.len());
    for &u in &offsets {
        let v = interior(u, span, law.cap);
        match eq5_density(kernel, law, v) {
            Ok(d) => density.push(d),
            Err(HazardError::SingularKernel { .. }) => {
                return Err(HazardError::SingularKernel { from: window.start + u, to: window.end });
            }
            Err(e) => return Err(e),
        }
    }
    let atoms = atom_masses(kernel, law, span)?.into_iter().map(|(u, m)| (window.start + u, m)).collect();
    let stop = if window.end_reason == WindowEnd::Default { window.end } else { f64::INFINITY };
    let knots = offsets.iter().map(|u| window.start + u).collect();
    CompensatorPath::new(knots, density, atoms, stop)
}

/// `Z_t = f(t − S) · P(τ > S | F_S)` for `t ∈ [S, T)`.
pub fn azema_z<K: SurvivalKernel + ?Sized>(window: &LocalJumpWindow, kernel: &K, t: f64) -> Result<f64> {
    if !(t >= window.start && t < window.end) {
        return contract(format!("t = {t} outside [{}, {})", window.start, window.end));
    }
    Ok((kernel.survival(t - window.start) * window.survivor).clamp(0.0, 1.0))
}

/// Azéma supermartingale of a window with the increments of its
/// F-compensator, `dA = P(τ > S | F_S) (−f_u du + h κ/P(T−S ≥ u) du + atoms)`.
pub fn window_supermartingale<K: SurvivalKernel + ?Sized>(
    window: &LocalJumpWindow,
    kernel: &K,
    law: &DurationLaw,
    n_knots: usize,
) -> Result<SupermartingalePath> {
    if window.is_empty() {
        return contract(format!("empty window ({}, {}]", window.start, window.end));
    }
    let span = window.len();
    let c = window.survivor;
    let offsets = knot_offsets(span, n_knots);
    let mut times = Vec::with_capacity(offsets.len());
    let mut z = Vec::with_capacity(offsets.len());
    let mut da = Vec::with_capacity(offsets.len());
    for &u in &offsets {
        let v = interior(u, span, law.cap);
        let f = kernel.survival(v);
        let hazard = law.hazard(v);
        let jump = if hazard > 0.0 { kernel.gap(v)? * hazard } else { 0.0 };
        times.push(window.start + u);
        z.push((c * f).clamp(0.0, 1.0));
        da.push((c * (-kernel.survival_rate(v) + jump)).max(0.0));
    }
    let mut atoms = Vec::new();
    for (u, p) in law.atoms() {
        if u > 0.0 && u <= span && p > 0.0 {
            let mass = c * kernel.gap(u)? * p / law.tail(u);
            if mass > 0.0 {
                atoms.push((window.start + u, mass, (c * kernel.survival(u)).clamp(0.0, 1.0)));
            }
        }
    }
    let path = SupermartingalePath { times, z_left: z.clone(), z, da_density: da, atoms };
    path.validate()?;
    Ok(path)
}
