use crate::compensator::{SurvivalKernel, F_FLOOR};
use crate::error::{contract, HazardError, Result};

/// Finite-difference intensity `(1/h) P(τ ∈ (u, u+h] | τ > u, T − S > u)`
/// with one Richardson step over `h` and `h/2`.
pub fn laplacian_intensity<K: SurvivalKernel + ?Sized>(kernel: &K, u: f64, h: f64) -> Result<f64> {
    if !(u >= 0.0) || !(h > 0.0) {
        return contract(format!("need u >= 0 and h > 0, got u = {u}, h = {h}"));
    }
    if !(kernel.survival(u) > F_FLOOR) {
        return Err(HazardError::SingularKernel { from: u, to: u + h });
    }
    let coarse = kernel.conditional_default(u, h)? / h;
    let fine = kernel.conditional_default(u, 0.5 * h)? / (0.5 * h);
    Ok(2.0 * fine - coarse)
}
