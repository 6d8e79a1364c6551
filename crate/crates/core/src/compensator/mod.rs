//! Compensators of default times under local jumping filtrations.

mod engine;
mod eq5;
mod jeulin_yor;
mod kernel;
mod named;
mod path;
mod window;

pub use engine::{formula, named_intensity, window_compensator, window_increments, Engine};
pub use eq5::{azema_z, eq5_density, general_compensator_eq5, window_supermartingale};
pub use jeulin_yor::{
    intensity_grad_log, jeulin_yor_transform, JeulinYor, SmoothSupermartingale, SKIP_REPORT_THRESHOLD,
};
pub use kernel::{Exit, ExponentialKernel, GbmKernel, JumpDiffusionKernel, ModelKernel, SurvivalKernel};
pub use named::{intensity_deterministic_obs, intensity_jump_diffusion, intensity_regime_switching, window_cumulative};
pub use path::{CompensatorPath, SupermartingalePath};
pub use window::{DurationLaw, LocalJumpWindow, WindowEnd};

/// Kernel values at or below this are treated as zero survival.
pub const F_FLOOR: f64 = 1e-12;
/// `Z_−` at or below this is treated as zero in the Jeulin–Yor transform.
pub const Z_FLOOR: f64 = 1e-12;
