//! Physical constants (CODATA 2018 exact values) and shared numerical knobs.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Stability margin is `STABILITY_MARGIN_FACTOR · max(w_m, κ)`; eigenvalues
/// with real part above the negated margin count as unstable so that
/// Lyapunov solves near the stability boundary are refused.
pub const STABILITY_MARGIN_FACTOR: f64 = 1e-6;

/// Numerical zero floor for the logarithmic negativity, used by threshold
/// bisection and sweep summaries.
pub const LOG_NEG_FLOOR: f64 = 1e-6;

/// States within this band of the Simon boundary are reported as separable.
pub const SIMON_BOUNDARY_TOL: f64 = 1e-9;

/// Maximum disagreement tolerated between the closed-form η⁻ and the
/// partial-transpose symplectic-eigenvalue route before the result is
/// rejected as a numerical failure.
pub const ETA_CROSSCHECK_TOL: f64 = 1e-8;
