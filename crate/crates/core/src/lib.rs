//! Stationary optomechanical entanglement between a driven Fabry-Perot cavity
//! mode and the vibrational mode of a light end mirror.
//!
//! The library models the linearized radiation-pressure dynamics of the
//! quadrature fluctuation vector `u = (δq, δp, δX, δY)`:
//!
//! ```text
//! u̇ = A u + n,    ⟨n nᵀ⟩_sym = D δ(t − t′)
//! ```
//!
//! and provides, on top of that:
//!
//! * [`model`] — experimental parameters → decay rates, drive amplitude,
//!   intracavity steady state (including optical bistability), effective
//!   coupling, and the drift/diffusion matrices;
//! * [`stability`] — Routh-Hurwitz conditions and a spectral-abscissa check,
//!   cross-validated against each other;
//! * [`lyapunov`] — steady-state covariance matrix from `AV + VAᵀ = −D`,
//!   with an independent quadrature oracle over `∫ e^{As} D e^{Aᵀs} ds`;
//! * [`entanglement`] — η⁻, logarithmic negativity and the Simon PPT
//!   criterion for the two-mode Gaussian steady state, computed along two
//!   independent algebraic routes;
//! * [`sweep`] — declarative detuning/temperature/mass/quality-factor sweeps
//!   with CSV output and bisection threshold finding;
//! * [`readout`] — the adjacent readout cavity: extended 6-variable model,
//!   adiabatic output gain, and stochastic trajectory reconstruction of the
//!   covariance matrix as a simulated experiment.
//!
//! All angular frequencies are rad/s and all inputs SI unless a name says
//! otherwise. Vacuum variance is 1/2 per quadrature throughout.

pub mod config;
pub mod constants;
pub mod entanglement;
mod error;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod readout;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use lyapunov::CovarianceMatrix;
pub use model::{DerivedModel, DetuningSpec, PhysicalParams};
