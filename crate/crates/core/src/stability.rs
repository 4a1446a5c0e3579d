//! Stability of the linearized dynamics along two independent routes: the
//! closed-form Routh-Hurwitz conditions on the characteristic quartic of the
//! drift matrix, and its numerically computed spectral abscissa.
//!
//! For `A` as built by [`crate::model`], the characteristic polynomial is
//! `s⁴ + c₃s³ + c₂s² + c₁s + c₀` with
//!
//! ```text
//! c₃ = γ_m + 2κ
//! c₂ = Δ² + 2γ_mκ + κ² + w_m²
//! c₁ = γ_m(Δ² + κ²) + 2κw_m²
//! c₀ = w_m²(Δ² + κ²) − w_mG²Δ
//! ```
//!
//! With all rates positive, c₃, c₂, c₁ > 0 automatically, and Hurwitz
//! stability reduces to two conditions: the determinant combination
//! `c₁(c₃c₂ − c₁) − c₃²c₀ > 0` (condition 1) and `c₀ > 0` (condition 2).

use nalgebra::{DMatrix, Matrix4};

use crate::constants::STABILITY_MARGIN_FACTOR;
use crate::linalg;
use crate::model::DerivedModel;

/// Outcome of the dual-path stability analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Left side of the first Routh-Hurwitz condition (> 0 when stable).
    pub rh_condition_1: f64,
    /// Left side of the second Routh-Hurwitz condition (> 0 when stable).
    pub rh_condition_2: f64,
    /// Spectral abscissa max Re λ(A), rad/s.
    pub eig_max_real: f64,
    pub stable_rh: bool,
    pub stable_eig: bool,
    /// Whether the two verdicts coincide.
    pub agree: bool,
}

/// Stability margin ε_stab = 10⁻⁶·max(w_m, κ). Eigenvalues with real part
/// above −ε_stab are treated as unstable so that near-boundary Lyapunov
/// solves are refused rather than returning ill-conditioned covariances.
pub fn stability_margin(mech_freq: f64, cavity_decay: f64) -> f64 {
    STABILITY_MARGIN_FACTOR * mech_freq.max(cavity_decay)
}

/// The two Routh-Hurwitz condition values for the drift-matrix quartic.
pub fn rh_conditions(
    mech_freq: f64,
    mech_damping: f64,
    kappa: f64,
    delta: f64,
    coupling: f64,
) -> (f64, f64) {
    let (wm, gm, g) = (mech_freq, mech_damping, coupling);
    let d2 = delta * delta;
    let cond1 = 2.0 * gm * kappa
        * (d2 * d2
            + d2 * (gm * gm + 2.0 * gm * kappa + 2.0 * kappa * kappa - 2.0 * wm * wm)
            + (gm * kappa + kappa * kappa + wm * wm).powi(2))
        + wm * g * g * delta * (gm + 2.0 * kappa).powi(2);
    let cond2 = wm * wm * (d2 + kappa * kappa) - wm * g * g * delta;
    (cond1, cond2)
}

/// Spectral abscissa of a 4×4 drift matrix.
pub fn stability_eig(a: &Matrix4<f64>) -> f64 {
    let d = DMatrix::from_iterator(4, 4, a.iter().copied());
    linalg::spectral_abscissa(&d).expect("4x4 Schur iteration converges")
}

/// Full dual-path report for a resolved model.
pub fn analyze(d: &DerivedModel) -> StabilityReport {
    let (c1, c2) = rh_conditions(
        d.mech_freq,
        d.mech_damping,
        d.cavity_decay,
        d.effective_detuning,
        d.effective_coupling,
    );
    let eig_max_real = stability_eig(&d.drift);
    let stable_rh = c1 > 0.0 && c2 > 0.0;
    let stable_eig = eig_max_real < -stability_margin(d.mech_freq, d.cavity_decay);
    StabilityReport {
        rh_condition_1: c1,
        rh_condition_2: c2,
        eig_max_real,
        stable_rh,
        stable_eig,
        agree: stable_rh == stable_eig,
    }
}

/// Production stability verdict from scalar model quantities: Routh-Hurwitz
/// when the conditions clear zero decisively, eigenvalue arbitration when
/// either condition sits inside its rounding band (|value| below a small
/// multiple of the magnitude of its constituent terms).
pub fn is_stable_scalars(
    mech_freq: f64,
    mech_damping: f64,
    kappa: f64,
    delta: f64,
    coupling: f64,
) -> bool {
    let (c1, c2) = rh_conditions(mech_freq, mech_damping, kappa, delta, coupling);
    // Magnitude scales of the two expressions, for boundary detection.
    let (wm, gm, g) = (mech_freq, mech_damping, coupling);
    let d2 = delta * delta;
    let scale1 = 2.0 * gm * kappa
        * (d2 * d2
            + d2 * (gm * gm + 2.0 * gm * kappa + 2.0 * kappa * kappa + 2.0 * wm * wm)
            + (gm * kappa + kappa * kappa + wm * wm).powi(2))
        + wm * g * g * delta.abs() * (gm + 2.0 * kappa).powi(2);
    let scale2 = wm * wm * (d2 + kappa * kappa) + wm * g * g * delta.abs();
    let near_boundary = c1.abs() <= 1e-9 * scale1 || c2.abs() <= 1e-9 * scale2;
    if near_boundary {
        let a = crate::model::drift_from_scalars(mech_freq, mech_damping, kappa, delta, coupling);
        stability_eig(&a) < -stability_margin(mech_freq, kappa)
    } else {
        c1 > 0.0 && c2 > 0.0
    }
}

/// Production stability verdict for a resolved model.
pub fn is_stable(d: &DerivedModel) -> bool {
    is_stable_scalars(
        d.mech_freq,
        d.mech_damping,
        d.cavity_decay,
        d.effective_detuning,
        d.effective_coupling,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{steady_state_from_detuning, DetuningSpec, PhysicalParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn fig_params(delta_over_wm: f64) -> PhysicalParams {
        let wm = std::f64::consts::TAU * 1.0e7;
        PhysicalParams {
            cavity_length: 1.0e-3,
            wavelength: 810.0e-9,
            input_power: 50.0e-3,
            mech_freq: wm,
            mech_damping: std::f64::consts::TAU * 100.0,
            mass: 5.0e-12,
            temperature: 0.4,
            finesse: 1.07e4,
            detuning: DetuningSpec::Effective(delta_over_wm * wm),
        }
    }

    #[test]
    fn decoupled_system_is_stable() {
        // G = 0: two independent damped oscillators.
        let (c1, c2) = rh_conditions(1.0, 0.01, 0.7, 1.3, 0.0);
        assert!(c1 > 0.0 && c2 > 0.0);
    }

    #[test]
    fn zero_detuning_reduces_to_positive_forms() {
        let (wm, gm, k, g) = (1.0, 0.02, 0.5, 0.8);
        let (c1, c2) = rh_conditions(wm, gm, k, 0.0, g);
        assert_relative_eq!(c2, wm * wm * k * k, max_relative = 1e-15);
        assert_relative_eq!(
            c1,
            2.0 * gm * k * (gm * k + k * k + wm * wm).powi(2),
            max_relative = 1e-14
        );
        assert!(c1 > 0.0 && c2 > 0.0);
    }

    #[test]
    fn eig_abscissa_known_cases() {
        assert_relative_eq!(
            stability_eig(&(Matrix4::identity() * -1.0)),
            -1.0,
            epsilon = 1e-12
        );
        let a = Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, -2.0, 0.5, -3.0));
        assert_relative_eq!(stability_eig(&a), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rh_agrees_with_eigenvalues_on_preset_grid() {
        let wm = std::f64::consts::TAU * 1.0e7;
        for i in 0..200 {
            let delta = (0.1 + 2.9 * i as f64 / 199.0) * wm;
            let d = steady_state_from_detuning(&fig_params(1.0), delta).unwrap();
            let rep = analyze(&d);
            assert!(
                rep.agree,
                "disagreement at Δ/w_m = {}: {rep:?}",
                delta / wm
            );
        }
    }

    #[test]
    fn rh_agrees_with_eigenvalues_on_random_draws() {
        // Log-uniform parameters spanning ±2 decades around the preset
        // values; the boundary band |max Re λ| < ε_stab is excluded since
        // the two paths may legitimately differ there.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_5747);
        let wm0 = std::f64::consts::TAU * 1.0e7;
        let mut checked = 0;
        for _ in 0..1000 {
            let scale = |rng: &mut rand_chacha::ChaCha8Rng| 100f64.powf(rng.gen_range(-1.0..1.0));
            let wm = wm0 * scale(&mut rng);
            let gm = wm / 1e5 * scale(&mut rng);
            let kappa = 8.8e7 * scale(&mut rng);
            let delta = wm0 * rng.gen_range(-3.0..3.0);
            let g = 1.05e8 * scale(&mut rng);
            let (c1, c2) = rh_conditions(wm, gm, kappa, delta, g);
            let a = crate::model::drift_from_scalars(wm, gm, kappa, delta, g);
            let abscissa = stability_eig(&a);
            if abscissa.abs() < stability_margin(wm, kappa) {
                continue; // boundary band
            }
            checked += 1;
            let rh = c1 > 0.0 && c2 > 0.0;
            let eig = abscissa < 0.0;
            assert_eq!(
                rh, eig,
                "wm={wm} gm={gm} k={kappa} delta={delta} g={g} abscissa={abscissa}"
            );
        }
        assert!(checked > 900, "boundary band swallowed too many draws: {checked}");
    }

    #[test]
    fn coupling_threshold_matches_condition_2() {
        // For Δ > 0, raising G at fixed parameters eventually violates
        // condition 2; the bisected threshold obeys w_m²(Δ²+κ²) = w_m G²Δ.
        let wm = std::f64::consts::TAU * 1.0e7;
        let (gm, kappa, delta) = (wm / 1e5, 8.8e7, wm);
        let unstable = |g: f64| !is_stable_scalars(wm, gm, kappa, delta, g);
        let (mut lo, mut hi) = (0.0, 1e10);
        assert!(!unstable(lo) && unstable(hi));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if unstable(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let g_star = 0.5 * (lo + hi);
        let analytic = (wm * (delta * delta + kappa * kappa) / delta).sqrt();
        assert_relative_eq!(g_star, analytic, max_relative = 1e-6);
    }

    #[test]
    fn verdicts_invariant_under_time_rescaling() {
        let wm = std::f64::consts::TAU * 1.0e7;
        let cases = [
            (wm, wm / 1e5, 8.8e7, wm, 1.05e8),
            (wm, wm / 1e5, 8.8e7, 2.0 * wm, 2.0e8),
            (wm, wm / 1e4, 4.4e7, -0.5 * wm, 5.0e7),
        ];
        for (wm, gm, k, d, g) in cases {
            let base = is_stable_scalars(wm, gm, k, d, g);
            for c in [1e-3, 0.1, 10.0, 1e3] {
                assert_eq!(
                    is_stable_scalars(c * wm, c * gm, c * k, c * d, c * g),
                    base,
                    "rescale by {c} changed the verdict"
                );
            }
        }
    }
}
