//! Bipartite Gaussian entanglement of the mirror-cavity covariance matrix.
//!
//! The headline quantity is the logarithmic negativity
//! `E_N = max[0, −ln 2η⁻]`, where η⁻ is the smallest symplectic eigenvalue
//! of the partially transposed state. Two independent routes compute η⁻:
//!
//! * closed form `η⁻ = 2^{−1/2}·[Σ − (Σ² − 4 det V)^{1/2}]^{1/2}` with
//!   `Σ = det A + det B − 2 det C` over the 2×2 blocks of `V`;
//! * the smallest eigenvalue modulus of `iΩṼ`, with `Ṽ` the partial
//!   transpose (momentum flip of the cavity mode).
//!
//! Both run on every call; a disagreement beyond
//! [`crate::constants::ETA_CROSSCHECK_TOL`] is reported as a numerical
//! failure rather than silently trusting either route. The Simon PPT
//! criterion `4 det V < Σ − 1/4` supplies the boolean verdict, with states
//! inside a 1e-9 band of the boundary conservatively reported separable.

use nalgebra::{Matrix2, Matrix4};

use crate::constants::{ETA_CROSSCHECK_TOL, SIMON_BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::lyapunov::{symplectic_spectrum, CovarianceMatrix};

/// Entanglement diagnostics of one covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport {
    /// Smallest symplectic eigenvalue of the partial transpose.
    pub eta_minus: f64,
    /// Logarithmic negativity `max[0, −ln 2η⁻]`.
    pub log_neg: f64,
    /// Simon PPT verdict (true = entangled).
    pub simon_entangled: bool,
    /// `Σ = det A + det B − 2 det C`.
    pub sigma: f64,
    pub det_v: f64,
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
}

fn det2(m: &Matrix2<f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// 4×4 determinant by cofactor expansion along the first row; the fixed
/// size makes pivoting unnecessary.
fn det4(m: &Matrix4<f64>) -> f64 {
    let minor = |r: usize, c: usize| -> f64 {
        let mut sub = [[0.0; 3]; 3];
        let (mut i, mut j);
        i = 0;
        for rr in 0..4 {
            if rr == r {
                continue;
            }
            j = 0;
            for cc in 0..4 {
                if cc == c {
                    continue;
                }
                sub[i][j] = m[(rr, cc)];
                j += 1;
            }
            i += 1;
        }
        sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
            - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
            + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0])
    };
    m[(0, 0)] * minor(0, 0) - m[(0, 1)] * minor(0, 1) + m[(0, 2)] * minor(0, 2)
        - m[(0, 3)] * minor(0, 3)
}

/// `Σ(V) = det A + det B − 2 det C` over the block decomposition.
pub fn sigma(v: &CovarianceMatrix) -> f64 {
    det2(&v.mirror_block()) + det2(&v.cavity_block()) - 2.0 * det2(&v.cross_block())
}

/// Closed-form η⁻.
///
/// The discriminant `Σ² − 4 det V` is clamped to zero when within −1e-12
/// (relative) of it; anything lower, or a non-positive det V, is rejected
/// as unphysical input.
pub fn eta_minus_closed_form(v: &CovarianceMatrix) -> Result<f64> {
    let s = sigma(v);
    let dv = det4(v.as_matrix());
    if dv <= 0.0 {
        return Err(Error::UnphysicalState(format!("det V = {dv:.6e} must be positive")));
    }
    let mut disc = s * s - 4.0 * dv;
    let disc_scale = (s * s).max(4.0 * dv);
    if disc < 0.0 {
        if disc >= -1e-12 * disc_scale {
            disc = 0.0;
        } else {
            return Err(Error::UnphysicalState(format!(
                "discriminant Σ² − 4 det V = {disc:.6e} is negative beyond tolerance"
            )));
        }
    }
    let inner = s - disc.sqrt();
    if inner <= 0.0 {
        return Err(Error::UnphysicalState(format!(
            "Σ − √(Σ² − 4 det V) = {inner:.6e} is not positive"
        )));
    }
    Ok((inner / 2.0).sqrt())
}

/// η⁻ as the smallest eigenvalue modulus of `iΩṼ`, `Ṽ = PVP` with
/// `P = diag(1, 1, 1, −1)` (partial transpose of the cavity mode).
pub fn eta_minus_eigen(v: &CovarianceMatrix) -> Result<f64> {
    let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
    let vt = p * v.as_matrix() * p;
    let [min, _] = symplectic_spectrum(&vt)?;
    Ok(min)
}

/// η⁻ with the two routes cross-checked against each other.
pub fn eta_minus(v: &CovarianceMatrix) -> Result<f64> {
    let closed = eta_minus_closed_form(v)?;
    let eigen = eta_minus_eigen(v)?;
    let diff = (closed - eigen).abs();
    if diff > ETA_CROSSCHECK_TOL * closed.abs().max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "η⁻ routes disagree: closed form {closed:.12e} vs eigenvalue {eigen:.12e}"
        )));
    }
    Ok(closed)
}

/// Logarithmic negativity `max[0, −ln 2η⁻]`.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    Ok((-(2.0 * eta_minus(v)?).ln()).max(0.0))
}

/// Simon PPT criterion: entangled iff `4 det V < Σ − 1/4` beyond the 1e-9
/// boundary band (boundary states count as separable).
pub fn simon_test(v: &CovarianceMatrix) -> bool {
    let s = sigma(v);
    let dv = det4(v.as_matrix());
    4.0 * dv < s - 0.25 - SIMON_BOUNDARY_TOL
}

/// Full report for one covariance matrix.
pub fn report(v: &CovarianceMatrix) -> Result<EntanglementReport> {
    let eta = eta_minus(v)?;
    Ok(EntanglementReport {
        eta_minus: eta,
        log_neg: (-(2.0 * eta).ln()).max(0.0),
        simon_entangled: simon_test(v),
        sigma: sigma(v),
        det_v: det4(v.as_matrix()),
        det_a: det2(&v.mirror_block()),
        det_b: det2(&v.cavity_block()),
        det_c: det2(&v.cross_block()),
    })
}
