//! Small dense linear-algebra kernels shared by the solvers: matrix
//! exponential, the vectorized Lyapunov solve, and eigenvalue helpers.
//!
//! Everything here operates on `DMatrix<f64>`; the systems are 4×4 or 6×6,
//! so direct dense methods (LU on the n²×n² Kronecker operator, real Schur
//! for spectra) are both exact enough and effectively free.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Matrix 1-norm (maximum absolute column sum).
fn norm_1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a degree-13 Padé
/// approximant (Higham's coefficients and θ₁₃ threshold).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;

    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm: matrix must be square");
    let id = DMatrix::<f64>::identity(n, n);

    let norm = norm_1(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (B[13] * &a6 + B[11] * &a4 + B[9] * &a2)
        + B[7] * &a6
        + B[5] * &a4
        + B[3] * &a2
        + B[1] * &id;
    let u = &a * u_inner;
    let v = &a6 * (B[12] * &a6 + B[10] * &a4 + B[8] * &a2)
        + B[6] * &a6
        + B[4] * &a4
        + B[2] * &a2
        + B[0] * &id;

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("expm: Padé denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Complex eigenvalues of a real square matrix via real Schur decomposition.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let eig = a.clone().complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(
            "eigenvalue iteration produced non-finite values".into(),
        ));
    }
    Ok(eig.iter().copied().collect())
}

/// Largest real part among the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest eigenvalue modulus of `a`.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Solve the continuous Lyapunov equation `A V + V Aᵀ + Q = 0` by LU on the
/// n²×n² vectorized operator `I ⊗ A + A ⊗ I`.
///
/// The caller is responsible for checking that `A` is Hurwitz; the solution
/// is symmetrized before being returned.
pub fn solve_lyapunov_dense(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "lyapunov: A must be square");
    assert_eq!((q.nrows(), q.ncols()), (n, n), "lyapunov: Q must match A");

    let nn = n * n;
    let mut k = DMatrix::<f64>::zeros(nn, nn);
    let mut rhs = DVector::<f64>::zeros(nn);
    // Column-major vec: V_{r,c} lives at index c·n + r.
    for c in 0..n {
        for r in 0..n {
            let row = c * n + r;
            for j in 0..n {
                // (A V)_{r,c} = Σ_j A_{r,j} V_{j,c}
                k[(row, c * n + j)] += a[(r, j)];
                // (V Aᵀ)_{r,c} = Σ_j V_{r,j} A_{c,j}
                k[(row, j * n + r)] += a[(c, j)];
            }
            rhs[row] = -q[(r, c)];
        }
    }

    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular Lyapunov operator".into()))?;
    let mut v = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            v[(r, c)] = sol[c * n + r];
        }
    }
    let v = (&v + v.transpose()) * 0.5;
    Ok(v)
}

/// Frobenius-relative residual `‖A V + V Aᵀ + Q‖_F / ‖Q‖_F`.
pub fn lyapunov_residual(a: &DMatrix<f64>, v: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let r = a * v + v * a.transpose() + q;
    let qn = q.norm();
    if qn == 0.0 {
        r.norm()
    } else {
        r.norm() / qn
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        let e = expm(&z);
        assert_relative_eq!(e, DMatrix::identity(4, 4), epsilon = 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 0.5]));
        let e = expm(&a);
        for (i, lam) in [1.0f64, -2.0, 0.5].iter().enumerate() {
            assert_relative_eq!(e[(i, i)], lam.exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn expm_rotation_block() {
        // exp of [[0, w], [-w, 0]] t is a rotation by w t.
        let w = 3.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], w.cos(), max_relative = 1e-13);
        assert_relative_eq!(e[(0, 1)], w.sin(), max_relative = 1e-13);
        assert_relative_eq!(e[(1, 0)], -w.sin(), max_relative = 1e-13);
    }

    #[test]
    fn expm_matches_squared_half_step() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-1.0, 2.0, 0.3, -0.5, -2.0, 1.1, 0.2, -0.4, -0.7],
        );
        let e1 = expm(&a);
        let eh = expm(&(&a * 0.5));
        assert_relative_eq!(e1, &eh * &eh, max_relative = 1e-12);
    }

    #[test]
    fn lyapunov_identity_case() {
        // A = -I, Q = 2I  =>  V = I.
        let a = DMatrix::<f64>::identity(4, 4) * -1.0;
        let q = DMatrix::<f64>::identity(4, 4) * 2.0;
        let v = solve_lyapunov_dense(&a, &q).unwrap();
        assert_relative_eq!(v, DMatrix::identity(4, 4), epsilon = 1e-12);
        assert!(lyapunov_residual(&a, &v, &q) < 1e-14);
    }

    #[test]
    fn spectral_abscissa_known() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0, 0.5, -3.0]));
        assert_relative_eq!(spectral_abscissa(&a).unwrap(), 0.5, epsilon = 1e-12);
    }
}
