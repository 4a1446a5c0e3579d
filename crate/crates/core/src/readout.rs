//! The second (readout) Fabry-Perot cavity behind the movable mirror, and
//! the simulated experiment that reconstructs the mirror-cavity covariance
//! matrix from stochastic trajectories.
//!
//! The readout mode obeys the same linearized structure as the primary
//! cavity with coupling G₂α₂ to the mirror position, giving a 6-variable
//! model over `(δq, δp, δX, δY, δX₂, δY₂)`. For Δ₂ = w_m ≫ κ₂ ≫ G₂α₂/√2
//! the cavity adiabatically follows the mirror and its output field reads
//! the mirror quadratures directly with gain G₂α₂/√κ₂.
//!
//! The trajectory simulator integrates `du = A_ext u dt + dW`,
//! `Cov(dW) = D_ext·dt`, by Euler-Maruyama. For linear dynamics with
//! Gaussian noise this classical ensemble reproduces the *symmetrized*
//! quantum moments exactly, which is all the covariance matrix contains —
//! that equivalence is what makes the "simulated experiment" faithful.

use nalgebra::{DMatrix, Matrix4, Matrix6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constants::HBAR;
use crate::entanglement::{self, EntanglementReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lyapunov::{self, CovarianceMatrix};
use crate::model::{DerivedModel, PhysicalParams};

/// Readout-cavity parameters with the regime flags evaluated once at
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutParams {
    /// Readout-cavity bandwidth κ₂, rad/s.
    pub cavity2_decay: f64,
    /// Effective detuning Δ₂, rad/s (the RWA reduction needs Δ₂ = w_m).
    pub cavity2_detuning: f64,
    /// Intracavity amplitude α₂ (real, ≥ 0).
    pub intracavity_amp2: f64,
    /// Readout-cavity length L₂, m.
    pub cavity2_length: f64,
    /// Readout-cavity resonance w_c2, rad/s.
    pub cavity2_freq: f64,
    /// Derived single-photon coupling G₂ = (w_c2/L₂)·√(ħ/(m·w_m)), rad/s.
    pub bare_coupling2: f64,
    /// Δ₂ = w_m within rounding.
    pub rwa_ok: bool,
    /// w_m ≥ 10·κ₂.
    pub adiabatic_freq_ok: bool,
    /// κ₂ ≥ 10·G₂α₂/√2.
    pub adiabatic_coupling_ok: bool,
    /// |α₂| ≤ 0.01·|α_s|: readout back-action negligible next to the drive.
    pub back_action_small: bool,
}

impl ReadoutParams {
    /// Build readout parameters against a resolved primary model.
    pub fn new(
        cavity2_decay: f64,
        cavity2_detuning: f64,
        intracavity_amp2: f64,
        cavity2_length: f64,
        cavity2_freq: f64,
        primary: &PhysicalParams,
        intracavity_amp_primary: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("cavity2_decay", cavity2_decay),
            ("cavity2_length", cavity2_length),
            ("cavity2_freq", cavity2_freq),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(intracavity_amp2 >= 0.0) || !intracavity_amp2.is_finite() {
            return Err(Error::InvalidParams(format!(
                "intracavity_amp2 must be non-negative, got {intracavity_amp2}"
            )));
        }
        let wm = primary.mech_freq;
        let g2 = (cavity2_freq / cavity2_length) * (HBAR / (primary.mass * wm)).sqrt();
        let coupling = g2 * intracavity_amp2;
        Ok(Self {
            cavity2_decay,
            cavity2_detuning,
            intracavity_amp2,
            cavity2_length,
            cavity2_freq,
            bare_coupling2: g2,
            rwa_ok: (cavity2_detuning - wm).abs() <= 1e-9 * wm,
            adiabatic_freq_ok: wm >= 10.0 * cavity2_decay,
            adiabatic_coupling_ok: cavity2_decay
                >= 10.0 * coupling / std::f64::consts::SQRT_2,
            back_action_small: intracavity_amp2
                <= 0.01 * intracavity_amp_primary.abs() * (1.0 + 1e-12),
        })
    }

    /// Defaults satisfying the inequality chain w_m ≫ κ₂ ≫ G₂α₂/√2 with
    /// margin 20 at each step, probing at α₂ = 0.01·α_s: κ₂ = w_m/20,
    /// Δ₂ = w_m, and L₂ solved so that G₂α₂/√2 = κ₂/20. Every field can be
    /// overridden by constructing [`ReadoutParams::new`] directly.
    pub fn defaults_for(model: &DerivedModel, primary: &PhysicalParams) -> Result<Self> {
        let wm = primary.mech_freq;
        let kappa2 = wm / 20.0;
        let alpha2 = 0.01 * model.intracavity_amp;
        let cavity2_freq = model.cavity_freq;
        let cavity2_length = if alpha2 > 0.0 {
            // G₂ = √2·κ₂/(20·α₂) inverted through the coupling formula.
            let g2_target = std::f64::consts::SQRT_2 * kappa2 / (20.0 * alpha2);
            (cavity2_freq / g2_target) * (HBAR / (primary.mass * wm)).sqrt()
        } else {
            // Dark readout cavity: geometry of the primary one.
            primary.cavity_length
        };
        Self::new(
            kappa2,
            wm,
            alpha2,
            cavity2_length,
            cavity2_freq,
            primary,
            model.intracavity_amp,
        )
    }

    /// G₂·α₂, the mirror-readout coupling rate.
    pub fn readout_coupling(&self) -> f64 {
        self.bare_coupling2 * self.intracavity_amp2
    }
}

/// Extended 6-variable linear model `(δq, δp, δX, δY, δX₂, δY₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedModel {
    pub drift: Matrix6<f64>,
    pub diffusion: Matrix6<f64>,
    pub mech_freq: f64,
    pub mech_damping: f64,
    pub cavity_decay: f64,
    pub cavity2_decay: f64,
    pub effective_detuning: f64,
    pub cavity2_detuning: f64,
    pub mean_thermal: f64,
}

impl ExtendedModel {
    /// Fastest model frequency, the scale that bounds the integration step.
    pub fn max_rate(&self) -> f64 {
        self.mech_freq
            .max(self.cavity_decay)
            .max(self.cavity2_decay)
            .max(self.effective_detuning.abs())
            .max(self.cavity2_detuning.abs())
    }
}

/// Assemble the extended model. The upper-left 4×4 block is the primary
/// drift exactly; rows 4–5 hold the readout-cavity quadratures of
/// `δȧ₂ = −(κ₂+iΔ₂)δa₂ + iG₂α₂δq + √(2κ₂)a₂ⁱⁿ`. The radiation-pressure
/// back-action `+√2·G₂α₂·δX₂` enters the mirror momentum row only when
/// `back_action` is requested; the default readout regime makes it
/// negligible and drops it.
pub fn build_extended(d: &DerivedModel, r: &ReadoutParams, back_action: bool) -> ExtendedModel {
    let mut a = Matrix6::<f64>::zeros();
    for row in 0..4 {
        for col in 0..4 {
            a[(row, col)] = d.drift[(row, col)];
        }
    }
    let coupling2 = std::f64::consts::SQRT_2 * r.readout_coupling();
    a[(4, 4)] = -r.cavity2_decay;
    a[(4, 5)] = r.cavity2_detuning;
    a[(5, 4)] = -r.cavity2_detuning;
    a[(5, 5)] = -r.cavity2_decay;
    a[(5, 0)] = coupling2;
    if back_action {
        a[(1, 4)] = coupling2;
    }

    let mut diff = Matrix6::<f64>::zeros();
    for i in 0..4 {
        diff[(i, i)] = d.diffusion[(i, i)];
    }
    diff[(4, 4)] = r.cavity2_decay;
    diff[(5, 5)] = r.cavity2_decay;

    ExtendedModel {
        drift: a,
        diffusion: diff,
        mech_freq: d.mech_freq,
        mech_damping: d.mech_damping,
        cavity_decay: d.cavity_decay,
        cavity2_decay: r.cavity2_decay,
        effective_detuning: d.effective_detuning,
        cavity2_detuning: r.cavity2_detuning,
        mean_thermal: d.mean_thermal,
    }
}

/// Steady-state covariance of the extended model: the full 6×6 solution
/// and the mirror + primary-cavity 4×4 reduction.
pub fn steady_state_extended(m: &ExtendedModel) -> Result<(DMatrix<f64>, CovarianceMatrix)> {
    let a = DMatrix::from_iterator(6, 6, m.drift.iter().copied());
    let d = DMatrix::from_iterator(6, 6, m.diffusion.iter().copied());
    let v6 = lyapunov::solve_lyapunov_dyn(&a, &d)?;
    let mut v4 = Matrix4::<f64>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            v4[(r, c)] = v6[(r, c)];
        }
    }
    Ok((v6, CovarianceMatrix::new(v4)?))
}

/// Adiabatic output gain G₂α₂/√κ₂ of the readout chain.
///
/// In the frame rotating at Δ₂ = w_m and after adiabatic elimination of
/// the cavity response, the output field is
/// `ã₂ᵒᵘᵗ = i·(G₂α₂/√κ₂)·δb̃ + ã₂ⁱⁿ`, so a homodyne of the output sees the
/// slow mirror quadrature scaled by this gain on top of unit input noise:
/// symmetrized output variance `gain²·⟨δq̃²⟩ + 1/2` per unit bandwidth.
/// Errors list every violated regime inequality.
pub fn adiabatic_output_gain(r: &ReadoutParams) -> Result<f64> {
    let mut violations = Vec::new();
    if !r.rwa_ok {
        violations.push(format!(
            "RWA needs Δ₂ = w_m (got Δ₂ = {:.6e})",
            r.cavity2_detuning
        ));
    }
    if !r.adiabatic_freq_ok {
        violations.push(format!(
            "adiabatic elimination needs w_m ≥ 10·κ₂ (κ₂ = {:.6e})",
            r.cavity2_decay
        ));
    }
    if !r.adiabatic_coupling_ok {
        violations.push(format!(
            "adiabatic elimination needs κ₂ ≥ 10·G₂α₂/√2 (G₂α₂ = {:.6e})",
            r.readout_coupling()
        ));
    }
    if !violations.is_empty() {
        return Err(Error::RegimeViolation(violations.join("; ")));
    }
    Ok(r.readout_coupling() / r.cavity2_decay.sqrt())
}

/// Controls of the trajectory ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// Integration step, s. Must resolve the fastest model frequency:
    /// dt ≤ 0.01/max(w_m, κ, κ₂, |Δ|, |Δ₂|).
    pub dt: f64,
    /// Discarded transient, s.
    pub burn_in: f64,
    /// Averaging window per trajectory, s. Mirror-variance convergence
    /// needs at least 50/γ_m.
    pub sample_time: f64,
    /// Number of independent trajectories (≥ 2 so a standard error exists).
    pub n_traj: usize,
    /// Master seed; per-trajectory generators use hash(seed, index).
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn validate(&self, m: &ExtendedModel) -> Result<()> {
        if !(self.dt > 0.0) || !(self.sample_time > 0.0) || !(self.burn_in >= 0.0) {
            return Err(Error::InvalidParams(
                "dt and sample_time must be positive, burn_in non-negative".into(),
            ));
        }
        if self.n_traj < 2 {
            return Err(Error::InvalidParams(
                "n_traj must be at least 2 for an ensemble standard error".into(),
            ));
        }
        let max_rate = m.max_rate();
        if self.dt > 0.01 / max_rate {
            return Err(Error::StepTooLarge(format!(
                "dt = {:.3e} exceeds 0.01/max-rate = {:.3e}",
                self.dt,
                0.01 / max_rate
            )));
        }
        if m.mech_damping <= 0.0 {
            return Err(Error::InvalidParams(
                "trajectory averaging needs γ_m > 0 (the mirror never thermalizes otherwise)"
                    .into(),
            ));
        }
        let floor = 50.0 / m.mech_damping;
        if self.sample_time < floor {
            return Err(Error::InvalidParams(format!(
                "sample_time = {:.3e} below the mirror-variance convergence floor 50/γ_m = {:.3e}",
                self.sample_time, floor
            )));
        }
        Ok(())
    }

    /// Defaults: the step at its resolution bound, the averaging window at
    /// its convergence floor, burn-in of 30 relaxation times of the slowest
    /// mode, 10 trajectories.
    pub fn defaults_for(m: &ExtendedModel, seed: u64) -> Result<Self> {
        let a = DMatrix::from_iterator(6, 6, m.drift.iter().copied());
        let abscissa = linalg::spectral_abscissa(&a)?;
        if !(abscissa < 0.0) {
            return Err(Error::UnstableSystem(format!(
                "extended drift has spectral abscissa {abscissa:.3e}"
            )));
        }
        Ok(Self {
            dt: 0.01 / m.max_rate(),
            burn_in: 30.0 / abscissa.abs(),
            sample_time: 50.0 / m.mech_damping * 1.01,
            n_traj: 10,
            seed,
        })
    }
}

/// Ensemble estimate of the mirror + primary-cavity covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CmEstimate {
    /// Ensemble mean of the per-trajectory time averages (symmetrized).
    pub mean: Matrix4<f64>,
    /// Per-entry standard error over the trajectory ensemble.
    pub stderr: Matrix4<f64>,
    pub n_traj: usize,
}

/// splitmix64-style mix of the master seed and a stream index.
fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct StepKernel {
    a_dt: [[f64; 6]; 6],
    noise_std: [f64; 6],
}

impl StepKernel {
    fn new(m: &ExtendedModel, dt: f64) -> Self {
        let mut a_dt = [[0.0; 6]; 6];
        for r in 0..6 {
            for c in 0..6 {
                a_dt[r][c] = m.drift[(r, c)] * dt;
            }
        }
        let mut noise_std = [0.0; 6];
        for i in 0..6 {
            noise_std[i] = (m.diffusion[(i, i)] * dt).sqrt();
        }
        Self { a_dt, noise_std }
    }

    #[inline]
    fn step(&self, u: &mut [f64; 6], rng: &mut ChaCha8Rng) {
        let mut du = [0.0; 6];
        for r in 0..6 {
            let row = &self.a_dt[r];
            du[r] = row[0] * u[0]
                + row[1] * u[1]
                + row[2] * u[2]
                + row[3] * u[3]
                + row[4] * u[4]
                + row[5] * u[5];
        }
        for i in 0..6 {
            let s = self.noise_std[i];
            if s > 0.0 {
                let g: f64 = rng.sample(StandardNormal);
                du[i] += s * g;
            }
            u[i] += du[i];
        }
    }
}

fn check_step_resolution(m: &ExtendedModel, dt: f64) -> Result<()> {
    let a = DMatrix::from_iterator(6, 6, m.drift.iter().copied());
    let abscissa = linalg::spectral_abscissa(&a)?;
    if !(abscissa < 0.0) {
        return Err(Error::UnstableSystem(format!(
            "extended drift has spectral abscissa {abscissa:.3e}"
        )));
    }
    let rho = linalg::spectral_radius(&a)?;
    if rho * dt > 0.1 {
        return Err(Error::StepTooLarge(format!(
            "|λ|·dt = {:.3e} exceeds 0.1",
            rho * dt
        )));
    }
    Ok(())
}

fn single_trajectory(kernel: &StepKernel, c: &TrajectoryConfig, index: u64) -> Matrix4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(c.seed, index));
    let mut u = [0.0f64; 6];
    let burn_steps = (c.burn_in / c.dt).ceil() as u64;
    let sample_steps = (c.sample_time / c.dt).ceil() as u64;
    for _ in 0..burn_steps {
        kernel.step(&mut u, &mut rng);
    }
    let mut acc = [0.0f64; 10];
    for _ in 0..sample_steps {
        kernel.step(&mut u, &mut rng);
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                acc[k] += u[i] * u[j];
                k += 1;
            }
        }
    }
    let inv = 1.0 / sample_steps as f64;
    let mut v = Matrix4::<f64>::zeros();
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            v[(i, j)] = acc[k] * inv;
            v[(j, i)] = v[(i, j)];
            k += 1;
        }
    }
    v
}

/// Euler-Maruyama ensemble estimate of the stationary covariance over the
/// first four variables.
///
/// Each trajectory owns a generator seeded with hash(master, index), so
/// results are independent of scheduling; the ensemble reduction is an
/// ordered fold. Same seed, same estimate, bit for bit.
pub fn simulate_trajectories(m: &ExtendedModel, c: &TrajectoryConfig) -> Result<CmEstimate> {
    c.validate(m)?;
    check_step_resolution(m, c.dt)?;
    let kernel = StepKernel::new(m, c.dt);

    let indices: Vec<u64> = (0..c.n_traj as u64).collect();
    #[cfg(feature = "parallel")]
    let per_traj: Vec<Matrix4<f64>> = {
        use rayon::prelude::*;
        indices
            .par_iter()
            .map(|&i| single_trajectory(&kernel, c, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_traj: Vec<Matrix4<f64>> = indices
        .iter()
        .map(|&i| single_trajectory(&kernel, c, i))
        .collect();

    let n = per_traj.len() as f64;
    let mut mean = Matrix4::<f64>::zeros();
    for v in &per_traj {
        mean += v;
    }
    mean /= n;
    let mut var = Matrix4::<f64>::zeros();
    for v in &per_traj {
        let d = v - mean;
        var += d.component_mul(&d);
    }
    var /= n - 1.0;
    let stderr = var.map(|x| (x / n).sqrt());

    Ok(CmEstimate {
        mean,
        stderr,
        n_traj: per_traj.len(),
    })
}

/// Reconstruct the entanglement report from a covariance estimate, with
/// the uncertainty propagated by resampling.
///
/// Every entry of V̂ is jittered by its standard error over `resamples`
/// Gaussian draws (symmetrically, so the draw stays a covariance matrix);
/// the spread of the resampled E_N is the reported 1σ uncertainty. The
/// estimate is rejected as unphysical only when its smallest symplectic
/// eigenvalue undershoots 1/2 by more than three resampled standard
/// deviations of that eigenvalue.
pub fn reconstruct_entanglement(
    est: &CmEstimate,
    resamples: usize,
    seed: u64,
) -> Result<(EntanglementReport, f64)> {
    let v = CovarianceMatrix::new(est.mean)?;
    let [nu_min, _] = lyapunov::symplectic_eigenvalues(&v)?;

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xcafe));
    let mut log_negs = Vec::with_capacity(resamples);
    let mut nu_mins = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut draw = est.mean;
        for i in 0..4 {
            for j in i..4 {
                let g: f64 = rng.sample(StandardNormal);
                let jitter = est.stderr[(i, j)] * g;
                draw[(i, j)] += jitter;
                if j > i {
                    draw[(j, i)] += jitter;
                }
            }
        }
        let Ok(cm) = CovarianceMatrix::new(draw) else {
            continue;
        };
        // Eigenvalue route only: it stays defined for draws that wander
        // slightly past the physical boundary.
        let Ok(eta) = entanglement::eta_minus_eigen(&cm) else {
            continue;
        };
        let Ok([nu, _]) = lyapunov::symplectic_eigenvalues(&cm) else {
            continue;
        };
        log_negs.push((-(2.0 * eta).ln()).max(0.0));
        nu_mins.push(nu);
    }
    if resamples > 0 && log_negs.len() < resamples.max(5) * 4 / 5 {
        return Err(Error::NumericalFailure(format!(
            "only {}/{} resamples produced a usable covariance",
            log_negs.len(),
            resamples
        )));
    }

    let std = |xs: &[f64]| {
        if xs.len() < 2 {
            return 0.0;
        }
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let sigma_nu = std(&nu_mins);
    if nu_min < 0.5 - 1e-9 - 3.0 * sigma_nu {
        return Err(Error::UnphysicalState(format!(
            "estimated CM has min symplectic eigenvalue {nu_min:.6} more than 3σ ({sigma_nu:.2e}) below 1/2"
        )));
    }

    let report = entanglement::report(&v)?;
    Ok((report, std(&log_negs)))
}

/// Variance of the demodulated, low-pass-filtered readout output — the
/// simulated homodyne record.
///
/// The lab-frame output `X₂ᵒᵘᵗ = √(2κ₂)·δX₂ − X₂ⁱⁿ` is demodulated at w_m
/// (the slow-variable transform `δõ = δo·e^{−iw_m t}` maps to
/// `cos·X₂ + sin·Y₂` on quadratures) and fed through a one-pole filter of
/// bandwidth `filter_bw`. Returns the ensemble (variance, standard error).
/// The white input contributes `filter_bw/4`; a mirror line of width Γ
/// adds `gain²·⟨δq̃²⟩·filter_bw/(filter_bw + Γ)` on top when the adiabatic
/// regime holds.
pub fn simulate_demodulated_output(
    m: &ExtendedModel,
    c: &TrajectoryConfig,
    filter_bw: f64,
) -> Result<(f64, f64)> {
    c.validate(m)?;
    check_step_resolution(m, c.dt)?;
    if !(filter_bw > 0.0) || filter_bw * c.dt > 0.1 {
        return Err(Error::InvalidParams(format!(
            "filter bandwidth {filter_bw:.3e} must be positive and resolved by dt"
        )));
    }
    let kernel = StepKernel::new(m, c.dt);
    let kappa2 = m.cavity2_decay;
    let wm = m.mech_freq;
    let dt = c.dt;
    let sqrt_2k2 = (2.0 * kappa2).sqrt();
    // Input-noise increments are recovered from the same Gaussians that
    // drive the cavity quadratures: ξ = √(2κ₂)·X₂ⁱⁿdt has std √(κ₂·dt).
    let in_std = (kappa2 * dt).sqrt();
    let (rot_c, rot_s) = ((wm * dt).cos(), (wm * dt).sin());

    let estimate_one = |index: u64| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(c.seed, index));
        let mut u = [0.0f64; 6];
        let mut f = 0.0f64;
        let (mut cos_t, mut sin_t) = (1.0f64, 0.0f64);
        let burn_steps = ((c.burn_in + 10.0 / filter_bw) / dt).ceil() as u64;
        let sample_steps = (c.sample_time / dt).ceil() as u64;
        let mut acc = 0.0f64;
        for step in 0..burn_steps + sample_steps {
            // One Euler-Maruyama step, reusing the cavity-2 noise draws for
            // the output record.
            let mut du = [0.0; 6];
            for r in 0..6 {
                let row = &kernel.a_dt[r];
                du[r] = row[0] * u[0]
                    + row[1] * u[1]
                    + row[2] * u[2]
                    + row[3] * u[3]
                    + row[4] * u[4]
                    + row[5] * u[5];
            }
            let mut xi4 = 0.0;
            let mut xi5 = 0.0;
            for i in 0..6 {
                let s = kernel.noise_std[i];
                if s > 0.0 {
                    let g: f64 = rng.sample(StandardNormal);
                    let noise = s * g;
                    du[i] += noise;
                    if i == 4 {
                        xi4 = g * in_std;
                    } else if i == 5 {
                        xi5 = g * in_std;
                    }
                }
            }
            // Demodulated output increment: the intracavity part uses the
            // pre-step state, the input part the fresh increments.
            let demod_cavity = cos_t * u[4] + sin_t * u[5];
            let demod_in = (cos_t * xi4 + sin_t * xi5) / sqrt_2k2;
            f += filter_bw * ((sqrt_2k2 * demod_cavity - f) * dt - demod_in);
            for i in 0..6 {
                u[i] += du[i];
            }
            let (nc, ns) = (cos_t * rot_c - sin_t * rot_s, sin_t * rot_c + cos_t * rot_s);
            cos_t = nc;
            sin_t = ns;
            if step >= burn_steps {
                acc += f * f;
            }
        }
        acc / sample_steps as f64
    };

    let indices: Vec<u64> = (0..c.n_traj as u64).collect();
    #[cfg(feature = "parallel")]
    let vars: Vec<f64> = {
        use rayon::prelude::*;
        indices.par_iter().map(|&i| estimate_one(i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let vars: Vec<f64> = indices.iter().map(|&i| estimate_one(i)).collect();

    let n = vars.len() as f64;
    let mean = vars.iter().sum::<f64>() / n;
    let var = vars.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
