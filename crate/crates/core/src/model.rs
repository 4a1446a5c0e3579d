//! Experimental parameters → derived model quantities and the linearized
//! drift/diffusion matrices.
//!
//! Quadrature ordering is `u = (δq, δp, δX, δY)` with vacuum variance 1/2.
//! The drift and diffusion matrices are
//!
//! ```text
//!     ⎛  0    w_m    0    0 ⎞
//! A = ⎜ −w_m  −γ_m   G    0 ⎟ ,   D = Diag[0, γ_m(2n̄+1), κ, κ]
//!     ⎜  0     0    −κ    Δ ⎟
//!     ⎝  G     0    −Δ   −κ ⎠
//! ```
//!
//! Finesse is converted to the cavity decay rate with **κ = πc/(F·L)**.
//! For F = 1.07×10⁴ and L = 1 mm this gives κ ≈ 1.4·w_m for a 10 MHz
//! oscillator, which is the regime the preset sweeps target. Conventions
//! differ between sources: the half-width alternative κ = πc/(2FL) is half
//! as large and would push the Δ = w_m operating point of those presets
//! past the instability threshold, so the choice matters and is fixed here
//! once.

use nalgebra::Matrix4;

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::stability;

/// Cavity detuning input: either the bare laser-cavity detuning Δ₀, or the
/// effective detuning Δ = Δ₀ − G₀²α_s²/w_m already including the static
/// radiation-pressure shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetuningSpec {
    /// Bare detuning Δ₀ = w_c − w₀ (rad/s).
    Bare(f64),
    /// Target effective detuning Δ (rad/s).
    Effective(f64),
}

/// User-facing experimental inputs, all SI (lengths m, power W, angular
/// frequencies rad/s, mass kg, temperature K).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub cavity_length: f64,
    pub wavelength: f64,
    pub input_power: f64,
    pub mech_freq: f64,
    pub mech_damping: f64,
    pub mass: f64,
    pub temperature: f64,
    pub finesse: f64,
    pub detuning: DetuningSpec,
}

impl PhysicalParams {
    /// Mechanical quality factor Q = w_m/γ_m (∞ for γ_m = 0).
    pub fn quality_factor(&self) -> f64 {
        self.mech_freq / self.mech_damping
    }

    /// Check construction invariants. The Markovian treatment of the mirror
    /// bath requires a large quality factor; Q ≤ 10 is rejected outright.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cavity_length", self.cavity_length),
            ("wavelength", self.wavelength),
            ("mech_freq", self.mech_freq),
            ("mass", self.mass),
            ("finesse", self.finesse),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(self.input_power >= 0.0) || !self.input_power.is_finite() {
            return Err(Error::InvalidParams(format!(
                "input_power must be non-negative, got {}",
                self.input_power
            )));
        }
        if !(self.mech_damping >= 0.0) || !self.mech_damping.is_finite() {
            return Err(Error::InvalidParams(format!(
                "mech_damping must be non-negative, got {}",
                self.mech_damping
            )));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::InvalidParams(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        let q = self.quality_factor();
        if !(q > 10.0) {
            return Err(Error::InvalidParams(format!(
                "quality factor w_m/γ_m = {q:.3} must exceed 10 for the \
                 delta-correlated Brownian-noise limit to hold"
            )));
        }
        match self.detuning {
            DetuningSpec::Bare(d) | DetuningSpec::Effective(d) => {
                if !d.is_finite() {
                    return Err(Error::InvalidParams("detuning must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Validating constructor for use in builder-style call sites.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

/// Rates and amplitudes that depend only on the inputs (not on the resolved
/// steady state): decay rate, laser/cavity frequencies, single-photon
/// coupling, drive amplitude, thermal occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseRates {
    /// Cavity decay rate κ = πc/(F·L), rad/s.
    pub cavity_decay: f64,
    /// Laser angular frequency w₀ = 2πc/λ, rad/s.
    pub laser_freq: f64,
    /// Cavity resonance w_c. Exact for a bare-detuning spec (w₀ + Δ₀);
    /// provisional (w₀) for an effective-detuning spec until the bare
    /// detuning has been back-computed by the fixed point.
    pub cavity_freq: f64,
    /// Single-photon optomechanical coupling G₀ = (w_c/L)·√(ħ/(m·w_m)), rad/s.
    pub bare_coupling: f64,
    /// Drive amplitude |E| = √(2Pκ/ħw₀), rad/s.
    pub drive_amplitude: f64,
    /// Mean thermal phonon number n̄ = 1/(e^{ħw_m/k_BT} − 1).
    pub mean_thermal: f64,
}

/// Fully resolved model at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedModel {
    pub mech_freq: f64,
    pub mech_damping: f64,
    pub cavity_decay: f64,
    pub laser_freq: f64,
    pub cavity_freq: f64,
    pub bare_coupling: f64,
    pub drive_amplitude: f64,
    pub mean_thermal: f64,
    /// Intracavity steady-state amplitude α_s (phase chosen real, ≥ 0).
    pub intracavity_amp: f64,
    /// Effective detuning Δ including the radiation-pressure shift.
    pub effective_detuning: f64,
    /// Bare detuning Δ₀ = Δ + G₀²α_s²/w_m.
    pub bare_detuning: f64,
    /// Static mirror displacement q_s = G₀α_s²/w_m (steady momentum is 0).
    pub mirror_displacement: f64,
    /// Effective drive-enhanced coupling G = G₀·α_s·√2.
    pub effective_coupling: f64,
    /// Drift matrix of the fluctuation dynamics.
    pub drift: Matrix4<f64>,
    /// Diffusion matrix of the input noises.
    pub diffusion: Matrix4<f64>,
}

/// One root of the steady-state intensity cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateBranch {
    /// Intracavity intensity α_s² (dimensionless photon-amplitude squared).
    pub intensity: f64,
    /// Effective detuning on this branch, Δ = Δ₀ − G₀²·α_s²/w_m.
    pub effective_detuning: f64,
    /// Linearized-stability verdict for this branch.
    pub stable: bool,
    /// Index in ascending-intensity order (0..=2).
    pub branch_index: usize,
}

/// Mean thermal occupation of the mirror bath.
///
/// Returns 0 at T = 0 and also once ħw_m/k_BT > 700, where the exact value
/// underflows anyway.
pub fn mean_thermal_occupation(mech_freq: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * mech_freq / (BOLTZMANN * temperature);
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}

fn bare_coupling_at(p: &PhysicalParams, cavity_freq: f64) -> f64 {
    (cavity_freq / p.cavity_length) * (HBAR / (p.mass * p.mech_freq)).sqrt()
}

/// Derive the drive-independent constants of the model.
pub fn derive_constants(p: &PhysicalParams) -> Result<BaseRates> {
    p.validate()?;
    let kappa = std::f64::consts::PI * SPEED_OF_LIGHT / (p.finesse * p.cavity_length);
    let laser_freq = std::f64::consts::TAU * SPEED_OF_LIGHT / p.wavelength;
    let cavity_freq = match p.detuning {
        DetuningSpec::Bare(d0) => laser_freq + d0,
        DetuningSpec::Effective(_) => laser_freq,
    };
    if cavity_freq <= 0.0 {
        return Err(Error::InvalidParams(
            "bare detuning places the cavity resonance at a non-positive frequency".into(),
        ));
    }
    let rates = BaseRates {
        cavity_decay: kappa,
        laser_freq,
        cavity_freq,
        bare_coupling: bare_coupling_at(p, cavity_freq),
        drive_amplitude: (2.0 * p.input_power * kappa / (HBAR * laser_freq)).sqrt(),
        mean_thermal: mean_thermal_occupation(p.mech_freq, p.temperature),
    };
    for (name, v) in [
        ("kappa", rates.cavity_decay),
        ("laser_freq", rates.laser_freq),
        ("bare_coupling", rates.bare_coupling),
        ("drive_amplitude", rates.drive_amplitude),
        ("mean_thermal", rates.mean_thermal),
    ] {
        if !v.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "derived constant {name} is not finite"
            )));
        }
    }
    Ok(rates)
}

/// Drift matrix from the resolved scalar quantities.
pub fn build_drift(d: &DerivedModel) -> Matrix4<f64> {
    drift_from_scalars(
        d.mech_freq,
        d.mech_damping,
        d.cavity_decay,
        d.effective_detuning,
        d.effective_coupling,
    )
}

/// Diffusion matrix from the resolved scalar quantities.
pub fn build_diffusion(d: &DerivedModel) -> Matrix4<f64> {
    diffusion_from_scalars(d.mech_damping, d.mean_thermal, d.cavity_decay)
}

pub(crate) fn drift_from_scalars(
    mech_freq: f64,
    mech_damping: f64,
    kappa: f64,
    delta: f64,
    coupling: f64,
) -> Matrix4<f64> {
    Matrix4::new(
        0.0, mech_freq, 0.0, 0.0, //
        -mech_freq, -mech_damping, coupling, 0.0, //
        0.0, 0.0, -kappa, delta, //
        coupling, 0.0, -delta, -kappa,
    )
}

pub(crate) fn diffusion_from_scalars(mech_damping: f64, nbar: f64, kappa: f64) -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(
        0.0,
        mech_damping * (2.0 * nbar + 1.0),
        kappa,
        kappa,
    ))
}

/// Resolve the model at a prescribed **effective** detuning Δ.
///
/// The intensity follows directly from α_s = E/√(κ² + Δ²) and the implied
/// bare detuning is back-computed. Since G₀ depends weakly on the cavity
/// resonance (through w_c = w₀ + Δ₀), a short fixed-point iteration settles
/// w_c, G₀ and Δ₀ simultaneously; it contracts at O(Δ₀/w₀) ≈ 10⁻⁷ per pass.
pub fn steady_state_from_detuning(p: &PhysicalParams, delta: f64) -> Result<DerivedModel> {
    let base = derive_constants(p)?;
    if !delta.is_finite() {
        return Err(Error::InvalidParams("effective detuning must be finite".into()));
    }
    let kappa = base.cavity_decay;
    let alpha = base.drive_amplitude / (kappa * kappa + delta * delta).sqrt();
    let intensity = alpha * alpha;

    let mut cavity_freq = base.laser_freq;
    let mut g0 = bare_coupling_at(p, cavity_freq);
    let mut bare_detuning = delta;
    for _ in 0..4 {
        bare_detuning = delta + g0 * g0 * intensity / p.mech_freq;
        cavity_freq = base.laser_freq + bare_detuning;
        g0 = bare_coupling_at(p, cavity_freq);
    }

    let coupling = g0 * alpha * std::f64::consts::SQRT_2;
    let mut model = DerivedModel {
        mech_freq: p.mech_freq,
        mech_damping: p.mech_damping,
        cavity_decay: kappa,
        laser_freq: base.laser_freq,
        cavity_freq,
        bare_coupling: g0,
        drive_amplitude: base.drive_amplitude,
        mean_thermal: base.mean_thermal,
        intracavity_amp: alpha,
        effective_detuning: delta,
        bare_detuning,
        mirror_displacement: g0 * intensity / p.mech_freq,
        effective_coupling: coupling,
        drift: Matrix4::zeros(),
        diffusion: Matrix4::zeros(),
    };
    model.drift = build_drift(&model);
    model.diffusion = build_diffusion(&model);
    Ok(model)
}

/// All non-negative real roots of the steady-state intensity equation
///
/// ```text
/// x · (κ² + (Δ₀ − G₀²x/w_m)²) = E²,     x = α_s²
/// ```
///
/// sorted by ascending intensity and tagged with the linearized-stability
/// verdict of each branch. One root at minimum; three in the bistable
/// regime, where the middle branch is the unstable saddle.
pub fn solve_steady_state(p: &PhysicalParams, bare_detuning: f64) -> Result<Vec<SteadyStateBranch>> {
    p.validate()?;
    if !bare_detuning.is_finite() {
        return Err(Error::InvalidParams("bare detuning must be finite".into()));
    }
    let spec_p = PhysicalParams {
        detuning: DetuningSpec::Bare(bare_detuning),
        ..p.clone()
    };
    let base = derive_constants(&spec_p)?;
    let kappa = base.cavity_decay;
    let g0 = base.bare_coupling;
    let e2 = base.drive_amplitude * base.drive_amplitude;
    let beta = g0 * g0 / p.mech_freq;

    let roots = intensity_roots(beta, bare_detuning, kappa, e2);

    let mut branches = Vec::with_capacity(roots.len());
    for (branch_index, &x) in roots.iter().enumerate() {
        let delta = bare_detuning - beta * x;
        let coupling = g0 * x.sqrt() * std::f64::consts::SQRT_2;
        let stable = stability::is_stable_scalars(
            p.mech_freq,
            p.mech_damping,
            kappa,
            delta,
            coupling,
        );
        branches.push(SteadyStateBranch {
            intensity: x,
            effective_detuning: delta,
            stable,
            branch_index,
        });
    }
    Ok(branches)
}

/// Resolve a model from its detuning spec: directly for an effective
/// detuning; via the intensity cubic for a bare detuning, keeping the
/// lowest-intensity stable branch (the branch reached by adiabatically
/// ramping the power up) and falling back to the lowest root if no branch
/// is stable so that downstream stability checks can report the failure.
pub fn model_from_params(p: &PhysicalParams) -> Result<DerivedModel> {
    match p.detuning {
        DetuningSpec::Effective(delta) => steady_state_from_detuning(p, delta),
        DetuningSpec::Bare(d0) => {
            let branches = solve_steady_state(p, d0)?;
            let pick = branches
                .iter()
                .find(|b| b.stable)
                .or_else(|| branches.first())
                .expect("intensity cubic always has a root");
            steady_state_from_detuning(p, pick.effective_detuning)
        }
    }
}

/// Real non-negative roots of `β²x³ − 2Δ₀βx² + (κ² + Δ₀²)x − E² = 0`,
/// ascending. Roots are Newton-polished on the unexpanded residual
/// `x(κ² + (Δ₀ − βx)²) − E²` and validated against it; any true root obeys
/// `x ≤ E²/κ²`, which bounds the bisection fallback used if the closed form
/// degenerates.
fn intensity_roots(beta: f64, delta0: f64, kappa: f64, e2: f64) -> Vec<f64> {
    if e2 == 0.0 {
        return vec![0.0];
    }
    let upper = e2 / (kappa * kappa);
    let f = |x: f64| {
        let d = delta0 - beta * x;
        x * (kappa * kappa + d * d) - e2
    };
    let fprime = |x: f64| {
        let d = delta0 - beta * x;
        kappa * kappa + d * d - 2.0 * beta * x * d
    };

    let mut candidates: Vec<f64> = if beta == 0.0 {
        vec![e2 / (kappa * kappa + delta0 * delta0)]
    } else {
        cubic_real_roots(
            -2.0 * delta0 / beta,
            (kappa * kappa + delta0 * delta0) / (beta * beta),
            -e2 / (beta * beta),
        )
    };

    // Polish and validate on the unexpanded form.
    let mut roots: Vec<f64> = Vec::new();
    for x0 in candidates.drain(..) {
        if !x0.is_finite() {
            continue;
        }
        let mut x = x0.clamp(0.0, upper * (1.0 + 1e-9));
        for _ in 0..50 {
            let fx = f(x);
            let dfx = fprime(x);
            if dfx == 0.0 {
                break;
            }
            let step = fx / dfx;
            x -= step;
            if step.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        if !(0.0..=upper * (1.0 + 1e-9)).contains(&x) {
            continue;
        }
        if f(x).abs() > 1e-6 * e2 {
            continue;
        }
        if !roots
            .iter()
            .any(|r| (r - x).abs() <= 1e-9 * r.abs().max(x.abs()).max(f64::MIN_POSITIVE))
        {
            roots.push(x);
        }
    }

    if roots.is_empty() {
        // f(0) = −E² < 0 and f(E²/κ²) ≥ 0, so a root is always bracketed.
        let (mut lo, mut hi) = (0.0, upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Real roots of the monic cubic `x³ + a x² + b x + c`.
fn cubic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    // Depress: x = t − a/3  ⇒  t³ + pt + q.
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc > 0.0 {
        // One real root; avoid cancellation by deriving v from u.
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let t = if u != 0.0 { u - p / (3.0 * u) } else { (-q).cbrt() };
        vec![t + shift]
    } else if p == 0.0 {
        vec![shift + (-q).cbrt()]
    } else {
        // Three real roots (trigonometric form).
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig_params(mass: f64, finesse: f64, delta_over_wm: f64) -> PhysicalParams {
        let wm = std::f64::consts::TAU * 1.0e7;
        PhysicalParams {
            cavity_length: 1.0e-3,
            wavelength: 810.0e-9,
            input_power: 50.0e-3,
            mech_freq: wm,
            mech_damping: std::f64::consts::TAU * 100.0,
            mass,
            temperature: 0.4,
            finesse,
            detuning: DetuningSpec::Effective(delta_over_wm * wm),
        }
    }

    #[test]
    fn cavity_decay_from_finesse() {
        let p = fig_params(5.0e-12, 1.07e4, 1.0);
        let base = derive_constants(&p).unwrap();
        // πc/(F·L) evaluated by hand for F = 1.07e4, L = 1 mm.
        assert_relative_eq!(base.cavity_decay, 8.8021101276e7, max_relative = 1e-9);
    }

    #[test]
    fn thermal_occupation_values() {
        let wm = std::f64::consts::TAU * 1.0e7;
        // Direct evaluation of the Planck occupation at 400 mK.
        let x = HBAR * wm / (BOLTZMANN * 0.4);
        let expected = 1.0 / (x.exp() - 1.0);
        assert_relative_eq!(mean_thermal_occupation(wm, 0.4), expected, max_relative = 1e-12);
        assert_relative_eq!(mean_thermal_occupation(wm, 0.4), 832.9648654, max_relative = 1e-8);
        assert_eq!(mean_thermal_occupation(wm, 0.0), 0.0);
        // Deep quantum regime: exp would overflow, value underflows to 0.
        assert_eq!(mean_thermal_occupation(wm, 1.0e-9), 0.0);
    }

    #[test]
    fn occupation_monotone_and_classical_limit() {
        let wm = std::f64::consts::TAU * 1.0e7;
        let mut last = -1.0;
        for t in [0.01, 0.1, 0.4, 1.0, 4.0, 20.0, 100.0, 300.0] {
            let n = mean_thermal_occupation(wm, t);
            assert!(n > last, "n̄ must increase with T");
            last = n;
        }
        // Equipartition: n̄·ħw_m/(k_B T) → 1 from below as T grows.
        let t = 300.0;
        let ratio = mean_thermal_occupation(wm, t) * HBAR * wm / (BOLTZMANN * t);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = fig_params(5.0e-12, 1.07e4, 1.0);
        p.mass = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let mut p = fig_params(5.0e-12, 1.07e4, 1.0);
        p.cavity_length = -1.0;
        assert!(p.validate().is_err());
        // Q = w_m/γ_m must exceed 10.
        let mut p = fig_params(5.0e-12, 1.07e4, 1.0);
        p.mech_damping = p.mech_freq / 5.0;
        assert!(p.validate().is_err());
        // γ_m = 0 means Q = ∞, which passes the gate.
        let mut p = fig_params(5.0e-12, 1.07e4, 1.0);
        p.mech_damping = 0.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn drift_matches_hand_assembled_matrix() {
        let p = fig_params(5.0e-12, 1.07e4, 1.0);
        let d = steady_state_from_detuning(&p, p.mech_freq).unwrap();
        let (wm, gm) = (d.mech_freq, d.mech_damping);
        let (k, del, g) = (d.cavity_decay, d.effective_detuning, d.effective_coupling);
        let expected = Matrix4::new(
            0.0, wm, 0.0, 0.0, //
            -wm, -gm, g, 0.0, //
            0.0, 0.0, -k, del, //
            g, 0.0, -del, -k,
        );
        assert_eq!(d.drift, expected);
        // Structural zeros and the shared coupling entries of the pattern.
        assert_eq!(d.drift[(0, 0)], 0.0);
        assert_eq!(d.drift[(0, 2)], 0.0);
        assert_eq!(d.drift[(0, 3)], 0.0);
        assert_eq!(d.drift[(1, 3)], 0.0);
        assert_eq!(d.drift[(2, 0)], 0.0);
        assert_eq!(d.drift[(2, 1)], 0.0);
        assert_eq!(d.drift[(3, 1)], 0.0);
        assert_eq!(d.drift[(1, 2)], d.drift[(3, 0)]);
        // Diffusion: Diag[0, γ(2n̄+1), κ, κ].
        assert_eq!(d.diffusion[(0, 0)], 0.0);
        assert_relative_eq!(
            d.diffusion[(1, 1)],
            gm * (2.0 * d.mean_thermal + 1.0),
            max_relative = 1e-15
        );
        assert_eq!(d.diffusion[(2, 2)], k);
        assert_eq!(d.diffusion[(3, 3)], k);
    }

    #[test]
    fn effective_coupling_consistency() {
        let p = fig_params(5.0e-12, 1.07e4, 1.0);
        let d = steady_state_from_detuning(&p, p.mech_freq).unwrap();
        assert_relative_eq!(
            d.effective_coupling,
            d.bare_coupling * d.intracavity_amp * std::f64::consts::SQRT_2,
            max_relative = 1e-15
        );
        // |α_s|²(κ² + Δ²) = E².
        let lhs = d.intracavity_amp.powi(2)
            * (d.cavity_decay.powi(2) + d.effective_detuning.powi(2));
        assert_relative_eq!(lhs, d.drive_amplitude.powi(2), max_relative = 1e-12);
        assert_relative_eq!(
            d.mirror_displacement,
            d.bare_coupling * d.intracavity_amp.powi(2) / d.mech_freq,
            max_relative = 1e-15
        );
    }

    #[test]
    fn zero_power_decouples() {
        let mut p = fig_params(5.0e-12, 1.07e4, 1.0);
        p.input_power = 0.0;
        let d = steady_state_from_detuning(&p, p.mech_freq).unwrap();
        assert_eq!(d.intracavity_amp, 0.0);
        assert_eq!(d.effective_coupling, 0.0);
        // Block-diagonal drift: mirror and cavity decouple.
        assert_eq!(d.drift[(1, 2)], 0.0);
        assert_eq!(d.drift[(3, 0)], 0.0);
    }

    #[test]
    fn coupling_scales_as_sqrt_power() {
        let p1 = fig_params(5.0e-12, 1.07e4, 1.0);
        let mut p2 = p1.clone();
        p2.input_power *= 2.0;
        let d1 = steady_state_from_detuning(&p1, p1.mech_freq).unwrap();
        let d2 = steady_state_from_detuning(&p2, p2.mech_freq).unwrap();
        assert_relative_eq!(
            d2.effective_coupling / d1.effective_coupling,
            std::f64::consts::SQRT_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn decoupled_limit_single_branch() {
        // Huge mass: the radiation-pressure shift is negligible and the
        // intensity equation is effectively linear.
        let mut p = fig_params(1.0, 1.07e4, 1.0);
        p.detuning = DetuningSpec::Bare(p.mech_freq);
        let branches = solve_steady_state(&p, p.mech_freq).unwrap();
        assert_eq!(branches.len(), 1);
        let base = derive_constants(&p).unwrap();
        let expected = base.drive_amplitude.powi(2)
            / (base.cavity_decay.powi(2) + p.mech_freq.powi(2));
        assert_relative_eq!(branches[0].intensity, expected, max_relative = 1e-9);
        assert_relative_eq!(
            branches[0].effective_detuning,
            p.mech_freq,
            max_relative = 1e-9
        );
    }

    #[test]
    fn detuning_round_trip() {
        let p = fig_params(5.0e-12, 1.07e4, 1.0);
        for delta_over_wm in [0.3, 0.7, 1.0, 1.6, 2.5] {
            let delta = delta_over_wm * p.mech_freq;
            let d = steady_state_from_detuning(&p, delta).unwrap();
            let branches = solve_steady_state(&p, d.bare_detuning).unwrap();
            let best = branches
                .iter()
                .map(|b| (b.effective_detuning - delta).abs() / delta.abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "Δ/w_m = {delta_over_wm}: round-trip error {best}");
        }
    }

    #[test]
    fn bistable_regime_three_branches() {
        // Strong drive, far bare detuning: the classic S-curve with an
        // unstable middle branch. Root values cross-checked against an
        // independent companion-matrix polynomial solve.
        let mut p = fig_params(5.0e-12, 1.07e4, 1.0);
        p.input_power = 0.18;
        let d0 = 5.0 * p.mech_freq;
        let branches = solve_steady_state(&p, d0).unwrap();
        assert_eq!(branches.len(), 3, "expected bistable triple, got {branches:?}");
        assert!(branches[0].intensity < branches[1].intensity);
        assert!(branches[1].intensity < branches[2].intensity);
        assert!(!branches[1].stable, "middle branch must be the unstable saddle");
        assert!(branches[0].stable, "low-intensity branch is stable");
        // Frozen from the oracle solve of the same cubic.
        assert_relative_eq!(branches[0].intensity, 1.636013671e9, max_relative = 1e-6);
        assert_relative_eq!(branches[1].intensity, 7.505979124e9, max_relative = 1e-6);
        assert_relative_eq!(branches[2].intensity, 1.2605156893e10, max_relative = 1e-6);
        // Every returned root satisfies the unexpanded fixed-point relation.
        let base = derive_constants(&PhysicalParams {
            detuning: DetuningSpec::Bare(d0),
            ..p.clone()
        })
        .unwrap();
        let beta = base.bare_coupling.powi(2) / p.mech_freq;
        for b in &branches {
            let lhs = b.intensity
                * (base.cavity_decay.powi(2) + (d0 - beta * b.intensity).powi(2));
            assert_relative_eq!(lhs, base.drive_amplitude.powi(2), max_relative = 1e-9);
            assert_relative_eq!(
                b.effective_detuning,
                d0 - beta * b.intensity,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn cubic_solver_exact_roots() {
        // (x−1)(x−2)(x−3) = x³ −6x² +11x −6
        let mut r = cubic_real_roots(-6.0, 11.0, -6.0);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-10);
        }
        // Single real root: x³ + x + 1.
        let r = cubic_real_roots(0.0, 1.0, 1.0);
        assert_eq!(r.len(), 1);
        let x = r[0];
        assert_relative_eq!(x * x * x + x + 1.0, 0.0, epsilon = 1e-12);
    }
}
