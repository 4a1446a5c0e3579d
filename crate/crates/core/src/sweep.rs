//! Declarative one-axis parameter sweeps and threshold finding.
//!
//! A sweep evaluates the full pipeline (steady state → stability →
//! covariance → entanglement) at every grid point of one axis, producing
//! one [`SweepRow`] per point. Unstable points are flagged rows, not
//! errors, and carry no entanglement numbers. Output serializes to a fixed
//! 13-column CSV; identical specs produce bit-identical files.

use std::io::Write;

use crate::constants::LOG_NEG_FLOOR;
use crate::entanglement;
use crate::error::{Error, Result};
use crate::lyapunov::{self, CovarianceMatrix};
use crate::model::{self, DetuningSpec, PhysicalParams};
use crate::stability;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Swept quantity. The detuning axis is the *effective* detuning in units
/// of w_m (the bare detuning is back-computed and implied); the quality
/// axis maps to γ_m = w_m/Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    DetuningOverWm,
    TemperatureK,
    MassKg,
    QualityFactor,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::DetuningOverWm => "detuning_over_wm",
            SweepAxis::TemperatureK => "temperature_k",
            SweepAxis::MassKg => "mass_kg",
            SweepAxis::QualityFactor => "quality_factor",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "detuning_over_wm" => Ok(SweepAxis::DetuningOverWm),
            "temperature_k" => Ok(SweepAxis::TemperatureK),
            "mass_kg" => Ok(SweepAxis::MassKg),
            "quality_factor" => Ok(SweepAxis::QualityFactor),
            other => Err(Error::InvalidParams(format!(
                "unknown sweep axis {other:?} (expected detuning_over_wm, \
                 temperature_k, mass_kg or quality_factor)"
            ))),
        }
    }
}

/// A sweep: base parameters, one axis, and an ordered grid.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: PhysicalParams,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    /// Keep the covariance matrix on each stable row (for `--dump-cm`).
    pub keep_cm: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.grid.is_empty() {
            return Err(Error::InvalidParams("sweep grid is empty".into()));
        }
        let ascending = self.grid.windows(2).all(|w| w[0] < w[1]);
        let descending = self.grid.windows(2).all(|w| w[0] > w[1]);
        if self.grid.len() > 1 && !ascending && !descending {
            return Err(Error::InvalidParams(
                "sweep grid must be strictly monotone".into(),
            ));
        }
        Ok(())
    }

    /// Base parameters with the axis value substituted.
    pub fn params_at(&self, x: f64) -> PhysicalParams {
        let mut p = self.base.clone();
        match self.axis {
            SweepAxis::DetuningOverWm => {
                p.detuning = DetuningSpec::Effective(x * p.mech_freq);
            }
            SweepAxis::TemperatureK => p.temperature = x,
            SweepAxis::MassKg => p.mass = x,
            SweepAxis::QualityFactor => p.mech_damping = p.mech_freq / x,
        }
        p
    }
}

/// One evaluated grid point. Entanglement fields are `None` on unstable
/// rows (empty CSV fields), never fabricated numbers.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub delta_over_wm: f64,
    pub temperature_k: f64,
    pub mass_kg: f64,
    pub finesse: f64,
    pub kappa: f64,
    pub coupling: f64,
    pub nbar: f64,
    pub stable: bool,
    pub eta_minus: Option<f64>,
    pub log_neg: Option<f64>,
    pub simon: Option<bool>,
    pub branch_count: usize,
    /// Smallest symplectic eigenvalue of the steady-state CM (stable rows).
    pub min_symplectic: Option<f64>,
    /// Steady-state CM, kept only when the spec requests it.
    pub cm: Option<CovarianceMatrix>,
}

/// Evaluate the full pipeline at one parameter point.
pub fn evaluate_point(p: &PhysicalParams, keep_cm: bool) -> Result<SweepRow> {
    let d = model::model_from_params(p)?;
    let branch_count = model::solve_steady_state(p, d.bare_detuning)?.len();
    let stable = stability::is_stable(&d);

    let mut row = SweepRow {
        axis_value: f64::NAN,
        delta_over_wm: d.effective_detuning / d.mech_freq,
        temperature_k: p.temperature,
        mass_kg: p.mass,
        finesse: p.finesse,
        kappa: d.cavity_decay,
        coupling: d.effective_coupling,
        nbar: d.mean_thermal,
        stable,
        eta_minus: None,
        log_neg: None,
        simon: None,
        branch_count,
        min_symplectic: None,
        cm: None,
    };
    if stable {
        let v = lyapunov::solve_lyapunov(&d.drift, &d.diffusion)?;
        let rep = entanglement::report(&v)?;
        let (_, min_nu) = lyapunov::check_physicality(&v)?;
        row.eta_minus = Some(rep.eta_minus);
        row.log_neg = Some(rep.log_neg);
        row.simon = Some(rep.simon_entangled);
        row.min_symplectic = Some(min_nu);
        if keep_cm {
            row.cm = Some(v);
        }
    }
    Ok(row)
}

/// Run the sweep, one row per grid point in grid order.
///
/// Rows are independent; with the `parallel` feature they are evaluated on
/// the rayon pool, and the ordered collect keeps the output identical to a
/// sequential run.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;

    #[cfg(feature = "parallel")]
    let iter = spec.grid.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = spec.grid.iter();

    let rows: Result<Vec<SweepRow>> = iter
        .map(|&x| {
            let p = spec.params_at(x);
            evaluate_point(&p, spec.keep_cm).map(|mut row| {
                row.axis_value = x;
                row
            })
        })
        .collect();
    rows
}

/// Log negativity at one axis value; unstable points count as 0 (not
/// entangled) for threshold purposes.
pub fn log_neg_at(spec: &SweepSpec, x: f64) -> Result<f64> {
    let row = evaluate_point(&spec.params_at(x), false)?;
    Ok(row.log_neg.unwrap_or(0.0))
}

/// Bisection on a boolean predicate. `f(lo)` must be true and `f(hi)`
/// false; returns the midpoint of the last bracket once `hi − lo` shrinks
/// below `tol`.
pub fn bisect_boundary<F: FnMut(f64) -> bool>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Find the axis value where E_N crosses the numerical-zero floor
/// (1e-6), to an absolute tolerance of `(hi − lo)·1e-4`.
///
/// Requires E_N above the floor at `lo` and below it at `hi`.
pub fn find_threshold(spec: &SweepSpec, lo: f64, hi: f64) -> Result<f64> {
    spec.base.validate()?;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::BracketInvalid(format!("bad bracket [{lo}, {hi}]")));
    }
    let at_lo = log_neg_at(spec, lo)?;
    let at_hi = log_neg_at(spec, hi)?;
    if at_lo <= LOG_NEG_FLOOR {
        return Err(Error::BracketInvalid(format!(
            "E_N({lo}) = {at_lo:.3e} is not above the 1e-6 floor"
        )));
    }
    if at_hi > LOG_NEG_FLOOR {
        return Err(Error::BracketInvalid(format!(
            "E_N({hi}) = {at_hi:.3e} is still above the 1e-6 floor"
        )));
    }
    let tol = (hi - lo) * 1e-4;
    // Row evaluations can only fail on invalid parameters, which the
    // endpoint evaluations above already exercised.
    Ok(bisect_boundary(
        |x| log_neg_at(spec, x).map(|e| e > LOG_NEG_FLOOR).unwrap_or(false),
        lo,
        hi,
        tol,
    ))
}

/// CSV header for [`write_csv`]. Fixed column set and order.
pub const CSV_HEADER: &str = "axis,delta_over_wm,temperature_k,mass_kg,finesse,kappa_rad_s,G_rad_s,nbar,stable,eta_minus,log_neg,simon,branches";

fn push_opt_f64(out: &mut String, v: Option<f64>) {
    if let Some(x) = v {
        out.push_str(&format!("{x}"));
    }
}

/// Serialize rows with shortest round-trip float formatting; `None` fields
/// of unstable rows become empty columns.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            r.axis_value,
            r.delta_over_wm,
            r.temperature_k,
            r.mass_kg,
            r.finesse,
            r.kappa,
            r.coupling,
            r.nbar,
            r.stable
        );
        line.push(',');
        push_opt_f64(&mut line, r.eta_minus);
        line.push(',');
        push_opt_f64(&mut line, r.log_neg);
        line.push(',');
        if let Some(s) = r.simon {
            line.push_str(if s { "true" } else { "false" });
        }
        line.push(',');
        line.push_str(&r.branch_count.to_string());
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Uniform grid, inclusive of both ends.
pub fn linear_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![from];
    }
    (0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Log-spaced grid, inclusive of both (positive) ends.
pub fn log_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![from];
    }
    let (lf, lt) = (from.ln(), to.ln());
    (0..points)
        .map(|i| (lf + (lt - lf) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Preset parameter sets and sweep grids used throughout the test suite:
/// a 1 mm cavity driven with 50 mW at 810 nm, a 10 MHz mirror mode with
/// Q = 10⁵ at 400 mK, in the 5 ng/F = 1.07×10⁴ and 50 ng/F = 3.4×10⁴
/// variants.
pub mod presets {
    use super::*;

    /// Shared base: L = 1 mm, λ = 810 nm, P = 50 mW, w_m/2π = 10 MHz,
    /// γ_m/2π = 100 Hz, T = 400 mK.
    fn base(mass: f64, finesse: f64, delta_over_wm: f64) -> PhysicalParams {
        let mech_freq = std::f64::consts::TAU * 1.0e7;
        PhysicalParams {
            cavity_length: 1.0e-3,
            wavelength: 810.0e-9,
            input_power: 50.0e-3,
            mech_freq,
            mech_damping: std::f64::consts::TAU * 100.0,
            mass,
            temperature: 0.4,
            finesse,
            detuning: DetuningSpec::Effective(delta_over_wm * mech_freq),
        }
    }

    /// 5 ng mirror, F = 1.07×10⁴, Δ = w_m.
    pub fn params_5ng() -> PhysicalParams {
        base(5.0e-12, 1.07e4, 1.0)
    }

    /// 50 ng mirror, F = 3.4×10⁴, Δ = w_m/2.
    pub fn params_50ng() -> PhysicalParams {
        base(50.0e-12, 3.4e4, 0.5)
    }

    /// E_N versus effective detuning, 5 ng: Δ/w_m ∈ [0.1, 3], 200 points.
    pub fn fig1_5ng() -> SweepSpec {
        SweepSpec {
            base: params_5ng(),
            axis: SweepAxis::DetuningOverWm,
            grid: linear_grid(0.1, 3.0, 200),
            keep_cm: false,
        }
    }

    /// E_N versus effective detuning, 50 ng.
    pub fn fig1_50ng() -> SweepSpec {
        SweepSpec {
            base: params_50ng(),
            axis: SweepAxis::DetuningOverWm,
            grid: linear_grid(0.1, 3.0, 200),
            keep_cm: false,
        }
    }

    /// E_N versus temperature at Δ = w_m, 5 ng: 100 log-spaced points in
    /// [0.1 K, 40 K].
    pub fn fig2_5ng() -> SweepSpec {
        SweepSpec {
            base: params_5ng(),
            axis: SweepAxis::TemperatureK,
            grid: log_grid(0.1, 40.0, 100),
            keep_cm: false,
        }
    }

    /// E_N versus temperature at Δ = w_m/2, 50 ng.
    pub fn fig2_50ng() -> SweepSpec {
        SweepSpec {
            base: params_50ng(),
            axis: SweepAxis::TemperatureK,
            grid: log_grid(0.1, 40.0, 100),
            keep_cm: false,
        }
    }

    /// Look up a preset sweep by CLI name.
    pub fn by_name(name: &str) -> Result<SweepSpec> {
        match name {
            "fig1-5ng" => Ok(fig1_5ng()),
            "fig1-50ng" => Ok(fig1_50ng()),
            "fig2-5ng" => Ok(fig2_5ng()),
            "fig2-50ng" => Ok(fig2_50ng()),
            other => Err(Error::InvalidParams(format!(
                "unknown preset {other:?} (expected fig1-5ng, fig1-50ng, fig2-5ng or fig2-50ng)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rows_echo_grid_in_order() {
        let spec = SweepSpec {
            base: presets::params_5ng(),
            axis: SweepAxis::DetuningOverWm,
            grid: vec![0.5, 1.0, 1.5],
            keep_cm: false,
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, x) in rows.iter().zip([0.5, 1.0, 1.5]) {
            assert_eq!(row.axis_value, x);
            assert_relative_eq!(row.delta_over_wm, x, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_must_be_monotone_and_nonempty() {
        let mut spec = SweepSpec {
            base: presets::params_5ng(),
            axis: SweepAxis::TemperatureK,
            grid: vec![],
            keep_cm: false,
        };
        assert!(spec.validate().is_err());
        spec.grid = vec![1.0, 3.0, 2.0];
        assert!(spec.validate().is_err());
        spec.grid = vec![3.0, 2.0, 1.0];
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn unstable_rows_carry_no_entanglement_numbers() {
        // High drive far past the instability threshold at this detuning.
        let mut base = presets::params_5ng();
        base.input_power = 10.0;
        let spec = SweepSpec {
            base,
            axis: SweepAxis::DetuningOverWm,
            grid: vec![1.0],
            keep_cm: true,
        };
        let rows = run_sweep(&spec).unwrap();
        assert!(!rows[0].stable);
        assert!(rows[0].eta_minus.is_none());
        assert!(rows[0].log_neg.is_none());
        assert!(rows[0].simon.is_none());
        assert!(rows[0].cm.is_none());
    }

    #[test]
    fn csv_is_deterministic_and_well_formed() {
        let spec = SweepSpec {
            base: presets::params_5ng(),
            axis: SweepAxis::DetuningOverWm,
            grid: linear_grid(0.8, 1.2, 5),
            keep_cm: false,
        };
        let rows1 = run_sweep(&spec).unwrap();
        let rows2 = run_sweep(&spec).unwrap();
        let mut buf1 = Vec::new();
        let mut buf2 = Vec::new();
        write_csv(&rows1, &mut buf1).unwrap();
        write_csv(&rows2, &mut buf2).unwrap();
        assert_eq!(buf1, buf2, "identical specs must produce identical bytes");
        let text = String::from_utf8(buf1).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        for line in lines {
            assert_eq!(line.split(',').count(), 13);
        }
    }

    #[test]
    fn float_fields_round_trip() {
        let spec = SweepSpec {
            base: presets::params_5ng(),
            axis: SweepAxis::DetuningOverWm,
            grid: vec![1.0],
            keep_cm: false,
        };
        let rows = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = data.split(',').collect();
        assert_eq!(fields[6].parse::<f64>().unwrap(), rows[0].coupling);
        assert_eq!(fields[10].parse::<f64>().unwrap(), rows[0].log_neg.unwrap());
    }

    #[test]
    fn bisection_on_synthetic_function() {
        // Boundary of x < 0.5 recovered to the requested tolerance.
        let t = bisect_boundary(|x| x < 0.5, 0.0, 1.0, 1e-4 * 1.0);
        assert!((t - 0.5).abs() <= 1e-4, "got {t}");
    }

    #[test]
    fn threshold_brackets_are_checked() {
        let spec = presets::fig2_5ng();
        // Reversed / degenerate brackets.
        assert!(matches!(
            find_threshold(&spec, 10.0, 1.0),
            Err(Error::BracketInvalid(_))
        ));
        // Entangled at both ends of a narrow low-temperature bracket.
        assert!(matches!(
            find_threshold(&spec, 0.1, 0.2),
            Err(Error::BracketInvalid(_))
        ));
    }

    #[test]
    fn grids_are_inclusive_and_monotone() {
        let g = linear_grid(0.1, 3.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.1);
        assert_eq!(*g.last().unwrap(), 3.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let lg = log_grid(0.1, 40.0, 100);
        assert_eq!(lg.len(), 100);
        assert_relative_eq!(lg[0], 0.1, max_relative = 1e-12);
        assert_relative_eq!(*lg.last().unwrap(), 40.0, max_relative = 1e-12);
        assert!(lg.windows(2).all(|w| w[0] < w[1]));
    }
}
