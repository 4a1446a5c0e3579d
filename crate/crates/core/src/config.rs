//! Line-oriented `key = value` configuration ingestion.
//!
//! Recognized keys (frequencies given as ν = ω/2π carry a `_2pi_hz`
//! suffix and are converted to angular units on ingestion):
//!
//! ```text
//! cavity_length_m      = 1e-3
//! wavelength_m         = 810e-9
//! power_w              = 50e-3
//! mech_freq_2pi_hz     = 10e6
//! mech_damping_2pi_hz  = 100        # or: quality_factor = 1e5
//! mass_kg              = 5e-12
//! temperature_k        = 0.4
//! finesse              = 1.07e4
//! detuning_over_wm     = 1.0        # or: bare_detuning_2pi_hz = ...
//! ```
//!
//! `#` starts a comment, blank lines are skipped, unknown or duplicate
//! keys are errors carrying the offending line number.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{DetuningSpec, PhysicalParams};

const KNOWN_KEYS: [&str; 10] = [
    "cavity_length_m",
    "wavelength_m",
    "power_w",
    "mech_freq_2pi_hz",
    "mech_damping_2pi_hz",
    "quality_factor",
    "mass_kg",
    "temperature_k",
    "finesse",
    "detuning_over_wm",
];

const KNOWN_KEYS_EXTRA: [&str; 1] = ["bare_detuning_2pi_hz"];

fn is_known(key: &str) -> bool {
    KNOWN_KEYS.contains(&key) || KNOWN_KEYS_EXTRA.contains(&key)
}

/// Parse configuration text into validated [`PhysicalParams`].
pub fn parse_config(text: &str) -> Result<PhysicalParams> {
    let mut values: BTreeMap<&str, (usize, f64)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                msg: format!("expected `key = value`, got {line:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !is_known(key) {
            return Err(Error::Config {
                line: line_no,
                msg: format!("unknown key {key:?}"),
            });
        }
        if values.contains_key(key) {
            return Err(Error::Config {
                line: line_no,
                msg: format!("duplicate key {key:?}"),
            });
        }
        let parsed: f64 = value.parse().map_err(|_| Error::Config {
            line: line_no,
            msg: format!("cannot parse {value:?} as a number for {key:?}"),
        })?;
        // Keys are known 'static strings; store the canonical one.
        let canonical = KNOWN_KEYS
            .iter()
            .chain(KNOWN_KEYS_EXTRA.iter())
            .find(|k| **k == key)
            .unwrap();
        values.insert(canonical, (line_no, parsed));
    }

    let take = |key: &str| values.get(key).map(|&(_, v)| v);
    let require = |key: &str| {
        take(key).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("missing required key {key:?}"),
        })
    };

    let tau = std::f64::consts::TAU;
    let mech_freq = tau * require("mech_freq_2pi_hz")?;

    let mech_damping = match (take("mech_damping_2pi_hz"), take("quality_factor")) {
        (Some(_), Some(_)) => {
            let line = values["quality_factor"].0;
            return Err(Error::Config {
                line,
                msg: "give either mech_damping_2pi_hz or quality_factor, not both".into(),
            });
        }
        (Some(g), None) => tau * g,
        (None, Some(q)) => {
            if !(q > 0.0) {
                let line = values["quality_factor"].0;
                return Err(Error::Config {
                    line,
                    msg: format!("quality_factor must be positive, got {q}"),
                });
            }
            mech_freq / q
        }
        (None, None) => {
            return Err(Error::Config {
                line: 0,
                msg: "missing mechanical damping: give mech_damping_2pi_hz or quality_factor"
                    .into(),
            })
        }
    };

    let detuning = match (take("detuning_over_wm"), take("bare_detuning_2pi_hz")) {
        (Some(_), Some(_)) => {
            let line = values["bare_detuning_2pi_hz"].0;
            return Err(Error::Config {
                line,
                msg: "give either detuning_over_wm or bare_detuning_2pi_hz, not both".into(),
            });
        }
        (Some(x), None) => DetuningSpec::Effective(x * mech_freq),
        (None, Some(d)) => DetuningSpec::Bare(tau * d),
        (None, None) => {
            return Err(Error::Config {
                line: 0,
                msg: "missing detuning: give detuning_over_wm or bare_detuning_2pi_hz".into(),
            })
        }
    };

    let params = PhysicalParams {
        cavity_length: require("cavity_length_m")?,
        wavelength: require("wavelength_m")?,
        input_power: require("power_w")?,
        mech_freq,
        mech_damping,
        mass: require("mass_kg")?,
        temperature: require("temperature_k")?,
        finesse: require("finesse")?,
        detuning,
    };
    params
        .validate()
        .map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
    Ok(params)
}

/// Render parameters back into the config format (used by manifests and
/// the demo page's preset buttons). `detuning_over_wm` is emitted only for
/// effective-detuning specs, `bare_detuning_2pi_hz` otherwise.
pub fn render_config(p: &PhysicalParams) -> String {
    let tau = std::f64::consts::TAU;
    let mut out = String::new();
    out.push_str(&format!("cavity_length_m = {}\n", p.cavity_length));
    out.push_str(&format!("wavelength_m = {}\n", p.wavelength));
    out.push_str(&format!("power_w = {}\n", p.input_power));
    out.push_str(&format!("mech_freq_2pi_hz = {}\n", p.mech_freq / tau));
    out.push_str(&format!("mech_damping_2pi_hz = {}\n", p.mech_damping / tau));
    out.push_str(&format!("mass_kg = {}\n", p.mass));
    out.push_str(&format!("temperature_k = {}\n", p.temperature));
    out.push_str(&format!("finesse = {}\n", p.finesse));
    match p.detuning {
        DetuningSpec::Effective(d) => {
            out.push_str(&format!("detuning_over_wm = {}\n", d / p.mech_freq));
        }
        DetuningSpec::Bare(d0) => {
            out.push_str(&format!("bare_detuning_2pi_hz = {}\n", d0 / tau));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GOOD: &str = "\
# preset: 5 ng mirror
cavity_length_m = 1e-3
wavelength_m = 810e-9
power_w = 50e-3
mech_freq_2pi_hz = 10e6
mech_damping_2pi_hz = 100
mass_kg = 5e-12
temperature_k = 0.4
finesse = 1.07e4
detuning_over_wm = 1.0
";

    #[test]
    fn parses_complete_config() {
        let p = parse_config(GOOD).unwrap();
        assert_relative_eq!(p.mech_freq, std::f64::consts::TAU * 1e7);
        assert_relative_eq!(p.mech_damping, std::f64::consts::TAU * 100.0);
        assert_eq!(p.mass, 5e-12);
        match p.detuning {
            DetuningSpec::Effective(d) => assert_relative_eq!(d, p.mech_freq),
            _ => panic!("expected effective detuning"),
        }
    }

    #[test]
    fn quality_factor_alternative() {
        let text = GOOD.replace("mech_damping_2pi_hz = 100", "quality_factor = 1e5");
        let p = parse_config(&text).unwrap();
        assert_relative_eq!(p.mech_damping, p.mech_freq / 1e5, max_relative = 1e-12);
    }

    #[test]
    fn bare_detuning_alternative() {
        let text = GOOD.replace("detuning_over_wm = 1.0", "bare_detuning_2pi_hz = 1.2e7");
        let p = parse_config(&text).unwrap();
        match p.detuning {
            DetuningSpec::Bare(d) => {
                assert_relative_eq!(d, std::f64::consts::TAU * 1.2e7, max_relative = 1e-12)
            }
            _ => panic!("expected bare detuning"),
        }
    }

    #[test]
    fn unknown_key_reports_line_number() {
        let text = format!("{GOOD}wavellength_m = 1e-6\n");
        match parse_config(&text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 11);
                assert!(msg.contains("unknown key"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_conflicting_keys_are_rejected() {
        let text = format!("{GOOD}mass_kg = 1e-12\n");
        assert!(matches!(parse_config(&text), Err(Error::Config { line: 11, .. })));
        let text = format!("{GOOD}quality_factor = 1e5\n");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
        let text = format!("{GOOD}bare_detuning_2pi_hz = 1e6\n");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn missing_key_and_bad_number() {
        let text = GOOD.replace("mass_kg = 5e-12\n", "");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
        let text = GOOD.replace("5e-12", "five");
        match parse_config(&text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("\n  # leading comment\n{GOOD}\n# trailing\n");
        assert!(parse_config(&text).is_ok());
        let inline = GOOD.replace("finesse = 1.07e4", "finesse = 1.07e4  # high finesse");
        assert!(parse_config(&inline).is_ok());
    }

    #[test]
    fn round_trips_through_render() {
        let p = parse_config(GOOD).unwrap();
        let q = parse_config(&render_config(&p)).unwrap();
        assert_eq!(p, q);
    }
}
