//! Flat `key = value` configuration, shared by config files and
//! `--override` flags.

use std::path::PathBuf;

use super::ScenarioConfig;
use crate::error::{Error, Result};

/// Every accepted key.
pub const KEYS: [&str; 18] = [
    "omega2",
    "omega_wall",
    "epsilon",
    "cutoff_mode1",
    "cutoff_mode2",
    "cutoff_wall",
    "t_cavity",
    "t_wall",
    "kappa",
    "gamma",
    "drive_amplitude",
    "tuned_omega1",
    "t_max_kappa_units",
    "kappa_ref",
    "dt",
    "record_every",
    "dressed_m",
    "output_path",
];

fn real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: value must be finite")));
    }
    Ok(v)
}

fn count(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| Error::Config(format!("{key}: '{value}' is not a nonnegative integer")))
}

pub(super) fn apply(c: &mut ScenarioConfig, key: &str, value: &str) -> Result<()> {
    let value = value.trim();
    match key.trim() {
        "omega2" => c.system.omega2 = real(key, value)?,
        "omega_wall" => c.system.omega_wall = real(key, value)?,
        "epsilon" => c.system.epsilon = real(key, value)?,
        "cutoff_mode1" => c.system.cutoffs.mode1 = count(key, value)?,
        "cutoff_mode2" => c.system.cutoffs.mode2 = count(key, value)?,
        "cutoff_wall" => c.system.cutoffs.wall = count(key, value)?,
        "t_cavity" => c.baths.t_cavity = real(key, value)?,
        "t_wall" => c.baths.t_wall = real(key, value)?,
        "kappa" => c.baths.kappa = real(key, value)?,
        "gamma" => c.baths.gamma = real(key, value)?,
        "drive_amplitude" => c.drive.amplitude = real(key, value)?,
        "tuned_omega1" => {
            c.tuned_omega1 = if value.eq_ignore_ascii_case("auto") { None } else { Some(real(key, value)?) };
        }
        "t_max_kappa_units" => c.t_max_kappa_units = real(key, value)?,
        "kappa_ref" => c.kappa_ref = real(key, value)?,
        "dt" => c.dt = real(key, value)?,
        "record_every" => c.record_every = count(key, value)?,
        "dressed_m" => c.dressed_m = count(key, value)?,
        "output_path" => c.output_path = Some(PathBuf::from(value)),
        other => {
            return Err(Error::Config(format!("unknown key '{other}'; valid keys: {}", KEYS.join(", "))));
        }
    }
    Ok(())
}

/// Split a config file into (key, value) pairs. Blank lines and text after
/// `#` are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{raw}'", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("line {}: empty key or value", n + 1)));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}
