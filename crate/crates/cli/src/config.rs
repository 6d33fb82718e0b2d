//! Resolved run configuration and the flat `key = value` config file.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use feedback_phase::model::{DriveField, FeedbackControl, ModelError, SimParams};
use feedback_phase::sweep::FixedParams;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!(
                "unknown format {other:?} (csv or json)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Every tunable of a run. Angles are stored in radians.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    /// Initial-state angle.
    pub theta: f64,
    /// Field polar angle; follows `theta` when unset.
    pub cap_theta: Option<f64>,
    pub omega: f64,
    pub b0: f64,
    pub mu: f64,
    pub dt: f64,
    /// Integration time; one field period when unset.
    pub tau: Option<f64>,
    pub a: f64,
    pub beta: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Keep every `thin`-th trajectory sample.
    pub thin: usize,
    pub workers: Option<usize>,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            theta: PI / 2.0,
            cap_theta: None,
            omega: 0.005,
            b0: 1.0,
            mu: 1.0,
            dt: 0.01,
            tau: None,
            a: PI / 4.0,
            beta: 0.0,
            out: None,
            format: Format::Csv,
            thin: 10,
            workers: None,
            plot: false,
        }
    }
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: expected a number, got {value:?}")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{key}: value must be finite")))
    }
}

fn count(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: expected a positive integer, got {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

/// Splits config text into `(key, value)` pairs. Keys are lowercased with
/// `-` folded to `_`; `#` starts a comment anywhere on a line.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected key = value", n + 1))
        })?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Config(format!(
                "config line {}: empty key",
                n + 1
            )));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Applies one setting. Angle keys take radians, or pi units with a `_pi` suffix.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "gamma" => self.gamma = number(key, value)?,
            "theta" | "theta_rad" => self.theta = number(key, value)?,
            "theta_pi" => self.theta = number(key, value)? * PI,
            "cap_theta" | "cap_theta_rad" => self.cap_theta = Some(number(key, value)?),
            "cap_theta_pi" => self.cap_theta = Some(number(key, value)? * PI),
            "omega" => self.omega = number(key, value)?,
            "b0" => self.b0 = number(key, value)?,
            "mu" => self.mu = number(key, value)?,
            "dt" => self.dt = number(key, value)?,
            "tau" => self.tau = Some(number(key, value)?),
            "a" | "a_rad" => self.a = number(key, value)?,
            "a_pi" => self.a = number(key, value)? * PI,
            "beta" | "beta_rad" => self.beta = number(key, value)?,
            "beta_pi" => self.beta = number(key, value)? * PI,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "thin" => self.thin = count(key, value)?,
            "workers" => self.workers = Some(count(key, value)?),
            "plot" => self.plot = flag(key, value)?,
            _ => return Err(CliError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        for (key, value) in parse_pairs(&text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.thin == 0 {
            return Err(CliError::Config("thin must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.plot && self.out.is_none() {
            return Err(CliError::Config("plot needs an output path (--out)".into()));
        }
        self.control()?;
        self.sim_params()?;
        Ok(())
    }

    pub fn cap_theta(&self) -> f64 {
        self.cap_theta.unwrap_or(self.theta)
    }

    pub fn drive(&self) -> DriveField {
        DriveField {
            b0: self.b0,
            mu: self.mu,
            theta_field: self.cap_theta(),
            omega: self.omega,
        }
    }

    pub fn sim_params(&self) -> Result<SimParams, ModelError> {
        match self.tau {
            Some(tau) => SimParams::new(self.gamma, self.theta, tau, self.dt),
            None => SimParams::cycle(self.gamma, self.theta, &self.drive(), self.dt),
        }
    }

    pub fn control(&self) -> Result<FeedbackControl, ModelError> {
        FeedbackControl::from_angles(self.a, self.beta)
    }

    pub fn fixed_params(&self) -> FixedParams {
        FixedParams {
            gamma: self.gamma,
            a: self.a,
            beta: self.beta,
            theta: self.theta,
            cap_theta: self.cap_theta(),
            omega: self.omega,
            b0: self.b0,
            mu: self.mu,
            dt: self.dt,
        }
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            gamma: self.gamma,
            theta: self.theta,
            theta_pi: self.theta / PI,
            cap_theta: self.cap_theta(),
            cap_theta_pi: self.cap_theta() / PI,
            omega: self.omega,
            b0: self.b0,
            mu: self.mu,
            dt: self.dt,
            tau: self.tau,
            a: self.a,
            a_pi: self.a / PI,
            beta: self.beta,
            beta_pi: self.beta / PI,
            format: self.format,
            thin: self.thin,
            workers: self.workers,
            plot: self.plot,
        }
    }
}

/// The resolved configuration as written into output metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub gamma: f64,
    pub theta: f64,
    pub theta_pi: f64,
    pub cap_theta: f64,
    pub cap_theta_pi: f64,
    pub omega: f64,
    pub b0: f64,
    pub mu: f64,
    pub dt: f64,
    pub tau: Option<f64>,
    pub a: f64,
    pub a_pi: f64,
    pub beta: f64,
    pub beta_pi: f64,
    pub format: Format,
    pub thin: usize,
    pub workers: Option<usize>,
    pub plot: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_skip_comments_and_blank_lines() {
        let text = "# header\n\ngamma = 0.1  # trailing\nBeta-Pi=0.5\n";
        let pairs = parse_pairs(text).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("gamma".into(), "0.1".into()),
                ("beta_pi".into(), "0.5".into())
            ]
        );
    }

    #[test]
    fn missing_equals_is_rejected() {
        assert!(matches!(parse_pairs("gamma 0.1"), Err(CliError::Config(_))));
    }

    #[test]
    fn pi_units_round_trip() {
        for x in [0.0, 0.25, 1.0 / 3.0, 0.5, 0.75, 1.0, 1.7, 2.0] {
            let mut c = RunConfig::default();
            c.set("beta_pi", &x.to_string()).unwrap();
            assert!((c.echo().beta_pi - x).abs() <= 1e-15, "{x}");
        }
    }

    #[test]
    fn cap_theta_follows_theta() {
        let mut c = RunConfig::default();
        c.set("theta_pi", "0.25").unwrap();
        assert_eq!(c.cap_theta(), PI / 4.0);
        c.set("cap_theta", "1.0").unwrap();
        assert_eq!(c.cap_theta(), 1.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let mut c = RunConfig::default();
        assert!(c.set("gama", "0.1").is_err());
        assert!(c.set("gamma", "fast").is_err());
        assert!(c.set("dt", "inf").is_err());
        assert!(c.set("format", "xml").is_err());
        c.set("gamma", "-1").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_cycle_is_snapped() {
        let p = RunConfig::default().sim_params().unwrap();
        assert_eq!(p.steps(), 125_664);
    }
}
