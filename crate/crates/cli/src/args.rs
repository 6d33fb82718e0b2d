//! Command-line flags. Everything is optional so that only flags given
//! explicitly override the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fbphase",
    version,
    about = "Geometric phase of a driven, damped two-level atom under jump feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one cycle and write the Bloch path with its eigenframe.
    Trajectory(CommonArgs),
    /// Geometric phase of one cycle.
    Phase(CommonArgs),
    /// Geometric phase over a two-parameter grid.
    Sweep(SweepArgs),
    /// Randomised cross-checks against the density-matrix oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Decay rate.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial-state angle in units of pi.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "theta_rad")]
    pub theta_pi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_rad: Option<f64>,
    /// Field polar angle in units of pi; defaults to theta.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "cap_theta_rad")]
    pub cap_theta_pi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cap_theta_rad: Option<f64>,
    /// Field rotation rate.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// RK4 step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Integration time; one field period by default. Ignored by `sweep`.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Feedback amplitude in units of pi.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "a_rad")]
    pub a_pi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_rad: Option<f64>,
    /// Feedback axis angle in units of pi.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "beta_rad")]
    pub beta_pi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_rad: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    /// Keep every k-th trajectory sample.
    #[arg(long, value_name = "K")]
    pub thin: Option<usize>,
    /// Sweep worker threads; 1 runs sequentially.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write a PNG heatmap next to the sweep output.
    #[arg(long)]
    pub plot: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Row axis, `name:min:max:count[:log]` with angles in units of pi.
    #[arg(long, requires = "axis2", conflicts_with = "preset")]
    pub axis1: Option<String>,
    /// Column axis, same syntax as --axis1.
    #[arg(long, requires = "axis1")]
    pub axis2: Option<String>,
    /// `fig1:<gamma>` for an (A, beta) grid or `fig2:<A in pi units>` for a (gamma, beta) grid.
    #[arg(long)]
    pub preset: Option<String>,
    /// Points per axis for presets.
    #[arg(long, default_value_t = 17)]
    pub resolution: usize,
    /// Linear instead of log gamma spacing for the fig2 preset.
    #[arg(long)]
    pub linear_gamma: bool,
    /// `endpoints` (inclusive) or `centers`.
    #[arg(long, default_value = "endpoints")]
    pub placement: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub drift_draws: Option<usize>,
    #[arg(long)]
    pub trajectory_draws: Option<usize>,
    #[arg(long)]
    pub pure_phase_draws: Option<usize>,
}

impl CommonArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        let pi = std::f64::consts::PI;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.gamma, self.gamma);
        set(
            &mut c.theta,
            self.theta_rad.or(self.theta_pi.map(|x| x * pi)),
        );
        if let Some(v) = self.cap_theta_rad.or(self.cap_theta_pi.map(|x| x * pi)) {
            c.cap_theta = Some(v);
        }
        set(&mut c.omega, self.omega);
        set(&mut c.b0, self.b0);
        set(&mut c.mu, self.mu);
        set(&mut c.dt, self.dt);
        if self.tau.is_some() {
            c.tau = self.tau;
        }
        set(&mut c.a, self.a_rad.or(self.a_pi.map(|x| x * pi)));
        set(&mut c.beta, self.beta_rad.or(self.beta_pi.map(|x| x * pi)));
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if let Some(f) = self.format {
            c.format = f;
        }
        if let Some(k) = self.thin {
            c.thin = k;
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        c.plot |= self.plot;
        for x in [
            c.gamma,
            c.theta,
            c.cap_theta(),
            c.omega,
            c.b0,
            c.mu,
            c.dt,
            c.a,
            c.beta,
        ] {
            if !x.is_finite() {
                return Err(CliError::Config("parameters must be finite".into()));
            }
        }
        c.validate()?;
        Ok(c)
    }
}
