//! The four subcommands.

use std::f64::consts::PI;
use std::io::Write;

use feedback_phase::gphase::{evolve_phase, PhaseAccumulator, PhaseError};
use feedback_phase::integrator::{IntegrationError, Propagator};
use feedback_phase::model::initial_state;
use feedback_phase::sweep::{
    fig1_spec, fig2_spec, run_sweep_with, Axis, Execution, Placement, Spacing, SweepGrid, SweepSpec,
};
use feedback_phase::verify::{run_verification, VerifyOptions, VerifyReport};
use serde::Serialize;
use serde_json::json;

use crate::args::{SweepArgs, VerifyArgs};
use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt, sink, write_csv, write_heatmap, write_json, Metadata};

/// Machine-readable failure attached to a record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub t: Option<f64>,
    pub message: String,
}

impl ErrorRecord {
    fn from_phase(e: &PhaseError) -> Self {
        let (kind, t) = match e {
            PhaseError::NotPure { .. } => ("not_pure", None),
            PhaseError::Degenerate { t, .. } => ("degenerate", Some(*t)),
            PhaseError::UnwrapAmbiguity { t, .. } => ("unwrap_ambiguity", Some(*t)),
            PhaseError::EmptyTrajectory => ("empty_trajectory", None),
            PhaseError::Integration(IntegrationError::PurityViolation { t, .. }) => {
                ("purity_violation", Some(*t))
            }
        };
        Self {
            kind,
            t,
            message: e.to_string(),
        }
    }

    fn degenerate(t: f64) -> Self {
        Self {
            kind: "degenerate",
            t: Some(t),
            message: format!("state reached the maximally mixed point at t = {t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub purity: f64,
    pub e_plus: f64,
    pub alpha: Option<f64>,
    pub phi_unwrapped: Option<f64>,
    pub connection_partial: Option<f64>,
}

impl TrajectoryRow {
    const HEADER: [&'static str; 9] = [
        "t",
        "px",
        "py",
        "pz",
        "purity",
        "e_plus",
        "alpha",
        "phi_unwrapped",
        "connection_partial",
    ];

    fn csv(&self) -> Vec<String> {
        let mut v: Vec<String> = [self.t, self.px, self.py, self.pz, self.purity, self.e_plus]
            .map(fmt_f64)
            .into();
        v.extend([self.alpha, self.phi_unwrapped, self.connection_partial].map(fmt_opt));
        v
    }
}

/// Samples every `thin` steps. Eigenframe columns are empty once the phase
/// can no longer be tracked; the first such failure is returned alongside.
pub fn trajectory_rows(
    cfg: &RunConfig,
) -> Result<(Vec<TrajectoryRow>, Option<ErrorRecord>), CliError> {
    let params = cfg.sim_params()?;
    let p0 = initial_state(cfg.theta);
    let mut acc = PhaseAccumulator::new(&p0)?;
    let mut failure = None;
    let mut rows = Vec::with_capacity(params.steps() / cfg.thin + 1);
    for (k, sample) in Propagator::new(&p0, &cfg.drive(), &params, &cfg.control()?).enumerate() {
        let s = match sample {
            Ok(s) => s,
            Err(e) => {
                failure.get_or_insert(ErrorRecord::from_phase(&PhaseError::Integration(e)));
                break;
            }
        };
        if k > 0 && failure.is_none() {
            if let Err(e) = acc.push(s.t, &s.state) {
                failure = Some(ErrorRecord::from_phase(&e));
            } else if let Some(t) = acc.degenerate_at() {
                failure = Some(ErrorRecord::degenerate(t));
            }
        }
        if k % cfg.thin != 0 {
            continue;
        }
        let frame = if failure.is_none() {
            acc.current_frame()
        } else {
            None
        };
        let r = s.state.norm();
        rows.push(TrajectoryRow {
            t: s.t,
            px: s.state.x(),
            py: s.state.y(),
            pz: s.state.z(),
            purity: r,
            e_plus: 0.5 * (1.0 + r),
            alpha: frame.map(|f| f.alpha),
            phi_unwrapped: frame.map(|f| f.phi),
            connection_partial: frame.map(|_| acc.connection_integral()),
        });
    }
    Ok((rows, failure))
}

fn finish(failure: Option<ErrorRecord>) -> Result<(), CliError> {
    match failure {
        Some(e) => Err(CliError::Numeric(format!("{} ({})", e.message, e.kind))),
        None => Ok(()),
    }
}

pub fn trajectory(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.sim_params()?;
    let (rows, failure) = trajectory_rows(cfg)?;
    let meta = Metadata::new("trajectory", cfg, params.snapped_duration(), params.steps())
        .with("rows", rows.len())
        .with("error", &failure);
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => write_csv(
            &mut *w,
            &meta,
            &TrajectoryRow::HEADER,
            rows.iter().map(TrajectoryRow::csv),
        )?,
        Format::Json => write_json(&mut *w, &meta, "samples", &rows)?,
    }
    finish(failure)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub gamma_g_rad: Option<f64>,
    pub gamma_g_pi: Option<f64>,
    pub overlap_abs: Option<f64>,
    pub overlap_arg: Option<f64>,
    pub connection_integral: Option<f64>,
    pub degenerate: bool,
    pub degenerate_at: Option<f64>,
    pub max_step_dphi: Option<f64>,
    pub error: Option<ErrorRecord>,
}

impl PhaseRecord {
    const HEADER: [&'static str; 10] = [
        "gamma_g_rad",
        "gamma_g_pi",
        "overlap_abs",
        "overlap_arg",
        "connection_integral",
        "degenerate",
        "degenerate_at",
        "max_step_dphi",
        "error_kind",
        "error_t",
    ];

    fn csv(&self) -> Vec<String> {
        let mut v: Vec<String> = [
            self.gamma_g_rad,
            self.gamma_g_pi,
            self.overlap_abs,
            self.overlap_arg,
            self.connection_integral,
        ]
        .map(fmt_opt)
        .into();
        v.push(self.degenerate.to_string());
        v.push(fmt_opt(self.degenerate_at));
        v.push(fmt_opt(self.max_step_dphi));
        v.push(
            self.error
                .as_ref()
                .map(|e| e.kind.to_string())
                .unwrap_or_default(),
        );
        v.push(fmt_opt(self.error.as_ref().and_then(|e| e.t)));
        v
    }
}

pub fn phase_record(cfg: &RunConfig) -> Result<PhaseRecord, CliError> {
    let params = cfg.sim_params()?;
    Ok(match evolve_phase(&cfg.drive(), &params, &cfg.control()?) {
        Ok(r) => PhaseRecord {
            gamma_g_rad: r.gamma_g,
            gamma_g_pi: r.gamma_g_pi(),
            overlap_abs: Some(r.overlap.norm()),
            overlap_arg: Some(r.overlap.arg()),
            connection_integral: Some(r.connection_integral),
            degenerate: r.is_degenerate(),
            degenerate_at: r.degenerate,
            max_step_dphi: Some(r.max_step_dphi),
            error: r.degenerate.map(ErrorRecord::degenerate),
        },
        Err(e) => PhaseRecord {
            gamma_g_rad: None,
            gamma_g_pi: None,
            overlap_abs: None,
            overlap_arg: None,
            connection_integral: None,
            degenerate: false,
            degenerate_at: None,
            max_step_dphi: None,
            error: Some(ErrorRecord::from_phase(&e)),
        },
    })
}

pub fn phase(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.sim_params()?;
    let record = phase_record(cfg)?;
    let meta = Metadata::new("phase", cfg, params.snapped_duration(), params.steps());
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => write_csv(&mut *w, &meta, &PhaseRecord::HEADER, [record.csv()])?,
        Format::Json => write_json(&mut *w, &meta, "result", &record)?,
    }
    finish(record.error)
}

fn parse_placement(s: &str) -> Result<Placement, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "endpoints" => Ok(Placement::Endpoints),
        "centers" | "centres" => Ok(Placement::CellCenters),
        _ => Err(CliError::Config(format!(
            "unknown placement {s:?} (endpoints or centers)"
        ))),
    }
}

fn preset_value(s: &str, prefix: &str) -> Result<f64, CliError> {
    s.strip_prefix(prefix)
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Config(format!("bad preset {s:?}")))
}

/// Builds the grid spec. Presets also pin `gamma` (fig1) or `A` (fig2) in
/// the returned config so the metadata echoes them.
pub fn sweep_spec(
    args: &SweepArgs,
    mut cfg: RunConfig,
) -> Result<(SweepSpec, RunConfig), CliError> {
    let placement = parse_placement(&args.placement)?;
    let spec = match (&args.preset, &args.axis1, &args.axis2) {
        (Some(p), _, _) if p.starts_with("fig1:") => {
            cfg.gamma = preset_value(p, "fig1:")?;
            SweepSpec {
                fixed: cfg.fixed_params(),
                ..fig1_spec(cfg.gamma, args.resolution)
            }
        }
        (Some(p), _, _) if p.starts_with("fig2:") => {
            cfg.a = preset_value(p, "fig2:")? * PI;
            let spacing = if args.linear_gamma {
                Spacing::Linear
            } else {
                Spacing::Log
            };
            SweepSpec {
                fixed: cfg.fixed_params(),
                ..fig2_spec(cfg.a, args.resolution, spacing)
            }
        }
        (Some(p), _, _) => {
            return Err(CliError::Config(format!(
                "unknown preset {p:?} (fig1:<gamma> or fig2:<A-pi>)"
            )))
        }
        (None, Some(a1), Some(a2)) => SweepSpec::new(
            Axis::parse_pi_units(a1)?,
            Axis::parse_pi_units(a2)?,
            cfg.fixed_params(),
        ),
        _ => {
            return Err(CliError::Config(
                "sweep needs --preset or both --axis1 and --axis2".into(),
            ))
        }
    };
    let spec = SweepSpec { placement, ..spec };
    spec.validate()?;
    Ok((spec, cfg))
}

fn axis_json(a: &Axis) -> serde_json::Value {
    json!({
        "name": a.name.to_string(),
        "min": a.min,
        "max": a.max,
        "count": a.count,
        "spacing": match a.spacing { Spacing::Linear => "linear", Spacing::Log => "log" },
    })
}

pub const SWEEP_HEADER: [&str; 6] = [
    "axis1_value",
    "axis2_value",
    "gamma_g_rad",
    "gamma_g_pi",
    "degenerate",
    "status",
];

/// Row-major `(axis1, axis2)` records.
pub fn sweep_rows(grid: &SweepGrid) -> Vec<Vec<String>> {
    grid.cells
        .iter()
        .map(|c| {
            vec![
                fmt_f64(c.value1),
                fmt_f64(c.value2),
                fmt_opt(c.gamma_g),
                fmt_opt(c.gamma_g.map(|g| g / PI)),
                (!c.is_ok()).to_string(),
                c.status.label().to_string(),
            ]
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let (spec, cfg) = sweep_spec(args, args.common.resolve()?)?;
    let grid = run_sweep_with(&spec, Execution::with_workers(cfg.workers))?;
    let placement = match spec.placement {
        Placement::Endpoints => "endpoints",
        Placement::CellCenters => "centers",
    };
    let meta = Metadata::new("sweep", &cfg, grid.tau, grid.steps)
        .with("axis1", axis_json(&spec.axis1))
        .with("axis2", axis_json(&spec.axis2))
        .with("placement", placement)
        .with("preset", &args.preset)
        .with("cells", grid.cells.len())
        .with("flagged", grid.flagged());
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => write_csv(&mut *w, &meta, &SWEEP_HEADER, sweep_rows(&grid))?,
        Format::Json => {
            let cells: Vec<_> = grid
                .cells
                .iter()
                .map(|c| {
                    json!({
                        "axis1_value": c.value1,
                        "axis2_value": c.value2,
                        "gamma_g_rad": c.gamma_g,
                        "gamma_g_pi": c.gamma_g.map(|g| g / PI),
                        "degenerate": !c.is_ok(),
                        "status": c.status.label(),
                    })
                })
                .collect();
            write_json(&mut *w, &meta, "cells", cells)?
        }
    }
    if cfg.plot {
        if let Some(out) = &cfg.out {
            write_heatmap(&grid, &out.with_extension("png"))?;
        }
    }
    Ok(())
}

pub fn verify_report(args: &VerifyArgs) -> VerifyReport {
    let d = VerifyOptions::default();
    run_verification(&VerifyOptions {
        seed: args.seed.unwrap_or(d.seed),
        drift_draws: args.drift_draws.unwrap_or(d.drift_draws),
        trajectory_draws: args.trajectory_draws.unwrap_or(d.trajectory_draws),
        pure_phase_draws: args.pure_phase_draws.unwrap_or(d.pure_phase_draws),
        ..d
    })
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let cfg = args.common.resolve()?;
    let params = cfg.sim_params()?;
    let report = verify_report(args);
    let meta = Metadata::new("verify", &cfg, params.snapped_duration(), params.steps())
        .with("seed", report.seed)
        .with("passed", report.passed());
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => {
            // plain text: one PASS/FAIL line per check
            for line in meta.comment_lines() {
                writeln!(w, "{line}")?;
            }
            for c in &report.checks {
                writeln!(w, "{c}")?;
            }
            w.flush()?;
        }
        Format::Json => {
            let checks: Vec<_> = report
                .checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "measured": c.measured,
                        "bound": c.bound,
                        "passed": c.passed,
                        "samples": c.samples,
                    })
                })
                .collect();
            write_json(&mut *w, &meta, "checks", checks)?
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numeric("verification failed".into()))
    }
}
