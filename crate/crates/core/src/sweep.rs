//! Two-dimensional parameter grids over the feedback amplitude `A`, its
//! direction angle `beta` and the decay rate `gamma`.
//!
//! Every cell integrates one full field cycle and records its geometric
//! phase. Cells are independent, so the grid is filled either sequentially
//! or on a rayon pool (feature `parallel`); results land in slots keyed by
//! cell index, so the output does not depend on execution order.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::gphase::{evolve_phase, PhaseError};
use crate::integrator::IntegrationError;
use crate::model::{DriveField, FeedbackControl, ModelError, SimParams};

/// Decay rates of the eight `(A, beta)` panels.
pub const FIG1_GAMMAS: [f64; 8] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 3.0];
/// Feedback amplitudes (in units of pi) of the four `(gamma, beta)` panels.
pub const FIG2_AMPLITUDES_PI: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// Decay-rate span of the `(gamma, beta)` panels.
pub const FIG2_GAMMA_RANGE: (f64, f64) = (0.001, 3.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("both axes sweep {0}")]
    DuplicateAxis(AxisName),
    #[error("axis {0} needs at least 2 points")]
    TooFewPoints(AxisName),
    #[error("axis {0} has a non-finite range")]
    NonFiniteRange(AxisName),
    #[error("logarithmic axis {0} needs min > 0")]
    LogNeedsPositive(AxisName),
    #[error("axis {0} must stay non-negative")]
    Negative(AxisName),
    #[error("unknown axis name {0:?} (expected A, beta or gamma)")]
    UnknownAxis(String),
    #[error("invalid axis {0:?} (expected name:min:max:count[:log])")]
    BadAxisSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxisName {
    /// Feedback amplitude, radians.
    A,
    /// Feedback direction angle, radians.
    Beta,
    /// Decay rate, units of `mu B0`.
    Gamma,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::A => "A",
            AxisName::Beta => "beta",
            AxisName::Gamma => "gamma",
        }
    }

    /// Whether the axis is an angle (given in units of pi on the command line).
    pub fn is_angle(&self) -> bool {
        !matches!(self, AxisName::Gamma)
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(AxisName::A),
            "beta" => Ok(AxisName::Beta),
            "gamma" => Ok(AxisName::Gamma),
            other => Err(SweepError::UnknownAxis(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Where grid points sit within `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Placement {
    /// `count` points including both ends.
    #[default]
    Endpoints,
    /// Centres of `count` equal cells.
    CellCenters,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Self {
            name,
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Self {
            name,
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }

    /// Parses `name:min:max:count[:log]`. Angle axes are read in units of pi.
    pub fn parse_pi_units(s: &str) -> Result<Self, SweepError> {
        let bad = || SweepError::BadAxisSpec(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 && parts.len() != 5 {
            return Err(bad());
        }
        let name: AxisName = parts[0].trim().parse()?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let scale = if name.is_angle() { PI } else { 1.0 };
        let min = num(parts[1])? * scale;
        let max = num(parts[2])? * scale;
        let count = parts[3].trim().parse::<usize>().map_err(|_| bad())?;
        let spacing = match parts.get(4).map(|x| x.trim()) {
            None | Some("lin") | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(_) => return Err(bad()),
        };
        Ok(Self {
            name,
            min,
            max,
            count,
            spacing,
        })
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.count < 2 {
            return Err(SweepError::TooFewPoints(self.name));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(SweepError::NonFiniteRange(self.name));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(SweepError::LogNeedsPositive(self.name));
        }
        let must_be_positive = matches!(self.name, AxisName::A | AxisName::Gamma);
        if must_be_positive && (self.min < 0.0 || self.max < 0.0) {
            return Err(SweepError::Negative(self.name));
        }
        Ok(())
    }

    pub fn values(&self, placement: Placement) -> Vec<f64> {
        let n = self.count;
        let (lo, hi) = match self.spacing {
            Spacing::Linear => (self.min, self.max),
            Spacing::Log => (self.min.ln(), self.max.ln()),
        };
        let fraction = |i: usize| match placement {
            Placement::Endpoints => i as f64 / (n - 1) as f64,
            Placement::CellCenters => (i as f64 + 0.5) / n as f64,
        };
        (0..n)
            .map(|i| {
                let u = lo + (hi - lo) * fraction(i);
                match self.spacing {
                    Spacing::Linear => u,
                    Spacing::Log => u.exp(),
                }
            })
            .collect()
    }
}

/// Parameters held fixed across a sweep; the swept ones are overridden per cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedParams {
    pub gamma: f64,
    pub a: f64,
    pub beta: f64,
    /// Initial-state angle.
    pub theta: f64,
    /// Polar angle of the field.
    pub cap_theta: f64,
    pub omega: f64,
    pub b0: f64,
    pub mu: f64,
    pub dt: f64,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            a: PI / 4.0,
            beta: 0.0,
            theta: PI / 2.0,
            cap_theta: PI / 2.0,
            omega: 0.005,
            b0: 1.0,
            mu: 1.0,
            dt: 0.01,
        }
    }
}

impl FixedParams {
    pub fn drive(&self) -> DriveField {
        DriveField {
            b0: self.b0,
            mu: self.mu,
            theta_field: self.cap_theta,
            omega: self.omega,
        }
    }

    pub fn sim_params(&self, gamma: f64) -> Result<SimParams, ModelError> {
        SimParams::cycle(gamma, self.theta, &self.drive(), self.dt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    /// Row axis.
    pub axis1: Axis,
    /// Column axis.
    pub axis2: Axis,
    pub fixed: FixedParams,
    pub placement: Placement,
}

impl SweepSpec {
    pub fn new(axis1: Axis, axis2: Axis, fixed: FixedParams) -> Self {
        Self {
            axis1,
            axis2,
            fixed,
            placement: Placement::Endpoints,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axis1.name == self.axis2.name {
            return Err(SweepError::DuplicateAxis(self.axis1.name));
        }
        self.axis1.validate()?;
        self.axis2.validate()?;
        self.fixed.sim_params(self.fixed.gamma)?;
        FeedbackControl::from_angles(self.fixed.a, self.fixed.beta)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axis1.count * self.axis2.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(gamma, A, beta)` at a grid point.
    fn point(&self, v1: f64, v2: f64) -> (f64, f64, f64) {
        let mut p = (self.fixed.gamma, self.fixed.a, self.fixed.beta);
        for (name, v) in [(self.axis1.name, v1), (self.axis2.name, v2)] {
            match name {
                AxisName::Gamma => p.0 = v,
                AxisName::A => p.1 = v,
                AxisName::Beta => p.2 = v,
            }
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellStatus {
    Ok,
    /// The state reached the maximally mixed point at this time.
    Degenerate {
        t: f64,
    },
    UnwrapAmbiguity {
        t: f64,
    },
    PurityViolation {
        t: f64,
    },
    NotPure,
    Invalid,
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Degenerate { .. } => "degenerate",
            CellStatus::UnwrapAmbiguity { .. } => "unwrap",
            CellStatus::PurityViolation { .. } => "purity",
            CellStatus::NotPure => "not_pure",
            CellStatus::Invalid => "invalid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub value1: f64,
    pub value2: f64,
    /// Geometric phase in `(-pi, pi]`, present only when `status` is `Ok`.
    pub gamma_g: Option<f64>,
    pub status: CellStatus,
}

impl Cell {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    /// Row-major over `(axis1, axis2)`.
    pub cells: Vec<Cell>,
    /// Integrated duration after snapping to whole steps.
    pub tau: f64,
    pub steps: usize,
}

impl SweepGrid {
    pub fn rows(&self) -> usize {
        self.values1.len()
    }

    pub fn cols(&self) -> usize {
        self.values2.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        let n = self.cols();
        &self.cells[i * n..(i + 1) * n]
    }

    /// Phases of all non-degenerate cells.
    pub fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().filter_map(|c| c.gamma_g)
    }

    pub fn flagged(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }
}

/// Length of the shortest arc of the circle containing all `angles`.
///
/// This is the range of a set of phases that is insensitive to where the
/// branch cut of `(-pi, pi]` falls.
pub fn circular_spread<I: IntoIterator<Item = f64>>(angles: I) -> f64 {
    let mut v: Vec<f64> = angles.into_iter().map(|a| a.rem_euclid(TAU)).collect();
    if v.len() < 2 {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let wrap_gap = v[0] + TAU - v[v.len() - 1];
    let max_gap = v.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, f64::max);
    (TAU - max_gap).max(0.0)
}

/// How the cells of a grid are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `None` uses the global pool.
    #[cfg(feature = "parallel")]
    Parallel {
        workers: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel { workers: None }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Parallel with the given width when available, sequential otherwise.
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            #[cfg(feature = "parallel")]
            w => Execution::Parallel { workers: w },
            #[cfg(not(feature = "parallel"))]
            _ => Execution::Sequential,
        }
    }
}

fn cell_from(
    value1: f64,
    value2: f64,
    outcome: Result<crate::gphase::PhaseResult, PhaseError>,
) -> Cell {
    let (gamma_g, status) = match outcome {
        Ok(r) => match r.degenerate {
            Some(t) => (None, CellStatus::Degenerate { t }),
            None => (r.gamma_g, CellStatus::Ok),
        },
        Err(PhaseError::Degenerate { t, .. }) => (None, CellStatus::Degenerate { t }),
        Err(PhaseError::UnwrapAmbiguity { t, .. }) => (None, CellStatus::UnwrapAmbiguity { t }),
        Err(PhaseError::Integration(IntegrationError::PurityViolation { t, .. })) => {
            (None, CellStatus::PurityViolation { t })
        }
        Err(PhaseError::NotPure { .. }) => (None, CellStatus::NotPure),
        Err(PhaseError::EmptyTrajectory) => (None, CellStatus::Invalid),
    };
    Cell {
        value1,
        value2,
        gamma_g,
        status,
    }
}

/// Evaluates one cell of a validated spec.
pub fn run_cell(spec: &SweepSpec, values1: &[f64], values2: &[f64], index: usize) -> Cell {
    let (i, j) = (index / values2.len(), index % values2.len());
    let (v1, v2) = (values1[i], values2[j]);
    let (gamma, a, beta) = spec.point(v1, v2);
    let setup = FeedbackControl::from_angles(a, beta)
        .and_then(|ctrl| Ok((ctrl, spec.fixed.sim_params(gamma)?)));
    match setup {
        Ok((ctrl, params)) => cell_from(v1, v2, evolve_phase(&spec.fixed.drive(), &params, &ctrl)),
        Err(_) => Cell {
            value1: v1,
            value2: v2,
            gamma_g: None,
            status: CellStatus::Invalid,
        },
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid, SweepError> {
    run_sweep_with(spec, Execution::default())
}

pub fn run_sweep_with(spec: &SweepSpec, execution: Execution) -> Result<SweepGrid, SweepError> {
    spec.validate()?;
    let values1 = spec.axis1.values(spec.placement);
    let values2 = spec.axis2.values(spec.placement);
    let n = values1.len() * values2.len();
    let eval = |k: usize| run_cell(spec, &values1, &values2, k);
    let cells: Vec<Cell> = match execution {
        Execution::Sequential => (0..n).map(eval).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers: None } => (0..n).into_par_iter().map(eval).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers: Some(w) } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| SweepError::Pool(e.to_string()))?;
            pool.install(|| (0..n).into_par_iter().map(eval).collect())
        }
    };
    let params = spec.fixed.sim_params(spec.fixed.gamma)?;
    Ok(SweepGrid {
        spec: *spec,
        values1,
        values2,
        cells,
        tau: params.snapped_duration(),
        steps: params.steps(),
    })
}

/// `(A, beta)` grid at fixed `gamma`: `A` in `[0, pi]` by rows, `beta` in
/// `[0, 2 pi]` by columns, `theta = Theta = pi/2`, `omega = 0.005`.
pub fn fig1_spec(gamma: f64, resolution: usize) -> SweepSpec {
    SweepSpec::new(
        Axis::linear(AxisName::A, 0.0, PI, resolution),
        Axis::linear(AxisName::Beta, 0.0, TAU, resolution),
        FixedParams {
            gamma,
            ..FixedParams::default()
        },
    )
}

pub fn fig1_protocol(gamma: f64, resolution: usize) -> Result<SweepGrid, SweepError> {
    run_sweep(&fig1_spec(gamma, resolution))
}

/// `(gamma, beta)` grid at fixed `A`: `gamma` in `[0.001, 3]` by rows,
/// `beta` in `[0, 2 pi]` by columns.
pub fn fig2_spec(a: f64, resolution: usize, spacing: Spacing) -> SweepSpec {
    let (lo, hi) = FIG2_GAMMA_RANGE;
    SweepSpec::new(
        Axis {
            name: AxisName::Gamma,
            min: lo,
            max: hi,
            count: resolution,
            spacing,
        },
        Axis::linear(AxisName::Beta, 0.0, TAU, resolution),
        FixedParams {
            a,
            ..FixedParams::default()
        },
    )
}

pub fn fig2_protocol(a: f64, resolution: usize) -> Result<SweepGrid, SweepError> {
    run_sweep(&fig2_spec(a, resolution, Spacing::Log))
}
