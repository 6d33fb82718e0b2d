//! Fixed-step RK4 integration of `dp/dt = M(t) p + c` under the rotating drive.

use nalgebra::Vector3;
use thiserror::Error;

use crate::model::{
    drift_system, precession_matrix, BlochState, DriftSystem, DriveField, FeedbackControl,
    SimParams,
};

/// `|p|` above this aborts an integration.
pub const PURITY_ABORT: f64 = 1.0 + 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("Bloch vector left the unit ball at t = {t} (|p| = {norm}); step too large?")]
    PurityViolation { t: f64, norm: f64 },
}

/// Time-dependent generator with the field-independent dissipative part
/// precomputed once.
#[derive(Clone, Copy, Debug)]
pub struct BlochGenerator {
    drive: DriveField,
    dissipation: DriftSystem,
}

impl BlochGenerator {
    pub fn new(drive: &DriveField, gamma: f64, ctrl: &FeedbackControl) -> Self {
        Self {
            drive: *drive,
            dissipation: drift_system(gamma, &Vector3::zeros(), drive.mu, ctrl),
        }
    }

    /// Drift system at time `t`; identical to `drift_system(gamma, B(t), mu, ctrl)`.
    pub fn at(&self, t: f64) -> DriftSystem {
        let b = self.drive.field_at(t);
        DriftSystem {
            m: self.dissipation.m + precession_matrix(&b, self.drive.mu),
            c: self.dissipation.c,
        }
    }

    #[inline]
    pub fn rate(&self, t: f64, p: &Vector3<f64>) -> Vector3<f64> {
        self.at(t).rate(p)
    }

    /// One classical RK4 step from `t` to `t + dt`.
    pub fn rk4_step(&self, p: &Vector3<f64>, t: f64, dt: f64) -> Vector3<f64> {
        let half = 0.5 * dt;
        let start = self.at(t);
        let mid = self.at(t + half);
        let end = self.at(t + dt);
        let k1 = start.rate(p);
        let k2 = mid.rate(&(p + half * k1));
        let k3 = mid.rate(&(p + half * k2));
        let k4 = end.rate(&(p + dt * k3));
        p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }
}

fn check_purity(t: f64, p: &Vector3<f64>) -> Result<(), IntegrationError> {
    let norm = p.norm();
    if norm > PURITY_ABORT || !norm.is_finite() {
        return Err(IntegrationError::PurityViolation { t, norm });
    }
    Ok(())
}

/// Single RK4 step of the Bloch equation.
pub fn step(
    p: &BlochState,
    t: f64,
    dt: f64,
    drive: &DriveField,
    params: &SimParams,
    ctrl: &FeedbackControl,
) -> Result<BlochState, IntegrationError> {
    let next = BlochGenerator::new(drive, params.gamma, ctrl).rk4_step(p.vector(), t, dt);
    check_purity(t + dt, &next)?;
    Ok(BlochState::from_vector(next))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: BlochState,
}

/// Streams the samples `t = 0, dt, ..., steps * dt` of one integration.
///
/// Sample times are computed as `k * dt`, not accumulated. The iterator
/// yields an error at the first step that leaves the unit ball and is
/// exhausted afterwards.
#[derive(Clone, Debug)]
pub struct Propagator {
    generator: BlochGenerator,
    dt: f64,
    steps: usize,
    next_index: usize,
    state: Vector3<f64>,
    failed: bool,
}

impl Propagator {
    pub fn new(
        p0: &BlochState,
        drive: &DriveField,
        params: &SimParams,
        ctrl: &FeedbackControl,
    ) -> Self {
        Self {
            generator: BlochGenerator::new(drive, params.gamma, ctrl),
            dt: params.dt,
            steps: params.steps(),
            next_index: 0,
            state: *p0.vector(),
            failed: false,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Iterator for Propagator {
    type Item = Result<Sample, IntegrationError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next_index > self.steps {
            return None;
        }
        let k = self.next_index;
        self.next_index += 1;
        if k > 0 {
            let t_prev = (k - 1) as f64 * self.dt;
            self.state = self.generator.rk4_step(&self.state, t_prev, self.dt);
        }
        let t = k as f64 * self.dt;
        if let Err(e) = check_purity(t, &self.state) {
            self.failed = true;
            return Some(Err(e));
        }
        Some(Ok(Sample {
            t,
            state: BlochState::from_vector(self.state),
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let remaining = (self.steps + 1).saturating_sub(self.next_index);
        (0, Some(remaining))
    }
}

/// Uniformly sampled solution of the Bloch equation.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dt: f64,
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(dt: f64, samples: Vec<Sample>) -> Self {
        Self { dt, samples }
    }

    /// Spacing between consecutive samples.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Keeps every `k`-th sample, always including the first one.
    pub fn thinned(&self, k: usize) -> Trajectory {
        let k = k.max(1);
        Trajectory {
            dt: self.dt * k as f64,
            samples: self.samples.iter().step_by(k).copied().collect(),
        }
    }

    /// Largest `|p|` over the trajectory.
    pub fn max_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.state.norm())
            .fold(0.0, f64::max)
    }
}

/// Integrates from `p0` over `[0, params.snapped_duration()]`.
pub fn integrate(
    p0: &BlochState,
    drive: &DriveField,
    params: &SimParams,
    ctrl: &FeedbackControl,
) -> Result<Trajectory, IntegrationError> {
    let samples = Propagator::new(p0, drive, params, ctrl).collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory {
        dt: params.dt,
        samples,
    })
}
