//! Physical model of the driven two-level atom with jump feedback.
//!
//! The density matrix is written in the ordered basis `(|e>, |g>)` with
//! `sigma_z |e> = +|e>` and `sigma_- = |g><e|`. A state is carried as its
//! Bloch vector `p`, with `rho = (I + p . sigma) / 2`, and the unconditional
//! master equation becomes the affine system `dp/dt = M(t) p + c`.
//!
//! Units: `hbar = 1`, frequencies in units of `mu B0` (which defaults to 1).

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

/// Slack allowed on `|p|^2 <= 1` before a Bloch vector is considered unphysical.
pub const PURITY_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("feedback magnitude must be finite and non-negative, got {0}")]
    InvalidMagnitude(f64),
    #[error("feedback direction must be a finite non-zero vector")]
    InvalidDirection,
    #[error("decay rate must be finite and non-negative, got {0}")]
    InvalidDecayRate(f64),
    #[error("time step must be finite and positive, got {0}")]
    InvalidStep(f64),
    #[error("duration must be finite and non-negative, got {0}")]
    InvalidDuration(f64),
    #[error("a cyclic evolution needs omega > 0, got {0}")]
    NonCyclicDrive(f64),
}

/// Bloch vector of a qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState(Vector3<f64>);

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self(v)
    }

    #[inline]
    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    /// `|p|`; equals 1 for pure states and 0 at the maximally mixed point.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_physical(&self) -> bool {
        self.0.norm_squared() <= 1.0 + PURITY_SLACK
    }

    pub fn to_density(&self) -> DensityMatrix {
        to_density(self)
    }
}

/// 2x2 density matrix in the `(|e>, |g>)` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    /// Wraps a raw matrix without validation.
    pub fn from_matrix(m: Matrix2<Complex64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = 0.5 * (self.0[(0, 1)] + self.0[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        (mean - radius, mean + radius)
    }

    pub fn to_bloch(&self) -> BlochState {
        from_density(self)
    }
}

/// `rho = (I + p . sigma) / 2`.
pub fn to_density(p: &BlochState) -> DensityMatrix {
    let v = p.vector();
    let half = Complex64::new(0.5, 0.0);
    let coherence = Complex64::new(0.5 * v.x, -0.5 * v.y);
    DensityMatrix(Matrix2::new(
        half * (1.0 + v.z),
        coherence,
        coherence.conj(),
        half * (1.0 - v.z),
    ))
}

/// Inverse of [`to_density`]; reads the Hermitian part of `rho`.
pub fn from_density(rho: &DensityMatrix) -> BlochState {
    let m = rho.matrix();
    let coherence = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    BlochState::new(
        2.0 * coherence.re,
        -2.0 * coherence.im,
        (m[(0, 0)] - m[(1, 1)]).re,
    )
}

/// Pure initial state `cos(theta/2)|e> + sin(theta/2)|g>`.
pub fn initial_state(theta: f64) -> BlochState {
    BlochState::new(theta.sin(), 0.0, theta.cos())
}

/// Jump-feedback control: the unitary `F = exp(i A n . sigma)` applied after
/// each detected emission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackControl {
    magnitude: f64,
    direction: Vector3<f64>,
}

impl FeedbackControl {
    /// Direction stored when `A = 0`; any unit vector gives the same `F`.
    pub const CONVENTION_DIRECTION: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

    /// Builds a control from `A` and a direction, which is normalised.
    pub fn new(magnitude: f64, direction: Vector3<f64>) -> Result<Self, ModelError> {
        if !magnitude.is_finite() || magnitude < 0.0 {
            return Err(ModelError::InvalidMagnitude(magnitude));
        }
        let len = direction.norm();
        if !len.is_finite() || len == 0.0 {
            return Err(ModelError::InvalidDirection);
        }
        Ok(Self {
            magnitude,
            direction: direction / len,
        })
    }

    /// `A = (A sin beta, A cos beta, 0)`.
    pub fn from_angles(magnitude: f64, beta: f64) -> Result<Self, ModelError> {
        Self::new(magnitude, Vector3::new(beta.sin(), beta.cos(), 0.0))
    }

    /// Builds a control from the full vector `A`; the zero vector maps to the
    /// convention direction.
    pub fn from_vector(a: Vector3<f64>) -> Result<Self, ModelError> {
        let magnitude = a.norm();
        if !magnitude.is_finite() {
            return Err(ModelError::InvalidDirection);
        }
        if magnitude == 0.0 {
            return Ok(Self::none());
        }
        Self::new(magnitude, a)
    }

    /// No feedback (`F = I`).
    pub fn none() -> Self {
        Self {
            magnitude: 0.0,
            direction: Self::CONVENTION_DIRECTION,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn direction(&self) -> &Vector3<f64> {
        &self.direction
    }

    /// Axis `w` with `F sigma_z F^dagger = w . sigma`, i.e. the image of the z
    /// axis under the rotation implemented by `F`. The post-jump state
    /// `F |g>` has Bloch vector `-w`.
    ///
    /// Written with `sin 2A n` and `2 sin^2 A n n` so `A = 0` needs no branch.
    /// Every term has period `pi` in `A`; reducing first makes `A = pi` give
    /// exactly the `A = 0` axis.
    pub fn jump_axis(&self) -> Vector3<f64> {
        let n = &self.direction;
        let a = self.magnitude.rem_euclid(PI);
        let s2 = (2.0 * a).sin();
        let ss = 2.0 * a.sin().powi(2);
        Vector3::new(
            -s2 * n.y + ss * n.x * n.z,
            s2 * n.x + ss * n.y * n.z,
            (2.0 * a).cos() + ss * n.z * n.z,
        )
    }
}

/// `F = cos A I + i sin A (n . sigma)`.
pub fn feedback_unitary(ctrl: &FeedbackControl) -> Matrix2<Complex64> {
    let (s, c) = ctrl.magnitude.sin_cos();
    let n = &ctrl.direction;
    let i = Complex64::i();
    // n . sigma = [[n_z, n_x - i n_y], [n_x + i n_y, -n_z]]
    let cos = Complex64::new(c, 0.0);
    Matrix2::new(
        cos + i * s * n.z,
        i * s * Complex64::new(n.x, -n.y),
        i * s * Complex64::new(n.x, n.y),
        cos - i * s * n.z,
    )
}

/// Rotating drive `B(t) = B0 (sin Theta cos wt, sin Theta sin wt, cos Theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveField {
    pub b0: f64,
    pub mu: f64,
    /// Polar angle of the field, measured from +z.
    pub theta_field: f64,
    pub omega: f64,
}

impl Default for DriveField {
    fn default() -> Self {
        Self {
            b0: 1.0,
            mu: 1.0,
            theta_field: PI / 2.0,
            omega: 0.005,
        }
    }
}

impl DriveField {
    pub fn new(theta_field: f64, omega: f64) -> Self {
        Self {
            theta_field,
            omega,
            ..Self::default()
        }
    }

    /// Energy scale `mu B0` that sets the unit of frequency.
    pub fn mu_b0(&self) -> f64 {
        self.mu * self.b0
    }

    /// Period `2 pi / omega` of one full rotation of the field.
    pub fn period(&self) -> Result<f64, ModelError> {
        if self.omega > 0.0 && self.omega.is_finite() {
            Ok(2.0 * PI / self.omega)
        } else {
            Err(ModelError::NonCyclicDrive(self.omega))
        }
    }

    pub fn field_at(&self, t: f64) -> Vector3<f64> {
        field_at(self, t)
    }
}

pub fn field_at(drive: &DriveField, t: f64) -> Vector3<f64> {
    let (st, ct) = drive.theta_field.sin_cos();
    let (sp, cp) = (drive.omega * t).sin_cos();
    drive.b0 * Vector3::new(st * cp, st * sp, ct)
}

/// Decay rate, initial angle and time discretisation of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    pub gamma: f64,
    pub theta_init: f64,
    /// Requested duration; the run uses [`SimParams::snapped_duration`].
    pub duration: f64,
    pub dt: f64,
}

impl SimParams {
    pub fn new(gamma: f64, theta_init: f64, duration: f64, dt: f64) -> Result<Self, ModelError> {
        let params = Self {
            gamma,
            theta_init,
            duration,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for one full field cycle `tau = 2 pi / omega`.
    pub fn cycle(
        gamma: f64,
        theta_init: f64,
        drive: &DriveField,
        dt: f64,
    ) -> Result<Self, ModelError> {
        Self::new(gamma, theta_init, drive.period()?, dt)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(ModelError::InvalidDecayRate(self.gamma));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(ModelError::InvalidStep(self.dt));
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(ModelError::InvalidDuration(self.duration));
        }
        Ok(())
    }

    /// Number of integration steps, `round(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Duration actually integrated: `steps * dt`.
    pub fn snapped_duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }
}

/// Right-hand side of `dp/dt = M p + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftSystem {
    pub m: Matrix3<f64>,
    pub c: Vector3<f64>,
}

impl DriftSystem {
    #[inline]
    pub fn rate(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.m * p + self.c
    }

    /// Largest componentwise difference to another system.
    pub fn max_abs_diff(&self, other: &DriftSystem) -> f64 {
        let dm = (self.m - other.m).amax();
        let dc = (self.c - other.c).amax();
        dm.max(dc)
    }
}

/// Precession part `2 mu B x p` as a matrix.
#[inline]
pub fn precession_matrix(b: &Vector3<f64>, mu: f64) -> Matrix3<f64> {
    let w = 2.0 * mu * b;
    Matrix3::new(
        0.0, -w.z, w.y, //
        w.z, 0.0, -w.x, //
        -w.y, w.x, 0.0,
    )
}

/// Builds the affine Bloch system for field value `b`.
///
/// The dissipative part is `-gamma/2 p - gamma/2 (1 + p_z) w - gamma/2 z`,
/// where `w` is [`FeedbackControl::jump_axis`]; it only touches the third
/// column of `M` and the constant term.
pub fn drift_system(gamma: f64, b: &Vector3<f64>, mu: f64, ctrl: &FeedbackControl) -> DriftSystem {
    let w = ctrl.jump_axis();
    let half = 0.5 * gamma;
    let mut m = precession_matrix(b, mu);
    m[(0, 0)] -= half;
    m[(1, 1)] -= half;
    m[(2, 2)] -= half;
    m[(0, 2)] -= half * w.x;
    m[(1, 2)] -= half * w.y;
    m[(2, 2)] -= half * w.z;
    let c = Vector3::new(-half * w.x, -half * w.y, -half - half * w.z);
    DriftSystem { m, c }
}
