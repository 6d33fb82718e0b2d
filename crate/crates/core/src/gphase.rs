//! Geometric phase of the nonunitary evolution.
//!
//! For a pure initial state only the dominant eigenvector `|E+>` of `rho`
//! contributes, and the phase is
//!
//! ```text
//! gamma_g = arg( <E+(0)|E+(tau)> exp(-int <E+|dE+/dt> dt) )
//! ```
//!
//! With `|E+> = cos(a/2) e^{-i phi} |e> + sin(a/2) |g>` (`a`, `phi` the polar
//! and azimuthal angles of `p`) the connection is `<E+|dE+> = -i cos^2(a/2) dphi`,
//! so the parallel-transport factor is `exp(+i int cos^2(a/2) dphi)`. The
//! azimuth is tracked with `atan2` and unwrapped sample by sample rather than
//! differentiated, which stays finite where `p_y` or `sin phi` vanish.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use num_complex::Complex64;
use thiserror::Error;

use crate::integrator::{IntegrationError, Propagator, Trajectory};
use crate::model::{
    initial_state, BlochState, DensityMatrix, DriveField, FeedbackControl, SimParams,
};

/// Below this `|p|` the eigenframe is undefined.
pub const DEGENERACY_EPS: f64 = 1e-9;
/// Below this `sqrt(p_x^2 + p_y^2)` the azimuth is held at its previous value.
pub const AXIS_EPS: f64 = 1e-9;
/// Required purity of the initial state, `|p(0)| >= 1 - PURE_TOL`.
pub const PURE_TOL: f64 = 1e-9;
/// Largest azimuth change per sample that can be unwrapped unambiguously.
pub const MAX_STEP_DPHI: f64 = PI / 2.0;

/// Failure of a pointwise eigenframe operation.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum FrameError {
    #[error("eigenframe undefined near the maximally mixed state (|p| = {norm})")]
    Degenerate { norm: f64 },
    #[error("azimuth jumped by {dphi} rad in one sample")]
    UnwrapAmbiguity { dphi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("initial state is not pure (|p| = {norm})")]
    NotPure { norm: f64 },
    #[error("eigenframe undefined at t = {t} (|p| = {norm})")]
    Degenerate { t: f64, norm: f64 },
    #[error("azimuth jumped by {dphi} rad at t = {t}; reduce dt")]
    UnwrapAmbiguity { t: f64, dphi: f64 },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Eigen-decomposition of `rho(p)` in polar form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenFrame {
    pub e_plus: f64,
    pub e_minus: f64,
    /// Polar angle of `p` in `[0, pi]`.
    pub alpha: f64,
    /// Unwrapped azimuth of `p`.
    pub phi: f64,
    pub xy_norm: f64,
    pub r: f64,
}

impl EigenFrame {
    /// `cos^2(alpha/2)`, the weight of `|e>` in `|E+>`.
    pub fn excited_weight(&self) -> f64 {
        let c = (0.5 * self.alpha).cos();
        c * c
    }

    /// `|E+> = (cos(a/2) e^{-i phi}, sin(a/2))` in the `(|e>, |g>)` basis.
    pub fn eigenvector_plus(&self) -> Vector2<Complex64> {
        let (s, c) = (0.5 * self.alpha).sin_cos();
        Vector2::new(Complex64::from_polar(c, -self.phi), Complex64::new(s, 0.0))
    }

    /// `|E-> = (sin(a/2) e^{-i phi}, -cos(a/2))`.
    pub fn eigenvector_minus(&self) -> Vector2<Complex64> {
        let (s, c) = (0.5 * self.alpha).sin_cos();
        Vector2::new(Complex64::from_polar(s, -self.phi), Complex64::new(-c, 0.0))
    }

    /// `E+ |E+><E+| + E- |E-><E-|`.
    pub fn density(&self) -> DensityMatrix {
        let plus = self.eigenvector_plus();
        let minus = self.eigenvector_minus();
        DensityMatrix::from_matrix(
            plus * plus.adjoint() * Complex64::from(self.e_plus)
                + minus * minus.adjoint() * Complex64::from(self.e_minus),
        )
    }
}

/// Eigenframe of `rho(p)`, unwrapping the azimuth against `phi_prev`.
///
/// On the z axis the azimuth is undefined; it is held at `phi_prev` there.
pub fn eigenframe(p: &BlochState, phi_prev: Option<f64>) -> Result<EigenFrame, FrameError> {
    let r = p.norm();
    if r.is_nan() || r <= DEGENERACY_EPS {
        return Err(FrameError::Degenerate { norm: r });
    }
    let xy_norm = p.x().hypot(p.y());
    let alpha = xy_norm.atan2(p.z());
    let raw = p.y().atan2(p.x());
    let phi = match phi_prev {
        Some(prev) if xy_norm < AXIS_EPS => prev,
        Some(prev) => raw + TAU * ((prev - raw) / TAU).round(),
        None => raw,
    };
    Ok(EigenFrame {
        e_plus: 0.5 * (1.0 + r),
        e_minus: 0.5 * (1.0 - r),
        alpha,
        phi,
        xy_norm,
        r,
    })
}

/// Trapezoidal increment of `int cos^2(alpha/2) dphi` between two frames.
pub fn accumulate(prev: &EigenFrame, next: &EigenFrame) -> Result<f64, FrameError> {
    let dphi = next.phi - prev.phi;
    if dphi.is_nan() || dphi.abs() >= MAX_STEP_DPHI {
        return Err(FrameError::UnwrapAmbiguity { dphi });
    }
    Ok(0.5 * (prev.excited_weight() + next.excited_weight()) * dphi)
}

/// `<E+(0)|E+(tau)>`.
pub fn overlap(initial: &EigenFrame, last: &EigenFrame) -> Complex64 {
    let (s0, c0) = (0.5 * initial.alpha).sin_cos();
    let (s1, c1) = (0.5 * last.alpha).sin_cos();
    Complex64::from_polar(c0 * c1, initial.phi - last.phi) + s0 * s1
}

/// Azimuthal rate `dphi/dt = (p_x p_y' - p_y p_x') / (p_x^2 + p_y^2)`.
pub fn azimuthal_rate(p: &BlochState, rate: &BlochState) -> f64 {
    let (x, y) = (p.x(), p.y());
    (x * rate.y() - y * rate.x()) / (x * x + y * y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseResult {
    /// `int cos^2(alpha/2) dphi` in radians.
    pub connection_integral: f64,
    /// `<E+(0)|E+(tau)>`.
    pub overlap: Complex64,
    /// Geometric phase in `(-pi, pi]`; `None` when the evolution hit a
    /// degenerate state.
    pub gamma_g: Option<f64>,
    /// Time of the first degenerate sample, if any.
    pub degenerate: Option<f64>,
    pub max_step_dphi: f64,
    pub initial_frame: EigenFrame,
    /// Last non-degenerate frame.
    pub final_frame: EigenFrame,
    pub final_time: f64,
}

impl PhaseResult {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }

    pub fn gamma_g_pi(&self) -> Option<f64> {
        self.gamma_g.map(|g| g / PI)
    }
}

/// Streaming fold of a trajectory into its geometric phase.
#[derive(Clone, Debug)]
pub struct PhaseAccumulator {
    initial: EigenFrame,
    current: EigenFrame,
    current_t: f64,
    integral: f64,
    max_dphi: f64,
    degenerate_at: Option<f64>,
    /// Every frame so far lies on the z axis, so the held azimuth is still
    /// an arbitrary gauge choice.
    on_axis: bool,
}

impl PhaseAccumulator {
    /// Starts at a pure state sampled at `t = 0`.
    pub fn new(p0: &BlochState) -> Result<Self, PhaseError> {
        let norm = p0.norm();
        if norm < 1.0 - PURE_TOL {
            return Err(PhaseError::NotPure { norm });
        }
        let frame = eigenframe(p0, None).map_err(|_| PhaseError::NotPure { norm })?;
        Ok(Self {
            initial: frame,
            current: frame,
            current_t: 0.0,
            integral: 0.0,
            max_dphi: 0.0,
            degenerate_at: None,
            on_axis: frame.xy_norm < AXIS_EPS,
        })
    }

    /// Adds the next sample. Once a degenerate sample is seen the
    /// accumulator is frozen and further samples are ignored.
    pub fn push(&mut self, t: f64, p: &BlochState) -> Result<(), PhaseError> {
        if self.degenerate_at.is_some() {
            return Ok(());
        }
        let frame = match eigenframe(p, Some(self.current.phi)) {
            Ok(frame) => frame,
            Err(_) => {
                self.degenerate_at = Some(t);
                return Ok(());
            }
        };
        if self.on_axis && frame.xy_norm >= AXIS_EPS {
            // First departure from an axis start: every earlier increment was
            // zero, so moving the whole history onto the new azimuth is a
            // uniform gauge shift.
            self.on_axis = false;
            self.initial.phi = frame.phi;
            self.current.phi = frame.phi;
        }
        let increment = accumulate(&self.current, &frame).map_err(|e| match e {
            FrameError::UnwrapAmbiguity { dphi } => PhaseError::UnwrapAmbiguity { t, dphi },
            FrameError::Degenerate { norm } => PhaseError::Degenerate { t, norm },
        })?;
        self.max_dphi = self.max_dphi.max((frame.phi - self.current.phi).abs());
        self.integral += increment;
        self.current = frame;
        self.current_t = t;
        Ok(())
    }

    pub fn current_frame(&self) -> Option<&EigenFrame> {
        match self.degenerate_at {
            Some(_) => None,
            None => Some(&self.current),
        }
    }

    pub fn connection_integral(&self) -> f64 {
        self.integral
    }

    pub fn degenerate_at(&self) -> Option<f64> {
        self.degenerate_at
    }

    pub fn finish(self) -> PhaseResult {
        let overlap = overlap(&self.initial, &self.current);
        let gamma_g = match self.degenerate_at {
            Some(_) => None,
            None => Some(wrap_angle((overlap * Complex64::cis(self.integral)).arg())),
        };
        PhaseResult {
            connection_integral: self.integral,
            overlap,
            gamma_g,
            degenerate: self.degenerate_at,
            max_step_dphi: self.max_dphi,
            initial_frame: self.initial,
            final_frame: self.current,
            final_time: self.current_t,
        }
    }
}

/// Geometric phase accumulated along a stored trajectory.
pub fn geometric_phase(traj: &Trajectory) -> Result<PhaseResult, PhaseError> {
    let (first, rest) = traj
        .samples()
        .split_first()
        .ok_or(PhaseError::EmptyTrajectory)?;
    let mut acc = PhaseAccumulator::new(&first.state)?;
    for s in rest {
        acc.push(s.t, &s.state)?;
    }
    Ok(acc.finish())
}

/// Integrates from `initial_state(params.theta_init)` and folds the phase on
/// the fly, without storing the trajectory.
pub fn evolve_phase(
    drive: &DriveField,
    params: &SimParams,
    ctrl: &FeedbackControl,
) -> Result<PhaseResult, PhaseError> {
    let p0 = initial_state(params.theta_init);
    let mut samples = Propagator::new(&p0, drive, params, ctrl);
    let first = samples.next().ok_or(PhaseError::EmptyTrajectory)??;
    let mut acc = PhaseAccumulator::new(&first.state)?;
    for s in samples {
        let s = s?;
        acc.push(s.t, &s.state)?;
        if acc.degenerate_at().is_some() {
            break;
        }
    }
    Ok(acc.finish())
}
