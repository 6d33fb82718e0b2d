//! Brute-force references that share no code with the Bloch drift
//! construction in [`crate::model::drift_system`].
//!
//! The master equation is assembled directly as a 4x4 superoperator on the
//! column-major vectorised density matrix, using `vec(A X B) = (B^T (x) A) vec(X)`,
//! and the `gamma = 0` geometric phase is obtained from a Schrodinger
//! integration as Pancharatnam phase minus dynamical phase.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector3, Vector4};
use num_complex::Complex64;
use thiserror::Error;

use crate::gphase::wrap_angle;
use crate::model::{feedback_unitary, DensityMatrix, DriveField, FeedbackControl, SimParams};

/// Most negative eigenvalue tolerated before an oracle run is aborted.
pub const POSITIVITY_ABORT: f64 = -1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("density matrix lost positivity at t = {t} (min eigenvalue {min_eigenvalue})")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `[sigma_x, sigma_y, sigma_z]` in the `(|e>, |g>)` basis.
pub fn pauli() -> [Matrix2<Complex64>; 3] {
    let zero = c(0.0);
    let one = c(1.0);
    let i = Complex64::i();
    [
        Matrix2::new(zero, one, one, zero),
        Matrix2::new(zero, -i, i, zero),
        Matrix2::new(one, zero, zero, -one),
    ]
}

/// `sigma_- = |g><e|`.
pub fn sigma_minus() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(0.0), c(1.0), c(0.0))
}

/// `H0 = mu B . sigma`.
pub fn hamiltonian(b: &Vector3<f64>, mu: f64) -> Matrix2<Complex64> {
    let [sx, sy, sz] = pauli();
    sx * c(mu * b.x) + sy * c(mu * b.y) + sz * c(mu * b.z)
}

fn vectorize(m: &Matrix2<Complex64>) -> Vector4<Complex64> {
    Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

fn unvectorize(v: &Vector4<Complex64>) -> Matrix2<Complex64> {
    Matrix2::new(v[0], v[2], v[1], v[3])
}

/// Generator of `d vec(rho)/dt` for the feedback master equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Superoperator(pub Matrix4<Complex64>);

impl Superoperator {
    /// `-i[H, .] + gamma (J . J^dagger - {J^dagger J, .}/2)` with `J = F sigma_-`.
    pub fn with_feedback_matrix(
        gamma: f64,
        hamiltonian: &Matrix2<Complex64>,
        feedback: &Matrix2<Complex64>,
    ) -> Self {
        let id = Matrix2::<Complex64>::identity();
        let i = Complex64::i();
        let jump = feedback * sigma_minus();
        let decay = jump.adjoint() * jump;
        let coherent =
            id.kronecker(hamiltonian) * (-i) + hamiltonian.transpose().kronecker(&id) * i;
        let recycle = jump.conjugate().kronecker(&jump);
        let anti = id.kronecker(&decay) + decay.transpose().kronecker(&id);
        Self(coherent + (recycle - anti * c(0.5)) * c(gamma))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn apply(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        unvectorize(&(self.0 * vectorize(rho)))
    }

    /// Row of the generator giving `d tr(rho)/dt`.
    pub fn trace_row_norm(&self) -> f64 {
        (self.0.row(0) + self.0.row(3))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Bloch components `tr(sigma_k L(rho))` of the generated derivative.
    pub fn bloch_rate(&self, rho: &DensityMatrix) -> Vector3<f64> {
        let drho = self.apply(rho.matrix());
        let [sx, sy, sz] = pauli();
        Vector3::new(
            (sx * drho).trace().re,
            (sy * drho).trace().re,
            (sz * drho).trace().re,
        )
    }
}

/// Superoperator for field value `b` and feedback `ctrl`.
pub fn build_superoperator(
    gamma: f64,
    b: &Vector3<f64>,
    mu: f64,
    ctrl: &FeedbackControl,
) -> Superoperator {
    Superoperator::with_feedback_matrix(gamma, &hamiltonian(b, mu), &feedback_unitary(ctrl))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensitySample {
    pub t: f64,
    pub rho: DensityMatrix,
}

fn min_eigenvalue(m: &Matrix2<Complex64>) -> f64 {
    DensityMatrix::from_matrix(*m).eigenvalues().0
}

/// RK4 on the vectorised density matrix with `H0(t)` rebuilt at every stage.
///
/// Uses `feedback` as `F` directly, so arbitrary feedback matrices can be
/// cross-checked.
pub fn integrate_superoperator_with(
    rho0: &DensityMatrix,
    drive: &DriveField,
    params: &SimParams,
    feedback: &Matrix2<Complex64>,
) -> Result<Vec<DensitySample>, OracleError> {
    let generator = |t: f64| {
        Superoperator::with_feedback_matrix(
            params.gamma,
            &hamiltonian(&drive.field_at(t), drive.mu),
            feedback,
        )
    };
    let dt = params.dt;
    let steps = params.steps();
    let mut v = vectorize(rho0.matrix());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(DensitySample { t: 0.0, rho: *rho0 });
    for k in 0..steps {
        let t = k as f64 * dt;
        let l0 = generator(t).0;
        let l1 = generator(t + 0.5 * dt).0;
        let l2 = generator(t + dt).0;
        let k1 = l0 * v;
        let k2 = l1 * (v + k1 * c(0.5 * dt));
        let k3 = l1 * (v + k2 * c(0.5 * dt));
        let k4 = l2 * (v + k3 * c(dt));
        v += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
        let rho = unvectorize(&v);
        let t_next = (k + 1) as f64 * dt;
        let lowest = min_eigenvalue(&rho);
        if lowest.is_nan() || lowest < POSITIVITY_ABORT {
            return Err(OracleError::PositivityViolation {
                t: t_next,
                min_eigenvalue: lowest,
            });
        }
        out.push(DensitySample {
            t: t_next,
            rho: DensityMatrix::from_matrix(rho),
        });
    }
    Ok(out)
}

pub fn integrate_superoperator(
    rho0: &DensityMatrix,
    drive: &DriveField,
    params: &SimParams,
    ctrl: &FeedbackControl,
) -> Result<Vec<DensitySample>, OracleError> {
    integrate_superoperator_with(rho0, drive, params, &feedback_unitary(ctrl))
}

/// Geometric phase of the pure state `cos(theta/2)|e> + sin(theta/2)|g>`
/// evolved by `i dpsi/dt = H0(t) psi` over `round(tau/dt)` steps:
/// `arg <psi(0)|psi(tau)> + int <psi|H0|psi> dt`, reduced to `(-pi, pi]`.
///
/// The energy integral uses the trapezoidal rule on the same samples.
pub fn pure_phase_oracle(theta: f64, drive: &DriveField, tau: f64, dt: f64) -> f64 {
    let steps = (tau / dt).round() as usize;
    let i = Complex64::i();
    let h = |t: f64| hamiltonian(&drive.field_at(t), drive.mu);
    // normalised, so RK4's slow norm loss does not leak into the energy integral
    let energy = |t: f64, psi: &Vector2<Complex64>| psi.dotc(&(h(t) * psi)).re / psi.norm_squared();
    let psi0 = Vector2::new(c((0.5 * theta).cos()), c((0.5 * theta).sin()));
    let mut psi = psi0;
    let mut dynamical = 0.0;
    let mut e_prev = energy(0.0, &psi);
    for k in 0..steps {
        let t = k as f64 * dt;
        let h0 = h(t) * (-i);
        let h1 = h(t + 0.5 * dt) * (-i);
        let h2 = h(t + dt) * (-i);
        let k1 = h0 * psi;
        let k2 = h1 * (psi + k1 * c(0.5 * dt));
        let k3 = h1 * (psi + k2 * c(0.5 * dt));
        let k4 = h2 * (psi + k3 * c(dt));
        psi += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
        let e_next = energy((k + 1) as f64 * dt, &psi);
        dynamical += 0.5 * dt * (e_prev + e_next);
        e_prev = e_next;
    }
    wrap_angle(psi0.dotc(&psi).arg() + dynamical)
}
