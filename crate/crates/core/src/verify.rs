//! Randomised cross-checks of the Bloch pipeline against the oracles.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gphase::{angle_distance, evolve_phase};
use crate::integrator::integrate;
use crate::model::{
    drift_system, initial_state, to_density, BlochState, DriftSystem, DriveField, FeedbackControl,
    SimParams,
};
use crate::oracle::{build_superoperator, integrate_superoperator, pure_phase_oracle};

pub const DRIFT_TOL: f64 = 1e-10;
pub const TRAJECTORY_TOL: f64 = 1e-7;
pub const POSITIVITY_TOL: f64 = -1e-8;
pub const PURE_PHASE_TOL: f64 = 1e-6;
pub const TRACE_TOL: f64 = 1e-14;
pub const HERMITICITY_TOL: f64 = 1e-13;
/// Step for the pure-phase comparison. The connection integral is
/// trapezoidal in `phi`, so its error is `O(dt^2)`: about 2e-6 rad at
/// `dt = 0.01`, roughly 1e-7 at this step.
pub const PURE_PHASE_DT: f64 = 0.0025;

/// Signature of [`drift_system`], so alternative constructions can be checked.
pub type DriftFn<'a> = &'a dyn Fn(f64, &Vector3<f64>, f64, &FeedbackControl) -> DriftSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
    pub samples: usize,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, bound: f64, samples: usize) -> Self {
        Self {
            name,
            measured,
            bound,
            passed: measured <= bound,
            samples,
        }
    }

    fn at_least(name: &'static str, measured: f64, bound: f64, samples: usize) -> Self {
        Self {
            name,
            measured,
            bound,
            passed: measured >= bound,
            samples,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} measured {:.3e} bound {:.1e} ({} samples)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound,
            self.samples
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub drift_draws: usize,
    pub trajectory_draws: usize,
    pub pure_phase_draws: usize,
    pub pure_phase_dt: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 20_081_010,
            drift_draws: 100,
            trajectory_draws: 20,
            pure_phase_draws: 10,
            pure_phase_dt: PURE_PHASE_DT,
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let rho = (1.0 - z * z).sqrt();
    Vector3::new(rho * phi.cos(), rho * phi.sin(), z)
}

pub fn random_ball_point<R: Rng>(rng: &mut R) -> BlochState {
    let r: f64 = rng.gen_range(0.0f64..1.0).cbrt();
    BlochState::from_vector(r * random_unit(rng))
}

/// Feedback with `A` in `[0, 2 pi]`; half the draws use the in-plane
/// `(A, beta)` form, half a general direction with `n_z != 0`.
pub fn random_control<R: Rng>(rng: &mut R) -> FeedbackControl {
    let a = rng.gen_range(0.0..TAU);
    if rng.gen_bool(0.5) {
        FeedbackControl::from_angles(a, rng.gen_range(0.0..TAU)).unwrap()
    } else {
        FeedbackControl::new(a, random_unit(rng)).unwrap()
    }
}

/// Largest deviation of `drift(...) p + c` from the superoperator's Bloch rate.
pub fn check_drift<R: Rng>(rng: &mut R, draws: usize, drift: DriftFn) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let gamma = rng.gen_range(0.0..3.0);
        let b = rng.gen_range(0.0..2.0) * random_unit(rng);
        let mu = rng.gen_range(0.5..1.5);
        let ctrl = random_control(rng);
        let p = random_ball_point(rng);
        let bloch = drift(gamma, &b, mu, &ctrl).rate(p.vector());
        let reference = build_superoperator(gamma, &b, mu, &ctrl).bloch_rate(&to_density(&p));
        worst = worst.max((bloch - reference).amax());
    }
    Check::at_most("drift vs superoperator", worst, DRIFT_TOL, draws)
}

/// Trace and Hermiticity preservation of the superoperator.
pub fn check_superoperator<R: Rng>(rng: &mut R, draws: usize) -> [Check; 2] {
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    for _ in 0..draws {
        let gamma = rng.gen_range(0.0..3.0);
        let b = rng.gen_range(0.0..2.0) * random_unit(rng);
        let sup = build_superoperator(gamma, &b, 1.0, &random_control(rng));
        trace = trace.max(sup.trace_row_norm());
        // random Hermitian, not necessarily positive
        let rho = *to_density(&BlochState::from_vector(2.0 * random_unit(rng))).matrix();
        let out = sup.apply(&rho);
        herm = herm.max((out.adjoint() - sup.apply(&rho.adjoint())).camax());
    }
    [
        Check::at_most("superoperator trace row", trace, TRACE_TOL, draws),
        Check::at_most("superoperator hermiticity", herm, HERMITICITY_TOL, draws),
    ]
}

#[derive(Clone, Copy, Debug)]
pub struct TrajectoryCase {
    pub p0: BlochState,
    pub drive: DriveField,
    pub params: SimParams,
    pub ctrl: FeedbackControl,
}

pub fn random_trajectory_case<R: Rng>(rng: &mut R, duration: f64, dt: f64) -> TrajectoryCase {
    let drive = DriveField {
        b0: rng.gen_range(0.2..1.5),
        mu: 1.0,
        theta_field: rng.gen_range(0.0..PI),
        omega: rng.gen_range(0.005..1.0),
    };
    let params = SimParams::new(rng.gen_range(0.0..3.0), 0.0, duration, dt).unwrap();
    let p0 = if rng.gen_bool(0.5) {
        initial_state(rng.gen_range(0.0..PI))
    } else {
        random_ball_point(rng)
    };
    TrajectoryCase {
        p0,
        drive,
        params,
        ctrl: random_control(rng),
    }
}

/// Bloch path vs density-matrix oracle to `t = 10`, plus positivity of the oracle states.
pub fn check_trajectories<R: Rng>(rng: &mut R, draws: usize) -> [Check; 2] {
    let mut worst: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for _ in 0..draws {
        let case = random_trajectory_case(rng, 10.0, 0.01);
        let bloch = integrate(&case.p0, &case.drive, &case.params, &case.ctrl);
        let dense =
            integrate_superoperator(&to_density(&case.p0), &case.drive, &case.params, &case.ctrl);
        let (bloch, dense) = match (bloch, dense) {
            (Ok(b), Ok(d)) => (b, d),
            _ => {
                worst = f64::INFINITY;
                continue;
            }
        };
        for (s, d) in bloch.samples().iter().zip(&dense) {
            worst = worst.max((s.state.vector() - d.rho.to_bloch().vector()).amax());
            min_eig = min_eig.min(d.rho.eigenvalues().0);
        }
    }
    [
        Check::at_most("bloch vs density-matrix path", worst, TRAJECTORY_TOL, draws),
        Check::at_least("oracle min eigenvalue", min_eig, POSITIVITY_TOL, draws),
    ]
}

/// `(theta, omega)` with `theta = Theta`, for the `gamma = 0` comparison.
pub fn random_pure_case<R: Rng>(rng: &mut R) -> (f64, f64) {
    (rng.gen_range(0.0..PI), rng.gen_range(0.005..0.05))
}

/// Difference between the mixed-state pipeline and the Schrodinger oracle at
/// `gamma = 0` with `theta = Theta`.
pub fn pure_phase_deviation(theta: f64, omega: f64, dt: f64) -> Option<f64> {
    let drive = DriveField::new(theta, omega);
    let params = SimParams::cycle(0.0, theta, &drive, dt).ok()?;
    let pipeline = evolve_phase(&drive, &params, &FeedbackControl::none())
        .ok()?
        .gamma_g?;
    let reference = pure_phase_oracle(theta, &drive, params.duration, dt);
    Some(angle_distance(pipeline, reference))
}

pub fn check_pure_phase<R: Rng>(rng: &mut R, draws: usize, dt: f64) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (theta, omega) = random_pure_case(rng);
        worst = worst.max(pure_phase_deviation(theta, omega, dt).unwrap_or(f64::INFINITY));
    }
    Check::at_most("pipeline vs pure-state phase", worst, PURE_PHASE_TOL, draws)
}

pub fn run_verification(opts: &VerifyOptions) -> VerifyReport {
    run_verification_with(opts, &drift_system)
}

/// Runs the suite with a substitute drift construction in the first check.
pub fn run_verification_with(opts: &VerifyOptions, drift: DriftFn) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = vec![check_drift(&mut rng, opts.drift_draws, drift)];
    checks.extend(check_superoperator(&mut rng, opts.drift_draws));
    checks.extend(check_trajectories(&mut rng, opts.trajectory_draws));
    checks.push(check_pure_phase(
        &mut rng,
        opts.pure_phase_draws,
        opts.pure_phase_dt,
    ));
    VerifyReport {
        seed: opts.seed,
        checks,
    }
}
