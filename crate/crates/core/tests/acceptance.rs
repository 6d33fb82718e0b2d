//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use feedback_phase::gphase::{angle_distance, evolve_phase};
use feedback_phase::integrator::integrate;
use feedback_phase::model::{
    drift_system, initial_state, BlochState, DriveField, FeedbackControl, SimParams,
};
use feedback_phase::sweep::{
    circular_spread, fig1_spec, fig2_spec, run_sweep, FixedParams, Spacing, SweepGrid,
};
use feedback_phase::verify::{
    check_drift, check_pure_phase, check_trajectories, DRIFT_TOL, PURE_PHASE_DT,
};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_081_010;
const GRID: usize = 17;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn berry_limit() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (theta, lo, hi) in [(PI / 2.0, 0.97, 1.03), (PI / 3.0, 0.47, 0.53)] {
        let drive = DriveField::new(theta, 0.005);
        let params = SimParams::cycle(0.001, theta, &drive, 0.01).unwrap();
        let r = evolve_phase(
            &drive,
            &params,
            &FeedbackControl::from_angles(PI / 4.0, 0.0).unwrap(),
        );
        let g = match r.ok().and_then(|r| r.gamma_g) {
            Some(g) => g.abs() / PI,
            None => f64::NAN,
        };
        passed &= (lo..=hi).contains(&g);
        parts.push(format!(
            "theta={:.4}: |gamma_g|/pi={g:.6} in [{lo}, {hi}]",
            theta / PI
        ));
    }
    Outcome::new(passed, parts.join("; "))
}

fn drift_oracle(rng: &mut ChaCha8Rng) -> Outcome {
    let c = check_drift(rng, 100, &drift_system);
    Outcome::new(
        c.passed,
        format!(
            "max |dp/dt diff| = {:.3e} <= {DRIFT_TOL:.0e} over {} draws",
            c.measured, c.samples
        ),
    )
}

fn trajectory_oracle(rng: &mut ChaCha8Rng) -> Outcome {
    let [path, eig] = check_trajectories(rng, 20);
    Outcome::new(
        path.passed && eig.passed,
        format!(
            "max component diff = {:.3e} <= {:.0e}; min eigenvalue = {:.3e} >= {:.0e}; {} draws",
            path.measured, path.bound, eig.measured, eig.bound, path.samples
        ),
    )
}

fn row_spread(grid: &SweepGrid) -> f64 {
    (0..grid.rows())
        .map(|i| {
            let row = grid.row(i);
            if row.iter().all(|c| c.gamma_g.is_some()) {
                circular_spread(row.iter().filter_map(|c| c.gamma_g))
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

fn beta_independence() -> Outcome {
    let grid = run_sweep(&fig2_spec(PI, GRID, Spacing::Log)).unwrap();
    let spread = row_spread(&grid);
    Outcome::new(
        spread <= 1e-6,
        format!("max per-gamma-row spread = {spread:.3e} rad <= 1e-6 on {GRID}x{GRID}, A=pi"),
    )
}

fn reflection_symmetry(grid: &SweepGrid) -> Outcome {
    let n = GRID - 1;
    let mut worst: f64 = 0.0;
    let mut unmatched = 0;
    for i in 0..=n {
        for j in 0..=n {
            let a = grid.get(i, j).gamma_g;
            let b = grid.get(n - i, (j + n / 2) % n).gamma_g;
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max(angle_distance(a, b)),
                (None, None) => {}
                _ => unmatched += 1,
            }
        }
    }
    let flagged = grid.flagged();
    Outcome::new(
        worst <= 1e-9 && unmatched == 0,
        format!(
            "max |gamma_g(A,beta) - gamma_g(pi-A,beta+pi)| = {worst:.3e} rad <= 1e-9; \
             {flagged} flagged cells, {unmatched} unmatched"
        ),
    )
}

fn a_periodicity(rng: &mut ChaCha8Rng) -> Outcome {
    let fixed = FixedParams::default();
    let drive = fixed.drive();
    let params = fixed.sim_params(fixed.gamma).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let a = rng.gen_range(0.0..PI);
        let beta = rng.gen_range(0.0..TAU);
        let phase = |a: f64| {
            evolve_phase(
                &drive,
                &params,
                &FeedbackControl::from_angles(a, beta).unwrap(),
            )
            .ok()
            .and_then(|r| r.gamma_g)
        };
        worst = match (phase(a), phase(a + PI)) {
            (Some(x), Some(y)) => worst.max(angle_distance(x, y)),
            _ => f64::INFINITY,
        };
    }
    Outcome::new(
        worst <= 1e-9,
        format!("max |gamma_g(A) - gamma_g(A+pi)| = {worst:.3e} rad <= 1e-9 over 10 cells"),
    )
}

fn range_growth(strong: &SweepGrid) -> Outcome {
    let weak = run_sweep(&fig1_spec(0.001, GRID)).unwrap();
    let spread = |g: &SweepGrid| circular_spread(g.phases());
    let (lo, hi) = (spread(&weak), spread(strong));
    Outcome::new(
        hi > lo,
        format!(
            "range at gamma=0.05 = {:.6} pi > range at gamma=0.001 = {:.6} pi",
            hi / PI,
            lo / PI
        ),
    )
}

fn closed_form_decay() -> Outcome {
    let drive = DriveField {
        b0: 0.0,
        ..DriveField::default()
    };
    let params = SimParams::new(1.0, 0.0, 5.0, 1e-3).unwrap();
    let ctrl = FeedbackControl::from_angles(0.0, 0.0).unwrap();
    let traj = integrate(&BlochState::new(0.0, 0.0, 1.0), &drive, &params, &ctrl).unwrap();
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let s = &traj.samples()[(t / 1e-3f64).round() as usize];
        worst = worst.max((s.state.z() - (2.0 * (-t).exp() - 1.0)).abs());
    }
    Outcome::new(
        worst <= 1e-8,
        format!("max |p_z - (2 e^-t - 1)| = {worst:.3e} <= 1e-8 at t in {{0.5, 1, 2, 5}}"),
    )
}

fn rk4_order() -> Outcome {
    let drive = DriveField {
        b0: 0.8,
        mu: 1.0,
        theta_field: 1.1,
        omega: 0.4,
    };
    let ctrl = FeedbackControl::new(0.9, Vector3::new(0.3, -0.5, 0.8)).unwrap();
    let p0 = initial_state(0.7);
    let end = |dt: f64| {
        let params = SimParams::new(0.6, 0.7, 5.0, dt).unwrap();
        *integrate(&p0, &drive, &params, &ctrl)
            .unwrap()
            .last()
            .unwrap()
            .state
            .vector()
    };
    let dt = 0.05;
    let reference = end(dt / 16.0);
    let e1 = (end(dt) - reference).norm();
    let e2 = (end(dt / 2.0) - reference).norm();
    let order = (e1 / e2).log2();
    Outcome::new(
        order >= 3.5,
        format!("order = {order:.3} >= 3.5 (errors {e1:.3e}, {e2:.3e})"),
    )
}

fn pure_phase(rng: &mut ChaCha8Rng) -> Outcome {
    // same draws at the coarser step, reported for reference only
    let coarse = check_pure_phase(&mut rng.clone(), 10, 0.01);
    let c = check_pure_phase(rng, 10, PURE_PHASE_DT);
    Outcome::new(
        c.passed,
        format!(
            "max |gamma_g - oracle| = {:.3e} rad <= {:.0e} over {} draws at dt={PURE_PHASE_DT} \
             ({:.3e} at dt=0.01)",
            c.measured, c.bound, c.samples, coarse.measured
        ),
    )
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut all = true;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = run();
        all &= o.passed;
        println!(
            "{} {n:>2} {name}: {} ({:.1}s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    let reflection_grid = run_sweep(&fig1_spec(0.05, GRID)).unwrap();
    report(1, "Berry-phase limit", &mut berry_limit);
    report(2, "drift vs superoperator", &mut || drift_oracle(&mut rng));
    report(3, "trajectory cross-validation", &mut || {
        trajectory_oracle(&mut rng)
    });
    report(4, "beta-independence at A=pi", &mut beta_independence);
    report(5, "reflection symmetry", &mut || {
        reflection_symmetry(&reflection_grid)
    });
    report(6, "A-periodicity", &mut || a_periodicity(&mut rng));
    report(7, "range growth with gamma", &mut || {
        range_growth(&reflection_grid)
    });
    report(8, "closed-form decay", &mut closed_form_decay);
    report(9, "RK4 order", &mut rk4_order);
    report(10, "pure-phase oracle agreement", &mut || {
        pure_phase(&mut rng)
    });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
