//! Symmetry, flatness and refinement properties of full-cycle sweeps on
//! 17x17 grids.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use feedback_phase::gphase::{angle_distance, evolve_phase, geometric_phase};
use feedback_phase::integrator::{integrate, Sample, Trajectory};
use feedback_phase::model::{initial_state, DriveField, FeedbackControl, SimParams};
use feedback_phase::oracle::{integrate_superoperator_with, pauli};
use feedback_phase::sweep::{
    circular_spread, fig1_spec, fig2_spec, run_sweep, CellStatus, Spacing, SweepGrid,
};
use num_complex::Complex64;

const N: usize = 17;

fn fig1(gamma: f64) -> &'static SweepGrid {
    static WEAK: OnceLock<SweepGrid> = OnceLock::new();
    static MID: OnceLock<SweepGrid> = OnceLock::new();
    let cell = if gamma == 0.001 { &WEAK } else { &MID };
    cell.get_or_init(|| run_sweep(&fig1_spec(gamma, N)).unwrap())
}

#[test]
fn weak_damping_is_flat_near_pi() {
    let grid = fig1(0.001);
    assert_eq!(grid.flagged(), 0);
    for g in grid.phases() {
        assert!((g.abs() - PI).abs() <= 0.05 * PI, "{g}");
    }
    let range = circular_spread(grid.phases());
    assert!(range <= 0.05 * PI, "range {range}");
}

#[test]
fn range_grows_with_gamma() {
    let weak = circular_spread(fig1(0.001).phases());
    let mid = circular_spread(fig1(0.05).phases());
    assert!(mid > weak, "{mid} vs {weak}");
}

#[test]
fn a_zero_row_matches_a_pi_row() {
    for gamma in [0.001, 0.05] {
        let grid = fig1(gamma);
        for (x, y) in grid.row(0).iter().zip(grid.row(N - 1)) {
            match (x.gamma_g, y.gamma_g) {
                (Some(a), Some(b)) => assert!(angle_distance(a, b) <= 1e-9, "{a} vs {b}"),
                _ => panic!("{x:?} {y:?}"),
            }
        }
    }
}

#[test]
fn dephasing_row_is_flagged_not_fatal() {
    // A = pi/2 at gamma = 0.05: pure dephasing shrinks the Bloch vector
    // towards the centre, where the azimuth becomes unresolvable.
    let grid = fig1(0.05);
    for c in grid.row(N / 2) {
        assert!(!c.is_ok());
        assert!(matches!(
            c.status,
            CellStatus::UnwrapAmbiguity { .. } | CellStatus::Degenerate { .. }
        ));
    }
    assert_eq!(grid.flagged(), N);
}

#[test]
fn quarter_and_three_quarter_amplitudes_are_beta_shifted() {
    let a = run_sweep(&fig2_spec(PI / 4.0, N, Spacing::Log)).unwrap();
    let b = run_sweep(&fig2_spec(3.0 * PI / 4.0, N, Spacing::Log)).unwrap();
    let half = (N - 1) / 2;
    let mut compared = 0;
    for i in 0..N {
        for j in 0..N {
            let shifted = b.get(i, (j + half) % (N - 1));
            match (a.get(i, j).gamma_g, shifted.gamma_g) {
                (Some(x), Some(y)) => {
                    assert!(angle_distance(x, y) <= 1e-9, "({i},{j}) {x} vs {y}");
                    compared += 1;
                }
                (None, None) => {}
                (x, y) => panic!("({i},{j}) {x:?} vs {y:?}"),
            }
        }
    }
    assert!(compared > N * N / 2);
}

#[test]
fn half_amplitude_cell_matches_explicit_feedback_matrix() {
    let spec = fig2_spec(PI / 2.0, N, Spacing::Log);
    let (gamma, beta) = (0.001, 3.0 * TAU / 16.0);
    let drive = spec.fixed.drive();
    let params = spec.fixed.sim_params(gamma).unwrap();
    let ctrl = FeedbackControl::from_angles(PI / 2.0, beta).unwrap();

    // F = i (sin(beta) sx + cos(beta) sy)
    let [sx, sy, _] = pauli();
    let f = (sx * Complex64::from(beta.sin()) + sy * Complex64::from(beta.cos())) * Complex64::i();
    let p0 = initial_state(spec.fixed.theta);
    let dense = integrate_superoperator_with(&p0.to_density(), &drive, &params, &f).unwrap();
    let bloch = integrate(&p0, &drive, &params, &ctrl).unwrap();
    let mut worst: f64 = 0.0;
    for (s, d) in bloch.samples().iter().zip(&dense) {
        worst = worst.max((s.state.vector() - d.rho.to_bloch().vector()).amax());
    }
    assert!(worst <= 1e-7, "{worst}");

    let oracle_path = Trajectory::new(
        params.dt,
        dense
            .iter()
            .map(|d| Sample {
                t: d.t,
                state: d.rho.to_bloch(),
            })
            .collect(),
    );
    let x = geometric_phase(&oracle_path).unwrap().gamma_g.unwrap();
    let y = geometric_phase(&bloch).unwrap().gamma_g.unwrap();
    assert!(angle_distance(x, y) <= 1e-7, "{x} vs {y}");
    let grid = run_sweep(&spec).unwrap();
    assert_eq!(grid.get(0, 3).gamma_g, Some(y));
}

#[test]
fn halving_the_step_moves_the_phase_by_less_than_1e_4() {
    let cases = [
        (0.001, PI / 2.0, 0.0, 0.0),
        (0.001, PI / 3.0, PI / 4.0, 0.0),
        (0.05, PI / 2.0, PI / 4.0, 0.0),
        (0.05, PI / 2.0, 0.3 * PI, 1.2),
        (0.5, PI / 2.0, PI, 2.0),
        (3.0, PI / 2.0, 0.8 * PI, 4.0),
    ];
    for (gamma, theta, a, beta) in cases {
        let drive = DriveField::new(theta, 0.005);
        let ctrl = FeedbackControl::from_angles(a, beta).unwrap();
        let phase = |dt: f64| {
            let params = SimParams::cycle(gamma, theta, &drive, dt).unwrap();
            evolve_phase(&drive, &params, &ctrl)
                .unwrap()
                .gamma_g
                .unwrap()
        };
        let d = angle_distance(phase(0.01), phase(0.005));
        assert!(d <= 1e-4, "gamma={gamma} a={a} beta={beta}: {d}");
    }
}

#[test]
fn cycle_stays_inside_the_ball() {
    for (gamma, a, beta) in [
        (0.0, 0.0, 0.0),
        (0.001, 0.7, 1.0),
        (0.05, 2.0, 5.0),
        (3.0, 0.4, 2.0),
    ] {
        let drive = DriveField::new(PI / 2.0, 0.005);
        let params = SimParams::cycle(gamma, PI / 2.0, &drive, 0.01).unwrap();
        let ctrl = FeedbackControl::from_angles(a, beta).unwrap();
        let traj = integrate(&initial_state(PI / 2.0), &drive, &params, &ctrl).unwrap();
        assert!(traj.max_norm() <= 1.0 + 1e-9, "{}", traj.max_norm());
    }
}

#[test]
fn strong_damping_preset_has_no_nan() {
    let grid = run_sweep(&fig1_spec(3.0, N)).unwrap();
    assert_eq!(grid.rows() * grid.cols(), N * N);
    for c in &grid.cells {
        if let Some(g) = c.gamma_g {
            assert!(g.is_finite() && g > -PI && g <= PI);
        }
    }
}
