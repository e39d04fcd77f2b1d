#![allow(dead_code)] // each test target uses a subset of the fixtures

//! Shared benchmark fixtures for the integration suites.
//!
//! The viscous Burgers benchmark: periodic grid, n = 512, L = 2pi,
//! nu = 0.01, u0 = 1 + 0.5 sin x, dt = 1e-3. The decaying-front window
//! T = 30 sampled by 201 snapshots drives the closure comparisons; the
//! short T = 5 window matches the mass-conservation reference run.

use std::sync::OnceLock;

use romclose::*;

pub const BENCH_N: usize = 512;
pub const BENCH_NU: f64 = 0.01;
pub const BENCH_DT: f64 = 1e-3;
pub const BENCH_RANK: usize = 20;
pub const BENCH_R: usize = 4;

pub fn bench_grid() -> Grid1D {
    Grid1D::new(BENCH_N, 2.0 * std::f64::consts::PI, Boundary::Periodic).unwrap()
}

fn solve(n_steps: usize, stride: usize, viscosity: f64) -> SnapshotSet {
    let config = FomConfig {
        viscosity,
        dt: BENCH_DT,
        n_steps,
        snapshot_stride: stride,
        initial_condition: InitialCondition::SinBump,
        advection: true,
    };
    solve_burgers(&config, &bench_grid()).unwrap()
}

pub struct Bench {
    pub snapshots: SnapshotSet,
    pub basis: PodBasis,
    pub n_steps: usize,
}

fn build(n_steps: usize, stride: usize, viscosity: f64) -> Bench {
    let snapshots = solve(n_steps, stride, viscosity);
    let basis = compute_pod(&snapshots, BENCH_RANK, true).unwrap();
    Bench {
        snapshots,
        basis,
        n_steps,
    }
}

/// Long decaying-front window: T = 30, M = 201.
pub fn bench_long() -> &'static Bench {
    static CELL: OnceLock<Bench> = OnceLock::new();
    CELL.get_or_init(|| build(30_000, 150, BENCH_NU))
}

/// Short window matching the mass-conservation run: T = 5, M = 201.
pub fn bench_short() -> &'static Bench {
    static CELL: OnceLock<Bench> = OnceLock::new();
    CELL.get_or_init(|| build(5_000, 25, BENCH_NU))
}

/// Resolved-regime instance: same grid and initial condition, nu = 0.05,
/// T = 10. Twenty modes fully capture this flow.
pub fn bench_resolved() -> &'static Bench {
    static CELL: OnceLock<Bench> = OnceLock::new();
    CELL.get_or_init(|| build(10_000, 50, 0.05))
}

/// Time-averaged Euclidean distance between a trajectory and projected
/// coefficients at the snapshot times.
pub fn time_averaged_coeff_error(traj: &RomTrajectory, series: &CoefficientSeries) -> f64 {
    let r = traj.rank();
    assert_eq!(series.rank(), r);
    let mut acc = 0.0;
    for (j, &t) in series.times().iter().enumerate() {
        let a = traj.sample(t).unwrap();
        let mut d2 = 0.0;
        for i in 0..r {
            let d = a[i] - series.coeffs()[(j, i)];
            d2 += d * d;
        }
        acc += d2.sqrt();
    }
    acc / series.times().len() as f64
}
