//! Full-order trajectory generation.
//!
//! Two sources of reference data: a 1D viscous Burgers finite-difference
//! solver (`solve_burgers`) and a 3-mode quadratic system (`solve_toy`).
//! Both share the quadratic structure that the downstream Galerkin machinery
//! assumes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RomError};
use crate::galerkin::{integrate_rom, RomLabel, RomOperators, RomTrajectory};
use crate::grid::{Boundary, Grid1D};
use crate::tensor::Tensor3;

/// Initial condition for the Burgers solver.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `1 + 0.5 sin(2 pi x / L)`.
    SinBump,
    /// 1 on the left half of the domain, 0 on the right.
    StepProfile,
    /// Caller-supplied nodal values (length must match the grid).
    Custom(Vec<f64>),
}

impl InitialCondition {
    fn sample(&self, grid: &Grid1D) -> Result<DVector<f64>> {
        let n = grid.n_points();
        let length = grid.domain_length();
        let field = match self {
            InitialCondition::SinBump => DVector::from_iterator(
                n,
                grid.points()
                    .iter()
                    .map(|&x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x / length).sin()),
            ),
            InitialCondition::StepProfile => DVector::from_iterator(
                n,
                grid.points()
                    .iter()
                    .map(|&x| if x < 0.5 * length { 1.0 } else { 0.0 }),
            ),
            InitialCondition::Custom(values) => {
                if values.len() != n {
                    return Err(RomError::DimensionMismatch(format!(
                        "custom initial condition has {} samples, grid has {n} points",
                        values.len()
                    )));
                }
                DVector::from_vec(values.clone())
            }
        };
        Ok(field)
    }
}

/// Parameters of a Burgers full-order run.
#[derive(Debug, Clone, PartialEq)]
pub struct FomConfig {
    /// Kinematic viscosity, must be positive.
    pub viscosity: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Keep every `snapshot_stride`-th state (plus the initial one).
    pub snapshot_stride: usize,
    pub initial_condition: InitialCondition,
    /// Disabling the nonlinear term turns the solver into a heat equation,
    /// which has a closed-form solution used by the tests.
    pub advection: bool,
}

impl FomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.viscosity <= 0.0 || !self.viscosity.is_finite() {
            return Err(RomError::InvalidParameter(format!(
                "viscosity must be positive and finite, got {}",
                self.viscosity
            )));
        }
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(RomError::InvalidParameter(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(RomError::InvalidParameter(
                "snapshot_stride must be at least 1".into(),
            ));
        }
        // M = floor(n_steps / stride) + 1 must be at least 2.
        if self.n_steps < self.snapshot_stride {
            return Err(RomError::InvalidParameter(format!(
                "n_steps = {} with snapshot_stride = {} yields fewer than 2 snapshots",
                self.n_steps, self.snapshot_stride
            )));
        }
        Ok(())
    }

    /// Number of snapshots the run will produce.
    pub fn snapshot_count(&self) -> usize {
        self.n_steps / self.snapshot_stride + 1
    }
}

/// Full-order field values on a grid at strictly increasing times.
/// `fields` is `n_points x M`, one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    grid: Grid1D,
    times: Vec<f64>,
    fields: DMatrix<f64>,
}

impl SnapshotSet {
    pub fn new(grid: Grid1D, times: Vec<f64>, fields: DMatrix<f64>) -> Result<Self> {
        if fields.nrows() != grid.n_points() {
            return Err(RomError::DimensionMismatch(format!(
                "field matrix has {} rows, grid has {} points",
                fields.nrows(),
                grid.n_points()
            )));
        }
        if fields.ncols() != times.len() {
            return Err(RomError::DimensionMismatch(format!(
                "field matrix has {} columns, {} time stamps given",
                fields.ncols(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan() || w[0].is_nan()) {
            return Err(RomError::InvalidParameter(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            grid,
            times,
            fields,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn fields(&self) -> &DMatrix<f64> {
        &self.fields
    }

    pub fn snapshot(&self, j: usize) -> DVector<f64> {
        self.fields.column(j).into_owned()
    }
}

/// Generic 3-mode quadratic system `da/dt = A3 a + a^T B3 a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySystem {
    a_matrix: DMatrix<f64>,
    b_tensor: Tensor3,
    initial: DVector<f64>,
}

pub const TOY_DIM: usize = 3;

impl ToySystem {
    pub fn new(a_matrix: DMatrix<f64>, b_tensor: Tensor3, initial: DVector<f64>) -> Result<Self> {
        if a_matrix.nrows() != TOY_DIM
            || a_matrix.ncols() != TOY_DIM
            || b_tensor.dim() != TOY_DIM
            || initial.len() != TOY_DIM
        {
            return Err(RomError::DimensionMismatch(
                "toy system is 3-dimensional".into(),
            ));
        }
        let finite = a_matrix.iter().all(|v| v.is_finite())
            && b_tensor.iter().all(|v| v.is_finite())
            && initial.iter().all(|v| v.is_finite());
        if !finite {
            return Err(RomError::InvalidParameter(
                "toy system entries must be finite".into(),
            ));
        }
        Ok(Self {
            a_matrix,
            b_tensor,
            initial,
        })
    }

    /// Shipped default: slow linear decay on modes 1-2, fast decay on mode 3,
    /// skew quadratic coupling routed through mode 3. Truncating mode 3
    /// visibly degrades the (a1, a2) dynamics.
    pub fn shipped_default() -> Self {
        let a_matrix = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.01, -0.02, -1.0]));
        let mut b_tensor = Tensor3::zeros(TOY_DIM);
        b_tensor.set(0, 1, 2, 1.0);
        b_tensor.set(1, 0, 2, -1.0);
        b_tensor.set(2, 0, 1, 0.3);
        let initial = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        Self {
            a_matrix,
            b_tensor,
            initial,
        }
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn b_tensor(&self) -> &Tensor3 {
        &self.b_tensor
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    /// The toy system expressed as ROM operators, so the shared quadratic
    /// right-hand side and integrator drive it.
    pub fn operators(&self) -> RomOperators {
        RomOperators::from_parts(self.a_matrix.clone(), self.b_tensor.clone(), None, None)
    }
}

impl Default for ToySystem {
    fn default() -> Self {
        Self::shipped_default()
    }
}

/// Burgers right-hand side `nu u_xx - (u^2/2)_x` with central differences.
/// The conservative advection form keeps the discrete mass exactly constant
/// on periodic grids. Dirichlet boundary nodes are pinned to zero.
fn burgers_rhs(grid: &Grid1D, viscosity: f64, advection: bool, u: &DVector<f64>) -> DVector<f64> {
    let mut rhs = grid.second_derivative(u);
    rhs *= viscosity;
    if advection {
        let half_sq = u.map(|v| 0.5 * v * v);
        let flux_grad = grid.derivative(&half_sq);
        rhs -= flux_grad;
    }
    if grid.boundary() == Boundary::HomogeneousDirichlet {
        rhs[0] = 0.0;
        rhs[grid.n_points() - 1] = 0.0;
    }
    rhs
}

/// Integrates viscous Burgers with RK4 and collects snapshots.
///
/// The stability precheck is `dt max|u0| / h <= 1` and `dt nu / h^2 <= 0.5`;
/// runs that pass it but still blow up are reported as `NonFiniteState`.
pub fn solve_burgers(config: &FomConfig, grid: &Grid1D) -> Result<SnapshotSet> {
    config.validate()?;
    let n = grid.n_points();
    let mut u = config.initial_condition.sample(grid)?;
    if grid.boundary() == Boundary::HomogeneousDirichlet {
        u[0] = 0.0;
        u[n - 1] = 0.0;
    }

    let h = grid.spacing();
    let u_max = u.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    let advective_cfl = config.dt * u_max / h;
    if advective_cfl > 1.0 {
        return Err(RomError::CflViolation(format!(
            "advective number dt*max|u0|/h = {advective_cfl:.3} exceeds 1"
        )));
    }
    let diffusive_cfl = config.dt * config.viscosity / (h * h);
    if diffusive_cfl > 0.5 {
        return Err(RomError::CflViolation(format!(
            "diffusive number dt*nu/h^2 = {diffusive_cfl:.3} exceeds 0.5"
        )));
    }

    let m = config.snapshot_count();
    let mut fields = DMatrix::zeros(n, m);
    let mut times = Vec::with_capacity(m);
    fields.column_mut(0).copy_from(&u);
    times.push(0.0);

    let dt = config.dt;
    let mut written = 1;
    for step in 0..config.n_steps {
        let k1 = burgers_rhs(grid, config.viscosity, config.advection, &u);
        let k2 = burgers_rhs(
            grid,
            config.viscosity,
            config.advection,
            &(&u + &k1 * (0.5 * dt)),
        );
        let k3 = burgers_rhs(
            grid,
            config.viscosity,
            config.advection,
            &(&u + &k2 * (0.5 * dt)),
        );
        let k4 = burgers_rhs(grid, config.viscosity, config.advection, &(&u + &k3 * dt));
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        if u.iter().any(|v| !v.is_finite()) {
            return Err(RomError::NonFiniteState {
                step: step + 1,
                time: (step + 1) as f64 * dt,
            });
        }
        if (step + 1) % config.snapshot_stride == 0 {
            fields.column_mut(written).copy_from(&u);
            times.push((step + 1) as f64 * dt);
            written += 1;
        }
    }
    debug_assert_eq!(written, m);
    SnapshotSet::new(grid.clone(), times, fields)
}

/// RK4 trajectory of the 3-mode toy system.
pub fn solve_toy(system: &ToySystem, dt: f64, n_steps: usize) -> Result<RomTrajectory> {
    let ops = system.operators();
    integrate_rom(
        |_t, a| ops.rhs(a),
        system.initial(),
        0.0,
        dt,
        n_steps,
        RomLabel::Toy,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_grid(n: usize) -> Grid1D {
        Grid1D::new(n, 2.0 * std::f64::consts::PI, Boundary::Periodic).unwrap()
    }

    fn base_config() -> FomConfig {
        FomConfig {
            viscosity: 1.0,
            dt: 1e-3,
            n_steps: 100,
            snapshot_stride: 10,
            initial_condition: InitialCondition::Custom(vec![0.0; 64]),
            advection: true,
        }
    }

    #[test]
    fn zero_initial_condition_stays_zero() {
        let grid = periodic_grid(64);
        let config = base_config();
        let snaps = solve_burgers(&config, &grid).unwrap();
        assert_eq!(snaps.n_snapshots(), 11);
        for v in snaps.fields().iter() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn heat_equation_matches_analytic_decay() {
        // Advection off, u0 = sin x, nu = 1: u(x, t) = exp(-t) sin x.
        let n = 128;
        let grid = periodic_grid(n);
        let x = grid.points();
        let dt = 1e-3;
        let n_steps = 500;
        let config = FomConfig {
            viscosity: 1.0,
            dt,
            n_steps,
            snapshot_stride: n_steps,
            initial_condition: InitialCondition::Custom(x.iter().map(|&xi| xi.sin()).collect()),
            advection: false,
        };
        let snaps = solve_burgers(&config, &grid).unwrap();
        let t = n_steps as f64 * dt;
        let last = snaps.snapshot(1);
        let h = grid.spacing();
        let bound = 10.0 * (h * h + dt.powi(4)) * t;
        let mut max_err = 0.0_f64;
        for k in 0..n {
            let exact = (-t).exp() * x[k].sin();
            max_err = max_err.max((last[k] - exact).abs());
        }
        assert!(
            max_err <= bound,
            "max-norm error {max_err:.3e} exceeds bound {bound:.3e}"
        );
    }

    #[test]
    fn benchmark_run_conserves_mass() {
        let grid = periodic_grid(512);
        let config = FomConfig {
            viscosity: 0.01,
            dt: 1e-3,
            n_steps: 5000,
            snapshot_stride: 25,
            initial_condition: InitialCondition::SinBump,
            advection: true,
        };
        let snaps = solve_burgers(&config, &grid).unwrap();
        assert_eq!(snaps.n_snapshots(), 201);
        let w = grid.quad_weights();
        let mass0: f64 = (0..512).map(|k| w[k] * snaps.fields()[(k, 0)]).sum();
        for j in 0..snaps.n_snapshots() {
            let mass: f64 = (0..512).map(|k| w[k] * snaps.fields()[(k, j)]).sum();
            assert!(
                (mass - mass0).abs() <= 1e-8 * mass0.abs(),
                "mass drifted from {mass0} to {mass} at snapshot {j}"
            );
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let grid = periodic_grid(128);
        let config = FomConfig {
            viscosity: 0.05,
            dt: 1e-3,
            n_steps: 400,
            snapshot_stride: 40,
            initial_condition: InitialCondition::SinBump,
            advection: true,
        };
        let a = solve_burgers(&config, &grid).unwrap();
        let b = solve_burgers(&config, &grid).unwrap();
        assert_eq!(a.times(), b.times());
        for (x, y) in a.fields().iter().zip(b.fields().iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn diffusion_only_energy_is_nonincreasing() {
        let grid = periodic_grid(96);
        let x = grid.points();
        let config = FomConfig {
            viscosity: 0.3,
            dt: 1e-3,
            n_steps: 300,
            snapshot_stride: 10,
            initial_condition: InitialCondition::Custom(
                x.iter().map(|&xi| xi.sin() + 0.5 * (3.0 * xi).cos()).collect(),
            ),
            advection: false,
        };
        let snaps = solve_burgers(&config, &grid).unwrap();
        let mut prev = f64::INFINITY;
        for j in 0..snaps.n_snapshots() {
            let col = snaps.snapshot(j);
            let energy = grid.weighted_inner(&col, &col);
            assert!(
                energy <= prev + 1e-12,
                "energy increased from {prev} to {energy} at snapshot {j}"
            );
            prev = energy;
        }
    }

    #[test]
    fn cfl_violations_are_rejected() {
        let grid = periodic_grid(64);
        let mut config = base_config();
        config.initial_condition = InitialCondition::SinBump;
        config.dt = 0.2; // dt*max|u0|/h = 0.2*1.5/0.098 > 1
        assert!(matches!(
            solve_burgers(&config, &grid),
            Err(RomError::CflViolation(_))
        ));
        let mut config = base_config();
        config.viscosity = 10.0; // dt*nu/h^2 = 1e-3*10/0.0096 > 0.5
        assert!(matches!(
            solve_burgers(&config, &grid),
            Err(RomError::CflViolation(_))
        ));
    }

    #[test]
    fn custom_ic_length_is_checked() {
        let grid = periodic_grid(64);
        let mut config = base_config();
        config.initial_condition = InitialCondition::Custom(vec![0.0; 32]);
        assert!(matches!(
            solve_burgers(&config, &grid),
            Err(RomError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn too_few_steps_for_two_snapshots_is_rejected() {
        let grid = periodic_grid(64);
        let mut config = base_config();
        config.n_steps = 5;
        config.snapshot_stride = 10;
        assert!(matches!(
            solve_burgers(&config, &grid),
            Err(RomError::InvalidParameter(_))
        ));
    }

    #[test]
    fn toy_zero_operators_give_constant_trajectory() {
        let system = ToySystem::new(
            DMatrix::zeros(3, 3),
            Tensor3::zeros(3),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        let traj = solve_toy(&system, 0.01, 50).unwrap();
        for j in 0..=50 {
            assert_eq!(traj.coeffs().row(j)[0], 1.0);
            assert_eq!(traj.coeffs().row(j)[1], 2.0);
            assert_eq!(traj.coeffs().row(j)[2], 3.0);
        }
    }

    #[test]
    fn toy_linear_decay_matches_exponential() {
        let system = ToySystem::new(
            -DMatrix::identity(3, 3),
            Tensor3::zeros(3),
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
        )
        .unwrap();
        let dt = 0.01;
        let n_steps = 200;
        let traj = solve_toy(&system, dt, n_steps).unwrap();
        let t_end = dt * n_steps as f64;
        let got = traj.coeffs().row(n_steps)[0];
        // Fourth-order accuracy leaves roughly dt^4 per unit time.
        assert!((got - (-t_end).exp()).abs() < 100.0 * dt.powi(4));
        assert_eq!(traj.coeffs().row(n_steps)[1], 0.0);
    }

    #[test]
    fn shipped_toy_stays_bounded_and_tracks_reference() {
        let system = ToySystem::shipped_default();
        let traj = solve_toy(&system, 1e-3, 20_000).unwrap();
        let mut max_norm = 0.0_f64;
        for j in 0..traj.coeffs().nrows() {
            let row = traj.coeffs().row(j);
            max_norm = max_norm.max((row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt());
        }
        assert!(max_norm <= 5.0, "trajectory norm reached {max_norm}");

        // Terminal state agrees with a much finer reference solve.
        let reference = solve_toy(&system, 1e-5, 2_000_000).unwrap();
        let last = traj.coeffs().row(traj.coeffs().nrows() - 1);
        let ref_last = reference.coeffs().row(reference.coeffs().nrows() - 1);
        for i in 0..3 {
            assert!(
                (last[i] - ref_last[i]).abs() < 1e-7,
                "component {i}: {} vs reference {}",
                last[i],
                ref_last[i]
            );
        }
    }

    #[test]
    fn toy_step_halving_shows_fourth_order_convergence() {
        let system = ToySystem::shipped_default();
        let t_end = 2.0;
        let reference = solve_toy(&system, 1e-6, 2_000_000).unwrap();
        let ref_last = reference
            .coeffs()
            .row(reference.coeffs().nrows() - 1)
            .into_owned();

        let err_of = |dt: f64, steps: usize| -> f64 {
            let traj = solve_toy(&system, dt, steps).unwrap();
            let last = traj.coeffs().row(traj.coeffs().nrows() - 1);
            (0..3)
                .map(|i| (last[i] - ref_last[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let coarse = err_of(t_end / 250.0, 250);
        let fine = err_of(t_end / 500.0, 500);
        let ratio = coarse / fine;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "expected fourth-order halving ratio, got {ratio}"
        );
    }

    #[test]
    fn toy_blowup_is_reported() {
        let mut b = Tensor3::zeros(3);
        b.set(0, 0, 0, 1.0); // da1/dt = a1^2 blows up in finite time
        let system = ToySystem::new(
            DMatrix::zeros(3, 3),
            b,
            DVector::from_vec(vec![2.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            solve_toy(&system, 0.05, 1000),
            Err(RomError::NonFiniteState { .. })
        ));
    }
}
