//! Galerkin ROM operator assembly and time integration.
//!
//! The reduced dynamics are `da/dt = A a + a^T B a`, where
//! `A_im = -nu (phi_m', phi_i')_W` and `B_imn = -(phi_m phi_n', phi_i)_W`.
//! Derivatives are the same central differences used everywhere else, so
//! assembled entries match direct quadrature of the defining integrals
//! exactly. Centering adds a constant forcing vector and a coupling matrix,
//! stored separately so the plain operator form stays the no-centering case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::pod::PodBasis;
use crate::tensor::Tensor3;

/// Galerkin operators at dimension `r`, plus optional mean-field terms.
#[derive(Debug, Clone, PartialEq)]
pub struct RomOperators {
    r: usize,
    viscosity: f64,
    a_matrix: DMatrix<f64>,
    b_tensor: Tensor3,
    mean_coupling: Option<DMatrix<f64>>,
    mean_forcing: Option<DVector<f64>>,
}

impl RomOperators {
    /// Assembles operators from explicit blocks. Used by the toy system and
    /// the artifact loader; `assemble_operators` is the POD-driven path.
    pub fn from_parts(
        a_matrix: DMatrix<f64>,
        b_tensor: Tensor3,
        mean_coupling: Option<DMatrix<f64>>,
        mean_forcing: Option<DVector<f64>>,
    ) -> Self {
        let r = a_matrix.nrows();
        assert_eq!(a_matrix.ncols(), r);
        assert_eq!(b_tensor.dim(), r);
        if let Some(c) = &mean_coupling {
            assert_eq!(c.nrows(), r);
            assert_eq!(c.ncols(), r);
        }
        if let Some(f) = &mean_forcing {
            assert_eq!(f.len(), r);
        }
        Self {
            r,
            viscosity: f64::NAN,
            a_matrix,
            b_tensor,
            mean_coupling,
            mean_forcing,
        }
    }

    pub fn with_viscosity(mut self, viscosity: f64) -> Self {
        self.viscosity = viscosity;
        self
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Viscosity used at assembly; NaN for operators not built from a PDE.
    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn b_tensor(&self) -> &Tensor3 {
        &self.b_tensor
    }

    pub fn mean_coupling(&self) -> Option<&DMatrix<f64>> {
        self.mean_coupling.as_ref()
    }

    pub fn mean_forcing(&self) -> Option<&DVector<f64>> {
        self.mean_forcing.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.mean_forcing.is_some()
    }

    /// Leading `r`-dimensional sub-operators, entries copied verbatim.
    pub fn leading(&self, r: usize) -> Result<RomOperators> {
        if r > self.r {
            return Err(RomError::RankTooLarge {
                requested: r,
                available: self.r,
            });
        }
        Ok(RomOperators {
            r,
            viscosity: self.viscosity,
            a_matrix: self.a_matrix.view((0, 0), (r, r)).into_owned(),
            b_tensor: self.b_tensor.leading_block(r),
            mean_coupling: self
                .mean_coupling
                .as_ref()
                .map(|c| c.view((0, 0), (r, r)).into_owned()),
            mean_forcing: self.mean_forcing.as_ref().map(|f| f.rows(0, r).into_owned()),
        })
    }

    /// Galerkin right-hand side `c + (A + A_mean) a + a^T B a`.
    pub fn rhs(&self, a: &DVector<f64>) -> Result<DVector<f64>> {
        if a.len() != self.r {
            return Err(RomError::DimensionMismatch(format!(
                "coefficient vector has length {}, operators have dimension {}",
                a.len(),
                self.r
            )));
        }
        let mut out = match &self.mean_forcing {
            Some(c) => c.clone(),
            None => DVector::zeros(self.r),
        };
        out += &self.a_matrix * a;
        if let Some(coupling) = &self.mean_coupling {
            out += coupling * a;
        }
        out += self.b_tensor.contract(a);
        Ok(out)
    }
}

/// Assembles the Galerkin operators for the first `r` modes of a basis.
#[allow(clippy::needless_range_loop)]
pub fn assemble_operators(basis: &PodBasis, r: usize, viscosity: f64) -> Result<RomOperators> {
    if r == 0 || r > basis.rank() {
        return Err(RomError::RankTooLarge {
            requested: r,
            available: basis.rank(),
        });
    }
    if viscosity <= 0.0 || !viscosity.is_finite() {
        return Err(RomError::InvalidParameter(format!(
            "viscosity must be positive and finite, got {viscosity}"
        )));
    }
    let grid = basis.grid();
    let n = grid.n_points();
    let w = grid.quad_weights();

    let modes: Vec<DVector<f64>> = (0..r).map(|i| basis.mode(i)).collect();
    let d_modes: Vec<DVector<f64>> = modes.iter().map(|phi| grid.derivative(phi)).collect();

    let mut a_matrix = DMatrix::zeros(r, r);
    for i in 0..r {
        for m in 0..r {
            let mut acc = 0.0;
            for k in 0..n {
                acc += w[k] * d_modes[m][k] * d_modes[i][k];
            }
            a_matrix[(i, m)] = -viscosity * acc;
        }
    }

    let mut b_tensor = Tensor3::zeros(r);
    for i in 0..r {
        for m in 0..r {
            for nn in 0..r {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += w[k] * modes[m][k] * d_modes[nn][k] * modes[i][k];
                }
                b_tensor.set(i, m, nn, -acc);
            }
        }
    }

    let (mean_coupling, mean_forcing) = match basis.mean_field() {
        Some(mean) => {
            let d_mean = grid.derivative(mean);
            let mut coupling = DMatrix::zeros(r, r);
            for i in 0..r {
                for m in 0..r {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += w[k] * (mean[k] * d_modes[m][k] + modes[m][k] * d_mean[k]) * modes[i][k];
                    }
                    coupling[(i, m)] = -acc;
                }
            }
            let mut forcing = DVector::zeros(r);
            for i in 0..r {
                let mut diff = 0.0;
                let mut adv = 0.0;
                for k in 0..n {
                    diff += w[k] * d_mean[k] * d_modes[i][k];
                    adv += w[k] * mean[k] * d_mean[k] * modes[i][k];
                }
                forcing[i] = -viscosity * diff - adv;
            }
            (Some(coupling), Some(forcing))
        }
        None => (None, None),
    };

    Ok(RomOperators {
        r,
        viscosity,
        a_matrix,
        b_tensor,
        mean_coupling,
        mean_forcing,
    })
}

/// Which model produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RomLabel {
    Grom,
    Irom,
    D2vms,
    Toy,
}

impl RomLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RomLabel::Grom => "grom",
            RomLabel::Irom => "irom",
            RomLabel::D2vms => "d2vms",
            RomLabel::Toy => "toy",
        }
    }
}

impl std::fmt::Display for RomLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coefficient trajectory on a uniform time axis; row `j` holds `a(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RomTrajectory {
    times: Vec<f64>,
    coeffs: DMatrix<f64>,
    label: RomLabel,
}

impl RomTrajectory {
    pub fn from_parts(times: Vec<f64>, coeffs: DMatrix<f64>, label: RomLabel) -> Result<Self> {
        if times.len() != coeffs.nrows() {
            return Err(RomError::DimensionMismatch(format!(
                "{} time stamps for {} coefficient rows",
                times.len(),
                coeffs.nrows()
            )));
        }
        if times.len() < 2 {
            return Err(RomError::InvalidParameter(
                "trajectory needs at least two time points".into(),
            ));
        }
        let dt = times[1] - times[0];
        if dt <= 0.0 || dt.is_nan() {
            return Err(RomError::InvalidParameter(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        let tol = 1e-9 * dt.max(times[times.len() - 1].abs());
        if times.windows(2).any(|w| (w[1] - w[0] - dt).abs() > tol) {
            return Err(RomError::InvalidParameter(
                "trajectory times must be uniformly spaced".into(),
            ));
        }
        Ok(Self {
            times,
            coeffs,
            label,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn label(&self) -> RomLabel {
        self.label
    }

    pub fn state(&self, j: usize) -> DVector<f64> {
        self.coeffs.row(j).transpose()
    }

    /// Linear interpolation of the coefficients at time `t`. A relative
    /// tolerance absorbs round-off at the interval endpoints.
    pub fn sample(&self, t: f64) -> Result<DVector<f64>> {
        sample_series(&self.times, &self.coeffs, t)
    }
}

pub(crate) fn sample_series(times: &[f64], coeffs: &DMatrix<f64>, t: f64) -> Result<DVector<f64>> {
    let t_min = times[0];
    let t_max = times[times.len() - 1];
    let span = (t_max - t_min).max(f64::EPSILON);
    let tol = 1e-9 * span;
    if t < t_min - tol || t > t_max + tol {
        return Err(RomError::TimeOutOfRange { t, t_min, t_max });
    }
    let t = t.clamp(t_min, t_max);
    // First index with times[idx] > t; the segment is [idx-1, idx].
    let idx = times.partition_point(|&ti| ti <= t);
    if idx == 0 {
        return Ok(coeffs.row(0).transpose());
    }
    if idx >= times.len() {
        return Ok(coeffs.row(times.len() - 1).transpose());
    }
    let (t0, t1) = (times[idx - 1], times[idx]);
    let theta = (t - t0) / (t1 - t0);
    let lo = coeffs.row(idx - 1).transpose();
    let hi = coeffs.row(idx).transpose();
    Ok(&lo + (hi - &lo) * theta)
}

/// Classical RK4 with a fixed step. Generic over the right-hand side so the
/// same integrator drives the G-ROM, D2-VMS-ROM, I-ROM, and toy systems.
/// Blow-up surfaces as `NonFiniteState` instead of silent NaN rows.
pub fn integrate_rom<F>(
    mut rhs: F,
    a0: &DVector<f64>,
    t0: f64,
    dt: f64,
    n_steps: usize,
    label: RomLabel,
) -> Result<RomTrajectory>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    if dt <= 0.0 || !dt.is_finite() {
        return Err(RomError::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    if n_steps == 0 {
        return Err(RomError::InvalidParameter(
            "n_steps must be at least 1".into(),
        ));
    }
    let r = a0.len();
    let mut coeffs = DMatrix::zeros(n_steps + 1, r);
    let mut times = Vec::with_capacity(n_steps + 1);
    coeffs.row_mut(0).copy_from(&a0.transpose());
    times.push(t0);

    let mut a = a0.clone();
    for step in 0..n_steps {
        let t = t0 + step as f64 * dt;
        let k1 = rhs(t, &a)?;
        let k2 = rhs(t + 0.5 * dt, &(&a + &k1 * (0.5 * dt)))?;
        let k3 = rhs(t + 0.5 * dt, &(&a + &k2 * (0.5 * dt)))?;
        let k4 = rhs(t + dt, &(&a + &k3 * dt))?;
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        let t_next = t0 + (step + 1) as f64 * dt;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(RomError::NonFiniteState {
                step: step + 1,
                time: t_next,
            });
        }
        coeffs.row_mut(step + 1).copy_from(&a.transpose());
        times.push(t_next);
    }
    RomTrajectory::from_parts(times, coeffs, label)
}
