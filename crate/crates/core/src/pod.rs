//! Proper orthogonal decomposition of snapshot sets.
//!
//! Modes are left singular vectors of the weight-scaled snapshot matrix
//! `W^{1/2} S`, rescaled by `W^{-1/2}`, so they are orthonormal in the
//! quadrature-weighted inner product. Projection and reconstruction move
//! fields between grid space and coefficient space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RomError};
use crate::fom::SnapshotSet;
use crate::grid::Grid1D;

/// Trailing singular values below `DEFLATION_REL * sigma_1` are dropped so
/// numerical-noise modes never enter closure fits.
pub const DEFLATION_REL: f64 = 1e-12;

/// Maximum allowed deviation of the weighted Gram matrix from identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Orthonormal POD basis with singular values and optional centering field.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    grid: Grid1D,
    modes: DMatrix<f64>,
    singular_values: DVector<f64>,
    mean_field: Option<DVector<f64>>,
}

impl PodBasis {
    /// Builds a basis from explicit modes, validating the type invariants:
    /// weighted orthonormality within `ORTHONORMALITY_TOL` and non-increasing
    /// positive singular values.
    pub fn from_parts(
        grid: Grid1D,
        modes: DMatrix<f64>,
        singular_values: DVector<f64>,
        mean_field: Option<DVector<f64>>,
    ) -> Result<Self> {
        let n = grid.n_points();
        if modes.nrows() != n {
            return Err(RomError::DimensionMismatch(format!(
                "modes have {} rows, grid has {n} points",
                modes.nrows()
            )));
        }
        let rank = modes.ncols();
        if rank == 0 {
            return Err(RomError::InvalidParameter("basis rank is zero".into()));
        }
        if singular_values.len() != rank {
            return Err(RomError::DimensionMismatch(format!(
                "{} singular values for {rank} modes",
                singular_values.len()
            )));
        }
        for w in singular_values.as_slice().windows(2) {
            if w[1] > w[0] || w[1].is_nan() || w[0].is_nan() {
                return Err(RomError::InvalidParameter(
                    "singular values must be non-increasing".into(),
                ));
            }
        }
        if singular_values.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(RomError::InvalidParameter(
                "singular values must be positive and finite".into(),
            ));
        }
        if let Some(mean) = &mean_field {
            if mean.len() != n {
                return Err(RomError::DimensionMismatch(format!(
                    "mean field has {} entries, grid has {n} points",
                    mean.len()
                )));
            }
        }
        let w = grid.quad_weights();
        let mut deviation = 0.0_f64;
        for i in 0..rank {
            for j in i..rank {
                let mut g = 0.0;
                for k in 0..n {
                    g += w[k] * modes[(k, i)] * modes[(k, j)];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((g - target).abs());
            }
        }
        if deviation > ORTHONORMALITY_TOL {
            return Err(RomError::BasisNotOrthonormal { deviation });
        }
        Ok(Self {
            grid,
            modes,
            singular_values,
            mean_field,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Retained rank R.
    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> DVector<f64> {
        self.modes.column(i).into_owned()
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn mean_field(&self) -> Option<&DVector<f64>> {
        self.mean_field.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.mean_field.is_some()
    }

    /// Coefficients of `field` against the first `r` modes:
    /// `a_i = (field - mean, phi_i)_W`.
    pub fn project(&self, field: &DVector<f64>, r: usize) -> Result<DVector<f64>> {
        if r > self.rank() {
            return Err(RomError::RankTooLarge {
                requested: r,
                available: self.rank(),
            });
        }
        let n = self.grid.n_points();
        if field.len() != n {
            return Err(RomError::DimensionMismatch(format!(
                "field has {} entries, grid has {n} points",
                field.len()
            )));
        }
        let w = self.grid.quad_weights();
        let mut coeffs = DVector::zeros(r);
        for i in 0..r {
            let mut acc = 0.0;
            match &self.mean_field {
                Some(mean) => {
                    for k in 0..n {
                        acc += w[k] * (field[k] - mean[k]) * self.modes[(k, i)];
                    }
                }
                None => {
                    for k in 0..n {
                        acc += w[k] * field[k] * self.modes[(k, i)];
                    }
                }
            }
            coeffs[i] = acc;
        }
        Ok(coeffs)
    }

    /// `mean + sum_j coeffs_j phi_j`; the coefficient length picks the rank.
    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        let r = coeffs.len();
        if r > self.rank() {
            return Err(RomError::RankTooLarge {
                requested: r,
                available: self.rank(),
            });
        }
        let mut field = match &self.mean_field {
            Some(mean) => mean.clone(),
            None => DVector::zeros(self.grid.n_points()),
        };
        for j in 0..r {
            field.axpy(coeffs[j], &self.modes.column(j).into_owned(), 1.0);
        }
        Ok(field)
    }

    /// Column-wise projection of a snapshot set.
    pub fn project_series(&self, snapshots: &SnapshotSet, r: usize) -> Result<CoefficientSeries> {
        if snapshots.grid() != &self.grid {
            return Err(RomError::DimensionMismatch(
                "snapshot grid does not match basis grid".into(),
            ));
        }
        let m = snapshots.n_snapshots();
        let mut coeffs = DMatrix::zeros(m, r);
        for j in 0..m {
            let a = self.project(&snapshots.snapshot(j), r)?;
            coeffs.row_mut(j).copy_from(&a.transpose());
        }
        Ok(CoefficientSeries {
            times: snapshots.times().to_vec(),
            coeffs,
        })
    }

    /// Root-mean-square over snapshots of the weighted L2 residual after
    /// rank-`r` projection.
    pub fn projection_error(&self, snapshots: &SnapshotSet, r: usize) -> Result<f64> {
        if snapshots.grid() != &self.grid {
            return Err(RomError::DimensionMismatch(
                "snapshot grid does not match basis grid".into(),
            ));
        }
        let m = snapshots.n_snapshots();
        let mut total = 0.0;
        for j in 0..m {
            let snap = snapshots.snapshot(j);
            let recon = self.reconstruct(&self.project(&snap, r)?)?;
            let diff = &snap - &recon;
            total += self.grid.weighted_inner(&diff, &diff);
        }
        Ok((total / m as f64).sqrt())
    }
}

/// Time series of coefficient vectors, row `j` holding `a(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeries {
    times: Vec<f64>,
    coeffs: DMatrix<f64>,
}

impl CoefficientSeries {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }
}

/// Computes the POD basis of a snapshot set.
///
/// With `centering` on, the snapshot mean is subtracted first and stored in
/// the basis. The effective rank may come out below `requested_rank` when
/// trailing singular values fall under `DEFLATION_REL * sigma_1`.
pub fn compute_pod(
    snapshots: &SnapshotSet,
    requested_rank: usize,
    centering: bool,
) -> Result<PodBasis> {
    let n = snapshots.grid().n_points();
    let m = snapshots.n_snapshots();
    let available = n.min(m);
    if requested_rank == 0 || requested_rank > available {
        return Err(RomError::RankTooLarge {
            requested: requested_rank,
            available,
        });
    }

    let mean = centering.then(|| {
        let mut mu = DVector::zeros(n);
        for j in 0..m {
            mu += snapshots.fields().column(j);
        }
        mu /= m as f64;
        mu
    });

    let w = snapshots.grid().quad_weights();
    let sqrt_w: Vec<f64> = w.iter().map(|&wk| wk.sqrt()).collect();
    let mut scaled = DMatrix::zeros(n, m);
    for j in 0..m {
        for k in 0..n {
            let centered = match &mean {
                Some(mu) => snapshots.fields()[(k, j)] - mu[k],
                None => snapshots.fields()[(k, j)],
            };
            scaled[(k, j)] = sqrt_w[k] * centered;
        }
    }

    let svd = scaled.svd(true, false);
    let u = svd
        .u
        .expect("left singular vectors were requested from the SVD");
    let sigma = svd.singular_values;

    // Deflation needs the values in descending order; sort rather than
    // rely on the SVD backend's ordering.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());

    let sigma_1 = sigma[order[0]];
    if sigma_1 <= 0.0 || sigma_1.is_nan() {
        return Err(RomError::DegenerateSnapshots);
    }
    let kept = order
        .iter()
        .take_while(|&&idx| sigma[idx] >= DEFLATION_REL * sigma_1)
        .count();
    let rank = requested_rank.min(kept);

    let mut modes = DMatrix::zeros(n, rank);
    let mut singular_values = DVector::zeros(rank);
    for (col, &idx) in order.iter().take(rank).enumerate() {
        singular_values[col] = sigma[idx];
        for k in 0..n {
            modes[(k, col)] = u[(k, idx)] / sqrt_w[k];
        }
    }

    PodBasis::from_parts(snapshots.grid().clone(), modes, singular_values, mean)
}
