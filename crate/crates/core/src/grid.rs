//! Uniform 1D grids and the discrete weighted inner product.
//!
//! Every inner product in the pipeline is the quadrature-weighted discrete
//! L2 product `(u, v)_W = sum_k w_k u_k v_k`, where the weights depend on the
//! boundary treatment: equal weights on periodic grids, trapezoid weights on
//! Dirichlet grids. Both sum to the domain length.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    HomogeneousDirichlet,
}

/// Uniform 1D grid with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    domain_length: f64,
    boundary: Boundary,
    spacing: f64,
    quad_weights: DVector<f64>,
}

impl Grid1D {
    pub fn new(n_points: usize, domain_length: f64, boundary: Boundary) -> Result<Self> {
        if n_points < 3 {
            return Err(RomError::InvalidParameter(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        if domain_length <= 0.0 || !domain_length.is_finite() {
            return Err(RomError::InvalidParameter(format!(
                "domain length must be positive and finite, got {domain_length}"
            )));
        }
        let (spacing, quad_weights) = match boundary {
            Boundary::Periodic => {
                let h = domain_length / n_points as f64;
                (h, DVector::from_element(n_points, h))
            }
            Boundary::HomogeneousDirichlet => {
                let h = domain_length / (n_points - 1) as f64;
                let mut w = DVector::from_element(n_points, h);
                w[0] = 0.5 * h;
                w[n_points - 1] = 0.5 * h;
                (h, w)
            }
        };
        Ok(Self {
            n_points,
            domain_length,
            boundary,
            spacing,
            quad_weights,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn quad_weights(&self) -> &DVector<f64> {
        &self.quad_weights
    }

    /// Node coordinates: `k*h` for both boundary kinds (periodic grids omit
    /// the right endpoint, Dirichlet grids include it).
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| k as f64 * self.spacing).collect()
    }

    /// Quadrature-weighted inner product `(u, v)_W`.
    pub fn weighted_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        debug_assert_eq!(u.len(), self.n_points);
        debug_assert_eq!(v.len(), self.n_points);
        let mut acc = 0.0;
        for k in 0..self.n_points {
            acc += self.quad_weights[k] * u[k] * v[k];
        }
        acc
    }

    /// Weighted L2 norm.
    pub fn weighted_norm(&self, u: &DVector<f64>) -> f64 {
        self.weighted_inner(u, u).sqrt()
    }

    /// Second-order central difference first derivative. Periodic grids wrap;
    /// Dirichlet grids fall back to one-sided differences at the endpoints.
    pub fn derivative(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n_points;
        let h = self.spacing;
        let mut d = DVector::zeros(n);
        match self.boundary {
            Boundary::Periodic => {
                for k in 0..n {
                    let up = u[(k + 1) % n];
                    let um = u[(k + n - 1) % n];
                    d[k] = (up - um) / (2.0 * h);
                }
            }
            Boundary::HomogeneousDirichlet => {
                d[0] = (u[1] - u[0]) / h;
                for k in 1..n - 1 {
                    d[k] = (u[k + 1] - u[k - 1]) / (2.0 * h);
                }
                d[n - 1] = (u[n - 1] - u[n - 2]) / h;
            }
        }
        d
    }

    /// Three-point second derivative. Dirichlet endpoints return 0; the
    /// solver holds those nodes fixed anyway.
    pub fn second_derivative(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n_points;
        let h2 = self.spacing * self.spacing;
        let mut d = DVector::zeros(n);
        match self.boundary {
            Boundary::Periodic => {
                for k in 0..n {
                    let up = u[(k + 1) % n];
                    let um = u[(k + n - 1) % n];
                    d[k] = (up - 2.0 * u[k] + um) / h2;
                }
            }
            Boundary::HomogeneousDirichlet => {
                for k in 1..n - 1 {
                    d[k] = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / h2;
                }
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_weights_sum_to_length() {
        let g = Grid1D::new(128, 2.0 * std::f64::consts::PI, Boundary::Periodic).unwrap();
        let sum: f64 = g.quad_weights().iter().sum();
        assert!((sum - g.domain_length()).abs() <= 1e-12 * g.domain_length());
        for &w in g.quad_weights().iter() {
            assert_eq!(w, g.spacing());
        }
    }

    #[test]
    fn dirichlet_weights_are_trapezoid() {
        let g = Grid1D::new(11, 1.0, Boundary::HomogeneousDirichlet).unwrap();
        let sum: f64 = g.quad_weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!((g.quad_weights()[0] - 0.05).abs() < 1e-15);
        assert!((g.quad_weights()[10] - 0.05).abs() < 1e-15);
        assert!((g.quad_weights()[5] - 0.1).abs() < 1e-15);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid1D::new(2, 1.0, Boundary::Periodic).is_err());
        assert!(Grid1D::new(16, 0.0, Boundary::Periodic).is_err());
        assert!(Grid1D::new(16, -1.0, Boundary::HomogeneousDirichlet).is_err());
        assert!(Grid1D::new(16, f64::NAN, Boundary::Periodic).is_err());
    }

    #[test]
    fn periodic_derivative_of_sine_is_cosine_scaled() {
        // Central difference of sin on a periodic grid is cos * sin(h)/h.
        let n = 64;
        let g = Grid1D::new(n, 2.0 * std::f64::consts::PI, Boundary::Periodic).unwrap();
        let x = g.points();
        let u = DVector::from_iterator(n, x.iter().map(|&xi| xi.sin()));
        let d = g.derivative(&u);
        let factor = g.spacing().sin() / g.spacing();
        for k in 0..n {
            assert!((d[k] - x[k].cos() * factor).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_inner_matches_manual_sum() {
        let g = Grid1D::new(5, 1.0, Boundary::HomogeneousDirichlet).unwrap();
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let v = DVector::from_vec(vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        let mut expect = 0.0;
        for k in 0..5 {
            expect += g.quad_weights()[k] * u[k] * v[k];
        }
        assert_eq!(g.weighted_inner(&u, &v), expect);
    }
}
