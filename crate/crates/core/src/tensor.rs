//! Dense rank-3 tensors for the quadratic ROM term.

use nalgebra::DVector;

/// Cubic `dim x dim x dim` tensor stored flat in i-major order
/// (`data[(i*dim + m)*dim + n]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == dim * dim * dim).then_some(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, m: usize, n: usize) -> f64 {
        self.data[(i * self.dim + m) * self.dim + n]
    }

    #[inline]
    pub fn set(&mut self, i: usize, m: usize, n: usize, value: f64) {
        self.data[(i * self.dim + m) * self.dim + n] = value;
    }

    /// Flat i-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Quadratic contraction `out[i] = sum_{m,n} T[i,m,n] a[m] a[n]`.
    pub fn contract(&self, a: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(a.len(), self.dim);
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            let base = i * d * d;
            let mut acc = 0.0;
            for m in 0..d {
                let row = base + m * d;
                let am = a[m];
                for n in 0..d {
                    acc += self.data[row + n] * am * a[n];
                }
            }
            out[i] = acc;
        }
        out
    }

    /// Leading `r x r x r` sub-block, entries copied verbatim.
    pub fn leading_block(&self, r: usize) -> Self {
        assert!(r <= self.dim);
        let mut out = Self::zeros(r);
        for i in 0..r {
            for m in 0..r {
                for n in 0..r {
                    out.set(i, m, n, self.get(i, m, n));
                }
            }
        }
        out
    }

    /// Symmetrize the trailing two indices: `T[i,m,n] <- (T[i,m,n] + T[i,n,m]) / 2`.
    /// The quadratic contraction is invariant under this.
    pub fn symmetrized_mn(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for m in 0..d {
                for n in 0..d {
                    out.set(i, m, n, 0.5 * (self.get(i, m, n) + self.get(i, n, m)));
                }
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
    }
}
