//! Permutations of `{0, .., n-1}` and their action on vectors and matrices.
//!
//! A [`Permutation`] stores the image of every index: `map[i] = σ(i)`. Its
//! matrix `P` satisfies `P·e_i = e_σ(i)`, so `(P·x)[σ(i)] = x[i]` and row `i`
//! of a matrix moves to row `σ(i)`.

use crate::error::{CanonError, Result};
use crate::linalg::Matrix;
use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// Builds a permutation from its image table, checking it is a bijection.
    pub fn from_images(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || seen[m] {
                return Err(CanonError::InvalidArgument(format!(
                    "not a permutation of 0..{n}: {map:?}"
                )));
            }
            seen[m] = true;
        }
        Ok(Self { map })
    }

    pub(crate) fn from_images_unchecked(map: Vec<usize>) -> Self {
        debug_assert!(Self::from_images(map.clone()).is_ok());
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len(), "permutation sizes differ");
        Self {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.len();
        let mut p = Matrix::zeros(n, n);
        for (i, &m) in self.map.iter().enumerate() {
            p[(m, i)] = 1.0;
        }
        p
    }

    pub fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.len());
        let mut out = DVector::zeros(x.len());
        for (i, &m) in self.map.iter().enumerate() {
            out[m] = x[i];
        }
        out
    }

    /// `P·X`: row `i` of `x` becomes row `σ(i)`.
    pub fn apply_rows(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.nrows(), self.len());
        let mut out = Matrix::zeros(x.nrows(), x.ncols());
        for (i, &m) in self.map.iter().enumerate() {
            out.set_row(m, &x.row(i));
        }
        out
    }

    /// `P·A·Pᵀ`: relabels node `i` of a square matrix as `σ(i)`.
    pub fn conjugate(&self, a: &Matrix) -> Matrix {
        assert!(a.is_square() && a.nrows() == self.len());
        let n = self.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.map[i], self.map[j])] = a[(i, j)];
            }
        }
        out
    }

    /// Relabels a per-node sequence the same way as [`Permutation::apply_rows`].
    pub fn apply_slice<T: Clone>(&self, xs: &[T]) -> Vec<T> {
        assert_eq!(xs.len(), self.len());
        let mut out: Vec<Option<T>> = vec![None; xs.len()];
        for (i, &m) in self.map.iter().enumerate() {
            out[m] = Some(xs[i].clone());
        }
        out.into_iter().map(|x| x.expect("bijection")).collect()
    }
}
