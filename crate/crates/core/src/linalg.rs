//! Dense linear-algebra primitives shared by every canonicalization routine:
//! Gram-Schmidt, eigenspace projectors, grouped symmetric eigendecomposition,
//! the incremental rank test, seeded group-element sampling and exact
//! factorial products.

use crate::error::{CanonError, Result};
use crate::perm::Permutation;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues closer than this are pooled into one eigenspace.
    pub eps_eig: f64,
    /// Minimum residual norm (of a unit vector) for it to count as linearly independent.
    pub eps_rank: f64,
    /// Entries and norms at or below this are treated as zero.
    pub eps_zero: f64,
    /// Grid spacing used to quantize real values before exact comparison.
    pub tau_quant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_eig: 1e-6,
            eps_rank: 1e-6,
            eps_zero: 1e-8,
            tau_quant: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eps_eig", self.eps_eig),
            ("eps_rank", self.eps_rank),
            ("eps_zero", self.eps_zero),
            ("tau_quant", self.tau_quant),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(CanonError::InvalidArgument(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One eigenvalue together with an orthonormal basis of its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigSpace {
    pub eigenvalue: f64,
    pub basis: Matrix,
}

impl EigSpace {
    pub fn multiplicity(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }
}

pub fn check_finite(m: &Matrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(CanonError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Largest absolute entry of `a - b`. Panics on shape mismatch.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `max |UᵀU - I|`.
pub fn orthonormality_deviation(u: &Matrix) -> f64 {
    let g = u.transpose() * u;
    let id = Matrix::identity(g.nrows(), g.ncols());
    max_abs_diff(&g, &id)
}

pub fn ensure_orthonormal(u: &Matrix, tol: f64) -> Result<()> {
    check_finite(u)?;
    if u.ncols() > u.nrows() {
        return Err(CanonError::DimensionMismatch(format!(
            "basis has {} columns in dimension {}",
            u.ncols(),
            u.nrows()
        )));
    }
    let deviation = orthonormality_deviation(u);
    if deviation > tol {
        return Err(CanonError::NotOrthonormal { deviation });
    }
    Ok(())
}

pub fn asymmetry(s: &Matrix) -> f64 {
    max_abs_diff(s, &s.transpose())
}

/// Gram-Schmidt orthonormalization of the columns of `v`.
///
/// Computed as a Householder QR with every column of `Q` flipped so that the
/// matching diagonal entry of `R` is positive; that factor is unique and equals
/// the classical Gram-Schmidt sequence.
pub fn gram_schmidt(v: &Matrix, eps_rank: f64) -> Result<Matrix> {
    check_finite(v)?;
    let (n, d) = v.shape();
    if d > n {
        return Err(CanonError::RankDeficient {
            column: n,
            residual: 0.0,
        });
    }
    if d == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let qr = v.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        if rjj.abs() <= eps_rank {
            return Err(CanonError::RankDeficient {
                column: j,
                residual: rjj.abs(),
            });
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// The orthogonal projector `U·Uᵀ` onto the span of orthonormal columns `u`.
pub fn projection_of(u: &Matrix) -> Result<Matrix> {
    ensure_orthonormal(u, 1e-9)?;
    Ok(u * u.transpose())
}

/// Symmetric eigendecomposition with eigenvalues within `eps_eig` pooled.
///
/// Spaces come back in ascending eigenvalue order. Grouping is single-linkage
/// on the sorted spectrum; the reported eigenvalue is the group mean.
pub fn sym_eig(s: &Matrix, tol: &Tolerances) -> Result<Vec<EigSpace>> {
    check_finite(s)?;
    if !s.is_square() {
        return Err(CanonError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let asym = asymmetry(s);
    if asym > 1e-9 {
        return Err(CanonError::NotSymmetric { asymmetry: asym });
    }
    let n = s.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // Exact symmetrization so the solver sees a symmetric input.
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut spaces = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= tol.eps_eig
        {
            end += 1;
        }
        let members = &order[start..end];
        let mut basis = Matrix::zeros(n, members.len());
        let mut sum = 0.0;
        for (c, &idx) in members.iter().enumerate() {
            basis.set_column(c, &eig.eigenvectors.column(idx));
            sum += eig.eigenvalues[idx];
        }
        spaces.push(EigSpace {
            eigenvalue: sum / members.len() as f64,
            basis,
        });
        start = end;
    }
    Ok(spaces)
}

/// Incremental rank test: removes from `v` its component in the span of the
/// orthonormal columns of `b`, and accepts `v` when what is left has norm
/// above `eps_rank`.
pub fn residual_accept(v: &Vector, b: &Matrix, eps_rank: f64) -> (bool, Vector) {
    assert_eq!(v.len(), b.nrows(), "vector and basis dimensions differ");
    let residual = if b.ncols() == 0 {
        v.clone()
    } else {
        v - b * (b.transpose() * v)
    };
    (residual.norm() > eps_rank, residual)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A Haar-distributed `k×k` orthogonal matrix drawn from `rng`.
pub fn random_orthogonal_with<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Matrix {
    assert!(k >= 1, "k must be at least 1");
    loop {
        let g = Matrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        // A singular Gaussian draw has probability zero; redraw if it happens.
        if let Ok(q) = gram_schmidt(&g, 1e-12) {
            return q;
        }
    }
}

pub fn random_orthogonal(k: usize, seed: u64) -> Matrix {
    random_orthogonal_with(k, &mut seeded_rng(seed))
}

/// `n×d` matrix with orthonormal columns, uniformly distributed on the Stiefel manifold.
pub fn random_orthonormal_with<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Matrix {
    assert!(d <= n);
    random_orthogonal_with(n, rng).columns(0, d).into_owned()
}

pub fn random_permutation_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(rng);
    Permutation::from_images_unchecked(map)
}

pub fn random_permutation(n: usize, seed: u64) -> Permutation {
    random_permutation_with(n, &mut seeded_rng(seed))
}

pub fn factorial(m: usize) -> BigUint {
    (2..=m as u64).fold(BigUint::from(1u32), |acc, k| acc * k)
}

/// `Π mᵢ!` in arbitrary precision.
pub fn factorial_product(multiplicities: &[usize]) -> BigUint {
    multiplicities
        .iter()
        .fold(BigUint::from(1u32), |acc, &m| acc * factorial(m))
}

/// Rounds `x` onto the `tau` grid. Symmetric under negation.
pub fn quantize(x: f64, tau: f64) -> i64 {
    (x / tau).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn gram_schmidt_identity_is_fixed() {
        let id = Matrix::identity(3, 3);
        assert!(max_abs_diff(&gram_schmidt(&id, 1e-6).unwrap(), &id) < 1e-15);
    }

    #[test]
    fn gram_schmidt_normalizes_scaled_axes() {
        let v = Matrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
        let expected = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(max_abs_diff(&gram_schmidt(&v, 1e-6).unwrap(), &expected) < 1e-15);
    }

    #[test]
    fn gram_schmidt_names_dependent_column() {
        let v = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        match gram_schmidt(&v, 1e-9) {
            Err(CanonError::RankDeficient { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn projection_examples() {
        let e1 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let p = projection_of(&e1).unwrap();
        assert_eq!(p, Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = Matrix::from_column_slice(2, 1, &[h, h]);
        let p = projection_of(&u).unwrap();
        assert!(max_abs_diff(&p, &Matrix::from_element(2, 2, 0.5)) < 1e-15);

        let id = Matrix::identity(4, 4);
        assert_eq!(projection_of(&id).unwrap(), id);

        let bad = Matrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(
            projection_of(&bad),
            Err(CanonError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn sym_eig_groups_exact_and_near_degeneracy() {
        for eps in [0.0, 1e-9] {
            let s = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0 + eps, 2.0]));
            let spaces = sym_eig(&s, &tol()).unwrap();
            assert_eq!(spaces.len(), 2);
            assert_eq!(spaces[0].multiplicity(), 2);
            assert!((spaces[0].eigenvalue - 1.0).abs() < 1e-8);
            assert_eq!(spaces[1].multiplicity(), 1);
            assert!((spaces[1].eigenvalue - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let s = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            sym_eig(&s, &tol()),
            Err(CanonError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn residual_accept_examples() {
        let e1 = Vector::from_vec(vec![1.0, 0.0, 0.0]);
        let empty = Matrix::zeros(3, 0);
        let (ok, r) = residual_accept(&e1, &empty, 1e-6);
        assert!(ok);
        assert_eq!(r, e1);

        let b = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let (ok, r) = residual_accept(&e1, &b, 1e-6);
        assert!(!ok);
        assert!(r.norm() <= 1e-12);

        let v = Vector::from_vec(vec![1.0, 1.0, 0.0]);
        let (ok, r) = residual_accept(&v, &b, 1e-6);
        assert!(ok);
        assert_eq!(r, Vector::from_vec(vec![0.0, 1.0, 0.0]));
    }

    #[test]
    fn random_orthogonal_k1_is_sign() {
        for seed in 0..20 {
            let q = random_orthogonal(1, seed);
            assert_eq!(q[(0, 0)].abs(), 1.0);
        }
    }

    #[test]
    fn random_generators_are_seed_determined() {
        assert_eq!(random_orthogonal(5, 7), random_orthogonal(5, 7));
        assert_eq!(random_permutation(9, 7), random_permutation(9, 7));
        assert_ne!(random_orthogonal(5, 7), random_orthogonal(5, 8));
    }

    #[test]
    fn factorial_products() {
        assert_eq!(factorial_product(&[5, 2, 2]), BigUint::from(480u32));
        assert_eq!(factorial_product(&[1, 1, 1]), BigUint::from(1u32));
        assert_eq!(
            factorial_product(&[25]).to_string(),
            "15511210043330985984000000"
        );
    }

    #[test]
    fn quantize_is_odd() {
        for x in [0.5e-6, 1.5e-6, 0.123456789, -3.3] {
            assert_eq!(quantize(-x, 1e-6), -quantize(x, 1e-6));
        }
    }
}
