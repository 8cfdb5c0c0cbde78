//! Two non-isomorphic matrices that no sign-invariant, permutation-equivariant
//! network processing each eigenvector separately can tell apart.
//!
//! Both eigenvector pairs are orthogonal, every column is negation symmetric
//! (hence sign uncanonicalizable), and the columns agree in absolute value.
//! A two-branch network `φ(u) + φ(−u)` only sees `|u|` on such columns.

use crate::eig::is_sign_uncanonicalizable;
use crate::error::{CanonError, Result};
use crate::linalg::{seeded_rng, Matrix, Vector};
use crate::perm::Permutation;
use rand::Rng;
use rand_distr::StandardNormal;

/// Columns `u₁₁, u₁₂` of the first pair (unnormalized).
pub const U1: [[i64; 10]; 2] = [
    [-1, 1, -1, 1, 2, 2, -2, -2, 0, 0],
    [1, -1, 1, -1, 1, 1, 0, 0, -1, -1],
];

/// Columns `u₂₁, u₂₂` of the second pair (unnormalized).
pub const U2: [[i64; 10]; 2] = [
    [1, 1, -1, -1, 2, 2, -2, -2, 0, 0],
    [1, -1, -1, 1, 1, -1, 0, 0, -1, 1],
];

fn int_matrix(cols: &[[i64; 10]; 2]) -> [[i64; 10]; 10] {
    // L = 1·u₁u₁ᵀ + 2·u₂u₂ᵀ, exactly.
    let mut l = [[0i64; 10]; 10];
    for (i, row) in l.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cols[0][i] * cols[0][j] + 2 * cols[1][i] * cols[1][j];
        }
    }
    l
}

fn zero_count(l: &[[i64; 10]; 10]) -> usize {
    l.iter().flatten().filter(|&&v| v == 0).count()
}

fn to_matrix(cols: &[[i64; 10]; 2]) -> Matrix {
    Matrix::from_fn(10, 2, |i, j| cols[j][i] as f64)
}

/// Backtracking search for `P` with `P·B·Pᵀ = A`.
pub fn find_isomorphism(a: &[[i64; 10]; 10], b: &[[i64; 10]; 10]) -> Option<Permutation> {
    fn extend(
        a: &[[i64; 10]; 10],
        b: &[[i64; 10]; 10],
        image: &mut Vec<usize>,
        used: &mut [bool; 10],
    ) -> bool {
        let i = image.len();
        if i == 10 {
            return true;
        }
        for cand in 0..10 {
            if used[cand] || b[i][i] != a[cand][cand] {
                continue;
            }
            if (0..i).any(|j| b[i][j] != a[cand][image[j]]) {
                continue;
            }
            used[cand] = true;
            image.push(cand);
            if extend(a, b, image, used) {
                return true;
            }
            image.pop();
            used[cand] = false;
        }
        false
    }
    let mut image = Vec::with_capacity(10);
    let mut used = [false; 10];
    extend(a, b, &mut image, &mut used).then(|| Permutation::from_images(image).expect("bijection"))
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn gaussian(r: usize, c: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Seeded network `f(U) = ρ([φ(uᵢ) + φ(−uᵢ)]ᵢ)` with a permutation-equivariant
/// `φ` (two set layers, each with a row term and a mean-pooled term) and a
/// row-wise `ρ`. Sign invariant per column and permutation equivariant.
#[derive(Debug, Clone, PartialEq)]
pub struct SignInvariantNet {
    a1: Matrix,
    m1: Matrix,
    c1: Matrix,
    a2: Matrix,
    m2: Matrix,
    c2: Matrix,
    r1: Matrix,
    s1: Matrix,
    r2: Matrix,
}

impl SignInvariantNet {
    pub const HIDDEN: usize = 8;

    pub fn new(columns: usize, out: usize, seed: u64) -> Self {
        let h = Self::HIDDEN;
        let mut rng = seeded_rng(seed);
        Self {
            a1: gaussian(1, h, &mut rng),
            m1: gaussian(1, h, &mut rng),
            c1: gaussian(1, h, &mut rng),
            a2: gaussian(h, h, &mut rng) / (h as f64).sqrt(),
            m2: gaussian(h, h, &mut rng) / (h as f64).sqrt(),
            c2: gaussian(1, h, &mut rng),
            r1: gaussian(columns * h, h, &mut rng) / ((columns * h) as f64).sqrt(),
            s1: gaussian(1, h, &mut rng),
            r2: gaussian(h, out, &mut rng) / (h as f64).sqrt(),
        }
    }

    fn phi(&self, u: &Vector) -> Matrix {
        let n = u.len();
        let ones = Matrix::from_element(n, 1, 1.0);
        let col = Matrix::from_column_slice(n, 1, u.as_slice());
        let mean = u.mean();
        let h = (&col * &self.a1 + &ones * (&self.m1 * mean + &self.c1)).map(softplus);
        let pooled = Matrix::from_fn(1, h.ncols(), |_, j| h.column(j).mean());
        (&h * &self.a2 + &ones * (pooled * &self.m2 + &self.c2)).map(softplus)
    }

    pub fn evaluate(&self, u: &Matrix) -> Matrix {
        let n = u.nrows();
        let blocks: Vec<Matrix> = u
            .column_iter()
            .map(|c| {
                let c = c.into_owned();
                self.phi(&c) + self.phi(&-c)
            })
            .collect();
        let width: usize = blocks.iter().map(Matrix::ncols).sum();
        let mut z = Matrix::zeros(n, width);
        let mut off = 0;
        for b in &blocks {
            z.columns_mut(off, b.ncols()).copy_from(b);
            off += b.ncols();
        }
        let ones = Matrix::from_element(n, 1, 1.0);
        (z * &self.r1 + ones * &self.s1).map(f64::tanh) * &self.r2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub zero_counts: (usize, usize),
    /// `|u₁ᵀu₂|` for each pair, in floating point.
    pub orthogonality: (f64, f64),
    /// Sign uncanonicalizability of `u₁₁, u₁₂, u₂₁, u₂₂`.
    pub uncanonicalizable: [bool; 4],
    /// Row permutation sending `|U₁|` to `|U₂|`.
    pub matching: Permutation,
    pub n_functions: usize,
    /// Functions whose outputs on `U₁` and `U₂` agree after matching.
    pub identical: usize,
    pub max_output_diff: f64,
    pub tolerance: f64,
    /// Outcome of the exhaustive isomorphism search, when requested.
    pub isomorphic: Option<bool>,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.identical == self.n_functions && self.isomorphic != Some(true)
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("counterexample.zeros_l1={}\n", self.zero_counts.0));
        s.push_str(&format!("counterexample.zeros_l2={}\n", self.zero_counts.1));
        s.push_str(&format!(
            "counterexample.orthogonality_u1={:e}\n",
            self.orthogonality.0
        ));
        s.push_str(&format!(
            "counterexample.orthogonality_u2={:e}\n",
            self.orthogonality.1
        ));
        let flags: Vec<String> = self.uncanonicalizable.iter().map(bool::to_string).collect();
        s.push_str(&format!(
            "counterexample.uncanonicalizable={}\n",
            flags.join(",")
        ));
        let m: Vec<String> = self
            .matching
            .images()
            .iter()
            .map(usize::to_string)
            .collect();
        s.push_str(&format!("counterexample.matching={}\n", m.join(",")));
        s.push_str(&format!("counterexample.functions={}\n", self.n_functions));
        s.push_str(&format!("counterexample.identical={}\n", self.identical));
        s.push_str(&format!(
            "counterexample.max_output_diff={:e}\n",
            self.max_output_diff
        ));
        s.push_str(&format!("counterexample.tolerance={:e}\n", self.tolerance));
        match self.isomorphic {
            Some(v) => s.push_str(&format!("counterexample.isomorphic={v}\n")),
            None => s.push_str("counterexample.isomorphic=not_searched\n"),
        }
        s.push_str(&format!("counterexample.passed={}\n", self.passed()));
        s
    }
}

fn violation(msg: impl Into<String>) -> CanonError {
    CanonError::CounterexampleViolation(msg.into())
}

/// Checks the structural facts about the pinned pair, then evaluates
/// `n_functions` random sign-invariant networks on both inputs.
pub fn signnet_counterexample(
    seed: u64,
    n_functions: usize,
    exhaustive: bool,
) -> Result<CounterexampleReport> {
    const TOL: f64 = 1e-6;
    let l1 = int_matrix(&U1);
    let l2 = int_matrix(&U2);
    let zero_counts = (zero_count(&l1), zero_count(&l2));
    if zero_counts.0 == zero_counts.1 {
        return Err(violation(format!("zero counts coincide: {zero_counts:?}")));
    }

    let m1 = to_matrix(&U1);
    let m2 = to_matrix(&U2);
    let dot = |m: &Matrix| m.column(0).dot(&m.column(1)).abs();
    let orthogonality = (dot(&m1), dot(&m2));
    let exact_dot = |c: &[[i64; 10]; 2]| c[0].iter().zip(&c[1]).map(|(a, b)| a * b).sum::<i64>();
    if exact_dot(&U1) != 0
        || exact_dot(&U2) != 0
        || orthogonality.0 > 1e-9
        || orthogonality.1 > 1e-9
    {
        return Err(violation("eigenvector columns are not orthogonal"));
    }

    let cols = [&U1[0], &U1[1], &U2[0], &U2[1]];
    let mut uncanonicalizable = [false; 4];
    for (flag, c) in uncanonicalizable.iter_mut().zip(cols) {
        let v = Vector::from_iterator(10, c.iter().map(|&x| x as f64));
        *flag = is_sign_uncanonicalizable(&v, 1e-6);
    }
    if !uncanonicalizable.iter().all(|&f| f) {
        return Err(violation(format!(
            "not all columns are uncanonicalizable: {uncanonicalizable:?}"
        )));
    }

    // Sort rows of |U₁| and |U₂| the same way and pair them up.
    let abs_rows = |c: &[[i64; 10]; 2]| -> Vec<(i64, i64)> {
        (0..10).map(|i| (c[0][i].abs(), c[1][i].abs())).collect()
    };
    let (r1, r2) = (abs_rows(&U1), abs_rows(&U2));
    let mut o1: Vec<usize> = (0..10).collect();
    let mut o2: Vec<usize> = (0..10).collect();
    o1.sort_by_key(|&i| (r1[i], i));
    o2.sort_by_key(|&i| (r2[i], i));
    let mut image = vec![0; 10];
    for (&a, &b) in o1.iter().zip(&o2) {
        if r1[a] != r2[b] {
            return Err(violation("columns differ in absolute value"));
        }
        image[a] = b;
    }
    let matching = Permutation::from_images(image)?;

    let isomorphic = exhaustive.then(|| find_isomorphism(&l1, &l2).is_some());

    let mut identical = 0;
    let mut max_output_diff: f64 = 0.0;
    let mut rng = seeded_rng(seed);
    for _ in 0..n_functions {
        let net = SignInvariantNet::new(2, 3, rng.random());
        let y1 = net.evaluate(&m1);
        let y2 = net.evaluate(&m2);
        let diff = crate::linalg::max_abs_diff(&matching.apply_rows(&y1), &y2);
        max_output_diff = max_output_diff.max(diff);
        if diff <= TOL {
            identical += 1;
        }
    }

    Ok(CounterexampleReport {
        zero_counts,
        orthogonality,
        uncanonicalizable,
        matching,
        n_functions,
        identical,
        max_output_diff,
        tolerance: TOL,
        isomorphic,
    })
}
