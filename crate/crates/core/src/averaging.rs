//! Frame averaging, canonical averaging and the PCA frame.
//!
//! A frame assigns to an input `X` a finite set of group elements `F(X)`.
//! Frame averaging evaluates the backbone on `ρ(g)⁻¹X` for every `g` in the
//! frame; canonical averaging evaluates it once per distinct form. The two
//! agree exactly when the backbone output is invariant.

use crate::eig::{self, CanonKind};
use crate::error::{CanonError, Result};
use crate::graph::sampling::sample_without_replacement_with;
use crate::graph::GraphFrame;
use crate::lap::{self, KeyConfig, KeyVariant};
use crate::linalg::{max_abs_diff, seeded_rng, sym_eig, Matrix, Tolerances};
use crate::perm::Permutation;
use num_bigint::BigUint;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use std::collections::{BTreeMap, HashSet};

/// How the group acts on a backbone's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputAction {
    /// The output is left unchanged by the group.
    Invariant,
    /// The output transforms like the input.
    SameAsInput,
}

pub trait Backbone {
    fn evaluate(&self, x: &Matrix) -> Matrix;
    fn output_action(&self) -> OutputAction;
}

/// How a group element acts on an input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// `P·X·Pᵀ` or `Q·X·Qᵀ`: adjacency-like square inputs.
    Conjugate,
    /// `P·X·Qᵀ`: rows are permuted, columns rotated.
    Rows,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Perm(Permutation),
    Orth(Matrix),
    PermOrth(Permutation, Matrix),
}

impl GroupElement {
    /// `ρ(g)·X`.
    ///
    /// # Panics
    ///
    /// If a `PermOrth` pair is applied through [`Representation::Conjugate`].
    pub fn act(&self, x: &Matrix, rep: Representation) -> Matrix {
        match (self, rep) {
            (GroupElement::Perm(p), Representation::Conjugate) => p.conjugate(x),
            (GroupElement::Perm(p), Representation::Rows) => p.apply_rows(x),
            (GroupElement::Orth(q), Representation::Conjugate) => q * x * q.transpose(),
            (GroupElement::Orth(q), Representation::Rows) => x * q.transpose(),
            (GroupElement::PermOrth(..), Representation::Conjugate) => {
                panic!("permutation-orthogonal pairs act on rows, not by conjugation")
            }
            (GroupElement::PermOrth(p, q), Representation::Rows) => {
                p.apply_rows(&(x * q.transpose()))
            }
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Perm(p) => GroupElement::Perm(p.inverse()),
            GroupElement::Orth(q) => GroupElement::Orth(q.transpose()),
            GroupElement::PermOrth(p, q) => GroupElement::PermOrth(p.inverse(), q.transpose()),
        }
    }
}

/// A finite set of group elements attached to one input.
pub trait Frame {
    fn size(&self) -> BigUint;
    fn elements(&self) -> Box<dyn Iterator<Item = GroupElement> + '_>;
    /// `m` distinct elements drawn uniformly without replacement; `m` must not
    /// exceed the frame size.
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Result<Vec<GroupElement>>;
}

/// An explicitly listed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ListFrame(pub Vec<GroupElement>);

impl ListFrame {
    /// Every permutation of `n` points: averaging over it is full group averaging.
    pub fn symmetric_group(n: usize) -> Self {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            out.push(GroupElement::Perm(Permutation::from_images_unchecked(
                perm.clone(),
            )));
            let Some(i) = (0..n.saturating_sub(1))
                .rev()
                .find(|&i| perm[i] < perm[i + 1])
            else {
                break;
            };
            let j = (i + 1..n)
                .rev()
                .find(|&j| perm[j] > perm[i])
                .expect("successor exists");
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        ListFrame(out)
    }
}

impl Frame for ListFrame {
    fn size(&self) -> BigUint {
        BigUint::from(self.0.len())
    }

    fn elements(&self) -> Box<dyn Iterator<Item = GroupElement> + '_> {
        Box::new(self.0.iter().cloned())
    }

    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Result<Vec<GroupElement>> {
        let idx = sample_without_replacement_with(self.0.len(), m, rng)?;
        Ok(idx.into_iter().map(|i| self.0[i].clone()).collect())
    }
}

/// The graph frame acts through the inverse sorting permutations, so that
/// `ρ(g)⁻¹·A` is the sorted adjacency matrix.
impl Frame for GraphFrame {
    fn size(&self) -> BigUint {
        GraphFrame::size(self)
    }

    fn elements(&self) -> Box<dyn Iterator<Item = GroupElement> + '_> {
        Box::new(self.iter().map(|s| GroupElement::Perm(s.inverse())))
    }

    fn sample(&self, m: usize, mut rng: &mut dyn RngCore) -> Result<Vec<GroupElement>> {
        if BigUint::from(m) > GraphFrame::size(self) {
            return Err(CanonError::InvalidArgument(format!(
                "cannot draw {m} distinct elements from a smaller frame"
            )));
        }
        let mut seen = HashSet::with_capacity(m);
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let s = self.random_element(&mut rng);
            if seen.insert(s.clone()) {
                out.push(GroupElement::Perm(s.inverse()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageResult {
    pub value: Matrix,
    /// Number of backbone evaluations.
    pub terms: usize,
    pub sampled: bool,
}

fn mean(terms: Vec<Matrix>) -> Matrix {
    let count = terms.len() as f64;
    let mut iter = terms.into_iter();
    let first = iter.next().expect("at least one term");
    iter.fold(first, |acc, t| acc + t) / count
}

/// `(1/|F|) Σ_{g∈F} ρ₂(g)·φ(ρ₁(g)⁻¹·X)`, exact when the frame has at most
/// `budget` elements and estimated from `budget` elements drawn without
/// replacement otherwise.
pub fn frame_average<F: Frame + ?Sized, B: Backbone + ?Sized>(
    x: &Matrix,
    frame: &F,
    phi: &B,
    rep: Representation,
    budget: usize,
    seed: u64,
) -> Result<AverageResult> {
    let size = frame.size();
    if size == BigUint::from(0u32) {
        return Err(CanonError::EmptyFrame);
    }
    if budget == 0 {
        return Err(CanonError::InvalidArgument(
            "budget must be positive".into(),
        ));
    }
    let sampled = size > BigUint::from(budget);
    let elements: Vec<GroupElement> = if sampled {
        frame.sample(budget, &mut seeded_rng(seed))?
    } else {
        frame.elements().collect()
    };
    let terms: Vec<Matrix> = elements
        .iter()
        .map(|g| {
            let y = phi.evaluate(&g.inverse().act(x, rep));
            match phi.output_action() {
                OutputAction::Invariant => y,
                OutputAction::SameAsInput => g.act(&y, rep),
            }
        })
        .collect();
    Ok(AverageResult {
        terms: terms.len(),
        value: mean(terms),
        sampled,
    })
}

/// A canonical form together with the element carrying the input to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonizedInput {
    pub form: Matrix,
    pub action: GroupElement,
}

impl CanonizedInput {
    pub fn from_action(x: &Matrix, action: GroupElement, rep: Representation) -> Self {
        Self {
            form: action.act(x, rep),
            action,
        }
    }
}

fn bits(m: &Matrix) -> Vec<u64> {
    m.iter().map(|&v| (v + 0.0).to_bits()).collect()
}

/// The distinct forms `ρ(g)⁻¹·X` over the whole frame, each with the first
/// element that produced it. Forms are ordered by their bit patterns.
pub fn induced_canonicalization<F: Frame + ?Sized>(
    x: &Matrix,
    frame: &F,
    rep: Representation,
) -> Vec<CanonizedInput> {
    let mut forms: BTreeMap<Vec<u64>, CanonizedInput> = BTreeMap::new();
    for g in frame.elements() {
        let c = CanonizedInput::from_action(x, g.inverse(), rep);
        forms.entry(bits(&c.form)).or_insert(c);
    }
    forms.into_values().collect()
}

/// `(1/|C|) Σ_{X₀∈C} φ(X₀)`, with equivariant outputs carried back through
/// the inverse canonizing action. Every entry of `canon` must satisfy
/// `ρ(action)·X = form` within 1e-8.
pub fn canonical_average<B: Backbone + ?Sized>(
    x: &Matrix,
    canon: &[CanonizedInput],
    phi: &B,
    rep: Representation,
    budget: usize,
    seed: u64,
) -> Result<AverageResult> {
    if canon.is_empty() {
        return Err(CanonError::EmptyCanonicalSet);
    }
    if budget == 0 {
        return Err(CanonError::InvalidArgument(
            "budget must be positive".into(),
        ));
    }
    for (i, c) in canon.iter().enumerate() {
        let moved = c.action.act(x, rep);
        if moved.shape() != c.form.shape() || max_abs_diff(&moved, &c.form) > 1e-8 {
            return Err(CanonError::DimensionMismatch(format!(
                "canonical form {i} is not the image of the input under its action"
            )));
        }
    }
    let sampled = canon.len() > budget;
    let chosen: Vec<&CanonizedInput> = if sampled {
        sample_without_replacement_with(canon.len(), budget, &mut seeded_rng(seed))?
            .into_iter()
            .map(|i| &canon[i])
            .collect()
    } else {
        canon.iter().collect()
    };
    let terms: Vec<Matrix> = chosen
        .iter()
        .map(|c| {
            let y = phi.evaluate(&c.form);
            match phi.output_action() {
                OutputAction::Invariant => y,
                OutputAction::SameAsInput => c.action.inverse().act(&y, rep),
            }
        })
        .collect();
    Ok(AverageResult {
        terms: terms.len(),
        value: mean(terms),
        sampled,
    })
}

/// Canonical average over a set of plain vectors, as produced by a sign
/// fallback `{u, −u}`. Every form is weighted equally.
pub fn average_over_forms<B: Backbone + ?Sized>(forms: &[Matrix], phi: &B) -> Result<Matrix> {
    if forms.is_empty() {
        return Err(CanonError::EmptyCanonicalSet);
    }
    Ok(mean(forms.iter().map(|f| phi.evaluate(f)).collect()))
}

/// Seeded two-layer network on the flattened input:
/// `y = W₂·tanh(W₁·vec(X) + b₁) + b₂`, reshaped to `out_shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMlp {
    w1: Matrix,
    b1: Matrix,
    w2: Matrix,
    b2: Matrix,
    out_shape: (usize, usize),
    action: OutputAction,
}

fn gaussian(r: usize, c: usize, scale: f64, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

impl RandomMlp {
    pub fn new(
        in_shape: (usize, usize),
        hidden: usize,
        out_shape: (usize, usize),
        action: OutputAction,
        seed: u64,
    ) -> Self {
        let mut rng = seeded_rng(seed);
        let d_in = in_shape.0 * in_shape.1;
        let d_out = out_shape.0 * out_shape.1;
        Self {
            w1: gaussian(hidden, d_in, 1.0 / (d_in.max(1) as f64).sqrt(), &mut rng),
            b1: gaussian(hidden, 1, 0.5, &mut rng),
            w2: gaussian(d_out, hidden, 1.0 / (hidden.max(1) as f64).sqrt(), &mut rng),
            b2: gaussian(d_out, 1, 0.5, &mut rng),
            out_shape,
            action,
        }
    }
}

impl Backbone for RandomMlp {
    fn evaluate(&self, x: &Matrix) -> Matrix {
        let flat = Matrix::from_row_iterator(x.len(), 1, x.transpose().iter().copied());
        let h = (&self.w1 * flat + &self.b1).map(f64::tanh);
        let y = &self.w2 * h + &self.b2;
        Matrix::from_row_iterator(self.out_shape.0, self.out_shape.1, y.iter().copied())
    }

    fn output_action(&self) -> OutputAction {
        self.action
    }
}

/// Seeded row-wise network `Y = tanh(X·A + 𝟙b₁ᵀ)·C + 𝟙b₂ᵀ`, applied to each row independently.
#[derive(Debug, Clone, PartialEq)]
pub struct RowwiseMlp {
    a: Matrix,
    b1: Matrix,
    c: Matrix,
    b2: Matrix,
}

impl RowwiseMlp {
    pub fn new(k_in: usize, hidden: usize, k_out: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        Self {
            a: gaussian(k_in, hidden, 1.0 / (k_in.max(1) as f64).sqrt(), &mut rng),
            b1: gaussian(1, hidden, 0.5, &mut rng),
            c: gaussian(hidden, k_out, 1.0 / (hidden.max(1) as f64).sqrt(), &mut rng),
            b2: gaussian(1, k_out, 0.5, &mut rng),
        }
    }
}

impl Backbone for RowwiseMlp {
    fn evaluate(&self, x: &Matrix) -> Matrix {
        let n = x.nrows();
        let ones = Matrix::from_element(n, 1, 1.0);
        let h = (x * &self.a + &ones * &self.b1).map(f64::tanh);
        h * &self.c + ones * &self.b2
    }

    fn output_action(&self) -> OutputAction {
        OutputAction::SameAsInput
    }
}

/// Wraps a closure as a backbone.
pub struct FnBackbone<F> {
    pub f: F,
    pub action: OutputAction,
}

impl<F: Fn(&Matrix) -> Matrix> Backbone for FnBackbone<F> {
    fn evaluate(&self, x: &Matrix) -> Matrix {
        (self.f)(x)
    }

    fn output_action(&self) -> OutputAction {
        self.action
    }
}

/// How the PCA frame resolves sign and basis ambiguity of the covariance eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaCanon {
    /// First-nonzero sign rule and index-based OAP: orthogonally equivariant.
    Eig,
    /// Permutation-equivariant OAP keys: additionally permutation equivariant,
    /// but fails on symmetric point clouds.
    Lap,
}

/// The orthogonal matrix `R_X` used by [`pca_frame_apply`].
///
/// For each covariance eigenspace `U` (eigenvalue `λ`) the point scores
/// `Y = X_c·U/√λ` are orthonormal and change only by a right rotation when
/// `X` is rotated, so canonicalizing `span(Y)` in point space and mapping the
/// canonical basis back through `Yᵀ` fixes the rotation of `U`.
pub fn pca_frame(x: &Matrix, canon: PcaCanon, tol: &Tolerances) -> Result<Matrix> {
    let (n, k) = x.shape();
    if n == 0 || k == 0 {
        return Err(CanonError::InvalidArgument(
            "point cloud must be non-empty".into(),
        ));
    }
    let centroid = x.row_mean();
    let xc = Matrix::from_fn(n, k, |i, j| x[(i, j)] - centroid[j]);
    let cov = xc.transpose() * &xc;
    let spaces = sym_eig(&cov, tol)?;
    let scale = spaces.last().map_or(0.0, |s| s.eigenvalue.abs()).max(1.0);
    let mut r = Matrix::zeros(k, k);
    let mut col = 0;
    for space in &spaces {
        let d = space.multiplicity();
        let degenerate = |reason: &str| CanonError::DegenerateCovariance {
            eigenvalue: space.eigenvalue,
            multiplicity: d,
            reason: reason.to_string(),
        };
        if space.eigenvalue <= tol.eps_zero * scale {
            return Err(degenerate("eigenvalue is numerically zero"));
        }
        let y = &xc * &space.basis / space.eigenvalue.sqrt();
        let y_star = match canon {
            PcaCanon::Eig if d == 1 => {
                eig::sign_canon_first_nonzero(&y.column(0).into_owned(), tol.eps_zero)?.forms[0]
                    .clone()
            }
            PcaCanon::Eig => eig::oap_eig(&y, tol)?.forms[0].clone(),
            PcaCanon::Lap => {
                let out = if d == 1 {
                    eig::map_full(
                        &y.column(0).into_owned(),
                        &KeyConfig::Plain(KeyVariant::Oap),
                        lap::DEFAULT_C,
                        tol,
                    )?
                } else {
                    lap::oap_lap(&y, &KeyConfig::Plain(KeyVariant::Oap), lap::DEFAULT_C, tol)?
                };
                if out.kind != CanonKind::Single {
                    return Err(degenerate("score span is not canonicalizable"));
                }
                out.forms[0].clone()
            }
        };
        let block = &space.basis * (y.transpose() * y_star);
        r.columns_mut(col, d).copy_from(&block);
        col += d;
    }
    Ok(r)
}

/// `f(X) = h(X·R_X)·R_Xᵀ`: orthogonally equivariant for any backbone `h`
/// mapping `n×k` to `n×k`.
pub fn pca_frame_apply<B: Backbone + ?Sized>(
    x: &Matrix,
    h: &B,
    canon: PcaCanon,
    tol: &Tolerances,
) -> Result<Matrix> {
    let r = pca_frame(x, canon, tol)?;
    let y = h.evaluate(&(x * &r));
    if y.ncols() != r.nrows() {
        return Err(CanonError::DimensionMismatch(format!(
            "backbone output has {} columns, expected {}",
            y.ncols(),
            r.nrows()
        )));
    }
    Ok(y * r.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::{cycle, path};
    use crate::graph::{frame_of_graph, ScoreVariant};
    use crate::linalg::{orthonormality_deviation, random_orthogonal};

    fn identity_backbone() -> FnBackbone<impl Fn(&Matrix) -> Matrix> {
        FnBackbone {
            f: |x: &Matrix| x.clone(),
            action: OutputAction::SameAsInput,
        }
    }

    #[test]
    fn identity_frame_returns_backbone() {
        let x = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let phi = RandomMlp::new((2, 2), 5, (1, 3), OutputAction::Invariant, 1);
        let frame = ListFrame(vec![GroupElement::Perm(Permutation::identity(2))]);
        let out = frame_average(&x, &frame, &phi, Representation::Conjugate, 10, 0).unwrap();
        assert_eq!(out.value, phi.evaluate(&x));
    }

    #[test]
    fn constant_backbone_is_constant() {
        let c = Matrix::from_row_slice(1, 2, &[0.25, -3.0]);
        let phi = FnBackbone {
            f: |_: &Matrix| Matrix::from_row_slice(1, 2, &[0.25, -3.0]),
            action: OutputAction::Invariant,
        };
        let g = cycle(5);
        let frame = frame_of_graph(&g, ScoreVariant::Fa, &Tolerances::default()).unwrap();
        let out = frame_average(
            g.adjacency(),
            &frame,
            &phi,
            Representation::Conjugate,
            1000,
            0,
        )
        .unwrap();
        assert!(max_abs_diff(&out.value, &c) < 1e-12);
    }

    #[test]
    fn empty_inputs_error() {
        let x = Matrix::zeros(2, 2);
        let phi = identity_backbone();
        assert_eq!(
            frame_average(&x, &ListFrame(vec![]), &phi, Representation::Rows, 5, 0),
            Err(CanonError::EmptyFrame)
        );
        assert_eq!(
            canonical_average(&x, &[], &phi, Representation::Rows, 5, 0),
            Err(CanonError::EmptyCanonicalSet)
        );
    }

    #[test]
    fn sign_fallback_cancels_identity() {
        let u = Matrix::from_column_slice(2, 1, &[-1.0, 1.0]);
        let out = average_over_forms(&[u.clone(), -u], &identity_backbone()).unwrap();
        assert_eq!(out, Matrix::zeros(2, 1));
    }

    #[test]
    fn frame_and_canonical_average_agree_on_path() {
        let g = path(4);
        let x = g.adjacency();
        let frame = frame_of_graph(&g, ScoreVariant::Oap, &Tolerances::default()).unwrap();
        let phi = RandomMlp::new((4, 4), 8, (2, 1), OutputAction::Invariant, 9);
        let fa = frame_average(x, &frame, &phi, Representation::Conjugate, 1000, 0).unwrap();
        let canon = induced_canonicalization(x, &frame, Representation::Conjugate);
        let ca = canonical_average(x, &canon, &phi, Representation::Conjugate, 1000, 0).unwrap();
        assert!(max_abs_diff(&fa.value, &ca.value) < 1e-12);
        assert!(!fa.sampled && !ca.sampled);
    }

    #[test]
    fn canonical_average_rejects_wrong_action() {
        let x = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        let bad = CanonizedInput {
            form: x.clone(),
            action: GroupElement::Perm(Permutation::from_images(vec![1, 0]).unwrap()),
        };
        assert!(canonical_average(
            &x,
            &[bad],
            &identity_backbone(),
            Representation::Conjugate,
            5,
            0
        )
        .is_err());
    }

    #[test]
    fn sampled_average_uses_budget() {
        let g = cycle(5);
        let frame = frame_of_graph(&g, ScoreVariant::Fa, &Tolerances::default()).unwrap();
        let phi = RandomMlp::new((5, 5), 4, (1, 1), OutputAction::Invariant, 2);
        let out =
            frame_average(g.adjacency(), &frame, &phi, Representation::Conjugate, 7, 3).unwrap();
        assert!(out.sampled);
        assert_eq!(out.terms, 7);
    }

    #[test]
    fn symmetric_group_has_factorial_size() {
        assert_eq!(ListFrame::symmetric_group(4).0.len(), 24);
        assert_eq!(ListFrame::symmetric_group(1).0.len(), 1);
    }

    #[test]
    fn pca_frame_is_orthogonal_and_identity_is_fixed() {
        let x = Matrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * i as f64);
        let tol = Tolerances::default();
        let r = pca_frame(&x, PcaCanon::Eig, &tol).unwrap();
        assert!(orthonormality_deviation(&r) < 1e-10);
        let out = pca_frame_apply(&x, &identity_backbone(), PcaCanon::Eig, &tol).unwrap();
        assert!(max_abs_diff(&out, &x) < 1e-10);
    }

    #[test]
    fn pca_frame_equivariance_example() {
        let x = Matrix::from_fn(7, 3, |i, j| (((i + 1) * (j + 2)) as f64).sin());
        let q = random_orthogonal(3, 5);
        let h = RowwiseMlp::new(3, 6, 3, 4);
        let tol = Tolerances::default();
        for canon in [PcaCanon::Eig, PcaCanon::Lap] {
            let a = pca_frame_apply(&x, &h, canon, &tol).unwrap() * &q;
            let b = pca_frame_apply(&(&x * &q), &h, canon, &tol).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-9, "{canon:?}");
        }
    }

    #[test]
    fn pca_frame_rejects_flat_cloud() {
        let x = Matrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0]);
        assert!(matches!(
            pca_frame(&x, PcaCanon::Eig, &Tolerances::default()),
            Err(CanonError::DegenerateCovariance { .. })
        ));
    }

    #[test]
    fn centering_ignores_offsets() {
        let x = Matrix::from_fn(5, 2, |i, j| ((i * 3 + j) as f64).cos());
        let shifted = Matrix::from_fn(5, 2, |i, j| x[(i, j)] + [4.0, -2.0][j]);
        let tol = Tolerances::default();
        let r1 = pca_frame(&x, PcaCanon::Eig, &tol).unwrap();
        let r2 = pca_frame(&shifted, PcaCanon::Eig, &tol).unwrap();
        assert!(max_abs_diff(&r1, &r2) < 1e-10);
    }
}
