//! Eigenvector canonicalization without permutation equivariance (first
//! nonzero sign rule, orthogonalized axis projection), the negation-symmetry
//! test for sign canonicalizability, and the MAP-full sign canonicalization
//! with its `{u, -u}` fallback.

use crate::error::{CanonError, Result};
use crate::lap::{self, KeyConfig};
use crate::linalg::{
    ensure_orthonormal, gram_schmidt, quantize, residual_accept, Matrix, Tolerances, Vector,
};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonKind {
    Single,
    Fallback,
    Failed,
}

impl fmt::Display for CanonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CanonKind::Single => "Single",
            CanonKind::Fallback => "Fallback",
            CanonKind::Failed => "Failed",
        })
    }
}

/// Which canonicalization produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    SignFirst,
    OapEig,
    OapLap,
    Map,
    FaLap,
    MapFull,
    Augmented,
    /// No canonicalization at all; the input is returned unchanged.
    Identity,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::SignFirst,
        Method::OapEig,
        Method::OapLap,
        Method::Map,
        Method::FaLap,
        Method::MapFull,
        Method::Augmented,
        Method::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SignFirst => "sign-first",
            Method::OapEig => "oap-eig",
            Method::OapLap => "oap-lap",
            Method::Map => "map",
            Method::FaLap => "fa-lap",
            Method::MapFull => "map-full",
            Method::Augmented => "oap-augmented",
            Method::Identity => "identity",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = CanonError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CanonError::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Result of a canonicalization attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonOutcome {
    pub kind: CanonKind,
    /// One form for `Single`, at least two for `Fallback`, none for `Failed`.
    pub forms: Vec<Matrix>,
    pub method: Method,
    /// Indices (axes or summary groups, 0-based) whose projections were used.
    pub witness: Option<Vec<usize>>,
    pub diagnostic: Option<String>,
}

impl CanonOutcome {
    pub fn single(form: Matrix, method: Method, witness: Option<Vec<usize>>) -> Self {
        Self {
            kind: CanonKind::Single,
            forms: vec![form],
            method,
            witness,
            diagnostic: None,
        }
    }

    pub fn fallback(forms: Vec<Matrix>, method: Method) -> Self {
        debug_assert!(forms.len() >= 2);
        Self {
            kind: CanonKind::Fallback,
            forms,
            method,
            witness: None,
            diagnostic: None,
        }
    }

    pub fn failed(method: Method, diagnostic: impl Into<String>) -> Self {
        Self {
            kind: CanonKind::Failed,
            forms: Vec::new(),
            method,
            witness: None,
            diagnostic: Some(diagnostic.into()),
        }
    }

    pub fn is_single(&self) -> bool {
        self.kind == CanonKind::Single
    }

    /// The unique canonical form, if there is one.
    pub fn single_form(&self) -> Option<&Matrix> {
        match self.kind {
            CanonKind::Single => self.forms.first(),
            _ => None,
        }
    }
}

fn column(v: &Vector) -> Matrix {
    Matrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Sign canonicalization by the first entry whose magnitude exceeds `eps_zero`.
pub fn sign_canon_first_nonzero(u: &Vector, eps_zero: f64) -> Result<CanonOutcome> {
    let (idx, &lead) = u
        .iter()
        .enumerate()
        .find(|(_, x)| x.abs() > eps_zero)
        .ok_or(CanonError::ZeroVector)?;
    if !lead.is_finite() {
        return Err(CanonError::NonFinite { row: idx, col: 0 });
    }
    let out = if lead > 0.0 { u.clone() } else { -u };
    Ok(CanonOutcome::single(
        column(&out),
        Method::SignFirst,
        Some(vec![idx]),
    ))
}

/// Greedy selection of `d` linearly independent directions from `candidates`,
/// scanned in order. Candidates with norm at or below `eps_zero` are skipped;
/// the rest are normalized and kept if they pass [`residual_accept`].
///
/// Returns the tags of the accepted candidates and the accepted unit vectors.
pub(crate) fn select_independent<I>(
    candidates: I,
    d: usize,
    tol: &Tolerances,
) -> (Vec<usize>, Vec<Vector>)
where
    I: IntoIterator<Item = (usize, Vector)>,
{
    let mut tags = Vec::with_capacity(d);
    let mut accepted = Vec::with_capacity(d);
    let mut span: Vec<Vector> = Vec::with_capacity(d);
    if d == 0 {
        return (tags, accepted);
    }
    for (tag, v) in candidates {
        let norm = v.norm();
        if norm <= tol.eps_zero {
            continue;
        }
        let unit = v / norm;
        let basis = if span.is_empty() {
            Matrix::zeros(unit.len(), 0)
        } else {
            Matrix::from_columns(&span)
        };
        let (ok, residual) = residual_accept(&unit, &basis, tol.eps_rank);
        if ok {
            let rn = residual.norm();
            span.push(residual / rn);
            accepted.push(unit);
            tags.push(tag);
            if accepted.len() == d {
                break;
            }
        }
    }
    (tags, accepted)
}

/// Orthogonalized axis projection: canonical basis of `span(u)` built from the
/// projections of the lowest-index standard axes. Basis invariant, always
/// succeeds on orthonormal input, not permutation equivariant.
pub fn oap_eig(u: &Matrix, tol: &Tolerances) -> Result<CanonOutcome> {
    ensure_orthonormal(u, 1e-9)?;
    let (n, d) = u.shape();
    let p = u * u.transpose();
    let (idx, vecs) = select_independent((0..n).map(|i| (i, p.column(i).into_owned())), d, tol);
    if vecs.len() < d {
        return Err(CanonError::IndexSearchExhausted {
            found: vecs.len(),
            needed: d,
        });
    }
    let form = if d == 0 {
        Matrix::zeros(n, 0)
    } else {
        gram_schmidt(&Matrix::from_columns(&vecs), tol.eps_rank)?
    };
    Ok(CanonOutcome::single(form, Method::OapEig, Some(idx)))
}

/// True iff the entries of `u`, rounded to the `tau_quant` grid, form a
/// multiset equal to that of `-u`; equivalently some permutation maps `u` to `-u`.
pub fn is_sign_uncanonicalizable(u: &Vector, tau_quant: f64) -> bool {
    let mut pos: Vec<i64> = u.iter().map(|&x| quantize(x, tau_quant)).collect();
    let mut neg: Vec<i64> = pos.iter().map(|q| -q).collect();
    pos.sort_unstable();
    neg.sort_unstable();
    pos == neg
}

/// MAP-full sign canonicalization: the permutation-equivariant one-dimensional
/// OAP pipeline when it succeeds, otherwise the fallback set `{u, -u}`.
pub fn map_full(u: &Vector, keys: &KeyConfig, c: f64, tol: &Tolerances) -> Result<CanonOutcome> {
    let norm = u.norm();
    if !norm.is_finite() {
        return Err(CanonError::NonFinite { row: 0, col: 0 });
    }
    if norm <= tol.eps_zero {
        return Err(CanonError::ZeroVector);
    }
    let unit = column(&(u / norm));
    let inner = lap::oap_lap(&unit, keys, c, tol)?;
    match inner.single_form() {
        Some(form) => {
            let dot: f64 = form.column(0).dot(u);
            let out = if dot >= 0.0 { u.clone() } else { -u };
            Ok(CanonOutcome {
                kind: CanonKind::Single,
                forms: vec![column(&out)],
                method: Method::MapFull,
                witness: inner.witness,
                diagnostic: None,
            })
        }
        None => {
            let mut out = CanonOutcome::fallback(vec![column(u), column(&-u)], Method::MapFull);
            out.diagnostic = inner.diagnostic;
            Ok(out)
        }
    }
}
