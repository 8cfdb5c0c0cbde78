//! Permutation-equivariant canonicalization of Laplacian eigenspaces.
//!
//! Every axis `i` gets a refinement key derived from row `i` of the eigenspace
//! projector. Axes sharing a key are pooled into one summary vector, summary
//! vectors are ordered by descending key, and the first `d` of them whose
//! projections are linearly independent are orthonormalized. Keys and summary
//! vectors only depend on the projector and relabel with the nodes, so the
//! result is basis invariant and permutation equivariant.
//!
//! The MAP and FA-lap constructions are the same pipeline with coarser keys
//! (row norm, diagonal entry); MAP additionally insists on the first `d`
//! summary vectors.

use crate::eig::{self, select_independent, CanonKind, CanonOutcome, Method};
use crate::error::{CanonError, Result};
use crate::linalg::{
    ensure_orthonormal, gram_schmidt, quantize, sym_eig, Matrix, Tolerances, Vector,
};
use std::fmt;

/// Default offset added to every summary vector.
pub const DEFAULT_C: f64 = std::f64::consts::FRAC_1_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyVariant {
    /// Diagonal entry plus the multiset of off-diagonal entries of the projector row.
    Oap,
    /// Euclidean norm of the projector row.
    MapNorm,
    /// Diagonal entry of the projector.
    FaDiag,
    /// OAP key extended with node features and the keys of other eigenspaces.
    Augmented,
}

impl KeyVariant {
    pub fn name(self) -> &'static str {
        match self {
            KeyVariant::Oap => "oap",
            KeyVariant::MapNorm => "map",
            KeyVariant::FaDiag => "fa",
            KeyVariant::Augmented => "augmented",
        }
    }

    fn method(self) -> Method {
        match self {
            KeyVariant::Oap => Method::OapLap,
            KeyVariant::MapNorm => Method::Map,
            KeyVariant::FaDiag => Method::FaLap,
            KeyVariant::Augmented => Method::Augmented,
        }
    }
}

impl fmt::Display for KeyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KeyVariant {
    type Err = CanonError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oap" => Ok(KeyVariant::Oap),
            "map" => Ok(KeyVariant::MapNorm),
            "fa" => Ok(KeyVariant::FaDiag),
            "augmented" => Ok(KeyVariant::Augmented),
            _ => Err(CanonError::InvalidArgument(format!(
                "unknown key variant `{s}`"
            ))),
        }
    }
}

/// A per-axis key. Keys compare lexicographically; all keys produced for one
/// projector share a variant and a length.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefinementKey {
    pub variant: KeyVariant,
    pub key: Vec<i64>,
}

/// How keys are computed for [`oap_lap`].
#[derive(Debug, Clone, PartialEq)]
pub enum KeyConfig {
    Plain(KeyVariant),
    Augmented {
        /// `n×f` node features, relabeled together with the eigenvectors.
        features: Option<Matrix>,
        /// Projectors of the other eigenspaces of the same matrix.
        siblings: Vec<Matrix>,
    },
}

impl KeyConfig {
    pub fn variant(&self) -> KeyVariant {
        match self {
            KeyConfig::Plain(v) => *v,
            KeyConfig::Augmented { .. } => KeyVariant::Augmented,
        }
    }
}

impl From<KeyVariant> for KeyConfig {
    fn from(v: KeyVariant) -> Self {
        KeyConfig::Plain(v)
    }
}

fn oap_row_key(p: &Matrix, i: usize, tau: f64) -> Vec<i64> {
    let n = p.nrows();
    let mut off: Vec<i64> = (0..n)
        .filter(|&j| j != i)
        .map(|j| quantize(p[(i, j)], tau))
        .collect();
    off.sort_unstable_by(|a, b| b.cmp(a));
    let mut key = Vec::with_capacity(n);
    key.push(quantize(p[(i, i)], tau));
    key.extend(off);
    key
}

// Computed from the quantized row multiset so that equal OAP keys always give
// equal norm keys.
fn norm_row_key(p: &Matrix, i: usize, tau: f64) -> Vec<i64> {
    let mut q: Vec<i64> = (0..p.ncols()).map(|j| quantize(p[(i, j)], tau)).collect();
    q.sort_unstable();
    let sq: f64 = q.iter().map(|&x| (x as f64 * tau).powi(2)).sum();
    vec![quantize(sq.sqrt(), tau)]
}

/// One key per axis of the projector `p`.
///
/// `KeyVariant::Augmented` without extra information reduces to the OAP key;
/// use [`augmented_keys`] to supply features and sibling projectors.
pub fn refinement_keys(p: &Matrix, variant: KeyVariant, tau_quant: f64) -> Vec<RefinementKey> {
    let n = p.nrows();
    (0..n)
        .map(|i| RefinementKey {
            variant,
            key: match variant {
                KeyVariant::Oap | KeyVariant::Augmented => oap_row_key(p, i, tau_quant),
                KeyVariant::MapNorm => norm_row_key(p, i, tau_quant),
                KeyVariant::FaDiag => vec![quantize(p[(i, i)], tau_quant)],
            },
        })
        .collect()
}

/// OAP keys refined by node features and by the OAP keys the same axis has in
/// the other eigenspaces. Never merges axes whose plain OAP keys differ.
pub fn augmented_keys(
    p: &Matrix,
    node_features: Option<&Matrix>,
    sibling_projections: &[Matrix],
    tau_quant: f64,
) -> Result<Vec<RefinementKey>> {
    let n = p.nrows();
    if !p.is_square() {
        return Err(CanonError::DimensionMismatch(
            "projector must be square".into(),
        ));
    }
    if let Some(x) = node_features {
        if x.nrows() != n {
            return Err(CanonError::DimensionMismatch(format!(
                "feature matrix has {} rows, expected {n}",
                x.nrows()
            )));
        }
    }
    for (s, sib) in sibling_projections.iter().enumerate() {
        if sib.shape() != (n, n) {
            return Err(CanonError::DimensionMismatch(format!(
                "sibling projector {s} is {}x{}, expected {n}x{n}",
                sib.nrows(),
                sib.ncols()
            )));
        }
    }
    Ok((0..n)
        .map(|i| {
            let mut key = oap_row_key(p, i, tau_quant);
            if let Some(x) = node_features {
                key.extend(x.row(i).iter().map(|&v| quantize(v, tau_quant)));
            }
            let mut sib_keys: Vec<Vec<i64>> = sibling_projections
                .iter()
                .map(|s| oap_row_key(s, i, tau_quant))
                .collect();
            sib_keys.sort_unstable();
            key.extend(sib_keys.into_iter().flatten());
            RefinementKey {
                variant: KeyVariant::Augmented,
                key,
            }
        })
        .collect())
}

/// Axes sharing one key, with the summary vector `Σ e_j + c·1` of the group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryGroup {
    /// Member axes in ascending order.
    pub members: Vec<usize>,
    pub summary: Vector,
    /// Position in descending key order, starting at 0.
    pub rank: usize,
}

/// Groups axes by equal key, in descending key order.
pub fn summary_groups(keys: &[RefinementKey], c: f64) -> Vec<SummaryGroup> {
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[b].cmp(&keys[a]).then(a.cmp(&b)));
    let mut groups: Vec<SummaryGroup> = Vec::new();
    let mut prev: Option<&RefinementKey> = None;
    for &i in &order {
        if prev != Some(&keys[i]) {
            groups.push(SummaryGroup {
                members: Vec::new(),
                summary: Vector::from_element(n, c),
                rank: groups.len(),
            });
            prev = Some(&keys[i]);
        }
        let g = groups.last_mut().expect("group was just pushed");
        g.members.push(i);
        g.summary[i] += 1.0;
    }
    for g in &mut groups {
        g.members.sort_unstable();
    }
    groups
}

/// Permutation-equivariant, basis-invariant canonical basis of `span(u)`.
///
/// Returns `Failed` (as a value) when fewer than `d` summary projections are
/// independent; that includes every input with a nontrivial symmetry that
/// negates or rotates the eigenspace. With `KeyVariant::MapNorm` only the
/// first `d` summary vectors are eligible.
pub fn oap_lap(u: &Matrix, keys: &KeyConfig, c: f64, tol: &Tolerances) -> Result<CanonOutcome> {
    ensure_orthonormal(u, 1e-9)?;
    if !c.is_finite() {
        return Err(CanonError::InvalidArgument(format!(
            "c must be finite, got {c}"
        )));
    }
    let (n, d) = u.shape();
    let p = u * u.transpose();
    let variant = keys.variant();
    let method = variant.method();
    let key_list = match keys {
        KeyConfig::Plain(v) => refinement_keys(&p, *v, tol.tau_quant),
        KeyConfig::Augmented { features, siblings } => {
            augmented_keys(&p, features.as_ref(), siblings, tol.tau_quant)?
        }
    };
    let groups = summary_groups(&key_list, c);
    let k = groups.len();
    if d == 0 {
        return Ok(CanonOutcome::single(
            Matrix::zeros(n, 0),
            method,
            Some(vec![]),
        ));
    }
    if k < d {
        return Ok(CanonOutcome::failed(
            method,
            format!("only {k} distinct keys for a {d}-dimensional eigenspace"),
        ));
    }
    let eligible = if variant == KeyVariant::MapNorm { d } else { k };
    let candidates = groups
        .iter()
        .take(eligible)
        .map(|g| (g.rank, &p * &g.summary));
    let (ranks, vecs) = select_independent(candidates, d, tol);
    if vecs.len() < d {
        let mut out = CanonOutcome::failed(
            method,
            format!(
                "only {} of {d} summary projections independent among {eligible} eligible groups",
                vecs.len()
            ),
        );
        out.witness = Some(ranks);
        return Ok(out);
    }
    let form = gram_schmidt(&Matrix::from_columns(&vecs), tol.eps_rank)?;
    Ok(CanonOutcome::single(form, method, Some(ranks)))
}

/// How [`canonicalize_pe`] treats each eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PeConfig {
    pub method: Method,
    /// Key variant used by `Method::MapFull`.
    pub variant: KeyVariant,
    pub c: f64,
    /// Drop eigenspaces whose eigenvalue is within `eps_eig` of zero.
    pub skip_null: bool,
}

impl Default for PeConfig {
    fn default() -> Self {
        Self {
            method: Method::OapLap,
            variant: KeyVariant::Oap,
            c: DEFAULT_C,
            skip_null: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceReport {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub kind: CanonKind,
    pub method: Method,
    pub witness: Option<Vec<usize>>,
    /// Number of this space's columns written into the encoding.
    pub columns_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeResult {
    /// `n × k` positional encoding, one node per row.
    pub pe: Matrix,
    pub spaces: Vec<SpaceReport>,
    /// Zero columns appended because fewer than `k` eigenvectors were available.
    pub padded_columns: usize,
}

impl PeResult {
    pub fn count(&self, kind: CanonKind) -> usize {
        self.spaces.iter().filter(|s| s.kind == kind).count()
    }
}

fn canonicalize_space(
    basis: &Matrix,
    cfg: &PeConfig,
    tol: &Tolerances,
) -> Result<(CanonOutcome, Matrix)> {
    let d = basis.ncols();
    let plain = |v: KeyVariant| -> Result<(CanonOutcome, Matrix)> {
        if d == 1 {
            let out = eig::map_full(
                &basis.column(0).into_owned(),
                &KeyConfig::Plain(v),
                cfg.c,
                tol,
            )?;
            let chosen = out.forms[0].clone();
            Ok((
                CanonOutcome {
                    method: v.method(),
                    ..out
                },
                chosen,
            ))
        } else {
            let out = oap_lap(basis, &KeyConfig::Plain(v), cfg.c, tol)?;
            let chosen = out.single_form().cloned().unwrap_or_else(|| basis.clone());
            Ok((out, chosen))
        }
    };
    match cfg.method {
        Method::SignFirst | Method::OapEig => {
            let out = if d == 1 && cfg.method == Method::SignFirst {
                eig::sign_canon_first_nonzero(&basis.column(0).into_owned(), tol.eps_zero)?
            } else {
                eig::oap_eig(basis, tol)?
            };
            let chosen = out.forms[0].clone();
            Ok((out, chosen))
        }
        Method::OapLap => plain(KeyVariant::Oap),
        Method::Map => plain(KeyVariant::MapNorm),
        Method::FaLap => plain(KeyVariant::FaDiag),
        Method::MapFull => {
            let (out, chosen) = plain(cfg.variant)?;
            Ok((
                CanonOutcome {
                    method: Method::MapFull,
                    ..out
                },
                chosen,
            ))
        }
        Method::Augmented => Err(CanonError::InvalidArgument(
            "augmented keys need per-space siblings; call oap_lap directly".into(),
        )),
        Method::Identity => Ok((
            CanonOutcome::single(basis.clone(), Method::Identity, None),
            basis.clone(),
        )),
    }
}

/// Canonical Laplacian positional encoding with `k` columns.
///
/// Eigenspaces are visited in ascending eigenvalue order and their canonical
/// bases concatenated until `k` columns are filled. A `Fallback` space
/// contributes its first form (the raw eigenvector); a `Failed` space
/// contributes its raw basis. Missing columns are zero padded.
pub fn canonicalize_pe(l: &Matrix, k: usize, cfg: &PeConfig, tol: &Tolerances) -> Result<PeResult> {
    tol.validate()?;
    let n = l.nrows();
    let spaces = sym_eig(l, tol)?;
    let mut pe = Matrix::zeros(n, k);
    let mut filled = 0;
    let mut reports = Vec::new();
    for space in spaces {
        if filled >= k {
            break;
        }
        if cfg.skip_null && space.eigenvalue.abs() <= tol.eps_eig {
            continue;
        }
        let (outcome, chosen) = canonicalize_space(&space.basis, cfg, tol)?;
        let take = chosen.ncols().min(k - filled);
        for j in 0..take {
            pe.set_column(filled + j, &chosen.column(j));
        }
        filled += take;
        reports.push(SpaceReport {
            eigenvalue: space.eigenvalue,
            multiplicity: space.multiplicity(),
            kind: outcome.kind,
            method: outcome.method,
            witness: outcome.witness,
            columns_used: take,
        });
    }
    Ok(PeResult {
        pe,
        spaces: reports,
        padded_columns: k - filled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    const TAU: f64 = 1e-6;

    #[test]
    fn norm_keys_merge_where_oap_keys_split() {
        let p = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let map = refinement_keys(&p, KeyVariant::MapNorm, TAU);
        let oap = refinement_keys(&p, KeyVariant::Oap, TAU);
        assert_eq!(map[0], map[1]);
        assert_ne!(oap[0], oap[1]);
    }

    #[test]
    fn diagonal_keys_merge_where_oap_keys_split() {
        let p = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 1.0]);
        let fa = refinement_keys(&p, KeyVariant::FaDiag, TAU);
        let oap = refinement_keys(&p, KeyVariant::Oap, TAU);
        assert_eq!(fa[0], fa[1]);
        assert_ne!(oap[0], oap[1]);
    }

    #[test]
    fn uniform_projector_has_one_key() {
        let n = 5;
        let p = Matrix::from_element(n, n, 1.0 / n as f64);
        for v in [KeyVariant::Oap, KeyVariant::MapNorm, KeyVariant::FaDiag] {
            let keys = refinement_keys(&p, v, TAU);
            assert!(keys.iter().all(|k| k == &keys[0]), "{v}");
        }
    }

    fn key(v: i64) -> RefinementKey {
        RefinementKey {
            variant: KeyVariant::FaDiag,
            key: vec![v],
        }
    }

    #[test]
    fn summary_groups_examples() {
        let g = summary_groups(&[key(2), key(7), key(5)], 0.0);
        assert_eq!(g.len(), 3);
        assert_eq!(g[0].members, vec![1]);
        assert_eq!(g[1].members, vec![2]);
        assert_eq!(g[2].members, vec![0]);
        assert_eq!(g[0].summary, Vector::from_row_slice(&[0.0, 1.0, 0.0]));

        let g = summary_groups(&[key(1), key(1), key(1)], 0.0);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].summary, Vector::from_element(3, 1.0));

        let g = summary_groups(&[key(9), key(9), key(4)], 0.5);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].members, vec![0, 1]);
        assert_eq!(g[0].summary, Vector::from_row_slice(&[1.5, 1.5, 0.5]));
        assert_eq!(g[1].summary, Vector::from_row_slice(&[0.5, 0.5, 1.5]));
    }

    #[test]
    fn oap_lap_negation_symmetric_vector_fails() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = Matrix::from_column_slice(2, 1, &[-h, h]);
        let out = oap_lap(
            &u,
            &KeyConfig::Plain(KeyVariant::Oap),
            0.0,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(out.kind, CanonKind::Failed);
    }

    #[test]
    fn oap_lap_two_element_equivariance() {
        let s5 = 5f64.sqrt();
        let u = Matrix::from_column_slice(2, 1, &[2.0 / s5, 1.0 / s5]);
        let tol = Tolerances::default();
        let cfg = KeyConfig::Plain(KeyVariant::Oap);
        let base = oap_lap(&u, &cfg, DEFAULT_C, &tol).unwrap();
        assert!(base.is_single());
        let swap = crate::perm::Permutation::from_images(vec![1, 0]).unwrap();
        for p in [crate::perm::Permutation::identity(2), swap] {
            let out = oap_lap(&p.apply_rows(&u), &cfg, DEFAULT_C, &tol).unwrap();
            let expected = p.apply_rows(&base.forms[0]);
            assert!(max_abs_diff(&out.forms[0], &expected) < 1e-12);
        }
        let neg = oap_lap(&(-&u), &cfg, DEFAULT_C, &tol).unwrap();
        assert!(max_abs_diff(&neg.forms[0], &base.forms[0]) < 1e-12);
    }

    #[test]
    fn augmented_without_extras_equals_oap() {
        let q = crate::linalg::random_orthonormal_with(6, 2, &mut crate::linalg::seeded_rng(3));
        let p = &q * q.transpose();
        let plain = refinement_keys(&p, KeyVariant::Oap, TAU);
        let aug = augmented_keys(&p, None, &[], TAU).unwrap();
        assert_eq!(
            plain.iter().map(|k| &k.key).collect::<Vec<_>>(),
            aug.iter().map(|k| &k.key).collect::<Vec<_>>()
        );
    }

    #[test]
    fn augmented_dimension_mismatch() {
        let p = Matrix::identity(3, 3);
        let x = Matrix::zeros(2, 1);
        assert!(matches!(
            augmented_keys(&p, Some(&x), &[], TAU),
            Err(CanonError::DimensionMismatch(_))
        ));
        assert!(matches!(
            augmented_keys(&p, None, &[Matrix::identity(2, 2)], TAU),
            Err(CanonError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn variant_names_parse() {
        for v in [
            KeyVariant::Oap,
            KeyVariant::MapNorm,
            KeyVariant::FaDiag,
            KeyVariant::Augmented,
        ] {
            assert_eq!(v.name().parse::<KeyVariant>().unwrap(), v);
        }
    }
}
