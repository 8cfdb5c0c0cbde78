mod common;

use common::*;
use eigcanon::eig::{map_full, oap_eig};
use eigcanon::graph::families::gnp;
use eigcanon::graph::sampling::concentration_bound;
use eigcanon::graph::{canonical_set, frame_of_graph, Graph, ScoreVariant};
use eigcanon::lap::{oap_lap, refinement_keys, DEFAULT_C};
use eigcanon::linalg::{
    gram_schmidt, max_abs_diff, orthonormality_deviation, random_orthogonal_with,
    random_orthonormal_with, random_permutation_with, seeded_rng,
};
use eigcanon::{CanonKind, KeyConfig, KeyVariant, Matrix, Tolerances, Vector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeSet;

fn gaussian(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = seeded_rng(seed);
    Matrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn variant() -> impl Strategy<Value = KeyVariant> {
    prop_oneof![
        Just(KeyVariant::Oap),
        Just(KeyVariant::MapNorm),
        Just(KeyVariant::FaDiag)
    ]
}

fn random_graph(n: usize, seed: u64) -> Graph {
    gnp(n, 0.4, &mut seeded_rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gram_schmidt_is_orthonormal_and_keeps_the_span(n in 1usize..10, extra in 0usize..10, seed: u64) {
        let d = 1 + extra % n;
        let v = gaussian(n, d, seed);
        let q = gram_schmidt(&v, 1e-6).unwrap();
        prop_assert!(orthonormality_deviation(&q) < 1e-10);
        let proj = v.clone() * (v.transpose() * &v).try_inverse().unwrap() * v.transpose();
        prop_assert!(max_abs_diff(&(&q * q.transpose()), &proj) < 1e-8);
    }

    #[test]
    fn gram_schmidt_commutes_with_row_actions(n in 1usize..10, extra in 0usize..10, seed: u64) {
        let d = 1 + extra % n;
        let v = gaussian(n, d, seed);
        let mut rng = seeded_rng(seed ^ 1);
        let p = random_permutation_with(n, &mut rng);
        let o = random_orthogonal_with(n, &mut rng);
        let q = gram_schmidt(&v, 1e-6).unwrap();
        prop_assert!(max_abs_diff(&gram_schmidt(&p.apply_rows(&v), 1e-6).unwrap(), &p.apply_rows(&q)) < 1e-8);
        prop_assert!(max_abs_diff(&gram_schmidt(&(&o * &v), 1e-6).unwrap(), &(&o * &q)) < 1e-8);
    }

    #[test]
    fn oap_eig_is_total_and_basis_invariant(n in 2usize..12, extra in 0usize..4, seed: u64) {
        let d = 1 + extra % (n - 1).min(4);
        let mut rng = seeded_rng(seed);
        let u = random_orthonormal_with(n, d, &mut rng);
        let q = random_orthogonal_with(d, &mut rng);
        let tol = Tolerances::default();
        let a = oap_eig(&u, &tol).unwrap();
        let b = oap_eig(&(&u * q), &tol).unwrap();
        prop_assert_eq!(a.kind, CanonKind::Single);
        prop_assert!(max_abs_diff(a.single_form().unwrap(), b.single_form().unwrap()) < 1e-6);
    }

    #[test]
    fn oap_lap_is_permutation_equivariant_and_basis_invariant(
        n in 2usize..12, extra in 0usize..4, v in variant(), seed: u64,
    ) {
        let d = 1 + extra % (n - 1).min(4);
        let mut rng = seeded_rng(seed);
        let u = random_orthonormal_with(n, d, &mut rng);
        let p = random_permutation_with(n, &mut rng);
        let q = random_orthogonal_with(d, &mut rng);
        let tol = Tolerances::default();
        let keys = KeyConfig::Plain(v);
        let base = oap_lap(&u, &keys, DEFAULT_C, &tol).unwrap();
        let moved = oap_lap(&(p.apply_rows(&u) * q), &keys, DEFAULT_C, &tol).unwrap();
        prop_assert_eq!(base.kind, moved.kind);
        if let Some(f) = base.single_form() {
            prop_assert!(max_abs_diff(&p.apply_rows(f), moved.single_form().unwrap()) < 1e-6);
            prop_assert!(max_abs_diff(&(f * f.transpose()), &(&u * u.transpose())) < 1e-8);
        }
    }

    #[test]
    fn map_full_ignores_sign_and_follows_permutations(n in 2usize..12, seed: u64) {
        let mut rng = seeded_rng(seed);
        let u = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let p = random_permutation_with(n, &mut rng);
        let tol = Tolerances::default();
        let keys = KeyConfig::Plain(KeyVariant::Oap);
        let a = map_full(&u, &keys, DEFAULT_C, &tol).unwrap();
        let b = map_full(&-&u, &keys, DEFAULT_C, &tol).unwrap();
        let c = map_full(&p.apply_vec(&u), &keys, DEFAULT_C, &tol).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        prop_assert_eq!(a.kind, c.kind);
        if a.kind == CanonKind::Single {
            prop_assert!(max_abs_diff(&a.forms[0], &b.forms[0]) < 1e-12);
            prop_assert!(max_abs_diff(&p.apply_rows(&a.forms[0]), &c.forms[0]) < 1e-12);
        }
    }

    #[test]
    fn oap_keys_refine_map_and_diagonal_keys(n in 2usize..12, extra in 0usize..4, seed: u64) {
        let d = 1 + extra % (n - 1).min(4);
        let u = random_orthonormal_with(n, d, &mut seeded_rng(seed));
        let p = &u * u.transpose();
        let oap = refinement_keys(&p, KeyVariant::Oap, 1e-6);
        let map = refinement_keys(&p, KeyVariant::MapNorm, 1e-6);
        let fa = refinement_keys(&p, KeyVariant::FaDiag, 1e-6);
        for i in 0..n {
            for j in 0..n {
                if oap[i] == oap[j] {
                    prop_assert_eq!(&map[i], &map[j]);
                    prop_assert_eq!(&fa[i], &fa[j]);
                }
            }
        }
    }

    #[test]
    fn relabeling_preserves_frame_and_canonical_set(n in 3usize..8, seed: u64) {
        let g = random_graph(n, seed);
        let p = random_permutation_with(n, &mut seeded_rng(seed ^ 2));
        let h = g.relabel(&p);
        let tol = Tolerances::default();
        for v in ScoreVariant::ALL {
            let fg = frame_of_graph(&g, v, &tol).unwrap();
            let fh = frame_of_graph(&h, v, &tol).unwrap();
            prop_assert_eq!(fg.size(), fh.size());
            let keys = |g: &Graph, f| -> BTreeSet<Vec<u64>> {
                canonical_set(g, f, 10_000, &mut seeded_rng(0)).unwrap().graphs.iter().map(bit_key).collect()
            };
            prop_assert_eq!(keys(&g, &fg), keys(&h, &fh));
        }
    }

    #[test]
    fn oap_frame_is_no_larger_than_fa_frame(n in 3usize..12, seed: u64) {
        let g = random_graph(n, seed);
        let tol = Tolerances::default();
        let oap = frame_of_graph(&g, ScoreVariant::Oap, &tol).unwrap();
        let fa = frame_of_graph(&g, ScoreVariant::Fa, &tol).unwrap();
        prop_assert!(oap.size() <= fa.size());
        let fa_group = fa.group_of();
        for group in &oap.tie_groups {
            prop_assert!(group.iter().all(|&i| fa_group[i] == fa_group[group[0]]));
        }
    }

    #[test]
    fn canonicalization_is_deterministic(n in 2usize..12, extra in 0usize..4, v in variant(), seed: u64) {
        let d = 1 + extra % (n - 1).min(4);
        let u = random_orthonormal_with(n, d, &mut seeded_rng(seed));
        let tol = Tolerances::default();
        let a = oap_lap(&u, &KeyConfig::Plain(v), DEFAULT_C, &tol).unwrap();
        let b = oap_lap(&u, &KeyConfig::Plain(v), DEFAULT_C, &tol).unwrap();
        prop_assert_eq!(a.forms.iter().map(bit_key).collect::<Vec<_>>(), b.forms.iter().map(bit_key).collect::<Vec<_>>());
        prop_assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn concentration_bound_is_a_probability_decreasing_in_eps(
        n in 1usize..100, extra in 1usize..200, e1 in 0.001f64..2.0, e2 in 0.001f64..2.0,
    ) {
        let big = n + extra;
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let b_lo = concentration_bound(n, big, 0.0, 1.0, lo).unwrap();
        let b_hi = concentration_bound(n, big, 0.0, 1.0, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&b_lo));
        prop_assert!(b_hi <= b_lo);
    }

    #[test]
    fn permutation_group_laws(n in 1usize..10, seed: u64) {
        let mut rng = seeded_rng(seed);
        let p = random_permutation_with(n, &mut rng);
        let q = random_permutation_with(n, &mut rng);
        prop_assert!(p.compose(&p.inverse()).is_identity());
        let x = gaussian(n, 2, seed);
        prop_assert_eq!(p.compose(&q).apply_rows(&x), p.apply_rows(&q.apply_rows(&x)));
        prop_assert_eq!(p.apply_rows(&x), p.to_matrix() * &x);
        let a = x.clone() * x.transpose();
        prop_assert_eq!(p.conjugate(&a), relabel_entrywise(&a, p.images()));
    }
}
