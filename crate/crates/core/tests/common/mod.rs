#![allow(dead_code)]

use eigcanon::graph::families::{
    complete, complete_bipartite, cycle, gnp, grid, hypercube, path, petersen, star,
};
use eigcanon::graph::{normalized_laplacian, score_matrix, Graph, ScoreVariant};
use eigcanon::linalg::{quantize, seeded_rng, sym_eig};
use eigcanon::{Matrix, Permutation, Tolerances, Vector};
use std::collections::BTreeSet;

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

pub fn perm(images: &[usize]) -> Permutation {
    Permutation::from_images(images.to_vec()).unwrap()
}

/// `B[σ(i), σ(j)] = A[i, j]`, written out entry by entry.
pub fn relabel_entrywise(a: &Matrix, images: &[usize]) -> Matrix {
    let n = a.nrows();
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(images[i], images[j])] = a[(i, j)];
        }
    }
    b
}

pub fn bit_key(m: &Matrix) -> Vec<u64> {
    m.iter().map(|&x| (x + 0.0).to_bits()).collect()
}

pub fn factorial_u128(m: usize) -> u128 {
    (1..=m as u128).product()
}

/// Thirty-five graphs on at most seven nodes, one of them colored.
pub fn small_graph_corpus() -> Vec<(String, Graph)> {
    let mut out: Vec<(String, Graph)> = Vec::new();
    for n in 3..=7 {
        out.push((format!("cycle{n}"), cycle(n)));
    }
    for n in 2..=7 {
        out.push((format!("path{n}"), path(n)));
    }
    for l in 2..=6 {
        out.push((format!("star{l}"), star(l)));
    }
    for n in 2..=6 {
        out.push((format!("complete{n}"), complete(n)));
    }
    for (a, b) in [(2, 2), (2, 3), (3, 3)] {
        out.push((format!("bipartite{a}x{b}"), complete_bipartite(a, b)));
    }
    let mut rng = seeded_rng(31);
    while out.len() < 34 {
        let n = 4 + out.len() % 4;
        let g = gnp(n, 0.45, &mut rng);
        if g.edge_count() > 0 {
            out.push((format!("gnp{}", out.len()), g));
        }
    }
    let colored = cycle(6)
        .with_colors(["a", "b", "a", "a", "b", "a"].map(String::from).to_vec())
        .unwrap();
    out.push(("cycle6-colored".into(), colored));
    out
}

/// Graphs whose normalized Laplacians have eigenspaces of multiplicity two or
/// more: structured families, random graphs, and four fixed witnesses where
/// OAP keys succeed and MAP keys fail.
pub fn superiority_corpus() -> Vec<Graph> {
    let mut out: Vec<Graph> = witness_graphs();
    for n in 5..=16 {
        out.push(cycle(n));
    }
    for n in 3..=8 {
        out.push(complete(n));
        out.push(star(n));
    }
    for (a, b) in [(2, 3), (3, 3), (3, 4), (4, 4), (2, 5)] {
        out.push(complete_bipartite(a, b));
    }
    for (r, c) in [(2, 3), (3, 3), (3, 4), (4, 4)] {
        out.push(grid(r, c));
    }
    for d in 2..=4 {
        out.push(hypercube(d));
    }
    out.push(petersen());
    let mut rng = seeded_rng(2024);
    for i in 0..400 {
        out.push(gnp(5 + i % 6, 0.35, &mut rng));
    }
    out
}

pub fn witness_graphs() -> Vec<Graph> {
    let lists: [(usize, &[(usize, usize)]); 4] = [
        (
            8,
            &[
                (0, 3),
                (0, 4),
                (1, 3),
                (1, 4),
                (1, 5),
                (2, 4),
                (2, 6),
                (3, 5),
                (5, 7),
            ],
        ),
        (
            10,
            &[
                (0, 7),
                (1, 2),
                (1, 3),
                (1, 6),
                (1, 8),
                (2, 4),
                (2, 5),
                (2, 8),
                (2, 9),
                (3, 4),
                (3, 5),
                (3, 9),
                (4, 5),
                (4, 9),
                (5, 6),
                (6, 7),
                (6, 8),
                (6, 9),
                (8, 9),
            ],
        ),
        (
            9,
            &[
                (0, 7),
                (0, 8),
                (1, 6),
                (1, 8),
                (2, 3),
                (2, 4),
                (3, 4),
                (3, 6),
                (3, 7),
                (4, 5),
                (4, 6),
                (4, 8),
                (5, 8),
                (6, 7),
                (6, 8),
                (7, 8),
            ],
        ),
        (
            8,
            &[
                (0, 1),
                (0, 6),
                (1, 4),
                (1, 7),
                (2, 6),
                (2, 7),
                (3, 4),
                (3, 5),
                (3, 7),
                (4, 6),
                (5, 6),
                (5, 7),
                (6, 7),
            ],
        ),
    ];
    lists
        .iter()
        .map(|(n, e)| Graph::from_edges(*n, e).unwrap())
        .collect()
}

pub fn multiplicity_two_spaces(g: &Graph, tol: &Tolerances) -> Vec<Matrix> {
    sym_eig(&normalized_laplacian(g), tol)
        .unwrap()
        .into_iter()
        .filter(|s| s.multiplicity() >= 2)
        .map(|s| s.basis)
        .collect()
}

/// Sorting permutations found by scanning all of `S_n`: σ is in the frame iff
/// it never places a node with a larger signature before one with a smaller.
pub struct BruteForce {
    pub frame_size: u128,
    pub aut_count: u128,
    pub canonical: BTreeSet<Vec<u64>>,
}

pub fn brute_force(g: &Graph, variant: ScoreVariant, tol: &Tolerances) -> BruteForce {
    let n = g.n();
    let scores = score_matrix(g, variant, tol).unwrap();
    let colors = g.color_ranks();
    let sig: Vec<(usize, Vec<i64>)> = (0..n)
        .map(|i| {
            (
                colors[i],
                scores
                    .row(i)
                    .iter()
                    .map(|&x| quantize(x, tol.tau_quant))
                    .collect(),
            )
        })
        .collect();
    let a = g.adjacency();
    let mut out = BruteForce {
        frame_size: 0,
        aut_count: 0,
        canonical: BTreeSet::new(),
    };
    for p in all_permutations(n) {
        let b = relabel_entrywise(a, &p);
        if b == *a && (0..n).all(|i| colors[p[i]] == colors[i]) {
            out.aut_count += 1;
        }
        let sorts = (0..n).all(|i| (0..n).all(|j| sig[i] >= sig[j] || p[i] < p[j]));
        if sorts {
            out.frame_size += 1;
            out.canonical.insert(bit_key(&b));
        }
    }
    out
}

/// Permutation search for `u ↦ −u` with entries compared within `tol`.
pub fn negation_by_search(u: &Vector, tol: f64) -> bool {
    all_permutations(u.len())
        .iter()
        .any(|p| (0..u.len()).all(|i| (u[p[i]] + u[i]).abs() <= tol))
}

/// Bound arguments `(n, N, a, b, eps)` with the bound evaluated in 30-digit
/// arithmetic.
pub type BoundPoint = ((usize, usize, f64, f64, f64), f64);

pub const CONCENTRATION_POINTS: [BoundPoint; 10] = [
    ((10, 200, 0.0, 1.0, 0.1), 0.825_812_474_399_060_6),
    ((10, 200, 0.0, 1.0, 0.2), 0.465_077_956_418_450_7),
    ((10, 200, 0.0, 1.0, 0.3), 0.178_621_178_261_586),
    ((50, 200, 0.0, 1.0, 0.1), 0.270_579_440_799_186_3),
    ((1, 2, 0.0, 1.0, 0.5), 0.606_530_659_712_633_4),
    ((100, 1000, -1.0, 1.0, 0.2), 0.110_778_781_911_357),
    ((5, 20, 2.0, 5.0, 1.0), 0.290_960_458_864_310_2),
    ((199, 200, 0.0, 1.0, 0.01), 0.000_363_329_653_297_310_8),
    ((30, 100, 0.0, 10.0, 1.5), 0.154_685_779_763_061_2),
    ((20, 10_000, -3.0, -1.0, 0.25), 0.550_773_867_900_284_6),
];
