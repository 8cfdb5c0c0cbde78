//! Standard graph families and random generators.

use super::Graph;
use crate::error::{CanonError, Result};
use rand::seq::SliceRandom;
use rand::Rng;

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, edges).expect("generated edges are valid")
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "a cycle needs at least 3 nodes");
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    build(n, &edges)
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    build(n, &edges)
}

/// Node 0 joined to `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    build(leaves + 1, &edges)
}

pub fn complete(n: usize) -> Graph {
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    build(n, &edges)
}

pub fn complete_bipartite(a: usize, b: usize) -> Graph {
    let edges: Vec<_> = (0..a)
        .flat_map(|i| (a..a + b).map(move |j| (i, j)))
        .collect();
    build(a + b, &edges)
}

pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    build(rows * cols, &edges)
}

pub fn hypercube(dim: u32) -> Graph {
    let n = 1usize << dim;
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (0..dim).map(move |b| (i, i ^ (1 << b))))
        .filter(|&(i, j)| i < j)
        .collect();
    build(n, &edges)
}

pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    build(10, &edges)
}

/// Erdős–Rényi graph: every pair is an edge independently with probability `p`.
pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    build(n, &edges)
}

/// Uniform-ish `d`-regular simple graph from the pairing model with restarts.
pub fn random_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(CanonError::InvalidArgument(format!(
            "no {d}-regular simple graph on {n} nodes"
        )));
    }
    'attempt: for _ in 0..10_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, d)).collect();
        stubs.shuffle(rng);
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return Graph::from_edges(n, &edges);
    }
    Err(CanonError::InvalidArgument(format!(
        "pairing model did not produce a simple {d}-regular graph on {n} nodes"
    )))
}

/// Nine-node colored graph whose color-sorting frame has 5!·2!·2! = 480
/// elements, all producing the same relabeled graph.
///
/// Grey nodes {0,1,4,6,8} each connect to both blue nodes {3,5}; each blue
/// node connects to both green nodes {2,7}; the greens are joined. Colors are
/// labeled 0 (grey), 1 (blue), 2 (green).
pub fn layered_colored_graph() -> Graph {
    let grey = [0, 1, 4, 6, 8];
    let blue = [3, 5];
    let green = [2, 7];
    let mut edges = Vec::new();
    for &g in &grey {
        for &b in &blue {
            edges.push((g, b));
        }
    }
    for &b in &blue {
        for &h in &green {
            edges.push((b, h));
        }
    }
    edges.push((2, 7));
    let mut colors = vec![String::new(); 9];
    for (label, members) in [("0", &grey[..]), ("1", &blue[..]), ("2", &green[..])] {
        for &i in members {
            colors[i] = label.to_string();
        }
    }
    build(9, &edges).with_colors(colors).expect("nine colors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::seeded_rng;

    #[test]
    fn family_sizes() {
        assert_eq!(cycle(5).edge_count(), 5);
        assert_eq!(path(5).edge_count(), 4);
        assert_eq!(star(4).n(), 5);
        assert_eq!(complete(5).edge_count(), 10);
        assert_eq!(complete_bipartite(2, 3).edge_count(), 6);
        assert_eq!(grid(3, 4).edge_count(), 17);
        assert_eq!(hypercube(3).edge_count(), 12);
        assert_eq!(petersen().edge_count(), 15);
        assert!(petersen().degrees().iter().all(|&d| d == 3.0));
    }

    #[test]
    fn random_regular_is_regular() {
        let g = random_regular(10, 3, &mut seeded_rng(1)).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 3.0));
        assert!(random_regular(5, 3, &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn layered_graph_shape() {
        let g = layered_colored_graph();
        assert_eq!(g.n(), 9);
        assert_eq!(g.edge_count(), 15);
    }
}
