//! Graph-level frames and canonicalizations.
//!
//! A graph frame is the set of permutations that sort the rows of a
//! permutation-equivariant score matrix built from the eigenspaces of the
//! normalized Laplacian. Nodes with equal rows form tie groups; the frame size
//! is the product of the tie-group factorials. Relabeling the graph by every
//! frame element gives the canonical set, whose size times the automorphism
//! count equals the frame size.

pub mod families;
pub mod io;
pub mod sampling;

use crate::error::{CanonError, Result};
use crate::lap::{refinement_keys, KeyVariant};
use crate::linalg::{
    asymmetry, check_finite, factorial_product, quantize, sym_eig, Matrix, Tolerances,
};
use crate::perm::Permutation;
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

pub use sampling::{concentration_bound, sample_without_replacement};

/// Default cap on the number of search-tree nodes visited while counting automorphisms.
pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;

/// Undirected graph with a dense symmetric adjacency matrix and optional node colors.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Matrix,
    colors: Option<Vec<String>>,
}

impl Graph {
    /// Checks symmetry, finiteness and an all-zero diagonal.
    pub fn new(adjacency: Matrix) -> Result<Self> {
        check_finite(&adjacency)?;
        if !adjacency.is_square() {
            return Err(CanonError::DimensionMismatch(format!(
                "adjacency must be square, got {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        let asym = asymmetry(&adjacency);
        if asym > 0.0 {
            return Err(CanonError::NotSymmetric { asymmetry: asym });
        }
        if let Some(i) = (0..adjacency.nrows()).find(|&i| adjacency[(i, i)] != 0.0) {
            return Err(CanonError::InvalidArgument(format!(
                "self-loop at node {i}"
            )));
        }
        Ok(Self {
            adjacency,
            colors: None,
        })
    }

    /// Unweighted graph on `n` nodes. Duplicate edges collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = Matrix::zeros(n, n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(CanonError::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(CanonError::InvalidArgument(format!(
                    "self-loop at node {u}"
                )));
            }
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        Self::new(a)
    }

    pub fn with_colors(mut self, colors: Vec<String>) -> Result<Self> {
        if colors.len() != self.n() {
            return Err(CanonError::DimensionMismatch(format!(
                "{} colors for {} nodes",
                colors.len(),
                self.n()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn colors(&self) -> Option<&[String]> {
        self.colors.as_deref()
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[(i, j)] != 0.0)
            .count()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.adjacency.row_iter().map(|r| r.sum()).collect()
    }

    /// Node `i` becomes node `p(i)`.
    pub fn relabel(&self, p: &Permutation) -> Graph {
        Graph {
            adjacency: p.conjugate(&self.adjacency),
            colors: self.colors.as_ref().map(|c| p.apply_slice(c)),
        }
    }

    /// Ranks of the node colors, all zero when the graph is uncolored.
    ///
    /// Labels are ordered numerically when every label parses as an integer,
    /// lexicographically otherwise.
    pub fn color_ranks(&self) -> Vec<usize> {
        let Some(colors) = &self.colors else {
            return vec![0; self.n()];
        };
        let numeric: Option<Vec<i64>> = colors.iter().map(|c| c.parse().ok()).collect();
        match numeric {
            Some(nums) => dense_ranks(&nums),
            None => dense_ranks(colors),
        }
    }
}

fn dense_ranks<T: Ord + Clone>(xs: &[T]) -> Vec<usize> {
    let mut distinct: Vec<T> = xs.to_vec();
    distinct.sort();
    distinct.dedup();
    xs.iter()
        .map(|x| distinct.binary_search(x).expect("value is present"))
        .collect()
}

/// `I − D^(−1/2) A D^(−1/2)`, with `D^(−1/2)` set to zero on isolated nodes.
pub fn normalized_laplacian(g: &Graph) -> Matrix {
    let n = g.n();
    let inv_sqrt: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * g.adjacency[(i, j)] * inv_sqrt[j]
    })
}

/// Which per-eigenspace signature fills the score matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreVariant {
    /// Diagonal of each eigenspace projector.
    Fa,
    /// Dense rank (descending) of the OAP refinement keys of each eigenspace.
    Oap,
}

impl ScoreVariant {
    pub const ALL: [ScoreVariant; 2] = [ScoreVariant::Fa, ScoreVariant::Oap];

    pub fn name(self) -> &'static str {
        match self {
            ScoreVariant::Fa => "fa-graph",
            ScoreVariant::Oap => "oap-graph",
        }
    }
}

impl fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `n×k` matrix with one column per eigenspace of the normalized Laplacian,
/// in ascending eigenvalue order.
pub fn score_matrix(g: &Graph, variant: ScoreVariant, tol: &Tolerances) -> Result<Matrix> {
    let n = g.n();
    let spaces = sym_eig(&normalized_laplacian(g), tol)?;
    let mut s = Matrix::zeros(n, spaces.len());
    for (l, space) in spaces.iter().enumerate() {
        let p = space.projector();
        match variant {
            ScoreVariant::Fa => {
                for i in 0..n {
                    s[(i, l)] = p[(i, i)];
                }
            }
            ScoreVariant::Oap => {
                let keys = refinement_keys(&p, KeyVariant::Oap, tol.tau_quant);
                let mut distinct = keys.clone();
                distinct.sort_by(|a, b| b.cmp(a));
                distinct.dedup();
                for (i, k) in keys.iter().enumerate() {
                    let rank = distinct
                        .binary_search_by(|probe| k.cmp(probe))
                        .expect("key is present");
                    s[(i, l)] = rank as f64;
                }
            }
        }
    }
    Ok(s)
}

/// The permutations that sort nodes by (color, quantized score row).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFrame {
    pub variant: ScoreVariant,
    /// Tie groups in ascending signature order; members ascending.
    pub tie_groups: Vec<Vec<usize>>,
    n: usize,
}

pub fn frame_of_graph(g: &Graph, variant: ScoreVariant, tol: &Tolerances) -> Result<GraphFrame> {
    let scores = score_matrix(g, variant, tol)?;
    let colors = g.color_ranks();
    let mut groups: BTreeMap<(usize, Vec<i64>), Vec<usize>> = BTreeMap::new();
    for (i, (&color, row)) in colors.iter().zip(scores.row_iter()).enumerate() {
        let row: Vec<i64> = row.iter().map(|&x| quantize(x, tol.tau_quant)).collect();
        groups.entry((color, row)).or_default().push(i);
    }
    Ok(GraphFrame {
        variant,
        tie_groups: groups.into_values().collect(),
        n: g.n(),
    })
}

impl GraphFrame {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> BigUint {
        let sizes: Vec<usize> = self.tie_groups.iter().map(Vec::len).collect();
        factorial_product(&sizes)
    }

    /// Tie-group index of every node.
    pub fn group_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (t, group) in self.tie_groups.iter().enumerate() {
            for &i in group {
                out[i] = t;
            }
        }
        out
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.tie_groups.len());
        let mut acc = 0;
        for g in &self.tie_groups {
            offsets.push(acc);
            acc += g.len();
        }
        offsets
    }

    /// True iff `sigma` sends every tie group onto its block of positions.
    pub fn contains(&self, sigma: &Permutation) -> bool {
        if sigma.len() != self.n {
            return false;
        }
        let offsets = self.offsets();
        self.tie_groups.iter().zip(offsets).all(|(g, off)| {
            g.iter()
                .all(|&i| (off..off + g.len()).contains(&sigma.image(i)))
        })
    }

    /// Every sorting permutation, lexicographic within each group with the
    /// last group varying fastest.
    pub fn iter(&self) -> FrameIter<'_> {
        let offsets = self.offsets();
        FrameIter {
            frame: self,
            state: self
                .tie_groups
                .iter()
                .zip(&offsets)
                .map(|(g, &off)| (off..off + g.len()).collect())
                .collect(),
            done: false,
        }
    }

    /// A uniformly random sorting permutation.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let mut map = vec![0; self.n];
        for (g, off) in self.tie_groups.iter().zip(self.offsets()) {
            let mut block: Vec<usize> = (off..off + g.len()).collect();
            block.shuffle(rng);
            for (&i, &pos) in g.iter().zip(&block) {
                map[i] = pos;
            }
        }
        Permutation::from_images_unchecked(map)
    }

    fn assemble(&self, state: &[Vec<usize>]) -> Permutation {
        let mut map = vec![0; self.n];
        for (g, block) in self.tie_groups.iter().zip(state) {
            for (&i, &pos) in g.iter().zip(block) {
                map[i] = pos;
            }
        }
        Permutation::from_images_unchecked(map)
    }
}

pub struct FrameIter<'a> {
    frame: &'a GraphFrame,
    state: Vec<Vec<usize>>,
    done: bool,
}

fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let Some(i) = (0..xs.len() - 1).rev().find(|&i| xs[i] < xs[i + 1]) else {
        xs.sort_unstable();
        return false;
    };
    let j = (i + 1..xs.len())
        .rev()
        .find(|&j| xs[j] > xs[i])
        .expect("successor exists");
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

impl Iterator for FrameIter<'_> {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        if self.done {
            return None;
        }
        let out = self.frame.assemble(&self.state);
        self.done = !self.state.iter_mut().rev().any(|b| next_permutation(b));
        Some(out)
    }
}

/// Exact automorphism count by backtracking over tie-group-preserving maps,
/// or `None` when more than `node_limit` search nodes would be visited.
///
/// Automorphisms preserve every equivariant score, so restricting images to
/// the node's own tie group loses nothing.
pub fn automorphism_count(g: &Graph, frame: &GraphFrame, node_limit: u64) -> Option<BigUint> {
    let n = g.n();
    let group = frame.group_of();
    let a = g.adjacency();
    let colors = g.color_ranks();
    // Visit nodes group by group, smallest groups first, so forced choices come early.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (frame.tie_groups[group[i]].len(), group[i], i));

    struct Search<'a> {
        a: &'a Matrix,
        group: &'a [usize],
        colors: &'a [usize],
        order: &'a [usize],
        image: Vec<usize>,
        used: Vec<bool>,
        visited: u64,
        limit: u64,
        count: BigUint,
    }

    impl Search<'_> {
        fn run(&mut self, depth: usize) -> bool {
            if depth == self.order.len() {
                self.count += 1u32;
                return true;
            }
            let i = self.order[depth];
            for cand in 0..self.order.len() {
                if self.used[cand]
                    || self.group[cand] != self.group[i]
                    || self.colors[cand] != self.colors[i]
                {
                    continue;
                }
                self.visited += 1;
                if self.visited > self.limit {
                    return false;
                }
                let consistent = self.order[..depth]
                    .iter()
                    .all(|&j| self.a[(i, j)] == self.a[(cand, self.image[j])]);
                if !consistent {
                    continue;
                }
                self.image[i] = cand;
                self.used[cand] = true;
                let ok = self.run(depth + 1);
                self.used[cand] = false;
                if !ok {
                    return false;
                }
            }
            true
        }
    }

    let mut s = Search {
        a,
        group: &group,
        colors: &colors,
        order: &order,
        image: vec![0; n],
        used: vec![false; n],
        visited: 0,
        limit: node_limit,
        count: BigUint::from(0u32),
    };
    s.run(0).then_some(s.count)
}

/// Frame accounting for one graph and score variant.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSummary {
    pub variant: ScoreVariant,
    pub tie_groups: Vec<Vec<usize>>,
    pub frame_size: BigUint,
    /// `None` when the automorphism search exceeded its limit.
    pub aut_count: Option<BigUint>,
    pub canon_size: Option<BigUint>,
}

pub fn frame_summary(
    g: &Graph,
    variant: ScoreVariant,
    tol: &Tolerances,
    node_limit: u64,
) -> Result<FrameSummary> {
    let frame = frame_of_graph(g, variant, tol)?;
    let frame_size = frame.size();
    let aut_count = automorphism_count(g, &frame, node_limit);
    let canon_size = aut_count.as_ref().map(|a| &frame_size / a);
    Ok(FrameSummary {
        variant,
        tie_groups: frame.tie_groups,
        frame_size,
        aut_count,
        canon_size,
    })
}

/// Distinct relabeled adjacency matrices, sorted by their bit patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSet {
    pub graphs: Vec<Matrix>,
    /// Each graph's first frame element (the sorting permutation producing it).
    pub witnesses: Vec<Permutation>,
    /// True when only a sample of the frame was visited.
    pub sampled: bool,
    pub frame_elements_visited: usize,
}

impl CanonicalSet {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

fn matrix_key(m: &Matrix) -> Vec<u64> {
    // Normalizes -0.0 so that equal values share a key.
    m.iter().map(|&x| (x + 0.0).to_bits()).collect()
}

/// The set `{σ·A·σᵀ : σ in frame}`. Exhaustive when the frame has at most
/// `budget` elements; otherwise `budget` distinct frame elements are drawn
/// uniformly and the result is flagged as sampled.
pub fn canonical_set<R: Rng + ?Sized>(
    g: &Graph,
    frame: &GraphFrame,
    budget: usize,
    rng: &mut R,
) -> Result<CanonicalSet> {
    if budget == 0 {
        return Err(CanonError::InvalidArgument(
            "budget must be positive".into(),
        ));
    }
    let mut found: BTreeMap<Vec<u64>, (Matrix, Permutation)> = BTreeMap::new();
    let mut add = |sigma: Permutation| {
        let form = sigma.conjugate(g.adjacency());
        found.entry(matrix_key(&form)).or_insert((form, sigma));
    };
    let exhaustive = frame.size() <= BigUint::from(budget);
    let visited = if exhaustive {
        let mut count = 0;
        for sigma in frame.iter() {
            add(sigma);
            count += 1;
        }
        count
    } else {
        let mut seen = HashSet::with_capacity(budget);
        while seen.len() < budget {
            let sigma = frame.random_element(rng);
            if seen.insert(sigma.clone()) {
                add(sigma);
            }
        }
        budget
    };
    let (graphs, witnesses) = found.into_values().unzip();
    Ok(CanonicalSet {
        graphs,
        witnesses,
        sampled: !exhaustive,
        frame_elements_visited: visited,
    })
}
