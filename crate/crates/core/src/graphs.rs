//! Weighted directed graphs and their Laplacians.
//!
//! Edge convention: `w[(i, j)] > 0` means agent `i` observes agent `j`, i.e.
//! information flows along the edge `j -> i`. A Laplacian row therefore
//! describes what a single agent measures.

use std::collections::VecDeque;

use nalgebra::{DMatrix, Dim, Matrix, RawStorage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for Laplacian row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    weights: DMatrix<f64>,
}

impl DirectedGraph {
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if weights.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "adjacency matrix is {}x{}, expected square",
                n,
                weights.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight ({i}, {j}) = {w} must be finite and nonnegative"
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidGraph(format!("self loop at node {i}")));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Builds a graph from `(from, to, weight)` triples with 0-based node indices.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut w = DMatrix::zeros(n, n);
        for &(from, to, weight) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({from}, {to}) references a node outside 0..{n}"
                )));
            }
            w[(to, from)] += weight;
        }
        Self::from_weights(w)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_edges(n, &[])
    }

    /// Directed path where every agent observes its predecessor; agent 0 is the leader.
    pub fn path_ahead(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        laplacian_from_graph(self)
    }

    pub fn has_directed_spanning_tree(&self) -> bool {
        has_directed_spanning_tree(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianSource {
    DerivedFromGraph,
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    entries: DMatrix<f64>,
    source: LaplacianSource,
}

impl LaplacianMatrix {
    /// Accepts an explicit Laplacian, checking zero row sums to `tol` and the sign pattern.
    pub fn from_matrix(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if entries.ncols() != n {
            return Err(Error::InvalidLaplacian(format!(
                "matrix is {}x{}, expected square",
                n,
                entries.ncols()
            )));
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidLaplacian(format!("entry ({i}, {j}) is not finite")));
                }
                if i == j && v < 0.0 {
                    return Err(Error::InvalidLaplacian(format!("diagonal entry {i} is negative")));
                }
                if i != j && v > 0.0 {
                    return Err(Error::InvalidLaplacian(format!(
                        "off-diagonal entry ({i}, {j}) is positive"
                    )));
                }
                sum += v;
            }
            if sum.abs() > tol {
                return Err(Error::InvalidLaplacian(format!("row {i} sums to {sum:e}")));
            }
        }
        Ok(Self {
            entries,
            source: LaplacianSource::Explicit,
        })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn source(&self) -> LaplacianSource {
        self.source
    }

    /// Adjacency weights recovered from the off-diagonal entries.
    pub fn graph(&self) -> DirectedGraph {
        let n = self.size();
        let w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { -self.entries[(i, j)] });
        DirectedGraph { weights: w }
    }

    pub fn has_directed_spanning_tree(&self) -> bool {
        has_directed_spanning_tree(&self.graph())
    }

    /// `L^k` as a dense matrix.
    pub fn power(&self, k: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.size(), self.size());
        for _ in 0..k {
            out = &self.entries * out;
        }
        out
    }
}

/// `L = diag(W 1) - W`.
pub fn laplacian_from_graph(g: &DirectedGraph) -> LaplacianMatrix {
    let n = g.node_count();
    let w = g.weights();
    let mut entries = -w.clone();
    for i in 0..n {
        entries[(i, i)] = w.row(i).sum();
    }
    LaplacianMatrix {
        entries,
        source: LaplacianSource::DerivedFromGraph,
    }
}

pub fn path_ahead_laplacian(n_agents: usize) -> Result<LaplacianMatrix> {
    Ok(DirectedGraph::path_ahead(n_agents)?.laplacian())
}

/// True iff some node reaches every other node along directed edges.
pub fn has_directed_spanning_tree(g: &DirectedGraph) -> bool {
    let n = g.node_count();
    let w = g.weights();
    // out[j] lists the nodes that observe j.
    let out: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| w[(i, j)] > 0.0).collect())
        .collect();

    let mut seen = vec![false; n];
    let mut queue = VecDeque::with_capacity(n);
    (0..n).any(|root| {
        seen.iter_mut().for_each(|s| *s = false);
        seen[root] = true;
        queue.clear();
        queue.push_back(root);
        let mut reached = 1;
        while let Some(j) = queue.pop_front() {
            for &i in &out[j] {
                if !seen[i] {
                    seen[i] = true;
                    reached += 1;
                    queue.push_back(i);
                }
            }
        }
        reached == n
    })
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Induced infinity norm: maximum absolute row sum. For a column vector this is
/// the largest absolute entry.
pub fn inf_norm<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Random digraph containing a directed spanning tree rooted at a random node.
///
/// A random tree is laid down first (weights in `[0.5, 1.5]`), then each
/// remaining ordered pair gets an extra edge with probability `extra_edge_prob`.
pub fn random_spanning_digraph<R: Rng + ?Sized>(
    n: usize,
    extra_edge_prob: f64,
    rng: &mut R,
) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut w = DMatrix::zeros(n, n);
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        w[(order[k], parent)] = rng.gen_range(0.5..1.5);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)] == 0.0 && rng.gen_bool(extra_edge_prob) {
                w[(i, j)] = rng.gen_range(0.5..1.5);
            }
        }
    }
    DirectedGraph::from_weights(w)
}

/// Erdős–Rényi style weighted digraph; no connectivity guarantee.
pub fn random_digraph<R: Rng + ?Sized>(n: usize, edge_prob: f64, rng: &mut R) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i != j && rng.gen_bool(edge_prob) {
            rng.gen_range(0.1..2.0)
        } else {
            0.0
        }
    });
    DirectedGraph::from_weights(w)
}

/// JSON topology description.
///
/// Either `{"preset": "path_ahead" | "complete" | "empty", "n": int}`,
/// `{"n": int, "edges": [[from, to, weight], ...]}` (0-based nodes) or
/// `{"laplacian": [[...], ...]}`. `n` may be omitted when the caller supplies
/// the agent count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Preset {
        preset: Preset,
        #[serde(default)]
        n: Option<usize>,
    },
    Edges {
        #[serde(default)]
        n: Option<usize>,
        edges: Vec<(usize, usize, f64)>,
    },
    Explicit {
        laplacian: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    PathAhead,
    Complete,
    Empty,
}

impl TopologySpec {
    pub fn path_ahead(n: usize) -> Self {
        TopologySpec::Preset {
            preset: Preset::PathAhead,
            n: Some(n),
        }
    }

    /// Node count stated in the document, if any.
    pub fn declared_size(&self) -> Option<usize> {
        match self {
            TopologySpec::Preset { n, .. } | TopologySpec::Edges { n, .. } => *n,
            TopologySpec::Explicit { laplacian } => Some(laplacian.len()),
        }
    }

    /// Builds the Laplacian; `n_agents` fills in or must agree with a declared size.
    pub fn build(&self, n_agents: Option<usize>) -> Result<LaplacianMatrix> {
        let n = match (self.declared_size(), n_agents) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::InvalidScenario(format!(
                    "topology declares {a} nodes but {b} agents were requested"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => {
                return Err(Error::InvalidScenario("topology size is unspecified".into()))
            }
        };
        match self {
            TopologySpec::Preset { preset, .. } => {
                let g = match preset {
                    Preset::PathAhead => DirectedGraph::path_ahead(n)?,
                    Preset::Complete => DirectedGraph::complete(n)?,
                    Preset::Empty => DirectedGraph::empty(n)?,
                };
                Ok(g.laplacian())
            }
            TopologySpec::Edges { edges, .. } => Ok(DirectedGraph::from_edges(n, edges)?.laplacian()),
            TopologySpec::Explicit { laplacian } => {
                if laplacian.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidLaplacian("rows have unequal length".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, j| laplacian[i][j]);
                LaplacianMatrix::from_matrix(m, ROW_SUM_TOLERANCE)
            }
        }
    }
}
