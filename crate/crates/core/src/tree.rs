//! EMD over tree metrics.
//!
//! With the tree rooted at node 0, cutting edge `e` leaves the child-side
//! subtree `T_e`, and `EMD(p, q) = Σ_e w(e)·|p(T_e) − q(T_e)|`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::budget;
use crate::distribution::NORMALIZATION_TOL;
use crate::error::{Error, Result};
use crate::sampling::Sampler;
use crate::verdict::{EstimateReport, SamplesUsed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Tree file layout: `{ "n": int, "edges": [ { "u", "v", "w" } ] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub n: usize,
    pub edges: Vec<TreeEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    n: usize,
    edges: Vec<TreeEdge>,
    // Child endpoint of each edge (the endpoint farther from the root).
    child: Vec<usize>,
    // BFS order from the root.
    order: Vec<usize>,
    // Edge joining each non-root node to its parent.
    parent_edge: Vec<usize>,
    parent: Vec<usize>,
}

impl WeightedTree {
    pub fn new(n: usize, edges: Vec<TreeEdge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Param("a tree needs at least one node".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::Param(format!("{n} nodes need {} edges, got {}", n - 1, edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n || e.u == e.v {
                return Err(Error::Param(format!("edge {i} ({}, {}) is invalid", e.u, e.v)));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::Param(format!("edge {i} weight must be positive, got {}", e.w)));
            }
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        let mut parent = vec![usize::MAX; n];
        let mut parent_edge = vec![usize::MAX; n];
        let mut child = vec![usize::MAX; n - 1];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &(y, e) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = x;
                    parent_edge[y] = e;
                    child[e] = y;
                    queue.push_back(y);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Param("edges do not connect every node".into()));
        }
        Ok(WeightedTree { n, edges, child, order, parent_edge, parent })
    }

    pub fn from_file(file: &TreeFile) -> Result<Self> {
        Self::new(file.n, file.edges.clone())
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile { n: self.n, edges: self.edges.clone() }
    }

    /// Unit-weight path `0 - 1 - … - (n−1)`.
    pub fn path(n: usize) -> Result<Self> {
        let edges = (1..n).map(|i| TreeEdge { u: i - 1, v: i, w: 1.0 }).collect();
        Self::new(n, edges)
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    /// Largest edge weight `W` (0 for a single node).
    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(0.0, f64::max)
    }

    /// The endpoint of edge `e` on the side away from the root.
    pub fn child_of(&self, e: usize) -> usize {
        self.child[e]
    }

    pub fn parent_of(&self, node: usize) -> Option<usize> {
        (node != 0).then(|| self.parent[node])
    }

    /// Shortest-path distances between all node pairs.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        (0..self.n)
            .map(|s| {
                let mut dist = vec![f64::NAN; self.n];
                dist[s] = 0.0;
                let mut stack = vec![s];
                while let Some(x) = stack.pop() {
                    for &(y, w) in &adj[x] {
                        if dist[y].is_nan() {
                            dist[y] = dist[x] + w;
                            stack.push(y);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    fn check_dist(&self, dist: &[f64]) -> Result<()> {
        if dist.len() != self.n {
            return Err(Error::Support(format!(
                "distribution has {} entries, tree has {} nodes",
                dist.len(),
                self.n
            )));
        }
        if dist.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Support("node weights must be non-negative".into()));
        }
        let s: f64 = dist.iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { sum: s, tol: NORMALIZATION_TOL });
        }
        Ok(())
    }

    fn masses_unchecked(&self, dist: &[f64]) -> Vec<f64> {
        let mut sub = dist.to_vec();
        for &x in self.order.iter().rev().take(self.n - 1) {
            sub[self.parent[x]] += sub[x];
        }
        (0..self.n - 1).map(|e| sub[self.child[e]]).collect()
    }
}

/// `p(T_e)` for every edge, in edge order, with `T_e` the side not
/// containing node 0.
pub fn subtree_masses(tree: &WeightedTree, dist: &[f64]) -> Result<Vec<f64>> {
    tree.check_dist(dist)?;
    Ok(tree.masses_unchecked(dist))
}

fn edge_cut_sum(tree: &WeightedTree, mp: &[f64], mq: &[f64]) -> f64 {
    tree.edges
        .iter()
        .zip(mp.iter().zip(mq))
        .map(|(e, (a, b))| e.w * (a - b).abs())
        .sum()
}

/// Exact tree EMD by the edge-cut formula.
pub fn tree_emd_exact(tree: &WeightedTree, p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(edge_cut_sum(tree, &subtree_masses(tree, p)?, &subtree_masses(tree, q)?))
}

fn empirical_nodes<S: Sampler<Item = usize>>(src: &mut S, n: usize, m: u64) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; n];
    for _ in 0..m {
        let x = src.draw()?;
        if x >= n {
            return Err(Error::Support(format!("sampled node {x} is not in a {n}-node tree")));
        }
        counts[x] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / m as f64).collect())
}

/// Plug-in tree EMD estimate from `⌈c·(W·n/ε)²·lg(n/δ)⌉` draws per source.
///
/// One batch of draws estimates every `p(T_e)` at once; the estimate is the
/// edge-cut sum of the empirical subtree masses.
pub fn tree_emd_estimate<S, R>(
    src_p: &mut S,
    src_q: &mut R,
    tree: &WeightedTree,
    eps: f64,
    delta: f64,
    c: f64,
) -> Result<EstimateReport>
where
    S: Sampler<Item = usize>,
    R: Sampler<Item = usize>,
{
    if !(eps > 0.0 && delta > 0.0 && delta < 1.0 && c > 0.0) {
        return Err(Error::Config("need eps > 0, delta in (0, 1), c > 0".into()));
    }
    let n = tree.nodes();
    let m = tree_budget(tree, eps, delta, c);
    if m == 0 {
        return Err(Error::Config("tree estimator budget is zero".into()));
    }
    let (p0, q0) = (src_p.draws_taken(), src_q.draws_taken());
    let p_hat = empirical_nodes(src_p, n, m)?;
    let q_hat = empirical_nodes(src_q, n, m)?;
    let estimate = edge_cut_sum(tree, &tree.masses_unchecked(&p_hat), &tree.masses_unchecked(&q_hat));
    Ok(EstimateReport {
        estimate,
        eps,
        samples_used: SamplesUsed { p: src_p.draws_taken() - p0, q: src_q.draws_taken() - q0 },
        grid_side: None,
        seed: src_p.seed(),
    })
}

/// Draws per source of [`tree_emd_estimate`].
pub fn tree_budget(tree: &WeightedTree, eps: f64, delta: f64, c: f64) -> u64 {
    budget::tree(tree.max_weight(), tree.nodes(), eps, delta, c)
}

/// Per-edge precision `ε/(2·w(e)·(n−1))` the estimator must reach on each
/// subtree mass.
pub fn edge_precision(tree: &WeightedTree, eps: f64) -> Vec<f64> {
    let k = (tree.nodes() - 1) as f64;
    tree.edges.iter().map(|e| eps / (2.0 * e.w * k)).collect()
}

/// Endpoint-biased pair on the unit-weight `n`-node path with tree EMD
/// exactly `eps`: `p` puts 1/2 on each endpoint, `q` moves `ε/(n−1)` of it
/// from the far end to node 0.
pub fn hard_line_instance(n: usize, eps: f64) -> Result<(WeightedTree, Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Param(format!("need n >= 2, got {n}")));
    }
    let shift = eps / (n - 1) as f64;
    if !(eps >= 0.0 && shift <= 0.5) {
        return Err(Error::Param(format!("need 0 <= eps <= (n-1)/2, got {eps}")));
    }
    let tree = WeightedTree::path(n)?;
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    p[0] = 0.5;
    p[n - 1] = 0.5;
    q[0] = 0.5 + shift;
    q[n - 1] = 0.5 - shift;
    Ok((tree, p, q))
}
