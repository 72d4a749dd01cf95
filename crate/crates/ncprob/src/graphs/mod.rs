//! Rooted graphs as random variables in the vacuum state `⟨δ_o, · δ_o⟩`:
//! closed-walk moments, spectral distributions, comb/star/direct products
//! and spidernets.

mod approx;
mod products;

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use thiserror::Error;

use crate::measures::{AtomicMeasure, MeasureError, MomentSequence};
use crate::numeric::Rational;

pub use approx::{approx_process, ApproxStep, approx_bound};
pub use products::{
    comb_product, comb_product_ball, direct_product, direct_product_ball, iterated_comb_ball, star_product,
    star_product_ball, ProductKind, MAX_PRODUCT_VERTICES,
};

/// Largest graph handed to the dense eigensolver.
pub const MAX_SPECTRAL_VERTICES: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid spidernet: {0}")]
    Spec(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("graph would have {vertices} vertices, limit is {limit}")]
    TooLarge { vertices: u128, limit: usize },
    #[error("driving value {value} at time {time} outside [0, {limit}]")]
    Bound { time: f64, value: f64, limit: f64 },
    #[error("walk count overflowed 128 bits at order {0}")]
    Overflow(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A finite simple graph with a distinguished root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedGraph {
    adjacency: Vec<Vec<u32>>,
    root: usize,
    depths: Option<Vec<u32>>,
}

impl RootedGraph {
    /// Builds from an undirected edge list; duplicate edges are merged.
    pub fn from_edges(vertices: usize, edges: &[(usize, usize)], root: usize) -> Result<Self, GraphError> {
        if root >= vertices {
            return Err(GraphError::Invalid(format!("root {root} out of range for {vertices} vertices")));
        }
        let mut adjacency = vec![Vec::new(); vertices];
        for &(a, b) in edges {
            if a >= vertices || b >= vertices {
                return Err(GraphError::Invalid(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(GraphError::Invalid(format!("loop at vertex {a}")));
            }
            adjacency[a].push(b as u32);
            adjacency[b].push(a as u32);
        }
        Ok(Self::from_adjacency(adjacency, root))
    }

    /// Trusts that `adjacency` is symmetric and loop-free.
    pub(crate) fn from_adjacency(mut adjacency: Vec<Vec<u32>>, root: usize) -> Self {
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency, root, depths: None }
    }

    /// A single vertex.
    pub fn single_vertex() -> Self {
        Self { adjacency: vec![vec![]], root: 0, depths: Some(vec![0]) }
    }

    /// Path `0 − 1 − … − (len−1)` rooted at `root`.
    pub fn path(len: usize, root: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..len).map(|i| (i - 1, i)).collect();
        Self::from_edges(len, &edges, root)
    }

    /// Star with `leaves` leaves rooted at the centre.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges, 0).expect("star edges are valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Stored depth labels, if any.
    pub fn depth_labels(&self) -> Option<&[u32]> {
        self.depths.as_deref()
    }

    /// Graph distances from the root (`u32::MAX` when unreachable).
    pub fn distances(&self) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::from([self.root]);
        dist[self.root] = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        dist
    }

    /// Attaches BFS depth labels.
    pub fn with_depths(mut self) -> Self {
        self.depths = Some(self.distances());
        self
    }

    /// Checks symmetry, absence of loops and consistency of depth labels.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (v, list) in self.adjacency.iter().enumerate() {
            for &w in list {
                let w = w as usize;
                if w == v || w >= self.vertex_count() {
                    return Err(GraphError::Invalid(format!("bad edge ({v}, {w})")));
                }
                if self.adjacency[w].binary_search(&(v as u32)).is_err() {
                    return Err(GraphError::Invalid(format!("edge ({v}, {w}) is not symmetric")));
                }
            }
        }
        if let Some(d) = &self.depths {
            if *d != self.distances() {
                return Err(GraphError::Invalid("depth labels are not BFS distances".into()));
            }
        }
        Ok(())
    }

    /// `root r` followed by one `a b` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("root {}\n", self.root);
        for (v, list) in self.adjacency.iter().enumerate() {
            for &w in list.iter().filter(|&&w| w as usize > v) {
                let _ = writeln!(out, "{v} {w}");
            }
        }
        out
    }
}

/// Closed-walk counts `m_k = ⟨δ_o, A^k δ_o⟩` for `k = 1..=order`, exact.
pub fn walk_moments(graph: &RootedGraph, order: usize) -> Result<MomentSequence<Rational>, GraphError> {
    let counts = walk_counts(graph, order)?;
    Ok(MomentSequence::new(counts.into_iter().map(|c| Rational::from_integer(BigInt::from(c))).collect())?)
}

/// Closed-walk counts as machine integers.
pub fn walk_counts(graph: &RootedGraph, order: usize) -> Result<Vec<u128>, GraphError> {
    if order == 0 {
        return Err(MeasureError::ZeroOrder.into());
    }
    // m_{a+b} = ⟨A^a δ_o, A^b δ_o⟩, so vectors up to ⌈K/2⌉ suffice.
    let half = order.div_ceil(2);
    let mut powers: Vec<Vec<u128>> = Vec::with_capacity(half + 1);
    let mut v = vec![0u128; graph.vertex_count()];
    v[graph.root] = 1;
    powers.push(v);
    for j in 1..=half {
        let prev = &powers[j - 1];
        let mut next = vec![0u128; graph.vertex_count()];
        for (x, list) in graph.adjacency.iter().enumerate() {
            let mut acc = 0u128;
            for &y in list {
                acc = acc.checked_add(prev[y as usize]).ok_or(GraphError::Overflow(j))?;
            }
            next[x] = acc;
        }
        powers.push(next);
    }
    (1..=order)
        .map(|k| {
            let (a, b) = (k / 2, k - k / 2);
            powers[a].iter().zip(&powers[b]).try_fold(0u128, |acc, (p, q)| {
                p.checked_mul(*q).and_then(|r| acc.checked_add(r)).ok_or(GraphError::Overflow(k))
            })
        })
        .collect()
}

/// Spectral distribution in the vacuum state: eigenvalues weighted by the
/// squared root component of their eigenvectors.
pub fn spectral_distribution(graph: &RootedGraph) -> Result<AtomicMeasure, GraphError> {
    let n = graph.vertex_count();
    if n > MAX_SPECTRAL_VERTICES {
        return Err(GraphError::TooLarge { vertices: n as u128, limit: MAX_SPECTRAL_VERTICES });
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (v, list) in graph.adjacency.iter().enumerate() {
        for &w in list {
            a[(v, w as usize)] = 1.0;
        }
    }
    let eig = a.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(graph.root, i)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    // Degenerate eigenvalues come back with rounding spread; merge them.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (x, w) in pairs {
        match merged.last_mut() {
            Some(last) if (x - last.0).abs() < 1e-8 => {
                let total = last.1 + w;
                if total > 0.0 {
                    last.0 = (last.0 * last.1 + x * w) / total;
                }
                last.1 = total;
            }
            _ => merged.push((x, w)),
        }
    }
    merged.retain(|a| a.1 > 1e-14);
    Ok(AtomicMeasure::normalized(merged)?)
}

/// The spidernet with data `(2n, n + 1 + u, n)` truncated at `depth`.
///
/// Shell `k` holds `2n·n^{k−1}` vertices; each vertex has `n` children in
/// the next shell and `u` lateral neighbours in its own shell, wired as a
/// circulant.
pub fn spidernet(n: usize, u: usize, depth: usize) -> Result<RootedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Spec("n must be positive".into()));
    }
    if u > 2 * n - 1 {
        return Err(GraphError::Spec(format!("u = {u} exceeds 2n − 1 = {}", 2 * n - 1)));
    }
    let mut sizes = vec![1u128];
    for k in 1..=depth {
        let s = 2 * n as u128 * (n as u128).pow(k as u32 - 1);
        sizes.push(s);
    }
    let total: u128 = sizes.iter().sum();
    if total > MAX_PRODUCT_VERTICES as u128 {
        return Err(GraphError::TooLarge { vertices: total, limit: MAX_PRODUCT_VERTICES });
    }
    let sizes: Vec<usize> = sizes.into_iter().map(|s| s as usize).collect();
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &s| {
        let o = *acc;
        *acc += s;
        Some(o)
    }).collect();
    let mut adjacency = vec![Vec::new(); total as usize];
    let mut depths = vec![0u32; total as usize];
    let link = |a: usize, b: usize, adjacency: &mut Vec<Vec<u32>>| {
        adjacency[a].push(b as u32);
        adjacency[b].push(a as u32);
    };
    for k in 1..=depth {
        let (start, size) = (offsets[k], sizes[k]);
        for i in 0..size {
            let v = start + i;
            depths[v] = k as u32;
            // Parent: the root for shell 1, otherwise vertex i / n of the previous shell.
            let parent = if k == 1 { 0 } else { offsets[k - 1] + i / n };
            link(parent, v, &mut adjacency);
            for step in 1..=u / 2 {
                link(v, start + (i + step) % size, &mut adjacency);
            }
            if u % 2 == 1 && i < size / 2 {
                link(v, start + i + size / 2, &mut adjacency);
            }
        }
    }
    let mut g = RootedGraph::from_adjacency(adjacency, 0);
    g.depths = Some(depths);
    Ok(g)
}
