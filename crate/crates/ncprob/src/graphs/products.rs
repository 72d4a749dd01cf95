//! Comb, star and direct products, either in full or restricted to the
//! ball around the root that closed walks of a given length can reach.

use std::collections::{HashMap, VecDeque};

use super::{GraphError, RootedGraph};

/// Vertex guard for constructed graphs.
pub const MAX_PRODUCT_VERTICES: usize = 10_000_000;

/// Adjacency rule on `V₁ × V₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    /// A copy of the second graph hangs at every vertex of the first.
    Comb,
    /// Both graphs glued at their roots.
    Star,
    /// Cartesian product.
    Direct,
}

fn neighbors(kind: ProductKind, g1: &RootedGraph, g2: &RootedGraph, x: u32, y: u32, out: &mut Vec<(u32, u32)>) {
    out.clear();
    let (o1, o2) = (g1.root as u32, g2.root as u32);
    let first = match kind {
        ProductKind::Comb | ProductKind::Star => y == o2,
        ProductKind::Direct => true,
    };
    let second = match kind {
        ProductKind::Star => x == o1,
        ProductKind::Comb | ProductKind::Direct => true,
    };
    if first {
        out.extend(g1.neighbors(x as usize).iter().map(|&x2| (x2, y)));
    }
    if second {
        out.extend(g2.neighbors(y as usize).iter().map(|&y2| (x, y2)));
    }
}

fn full_product(kind: ProductKind, g1: &RootedGraph, g2: &RootedGraph) -> Result<RootedGraph, GraphError> {
    let (n1, n2) = (g1.vertex_count(), g2.vertex_count());
    let total = n1 as u128 * n2 as u128;
    if total > MAX_PRODUCT_VERTICES as u128 {
        return Err(GraphError::TooLarge { vertices: total, limit: MAX_PRODUCT_VERTICES });
    }
    let index = |x: u32, y: u32| (x as usize * n2 + y as usize) as u32;
    let mut adjacency = Vec::with_capacity(total as usize);
    let mut buf = Vec::new();
    for x in 0..n1 as u32 {
        for y in 0..n2 as u32 {
            neighbors(kind, g1, g2, x, y, &mut buf);
            adjacency.push(buf.iter().map(|&(a, b)| index(a, b)).collect());
        }
    }
    Ok(RootedGraph::from_adjacency(adjacency, index(g1.root as u32, g2.root as u32) as usize))
}

fn ball_product(kind: ProductKind, g1: &RootedGraph, g2: &RootedGraph, radius: usize) -> Result<RootedGraph, GraphError> {
    let start = (g1.root as u32, g2.root as u32);
    let mut ids: HashMap<(u32, u32), u32> = HashMap::from([(start, 0)]);
    let mut order = vec![start];
    let mut dist = vec![0usize];
    let mut queue = VecDeque::from([0usize]);
    let mut buf = Vec::new();
    while let Some(i) = queue.pop_front() {
        if dist[i] == radius {
            continue;
        }
        let (x, y) = order[i];
        neighbors(kind, g1, g2, x, y, &mut buf);
        for &p in &buf {
            if !ids.contains_key(&p) {
                if order.len() >= MAX_PRODUCT_VERTICES {
                    return Err(GraphError::TooLarge { vertices: order.len() as u128 + 1, limit: MAX_PRODUCT_VERTICES });
                }
                ids.insert(p, order.len() as u32);
                order.push(p);
                dist.push(dist[i] + 1);
                queue.push_back(order.len() - 1);
            }
        }
    }
    let adjacency = order
        .iter()
        .map(|&(x, y)| {
            neighbors(kind, g1, g2, x, y, &mut buf);
            buf.iter().filter_map(|p| ids.get(p).copied()).collect()
        })
        .collect();
    Ok(RootedGraph::from_adjacency(adjacency, 0).with_depths())
}

/// `G₁ ▷ G₂`: edges `(x,o₂)~(x',o₂)` for `x~x'` and `(x,y)~(x,y')` for `y~y'`.
pub fn comb_product(g1: &RootedGraph, g2: &RootedGraph) -> Result<RootedGraph, GraphError> {
    full_product(ProductKind::Comb, g1, g2)
}

/// `G₁ ⋆ G₂`: edges `(x,o₂)~(x',o₂)` and `(o₁,y)~(o₁,y')`.
pub fn star_product(g1: &RootedGraph, g2: &RootedGraph) -> Result<RootedGraph, GraphError> {
    full_product(ProductKind::Star, g1, g2)
}

/// `G₁ × G₂`: edges `(x,y)~(x',y)` and `(x,y)~(x,y')`.
pub fn direct_product(g1: &RootedGraph, g2: &RootedGraph) -> Result<RootedGraph, GraphError> {
    full_product(ProductKind::Direct, g1, g2)
}

/// Vertices of `G₁ ▷ G₂` within `radius` of the root, with every edge
/// among them. Closed walks of length `≤ 2·radius` are preserved.
pub fn comb_product_ball(g1: &RootedGraph, g2: &RootedGraph, radius: usize) -> Result<RootedGraph, GraphError> {
    ball_product(ProductKind::Comb, g1, g2, radius)
}

pub fn star_product_ball(g1: &RootedGraph, g2: &RootedGraph, radius: usize) -> Result<RootedGraph, GraphError> {
    ball_product(ProductKind::Star, g1, g2, radius)
}

pub fn direct_product_ball(g1: &RootedGraph, g2: &RootedGraph, radius: usize) -> Result<RootedGraph, GraphError> {
    ball_product(ProductKind::Direct, g1, g2, radius)
}

/// `G₁ ▷ G₂ ▷ … ▷ G_k` truncated to the ball of `radius`; the empty
/// product is a single vertex.
pub fn iterated_comb_ball(factors: &[RootedGraph], radius: usize) -> Result<RootedGraph, GraphError> {
    let mut acc = match factors.first() {
        None => return Ok(RootedGraph::single_vertex()),
        Some(g) => ball_product(ProductKind::Comb, g, &RootedGraph::single_vertex(), radius)?,
    };
    for g in &factors[1..] {
        acc = comb_product_ball(&acc, g, radius)?;
    }
    Ok(acc)
}
