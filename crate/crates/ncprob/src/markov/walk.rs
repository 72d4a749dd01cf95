use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::MarkovError;

/// A point of `ℤ²`.
pub type Site = (i64, i64);

/// Chronological loop erasure: whenever the path revisits a point, the
/// loop since the previous visit is removed.
pub fn loop_erase<T: Copy + Eq + std::hash::Hash>(path: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(path.len());
    let mut position: HashMap<T, usize> = HashMap::new();
    for &p in path {
        if let Some(&i) = position.get(&p) {
            for q in out.drain(i + 1..) {
                position.remove(&q);
            }
        } else {
            position.insert(p, out.len());
            out.push(p);
        }
    }
    out
}

/// No point appears twice.
pub fn is_simple<T: Copy + Eq + std::hash::Hash>(path: &[T]) -> bool {
    let mut seen = std::collections::HashSet::new();
    path.iter().all(|p| seen.insert(*p))
}

/// Simple random walk on `ℤ²` from the origin until it leaves the box
/// `max(|x|, |y|) ≤ width`.
pub fn simple_random_walk(width: i64, steps_cap: usize, seed: u64) -> Result<Vec<Site>, MarkovError> {
    if width < 0 {
        return Err(MarkovError::InvalidLattice(format!("width {width}")));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut path = vec![(0, 0)];
    let (mut x, mut y) = (0i64, 0i64);
    while x.abs().max(y.abs()) <= width {
        if path.len() > steps_cap {
            return Err(MarkovError::CapExceeded(steps_cap));
        }
        match rng.random_range(0..4) {
            0 => x += 1,
            1 => x -= 1,
            2 => y += 1,
            _ => y -= 1,
        }
        path.push((x, y));
    }
    Ok(path)
}

/// Loop-erased random walk from the origin to the boundary of the box.
pub fn lerw(width: i64, steps_cap: usize, seed: u64) -> Result<Vec<Site>, MarkovError> {
    Ok(loop_erase(&simple_random_walk(width, steps_cap, seed)?))
}
