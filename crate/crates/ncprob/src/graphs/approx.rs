//! Discrete approximation of a monotone additive process by comb products
//! of spidernets whose lateral degrees follow a driving function.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use num_traits::Pow;

use super::{comb_product_ball, spidernet, walk_moments, GraphError, RootedGraph};
use crate::loewner::DrivingFunction;
use crate::measures::{MeasureError, MomentSequence};
use crate::numeric::{rational_from_f64, Rational, Scalar};

/// One time step `k` of the approximation.
#[derive(Debug, Clone)]
pub struct ApproxStep {
    pub k: usize,
    /// `k·T/n`.
    pub time: f64,
    /// Lateral degrees `u_{n,1}, …, u_{n,k}` of the factors.
    pub lateral: Vec<usize>,
    /// `S_{n²,u_1} ▷ … ▷ S_{n²,u_k}`, truncated to the walk-relevant ball.
    pub graph: RootedGraph,
    /// Exact closed-walk moments of `graph`.
    pub moments: MomentSequence<Rational>,
    /// Moments of the law rescaled by `√(T/(2n³))`.
    pub scaled: MomentSequence<f64>,
    /// `T/(2n³)` as an exact rational.
    scale_sq: Rational,
}

impl ApproxStep {
    /// Exact rescaled moment of even order `j`.
    pub fn scaled_even(&self, j: usize) -> Option<Rational> {
        (j.is_multiple_of(2) && j >= 2 && j <= self.moments.order()).then(|| self.moments.get(j) * self.scale_sq.clone().pow(j / 2))
    }
}

/// Upper bound `√(T/2)·(2√n − n^{−3/2})` on the driving function.
pub fn approx_bound(horizon: f64, n: usize) -> f64 {
    let n = n as f64;
    (horizon / 2.0).sqrt() * (2.0 * n.sqrt() - n.powf(-1.5))
}

/// Builds the graphs `𝒞_{n,k}` for `k = 0..=n` with their walk moments up
/// to `order`.
pub fn approx_process(
    driving: &DrivingFunction,
    horizon: f64,
    n: usize,
    order: usize,
) -> Result<Vec<ApproxStep>, GraphError> {
    if order == 0 {
        return Err(MeasureError::ZeroOrder.into());
    }
    if n == 0 || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(GraphError::Spec(format!("need n ≥ 1 and T > 0, got n = {n}, T = {horizon}")));
    }
    driving.validate().map_err(|e| GraphError::Spec(e.to_string()))?;
    let limit = approx_bound(horizon, n);
    let dt = horizon / n as f64;
    let mut check_times: Vec<f64> = (1..=n).map(|k| k as f64 * dt).collect();
    check_times.extend(driving.breakpoints().iter().copied().filter(|&t| (0.0..=horizon).contains(&t)));
    for &time in &check_times {
        let value = driving.value(time);
        if !(-1e-12..=limit + 1e-12).contains(&value) {
            return Err(GraphError::Bound { time, value, limit });
        }
    }
    let spider_n = n * n;
    let nf = n as f64;
    let lateral: Vec<usize> = (1..=n)
        .map(|k| {
            let raw = (2.0 * horizon).sqrt() * nf.powf(1.5) * driving.value(k as f64 * dt) / horizon;
            ((raw + 1e-9).floor().max(0.0) as usize).min(2 * spider_n - 1)
        })
        .collect();
    let radius = order.div_ceil(2);
    let depth = radius + 1;
    let scale_sq = rational_from_f64(horizon) / Rational::from_integer((2 * n.pow(3)).into());
    let scale = scale_sq.approx().sqrt();
    let mut factors: HashMap<usize, RootedGraph> = HashMap::new();
    let mut graph = RootedGraph::single_vertex();
    let mut steps = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            let u = lateral[k - 1];
            if let Entry::Vacant(slot) = factors.entry(u) {
                slot.insert(spidernet(spider_n, u, depth)?);
            }
            graph = comb_product_ball(&graph, &factors[&u], radius)?;
        }
        let moments = walk_moments(&graph, order)?;
        let scaled = MomentSequence::new(
            moments.as_slice().iter().enumerate().map(|(j, m)| m.approx() * scale.powi(j as i32 + 1)).collect(),
        )?;
        steps.push(ApproxStep {
            k,
            time: k as f64 * dt,
            lateral: lateral[..k].to_vec(),
            graph: graph.clone(),
            moments,
            scaled,
            scale_sq: scale_sq.clone(),
        });
    }
    Ok(steps)
}
