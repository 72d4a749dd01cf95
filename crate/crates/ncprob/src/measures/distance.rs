//! Distribution functions and the Lévy distance.

use super::{AtomicMeasure, GridMeasure, Measure};

/// Distribution function with explicit breakpoints.
pub trait Cdf {
    /// `μ((−∞, x])`.
    fn cdf(&self, x: f64) -> f64;
    /// `μ((−∞, x))`.
    fn cdf_left(&self, x: f64) -> f64;
    /// Points where the distribution function jumps or changes slope.
    fn breakpoints(&self) -> Vec<f64>;
}

impl Cdf for AtomicMeasure {
    fn cdf(&self, x: f64) -> f64 {
        self.atoms().iter().take_while(|a| a.0 <= x).map(|a| a.1).sum::<f64>().min(1.0)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        self.atoms().iter().take_while(|a| a.0 < x).map(|a| a.1).sum::<f64>().min(1.0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.atoms().iter().map(|a| a.0).collect()
    }
}

impl GridMeasure {
    /// Trapezoid mass of the density on `(−∞, x]`.
    fn density_cdf(&self, x: f64) -> f64 {
        let g = self.grid();
        let d = self.density();
        if x <= g[0] {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 1..g.len() {
            if x >= g[i] {
                acc += 0.5 * (g[i] - g[i - 1]) * (d[i] + d[i - 1]);
            } else {
                let s = x - g[i - 1];
                let slope = (d[i] - d[i - 1]) / (g[i] - g[i - 1]);
                acc += d[i - 1] * s + 0.5 * slope * s * s;
                break;
            }
        }
        acc
    }
}

impl Cdf for GridMeasure {
    fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms().iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        (self.density_cdf(x) + atoms).min(1.0)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms().iter().filter(|a| a.0 < x).map(|a| a.1).sum();
        (self.density_cdf(x) + atoms).min(1.0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.grid().to_vec();
        b.extend(self.atoms().iter().map(|a| a.0));
        b.sort_by(f64::total_cmp);
        b
    }
}

impl Cdf for Measure {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Measure::Atomic(a) => a.cdf(x),
            Measure::Grid(g) => g.cdf(x),
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Measure::Atomic(a) => a.cdf_left(x),
            Measure::Grid(g) => g.cdf_left(x),
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Measure::Atomic(a) => a.breakpoints(),
            Measure::Grid(g) => g.breakpoints(),
        }
    }
}

/// Largest violation of `F(x−δ) − δ ≤ G(x)` over candidate points. Both
/// sides are monotone, so the supremum is attained at (or just left of) a
/// breakpoint of `G` or of the shifted `F`.
fn lower_violation<A: Cdf + ?Sized, B: Cdf + ?Sized>(f: &A, g: &B, delta: f64, fb: &[f64], gb: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    let points = gb.iter().copied().chain(fb.iter().map(|b| b + delta));
    for x in points {
        worst = worst.max(f.cdf(x - delta) - delta - g.cdf(x));
        worst = worst.max(f.cdf_left(x - delta) - delta - g.cdf_left(x));
    }
    worst
}

fn feasible<A: Cdf + ?Sized, B: Cdf + ?Sized>(f: &A, g: &B, delta: f64, fb: &[f64], gb: &[f64]) -> bool {
    lower_violation(f, g, delta, fb, gb) <= 0.0 && lower_violation(g, f, delta, gb, fb) <= 0.0
}

/// Lévy distance `inf{δ > 0 : F(x−δ)−δ ≤ G(x) ≤ F(x+δ)+δ for all x}`,
/// located by bisection on `δ ∈ [0, 1]`.
pub fn levy_distance<A: Cdf + ?Sized, B: Cdf + ?Sized>(mu: &A, nu: &B) -> f64 {
    let fb = mu.breakpoints();
    let gb = nu.breakpoints();
    if feasible(mu, nu, 0.0, &fb, &gb) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if feasible(mu, nu, mid, &fb, &gb) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    hi
}
