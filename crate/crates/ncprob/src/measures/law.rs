//! Named laws with closed-form moments, densities and Cauchy transforms,
//! and their realization as gridded measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomicMeasure, GridMeasure, HasMoments, MeasureError, MomentSequence};
use crate::numeric::{binomial, gauss_legendre, linspace, sqrt_upper};

/// Default number of grid points for gridded realizations.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Padding added on both sides of a continuous support.
pub const GRID_PADDING: f64 = 1e-9;

/// A named probability law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    Dirac { c: f64 },
    /// `p·δ_1 + (1−p)·δ_{−1}`.
    Bernoulli { p: f64 },
    Normal { mean: f64, var: f64 },
    /// Arcsine law with density `1/(π√(2σ²−(x−c)²))` on `(c−√2σ, c+√2σ)`.
    Arcsine { center: f64, var: f64 },
    /// Wigner's semicircle law with density `√(4σ²−(x−c)²)/(2πσ²)`.
    Semicircle { center: f64, var: f64 },
    Poisson { rate: f64 },
    /// Free Poisson law with rate `c` and jump size one.
    MarchenkoPastur { c: f64 },
    /// Root law of a spidernet with data `(a, u + 1 + c, c)`: Jacobi
    /// parameters `α_0 = 0`, `α_k = u`, `ω_1 = a`, `ω_k = c`.
    FreeMeixner { a: f64, c: f64, u: f64 },
}

impl LawSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LawSpec::Dirac { .. } => "dirac",
            LawSpec::Bernoulli { .. } => "bernoulli",
            LawSpec::Normal { .. } => "normal",
            LawSpec::Arcsine { .. } => "arcsine",
            LawSpec::Semicircle { .. } => "semicircle",
            LawSpec::Poisson { .. } => "poisson",
            LawSpec::MarchenkoPastur { .. } => "marchenko_pastur",
            LawSpec::FreeMeixner { .. } => "free_meixner",
        }
    }

    /// The law of the spidernet with parameters `(n, u)`, data
    /// `(2n, n+1+u, n)`.
    pub fn spidernet(n: u32, u: u32) -> Self {
        LawSpec::FreeMeixner { a: 2.0 * n as f64, c: n as f64, u: u as f64 }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        let bad = |s: &str| Err(MeasureError::BadLaw(s.to_string()));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            LawSpec::Dirac { c } if !finite(&[c]) => bad("non-finite position"),
            LawSpec::Bernoulli { p } if !(0.0..=1.0).contains(&p) => bad("p must lie in [0,1]"),
            LawSpec::Normal { mean, var } | LawSpec::Arcsine { center: mean, var } | LawSpec::Semicircle { center: mean, var }
                if !finite(&[mean, var]) || var < 0.0 =>
            {
                bad("variance must be nonnegative")
            }
            LawSpec::Poisson { rate } if !(rate > 0.0) || !rate.is_finite() => bad("rate must be positive"),
            LawSpec::MarchenkoPastur { c } if !(c > 0.0) || !c.is_finite() => bad("ratio must be positive"),
            LawSpec::FreeMeixner { a, c, u } => {
                if !(a > 0.0 && c > 0.0 && u >= 0.0) || !finite(&[a, c, u]) {
                    bad("free Meixner needs a > 0, c > 0, u ≥ 0")
                } else if u > a - 1.0 {
                    bad("free Meixner needs u ≤ a − 1")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Compactly supported laws.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, LawSpec::Normal { .. } | LawSpec::Poisson { .. })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            LawSpec::Dirac { c } => c,
            LawSpec::Bernoulli { p } => 2.0 * p - 1.0,
            LawSpec::Normal { mean, .. } => mean,
            LawSpec::Arcsine { center, .. } | LawSpec::Semicircle { center, .. } => center,
            LawSpec::Poisson { rate } => rate,
            LawSpec::MarchenkoPastur { c } => c,
            LawSpec::FreeMeixner { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            LawSpec::Dirac { .. } => 0.0,
            LawSpec::Bernoulli { p } => 1.0 - (2.0 * p - 1.0).powi(2),
            LawSpec::Normal { var, .. } | LawSpec::Arcsine { var, .. } | LawSpec::Semicircle { var, .. } => var,
            LawSpec::Poisson { rate } => rate,
            LawSpec::MarchenkoPastur { c } => c,
            LawSpec::FreeMeixner { a, .. } => a,
        }
    }

    /// Interval carrying the absolutely continuous part, if any.
    pub fn continuous_support(&self) -> Option<(f64, f64)> {
        match *self {
            LawSpec::Arcsine { center, var } if var > 0.0 => {
                let r = (2.0 * var).sqrt();
                Some((center - r, center + r))
            }
            LawSpec::Semicircle { center, var } if var > 0.0 => {
                let r = 2.0 * var.sqrt();
                Some((center - r, center + r))
            }
            LawSpec::MarchenkoPastur { c } => {
                let s = c.sqrt();
                Some(((1.0 - s).powi(2), (1.0 + s).powi(2)))
            }
            LawSpec::FreeMeixner { c, u, .. } => {
                let r = 2.0 * c.sqrt();
                Some((u - r, u + r))
            }
            _ => None,
        }
    }

    /// Atoms of the law (empty for purely continuous laws).
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            LawSpec::Dirac { c } => vec![(c, 1.0)],
            LawSpec::Bernoulli { p } => [(-1.0, 1.0 - p), (1.0, p)].into_iter().filter(|a| a.1 > 0.0).collect(),
            LawSpec::Arcsine { center, var } | LawSpec::Semicircle { center, var } if var == 0.0 => {
                vec![(center, 1.0)]
            }
            LawSpec::MarchenkoPastur { c } if c < 1.0 => vec![(0.0, 1.0 - c)],
            LawSpec::FreeMeixner { a, c, u } => free_meixner_atoms(a, c, u),
            _ => vec![],
        }
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, x: f64) -> f64 {
        let Some((lo, hi)) = self.continuous_support() else {
            return match *self {
                LawSpec::Normal { mean, var } if var > 0.0 => {
                    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
                }
                _ => 0.0,
            };
        };
        if x <= lo || x >= hi {
            return 0.0;
        }
        match *self {
            LawSpec::Arcsine { center, var } => 1.0 / (PI * (2.0 * var - (x - center).powi(2)).sqrt()),
            LawSpec::Semicircle { center, var } => (4.0 * var - (x - center).powi(2)).sqrt() / (2.0 * PI * var),
            LawSpec::MarchenkoPastur { .. } => ((hi - x) * (x - lo)).sqrt() / (2.0 * PI * x),
            LawSpec::FreeMeixner { a, c, u } => {
                let s = (4.0 * c - (x - u).powi(2)).max(0.0).sqrt();
                let re = x - a * (x - u) / (2.0 * c);
                let im = a * s / (2.0 * c);
                im / (PI * (re * re + im * im))
            }
            _ => 0.0,
        }
    }

    /// Closed-form Cauchy transform `G(z) = ∫ μ(dx)/(z − x)` for `Im z > 0`.
    pub fn cauchy(&self, z: Complex64) -> Result<Complex64, MeasureError> {
        let one = Complex64::new(1.0, 0.0);
        Ok(match *self {
            LawSpec::Dirac { c } => one / (z - c),
            LawSpec::Bernoulli { p } => (1.0 - p) / (z + 1.0) + p / (z - 1.0),
            LawSpec::Arcsine { center, var } => one / sqrt_upper((z - center).powi(2) - 2.0 * var),
            LawSpec::Semicircle { center, var } => {
                if var == 0.0 {
                    one / (z - center)
                } else {
                    // Rationalized to avoid cancellation for large |z|.
                    let w = z - center;
                    2.0 / (w + sqrt_upper(w * w - 4.0 * var))
                }
            }
            LawSpec::MarchenkoPastur { c } => {
                let w = z - 1.0 - c;
                2.0 / (z + 1.0 - c + sqrt_upper(w * w - 4.0 * c))
            }
            LawSpec::FreeMeixner { a, c, u } => {
                let w = z - u;
                let tail = 2.0 / (w + sqrt_upper(w * w - 4.0 * c));
                one / (z - a * tail)
            }
            LawSpec::Normal { .. } | LawSpec::Poisson { .. } => return Err(MeasureError::Unbounded(self.name())),
        })
    }

    /// Closed-form `F = 1/G`.
    pub fn f_transform(&self, z: Complex64) -> Result<Complex64, MeasureError> {
        Ok(match *self {
            LawSpec::Arcsine { center, var } => sqrt_upper((z - center).powi(2) - 2.0 * var),
            _ => 1.0 / self.cauchy(z)?,
        })
    }

    /// Moments without the boundedness restriction; Normal and Poisson
    /// moments are exact polynomial expressions in their parameters.
    pub fn truncated_moments(&self, order: usize) -> Result<MomentSequence<f64>, MeasureError> {
        if order == 0 {
            return Err(MeasureError::ZeroOrder);
        }
        self.validate()?;
        let raw_from_central = |center: f64, central: &dyn Fn(usize) -> f64| -> Vec<f64> {
            (1..=order)
                .map(|k| (0..=k).map(|j| binomial(k, j) * center.powi((k - j) as i32) * central(j)).sum())
                .collect()
        };
        let m = match *self {
            LawSpec::Dirac { c } => (1..=order).map(|k| c.powi(k as i32)).collect(),
            LawSpec::Bernoulli { p } => (1..=order).map(|k| if k % 2 == 0 { 1.0 } else { 2.0 * p - 1.0 }).collect(),
            LawSpec::Normal { mean, var } => raw_from_central(mean, &|j| {
                if j % 2 == 1 {
                    0.0
                } else {
                    double_factorial(j.saturating_sub(1)) * var.powi((j / 2) as i32)
                }
            }),
            LawSpec::Arcsine { center, var } => raw_from_central(center, &|j| {
                if j % 2 == 1 {
                    0.0
                } else {
                    binomial(j, j / 2) * (var / 2.0).powi((j / 2) as i32)
                }
            }),
            LawSpec::Semicircle { center, var } => raw_from_central(center, &|j| {
                if j % 2 == 1 {
                    0.0
                } else {
                    catalan(j / 2) * var.powi((j / 2) as i32)
                }
            }),
            LawSpec::Poisson { rate } => {
                let mut m = vec![1.0];
                for n in 0..order {
                    let next = rate * (0..=n).map(|k| binomial(n, k) * m[k]).sum::<f64>();
                    m.push(next);
                }
                m[1..].to_vec()
            }
            LawSpec::MarchenkoPastur { c } => (1..=order)
                .map(|k| {
                    (1..=k)
                        .map(|j| binomial(k, j) * binomial(k, j - 1) / k as f64 * c.powi(j as i32))
                        .sum()
                })
                .collect(),
            LawSpec::FreeMeixner { a, c, u } => jacobi_moments(a, c, u, order),
        };
        MomentSequence::new(m)
    }

    /// Cumulative distribution function (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms().iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        match (self, self.continuous_support()) {
            (_, Some((lo, hi))) => {
                if x <= lo {
                    atoms
                } else {
                    atoms + self.interval_mass(lo, x.min(hi))
                }
            }
            (LawSpec::Normal { mean, var }, None) if *var > 0.0 => {
                // No erf in std; integrate the density from far in the tail.
                let sd = var.sqrt();
                let lo = mean - 12.0 * sd;
                if x <= lo {
                    0.0
                } else {
                    gauss_legendre(|t| self.density(t), lo, x, 64)
                }
            }
            _ => atoms,
        }
    }

    /// Mass of the continuous part in `[x1, x2]`, integrated in the angle
    /// variable `x = mid + half·sin θ` that removes the edge singularities.
    pub fn interval_mass(&self, x1: f64, x2: f64) -> f64 {
        let Some((lo, hi)) = self.continuous_support() else {
            return 0.0;
        };
        let (x1, x2) = (x1.max(lo), x2.min(hi));
        if x2 <= x1 {
            return 0.0;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let angle = |x: f64| ((x - mid) / half).clamp(-1.0, 1.0).asin();
        let (t1, t2) = (angle(x1), angle(x2));
        let panels = (((t2 - t1) / PI) * 64.0).ceil().max(1.0) as usize;
        gauss_legendre(|t| self.density(mid + half * t.sin()) * half * t.cos(), t1, t2, panels)
    }

    /// Gridded realization: `points` uniform samples over the continuous
    /// support padded by [`GRID_PADDING`]. Each value is the exact mass of
    /// its trapezoid dual cell divided by the cell width, so the trapezoid
    /// mass equals the continuous mass.
    pub fn to_grid(&self, points: usize) -> Result<GridMeasure, MeasureError> {
        self.validate()?;
        let Some((lo, hi)) = self.continuous_support() else {
            return Err(MeasureError::BadLaw(format!("{} has no gridded realization", self.name())));
        };
        let points = points.max(3);
        let grid = linspace(lo - GRID_PADDING, hi + GRID_PADDING, points);
        let h = grid[1] - grid[0];
        let last = points - 1;
        let density = (0..points)
            .map(|i| {
                let a = if i == 0 { grid[0] } else { grid[i] - 0.5 * h };
                let b = if i == last { grid[last] } else { grid[i] + 0.5 * h };
                self.interval_mass(a, b) / (b - a)
            })
            .collect();
        GridMeasure::new(grid, density, self.atoms())
    }

    /// Atomic realization, available for purely atomic laws.
    pub fn to_atomic(&self) -> Option<AtomicMeasure> {
        if self.continuous_support().is_some() || !self.is_bounded() {
            return None;
        }
        AtomicMeasure::from_unsorted(self.atoms()).ok()
    }
}

impl HasMoments for LawSpec {
    /// Rejects unbounded laws; see [`LawSpec::truncated_moments`].
    fn moments(&self, order: usize) -> Result<MomentSequence<f64>, MeasureError> {
        if !self.is_bounded() {
            return Err(MeasureError::Unbounded(self.name()));
        }
        self.truncated_moments(order)
    }
}

fn double_factorial(n: usize) -> f64 {
    (1..=n).rev().step_by(2).map(|k| k as f64).product()
}

fn catalan(n: usize) -> f64 {
    binomial(2 * n, n) / (n + 1) as f64
}

/// `⟨e_0, J^k e_0⟩` for the Jacobi matrix with diagonal `(0, u, u, ..)`
/// and squared off-diagonal `(a, c, c, ..)`.
fn jacobi_moments(a: f64, c: f64, u: f64, order: usize) -> Vec<f64> {
    // Unsymmetrized Jacobi matrix: ones below the diagonal, ω_k above, so
    // integer parameters give exact integer moments.
    let size = order / 2 + 2;
    let diag: Vec<f64> = (0..size).map(|i| if i == 0 { 0.0 } else { u }).collect();
    let upper: Vec<f64> = (0..size - 1).map(|i| if i == 0 { a } else { c }).collect();
    let mut v = vec![0.0; size];
    v[0] = 1.0;
    let mut out = Vec::with_capacity(order);
    for _ in 0..order {
        let mut next = vec![0.0; size];
        for i in 0..size {
            let mut s = diag[i] * v[i];
            if i > 0 {
                s += v[i - 1];
            }
            if i + 1 < size {
                s += upper[i] * v[i + 1];
            }
            next[i] = s;
        }
        v = next;
        out.push(v[0]);
    }
    out
}

/// Real zeros of `F(x) = x − a·T(x)` outside the continuous support, with
/// weights `1/F'(x)`.
fn free_meixner_atoms(a: f64, c: f64, u: f64) -> Vec<(f64, f64)> {
    let r = 2.0 * c.sqrt();
    let tail = |x: f64| {
        let w = x - u;
        (w - w.signum() * (w * w - 4.0 * c).max(0.0).sqrt()) / (2.0 * c)
    };
    let quad_a = c - a;
    let roots: Vec<f64> = if quad_a.abs() < 1e-14 {
        if u == 0.0 {
            vec![]
        } else {
            vec![-a / u]
        }
    } else {
        let disc = a * a * u * u - 4.0 * quad_a * a * a;
        if disc < 0.0 {
            vec![]
        } else {
            let s = disc.sqrt();
            vec![(-a * u - s) / (2.0 * quad_a), (-a * u + s) / (2.0 * quad_a)]
        }
    };
    let mut atoms = Vec::new();
    for x in roots {
        if (x - u).abs() <= r * (1.0 + 1e-12) {
            continue;
        }
        let t = tail(x);
        if (x - a * t).abs() > 1e-9 * (1.0 + x.abs()) {
            continue;
        }
        let dt = t / (2.0 * c * t - (x - u));
        let weight = 1.0 / (1.0 - a * dt);
        if weight > 0.0 {
            atoms.push((x, weight));
        }
    }
    atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
    atoms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::moments;

    #[test]
    fn cauchy_is_accurate_far_from_the_support() {
        // z·G(z) − 1 ≈ mean/z, which loses every digit if computed by cancellation.
        let z = Complex64::new(0.0, 1e8);
        for law in [
            LawSpec::Semicircle { center: -1.0, var: 0.5 },
            LawSpec::MarchenkoPastur { c: 2.0 },
            LawSpec::FreeMeixner { a: 2.0, c: 1.0, u: 1.0 },
        ] {
            let mean = law.truncated_moments(1).unwrap().get(1);
            let got = z * law.cauchy(z).unwrap() - 1.0;
            assert!((got - mean / z).norm() < 1e-14, "{}: {got}", law.name());
        }
    }

    #[test]
    fn closed_form_moments() {
        let a = moments(&LawSpec::Arcsine { center: 0.0, var: 1.0 }, 4).unwrap();
        assert!((a.get(2) - 1.0).abs() < 1e-15 && (a.get(4) - 1.5).abs() < 1e-15);
        let s = moments(&LawSpec::Semicircle { center: 0.0, var: 1.0 }, 6).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        let mp = moments(&LawSpec::MarchenkoPastur { c: 1.0 }, 4).unwrap();
        assert_eq!(mp.as_slice(), &[1.0, 2.0, 5.0, 14.0]);
        let p = LawSpec::Poisson { rate: 1.0 }.truncated_moments(4).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 2.0, 5.0, 15.0]);
        assert!(matches!(moments(&LawSpec::Poisson { rate: 1.0 }, 2), Err(MeasureError::Unbounded(_))));
        let n = LawSpec::Normal { mean: 1.0, var: 2.0 }.truncated_moments(4).unwrap();
        assert_eq!(n.as_slice(), &[1.0, 3.0, 7.0, 25.0]);
    }

    /// Independent oracle: substitution x = r·sin θ turns the arcsine and
    /// semicircle integrals into smooth trigonometric ones.
    #[test]
    fn moments_against_angle_quadrature() {
        let r = 2f64.sqrt();
        let arcsine_m4 = gauss_legendre(|t| (r * t.sin()).powi(4) / PI, -PI / 2.0, PI / 2.0, 8);
        assert!((arcsine_m4 - 1.5).abs() < 1e-12);
        let semi_m4 =
            gauss_legendre(|t| (2.0 * t.sin()).powi(4) * 4.0 * t.cos().powi(2) / (2.0 * PI), -PI / 2.0, PI / 2.0, 8);
        assert!((semi_m4 - 2.0).abs() < 1e-12);
        let semi_m2 = gauss_legendre(|t| (2.0 * t.sin()).powi(2) * 4.0 * t.cos().powi(2) / (2.0 * PI), -PI / 2.0, PI / 2.0, 8);
        assert!((semi_m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_realizations_have_unit_mass_and_right_variance() {
        let laws = [
            LawSpec::Arcsine { center: 0.5, var: 1.0 },
            LawSpec::Semicircle { center: -1.0, var: 2.0 },
            LawSpec::MarchenkoPastur { c: 1.0 },
            LawSpec::MarchenkoPastur { c: 0.3 },
            LawSpec::spidernet(1, 1),
            LawSpec::spidernet(2, 3),
            LawSpec::FreeMeixner { a: 1.0, c: 1.0, u: 0.0 },
        ];
        for law in laws {
            let g = law.to_grid(DEFAULT_GRID_POINTS).unwrap();
            assert!((g.total_mass() - 1.0).abs() < 1e-9, "{law:?} mass {}", g.total_mass());
            assert!((g.variance() - law.variance()).abs() < 1e-3, "{law:?} variance {}", g.variance());
        }
    }

    #[test]
    fn spidernet_law_atom() {
        let atoms = LawSpec::spidernet(1, 1).atoms();
        assert_eq!(atoms.len(), 1);
        let (x, w) = atoms[0];
        assert!((x - (1.0 - 5f64.sqrt())).abs() < 1e-12);
        assert!((w - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!(LawSpec::spidernet(1, 0).atoms().is_empty());
    }

    #[test]
    fn free_meixner_moments_match_series_of_closed_form() {
        // S_{1,1}: F = √((z−1)²−4)+1, mean 0, variance 2, m_3 = 2·u = 2.
        let m = LawSpec::spidernet(1, 1).truncated_moments(4).unwrap();
        assert_eq!(m.as_slice()[..3], [0.0, 2.0, 2.0]);
        let g = LawSpec::spidernet(1, 1).to_grid(8192).unwrap();
        let gm = moments(&g, 4).unwrap();
        for k in 1..=4 {
            assert!((gm.get(k) - m.get(k)).abs() < 2e-3, "k={k}");
        }
    }

    #[test]
    fn law_validation() {
        assert!(LawSpec::FreeMeixner { a: 2.0, c: 1.0, u: 2.0 }.validate().is_err());
        assert!(LawSpec::Bernoulli { p: 1.5 }.validate().is_err());
        assert!(LawSpec::Semicircle { center: 0.0, var: -1.0 }.validate().is_err());
    }

    #[test]
    fn cdf_limits() {
        let law = LawSpec::Arcsine { center: 0.0, var: 1.0 };
        assert!((law.cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((law.cdf(2.0) - 1.0).abs() < 1e-12);
        assert!((law.cdf(1.0) - (0.5 + (1.0 / 2f64.sqrt()).asin() / PI)).abs() < 1e-12);
    }
}
