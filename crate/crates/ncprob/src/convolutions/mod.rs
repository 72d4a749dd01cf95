//! Classical, Boolean, free, monotone and anti-monotone additive
//! convolutions on moment sequences and measures, and the limit-theorem
//! iterates.
//!
//! Moment-level convolutions are generic over [`Scalar`] and exact over
//! the rationals. At measure level, convolutions of atomic measures are
//! computed as atomic measures: classical exactly on the sum grid, monotone
//! and Boolean from the real zeros of the combined F-transform with
//! weights given by residues, and free as a Gauss quadrature approximant
//! built from exact moments.

mod quadrature;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{AtomicMeasure, Measure, MeasureError, MomentSequence};
use crate::numeric::{binomial_exact, linspace, rational_from_f64, Rational, Scalar};
use crate::transforms::{
    boolean_cumulants_to_moments, f_series, free_cumulants_to_moments, invert_f_map, moments_from_f_series,
    moments_to_boolean_cumulants, moments_to_free_cumulants, CauchyTransform, HerglotzMap, LaurentSeries, MapKind,
    TransformError, DEFAULT_EPS_LADDER,
};

pub use quadrature::{gauss_rule, recurrence_coefficients};

/// Default truncation order for moment-level work.
pub const DEFAULT_ORDER: usize = 8;
/// Default number of quadrature nodes for measure-level free convolution.
pub const DEFAULT_FREE_NODES: usize = 8;
/// Grid resolution for numeric inversion of non-atomic inputs.
const INVERSION_POINTS: usize = 4001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvolutionError {
    #[error("moment orders differ ({left} vs {right})")]
    Truncation { left: usize, right: usize },
    #[error("base law must have mean 0 and variance 1 (got {mean}, {variance})")]
    NotNormalized { mean: f64, variance: f64 },
    #[error("moment sequence is not positive definite at step {0}")]
    InvalidMoments(usize),
    #[error("number of convolution factors must be at least 1")]
    ZeroCount,
    #[error("{0} is not supported for these inputs")]
    Unsupported(&'static str),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionKind {
    Classical,
    Boolean,
    Free,
    Monotone,
    AntiMonotone,
}

impl ConvolutionKind {
    pub const ALL: [ConvolutionKind; 5] = [
        ConvolutionKind::Classical,
        ConvolutionKind::Boolean,
        ConvolutionKind::Free,
        ConvolutionKind::Monotone,
        ConvolutionKind::AntiMonotone,
    ];
}

impl std::str::FromStr for ConvolutionKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classical" => Ok(ConvolutionKind::Classical),
            "boolean" => Ok(ConvolutionKind::Boolean),
            "free" => Ok(ConvolutionKind::Free),
            "monotone" => Ok(ConvolutionKind::Monotone),
            "anti_monotone" | "anti-monotone" | "antimonotone" => Ok(ConvolutionKind::AntiMonotone),
            other => Err(format!("unknown convolution kind '{other}'")),
        }
    }
}

/// Classical cumulants from `m_n = Σ_k C(n−1, k−1) c_k m_{n−k}`.
pub fn moments_to_classical_cumulants<T: Scalar>(m: &MomentSequence<T>) -> Vec<T> {
    let full = m.with_zeroth();
    let mut c: Vec<T> = Vec::with_capacity(m.order());
    for n in 1..=m.order() {
        let mut s = full[n].clone();
        for k in 1..n {
            s = s - binomial_exact::<T>(n - 1, k - 1) * c[k - 1].clone() * full[n - k].clone();
        }
        c.push(s);
    }
    c
}

pub fn classical_cumulants_to_moments<T: Scalar>(c: &[T]) -> Result<MomentSequence<T>, ConvolutionError> {
    let mut full = vec![T::one()];
    for n in 1..=c.len() {
        let mut s = T::zero();
        for k in 1..=n {
            s = s + binomial_exact::<T>(n - 1, k - 1) * c[k - 1].clone() * full[n - k].clone();
        }
        full.push(s);
    }
    Ok(MomentSequence::new(full[1..].to_vec())?)
}

fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

/// `μ ★ ν` at the level of moments `m_1..m_K`.
pub fn convolve_moments<T: Scalar>(
    kind: ConvolutionKind,
    mu: &MomentSequence<T>,
    nu: &MomentSequence<T>,
) -> Result<MomentSequence<T>, ConvolutionError> {
    if mu.order() != nu.order() {
        return Err(ConvolutionError::Truncation { left: mu.order(), right: nu.order() });
    }
    match kind {
        ConvolutionKind::Classical => {
            let (a, b) = (mu.with_zeroth(), nu.with_zeroth());
            let m = (1..=mu.order())
                .map(|n| {
                    (0..=n).fold(T::zero(), |s, k| s + binomial_exact::<T>(n, k) * a[k].clone() * b[n - k].clone())
                })
                .collect();
            Ok(MomentSequence::new(m)?)
        }
        ConvolutionKind::Boolean => Ok(boolean_cumulants_to_moments(&add(
            &moments_to_boolean_cumulants(mu),
            &moments_to_boolean_cumulants(nu),
        ))?),
        ConvolutionKind::Free => Ok(free_cumulants_to_moments(&add(
            &moments_to_free_cumulants(mu),
            &moments_to_free_cumulants(nu),
        ))?),
        ConvolutionKind::Monotone => {
            let f = f_series(mu)?.compose(&f_series(nu)?).map_err(TransformError::from)?;
            Ok(moments_from_f_series(&f)?)
        }
        ConvolutionKind::AntiMonotone => convolve_moments(ConvolutionKind::Monotone, nu, mu),
    }
}

/// Boolean root: `ν` with `ν^{⊎n} = μ`, from `B_ν = B_μ/n`.
pub fn boolean_divisibility_root<T: Scalar>(
    mu: &MomentSequence<T>,
    n: u64,
) -> Result<MomentSequence<T>, ConvolutionError> {
    if n == 0 {
        return Err(ConvolutionError::ZeroCount);
    }
    let n = T::from_i64(n as i64);
    let beta: Vec<T> = moments_to_boolean_cumulants(mu).into_iter().map(|b| b / n.clone()).collect();
    Ok(boolean_cumulants_to_moments(&beta)?)
}

/// `F^{∘n}` by repeated squaring.
fn compose_power<T: Scalar>(f: &LaurentSeries<T>, mut n: u64) -> Result<LaurentSeries<T>, ConvolutionError> {
    let mut acc: Option<LaurentSeries<T>> = None;
    let mut base = f.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a.compose(&base).map_err(TransformError::from)?,
            });
        }
        n >>= 1;
        if n > 0 {
            base = base.compose(&base).map_err(TransformError::from)?;
        }
    }
    acc.ok_or(ConvolutionError::ZeroCount)
}

/// `n^{1 − k/2}`, with integer powers wherever possible.
fn clt_factor(n: u64, k: usize) -> f64 {
    let nf = n as f64;
    if k.is_multiple_of(2) {
        nf.powi(1 - (k / 2) as i32)
    } else {
        nf.powi(1 - k.div_ceil(2) as i32) * nf.sqrt()
    }
}

/// Moments of `D_{1/√n}(μ^{★n})` for a base law with mean 0 and
/// variance 1: cumulants are multiplied by `n^{1−k/2}` for the classical,
/// Boolean and free cases; the monotone case composes `F` with itself
/// `n` times and dilates.
pub fn clt_iterate(
    kind: ConvolutionKind,
    base: &MomentSequence<f64>,
    n: u64,
) -> Result<MomentSequence<f64>, ConvolutionError> {
    if n == 0 {
        return Err(ConvolutionError::ZeroCount);
    }
    let mean = base.get(1);
    let variance = if base.order() >= 2 { base.get(2) } else { f64::NAN };
    if !(mean.abs() <= 1e-12 && (variance - 1.0).abs() <= 1e-12) {
        return Err(ConvolutionError::NotNormalized { mean, variance });
    }
    let scale = |c: Vec<f64>| -> Vec<f64> { c.iter().enumerate().map(|(i, v)| v * clt_factor(n, i + 1)).collect() };
    match kind {
        ConvolutionKind::Classical => classical_cumulants_to_moments(&scale(moments_to_classical_cumulants(base))),
        ConvolutionKind::Boolean => Ok(boolean_cumulants_to_moments(&scale(moments_to_boolean_cumulants(base)))?),
        ConvolutionKind::Free => Ok(free_cumulants_to_moments(&scale(moments_to_free_cumulants(base)))?),
        ConvolutionKind::Monotone | ConvolutionKind::AntiMonotone => {
            let f = compose_power(&f_series(base)?, n)?;
            // F_λ(z) = λ F(z/λ): the z^{−j} coefficient gains λ^{j+1}.
            let lambda = 1.0 / (n as f64).sqrt();
            let coeffs: Vec<f64> = (-1..=f.precision()).map(|j| f.coeff_w(j) * lambda.powi(j + 1)).collect();
            Ok(moments_from_f_series(&LaurentSeries::new(-1, coeffs))?)
        }
    }
}

/// Exact moments `m_0..m_{count−1}` of an atomic measure. The last
/// weight absorbs the float rounding of the total so that `m_0 = 1` and
/// all data stay dyadic.
fn exact_moments(mu: &AtomicMeasure, count: usize) -> Vec<Rational> {
    let atoms = mu.atoms();
    let xs: Vec<Rational> = atoms.iter().map(|a| rational_from_f64(a.0)).collect();
    let mut ws: Vec<Rational> = atoms.iter().map(|a| rational_from_f64(a.1)).collect();
    let head: Rational = ws[..ws.len() - 1].iter().sum();
    *ws.last_mut().expect("atomic measures are nonempty") = Rational::from_integer(1.into()) - head;
    let mut out = Vec::with_capacity(count);
    let mut powers = ws;
    for _ in 0..count {
        out.push(powers.iter().sum());
        for (p, x) in powers.iter_mut().zip(&xs) {
            *p = &*p * x;
        }
    }
    out
}

fn quadrature_from_moments(full: &[Rational]) -> Result<AtomicMeasure, ConvolutionError> {
    let (alpha, beta) = recurrence_coefficients(full)?;
    gauss_rule(&alpha, &beta)
}

/// `nodes`-point Gauss quadrature approximant of `μ^{⊞n}`, matching its
/// first `2·nodes − 1` moments exactly (up to the final float rounding).
pub fn free_power(mu: &AtomicMeasure, n: u64, nodes: usize) -> Result<AtomicMeasure, ConvolutionError> {
    if n == 0 {
        return Err(ConvolutionError::ZeroCount);
    }
    let count = 2 * nodes.max(1);
    let m = MomentSequence::new(exact_moments(mu, count)[1..].to_vec())?;
    let factor = Rational::from_integer(n.into());
    let kappa: Vec<Rational> = moments_to_free_cumulants(&m).into_iter().map(|k| k * &factor).collect();
    quadrature_from_moments(&free_cumulants_to_moments(&kappa)?.with_zeroth())
}

/// Real zeros of `G(x) = Σ w/(x − a)`, one between consecutive atoms.
fn cauchy_zeros(mu: &AtomicMeasure) -> Vec<f64> {
    mu.atoms()
        .windows(2)
        .map(|p| bisect_increasing(|x| -mu.cauchy_raw(Complex64::new(x, 0.0)).re, p[0].0, p[1].0))
        .collect()
}

/// Zero of a function increasing from −∞ to +∞ on the open interval.
fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero of an increasing function on a possibly unbounded interval
/// `(lo, hi)` between consecutive poles.
fn branch_zero(f: &impl Fn(f64) -> f64, lo: Option<f64>, hi: Option<f64>, scale: f64) -> f64 {
    let lo = lo.unwrap_or_else(|| {
        let anchor = hi.unwrap_or(0.0);
        let mut step = scale;
        while f(anchor - step) >= 0.0 {
            step *= 2.0;
        }
        anchor - step
    });
    let hi = hi.unwrap_or_else(|| {
        let mut step = scale;
        while f(lo + step) <= 0.0 {
            step *= 2.0;
        }
        lo + step
    });
    bisect_increasing(f, lo, hi)
}

/// `F(x)` and `F'(x)` on the real line, stable at and near atoms.
fn f_real(mu: &AtomicMeasure, x: f64) -> (f64, f64) {
    let atoms = mu.atoms();
    let j = atoms
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - x).abs().total_cmp(&(b.1 .0 - x).abs()))
        .map(|p| p.0)
        .unwrap_or(0);
    let (aj, wj) = atoms[j];
    let d = x - aj;
    let (mut r, mut s) = (0.0, 0.0);
    for (i, &(a, w)) in atoms.iter().enumerate() {
        if i != j {
            r += w / (x - a);
            s += w / ((x - a) * (x - a));
        }
    }
    let den = wj + r * d;
    (d / den, (wj + s * d * d) / (den * den))
}

fn support_scale(mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
    1.0 + mu.support_radius() + nu.support_radius()
}

/// Atoms `x` solving `F_ν(x) = a` for every atom `a` of `μ`; the weight is
/// `w_a / F_ν'(x)`.
fn monotone_atomic(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<AtomicMeasure, ConvolutionError> {
    let poles = cauchy_zeros(nu);
    let scale = support_scale(mu, nu);
    let mut atoms = Vec::with_capacity(mu.len() * nu.len());
    for &(a, w) in mu.atoms() {
        for b in 0..=poles.len() {
            let lo = if b == 0 { None } else { Some(poles[b - 1]) };
            let hi = poles.get(b).copied();
            let x = branch_zero(&|x| f_real(nu, x).0 - a, lo, hi, scale);
            atoms.push((x, w / f_real(nu, x).1));
        }
    }
    Ok(AtomicMeasure::normalized(atoms)?)
}

/// Zeros of `F_μ + F_ν − x`, increasing between the merged poles.
fn boolean_atomic(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<AtomicMeasure, ConvolutionError> {
    let mut poles = cauchy_zeros(mu);
    poles.extend(cauchy_zeros(nu));
    poles.sort_by(f64::total_cmp);
    poles.dedup();
    let scale = support_scale(mu, nu);
    let h = |x: f64| f_real(mu, x).0 + f_real(nu, x).0 - x;
    let atoms = (0..=poles.len())
        .map(|b| {
            let lo = if b == 0 { None } else { Some(poles[b - 1]) };
            let x = branch_zero(&h, lo, poles.get(b).copied(), scale);
            (x, 1.0 / (f_real(mu, x).1 + f_real(nu, x).1 - 1.0))
        })
        .collect();
    Ok(AtomicMeasure::normalized(atoms)?)
}

fn classical_atomic(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<AtomicMeasure, ConvolutionError> {
    let atoms =
        mu.atoms().iter().flat_map(|&(x, w)| nu.atoms().iter().map(move |&(y, v)| (x + y, w * v))).collect();
    Ok(AtomicMeasure::normalized(atoms)?)
}

/// `μ ★ ν` for atomic measures; see the module notes for each kind.
pub fn convolve_atomic(
    kind: ConvolutionKind,
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
) -> Result<AtomicMeasure, ConvolutionError> {
    match kind {
        ConvolutionKind::Classical => classical_atomic(mu, nu),
        ConvolutionKind::Monotone => monotone_atomic(mu, nu),
        ConvolutionKind::AntiMonotone => monotone_atomic(nu, mu),
        ConvolutionKind::Boolean => boolean_atomic(mu, nu),
        ConvolutionKind::Free => {
            let count = 2 * DEFAULT_FREE_NODES;
            let m = |x: &AtomicMeasure| MomentSequence::new(exact_moments(x, count)[1..].to_vec());
            let sum = convolve_moments(kind, &m(mu)?, &m(nu)?)?;
            quadrature_from_moments(&sum.with_zeroth())
        }
    }
}

/// `μ ★ ν` for general measures. Atomic pairs use [`convolve_atomic`];
/// otherwise monotone and Boolean convolutions are recovered by Stieltjes
/// inversion of the combined F-transform on `[−R, R]`, `R` the sum of the
/// support radii.
pub fn convolve_measures(kind: ConvolutionKind, mu: &Measure, nu: &Measure) -> Result<Measure, ConvolutionError> {
    if let (Measure::Atomic(a), Measure::Atomic(b)) = (mu, nu) {
        return Ok(Measure::Atomic(convolve_atomic(kind, a, b)?));
    }
    let (outer, inner) = match kind {
        ConvolutionKind::Monotone | ConvolutionKind::Boolean => (mu.clone(), nu.clone()),
        ConvolutionKind::AntiMonotone => (nu.clone(), mu.clone()),
        _ => return Err(ConvolutionError::Unsupported("measure-level convolution of gridded measures")),
    };
    let f: HerglotzMap = if kind == ConvolutionKind::Boolean {
        HerglotzMap::new(MapKind::FTransform, move |z| 1.0 / outer.cauchy_raw(z) + 1.0 / inner.cauchy_raw(z) - z)
    } else {
        HerglotzMap::new(MapKind::FTransform, move |z| 1.0 / outer.cauchy_raw(1.0 / inner.cauchy_raw(z)))
    };
    let r = mu.support_radius() + nu.support_radius();
    let pad = 0.05 * r.max(1.0);
    let grid = linspace(-r - pad, r + pad, INVERSION_POINTS);
    Ok(Measure::Grid(invert_f_map(&f, &grid, &DEFAULT_EPS_LADDER)?.measure))
}
