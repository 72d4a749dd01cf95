//! Loewner evolution in the upper half-plane.
//!
//! A [`HerglotzField`] `ν_t` drives `∂_τ w = H(τ, w)` with
//! `H(τ, w) = speed · ∫ ν_τ(du)/(w − u)`. Transition maps `f_{s,t}` are
//! obtained by integrating this ODE backward from `t` to `s`, the inverse
//! flow `g_t` by integrating it forward from `0`.

mod ode;
mod resolvent;
mod slits;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{AtomicMeasure, GridMeasure};
use crate::numeric::linspace;
use crate::transforms::{invert_f_map, HerglotzMap, MapKind, TransformError, DEFAULT_EPS_LADDER};

use ode::{integrate, Direction};

pub use resolvent::{nonlinear_resolvent, resolvent_map, NEWTON_MAX_STEPS};
pub use slits::{approximate_field_by_slits, slit_deviation};

/// Default local error tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Heights used by [`half_plane_capacity`].
pub const CAPACITY_HEIGHTS: [f64; 3] = [1e3, 3e3, 1e4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoewnerError {
    #[error("step size fell below 1e-14 at time {time}")]
    StepUnderflow { time: f64 },
    #[error("trajectory left the upper half-plane at time {time} (value {value})")]
    DomainEscape { time: f64, value: Complex64 },
    #[error("trajectory hit the hull at time {time} (value {value})")]
    HullCollision { time: f64, value: Complex64 },
    #[error("Newton iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("point {0} is not in the upper half-plane")]
    NotUpperHalfPlane(Complex64),
    #[error("times must satisfy 0 ≤ s ≤ t ≤ {horizon}, got s = {s}, t = {t}")]
    BadTimes { s: f64, t: f64, horizon: f64 },
    #[error("invalid driving function: {0}")]
    InvalidDriving(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// A driving function `U` of the slit equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrivingFunction {
    Constant { value: f64 },
    /// `values[i]` on `[breaks[i−1], breaks[i])`, with `values.len() == breaks.len() + 1`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation of samples, held constant outside `[times[0], times[last]]`.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|p| p[0] < p[1])
}

impl DrivingFunction {
    pub fn constant(value: f64) -> Result<Self, LoewnerError> {
        let u = Self::Constant { value };
        u.validate()?;
        Ok(u)
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self, LoewnerError> {
        let u = Self::PiecewiseConstant { breaks, values };
        u.validate()?;
        Ok(u)
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self, LoewnerError> {
        let u = Self::Sampled { times, values };
        u.validate()?;
        Ok(u)
    }

    /// Samples `f` at `samples + 1` equally spaced times on `[0, horizon]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, horizon: f64, samples: usize) -> Result<Self, LoewnerError> {
        let times = linspace(0.0, horizon, samples.max(1) + 1);
        let values = times.iter().map(|&t| f(t)).collect();
        Self::sampled(times, values)
    }

    pub fn validate(&self) -> Result<(), LoewnerError> {
        let bad = |m: &str| Err(LoewnerError::InvalidDriving(m.to_string()));
        match self {
            Self::Constant { value } if !value.is_finite() => bad("non-finite value"),
            Self::Constant { .. } => Ok(()),
            Self::PiecewiseConstant { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    bad("piecewise constant needs one more value than breaks")
                } else if !strictly_increasing(breaks) || !values.iter().all(|v| v.is_finite()) {
                    bad("breaks must be finite and strictly increasing")
                } else {
                    Ok(())
                }
            }
            Self::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    bad("sampled driving needs matching non-empty times and values")
                } else if !strictly_increasing(times) || !values.iter().all(|v| v.is_finite()) {
                    bad("times must be finite and strictly increasing")
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::PiecewiseConstant { breaks, values } => values[breaks.partition_point(|&b| b <= t)],
            Self::Sampled { times, values } => {
                let i = times.partition_point(|&s| s <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let r = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    values[i - 1] + r * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// Range bound `M = max |U|`.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Constant { value } => value.abs(),
            Self::PiecewiseConstant { values, .. } | Self::Sampled { values, .. } => {
                values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    }

    /// Times where `U` jumps or has a kink.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Self::Constant { .. } => &[],
            Self::PiecewiseConstant { breaks, .. } => breaks,
            Self::Sampled { times, .. } => times,
        }
    }
}

type FieldFn = Arc<dyn Fn(f64) -> AtomicMeasure + Send + Sync>;

/// A time-indexed family of probability measures `ν_t` with support in
/// `[−bound, bound]`, defined on `[0, horizon]`.
#[derive(Clone)]
pub struct HerglotzField {
    measure_at: FieldFn,
    bound: f64,
    horizon: f64,
    speed: f64,
    breaks: Vec<f64>,
}

impl fmt::Debug for HerglotzField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HerglotzField")
            .field("bound", &self.bound)
            .field("horizon", &self.horizon)
            .field("speed", &self.speed)
            .field("breaks", &self.breaks.len())
            .finish_non_exhaustive()
    }
}

impl HerglotzField {
    /// The evaluator must be reentrant and return measures supported in
    /// `[−bound, bound]`.
    pub fn new(
        measure_at: impl Fn(f64) -> AtomicMeasure + Send + Sync + 'static,
        bound: f64,
        horizon: f64,
    ) -> Result<Self, LoewnerError> {
        if !(horizon > 0.0 && horizon.is_finite()) || !(bound >= 0.0 && bound.is_finite()) {
            return Err(LoewnerError::InvalidField(format!("bound {bound}, horizon {horizon}")));
        }
        Ok(Self { measure_at: Arc::new(measure_at), bound, horizon, speed: 1.0, breaks: vec![] })
    }

    /// A field that does not depend on time.
    pub fn constant(measure: AtomicMeasure, horizon: f64) -> Result<Self, LoewnerError> {
        let bound = measure.support_radius();
        Self::new(move |_| measure.clone(), bound, horizon)
    }

    /// The slit field `ν_t = δ_{U(t)}`.
    pub fn from_driving(driving: &DrivingFunction, horizon: f64) -> Result<Self, LoewnerError> {
        driving.validate()?;
        let bound = driving.bound();
        let breaks = driving.breakpoints().to_vec();
        let u = driving.clone();
        Ok(Self::new(move |t| AtomicMeasure::dirac(u.value(t)), bound, horizon)?.with_breaks(breaks))
    }

    /// Declares times where `ν_t` is discontinuous; integration restarts there.
    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| b.is_finite());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub fn measure_at(&self, t: f64) -> AtomicMeasure {
        (self.measure_at)(t)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Constant factor in front of the field.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn boundaries(&self, s: f64, t: f64) -> Vec<f64> {
        let mut b = vec![s];
        b.extend(self.breaks.iter().copied().filter(|&x| x > s && x < t));
        b.push(t);
        b
    }

    fn check_times(&self, s: f64, t: f64) -> Result<(), LoewnerError> {
        let ok = s >= 0.0 && s <= t && t <= self.horizon * (1.0 + 1e-12);
        if ok {
            Ok(())
        } else {
            Err(LoewnerError::BadTimes { s, t, horizon: self.horizon })
        }
    }
}

/// A value `f_{s,t}(z)` with trajectory diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainPoint {
    pub s: f64,
    pub t: f64,
    pub z: Complex64,
    pub value: Complex64,
    /// `value − z`, accurate even when small next to `z`.
    pub displacement: Complex64,
    pub min_im: f64,
    pub steps: usize,
}

fn check_point(z: Complex64) -> Result<(), LoewnerError> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(LoewnerError::NotUpperHalfPlane(z))
    }
}

/// `f_{s,t}(z)` with diagnostics.
pub fn evaluate_chain_point(
    field: &HerglotzField,
    s: f64,
    t: f64,
    z: Complex64,
    tol: f64,
) -> Result<ChainPoint, LoewnerError> {
    field.check_times(s, t)?;
    check_point(z)?;
    let tr = integrate(field, z, &field.boundaries(s, t), Direction::Backward, tol)?;
    Ok(ChainPoint {
        s,
        t,
        z,
        value: z + tr.displacement,
        displacement: tr.displacement,
        min_im: tr.min_im,
        steps: tr.steps,
    })
}

/// Transition map `f_{s,t}(z)`.
pub fn evaluate_chain(field: &HerglotzField, s: f64, t: f64, z: Complex64, tol: f64) -> Result<Complex64, LoewnerError> {
    evaluate_chain_point(field, s, t, z, tol).map(|p| p.value)
}

/// `f_t(z)` for the slit equation driven by `driving`.
pub fn slit_chain(driving: &DrivingFunction, t: f64, z: Complex64, tol: f64) -> Result<Complex64, LoewnerError> {
    let field = HerglotzField::from_driving(driving, t.max(f64::MIN_POSITIVE))?;
    evaluate_chain(&field, 0.0, t, z, tol)
}

/// `g_t(w)`, the inverse of `f_t`, by integrating forward from time 0.
pub fn inverse_flow(field: &HerglotzField, t: f64, w: Complex64, tol: f64) -> Result<Complex64, LoewnerError> {
    field.check_times(0.0, t)?;
    check_point(w)?;
    let tr = integrate(field, w, &field.boundaries(0.0, t), Direction::Forward, tol)?;
    Ok(w + tr.displacement)
}

/// `f_t` as an F-transform map; failed evaluations give NaN.
pub fn chain_map(field: &HerglotzField, t: f64, tol: f64) -> HerglotzMap {
    let field = field.clone();
    HerglotzMap::new(MapKind::FTransform, move |z| {
        evaluate_chain(&field, 0.0, t, z, tol).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    })
}

/// A grid covering the support of `μ_t`.
pub fn default_chain_grid(field: &HerglotzField, t: f64, points: usize) -> Vec<f64> {
    let r = field.bound() + 2.0 * (2.0 * t).sqrt() + 0.25;
    linspace(-r, r, points)
}

/// The measure `μ_t` with F-transform `f_t`, recovered by Stieltjes inversion.
pub fn chain_measure(field: &HerglotzField, t: f64, grid: &[f64]) -> Result<GridMeasure, LoewnerError> {
    field.check_times(0.0, t)?;
    let inv = invert_f_map(&chain_map(field, t, DEFAULT_TOL), grid, &DEFAULT_EPS_LADDER)?;
    Ok(inv.measure)
}

/// The field whose chain is `h_t(z) = f_{dt}(cz)/c`.
pub fn scale_chain(field: &HerglotzField, c: f64, d: f64) -> Result<HerglotzField, LoewnerError> {
    if !(c > 0.0 && d > 0.0 && c.is_finite() && d.is_finite()) {
        return Err(LoewnerError::InvalidField(format!("scale factors must be positive, got c = {c}, d = {d}")));
    }
    let inner = field.measure_at.clone();
    let measure_at = move |t: f64| {
        let nu = inner(d * t);
        AtomicMeasure::from_raw(nu.atoms().iter().map(|&(u, w)| (u / c, w)).collect())
    };
    Ok(HerglotzField {
        measure_at: Arc::new(measure_at),
        bound: field.bound / c,
        horizon: field.horizon / d,
        speed: field.speed * d / (c * c),
        breaks: field.breaks.iter().map(|b| b / d).collect(),
    })
}

/// Half-plane capacity of the hull at time `t`: minus the coefficient of
/// `1/z` in `f_t`, fitted at large heights.
pub fn half_plane_capacity(field: &HerglotzField, t: f64, tol: f64) -> Result<f64, LoewnerError> {
    // Fit z·(f_t(z) − z) ≈ a + b/z by complex least squares.
    let mut rows = Vec::with_capacity(CAPACITY_HEIGHTS.len());
    for &y in &CAPACITY_HEIGHTS {
        let z = Complex64::new(0.0, y);
        let p = evaluate_chain_point(field, 0.0, t, z, tol)?;
        rows.push((1.0 / z, z * p.displacement));
    }
    let (mut s11, mut s12, mut s22) = (0.0, Complex64::new(0.0, 0.0), 0.0);
    let (mut r1, mut r2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for &(x, q) in &rows {
        s11 += 1.0;
        s12 += x;
        s22 += x.norm_sqr();
        r1 += q;
        r2 += x.conj() * q;
    }
    // Normal equations [[s11, s12], [s12*, s22]] (a, b) = (r1, r2).
    let det = s11 * s22 - s12.norm_sqr();
    let a = (s22 * r1 - s12 * r2) / det;
    Ok(-a.re)
}

/// A sampled driving function `√(κ/2)·B_t` on `[0, horizon]`.
pub fn sle_driving(kappa: f64, horizon: f64, dt: f64, seed: u64) -> Result<DrivingFunction, LoewnerError> {
    if !(kappa >= 0.0 && kappa.is_finite()) || !(dt > 0.0) || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(LoewnerError::InvalidDriving(format!("kappa {kappa}, horizon {horizon}, dt {dt}")));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut rng = StdRng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    times.push(0.0);
    values.push(0.0);
    let mut u = 0.0;
    for k in 1..=steps {
        let t = if k == steps { horizon } else { k as f64 * dt };
        let h = t - times[k - 1];
        u += (0.5 * kappa * h).sqrt() * unit.sample(&mut rng);
        times.push(t);
        values.push(u);
    }
    DrivingFunction::sampled(times, values)
}
