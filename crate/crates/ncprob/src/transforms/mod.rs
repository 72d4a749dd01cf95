//! Cauchy, F and B transforms of measures, Nevanlinna data, the Hilbert
//! transform, Stieltjes inversion and the moment/cumulant calculus.

mod cumulants;
mod inversion;
pub mod laurent;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::measures::{AtomicMeasure, GridMeasure, LawSpec, Measure, MeasureError};

pub use cumulants::{
    boolean_cumulants_to_moments, f_series, free_cumulants_to_moments, moments_from_f_series,
    moments_to_boolean_cumulants, moments_to_free_cumulants,
};
pub use inversion::{
    invert_f_map, scan_atoms, stieltjes_invert, Inversion, DEFAULT_EPS_LADDER, MASS_WINDOW, MIN_ATOM_MASS,
};
pub use laurent::{LaurentSeries, SeriesError};

/// Smallest imaginary part at which maps are evaluated.
pub const MIN_IM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("point {0} is not in the upper half-plane")]
    NotUpperHalfPlane(Complex64),
    #[error("Cauchy transform vanishes numerically at {0}")]
    Degenerate(Complex64),
    #[error("iy·G(iy) = {value} at y = 1e6; not a normalized Cauchy transform")]
    Normalization { value: Complex64 },
    #[error("recovered mass {0} outside [0.98, 1.02]")]
    Mass(f64),
    #[error("map takes value {value} with negative imaginary part at {z}")]
    NotHerglotz { z: Complex64, value: Complex64 },
    #[error("evaluation point {0} is within 1e-9 of an atom")]
    AtomCollision(f64),
    #[error("inversion grid must have at least two strictly increasing points")]
    BadGrid,
    #[error("epsilon ladder needs at least two positive values")]
    BadLadder,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// What a [`HerglotzMap`] is known to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Maps the upper half-plane into the lower one, `iy·G(iy) → 1`.
    CauchyTransform,
    /// Reciprocal of a Cauchy transform, `Im F(z) ≥ Im z`.
    FTransform,
    /// `z − F(z)`, with nonpositive imaginary part.
    BTransform,
    /// Maps the upper half-plane into its closure; generates a semigroup.
    Generator,
    Generic,
}

type Evaluator = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A holomorphic map on the upper half-plane evaluated numerically.
#[derive(Clone)]
pub struct HerglotzMap {
    eval: Evaluator,
    kind: MapKind,
}

impl fmt::Debug for HerglotzMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HerglotzMap").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl HerglotzMap {
    pub fn new(kind: MapKind, f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), kind }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    /// The Cauchy transform of a measure.
    pub fn cauchy_of<M: CauchyTransform + Send + Sync + 'static>(measure: M) -> Self {
        Self::new(MapKind::CauchyTransform, move |z| measure.cauchy_raw(z))
    }

    /// The F-transform of a measure.
    pub fn f_transform_of<M: CauchyTransform + Send + Sync + 'static>(measure: M) -> Self {
        Self::new(MapKind::FTransform, move |z| 1.0 / measure.cauchy_raw(z))
    }

    /// `1/f` for an F-transform, `z − f` for a B-transform, and so on.
    pub fn reciprocal(&self) -> Self {
        let f = self.eval.clone();
        let kind = match self.kind {
            MapKind::FTransform => MapKind::CauchyTransform,
            MapKind::CauchyTransform => MapKind::FTransform,
            _ => MapKind::Generic,
        };
        Self::new(kind, move |z| 1.0 / f(z))
    }
}

/// Measures whose Cauchy transform can be evaluated.
pub trait CauchyTransform {
    /// `∫ μ(dx)/(z − x)` without argument checks.
    fn cauchy_raw(&self, z: Complex64) -> Complex64;
}

fn atom_sum(atoms: &[(f64, f64)], z: Complex64) -> Complex64 {
    atoms.iter().map(|&(x, w)| w / (z - x)).sum()
}

impl CauchyTransform for AtomicMeasure {
    fn cauchy_raw(&self, z: Complex64) -> Complex64 {
        atom_sum(self.atoms(), z)
    }
}

/// `(1+r)·ln(1+r) − r`, with a series for small `|r|`.
fn log_remainder(r: Complex64) -> Complex64 {
    if r.norm() < 0.1 {
        let mut pow = r * r;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 2..24 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * pow / (k * (k - 1)) as f64;
            pow *= r;
        }
        acc
    } else {
        (1.0 + r) * (1.0 + r).ln() - r
    }
}

impl CauchyTransform for GridMeasure {
    /// Exact integral of the piecewise-linear density against `1/(z − x)`
    /// plus the atoms.
    fn cauchy_raw(&self, z: Complex64) -> Complex64 {
        let g = self.grid();
        let d = self.density();
        let mut acc = atom_sum(self.atoms(), z);
        for i in 1..g.len() {
            if d[i - 1] == 0.0 && d[i] == 0.0 {
                continue;
            }
            let (x0, x1) = (g[i - 1], g[i]);
            let h = x1 - x0;
            let far = z - x1;
            let r = h / far;
            // ∫ dx/(z−x) and ∫ (x−x0)/(z−x) dx over the cell.
            let log = crate::numeric::ln_1p(r);
            let lin = far * log_remainder(r);
            let slope = (d[i] - d[i - 1]) / h;
            acc += d[i - 1] * log + slope * lin;
        }
        acc
    }
}

impl CauchyTransform for Measure {
    fn cauchy_raw(&self, z: Complex64) -> Complex64 {
        match self {
            Measure::Atomic(a) => a.cauchy_raw(z),
            Measure::Grid(g) => g.cauchy_raw(z),
        }
    }
}

impl CauchyTransform for LawSpec {
    /// Unbounded laws evaluate to NaN; use [`cauchy`] for checked access.
    fn cauchy_raw(&self, z: Complex64) -> Complex64 {
        self.cauchy(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }
}

fn check_upper(z: Complex64) -> Result<(), TransformError> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(TransformError::NotUpperHalfPlane(z))
    }
}

/// `G_μ(z) = ∫ μ(dx)/(z − x)` for `Im z > 0`.
pub fn cauchy<M: CauchyTransform + ?Sized>(measure: &M, z: Complex64) -> Result<Complex64, TransformError> {
    check_upper(z)?;
    Ok(measure.cauchy_raw(z))
}

/// `F_μ = 1/G_μ`.
pub fn f_transform<M: CauchyTransform + ?Sized>(measure: &M, z: Complex64) -> Result<Complex64, TransformError> {
    let g = cauchy(measure, z)?;
    if !(g.norm() >= 1e-300) {
        return Err(TransformError::Degenerate(z));
    }
    Ok(1.0 / g)
}

/// `B_μ(z) = z − F_μ(z)`.
pub fn b_transform<M: CauchyTransform + ?Sized>(measure: &M, z: Complex64) -> Result<Complex64, TransformError> {
    Ok(z - f_transform(measure, z)?)
}

/// The scalars `(a, b)` of the Nevanlinna representation
/// `f(z) = a + b·z + ∫ (1 + xz)/(x − z) γ(dx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NevanlinnaData {
    pub a: f64,
    pub b: f64,
}

/// Probe points for the Herglotz sign check.
fn herglotz_probes() -> Vec<Complex64> {
    let mut p = Vec::new();
    for &y in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
        for &x in &[-10.0, -1.0, -0.3, 0.0, 0.5, 2.0, 10.0] {
            p.push(Complex64::new(x, y));
        }
    }
    p
}

/// Reads off `a = Re f(i)` and `b = lim f(iy)/(iy)`, the latter from
/// `y ∈ {10³, .., 10⁶}` with one Richardson step in `1/y²`.
pub fn nevanlinna_extract(f: &HerglotzMap) -> Result<NevanlinnaData, TransformError> {
    for z in herglotz_probes() {
        let v = f.eval(z);
        if v.im < -1e-9 {
            return Err(TransformError::NotHerglotz { z, value: v });
        }
    }
    let ys = [1e3, 1e4, 1e5, 1e6];
    let ratios: Vec<f64> = ys.iter().map(|&y| f.eval(Complex64::new(0.0, y)).im / y).collect();
    let (y1, y2) = (ys[2], ys[3]);
    let (q1, q2) = (ratios[2], ratios[3]);
    let b = (y2 * y2 * q2 - y1 * y1 * q1) / (y2 * y2 - y1 * y1);
    let a = f.eval(Complex64::i()).re;
    Ok(NevanlinnaData { a, b: b.max(0.0) })
}

/// Principal value `(1/π)·PV ∫ μ(dt)/(x − t)`, as `(1/π) Re G(x + iε)`
/// extrapolated linearly from `ε` and `ε/2`.
pub fn hilbert_transform(measure: &GridMeasure, x: f64, eps: f64) -> Result<f64, TransformError> {
    if let Some(&(a, _)) = measure.atoms().iter().find(|a| (a.0 - x).abs() <= 1e-9) {
        return Err(TransformError::AtomCollision(a));
    }
    let at = |e: f64| cauchy(measure, Complex64::new(x, e)).map(|g| g.re);
    let (coarse, fine) = (at(eps)?, at(0.5 * eps)?);
    Ok((2.0 * fine - coarse) / std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gauss_legendre, sqrt_upper};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dirac_at_zero() {
        let g = cauchy(&AtomicMeasure::dirac(0.0), c(0.0, 1.0)).unwrap();
        assert!((g - c(0.0, -1.0)).norm() < 1e-15);
        assert!(cauchy(&AtomicMeasure::dirac(0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn two_atoms_f_transform() {
        let (a, b) = (-0.5, 2.0);
        let mu = AtomicMeasure::new(vec![(a, 0.5), (b, 0.5)]).unwrap();
        for z in [c(0.3, 0.7), c(-2.0, 1.5), c(5.0, 0.01)] {
            let f = (z - a) * (z - b) / (z - (a + b) / 2.0);
            assert!((f_transform(&mu, z).unwrap() - f).norm() < 1e-12 * f.norm().max(1.0));
        }
    }

    #[test]
    fn bernoulli_b_transform_is_reciprocal() {
        let mu = AtomicMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        for z in [c(0.3, 0.7), c(-2.0, 1.5), c(0.0, 3.0)] {
            assert!((b_transform(&mu, z).unwrap() - 1.0 / z).norm() < 1e-12);
        }
        let d = AtomicMeasure::dirac(1.5);
        assert!((f_transform(&d, c(0.2, 0.4)).unwrap() - c(0.2 - 1.5, 0.4)).norm() < 1e-14);
    }

    #[test]
    fn gridded_semicircle_matches_closed_form() {
        let law = LawSpec::Semicircle { center: 0.0, var: 1.0 };
        let grid = law.to_grid(4096).unwrap();
        for z in [c(0.0, 2.0), c(1.0, 0.5), c(-1.9, 0.05), c(3.0, 1e-3)] {
            let exact = (z - sqrt_upper(z * z - 4.0)) / 2.0;
            assert!((cauchy(&grid, z).unwrap() - exact).norm() < 1e-6, "{z}");
        }
    }

    #[test]
    fn gridded_cauchy_is_exact_for_a_hat() {
        // Triangle density on [0, 2] peaking at 1; compare with quadrature.
        let g = GridMeasure::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], vec![]).unwrap();
        for z in [c(0.5, 0.3), c(3.0, 1e-2), c(1.0, 1e5)] {
            let hat = |x: f64| if x < 1.0 { x } else { 2.0 - x };
            let re = gauss_legendre(|x| (hat(x) / (z - x)).re, 0.0, 2.0, 400);
            let im = gauss_legendre(|x| (hat(x) / (z - x)).im, 0.0, 2.0, 400);
            let got = cauchy(&g, z).unwrap();
            assert!((got - c(re, im)).norm() < 1e-10 * got.norm().max(1e-3), "{z}: {got}");
        }
    }

    #[test]
    fn closed_form_arcsine_f() {
        let law = LawSpec::Arcsine { center: 0.0, var: 1.0 };
        for z in [c(0.0, 1.0), c(2.0, 0.3), c(-0.7, 0.01)] {
            let f = f_transform(&law, z).unwrap();
            assert!((f - sqrt_upper(z * z - 2.0)).norm() < 1e-12);
            assert!(f.im >= z.im);
        }
    }

    #[test]
    fn nevanlinna_of_simple_maps() {
        let shift = HerglotzMap::new(MapKind::Generic, |z| z + 5.0);
        let d = nevanlinna_extract(&shift).unwrap();
        assert!((d.a - 5.0).abs() < 1e-12 && (d.b - 1.0).abs() < 1e-9);
        let lin = HerglotzMap::new(MapKind::Generic, |z| 2.0 * z + Complex64::i());
        assert!((nevanlinna_extract(&lin).unwrap().b - 2.0).abs() < 1e-4);
        let arcsine = HerglotzMap::f_transform_of(LawSpec::Arcsine { center: 0.0, var: 1.0 });
        assert!((nevanlinna_extract(&arcsine).unwrap().b - 1.0).abs() < 1e-4);
        let bad = HerglotzMap::new(MapKind::Generic, |z| -z);
        assert!(matches!(nevanlinna_extract(&bad), Err(TransformError::NotHerglotz { .. })));
    }

    /// Principal value of `∫ p(t)/(x − t) dt` for the semicircle density,
    /// subtracting the singularity and refining the mesh.
    fn pv_semicircle(x: f64, panels: usize) -> f64 {
        let p = |t: f64| (4.0 - t * t).max(0.0).sqrt() / (2.0 * PI);
        let px = p(x);
        let regular = gauss_legendre(|t| (p(t) - px) / (x - t), -2.0, 2.0, panels);
        // PV ∫_{-2}^{2} dt/(x − t) = ln((x+2)/(2−x)).
        regular + px * ((x + 2.0) / (2.0 - x)).ln()
    }

    #[test]
    fn hilbert_transform_of_semicircle() {
        let law = LawSpec::Semicircle { center: 0.0, var: 1.0 };
        let grid = law.to_grid(4096).unwrap();
        assert!(hilbert_transform(&grid, 0.0, 1e-3).unwrap().abs() < 1e-9);
        let coarse = pv_semicircle(1.0, 200) / PI;
        let fine = pv_semicircle(1.0, 800) / PI;
        assert!((coarse - fine).abs() < 1e-6);
        // Closed form PV is x/2 on the support; keeps the oracle honest.
        assert!((fine - 0.5 / PI).abs() < 1e-5);
        assert!((hilbert_transform(&grid, 1.0, 1e-3).unwrap() - fine).abs() < 1e-3);
        let with_atom = GridMeasure::new(vec![-1.0, 1.0], vec![0.25, 0.25], vec![(0.0, 0.5)]).unwrap();
        assert!(matches!(hilbert_transform(&with_atom, 0.0, 1e-3), Err(TransformError::AtomCollision(_))));
    }

    fn atomic() -> impl Strategy<Value = AtomicMeasure> {
        prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 1..6).prop_map(|v| AtomicMeasure::normalized(v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn f_transform_increases_imaginary_part(mu in atomic(), probes in prop::collection::vec((-5.0f64..5.0, 1e-3f64..5.0), 100)) {
            for (x, y) in probes {
                let z = c(x, y);
                prop_assert!(f_transform(&mu, z).unwrap().im >= z.im - 1e-9 * (1.0 + z.norm()));
            }
        }

        #[test]
        fn normalization_at_infinity(mu in atomic(), y in 100.0f64..1e6) {
            let g = cauchy(&mu, c(0.0, y)).unwrap();
            let dev = (c(0.0, y) * g - 1.0).norm();
            prop_assert!(dev <= 2.0 * mu.support_radius() / y + 1e-12);
        }
    }
}
