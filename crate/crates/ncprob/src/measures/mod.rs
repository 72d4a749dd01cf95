//! Probability measures on the real line in three interchangeable
//! representations: finitely many atoms, a gridded density with optional
//! atoms, and a truncated moment sequence.

mod distance;
mod law;
mod sampling;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::Scalar;

pub use distance::{levy_distance, Cdf};
pub use law::{LawSpec, DEFAULT_GRID_POINTS, GRID_PADDING};
pub use sampling::Sample;

/// Tolerance on the total weight of an atomic measure.
pub const ATOM_MASS_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a gridded measure.
pub const GRID_MASS_TOL: f64 = 1e-6;
/// Eigenvalue floor for the Hankel positivity test, relative to the
/// matrix scale.
pub const HANKEL_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("atom weight {0} is not strictly positive")]
    NonPositiveWeight(f64),
    #[error("atom positions must be strictly increasing (at index {0})")]
    Unsorted(usize),
    #[error("non-finite value in measure data")]
    NonFinite,
    #[error("total mass {0} differs from 1")]
    Mass(f64),
    #[error("grid must have at least two strictly increasing points")]
    BadGrid,
    #[error("density and grid lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("density is negative at grid index {0}")]
    NegativeDensity(usize),
    #[error("moment order must be at least 1")]
    ZeroOrder,
    #[error("law {0} has unbounded support; request truncated moments explicitly")]
    Unbounded(&'static str),
    #[error("invalid law parameters: {0}")]
    BadLaw(String),
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// Finitely many atoms `(position, weight)` with strictly increasing
/// positions and weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomsRepr", into = "AtomsRepr")]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct AtomsRepr {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<AtomsRepr> for AtomicMeasure {
    type Error = MeasureError;
    fn try_from(r: AtomsRepr) -> Result<Self, Self::Error> {
        AtomicMeasure::new(r.atoms)
    }
}

impl From<AtomicMeasure> for AtomsRepr {
    fn from(m: AtomicMeasure) -> Self {
        AtomsRepr { atoms: m.atoms }
    }
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let mut total = 0.0;
        for (i, &(x, w)) in atoms.iter().enumerate() {
            if !x.is_finite() || !w.is_finite() {
                return Err(MeasureError::NonFinite);
            }
            if w <= 0.0 {
                return Err(MeasureError::NonPositiveWeight(w));
            }
            if i > 0 && atoms[i - 1].0 >= x {
                return Err(MeasureError::Unsorted(i));
            }
            total += w;
        }
        if (total - 1.0).abs() > ATOM_MASS_TOL {
            return Err(MeasureError::Mass(total));
        }
        Ok(Self { atoms })
    }

    /// Sorts, merges coincident positions and drops zero weights before
    /// validating.
    pub fn from_unsorted(mut atoms: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        if atoms.iter().any(|&(x, w)| !x.is_finite() || !w.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        if let Some(&(_, w)) = atoms.iter().find(|a| a.1 < 0.0) {
            return Err(MeasureError::NonPositiveWeight(w));
        }
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Self::new(merged)
    }

    /// Like [`from_unsorted`](Self::from_unsorted) but rescales the weights
    /// to total one; for numerically produced atom lists.
    pub fn normalized(atoms: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0) {
            return Err(MeasureError::Mass(total));
        }
        Self::from_unsorted(atoms.into_iter().map(|(x, w)| (x, w / total)).collect())
    }

    pub fn dirac(x: f64) -> Self {
        Self { atoms: vec![(x, 1.0)] }
    }

    /// Equal-weight atoms at the given points (duplicates merged).
    pub fn uniform(points: &[f64]) -> Result<Self, MeasureError> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::normalized(points.iter().map(|&x| (x, w)).collect())
    }

    /// Construction that trusts the caller; used on hot paths whose inputs
    /// are valid by construction.
    pub(crate) fn from_raw(atoms: Vec<(f64, f64)>) -> Self {
        Self { atoms }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Largest `|x|` over the atoms.
    pub fn support_radius(&self) -> f64 {
        self.atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|&(x, w)| (x - m) * (x - m) * w).sum()
    }

    /// Image under `x ↦ scale·x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self, MeasureError> {
        Self::from_unsorted(self.atoms.iter().map(|&(x, w)| (scale * x + shift, w)).collect())
    }
}

/// Density sampled on a strictly increasing grid plus optional atoms.
/// Mass is measured with the trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridMeasure {
    grid: Vec<f64>,
    density: Vec<f64>,
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    grid: Vec<f64>,
    density: Vec<f64>,
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<GridRepr> for GridMeasure {
    type Error = MeasureError;
    fn try_from(r: GridRepr) -> Result<Self, Self::Error> {
        GridMeasure::new(r.grid, r.density, r.atoms)
    }
}

impl From<GridMeasure> for GridRepr {
    fn from(m: GridMeasure) -> Self {
        GridRepr { grid: m.grid, density: m.density, atoms: m.atoms }
    }
}

impl GridMeasure {
    pub fn new(grid: Vec<f64>, density: Vec<f64>, atoms: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        let g = Self::unchecked(grid, density, atoms)?;
        let mass = g.total_mass();
        if (mass - 1.0).abs() > GRID_MASS_TOL {
            return Err(MeasureError::Mass(mass));
        }
        Ok(g)
    }

    /// Structural validation only; the caller handles normalization.
    pub(crate) fn unchecked(
        grid: Vec<f64>,
        density: Vec<f64>,
        mut atoms: Vec<(f64, f64)>,
    ) -> Result<Self, MeasureError> {
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MeasureError::BadGrid);
        }
        if grid.len() != density.len() {
            return Err(MeasureError::LengthMismatch(grid.len(), density.len()));
        }
        if grid.iter().chain(density.iter()).any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        if let Some(i) = density.iter().position(|&d| d < 0.0) {
            return Err(MeasureError::NegativeDensity(i));
        }
        if let Some(&(_, w)) = atoms.iter().find(|a| !(a.1 > 0.0)) {
            return Err(MeasureError::NonPositiveWeight(w));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { grid, density, atoms })
    }

    /// Rescales density and atoms so that the total mass is one.
    pub(crate) fn renormalize(mut self) -> Self {
        let mass = self.total_mass();
        if mass > 0.0 {
            self.density.iter_mut().for_each(|d| *d /= mass);
            self.atoms.iter_mut().for_each(|a| a.1 /= mass);
        }
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Trapezoid integral of `f(x)·density(x)` over the grid.
    pub fn integrate_density<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (f(x[0]) * d[0] + f(x[1]) * d[1]))
            .sum()
    }

    pub fn density_mass(&self) -> f64 {
        self.integrate_density(|_| 1.0)
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.density_mass() + self.atom_mass()
    }

    /// Linear interpolation of the density; zero outside the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|&p| p <= x).clamp(1, g.len() - 1);
        let t = (x - g[i - 1]) / (g[i] - g[i - 1]);
        self.density[i - 1] * (1.0 - t) + self.density[i] * t
    }

    pub fn mean(&self) -> f64 {
        self.integrate_density(|x| x) + self.atoms.iter().map(|&(x, w)| x * w).sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.integrate_density(|x| (x - m) * (x - m))
            + self.atoms.iter().map(|&(x, w)| (x - m) * (x - m) * w).sum::<f64>()
    }
}

/// A measure given by atoms or by a gridded density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measure {
    Grid(GridMeasure),
    Atomic(AtomicMeasure),
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<GridMeasure> for Measure {
    fn from(m: GridMeasure) -> Self {
        Measure::Grid(m)
    }
}

impl Measure {
    /// Atoms of the measure (all of it for the atomic variant).
    pub fn atoms(&self) -> &[(f64, f64)] {
        match self {
            Measure::Atomic(a) => a.atoms(),
            Measure::Grid(g) => g.atoms(),
        }
    }

    /// Radius of a centered interval containing the support.
    pub fn support_radius(&self) -> f64 {
        let atoms = self.atoms().iter().map(|a| a.0.abs()).fold(0.0, f64::max);
        match self {
            Measure::Atomic(_) => atoms,
            Measure::Grid(g) => atoms.max(g.grid[0].abs()).max(g.grid[g.grid.len() - 1].abs()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Measure::Atomic(a) => a.mean(),
            Measure::Grid(g) => g.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Measure::Atomic(a) => a.variance(),
            Measure::Grid(g) => g.variance(),
        }
    }
}

/// Moments `m_1..m_K` of a probability measure (`m_0 = 1` implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence<T = f64> {
    #[serde(rename = "moments")]
    m: Vec<T>,
}

impl<T: Scalar> MomentSequence<T> {
    pub fn new(m: Vec<T>) -> Result<Self, MeasureError> {
        if m.is_empty() {
            return Err(MeasureError::ZeroOrder);
        }
        Ok(Self { m })
    }

    /// Order `K` of the truncation.
    pub fn order(&self) -> usize {
        self.m.len()
    }

    /// Moment of order `k`, with `get(0) = 1`.
    pub fn get(&self, k: usize) -> T {
        if k == 0 {
            T::one()
        } else {
            self.m[k - 1].clone()
        }
    }

    /// `m_1..m_K` as a slice.
    pub fn as_slice(&self) -> &[T] {
        &self.m
    }

    /// `[1, m_1, .., m_K]`.
    pub fn with_zeroth(&self) -> Vec<T> {
        std::iter::once(T::one()).chain(self.m.iter().cloned()).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self { m: self.m[..order.min(self.m.len())].to_vec() }
    }

    pub fn to_f64(&self) -> MomentSequence<f64> {
        MomentSequence { m: self.m.iter().map(Scalar::approx).collect() }
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> MomentSequence<U> {
        MomentSequence { m: self.m.iter().map(f).collect() }
    }

    /// Moments of the image under `x ↦ λx`.
    pub fn scale(&self, lambda: T) -> Self {
        let mut p = T::one();
        let m = self
            .m
            .iter()
            .map(|v| {
                p = p.clone() * lambda.clone();
                v.clone() * p.clone()
            })
            .collect();
        Self { m }
    }

    /// Hankel matrix `(m_{i+j})_{0 ≤ i,j ≤ ⌊K/2⌋}` is positive
    /// semidefinite up to the eigenvalue floor.
    pub fn is_valid(&self) -> bool {
        let full = self.with_zeroth();
        let n = self.order() / 2 + 1;
        let h = DMatrix::from_fn(n, n, |i, j| full[i + j].approx());
        if h.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let scale = h.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let min = h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        min >= -HANKEL_PSD_TOL * scale
    }
}

/// Objects with computable moments.
pub trait HasMoments {
    fn moments(&self, order: usize) -> Result<MomentSequence<f64>, MeasureError>;
}

impl HasMoments for AtomicMeasure {
    fn moments(&self, order: usize) -> Result<MomentSequence<f64>, MeasureError> {
        if order == 0 {
            return Err(MeasureError::ZeroOrder);
        }
        let m = (1..=order)
            .map(|k| self.atoms.iter().map(|&(x, w)| w * x.powi(k as i32)).sum())
            .collect();
        MomentSequence::new(m)
    }
}

impl HasMoments for GridMeasure {
    fn moments(&self, order: usize) -> Result<MomentSequence<f64>, MeasureError> {
        if order == 0 {
            return Err(MeasureError::ZeroOrder);
        }
        let m = (1..=order)
            .map(|k| {
                let k = k as i32;
                self.integrate_density(|x| x.powi(k))
                    + self.atoms.iter().map(|&(x, w)| w * x.powi(k)).sum::<f64>()
            })
            .collect();
        MomentSequence::new(m)
    }
}

impl HasMoments for Measure {
    fn moments(&self, order: usize) -> Result<MomentSequence<f64>, MeasureError> {
        match self {
            Measure::Atomic(a) => a.moments(order),
            Measure::Grid(g) => g.moments(order),
        }
    }
}

/// Moments `m_1..m_K`; exact sums for atoms, trapezoid for densities and
/// closed forms for named laws.
pub fn moments<M: HasMoments + ?Sized>(measure: &M, order: usize) -> Result<MomentSequence<f64>, MeasureError> {
    measure.moments(order)
}
