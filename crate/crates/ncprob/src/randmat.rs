//! GUE matrices, empirical spectral distributions, asymptotic freeness
//! statistics, Haar unitaries and a matrix-valued AR(1) recursion.
//!
//! The state is the normalized trace `φ(X) = tr(X)/N`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{AtomicMeasure, Cdf, LawSpec, MeasureError};

/// Largest matrix handed to the eigensolver.
pub const MAX_EIGEN_SIZE: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-12;

type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RandmatError {
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("matrix size must be positive")]
    Empty,
    #[error("matrices of sizes {0} and {1} cannot be combined")]
    SizeMismatch(usize, usize),
    #[error("AR coefficient {0} must satisfy |c| < 1")]
    BadCoefficient(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A self-adjoint complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `a` when `‖a − a*‖_max ≤ 1e-12·max(1, ‖a‖_max)`, then
    /// symmetrizes away the residue.
    pub fn new(a: CMatrix) -> Result<Self, RandmatError> {
        if a.nrows() == 0 {
            return Err(RandmatError::Empty);
        }
        if a.nrows() != a.ncols() {
            return Err(RandmatError::SizeMismatch(a.nrows(), a.ncols()));
        }
        let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = (&a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > HERMITIAN_TOL * scale {
            return Err(RandmatError::NotHermitian(dev));
        }
        Ok(Self(symmetrize(a)))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Result<Self, RandmatError> {
        if d.is_empty() {
            return Err(RandmatError::Empty);
        }
        let n = d.len();
        Ok(Self(CMatrix::from_fn(n, n, |i, j| if i == j { d[i].into() } else { Complex64::ZERO })))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Normalized trace `φ(X) = tr(X)/N`.
    pub fn phi(&self) -> f64 {
        normalized_trace(&self.0)
    }

    /// `X − φ(X)·I`.
    pub fn centered(&self) -> Self {
        let shift = Complex64::from(self.phi());
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= shift;
        }
        Self(m)
    }

    pub fn square(&self) -> Self {
        Self(symmetrize(complex_product(&self.0, &self.0)))
    }

    /// `c·X + Y`.
    pub fn scaled_add(&self, c: f64, other: &Self) -> Result<Self, RandmatError> {
        if self.dim() != other.dim() {
            return Err(RandmatError::SizeMismatch(self.dim(), other.dim()));
        }
        Ok(Self(&self.0 * Complex64::from(c) + &other.0))
    }

    /// `U X U*`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self, RandmatError> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(RandmatError::SizeMismatch(self.dim(), u.nrows()));
        }
        Ok(Self(symmetrize(complex_product(&complex_product(u, &self.0), &u.adjoint()))))
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, RandmatError> {
        if self.dim() > MAX_EIGEN_SIZE {
            return Err(RandmatError::TooLarge { size: self.dim(), limit: MAX_EIGEN_SIZE });
        }
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

fn symmetrize(a: CMatrix) -> CMatrix {
    (&a + a.adjoint()) * Complex64::from(0.5)
}

fn normalized_trace(a: &CMatrix) -> f64 {
    a.trace().re / a.nrows() as f64
}

/// `tr(XY)/N` without forming the product.
fn trace_of_product(x: &CMatrix, y: &CMatrix) -> f64 {
    let n = x.nrows();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += x[(i, k)] * y[(k, i)];
        }
    }
    acc.re / n as f64
}

/// Complex product through four real products, which use the blocked
/// real kernel.
fn complex_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}

/// GUE sample: `A_jk = X_jk + iY_jk` above the diagonal, `A_jj = X_jj`,
/// with all `X`, `Y` independent `N(0, 1/(2N))`.
pub fn sample_gue(n: usize, seed: u64) -> Result<HermitianMatrix, RandmatError> {
    if n == 0 {
        return Err(RandmatError::Empty);
    }
    Ok(gue_from(n, &mut StdRng::seed_from_u64(seed)))
}

fn gue_from(n: usize, rng: &mut StdRng) -> HermitianMatrix {
    let sd = (0.5 / n as f64).sqrt();
    let mut a = CMatrix::zeros(n, n);
    for j in 0..n {
        a[(j, j)] = Complex64::from(sd * rng.sample::<f64, _>(StandardNormal));
        for k in j + 1..n {
            let z = Complex64::new(sd * rng.sample::<f64, _>(StandardNormal), sd * rng.sample::<f64, _>(StandardNormal));
            a[(j, k)] = z;
            a[(k, j)] = z.conj();
        }
    }
    HermitianMatrix(a)
}

/// Empirical spectral distribution: mass `1/N` at each eigenvalue.
pub fn esd(a: &HermitianMatrix) -> Result<AtomicMeasure, RandmatError> {
    Ok(AtomicMeasure::uniform(&a.eigenvalues()?)?)
}

/// `sup_x |F_emp(x) − F_law(x)|`, checked on both sides of every atom.
pub fn kolmogorov_distance(empirical: &AtomicMeasure, law: &LawSpec) -> f64 {
    empirical
        .atoms()
        .iter()
        .map(|&(x, _)| {
            let target = law.cdf(x);
            (empirical.cdf(x) - target).abs().max((empirical.cdf_left(x) - target).abs())
        })
        .fold(0.0, f64::max)
}

/// Largest Kolmogorov distance between a GUE spectrum and Semicircle(0, 1)
/// over the given seeds.
pub fn wigner_check(n: usize, seeds: &[u64]) -> Result<f64, RandmatError> {
    let law = LawSpec::Semicircle { center: 0.0, var: 1.0 };
    let distances: Result<Vec<f64>, RandmatError> =
        seeds.par_iter().map(|&s| Ok(kolmogorov_distance(&esd(&sample_gue(n, s)?)?, &law))).collect();
    Ok(distances?.into_iter().fold(0.0, f64::max))
}

/// `max |φ(q₁ q₂ ⋯ q_L)|` over alternating words of length 2 to 4 in
/// `A` and `B`, where each `q` is a centered `x` or `x²`.
pub fn freeness_statistic(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64, RandmatError> {
    if a.dim() != b.dim() {
        return Err(RandmatError::SizeMismatch(a.dim(), b.dim()));
    }
    let letters = |m: &HermitianMatrix| [m.centered().0, m.square().centered().0];
    let la = letters(a);
    let lb = letters(b);
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            // Length 2 is the same word read from either end.
            worst = worst.max(trace_of_product(&la[i], &lb[j]).abs());
            let ab = complex_product(&la[i], &lb[j]);
            let ba = complex_product(&lb[j], &la[i]);
            for k in 0..2 {
                worst = worst.max(trace_of_product(&ab, &la[k]).abs());
                worst = worst.max(trace_of_product(&ba, &lb[k]).abs());
                for l in 0..2 {
                    let cd = complex_product(&la[k], &lb[l]);
                    worst = worst.max(trace_of_product(&ab, &cd).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Haar unitary: QR of a complex Ginibre matrix, with the phases of the
/// diagonal of `R` moved into `Q`.
pub fn haar_unitary(n: usize, seed: u64) -> Result<CMatrix, RandmatError> {
    if n == 0 {
        return Err(RandmatError::Empty);
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let z = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::ONE };
        q.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Fresh GUE matrices.
    Gue,
    /// `ε² − φ(ε²)` for fresh GUE `ε`.
    SquaredGue,
}

/// Normalized-trace statistics of the last step `m` of an AR(1) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ar1Summary {
    pub size: usize,
    pub steps: usize,
    pub coefficient: f64,
    pub noise: NoiseKind,
    /// `φ(X_{m−1})`.
    pub mean_previous: f64,
    /// `φ(ε_m)`.
    pub mean_noise: f64,
    /// `φ(ε_m²)`.
    pub noise_second_moment: f64,
    /// `φ(X_{m−1}²)`.
    pub previous_second_moment: f64,
    /// `φ(X_m)`.
    pub mean_last: f64,
    /// `φ(X_m²)`.
    pub last_second_moment: f64,
    /// `φ(X_{m−1} ε_m X_{m−1} ε_m)`.
    pub mixed_moment: f64,
    /// Spectrum of `X_m` when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
}

/// `X₀ = I`, `X_k = c·X_{k−1} + ε_k` for `k = 1..=steps`.
pub fn free_ar1(
    n: usize,
    steps: usize,
    c: f64,
    noise: NoiseKind,
    seed: u64,
    with_spectrum: bool,
) -> Result<Ar1Summary, RandmatError> {
    if !(c.abs() < 1.0) {
        return Err(RandmatError::BadCoefficient(c));
    }
    if n == 0 || steps == 0 {
        return Err(RandmatError::Empty);
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut draw = || {
        let g = gue_from(n, &mut rng);
        match noise {
            NoiseKind::Gue => g,
            NoiseKind::SquaredGue => g.square().centered(),
        }
    };
    let mut previous = HermitianMatrix::identity(n);
    for _ in 1..steps {
        previous = previous.scaled_add(c, &draw())?;
    }
    let eps = draw();
    let last = previous.scaled_add(c, &eps)?;
    let xe = complex_product(&previous.0, &eps.0);
    Ok(Ar1Summary {
        size: n,
        steps,
        coefficient: c,
        noise,
        mean_previous: previous.phi(),
        mean_noise: eps.phi(),
        noise_second_moment: trace_of_product(&eps.0, &eps.0),
        previous_second_moment: trace_of_product(&previous.0, &previous.0),
        mean_last: last.phi(),
        last_second_moment: trace_of_product(&last.0, &last.0),
        mixed_moment: trace_of_product(&xe, &xe),
        eigenvalues: if with_spectrum { Some(last.eigenvalues()?) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn scalar_gue_has_variance_half() {
        let samples: Vec<f64> = (0..100_000u64).map(|s| sample_gue(1, s).unwrap().matrix()[(0, 0)].re).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples.len() as f64;
        assert!((var - 0.5).abs() < 0.025, "{var}");
    }

    #[test]
    fn gue_second_moment_is_near_one() {
        let mean = (0..50u64).map(|s| sample_gue(200, s).unwrap().square().phi()).sum::<f64>() / 50.0;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn diagonal_spectrum_is_the_diagonal() {
        let m = HermitianMatrix::from_real_diagonal(&[0.5, -1.0, 2.0, 0.5]).unwrap();
        let mu = esd(&m).unwrap();
        let atoms = mu.atoms();
        assert_eq!(atoms.len(), 3);
        assert!((atoms[0].0 + 1.0).abs() < 1e-12 && (atoms[1].0 - 0.5).abs() < 1e-12 && (atoms[2].0 - 2.0).abs() < 1e-12);
        assert!((atoms[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wigner_distance_is_small() {
        let d = wigner_check(400, &[1, 2]).unwrap();
        assert!(d <= 0.06, "{d}");
    }

    #[test]
    fn squared_gue_is_marchenko_pastur() {
        let e = sample_gue(1000, 3).unwrap().square();
        // Centre the noise as the AR model does, then restore unit mean.
        let shifted = e.centered().scaled_add(1.0, &HermitianMatrix::identity(1000)).unwrap();
        let d = kolmogorov_distance(&esd(&shifted).unwrap(), &LawSpec::MarchenkoPastur { c: 1.0 });
        assert!(d <= 0.08, "{d}");
    }

    #[test]
    fn identity_is_free_from_everything() {
        let a = sample_gue(50, 1).unwrap();
        assert!(freeness_statistic(&a, &HermitianMatrix::identity(50)).unwrap() < 1e-12);
    }

    #[test]
    fn independent_gue_pair_is_nearly_free() {
        let s = freeness_statistic(&sample_gue(500, 10).unwrap(), &sample_gue(500, 11).unwrap()).unwrap();
        assert!(s <= 0.1, "{s}");
    }

    #[test]
    fn haar_rotation_makes_projections_free() {
        let n = 500;
        let diag: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = HermitianMatrix::from_real_diagonal(&diag).unwrap();
        let u = haar_unitary(n, 4).unwrap();
        assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(n, n))) <= 1e-10);
        let b = a.conjugate_by(&u).unwrap();
        assert!(freeness_statistic(&a, &b).unwrap() <= 0.1);
        // Free centered variables have φ(abab) = 0.
        let ab = complex_product(a.matrix(), b.matrix());
        assert!(trace_of_product(&ab, &ab).abs() < 0.05);
    }

    #[test]
    fn white_noise_limit() {
        let s = free_ar1(300, 5, 0.0, NoiseKind::Gue, 2, false).unwrap();
        assert!((s.last_second_moment - 1.0).abs() < 0.05);
    }

    #[test]
    fn ar1_stationary_variance() {
        let s = free_ar1(500, 100, 0.5, NoiseKind::Gue, 1, false).unwrap();
        assert!((s.last_second_moment - 4.0 / 3.0).abs() <= 0.1, "{s:?}");
        assert!(s.mixed_moment.abs() <= 0.05);
        let sq = free_ar1(200, 30, 0.5, NoiseKind::SquaredGue, 1, false).unwrap();
        assert!((sq.last_second_moment - 4.0 / 3.0).abs() <= 0.1, "{sq:?}");
        assert!(sq.mixed_moment.abs() <= 0.05);
        assert!(sq.mean_noise.abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(free_ar1(10, 5, 1.0, NoiseKind::Gue, 1, false), Err(RandmatError::BadCoefficient(_))));
        assert!(sample_gue(0, 1).is_err());
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::ONE;
        assert!(matches!(HermitianMatrix::new(m), Err(RandmatError::NotHermitian(_))));
        let big = HermitianMatrix::identity(MAX_EIGEN_SIZE + 1);
        assert!(matches!(big.eigenvalues(), Err(RandmatError::TooLarge { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn state_is_unital(n in 1usize..40) {
            prop_assert!((HermitianMatrix::identity(n).phi() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn esd_moments_are_normalized_traces(n in 1usize..40, seed in 0u64..1000) {
            let a = sample_gue(n, seed).unwrap();
            prop_assert_eq!(a.matrix(), &a.matrix().adjoint());
            let mu = esd(&a).unwrap();
            let mut power = CMatrix::identity(n, n);
            for k in 1..=4 {
                power = &power * a.matrix();
                let from_atoms: f64 = mu.atoms().iter().map(|&(x, w)| w * x.powi(k)).sum();
                prop_assert!((from_atoms - normalized_trace(&power)).abs() <= 1e-9);
            }
        }

        #[test]
        fn haar_is_unitary(n in 1usize..30, seed in 0u64..1000) {
            let u = haar_unitary(n, seed).unwrap();
            prop_assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(n, n))) <= 1e-10);
        }
    }
}
