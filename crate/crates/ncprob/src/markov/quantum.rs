use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{MarkovError, TransitionMatrix};

/// Iteration cap of [`channel_fixed_point`].
pub const MAX_CHANNEL_ITERATIONS: usize = 100_000;

type CMatrix = DMatrix<Complex64>;

/// A Hermitian, positive semidefinite matrix of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self, MarkovError> {
        let bad = |m: String| Err(MarkovError::InvalidDensity(m));
        if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
            return bad("matrix must be square".into());
        }
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return bad(format!("not Hermitian (deviation {herm:e})"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return bad(format!("trace {tr}"));
        }
        let min = min_eigenvalue(&rho);
        if min < -1e-10 {
            return bad(format!("negative eigenvalue {min:e}"));
        }
        Ok(Self(rho))
    }

    /// `diag(p)` for a probability vector.
    pub fn diagonal(p: &[f64]) -> Result<Self, MarkovError> {
        let n = p.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(p[i], 0.0) } else { Complex64::new(0.0, 0.0) }))
    }

    /// `|ψ⟩⟨ψ|` for a nonzero vector, normalized.
    pub fn pure(psi: &[Complex64]) -> Result<Self, MarkovError> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let n = psi.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Real diagonal entries.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `T(ρ) = Σ_j E_j ρ E_j*` with `Σ_j E_j* E_j = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self, MarkovError> {
        let Some(first) = ops.first() else {
            return Err(MarkovError::NotTracePreserving(1.0));
        };
        let n = first.nrows();
        if ops.iter().any(|e| e.nrows() != n || e.ncols() != n) {
            return Err(MarkovError::InvalidDensity("Kraus operators must share one square shape".into()));
        }
        let sum = ops.iter().fold(CMatrix::zeros(n, n), |acc, e| acc + e.adjoint() * e);
        let dev = (sum - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(MarkovError::NotTracePreserving(dev));
        }
        Ok(Self { ops })
    }

    pub fn identity(n: usize) -> Self {
        Self { ops: vec![CMatrix::identity(n, n)] }
    }

    /// Operators `√p_{jk}·e_j e_kᵀ`; on diagonal states the channel acts
    /// as `P` on the populations.
    pub fn classical(p: &TransitionMatrix) -> Self {
        let n = p.states();
        let mut ops = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let w = p.prob(j, k);
                if w > 0.0 {
                    let mut e = CMatrix::zeros(n, n);
                    e[(j, k)] = Complex64::new(w.sqrt(), 0.0);
                    ops.push(e);
                }
            }
        }
        Self { ops }
    }

    /// Qubit depolarizing channel `ρ ↦ (1−p)ρ + p·I/2`.
    pub fn depolarizing(p: f64) -> Result<Self, MarkovError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MarkovError::InvalidDensity(format!("depolarizing strength {p}")));
        }
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let pauli = [
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        ];
        let mut ops = vec![CMatrix::identity(2, 2) * c((1.0 - 0.75 * p).sqrt(), 0.0)];
        ops.extend(pauli.into_iter().map(|s| s * c((p / 4.0).sqrt(), 0.0)));
        Self::new(ops)
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }
}

fn apply_raw(t: &KrausChannel, rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let mut out = t.ops.iter().fold(CMatrix::zeros(n, n), |acc, e| acc + e * rho * e.adjoint());
    // Remove rounding drift in Hermiticity.
    out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    out
}

/// `T(ρ)`.
pub fn channel_apply(t: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix, MarkovError> {
    if t.dim() != rho.dim() {
        return Err(MarkovError::InvalidDensity("dimension mismatch".into()));
    }
    Ok(DensityMatrix(apply_raw(t, &rho.0)))
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    trace_norm_half(&(&rho.0 - &sigma.0))
}

fn trace_norm_half(d: &CMatrix) -> f64 {
    let h = (d + d.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * h.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

/// Iterates `T` from `ρ₀` until one step moves at most `tol` in trace distance.
pub fn channel_fixed_point(t: &KrausChannel, rho0: &DensityMatrix, tol: f64) -> Result<DensityMatrix, MarkovError> {
    if t.dim() != rho0.dim() {
        return Err(MarkovError::InvalidDensity("dimension mismatch".into()));
    }
    let mut rho = rho0.0.clone();
    for _ in 0..MAX_CHANNEL_ITERATIONS {
        let next = apply_raw(t, &rho);
        let step = trace_norm_half(&(&next - &rho));
        rho = next;
        if step <= tol {
            return Ok(DensityMatrix(rho));
        }
    }
    Err(MarkovError::NotConverged(MAX_CHANNEL_ITERATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::iterate_distribution;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(rng: &mut StdRng, n: usize) -> DensityMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    }

    fn chain() -> TransitionMatrix {
        TransitionMatrix::from_rows(&[&[0.1, 0.5, 0.3], &[0.6, 0.2, 0.3], &[0.3, 0.3, 0.4]]).unwrap()
    }

    #[test]
    fn classical_embedding_reproduces_the_chain() {
        let p = chain();
        let t = KrausChannel::new(KrausChannel::classical(&p).ops).unwrap();
        let v = [0.2, 0.3, 0.5];
        let mut rho = DensityMatrix::diagonal(&v).unwrap();
        for n in 1..=6 {
            rho = channel_apply(&t, &rho).unwrap();
            let want = iterate_distribution(&p, &DVector::from_column_slice(&v), n).unwrap();
            for (a, b) in rho.populations().iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn identity_channel_fixes_everything() {
        let mut rng = StdRng::seed_from_u64(1);
        let rho = random_state(&mut rng, 3);
        let fixed = channel_fixed_point(&KrausChannel::identity(3), &rho, 1e-12).unwrap();
        assert!(trace_distance(&fixed, &rho) < 1e-14);
    }

    #[test]
    fn depolarizing_fixed_point_is_unique() {
        let t = KrausChannel::depolarizing(0.3).unwrap();
        let tol = 1e-12;
        let mut rng = StdRng::seed_from_u64(2);
        let fixed: Vec<_> = (0..5).map(|_| channel_fixed_point(&t, &random_state(&mut rng, 2), tol).unwrap()).collect();
        for a in &fixed {
            for b in &fixed {
                assert!(trace_distance(a, b) <= 10.0 * tol);
            }
        }
        assert!((fixed[0].populations()[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        // Swapping two levels oscillates forever.
        let swap = TransitionMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let t = KrausChannel::classical(&swap);
        let rho = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(channel_fixed_point(&t, &rho, 1e-9), Err(MarkovError::NotConverged(_))));
    }

    #[test]
    fn invalid_inputs() {
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(KrausChannel::new(vec![half.clone()]).is_err());
        assert!(DensityMatrix::new(half.clone() * Complex64::new(2.0, 0.0)).is_err());
        let neg = CMatrix::from_row_slice(2, 2, &[Complex64::new(1.5, 0.0), 0.0.into(), 0.0.into(), Complex64::new(-0.5, 0.0)]);
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::new(half).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn channels_preserve_states(seed in 0u64..10_000, p in 0.0f64..1.0) {
            let mut rng = StdRng::seed_from_u64(seed);
            let rho = random_state(&mut rng, 2);
            let out = channel_apply(&KrausChannel::depolarizing(p).unwrap(), &rho).unwrap();
            prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(out.min_eigenvalue() >= -1e-9);
            let rho3 = random_state(&mut rng, 3);
            let out3 = channel_apply(&KrausChannel::classical(&chain()), &rho3).unwrap();
            prop_assert!((out3.matrix().trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(out3.min_eigenvalue() >= -1e-9);
        }
    }
}
