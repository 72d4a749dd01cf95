use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::MarkovError;

/// Steps used by [`convergence_report`].
pub const CONVERGENCE_HORIZON: usize = 200;
const STOCHASTIC_TOL: f64 = 1e-12;

/// A column-stochastic matrix: column `k` is the law of the next state
/// given the current state `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    /// Row-major entries.
    matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<MatrixRepr> for TransitionMatrix {
    type Error = MarkovError;
    fn try_from(r: MatrixRepr) -> Result<Self, Self::Error> {
        let n = r.matrix.len();
        if r.matrix.iter().any(|row| row.len() != n) {
            return Err(MarkovError::InvalidMatrix("matrix must be square".into()));
        }
        let p = DMatrix::from_fn(n, n, |i, j| r.matrix[i][j]);
        match r.labels {
            Some(l) => Self::with_labels(p, l),
            None => Self::new(p),
        }
    }
}

impl From<TransitionMatrix> for MatrixRepr {
    fn from(t: TransitionMatrix) -> Self {
        let n = t.p.nrows();
        MatrixRepr { matrix: (0..n).map(|i| (0..n).map(|j| t.p[(i, j)]).collect()).collect(), labels: Some(t.labels) }
    }
}

impl TransitionMatrix {
    pub fn new(p: DMatrix<f64>) -> Result<Self, MarkovError> {
        let labels = (0..p.nrows()).map(|i| i.to_string()).collect();
        Self::with_labels(p, labels)
    }

    pub fn with_labels(p: DMatrix<f64>, labels: Vec<String>) -> Result<Self, MarkovError> {
        if p.nrows() != p.ncols() || p.nrows() == 0 {
            return Err(MarkovError::InvalidMatrix(format!("shape {}×{}", p.nrows(), p.ncols())));
        }
        if labels.len() != p.nrows() {
            return Err(MarkovError::InvalidMatrix("one label per state required".into()));
        }
        if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(MarkovError::InvalidMatrix(format!("entry {x} outside [0, 1]")));
        }
        for (k, col) in p.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MarkovError::InvalidMatrix(format!("column {k} sums to {s}")));
            }
        }
        Ok(Self { p, labels })
    }

    /// From row-major entries.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, MarkovError> {
        MatrixRepr { matrix: rows.iter().map(|r| r.to_vec()).collect(), labels: None }.try_into()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> usize {
        self.p.nrows()
    }

    /// `P(from → to)`.
    pub fn prob(&self, to: usize, from: usize) -> f64 {
        self.p[(to, from)]
    }

    /// Matrix product; the result is again column-stochastic.
    pub fn compose(&self, other: &TransitionMatrix) -> Result<TransitionMatrix, MarkovError> {
        if self.states() != other.states() {
            return Err(MarkovError::InvalidMatrix("state counts differ".into()));
        }
        let mut q = &self.p * &other.p;
        for mut col in q.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        Self::with_labels(q, self.labels.clone())
    }

    fn successors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.states()).filter(move |&j| self.p[(j, k)] > 0.0)
    }
}

fn reach(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for w in next(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Every state reaches every other through positive entries.
pub fn is_irreducible(p: &TransitionMatrix) -> bool {
    let n = p.states();
    let fwd = reach(n, 0, |k| p.successors(k).collect());
    let back = reach(n, 0, |j| (0..n).filter(|&k| p.p[(j, k)] > 0.0).collect());
    fwd.iter().chain(&back).all(|&b| b)
}

/// Period of `state`: gcd of the lengths of its return paths, or 0 when
/// it cannot return.
pub fn period(p: &TransitionMatrix, state: usize) -> usize {
    let n = p.states();
    let fwd = reach(n, state, |k| p.successors(k).collect());
    let back = reach(n, state, |j| (0..n).filter(|&k| p.p[(j, k)] > 0.0).collect());
    let class: Vec<bool> = fwd.iter().zip(&back).map(|(a, b)| *a && *b).collect();
    // BFS levels inside the communicating class; every edge u → v in the
    // class contributes level(u) + 1 − level(v) to the gcd.
    let mut level = vec![usize::MAX; n];
    level[state] = 0;
    let mut queue = VecDeque::from([state]);
    while let Some(v) = queue.pop_front() {
        for w in p.successors(v).filter(|&w| class[w]) {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut g = 0usize;
    for u in (0..n).filter(|&u| class[u]) {
        for v in p.successors(u).filter(|&v| class[v]) {
            let d = (level[u] + 1).abs_diff(level[v]);
            g = gcd(g, d);
        }
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The unique `π` with `Pπ = π`, by a linear solve with one equation
/// replaced by the normalization.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<DVector<f64>, MarkovError> {
    if !is_irreducible(p) {
        return Err(MarkovError::NotIrreducible);
    }
    let n = p.states();
    let mut a = &p.p - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(MarkovError::NotIrreducible)?;
    Ok(pi)
}

fn check_vector(p: &TransitionMatrix, v: &DVector<f64>) -> Result<(), MarkovError> {
    if v.len() != p.states() {
        return Err(MarkovError::InvalidVector(format!("length {} for {} states", v.len(), p.states())));
    }
    if v.iter().any(|x| !(*x >= 0.0)) || (v.sum() - 1.0).abs() > 1e-9 {
        return Err(MarkovError::InvalidVector("entries must be nonnegative and sum to 1".into()));
    }
    Ok(())
}

/// `Pⁿ v`.
pub fn iterate_distribution(p: &TransitionMatrix, v: &DVector<f64>, n: usize) -> Result<DVector<f64>, MarkovError> {
    check_vector(p, v)?;
    let mut x = v.clone();
    for _ in 0..n {
        x = &p.p * x;
    }
    Ok(x)
}

/// Distance to stationarity and a geometric fit `‖Pⁿv − π‖∞ ≈ C·θⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub stationary: DVector<f64>,
    /// `θ̂`.
    pub rate: f64,
    /// `C`.
    pub constant: f64,
    /// `‖Pⁿv − π‖∞` for `n = 0..=CONVERGENCE_HORIZON`.
    pub errors: Vec<f64>,
}

pub fn convergence_report(p: &TransitionMatrix, v: &DVector<f64>) -> Result<ConvergenceReport, MarkovError> {
    check_vector(p, v)?;
    let pi = stationary_distribution(p)?;
    let mut x = v.clone();
    let mut errors = Vec::with_capacity(CONVERGENCE_HORIZON + 1);
    for _ in 0..=CONVERGENCE_HORIZON {
        errors.push((&x - &pi).amax());
        x = &p.p * x;
    }
    // Fit the tail above the rounding floor, where the slowest mode dominates.
    let usable: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .take_while(|(_, &e)| e > 1e-12)
        .map(|(n, &e)| (n as f64, e.ln()))
        .collect();
    let (rate, constant) = if usable.len() < 2 {
        (0.0, errors[0])
    } else {
        let tail = &usable[usable.len() / 2..];
        let tail = if tail.len() < 2 { &usable[..] } else { tail };
        let k = tail.len() as f64;
        let (sx, sy) = tail.iter().fold((0.0, 0.0), |a, &(x, y)| (a.0 + x, a.1 + y));
        let (mx, my) = (sx / k, sy / k);
        let sxx: f64 = tail.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
        let sxy: f64 = tail.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        (slope.exp(), (my - slope * mx).exp())
    };
    Ok(ConvergenceReport { stationary: pi, rate, constant, errors })
}

/// Second largest eigenvalue modulus.
pub fn second_eigenvalue_modulus(p: &TransitionMatrix) -> f64 {
    let mut mods: Vec<f64> = p.p.complex_eigenvalues().iter().map(|l| l.norm()).collect();
    mods.sort_by(|a, b| b.total_cmp(a));
    mods.get(1).copied().unwrap_or(0.0)
}

/// `𝓡(s) = Σ_{s'} P(s → s') R(s')`.
pub fn expected_rewards(p: &TransitionMatrix, reward: &[f64]) -> Result<DVector<f64>, MarkovError> {
    if reward.len() != p.states() {
        return Err(MarkovError::InvalidVector("one reward per state required".into()));
    }
    Ok(p.p.tr_mul(&DVector::from_column_slice(reward)))
}

/// Solves `v = 𝓡 + γ v P` for the row vector `v`.
pub fn mrp_value(p: &TransitionMatrix, reward: &[f64], gamma: f64) -> Result<DVector<f64>, MarkovError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(MarkovError::BadDiscount(gamma));
    }
    let r = expected_rewards(p, reward)?;
    let n = p.states();
    // Transposed: (I − γPᵀ) vᵀ = 𝓡ᵀ.
    let a = DMatrix::identity(n, n) - gamma * p.p.transpose();
    let v = a.lu().solve(&r).expect("I − γP is invertible for γ < 1");
    Ok(v)
}

/// Monte Carlo estimate of `E_s[τ⁺(s)]` with its standard error.
pub fn mean_return_time(p: &TransitionMatrix, state: usize, episodes: usize, seed: u64) -> (f64, f64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = p.states();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..episodes {
        let mut x = state;
        let mut steps = 0u64;
        loop {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut next = n - 1;
            for j in 0..n {
                acc += p.p[(j, x)];
                if u < acc {
                    next = j;
                    break;
                }
            }
            x = next;
            steps += 1;
            if x == state {
                break;
            }
        }
        sum += steps as f64;
        sum_sq += (steps * steps) as f64;
    }
    let k = episodes as f64;
    let mean = sum / k;
    let var = (sum_sq / k - mean * mean) * k / (k - 1.0).max(1.0);
    (mean, (var / k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn basketball() -> TransitionMatrix {
        // States P1, P2, S, L; column k is the law after leaving state k.
        TransitionMatrix::from_rows(&[
            &[0.0, 0.1, 0.0, 0.0],
            &[0.6, 0.0, 0.0, 0.0],
            &[0.2, 0.8, 1.0, 0.0],
            &[0.2, 0.1, 0.0, 1.0],
        ])
        .unwrap()
    }

    const REWARD: [f64; 4] = [0.0, 0.0, 1.0, -1.0];

    fn random_chain(seed: u64, n: usize) -> TransitionMatrix {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut p = DMatrix::from_fn(n, n, |_, _| 0.05 + rng.random::<f64>());
        for mut col in p.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        TransitionMatrix::new(p).unwrap()
    }

    #[test]
    fn validation() {
        assert!(TransitionMatrix::from_rows(&[&[0.5, 0.5], &[0.4, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(&[&[1.5, 0.0], &[-0.5, 1.0]]).is_err());
        assert!(TransitionMatrix::from_rows(&[&[1.0]]).is_ok());
        let json = serde_json::to_string(&basketball()).unwrap();
        assert_eq!(serde_json::from_str::<TransitionMatrix>(&json).unwrap(), basketball());
    }

    #[test]
    fn doubly_stochastic_has_uniform_law() {
        let p = TransitionMatrix::from_rows(&[&[0.2, 0.5, 0.3], &[0.3, 0.2, 0.5], &[0.5, 0.3, 0.2]]).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        assert!(pi.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn detailed_balance_vector_is_stationary() {
        // Birth-death chain: reversible w.r.t. its stationary law.
        let v = [0.1, 0.2, 0.3, 0.4];
        let n = v.len();
        let mut p = DMatrix::zeros(n, n);
        for k in 0..n - 1 {
            // P(k → k+1)·v_k = P(k+1 → k)·v_{k+1}
            let up = 0.4;
            p[(k + 1, k)] = up;
            p[(k, k + 1)] = up * v[k] / v[k + 1];
        }
        for k in 0..n {
            let out: f64 = (0..n).filter(|&j| j != k).map(|j| p[(j, k)]).sum();
            p[(k, k)] = 1.0 - out;
        }
        let p = TransitionMatrix::new(p).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        for k in 0..n {
            assert!((pi[k] - v[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn irreducibility_and_period() {
        let swap = TransitionMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(is_irreducible(&swap));
        assert_eq!(period(&swap, 0), 2);
        assert!(!is_irreducible(&basketball()));
        assert!(matches!(stationary_distribution(&basketball()), Err(MarkovError::NotIrreducible)));
        let id = TransitionMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert!(!is_irreducible(&id));
        assert_eq!(period(&id, 1), 1);
        assert_eq!(period(&basketball(), 0), 2);
        let three = TransitionMatrix::from_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(period(&three, 2), 3);
        assert_eq!(period(&random_chain(1, 4), 0), 1);
    }

    #[test]
    fn stationary_start_stays_put() {
        let p = random_chain(3, 5);
        let pi = stationary_distribution(&p).unwrap();
        let moved = iterate_distribution(&p, &pi, 50).unwrap();
        assert!((moved - &pi).amax() < 1e-12);
    }

    #[test]
    fn half_matrix_converges_in_one_step() {
        let p = TransitionMatrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let r = convergence_report(&p, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(r.errors[1] < 1e-15);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn fitted_rate_tracks_second_eigenvalue() {
        for seed in 0..5 {
            let p = random_chain(seed, 4);
            let r = convergence_report(&p, &DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
            let lambda = second_eigenvalue_modulus(&p);
            assert!(r.rate < 1.0);
            assert!((r.rate - lambda).abs() < 0.05, "{} vs {lambda}", r.rate);
        }
    }

    #[test]
    fn return_times_match_stationary_law() {
        let p = random_chain(11, 4);
        let pi = stationary_distribution(&p).unwrap();
        for s in 0..4 {
            let (mean, se) = mean_return_time(&p, s, 100_000, 5 + s as u64);
            assert!((mean - 1.0 / pi[s]).abs() < 3.0 * se, "{mean} ± {se} vs {}", 1.0 / pi[s]);
        }
    }

    #[test]
    fn basketball_values() {
        let r = expected_rewards(&basketball(), &REWARD).unwrap();
        assert!((r[0] - 0.0).abs() < 1e-12 && (r[1] - 0.7).abs() < 1e-12);
        let v0 = mrp_value(&basketball(), &REWARD, 0.0).unwrap();
        assert!((v0 - &r).amax() < 1e-12);
        for (gamma, want) in [(0.5, [0.43, 1.42, 2.0, -2.0]), (0.9, [3.97, 7.36, 10.0, -10.0])] {
            let v = mrp_value(&basketball(), &REWARD, gamma).unwrap();
            for k in 0..4 {
                assert!((v[k] - want[k]).abs() < 0.01, "γ={gamma}: {v}");
            }
        }
        assert!(matches!(mrp_value(&basketball(), &REWARD, 1.0), Err(MarkovError::BadDiscount(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn products_stay_stochastic(seed in 0u64..1000, a in 1usize..5, b in 1usize..5) {
            let p = random_chain(seed, 5);
            let q = random_chain(seed + 1, 5);
            let mut acc = p.clone();
            for _ in 1..a { acc = acc.compose(&p).unwrap(); }
            for _ in 0..b { acc = acc.compose(&q).unwrap(); }
            for col in acc.matrix().column_iter() {
                prop_assert!((col.sum() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn bellman_residual_is_small(seed in 0u64..1000, gamma in 0.0f64..0.99) {
            let p = random_chain(seed, 6);
            let reward: Vec<f64> = (0..6).map(|k| (k as f64 * 0.7).sin()).collect();
            let v = mrp_value(&p, &reward, gamma).unwrap();
            let r = expected_rewards(&p, &reward).unwrap();
            let residual = &v - &r - gamma * p.matrix().tr_mul(&v);
            prop_assert!(residual.amax() <= 1e-10);
        }
    }
}
