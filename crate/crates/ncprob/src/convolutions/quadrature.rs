//! Gauss quadrature from exact moments: the Chebyshev algorithm yields the
//! recurrence coefficients, the Jacobi matrix yields nodes and weights.

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use super::ConvolutionError;
use crate::measures::AtomicMeasure;
use crate::numeric::{ratio_to_f64, Rational};

/// Three-term recurrence coefficients `(α_k, β_k)` of the orthogonal
/// polynomials of a measure with moments `m_0..m_{2N−1}`. Stops early when
/// the measure has fewer than `N` support points.
pub fn recurrence_coefficients(m: &[Rational]) -> Result<(Vec<Rational>, Vec<Rational>), ConvolutionError> {
    let n = m.len() / 2;
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut alpha = vec![&m[1] / &m[0]];
    let mut beta = vec![m[0].clone()];
    let mut prev: Vec<Rational> = vec![Rational::zero(); m.len()];
    let mut cur: Vec<Rational> = m.to_vec();
    for k in 1..n {
        let mut next = vec![Rational::zero(); m.len()];
        for l in k..(2 * n - k) {
            next[l] = &cur[l + 1] - &alpha[k - 1] * &cur[l] - &beta[k - 1] * &prev[l];
        }
        if next[k].is_zero() {
            break;
        }
        if next[k].is_negative() {
            return Err(ConvolutionError::InvalidMoments(k));
        }
        alpha.push(&next[k + 1] / &next[k] - &cur[k] / &cur[k - 1]);
        beta.push(&next[k] / &cur[k - 1]);
        prev = cur;
        cur = next;
    }
    Ok((alpha, beta))
}

/// Gauss quadrature rule with as many nodes as the recurrence allows.
pub fn gauss_rule(alpha: &[Rational], beta: &[Rational]) -> Result<AtomicMeasure, ConvolutionError> {
    let n = alpha.len();
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            ratio_to_f64(&alpha[i])
        } else if i + 1 == j {
            ratio_to_f64(&beta[j]).sqrt()
        } else if j + 1 == i {
            ratio_to_f64(&beta[i]).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let atoms: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .filter(|a| a.1 > 0.0)
        .collect();
    Ok(AtomicMeasure::from_unsorted(atoms.clone()).or_else(|_| AtomicMeasure::normalized(atoms))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{moments, LawSpec};
    use crate::numeric::rational;

    #[test]
    fn two_point_measure_is_recovered() {
        // ¼δ_{−1} + ¾δ_2 has moments (−1)^k/4 + 3·2^k/4.
        let m: Vec<Rational> = (0..8)
            .map(|k| rational((-1i64).pow(k) + 3 * 2i64.pow(k), 4))
            .collect();
        let (a, b) = recurrence_coefficients(&m).unwrap();
        assert_eq!(a.len(), 2);
        let rule = gauss_rule(&a, &b).unwrap();
        assert!((rule.atoms()[0].0 + 1.0).abs() < 1e-12 && (rule.atoms()[0].1 - 0.25).abs() < 1e-12);
        assert!((rule.atoms()[1].0 - 2.0).abs() < 1e-12 && (rule.atoms()[1].1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn semicircle_recurrence_is_constant() {
        // Catalan numbers: α = 0, β_k = 1.
        let law = LawSpec::Semicircle { center: 0.0, var: 1.0 };
        let m: Vec<Rational> = std::iter::once(rational(1, 1))
            .chain(law.truncated_moments(11).unwrap().as_slice().iter().map(|&v| rational(v as i64, 1)))
            .collect();
        let (a, b) = recurrence_coefficients(&m).unwrap();
        assert_eq!(a, vec![rational(0, 1); 6]);
        assert_eq!(b[1..], vec![rational(1, 1); 5][..]);
        let rule = gauss_rule(&a, &b).unwrap();
        let qm = moments(&rule, 11).unwrap();
        for k in 1..=11 {
            assert!((qm.get(k) - ratio_to_f64(&m[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_moments_are_rejected() {
        // m_2 < m_1² is impossible.
        let m = vec![rational(1, 1), rational(1, 1), rational(1, 2), rational(0, 1)];
        assert!(matches!(recurrence_coefficients(&m), Err(ConvolutionError::InvalidMoments(1))));
    }
}
