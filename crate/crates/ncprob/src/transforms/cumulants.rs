//! Moment, free-cumulant and Boolean-cumulant maps, and the F-series of a
//! moment sequence. All maps are generic over [`Scalar`] and exact over the
//! rationals.

use super::laurent::LaurentSeries;
use super::TransformError;
use crate::measures::MomentSequence;
use crate::numeric::Scalar;

/// Coefficients `[w^0..w^K]` of `M(w)^k` for `k = 0..=K`, with
/// `M(w) = Σ m_i w^i`.
fn moment_powers<T: Scalar>(full: &[T]) -> Vec<Vec<T>> {
    let n = full.len();
    let mut pw = vec![vec![T::zero(); n]; n];
    pw[0][0] = T::one();
    for k in 1..n {
        for j in 0..n {
            let mut s = T::zero();
            for i in 0..=j {
                s = s + full[i].clone() * pw[k - 1][j - i].clone();
            }
            pw[k][j] = s;
        }
    }
    pw
}

/// Free cumulants `κ_1..κ_K` from `m_n = Σ_k κ_k [w^{n−k}] M(w)^k`.
pub fn moments_to_free_cumulants<T: Scalar>(m: &MomentSequence<T>) -> Vec<T> {
    let full = m.with_zeroth();
    let order = m.order();
    let pw = moment_powers(&full);
    let mut kappa: Vec<T> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut s = full[n].clone();
        for k in 1..n {
            s = s - kappa[k - 1].clone() * pw[k][n - k].clone();
        }
        kappa.push(s);
    }
    kappa
}

/// Inverse of [`moments_to_free_cumulants`]. The power table is filled
/// column by column as moments become known, so the cost is `O(K³)`.
pub fn free_cumulants_to_moments<T: Scalar>(kappa: &[T]) -> Result<MomentSequence<T>, TransformError> {
    let order = kappa.len();
    let mut full = vec![T::zero(); order + 1];
    full[0] = T::one();
    // pw[k][j] = [w^j] M^k, valid once m_0..m_j are known.
    let mut pw = vec![vec![T::zero(); order + 1]; order + 1];
    for row in pw.iter_mut() {
        row[0] = T::one();
    }
    for n in 1..=order {
        let mut s = T::zero();
        for k in 1..=n {
            s = s + kappa[k - 1].clone() * pw[k][n - k].clone();
        }
        full[n] = s;
        for k in 1..=order {
            let mut acc = T::zero();
            for i in 0..=n {
                acc = acc + full[i].clone() * pw[k - 1][n - i].clone();
            }
            pw[k][n] = acc;
        }
    }
    Ok(MomentSequence::new(full[1..].to_vec())?)
}

/// Boolean cumulants, the coefficients of `B(z) = Σ β_k z^{1−k}`, from
/// `m_n = Σ_k β_k m_{n−k}`.
pub fn moments_to_boolean_cumulants<T: Scalar>(m: &MomentSequence<T>) -> Vec<T> {
    let full = m.with_zeroth();
    let mut beta: Vec<T> = Vec::with_capacity(m.order());
    for n in 1..=m.order() {
        let mut s = full[n].clone();
        for k in 1..n {
            s = s - beta[k - 1].clone() * full[n - k].clone();
        }
        beta.push(s);
    }
    beta
}

pub fn boolean_cumulants_to_moments<T: Scalar>(beta: &[T]) -> Result<MomentSequence<T>, TransformError> {
    let mut full = vec![T::one()];
    for n in 1..=beta.len() {
        let mut s = T::zero();
        for k in 1..=n {
            s = s + beta[k - 1].clone() * full[n - k].clone();
        }
        full.push(s);
    }
    Ok(MomentSequence::new(full[1..].to_vec())?)
}

/// `F(z) = 1/G(z)` with `G = Σ m_k z^{−k−1}`; `K` moments determine
/// `F` through `z^{−(K−1)}`.
pub fn f_series<T: Scalar>(m: &MomentSequence<T>) -> Result<LaurentSeries<T>, TransformError> {
    let g = LaurentSeries::new(1, m.with_zeroth());
    Ok(g.inv()?)
}

/// Moments `m_1..m_{K+1}` of the measure whose F-transform is the given
/// series known through `z^{−K}`.
pub fn moments_from_f_series<T: Scalar>(f: &LaurentSeries<T>) -> Result<MomentSequence<T>, TransformError> {
    let g = f.inv()?;
    let top = g.precision();
    let m: Vec<T> = (2..=top).map(|j| g.coeff_w(j)).collect();
    Ok(MomentSequence::new(m)?)
}
