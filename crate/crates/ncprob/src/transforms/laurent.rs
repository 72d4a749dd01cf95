//! Truncated Laurent series at infinity, `Σ c_j z^{-j}`, with explicit
//! precision tracking so that products and compositions never report
//! coefficients they cannot know.

use std::fmt;

use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesError {
    /// The operation needs a nonzero leading coefficient.
    ZeroLeading,
    /// Composition needs an inner series of the form `c·z + ...`, `c ≠ 0`.
    BadInner,
    /// Square roots need an even valuation and leading coefficient one.
    BadSqrt,
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesError::ZeroLeading => write!(f, "series has no known nonzero coefficient"),
            SeriesError::BadInner => write!(f, "inner series must start with a nonzero multiple of z"),
            SeriesError::BadSqrt => write!(f, "square root needs even valuation and leading coefficient 1"),
        }
    }
}

impl std::error::Error for SeriesError {}

/// `Σ_{j=val}^{prec} c_j w^j` in `w = 1/z`; coefficients beyond `prec`
/// are unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries<T> {
    val: i32,
    coeffs: Vec<T>,
}

impl<T: Scalar> LaurentSeries<T> {
    /// Coefficients of `w^val, w^{val+1}, ...`.
    pub fn new(val: i32, coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one known coefficient");
        Self { val, coeffs }
    }

    /// Normalized F-type series `z + b_0 + b_1/z + ... + b_K/z^K`.
    pub fn f_type(b: Vec<T>) -> Self {
        let mut coeffs = vec![T::one()];
        coeffs.extend(b);
        Self::new(-1, coeffs)
    }

    /// The identity `z`, known through `z^{-prec}`.
    pub fn identity(prec: i32) -> Self {
        let mut coeffs = vec![T::zero(); (prec + 2).max(1) as usize];
        coeffs[0] = T::one();
        Self::new(-1, coeffs)
    }

    /// The constant `c`, known through `z^{-prec}`.
    pub fn constant(c: T, prec: i32) -> Self {
        let mut coeffs = vec![T::zero(); (prec + 1).max(1) as usize];
        coeffs[0] = c;
        Self::new(0, coeffs)
    }

    /// Lowest stored power of `w = 1/z`.
    pub fn valuation(&self) -> i32 {
        self.val
    }

    /// Highest known power of `w = 1/z`.
    pub fn precision(&self) -> i32 {
        self.val + self.coeffs.len() as i32 - 1
    }

    /// Coefficient of `w^j = z^{-j}` (zero below the valuation).
    ///
    /// # Panics
    /// If `j` exceeds the precision.
    pub fn coeff_w(&self, j: i32) -> T {
        assert!(j <= self.precision(), "coefficient w^{j} beyond precision {}", self.precision());
        if j < self.val {
            T::zero()
        } else {
            self.coeffs[(j - self.val) as usize].clone()
        }
    }

    /// Coefficient of `z^e`.
    pub fn coeff(&self, e: i32) -> T {
        self.coeff_w(-e)
    }

    /// For an F-type series, `[b_0, .., b_K]`.
    pub fn f_coefficients(&self) -> Vec<T> {
        (0..=self.precision()).map(|j| self.coeff_w(j)).collect()
    }

    pub fn truncate(&self, prec: i32) -> Self {
        let prec = prec.min(self.precision());
        let len = (prec - self.val + 1).max(1) as usize;
        Self::new(self.val, self.coeffs[..len.min(self.coeffs.len())].to_vec())
    }

    fn with_range(val: i32, prec: i32, f: impl Fn(i32) -> T) -> Self {
        let coeffs = if prec < val { vec![T::zero()] } else { (val..=prec).map(f).collect() };
        Self::new(val, coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let val = self.val.min(other.val);
        let prec = self.precision().min(other.precision());
        Self::with_range(val, prec, |j| self.coeff_w(j) + other.coeff_w(j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.val, self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.val, self.coeffs.iter().map(|x| x.clone() * c.clone()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let val = self.val + other.val;
        let prec = (self.precision() + other.val).min(other.precision() + self.val);
        Self::with_range(val, prec, |j| {
            let mut s = T::zero();
            for i in self.val..=self.precision() {
                let k = j - i;
                if k < other.val {
                    break;
                }
                if k > other.precision() {
                    continue;
                }
                s = s + self.coeff_w(i) * other.coeff_w(k);
            }
            s
        })
    }

    /// Index of the first nonzero stored coefficient.
    fn leading(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Drops leading zero coefficients (keeps the precision).
    pub fn normalize(&self) -> Result<Self, SeriesError> {
        let i = self.leading().ok_or(SeriesError::ZeroLeading)?;
        Ok(Self::new(self.val + i as i32, self.coeffs[i..].to_vec()))
    }

    /// Multiplicative inverse; relative precision is preserved.
    pub fn inv(&self) -> Result<Self, SeriesError> {
        let a = self.normalize()?;
        let n = a.coeffs.len();
        let c0 = a.coeffs[0].clone();
        let mut out: Vec<T> = Vec::with_capacity(n);
        out.push(T::one() / c0.clone());
        for k in 1..n {
            let mut s = T::zero();
            for i in 1..=k {
                s = s + a.coeffs[i].clone() * out[k - i].clone();
            }
            out.push(-s / c0.clone());
        }
        Ok(Self::new(-a.val, out))
    }

    pub fn div(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(T::one(), self.precision().max(0) + self.val.abs() * n as i32);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Square root with leading term `w^{val/2}`; the input must be
    /// `w^{2v}(1 + ...)`.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let a = self.normalize()?;
        if a.val % 2 != 0 || !a.coeffs[0].is_one() {
            return Err(SeriesError::BadSqrt);
        }
        let n = a.coeffs.len();
        let two = T::from_i64(2);
        let mut s: Vec<T> = vec![T::one()];
        for k in 1..n {
            let mut acc = a.coeffs[k].clone();
            for i in 1..k {
                acc = acc - s[i].clone() * s[k - i].clone();
            }
            s.push(acc / two.clone());
        }
        Ok(Self::new(a.val / 2, s))
    }

    /// `self ∘ inner`, where `inner = c·z + ...` with `c ≠ 0`.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        let g = inner.normalize()?;
        if g.val != -1 {
            return Err(SeriesError::BadInner);
        }
        let f = self;
        let top = f.precision();
        let mut result = Self::with_range(f.val.min(0), top.max(f.val.min(0)), |_| T::zero());
        // Nonnegative powers of w come from powers of 1/g.
        let g_inv = g.inv()?;
        let mut down = Self::constant(T::one(), top.max(0));
        for j in 0..=top {
            if j >= f.val {
                result = result.add(&down.scale(&f.coeff_w(j)));
            }
            down = down.mul(&g_inv).truncate(top);
        }
        // Positive powers of z come from powers of g.
        let mut up = Self::constant(T::one(), top.max(0) + 1);
        for k in 1..=(-f.val).max(0) {
            up = up.mul(&g);
            result = result.add(&up.scale(&f.coeff_w(-k)));
        }
        Ok(result)
    }

    /// Evaluates the known part at `z` in floating point.
    pub fn eval(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let w = 1.0 / z;
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c.approx();
        }
        acc * w.powi(self.val)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LaurentSeries<U> {
        LaurentSeries::new(self.val, self.coeffs.iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rational, Rational};
    use num_complex::Complex64;

    fn r(n: i64) -> Rational {
        rational(n, 1)
    }

    #[test]
    fn inverse_of_geometric() {
        // 1 − w has inverse 1 + w + w² + ...
        let s = LaurentSeries::new(0, vec![r(1), r(-1), r(0), r(0), r(0)]);
        let inv = s.inv().unwrap();
        assert_eq!(inv.f_coefficients(), vec![r(1); 5]);
    }

    #[test]
    fn product_precision_accounts_for_poles() {
        let z = LaurentSeries::<f64>::f_type(vec![0.0, 1.0, 2.0]);
        let sq = z.mul(&z);
        assert_eq!(sq.valuation(), -2);
        assert_eq!(sq.precision(), 1);
        assert_eq!(sq.coeff(2), 1.0);
        assert_eq!(sq.coeff(0), 2.0);
        assert_eq!(sq.coeff(-1), 4.0);
    }

    #[test]
    fn sqrt_of_square() {
        // √((z−1)² − 4) + 1 squared back.
        let prec = 8;
        let z = LaurentSeries::<Rational>::identity(prec);
        let shifted = z.sub(&LaurentSeries::constant(r(1), prec));
        let inner = shifted.mul(&shifted).sub(&LaurentSeries::constant(r(4), prec));
        let root = inner.sqrt().unwrap();
        assert_eq!(root.valuation(), -1);
        let back = root.mul(&root);
        for e in -2..=0 {
            assert_eq!(back.coeff(e), inner.coeff(e));
        }
        assert_eq!(root.coeff(1), r(1));
        assert_eq!(root.coeff(0), r(-1));
        assert_eq!(root.coeff(-1), r(-2));
    }

    #[test]
    fn compose_translations() {
        let f = LaurentSeries::<Rational>::f_type(vec![r(-2), r(0), r(0)]);
        let g = LaurentSeries::<Rational>::f_type(vec![r(-3), r(0), r(0)]);
        let h = f.compose(&g).unwrap();
        assert_eq!(h.f_coefficients(), vec![r(-5), r(0), r(0)]);
    }

    #[test]
    fn compose_matches_numeric_evaluation() {
        let f = LaurentSeries::<f64>::f_type(vec![0.5, -1.0, 0.25, 0.1, -0.3, 0.2]);
        let g = LaurentSeries::<f64>::f_type(vec![-0.2, -2.0, 0.3, 0.0, 0.4, -0.1]);
        let h = f.compose(&g).unwrap();
        assert_eq!(h.precision(), 5);
        let z = Complex64::new(30.0, 20.0);
        let direct = f.eval(g.eval(z));
        assert!((h.eval(z) - direct).norm() < 1e-8 * direct.norm());
    }

    #[test]
    fn compose_with_constant_and_positive_powers() {
        // f(z) = z² + 1/z composed with g(z) = 2z + 1.
        let f = LaurentSeries::<Rational>::new(-2, vec![r(1), r(0), r(0), r(1), r(0), r(0)]);
        let g = LaurentSeries::<Rational>::new(-1, vec![r(2), r(1), r(0), r(0), r(0), r(0)]);
        let h = f.compose(&g).unwrap();
        // (2z+1)² = 4z² + 4z + 1; 1/(2z+1) = w/2 − w²/4 + ...
        assert_eq!(h.coeff(2), r(4));
        assert_eq!(h.coeff(1), r(4));
        assert_eq!(h.coeff(0), r(1));
        assert_eq!(h.coeff(-1), rational(1, 2));
        assert_eq!(h.coeff(-2), rational(-1, 4));
    }
}
