//! Scalar abstraction for exact/float coefficient arithmetic plus a few
//! complex-analysis and quadrature helpers shared across modules.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Exact rational type used for integer-exact moment arithmetic.
pub type Rational = BigRational;

/// Coefficient field for series and moment arithmetic.
///
/// Implemented for `f64` and [`Rational`]; every algorithm generic over
/// `Scalar` is exact when instantiated with rationals.
pub trait Scalar: Num + Clone + Neg<Output = Self> + Debug + Send + Sync + 'static {
    fn from_i64(v: i64) -> Self;
    /// Nearest float.
    fn approx(&self) -> f64;
    /// Magnitude used by tolerance checks; exact types return `abs` as f64.
    fn magnitude(&self) -> f64 {
        self.approx().abs()
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn approx(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn approx(&self) -> f64 {
        ratio_to_f64(self)
    }
}

/// Lossless conversion of a finite float to a rational.
pub fn rational_from_f64(x: f64) -> Rational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

pub fn rational(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Float value of a big rational that stays accurate when numerator and
/// denominator individually overflow `f64`.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        BigRational::new(r.numer().clone(), r.denom().clone() << (shift as usize))
    } else {
        BigRational::new(r.numer().clone() << ((-shift) as usize), r.denom().clone())
    };
    let q = scaled.numer() / scaled.denom();
    // Two factors keep each power of two representable.
    let half = (shift / 2) as i32;
    q.to_f64().unwrap_or(0.0) * 2f64.powi(half) * 2f64.powi(shift as i32 - half)
}

/// Exact test for integrality, used by graph moment comparisons.
pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

pub fn abs_rational(r: &Rational) -> Rational {
    r.abs()
}

/// Square root with branch cut on `[0, ∞)`, taking values in the closed
/// upper half-plane. Composed with `z² − c` this is the branch that behaves
/// like `z` at infinity for `z` in the upper half-plane.
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    Complex64::i() * (-w).sqrt()
}

/// `ln(1 + d)` for complex `d`, accurate for small `|d|`.
pub fn ln_1p(d: Complex64) -> Complex64 {
    if d.norm() < 1e-4 {
        let d2 = d * d;
        d - d2 / 2.0 + d2 * d / 3.0 - d2 * d2 / 4.0
    } else {
        (Complex64::new(1.0, 0.0) + d).ln()
    }
}

/// Binomial coefficient as float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Exact binomial coefficient in any scalar field.
pub fn binomial_exact<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::from_i64((n - i) as i64) / T::from_i64((i + 1) as i64);
    }
    acc
}

/// 16-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
    (0.617_876_244_402_643_7, 0.149_595_988_816_576_7),
    (0.755_404_408_355_003, 0.124_628_971_255_533_9),
    (0.865_631_202_387_831_7, 0.095_158_511_682_492_78),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_09),
];

/// Integrates a smooth function over `[a, b]` with composite 16-point
/// Gauss–Legendre on `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in GL16.iter() {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Complex-valued variant of [`gauss_legendre`].
pub fn gauss_legendre_c<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = Complex64::new(0.0, 0.0);
        for &(x, w) in GL16.iter() {
            s += (f(mid - half * x) + f(mid + half * x)) * w;
        }
        total += s * half;
    }
    total
}

/// Uniform grid of `points` samples from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + i as f64 * h })
        .collect()
}
