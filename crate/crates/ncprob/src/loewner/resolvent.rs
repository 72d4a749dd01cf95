//! Nonlinear resolvents `J_t = (id − t·G)^{-1}` of a semigroup generator.

use num_complex::Complex64;

use super::LoewnerError;
use crate::transforms::{HerglotzMap, MapKind};

pub const NEWTON_MAX_STEPS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

/// Solves `z − t·G(z) = w` by damped Newton iteration started at `w`.
pub fn nonlinear_resolvent(generator: &HerglotzMap, t: f64, w: Complex64) -> Result<Complex64, LoewnerError> {
    if !(w.im > 0.0) {
        return Err(LoewnerError::NotUpperHalfPlane(w));
    }
    if t == 0.0 {
        return Ok(w);
    }
    let tol = RESIDUAL_TOL * w.norm().max(1.0);
    let phi = |z: Complex64| z - t * generator.eval(z) - w;
    let mut z = w;
    let mut r = phi(z);
    for _ in 0..NEWTON_MAX_STEPS {
        if r.norm() <= tol {
            return Ok(z);
        }
        let h = 1e-6 * z.norm().max(1.0);
        let dg = (generator.eval(z + h) - generator.eval(z - h)) / (2.0 * h);
        let step = -r / (1.0 - t * dg);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = z + lambda * step;
            if cand.im > 0.0 {
                let rc = phi(cand);
                if rc.norm() < r.norm() {
                    z = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= tol {
        Ok(z)
    } else {
        Err(LoewnerError::NoConvergence { residual: r.norm() })
    }
}

/// `J_t` as a map; failed solves give NaN.
pub fn resolvent_map(generator: &HerglotzMap, t: f64) -> HerglotzMap {
    let g = generator.clone();
    HerglotzMap::new(MapKind::FTransform, move |w| {
        nonlinear_resolvent(&g, t, w).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{linspace, sqrt_upper};
    use crate::transforms::{invert_f_map, DEFAULT_EPS_LADDER};
    use proptest::prelude::*;

    fn semicircle_generator() -> HerglotzMap {
        HerglotzMap::new(MapKind::Generator, |z| -1.0 / z)
    }

    #[test]
    fn zero_time_is_identity() {
        let w = Complex64::new(0.3, 0.7);
        assert_eq!(nonlinear_resolvent(&semicircle_generator(), 0.0, w).unwrap(), w);
    }

    #[test]
    fn semicircle_resolvent_is_quadratic_root() {
        let g = semicircle_generator();
        for &t in &[0.2, 0.5, 1.0, 3.0] {
            let w = Complex64::new(0.0, 2.0);
            let expected = (w + sqrt_upper(w * w - 4.0 * t)) / 2.0;
            let got = nonlinear_resolvent(&g, t, w).unwrap();
            assert!((got - expected).norm() < 1e-10, "t={t}: {got} vs {expected}");
        }
    }

    #[test]
    fn resolvent_measure_has_variance_t() {
        let g = semicircle_generator();
        for &t in &[0.2f64, 0.5, 1.0] {
            let r = 2.0 * t.sqrt() + 0.2;
            let inv = invert_f_map(&resolvent_map(&g, t), &linspace(-r, r, 1601), &DEFAULT_EPS_LADDER).unwrap();
            assert!((inv.measure.variance() - t).abs() < 1e-3, "t={t}: {}", inv.measure.variance());
            assert!(inv.measure.mean().abs() < 1e-3);
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        // z − G(z) = w has no solution when G(z) = z + 5i.
        let g = HerglotzMap::new(MapKind::Generic, |z| z + Complex64::new(0.0, 5.0));
        let r = nonlinear_resolvent(&g, 1.0, Complex64::new(0.0, 1.0));
        assert!(matches!(r, Err(LoewnerError::NoConvergence { .. })), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn resolvent_inverts_the_resolvent_equation(
            x in -3.0f64..3.0, y in 2.0f64..10.0, t in 0.01f64..2.0
        ) {
            let g = semicircle_generator();
            let z = Complex64::new(x, y);
            let w = z - t * g.eval(z);
            let back = nonlinear_resolvent(&g, t, w).unwrap();
            prop_assert!((back - z).norm() < 1e-10);
        }
    }
}
