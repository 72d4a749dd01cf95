//! Dormand–Prince 5(4) integration of `dw/dτ = H(τ, w)` for a Herglotz
//! field, with the step limited by the distance to the field's support.

use num_complex::Complex64;

use super::{HerglotzField, LoewnerError};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Smallest admissible step.
pub(crate) const MIN_STEP: f64 = 1e-14;

/// Which way time runs, and what leaving the half-plane means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// Transition maps: time decreases and `Im w` grows.
    Backward,
    /// Inverse flow: time increases and `Im w` shrinks toward the hull.
    Forward,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Trajectory {
    /// `w(end) − w(start)`, integrated directly to keep its relative
    /// accuracy when it is small next to `w`.
    pub displacement: Complex64,
    pub min_im: f64,
    pub steps: usize,
}

/// Field value and distance to the support at time `tau`, evaluated
/// strictly inside the segment `[lo, hi]`.
fn field(field: &HerglotzField, tau: f64, lo: f64, hi: f64, w: Complex64) -> (Complex64, f64) {
    let inset = 1e-13 * (hi - lo);
    let tau = tau.clamp(lo + inset, hi - inset);
    let nu = field.measure_at(tau);
    let mut h = Complex64::new(0.0, 0.0);
    let mut dist = f64::INFINITY;
    for &(u, wt) in nu.atoms() {
        let d = w - u;
        h += wt / d;
        dist = dist.min(d.norm());
    }
    (field.speed() * h, dist)
}

/// Integrates from `start` across the segments between consecutive
/// `boundaries`, restarting the step control at each boundary.
pub(crate) fn integrate(
    f: &HerglotzField,
    start: Complex64,
    boundaries: &[f64],
    direction: Direction,
    tol: f64,
) -> Result<Trajectory, LoewnerError> {
    let mut d = Complex64::new(0.0, 0.0);
    let mut min_im = start.im;
    let mut steps = 0usize;
    let segments: Vec<(f64, f64)> = boundaries.windows(2).map(|p| (p[0], p[1])).collect();
    let ordered: Box<dyn Iterator<Item = &(f64, f64)>> = match direction {
        Direction::Forward => Box::new(segments.iter()),
        Direction::Backward => Box::new(segments.iter().rev()),
    };
    for &(lo, hi) in ordered {
        let (mut tau, end, sign) = match direction {
            Direction::Forward => (lo, hi, 1.0),
            Direction::Backward => (hi, lo, -1.0),
        };
        let mut h = (hi - lo).min(0.1);
        while (end - tau) * sign > 0.0 {
            let remaining = (end - tau).abs();
            let w = start + d;
            let (h0, dist) = field(f, tau, lo, hi, w);
            let limit = if h0.norm() > 0.0 { 0.5 * dist / h0.norm() } else { f64::INFINITY };
            let mut step = h.min(limit).min(remaining);
            if step < MIN_STEP && remaining > MIN_STEP {
                return Err(match direction {
                    Direction::Forward => LoewnerError::HullCollision { time: tau, value: w },
                    Direction::Backward => LoewnerError::StepUnderflow { time: tau },
                });
            }
            loop {
                let sh = sign * step;
                let mut k = [Complex64::new(0.0, 0.0); 7];
                k[0] = h0;
                for i in 1..7 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..i {
                        acc += A[i][j] * k[j];
                    }
                    k[i] = field(f, tau + C[i] * sh, lo, hi, w + sh * acc).0;
                }
                // The seventh stage is evaluated at the fifth-order solution.
                let delta: Complex64 = (0..6).map(|i| A[6][i] * k[i]).sum::<Complex64>() * sh;
                let err: Complex64 = (0..7).map(|i| E[i] * k[i]).sum::<Complex64>() * sh;
                let scale = tol * (d.norm().max((d + delta).norm()) + delta.norm()).max(1e-300);
                let ratio = err.norm() / scale;
                if ratio <= 1.0 || step <= MIN_STEP {
                    d += delta;
                    tau = if step == remaining { end } else { tau + sh };
                    steps += 1;
                    let im = (start + d).im;
                    min_im = min_im.min(im);
                    match direction {
                        Direction::Backward if im < 1e-12 => {
                            return Err(LoewnerError::DomainEscape { time: tau, value: start + d })
                        }
                        Direction::Forward if im < 1e-9 => {
                            return Err(LoewnerError::HullCollision { time: tau, value: start + d })
                        }
                        _ => {}
                    }
                    let grow = if ratio > 0.0 { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
                    h = (step * grow).max(MIN_STEP);
                    break;
                }
                step *= (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
                if step < MIN_STEP {
                    return Err(match direction {
                        Direction::Forward => LoewnerError::HullCollision { time: tau, value: w },
                        Direction::Backward => LoewnerError::StepUnderflow { time: tau },
                    });
                }
            }
        }
    }
    Ok(Trajectory { displacement: d, min_im, steps })
}
