//! Approximation of a general field by a single slit: time is cut into
//! blocks, the support into bins, and within each block the driving
//! function visits every bin barycenter for a time proportional to its mass.

use num_complex::Complex64;

use super::{evaluate_chain, slit_chain, DrivingFunction, HerglotzField, LoewnerError};

/// Piecewise-constant driving function approximating a field supported in
/// `[0, M]` on `[0, horizon]` with `m` time blocks and `m` support bins.
pub fn approximate_field_by_slits(
    field: &HerglotzField,
    horizon: f64,
    m: usize,
) -> Result<DrivingFunction, LoewnerError> {
    if m == 0 || !(horizon > 0.0) || horizon > field.horizon() * (1.0 + 1e-12) {
        return Err(LoewnerError::InvalidField(format!("need m ≥ 1 and 0 < T ≤ horizon, got m = {m}, T = {horizon}")));
    }
    let top = field.bound();
    let width = top / m as f64;
    let block = horizon / m as f64;
    let mut breaks = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for j in 0..m {
        let nu = field.measure_at((j as f64 + 0.5) * block);
        let mut mass = vec![0.0; m];
        let mut moment = vec![0.0; m];
        for &(u, w) in nu.atoms() {
            if u < -1e-12 || u > top * (1.0 + 1e-12) + 1e-12 {
                return Err(LoewnerError::InvalidField(format!("atom {u} outside [0, {top}]")));
            }
            let bin = if width > 0.0 { ((u / width) as usize).min(m - 1) } else { 0 };
            mass[bin] += w;
            moment[bin] += w * u;
        }
        let mut clock = j as f64 * block;
        for bin in (0..m).filter(|&b| mass[b] > 0.0) {
            let centre = moment[bin] / mass[bin];
            if values.last() != Some(&centre) {
                if !values.is_empty() {
                    breaks.push(clock);
                }
                values.push(centre);
            }
            clock += block * mass[bin];
        }
    }
    if values.len() == 1 {
        DrivingFunction::constant(values[0])
    } else {
        DrivingFunction::piecewise_constant(breaks, values)
    }
}

/// Largest `|f_T(z) − f^{slit}_T(z)|` over the probes.
pub fn slit_deviation(
    field: &HerglotzField,
    driving: &DrivingFunction,
    horizon: f64,
    probes: &[Complex64],
    tol: f64,
) -> Result<f64, LoewnerError> {
    let mut worst = 0.0f64;
    for &z in probes {
        let exact = evaluate_chain(field, 0.0, horizon, z, tol)?;
        let approx = slit_chain(driving, horizon, z, tol)?;
        worst = worst.max((exact - approx).norm());
    }
    Ok(worst)
}
