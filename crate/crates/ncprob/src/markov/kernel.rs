use crate::measures::{GridMeasure, Measure};
use crate::transforms::{scan_atoms, stieltjes_invert, HerglotzMap, MapKind, DEFAULT_EPS_LADDER};

use super::MarkovError;

/// The transition law `k(x, ·) = δ_x ▷ μ`, recovered from its Cauchy
/// transform `z ↦ 1/(F_μ(z) − x)`.
pub fn homogeneous_kernel(mu: &Measure, x: f64, grid: &[f64]) -> Result<GridMeasure, MarkovError> {
    homogeneous_kernel_from_f(&HerglotzMap::f_transform_of(mu.clone()), x, grid)
}

/// As [`homogeneous_kernel`], with the increment given by its F-transform.
pub fn homogeneous_kernel_from_f(f: &HerglotzMap, x: f64, grid: &[f64]) -> Result<GridMeasure, MarkovError> {
    let f = f.clone();
    let g = HerglotzMap::new(MapKind::CauchyTransform, move |z| 1.0 / (f.eval(z) - x));
    let atoms = scan_atoms(&g, grid);
    Ok(stieltjes_invert(&g, grid, &atoms, &DEFAULT_EPS_LADDER)?.measure)
}
