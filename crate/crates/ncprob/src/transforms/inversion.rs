//! Stieltjes inversion of Cauchy transforms into gridded measures.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{HerglotzMap, TransformError};
use crate::measures::GridMeasure;

/// Default imaginary offsets for density recovery.
pub const DEFAULT_EPS_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// Extrapolated mass at which a candidate becomes an atom.
pub const MIN_ATOM_MASS: f64 = 1e-4;
/// Recovered mass must lie in `[1 − MASS_WINDOW, 1 + MASS_WINDOW]`.
pub const MASS_WINDOW: f64 = 0.02;

/// Offsets used for the atom-mass limit `iy·G(a + iy)`.
const ATOM_Y: (f64, f64) = (1e-7, 5e-8);
/// Height at which the normalization `iy·G(iy) → 1` is checked.
const NORMALIZATION_Y: f64 = 1e6;
/// Threshold on `y·(−Im G)` for the atom scan.
const SCAN_THRESHOLD: f64 = 0.01;

/// A recovered measure together with its mass before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub measure: GridMeasure,
    pub raw_mass: f64,
}

fn atom_mass_at(g: &HerglotzMap, a: f64, y: f64) -> f64 {
    (Complex64::new(0.0, y) * g.eval(Complex64::new(a, y))).re
}

/// Linear extrapolation to zero from values at `h1 > h2`.
fn richardson(h1: f64, v1: f64, h2: f64, v2: f64) -> f64 {
    (h1 * v2 - h2 * v1) / (h1 - h2)
}

/// Recovers the measure whose Cauchy transform is `g` on `grid`.
///
/// Atoms are looked for only at `atom_candidates`; their masses are the
/// extrapolated limits of `iy·G(a + iy)`. The density is
/// `−Im G(x + iε)/π` with the atom poles removed, extrapolated linearly
/// from the two smallest offsets of `eps_ladder`.
pub fn stieltjes_invert(
    g: &HerglotzMap,
    grid: &[f64],
    atom_candidates: &[f64],
    eps_ladder: &[f64],
) -> Result<Inversion, TransformError> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(TransformError::BadGrid);
    }
    let mut ladder: Vec<f64> = eps_ladder.iter().copied().filter(|e| *e > 0.0 && e.is_finite()).collect();
    if ladder.len() < 2 {
        return Err(TransformError::BadLadder);
    }
    ladder.sort_by(|a, b| b.total_cmp(a));
    let (e1, e2) = (ladder[ladder.len() - 2], ladder[ladder.len() - 1]);

    let y = NORMALIZATION_Y;
    let norm = Complex64::new(0.0, y) * g.eval(Complex64::new(0.0, y));
    if !((norm - 1.0).norm() <= 1e-3) {
        return Err(TransformError::Normalization { value: norm });
    }

    let mut candidates = atom_candidates.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let atoms: Vec<(f64, f64)> = candidates
        .par_iter()
        .filter_map(|&a| {
            let (y1, y2) = ATOM_Y;
            let m = richardson(y1, atom_mass_at(g, a, y1), y2, atom_mass_at(g, a, y2));
            (m >= MIN_ATOM_MASS).then_some((a, m))
        })
        .collect();

    let smooth_im = |x: f64, e: f64| {
        let z = Complex64::new(x, e);
        let poles: Complex64 = atoms.iter().map(|&(a, w)| w / (z - a)).sum();
        -(g.eval(z) - poles).im / std::f64::consts::PI
    };
    let density: Vec<f64> = grid
        .par_iter()
        .map(|&x| richardson(e1, smooth_im(x, e1), e2, smooth_im(x, e2)).max(0.0))
        .collect();

    let measure = GridMeasure::unchecked(grid.to_vec(), density, atoms)?;
    let raw_mass = measure.total_mass();
    if !((raw_mass - 1.0).abs() <= MASS_WINDOW) {
        return Err(TransformError::Mass(raw_mass));
    }
    Ok(Inversion { measure: measure.renormalize(), raw_mass })
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Locates atoms of the measure with Cauchy transform `g` inside the grid
/// range.
///
/// `y·(−Im G(x + iy))` at `y` equal to the grid spacing tends to the atom
/// mass near an atom; local maxima above 0.01 are refined through a ladder
/// of shrinking offsets and kept if the mass estimate `iy·G(a + iy)` is
/// stable over two decades of `y` and above [`MIN_ATOM_MASS`]. Atoms
/// lighter than the scan threshold may be missed.
pub fn scan_atoms(g: &HerglotzMap, grid: &[f64]) -> Vec<f64> {
    if grid.len() < 3 {
        return vec![];
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let profile: Vec<f64> = grid.par_iter().map(|&x| -h * g.eval(Complex64::new(x, h)).im).collect();
    let n = grid.len();
    let peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { profile[i - 1] };
            let right = if i + 1 == n { f64::NEG_INFINITY } else { profile[i + 1] };
            profile[i] >= SCAN_THRESHOLD && profile[i] >= left && profile[i] > right
        })
        .collect();
    let mut found: Vec<f64> = peaks
        .par_iter()
        .filter_map(|&i| {
            let mut lo = grid[i.saturating_sub(1)];
            let mut hi = grid[(i + 1).min(n - 1)];
            let mut y = h;
            let mut a = grid[i];
            for _ in 0..4 {
                a = golden_max(|x| -g.eval(Complex64::new(x, y)).im, lo, hi);
                lo = a - 2.0 * y;
                hi = a + 2.0 * y;
                y *= 0.1;
            }
            let coarse = atom_mass_at(g, a, h * 1e-3);
            let fine = atom_mass_at(g, a, h * 1e-5);
            let stable = (coarse - fine).abs() <= 0.1 * coarse.abs().max(fine.abs());
            (stable && fine >= MIN_ATOM_MASS).then_some(a)
        })
        .collect();
    found.sort_by(f64::total_cmp);
    found
}

/// Inverts an F-transform: `G = 1/F`, atoms located by [`scan_atoms`].
pub fn invert_f_map(f: &HerglotzMap, grid: &[f64], eps_ladder: &[f64]) -> Result<Inversion, TransformError> {
    let g = f.reciprocal();
    let atoms = scan_atoms(&g, grid);
    stieltjes_invert(&g, grid, &atoms, eps_ladder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{AtomicMeasure, LawSpec};
    use crate::numeric::{linspace, sqrt_upper};
    use crate::transforms::MapKind;

    fn sup_error(inv: &Inversion, law: &LawSpec, radius: f64) -> f64 {
        inv.measure
            .grid()
            .iter()
            .zip(inv.measure.density())
            .filter(|(x, _)| x.abs() <= radius)
            .map(|(&x, &d)| (d - law.density(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dirac_inverts_to_single_atom() {
        let g = HerglotzMap::cauchy_of(AtomicMeasure::dirac(0.3));
        let inv = stieltjes_invert(&g, &linspace(-1.0, 1.0, 201), &[0.3], &DEFAULT_EPS_LADDER).unwrap();
        assert_eq!(inv.measure.atoms().len(), 1);
        assert!((inv.measure.atoms()[0].1 - 1.0).abs() < 1e-9);
        assert!(inv.measure.density().iter().all(|&d| d < 1e-6));
    }

    #[test]
    fn arcsine_density_from_closed_form() {
        let g = HerglotzMap::new(MapKind::CauchyTransform, |z| 1.0 / sqrt_upper(z * z - 2.0));
        let inv = stieltjes_invert(&g, &linspace(-3.0, 3.0, 6001), &[], &DEFAULT_EPS_LADDER).unwrap();
        let law = LawSpec::Arcsine { center: 0.0, var: 1.0 };
        assert!(sup_error(&inv, &law, 1.2) <= 1e-3);
        assert!((inv.raw_mass - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn semicircle_density_from_closed_form() {
        let law = LawSpec::Semicircle { center: 0.0, var: 1.0 };
        let g = HerglotzMap::cauchy_of(law);
        let inv = stieltjes_invert(&g, &linspace(-3.0, 3.0, 3001), &[], &DEFAULT_EPS_LADDER).unwrap();
        assert!(sup_error(&inv, &law, 1.8) <= 1e-3);
    }

    #[test]
    fn gridded_round_trip_with_atom() {
        // Semicircle density with mass ½ plus an atom of mass ½ at 3.
        let law = LawSpec::Semicircle { center: 0.0, var: 1.0 }.to_grid(2001).unwrap();
        let half: Vec<f64> = law.density().iter().map(|d| 0.5 * d).collect();
        let mu = GridMeasure::new(law.grid().to_vec(), half, vec![(3.0, 0.5)]).unwrap();
        let g = HerglotzMap::cauchy_of(mu.clone());
        let grid = linspace(-4.0, 4.0, 4001);
        let atoms = scan_atoms(&g, &grid);
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0] - 3.0).abs() < 1e-9);
        let inv = stieltjes_invert(&g, &grid, &atoms, &DEFAULT_EPS_LADDER).unwrap();
        assert!((inv.measure.atoms()[0].1 - 0.5).abs() < 1e-4);
        for &x in &[-1.5, -0.4, 0.0, 0.9, 1.7] {
            assert!((inv.measure.density_at(x) - mu.density_at(x)).abs() < 1e-3, "{x}");
        }
    }

    #[test]
    fn atomic_weights_recovered() {
        let mu = AtomicMeasure::new(vec![(-1.0, 0.2), (0.5, 0.5), (2.0, 0.3)]).unwrap();
        let g = HerglotzMap::cauchy_of(mu.clone());
        let grid = linspace(-3.0, 3.0, 1201);
        let atoms = scan_atoms(&g, &grid);
        let inv = stieltjes_invert(&g, &grid, &atoms, &DEFAULT_EPS_LADDER).unwrap();
        assert_eq!(inv.measure.atoms().len(), 3);
        for (got, want) in inv.measure.atoms().iter().zip(mu.atoms()) {
            assert!((got.0 - want.0).abs() < 1e-9 && (got.1 - want.1).abs() < 1e-4);
        }
    }

    #[test]
    fn spidernet_atom_found_by_scan() {
        let law = LawSpec::spidernet(1, 1);
        let f = HerglotzMap::f_transform_of(law);
        let inv = invert_f_map(&f, &linspace(-4.0, 4.0, 4001), &DEFAULT_EPS_LADDER).unwrap();
        let atoms = inv.measure.atoms();
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].0 - (1.0 - 5f64.sqrt())).abs() < 1e-8);
        assert!((atoms[0].1 - 1.0 / 5f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn rejects_unnormalized_maps() {
        let g = HerglotzMap::new(MapKind::Generic, |z| 2.0 / z);
        let err = stieltjes_invert(&g, &[0.0, 1.0], &[], &DEFAULT_EPS_LADDER).unwrap_err();
        assert!(matches!(err, TransformError::Normalization { .. }));
        // Half the mass escapes a grid that misses a distant atom.
        let mu = AtomicMeasure::new(vec![(0.0, 0.5), (50.0, 0.5)]).unwrap();
        let g = HerglotzMap::cauchy_of(mu);
        let err = stieltjes_invert(&g, &linspace(-1.0, 1.0, 101), &[0.0], &DEFAULT_EPS_LADDER).unwrap_err();
        assert!(matches!(err, TransformError::Mass(_)));
    }
}
