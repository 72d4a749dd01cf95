//! Seeded samplers. Every call owns its generator, so results depend only
//! on the seed.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution, Normal, Poisson};

use super::{AtomicMeasure, GridMeasure, LawSpec, Measure, MeasureError, DEFAULT_GRID_POINTS};

pub trait Sample {
    /// `n` independent draws, deterministic given `seed`.
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, MeasureError>;
}

fn pick_atom(atoms: &[(f64, f64)], cumulative: &[f64], u: f64) -> f64 {
    let i = cumulative.partition_point(|&c| c <= u).min(atoms.len() - 1);
    atoms[i].0
}

fn cumulative_weights(atoms: &[(f64, f64)]) -> Vec<f64> {
    atoms
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a.1;
            Some(*acc)
        })
        .collect()
}

impl Sample for AtomicMeasure {
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, MeasureError> {
        if n == 0 {
            return Err(MeasureError::NoSamples);
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let cum = cumulative_weights(self.atoms());
        let total = *cum.last().unwrap_or(&1.0);
        Ok((0..n).map(|_| pick_atom(self.atoms(), &cum, rng.random::<f64>() * total)).collect())
    }
}

impl Sample for GridMeasure {
    /// Atoms are drawn with their weights; the continuous part is sampled
    /// exactly from its piecewise-linear density.
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, MeasureError> {
        if n == 0 {
            return Err(MeasureError::NoSamples);
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let grid = self.grid();
        let dens = self.density();
        let cells: Vec<f64> = grid
            .windows(2)
            .zip(dens.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .collect();
        let cell_cum = cumulative_weights(&cells.iter().map(|&m| (0.0, m)).collect::<Vec<_>>());
        let cont_mass = *cell_cum.last().unwrap_or(&0.0);
        let atom_cum = cumulative_weights(self.atoms());
        let atom_mass = *atom_cum.last().unwrap_or(&0.0);
        let total = cont_mass + atom_mass;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u = rng.random::<f64>() * total;
            if u < atom_mass {
                out.push(pick_atom(self.atoms(), &atom_cum, u));
                continue;
            }
            let target = rng.random::<f64>() * cont_mass;
            let i = cell_cum.partition_point(|&c| c <= target).min(cells.len() - 1);
            let before = if i == 0 { 0.0 } else { cell_cum[i - 1] };
            let (x0, h) = (grid[i], grid[i + 1] - grid[i]);
            let (d0, d1) = (dens[i], dens[i + 1]);
            // Solve d0·s + (d1−d0)s²/(2h) = target − before for s in [0, h].
            let r = (target - before).max(0.0);
            let slope = (d1 - d0) / h;
            let s = if slope.abs() < 1e-300 {
                if d0 > 0.0 {
                    r / d0
                } else {
                    0.5 * h
                }
            } else {
                let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
                2.0 * r / (d0 + disc.sqrt()).max(1e-300)
            };
            out.push(x0 + s.clamp(0.0, h));
        }
        Ok(out)
    }
}

impl Sample for Measure {
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, MeasureError> {
        match self {
            Measure::Atomic(a) => a.sample(n, seed),
            Measure::Grid(g) => g.sample(n, seed),
        }
    }
}

impl Sample for LawSpec {
    /// Marchenko–Pastur and free Meixner laws are sampled through their
    /// gridded realization.
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, MeasureError> {
        if n == 0 {
            return Err(MeasureError::NoSamples);
        }
        self.validate()?;
        let mut rng = StdRng::seed_from_u64(seed);
        let bad = |e: String| MeasureError::BadLaw(e);
        Ok(match *self {
            LawSpec::Dirac { c } => vec![c; n],
            LawSpec::Bernoulli { p } => (0..n).map(|_| if rng.random::<f64>() < p { 1.0 } else { -1.0 }).collect(),
            LawSpec::Normal { mean, var } => {
                let d = Normal::new(mean, var.sqrt()).map_err(|e| bad(e.to_string()))?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
            LawSpec::Arcsine { center, var } => {
                let r = (2.0 * var).sqrt();
                (0..n).map(|_| center + r * (PI * (rng.random::<f64>() - 0.5)).sin()).collect()
            }
            LawSpec::Semicircle { center, var } => {
                let d = Beta::new(1.5, 1.5).map_err(|e| bad(e.to_string()))?;
                let r = 2.0 * var.sqrt();
                (0..n).map(|_| center + r * (2.0 * d.sample(&mut rng) - 1.0)).collect()
            }
            LawSpec::Poisson { rate } => {
                let d = Poisson::new(rate).map_err(|e| bad(e.to_string()))?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
            LawSpec::MarchenkoPastur { .. } | LawSpec::FreeMeixner { .. } => {
                return self.to_grid(DEFAULT_GRID_POINTS)?.sample(n, seed);
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn dirac_is_constant() {
        assert_eq!(LawSpec::Dirac { c: 3.0 }.sample(5, 1).unwrap(), vec![3.0; 5]);
        assert_eq!(LawSpec::Dirac { c: 3.0 }.sample(0, 1), Err(MeasureError::NoSamples));
    }

    #[test]
    fn bernoulli_mean_within_clt_band() {
        let n = 100_000;
        let xs = LawSpec::Bernoulli { p: 0.5 }.sample(n, 7).unwrap();
        let (m, _) = mean_var(&xs);
        assert!(m.abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn normal_variance() {
        let xs = LawSpec::Normal { mean: 0.0, var: 1.0 }.sample(100_000, 7).unwrap();
        assert!((mean_var(&xs).1 - 1.0).abs() < 0.05);
    }

    #[test]
    fn samplers_reproduce_first_two_moments() {
        for law in [
            LawSpec::Arcsine { center: 1.0, var: 2.0 },
            LawSpec::Semicircle { center: 0.0, var: 1.0 },
            LawSpec::MarchenkoPastur { c: 0.5 },
            LawSpec::spidernet(1, 1),
            LawSpec::Poisson { rate: 3.0 },
        ] {
            let xs = law.sample(200_000, 11).unwrap();
            let (m, v) = mean_var(&xs);
            let sd = law.variance().sqrt();
            assert!((m - law.mean()).abs() < 5.0 * sd / 447.0, "{law:?} mean {m}");
            assert!((v - law.variance()).abs() < 0.03 * law.variance(), "{law:?} var {v}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let law = LawSpec::Semicircle { center: 0.0, var: 1.0 };
        assert_eq!(law.sample(10, 3).unwrap(), law.sample(10, 3).unwrap());
        assert_ne!(law.sample(10, 3).unwrap(), law.sample(10, 4).unwrap());
    }
}
