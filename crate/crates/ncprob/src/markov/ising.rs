use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::measures::AtomicMeasure;

use super::MarkovError;

/// `T_C = 2/ln(1 + √2)` for unit coupling and Boltzmann constant.
pub const CRITICAL_TEMPERATURE: f64 = 2.269_185_314_213_022;

/// Largest number of free spins [`exact_boltzmann`] will enumerate.
pub const MAX_ENUMERATED_SPINS: usize = 20;

const MAX_CELLS: usize = 1 << 30;

/// Spins on a `width × height` grid with free boundary, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingState {
    width: usize,
    height: usize,
    spins: Vec<i8>,
    coupling: f64,
    field: f64,
    beta: f64,
    frozen: Option<Vec<bool>>,
}

impl IsingState {
    /// All spins up.
    pub fn new(width: usize, height: usize, coupling: f64, field: f64, beta: f64) -> Result<Self, MarkovError> {
        let bad = |m: String| Err(MarkovError::InvalidLattice(m));
        let cells = width.saturating_mul(height);
        if cells == 0 || cells > MAX_CELLS {
            return bad(format!("{width}×{height} lattice"));
        }
        if !(coupling > 0.0 && coupling.is_finite()) {
            return bad(format!("coupling {coupling}"));
        }
        if !(field >= 0.0 && field.is_finite()) {
            return bad(format!("field {field}"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return bad(format!("inverse temperature {beta}"));
        }
        Ok(Self { width, height, spins: vec![1; cells], coupling, field, beta, frozen: None })
    }

    /// Independent uniform spins.
    pub fn randomized(mut self, seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        for s in &mut self.spins {
            *s = if rng.random::<bool>() { 1 } else { -1 };
        }
        self
    }

    /// Sets the spins, which must be ±1.
    pub fn with_spins(mut self, spins: Vec<i8>) -> Result<Self, MarkovError> {
        if spins.len() != self.spins.len() || spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(MarkovError::InvalidLattice("spins must be ±1, one per cell".into()));
        }
        self.spins = spins;
        Ok(self)
    }

    /// Marks cells that are never flipped.
    pub fn with_frozen(mut self, frozen: Vec<bool>) -> Result<Self, MarkovError> {
        if frozen.len() != self.spins.len() {
            return Err(MarkovError::InvalidLattice("one frozen flag per cell".into()));
        }
        self.frozen = Some(frozen);
        Ok(self)
    }

    /// Left half down, right half up, with the outer ring frozen.
    pub fn split_boundary(self) -> Result<Self, MarkovError> {
        let (w, h) = (self.width, self.height);
        let spins = (0..w * h).map(|i| if i % w < w / 2 { -1 } else { 1 }).collect();
        let frozen = (0..w * h).map(|i| i % w == 0 || i % w == w - 1 || i / w == 0 || i / w == h - 1).collect();
        self.with_spins(spins)?.with_frozen(frozen)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_frozen(&self, cell: usize) -> bool {
        self.frozen.as_ref().is_some_and(|f| f[cell])
    }

    /// Cells the sampler may flip, in row-major order.
    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.spins.len()).filter(|&c| !self.is_frozen(c)).collect()
    }

    fn neighbor_sum(&self, cell: usize) -> f64 {
        let (x, y) = (cell % self.width, cell / self.width);
        let mut s = 0i32;
        if x > 0 {
            s += self.spins[cell - 1] as i32;
        }
        if x + 1 < self.width {
            s += self.spins[cell + 1] as i32;
        }
        if y > 0 {
            s += self.spins[cell - self.width] as i32;
        }
        if y + 1 < self.height {
            s += self.spins[cell + self.width] as i32;
        }
        s as f64
    }

    /// `H(σ) = −J Σ_{⟨ij⟩} σ_i σ_j − B Σ_i σ_i` over nearest-neighbor pairs.
    pub fn energy(&self) -> f64 {
        let mut bonds = 0i64;
        for c in 0..self.spins.len() {
            let s = self.spins[c] as i64;
            if c % self.width + 1 < self.width {
                bonds += s * self.spins[c + 1] as i64;
            }
            if c + self.width < self.spins.len() {
                bonds += s * self.spins[c + self.width] as i64;
            }
        }
        let total: i64 = self.spins.iter().map(|&s| s as i64).sum();
        -self.coupling * bonds as f64 - self.field * total as f64
    }

    /// Energy change from flipping `cell`.
    pub fn flip_delta(&self, cell: usize) -> f64 {
        2.0 * self.spins[cell] as f64 * (self.coupling * self.neighbor_sum(cell) + self.field)
    }

    /// Probability that one sampler step flips `cell`: uniform proposal
    /// over free cells, accepted with `min(1, e^{−βΔH})`.
    pub fn flip_probability(&self, cell: usize) -> f64 {
        if self.is_frozen(cell) {
            return 0.0;
        }
        let free = self.free_cells().len() as f64;
        (-self.beta * self.flip_delta(cell)).exp().min(1.0) / free
    }

    pub fn flip(&mut self, cell: usize) {
        self.spins[cell] = -self.spins[cell];
    }

    /// Index of the configuration of the free spins: bit `k` is set when the
    /// `k`-th free cell points up.
    pub fn config_index(&self) -> usize {
        self.free_cells().iter().enumerate().filter(|(_, &c)| self.spins[c] > 0).map(|(k, _)| 1 << k).sum()
    }

    /// Sets the free spins from a configuration index.
    pub fn set_config(&mut self, index: usize) {
        for (k, c) in self.free_cells().into_iter().enumerate() {
            self.spins[c] = if index >> k & 1 == 1 { 1 } else { -1 };
        }
    }
}

/// Mean spin over all cells.
pub fn magnetization(state: &IsingState) -> f64 {
    state.spins.iter().map(|&s| s as f64).sum::<f64>() / state.spins.len() as f64
}

/// Single-flip Metropolis chain for `steps` proposals.
pub fn metropolis_ising(state: &IsingState, steps: u64, seed: u64) -> IsingState {
    let mut out = state.clone();
    run(&mut out, steps, &mut StdRng::seed_from_u64(seed), |_| {});
    out
}

fn run(state: &mut IsingState, steps: u64, rng: &mut StdRng, mut visit: impl FnMut(&IsingState)) {
    let free = state.free_cells();
    if free.is_empty() {
        for _ in 0..steps {
            visit(state);
        }
        return;
    }
    for _ in 0..steps {
        let cell = free[rng.random_range(0..free.len())];
        let delta = state.flip_delta(cell);
        if delta <= 0.0 || rng.random::<f64>() < (-state.beta * delta).exp() {
            state.flip(cell);
        }
        visit(state);
    }
}

/// `e^{−βH}/Z` over all settings of the free spins, as atoms at the
/// configuration indices of [`IsingState::config_index`].
pub fn exact_boltzmann(state: &IsingState) -> Result<AtomicMeasure, MarkovError> {
    let n = state.free_cells().len();
    if n > MAX_ENUMERATED_SPINS {
        return Err(MarkovError::EnumerationTooLarge(n));
    }
    let mut scratch = state.clone();
    let energies: Vec<f64> = (0..1usize << n)
        .map(|i| {
            scratch.set_config(i);
            scratch.energy()
        })
        .collect();
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-state.beta * (e - ground)).exp()).collect();
    let z: f64 = weights.iter().sum();
    AtomicMeasure::new(weights.iter().enumerate().map(|(i, w)| (i as f64, w / z)).collect())
        .map_err(|e| MarkovError::InvalidLattice(e.to_string()))
}

/// Empirical frequencies of the configuration indices over `samples`
/// steps after `burn_in` steps.
pub fn sample_histogram(state: &IsingState, burn_in: u64, samples: u64, seed: u64) -> Result<Vec<f64>, MarkovError> {
    let free = state.free_cells();
    if free.len() > MAX_ENUMERATED_SPINS {
        return Err(MarkovError::EnumerationTooLarge(free.len()));
    }
    let bit: Vec<Option<usize>> = {
        let mut b = vec![None; state.spins.len()];
        for (k, &c) in free.iter().enumerate() {
            b[c] = Some(k);
        }
        b
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let mut current = state.clone();
    run(&mut current, burn_in, &mut rng, |_| {});
    let mut counts = vec![0u64; 1 << free.len()];
    let mut index = current.config_index();
    let mut before = current.spins.clone();
    run(&mut current, samples, &mut rng, |s| {
        // At most one spin changed since the last visit.
        if let Some(c) = free.iter().copied().find(|&c| s.spins[c] != before[c]) {
            index ^= 1 << bit[c].expect("free cell");
            before[c] = s.spins[c];
        }
        counts[index] += 1;
    });
    Ok(counts.iter().map(|&c| c as f64 / samples.max(1) as f64).collect())
}
