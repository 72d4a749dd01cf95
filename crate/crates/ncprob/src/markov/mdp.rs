use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{MarkovError, TransitionMatrix};

/// A finite decision process: `transitions[a]` is the column-stochastic
/// matrix of action `a`, rewards are collected on arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    pub transitions: Vec<TransitionMatrix>,
    pub rewards: Vec<f64>,
    pub gamma: f64,
}

impl MdpSpec {
    pub fn new(transitions: Vec<TransitionMatrix>, rewards: Vec<f64>, gamma: f64) -> Result<Self, MarkovError> {
        let spec = Self { transitions, rewards, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MarkovError> {
        let Some(first) = self.transitions.first() else {
            return Err(MarkovError::InvalidMdp("at least one action required".into()));
        };
        let n = first.states();
        if self.transitions.iter().any(|t| t.states() != n) {
            return Err(MarkovError::InvalidMdp("all actions must share the state space".into()));
        }
        if self.rewards.len() != n {
            return Err(MarkovError::InvalidMdp("one reward per state required".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(MarkovError::BadDiscount(self.gamma));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.rewards.len()
    }

    /// The chain followed under a deterministic policy.
    pub fn induced_chain(&self, policy: &[usize]) -> Result<TransitionMatrix, MarkovError> {
        let n = self.states();
        if policy.len() != n || policy.iter().any(|&a| a >= self.transitions.len()) {
            return Err(MarkovError::InvalidMdp("policy must pick a valid action per state".into()));
        }
        let p = nalgebra::DMatrix::from_fn(n, n, |j, k| self.transitions[policy[k]].prob(j, k));
        TransitionMatrix::new(p)
    }

    fn action_value(&self, a: usize, s: usize, v: &DVector<f64>) -> f64 {
        let t = &self.transitions[a];
        (0..self.states()).map(|j| t.prob(j, s) * (self.rewards[j] + self.gamma * v[j])).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub value: DVector<f64>,
    /// Greedy action per state, smallest index on ties.
    pub policy: Vec<usize>,
    pub iterations: usize,
    /// Sup-norm size of each update.
    pub steps: Vec<f64>,
}

/// Iterates the Bellman optimality operator from `v = 0` until an update
/// is at most `tol` in sup norm.
pub fn mdp_value_iteration(spec: &MdpSpec, tol: f64) -> Result<ValueIteration, MarkovError> {
    spec.validate()?;
    let n = spec.states();
    let mut v = DVector::zeros(n);
    let mut steps = Vec::new();
    loop {
        let next = DVector::from_iterator(
            n,
            (0..n).map(|s| {
                (0..spec.transitions.len()).map(|a| spec.action_value(a, s, &v)).fold(f64::NEG_INFINITY, f64::max)
            }),
        );
        let step = (&next - &v).amax();
        v = next;
        steps.push(step);
        if step <= tol {
            break;
        }
    }
    let policy = (0..n)
        .map(|s| {
            let mut best = 0;
            let mut best_value = spec.action_value(0, s, &v);
            for a in 1..spec.transitions.len() {
                let q = spec.action_value(a, s, &v);
                if q > best_value + 1e-12 * best_value.abs().max(1.0) {
                    best = a;
                    best_value = q;
                }
            }
            best
        })
        .collect();
    Ok(ValueIteration { value: v, policy, iterations: steps.len(), steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::mrp_value;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, n: usize) -> TransitionMatrix {
        let mut p = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        for mut col in p.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        TransitionMatrix::new(p).unwrap()
    }

    fn random_spec(seed: u64, actions: usize, gamma: f64) -> MdpSpec {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 5;
        let transitions = (0..actions).map(|_| random_matrix(&mut rng, n)).collect();
        let rewards = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        MdpSpec::new(transitions, rewards, gamma).unwrap()
    }

    #[test]
    fn single_action_matches_reward_process() {
        let spec = random_spec(2, 1, 0.8);
        let vi = mdp_value_iteration(&spec, 1e-12).unwrap();
        let v = mrp_value(&spec.transitions[0], &spec.rewards, 0.8).unwrap();
        assert!((vi.value - v).amax() < 1e-10);
        assert!(vi.policy.iter().all(|&a| a == 0));
    }

    #[test]
    fn dominated_action_is_never_chosen() {
        // Action 0 always moves to the worst state, action 1 to the best.
        let n = 3;
        let to = |target: usize| TransitionMatrix::new(DMatrix::from_fn(n, n, |j, _| (j == target) as u8 as f64)).unwrap();
        let spec = MdpSpec::new(vec![to(0), to(2)], vec![-1.0, 0.0, 1.0], 0.9).unwrap();
        let vi = mdp_value_iteration(&spec, 1e-10).unwrap();
        assert_eq!(vi.policy, vec![1, 1, 1]);
    }

    #[test]
    fn ties_pick_the_smallest_index() {
        let spec = random_spec(4, 1, 0.5);
        let twice = MdpSpec::new(vec![spec.transitions[0].clone(); 3], spec.rewards.clone(), 0.5).unwrap();
        assert_eq!(mdp_value_iteration(&twice, 1e-12).unwrap().policy, vec![0; 5]);
    }

    #[test]
    fn invalid_specs() {
        let spec = random_spec(1, 2, 0.5);
        assert!(MdpSpec::new(spec.transitions.clone(), vec![0.0; 4], 0.5).is_err());
        assert!(MdpSpec::new(spec.transitions.clone(), spec.rewards.clone(), 1.0).is_err());
        assert!(MdpSpec::new(vec![], vec![], 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn greedy_policy_value_equals_optimum(seed in 0u64..10_000, gamma in 0.1f64..0.95) {
            let tol = 1e-10;
            let spec = random_spec(seed, 3, gamma);
            let vi = mdp_value_iteration(&spec, tol).unwrap();
            let chain = spec.induced_chain(&vi.policy).unwrap();
            let v = mrp_value(&chain, &spec.rewards, gamma).unwrap();
            // The fixed point is within γ·tol/(1−γ) of the last iterate.
            prop_assert!((v - &vi.value).amax() <= 10.0 * tol / (1.0 - gamma));
        }

        #[test]
        fn value_iteration_contracts(seed in 0u64..10_000, gamma in 0.1f64..0.95) {
            let vi = mdp_value_iteration(&random_spec(seed, 2, gamma), 1e-9).unwrap();
            // Each update carries rounding of a few ulps of the value itself.
            let rounding = 8.0 * f64::EPSILON * vi.value.amax().max(1.0);
            for w in vi.steps.windows(2) {
                prop_assert!(w[1] <= (gamma + 1e-9) * w[0] + rounding, "{} {}", w[0], w[1]);
            }
        }
    }
}
