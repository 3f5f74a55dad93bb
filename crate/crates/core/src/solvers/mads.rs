//! Mesh-adaptive direct search with randomly rotated orthonormal poll sets.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    check_dims, rng_from_seed, zero_dimensional, BoxDomain, MinimaxOracle, SolverError, SolverId,
    SolverRun, StopReason, Tracker,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MadsOptions {
    /// Initial poll size in unit-cube coordinates.
    pub initial_size: f64,
    pub max_size: f64,
    pub min_size: f64,
}

impl Default for MadsOptions {
    fn default() -> Self {
        Self {
            initial_size: 0.1,
            max_size: 1.0,
            min_size: 1e-9,
        }
    }
}

/// Poll size after an iteration: doubled on success, halved otherwise.
pub fn next_poll_size(alpha: f64, success: bool) -> f64 {
    if success {
        alpha * 2.0
    } else {
        alpha / 2.0
    }
}

pub fn mads_minimize<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
) -> Result<SolverRun, SolverError> {
    mads_minimize_with(oracle, domain, seed, budget, init, &MadsOptions::default())
}

pub fn mads_minimize_with<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
    options: &MadsOptions,
) -> Result<SolverRun, SolverError> {
    check_dims(oracle, domain, init)?;
    let d = domain.dim();
    if d == 0 {
        return zero_dimensional(SolverId::Mads, oracle, domain, seed, budget, init);
    }
    let mut rng = rng_from_seed(seed);
    let mut tracker = Tracker::new(oracle, domain, budget);

    let mut x = match init {
        Some(p) => domain.to_unit(p),
        None => (0..d).map(|_| rng.random::<f64>()).collect(),
    };
    let Some(value) = tracker.evaluate(&x)? else {
        return Ok(tracker.finish(SolverId::Mads, init, seed, StopReason::BudgetExhausted));
    };
    let mut fx = value.value;
    let mut alpha = options.initial_size;

    let stop = 'outer: loop {
        if alpha < options.min_size {
            break StopReason::Converged;
        }
        let basis = rotated_basis(d, &mut rng);
        let mut success = false;
        for sign in [1.0, -1.0] {
            for direction in &basis {
                let y: Vec<f64> = x
                    .iter()
                    .zip(direction)
                    .map(|(xi, di)| (xi + sign * alpha * di).clamp(0.0, 1.0))
                    .collect();
                if y == x {
                    continue;
                }
                let Some(value) = tracker.evaluate(&y)? else {
                    break 'outer StopReason::BudgetExhausted;
                };
                if value.value < fx {
                    x = y;
                    fx = value.value;
                    success = true;
                    break;
                }
            }
            if success {
                break;
            }
        }
        alpha = next_poll_size(alpha, success).min(options.max_size);
        if tracker.remaining() == 0 {
            break StopReason::BudgetExhausted;
        }
    };
    Ok(tracker.finish(SolverId::Mads, init, seed, stop))
}

/// Columns of a Householder reflection `I - 2 v v^T` with random unit `v`.
fn rotated_basis<R: Rng>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        v = vec![0.0; d];
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    (0..d)
        .map(|j| {
            (0..d)
                .map(|i| if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j])
                .collect()
        })
        .collect()
}
