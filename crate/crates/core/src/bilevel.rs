//! Greedy "inserting dampers" outer loop.
//!
//! Iteration `k` tries every floor without a damper, optimizes the
//! coefficients of the resulting `k`-damper layout with an inner solver and
//! keeps the floor with the lowest optimized objective. Floors already chosen
//! score `+inf`, so the layouts for `1..=nd_max` dampers are nested.

use std::collections::BTreeSet;
use std::sync::atomic::AtomicUsize;
use std::sync::Arc;

use log::{debug, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::solvers::{
    minimize, BoxDomain, DamperOracle, InitPolicy, SolverError, SolverId, SolverRun, DEFAULT_BUDGET,
};
use crate::spectral::{DriftEvaluator, ExcitationSpec, FrequencyGrid};
use crate::structure::CoupledModel;

#[derive(Debug, Error)]
pub enum BilevelError {
    #[error("cannot insert {nd_max} dampers between buildings sharing {n} floors")]
    InvalidDamperCount { nd_max: usize, n: usize },
    #[error("floor {floor} carries a coefficient but is not in the new layout")]
    WarmStartInconsistent { floor: usize },
    #[error("floor {floor} is outside 1..={n}")]
    FloorOutOfRange { floor: usize, n: usize },
    #[error("every candidate failed in iteration {iteration}: {source}")]
    AllCandidatesFailed {
        iteration: usize,
        #[source]
        source: SolverError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionOptions {
    pub solver: SolverId,
    pub init: InitPolicy,
    pub nd_max: usize,
    pub seed: u64,
    /// Oracle calls granted to each candidate's inner solve.
    pub budget: usize,
}

impl InsertionOptions {
    pub fn new(solver: SolverId, init: InitPolicy, nd_max: usize) -> Self {
        Self {
            solver,
            init,
            nd_max,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

/// Outcome of one candidate floor in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub floor: usize,
    pub seed: u64,
    /// Best objective found, `+inf` if the inner solve failed.
    pub score: f64,
    pub calls: usize,
}

/// Result after inserting the `nd`-th damper.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub nd: usize,
    pub inserted_floor: usize,
    pub layout: BTreeSet<usize>,
    /// Full coefficient vector of length `n`, zero off the layout.
    pub coefficients: Vec<f64>,
    pub objective: f64,
    /// Per-floor scores of the sweep; permanent floors hold `+inf`.
    pub scores: Vec<f64>,
    pub candidates: Vec<Candidate>,
    pub calls_iter: usize,
    pub calls_cum: usize,
    /// Inner run of the winning candidate.
    pub winner: SolverRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionResult {
    pub options: InsertionOptions,
    pub n: usize,
    pub iterations: Vec<IterationRecord>,
}

impl InsertionResult {
    pub fn record(&self, nd: usize) -> Option<&IterationRecord> {
        self.iterations.get(nd.checked_sub(1)?)
    }

    pub fn total_calls(&self) -> usize {
        self.iterations.last().map_or(0, |r| r.calls_cum)
    }
}

/// Initial point for a candidate layout: previous coefficients on floors
/// that already carried a damper and zero on the new floor. Coordinates
/// follow the floors in increasing order.
pub fn warm_start_point(
    prev_coeffs: &[f64],
    new_layout: &BTreeSet<usize>,
) -> Result<Vec<f64>, BilevelError> {
    let n = prev_coeffs.len();
    if let Some(&floor) = new_layout.iter().find(|&&f| f == 0 || f > n) {
        return Err(BilevelError::FloorOutOfRange { floor, n });
    }
    if let Some(i) = prev_coeffs
        .iter()
        .enumerate()
        .position(|(i, &c)| c != 0.0 && !new_layout.contains(&(i + 1)))
    {
        return Err(BilevelError::WarmStartInconsistent { floor: i + 1 });
    }
    Ok(new_layout.iter().map(|&f| prev_coeffs[f - 1]).collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the inner solve for `floor` in iteration `k`.
pub fn candidate_seed(seed: u64, k: usize, floor: usize) -> u64 {
    seed ^ splitmix64(((k as u64) << 32) | floor as u64)
}

pub fn inserting_dampers(
    model: &CoupledModel,
    exc: &ExcitationSpec,
    grid: &FrequencyGrid,
    options: &InsertionOptions,
) -> Result<InsertionResult, BilevelError> {
    let n = model.n();
    if options.nd_max == 0 || options.nd_max > n {
        return Err(BilevelError::InvalidDamperCount {
            nd_max: options.nd_max,
            n,
        });
    }
    let evaluator = Arc::new(DriftEvaluator::new(model, exc, grid));
    let mut permanent = BTreeSet::new();
    let mut best_coeffs = vec![0.0; n];
    let mut calls_cum = 0;
    let mut iterations = Vec::with_capacity(options.nd_max);

    for k in 1..=options.nd_max {
        let free: Vec<usize> = (1..=n).filter(|f| !permanent.contains(f)).collect();
        let outcomes: Vec<(Candidate, Result<SolverRun, SolverError>)> = free
            .par_iter()
            .map(|&floor| {
                let mut layout = permanent.clone();
                layout.insert(floor);
                let seed = candidate_seed(options.seed, k, floor);
                let counter = Arc::new(AtomicUsize::new(0));
                let oracle = DamperOracle::new(Arc::clone(&evaluator), layout.clone(), counter);
                let domain = BoxDomain::dampers(layout.len());
                let init = match options.init {
                    InitPolicy::Warm => Some(
                        warm_start_point(&best_coeffs, &layout)
                            .expect("permanent floors cover the previous support"),
                    ),
                    InitPolicy::Random => None,
                };
                let run = minimize(
                    options.solver,
                    &oracle,
                    &domain,
                    seed,
                    options.budget,
                    init.as_deref(),
                );
                let calls = oracle.calls();
                let score = match &run {
                    Ok(run) => {
                        debug_assert_eq!(run.calls(), calls);
                        run.best_value
                    }
                    Err(e) => {
                        warn!("iteration {k}, floor {floor}: {e}");
                        f64::INFINITY
                    }
                };
                let candidate = Candidate {
                    floor,
                    seed,
                    score,
                    calls,
                };
                (candidate, run)
            })
            .collect();

        let mut scores = vec![f64::INFINITY; n];
        let mut winner: Option<usize> = None;
        for (idx, (candidate, _)) in outcomes.iter().enumerate() {
            scores[candidate.floor - 1] = candidate.score;
            let better = match winner {
                None => candidate.score.is_finite(),
                Some(w) => candidate.score < outcomes[w].0.score,
            };
            if better {
                winner = Some(idx);
            }
        }
        let calls_iter: usize = outcomes.iter().map(|(c, _)| c.calls).sum();
        calls_cum += calls_iter;

        let Some(w) = winner else {
            let source = outcomes
                .into_iter()
                .find_map(|(_, r)| r.err())
                .expect("a failed sweep holds an error");
            return Err(BilevelError::AllCandidatesFailed {
                iteration: k,
                source,
            });
        };
        let candidates: Vec<Candidate> = outcomes.iter().map(|(c, _)| c.clone()).collect();
        let (chosen, run) = outcomes.into_iter().nth(w).expect("winner index");
        let run = run.expect("winner has a finite score");
        assert!(
            permanent.insert(chosen.floor),
            "floor {} selected twice",
            chosen.floor
        );

        best_coeffs = vec![0.0; n];
        for (&floor, &c) in permanent.iter().zip(&run.best_point) {
            best_coeffs[floor - 1] = c;
        }
        debug!(
            "nd={k} floor={} F={:e} calls={calls_iter}",
            chosen.floor, run.best_value
        );
        iterations.push(IterationRecord {
            nd: k,
            inserted_floor: chosen.floor,
            layout: permanent.clone(),
            coefficients: best_coeffs.clone(),
            objective: run.best_value,
            scores,
            candidates,
            calls_iter,
            calls_cum,
            winner: run,
        });
    }

    Ok(InsertionResult {
        options: options.clone(),
        n,
        iterations,
    })
}
