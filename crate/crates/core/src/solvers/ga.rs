//! Generational genetic algorithm on the unit cube.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    check_dims, rng_from_seed, zero_dimensional, BoxDomain, MinimaxOracle, SolverError, SolverId,
    SolverRun, StopReason, Tracker,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GaOptions {
    pub population: usize,
    pub crossover_rate: f64,
    /// Standard deviation of the Gaussian mutation at the start, in unit-cube
    /// coordinates. It decays geometrically to `final_sigma` as the budget is
    /// consumed.
    pub mutation_sigma: f64,
    pub final_sigma: f64,
    pub elite: usize,
    pub tournament: usize,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self {
            population: 20,
            crossover_rate: 0.8,
            mutation_sigma: 0.1,
            final_sigma: 1e-4,
            elite: 2,
            tournament: 4,
            stall_generations: 50,
            stall_tolerance: 1e-6,
        }
    }
}

pub fn ga_minimize<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
) -> Result<SolverRun, SolverError> {
    ga_minimize_with(oracle, domain, seed, budget, init, &GaOptions::default())
}

pub fn ga_minimize_with<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
    options: &GaOptions,
) -> Result<SolverRun, SolverError> {
    check_dims(oracle, domain, init)?;
    let d = domain.dim();
    if d == 0 {
        return zero_dimensional(SolverId::Ga, oracle, domain, seed, budget, init);
    }
    let pop_size = options.population.max(2);
    if budget < pop_size {
        return Err(SolverError::BudgetTooSmall {
            budget,
            needed: pop_size,
        });
    }
    let elite = options.elite.min(pop_size - 1);
    let mut rng = rng_from_seed(seed);
    let mut tracker = Tracker::new(oracle, domain, budget);

    let mut genomes: Vec<Vec<f64>> = (0..pop_size)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    if let Some(x) = init {
        genomes[0] = domain.to_unit(x);
    }
    let mut population: Vec<(Vec<f64>, f64)> = Vec::with_capacity(pop_size);
    for g in genomes {
        let value = tracker
            .evaluate(&g)?
            .expect("budget covers the first generation");
        population.push((g, value.value));
    }

    let mut stall = 0;
    let mut reference = tracker.best_value();
    let stop = loop {
        if tracker.remaining() == 0 {
            break StopReason::BudgetExhausted;
        }
        population.sort_by(|a, b| a.1.total_cmp(&b.1));
        let used = tracker.calls() as f64 / budget as f64;
        let sigma =
            options.mutation_sigma * (options.final_sigma / options.mutation_sigma).powf(used);

        let mut next: Vec<(Vec<f64>, f64)> = population[..elite].to_vec();
        while next.len() < pop_size {
            let a = tournament(&population, options.tournament, &mut rng);
            let b = tournament(&population, options.tournament, &mut rng);
            let mut child = population[a].0.clone();
            if rng.random::<f64>() < options.crossover_rate {
                for (gene, other) in child.iter_mut().zip(&population[b].0) {
                    if rng.random::<bool>() {
                        *gene = *other;
                    }
                }
            }
            for gene in &mut child {
                let z: f64 = StandardNormal.sample(&mut rng);
                *gene = (*gene + sigma * z).clamp(0.0, 1.0);
            }
            match tracker.evaluate(&child)? {
                Some(value) => next.push((child, value.value)),
                None => break,
            }
        }
        if next.len() < pop_size {
            break StopReason::BudgetExhausted;
        }
        population = next;

        let best = tracker.best_value();
        if best < reference - options.stall_tolerance * reference.abs() {
            reference = best;
            stall = 0;
        } else {
            stall += 1;
            if stall >= options.stall_generations {
                break StopReason::Stalled;
            }
        }
    };
    Ok(tracker.finish(SolverId::Ga, init, seed, stop))
}

fn tournament<R: Rng>(population: &[(Vec<f64>, f64)], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..population.len());
    for _ in 1..size.max(1) {
        let candidate = rng.random_range(0..population.len());
        if population[candidate].1 < population[best].1 {
            best = candidate;
        }
    }
    best
}
