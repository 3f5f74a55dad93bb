//! Robust approximate gradient sampling for finite minimax problems.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    check_dims, min_norm_point, rng_from_seed, zero_dimensional, BoxDomain, MinimaxOracle,
    MinimaxValue, SolverError, SolverId, SolverRun, StopReason, Tracker,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RagsOptions {
    /// Initial sampling radius in unit-cube coordinates.
    pub initial_radius: f64,
    pub armijo: f64,
    /// Active-set tolerance relative to |F| at the initial radius; it shrinks
    /// in proportion to the radius. Gradients are likewise taken of F
    /// divided by its magnitude at the current iterate.
    pub active_tolerance: f64,
    pub shrink: f64,
    pub radius_tolerance: f64,
    pub direction_tolerance: f64,
    /// Line search is attempted when `radius <= mu * |d|`.
    pub mu: f64,
    pub resample_attempts: usize,
    /// Rejects sample sets whose smallest singular value is below this
    /// fraction of the radius.
    pub degeneracy: f64,
}

impl Default for RagsOptions {
    fn default() -> Self {
        Self {
            initial_radius: 0.1,
            armijo: 1e-4,
            active_tolerance: 1e-3,
            shrink: 0.5,
            radius_tolerance: 1e-7,
            direction_tolerance: 1e-6,
            mu: 1.0,
            resample_attempts: 20,
            degeneracy: 1e-2,
        }
    }
}

/// Negated minimum-norm element of the convex hull of simplex gradients of
/// every component that is within `epsilon` of the max at some sample point.
///
/// `samples` must hold `center.len()` points whose offsets from `center` are
/// linearly independent; returns `None` otherwise.
pub fn robust_descent_direction(
    center: &[f64],
    center_value: &MinimaxValue,
    samples: &[(Vec<f64>, MinimaxValue)],
    epsilon: f64,
) -> Option<Vec<f64>> {
    let d = center.len();
    if samples.len() != d || d == 0 {
        return None;
    }
    let offsets = DMatrix::from_fn(d, d, |j, k| samples[j].0[k] - center[k]);
    let lu = offsets.lu();
    if !lu.is_invertible() {
        return None;
    }

    let components = center_value.components.len();
    let mut active = vec![false; components];
    for value in std::iter::once(center_value).chain(samples.iter().map(|s| &s.1)) {
        for i in value.active_set(epsilon) {
            active[i] = true;
        }
    }

    let mut gradients = Vec::new();
    for i in (0..components).filter(|&i| active[i]) {
        let rhs = nalgebra::DVector::from_fn(d, |j, _| {
            samples[j].1.components[i] - center_value.components[i]
        });
        let g = lu.solve(&rhs)?;
        if g.iter().any(|v| !v.is_finite()) {
            return None;
        }
        gradients.push(g.iter().copied().collect::<Vec<_>>());
    }
    let p = min_norm_point(&gradients);
    Some(p.point.iter().map(|v| -v).collect())
}

pub fn rags_minimize<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
) -> Result<SolverRun, SolverError> {
    rags_minimize_with(oracle, domain, seed, budget, init, &RagsOptions::default())
}

fn scaled(value: MinimaxValue, scale: f64) -> MinimaxValue {
    MinimaxValue {
        value: value.value / scale,
        components: value.components.iter().map(|c| c / scale).collect(),
    }
}

fn ball_sample<R: Rng>(center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    let d = center.len();
    let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, v)| (c + r * v / norm).clamp(0.0, 1.0))
        .collect()
}

fn smallest_singular_value(center: &[f64], points: &[Vec<f64>]) -> f64 {
    let d = center.len();
    let m = DMatrix::from_fn(d, d, |j, k| points[j][k] - center[k]);
    m.singular_values().min()
}

pub fn rags_minimize_with<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
    options: &RagsOptions,
) -> Result<SolverRun, SolverError> {
    check_dims(oracle, domain, init)?;
    let d = domain.dim();
    if d == 0 {
        return zero_dimensional(SolverId::Rags, oracle, domain, seed, budget, init);
    }
    let mut rng = rng_from_seed(seed);
    let mut tracker = Tracker::new(oracle, domain, budget);

    let mut x = match init {
        Some(p) => domain.to_unit(p),
        None => (0..d).map(|_| rng.random::<f64>()).collect(),
    };
    let Some(first) = tracker.evaluate(&x)? else {
        return Ok(tracker.finish(SolverId::Rags, init, seed, StopReason::BudgetExhausted));
    };
    let mut fx = first;
    let mut radius = options.initial_radius;
    let mut last_step = 1.0_f64;

    let stop = 'outer: loop {
        let mut points = None;
        for _ in 0..options.resample_attempts {
            let candidate: Vec<Vec<f64>> =
                (0..d).map(|_| ball_sample(&x, radius, &mut rng)).collect();
            if smallest_singular_value(&x, &candidate) >= options.degeneracy * radius {
                points = Some(candidate);
                break;
            }
        }
        let Some(points) = points else {
            radius *= options.shrink;
            if radius < options.radius_tolerance {
                break StopReason::Converged;
            }
            continue;
        };

        // Work with the objective relative to its current magnitude.
        let scale = if fx.value.abs() > 0.0 && fx.value.is_finite() {
            fx.value.abs()
        } else {
            1.0
        };
        let mut samples = Vec::with_capacity(d);
        for p in points {
            let Some(value) = tracker.evaluate(&p)? else {
                break 'outer StopReason::BudgetExhausted;
            };
            samples.push((p, scaled(value, scale)));
        }
        let center = scaled(fx.clone(), scale);

        let epsilon =
            options.active_tolerance * center.value.abs() * (radius / options.initial_radius);
        let direction = match robust_descent_direction(&x, &center, &samples, epsilon) {
            Some(direction) => direction,
            None => {
                radius *= options.shrink;
                continue;
            }
        };
        let dnorm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();

        if radius < options.radius_tolerance && dnorm < options.direction_tolerance {
            break StopReason::Converged;
        }
        if radius > options.mu * dnorm {
            radius *= options.shrink;
            continue;
        }

        let mut t = (2.0 * last_step).min(1.0);
        let mut accepted = false;
        while t * dnorm >= 1e-2 * options.radius_tolerance {
            let y: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| (xi + t * di).clamp(0.0, 1.0))
                .collect();
            if y != x {
                let Some(value) = tracker.evaluate(&y)? else {
                    break 'outer StopReason::BudgetExhausted;
                };
                if value.value / scale < center.value - options.armijo * t * dnorm * dnorm {
                    x = y;
                    fx = value;
                    last_step = t;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            radius *= options.shrink;
        }
        if tracker.remaining() == 0 {
            break StopReason::BudgetExhausted;
        }
    };
    Ok(tracker.finish(SolverId::Rags, init, seed, stop))
}
