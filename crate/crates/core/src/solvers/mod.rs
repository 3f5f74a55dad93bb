//! Derivative-free minimizers for the inner, fixed-configuration problem.
//!
//! All three methods work on a box that is rescaled to the unit cube, share
//! the [`MinimaxOracle`] interface and report a [`SolverRun`] whose trace has
//! one entry per oracle invocation.

mod ga;
mod inner;
mod mads;
mod min_norm;
mod rags;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use ga::{ga_minimize, ga_minimize_with, GaOptions};
pub use inner::{make_inner_oracle, DamperOracle};
pub use mads::{mads_minimize, mads_minimize_with, next_poll_size, MadsOptions};
pub use min_norm::{min_norm_point, MinNormPoint};
pub use rags::{rags_minimize, rags_minimize_with, robust_descent_direction, RagsOptions};

/// Upper bound of the default damper-coefficient box, N·s/m.
pub const DEFAULT_MAX_COEFFICIENT: f64 = 1e8;

/// Default number of oracle calls granted to one inner solve.
pub const DEFAULT_BUDGET: usize = 1000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("budget of {budget} calls is smaller than one generation ({needed})")]
    BudgetTooSmall { budget: usize, needed: usize },
    #[error("initial point has {got} coordinates, the domain has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial point coordinate {index} = {value} lies outside [{lower}, {upper}]")]
    InitOutsideDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("invalid box: {0}")]
    InvalidDomain(String),
    #[error("oracle failed: {0}")]
    Oracle(#[source] Box<dyn std::error::Error + Send + Sync>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverId {
    Ga,
    Mads,
    Rags,
}

impl SolverId {
    pub const ALL: [SolverId; 3] = [SolverId::Ga, SolverId::Mads, SolverId::Rags];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverId::Ga => "ga",
            SolverId::Mads => "mads",
            SolverId::Rags => "rags",
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ga" => Ok(SolverId::Ga),
            "mads" => Ok(SolverId::Mads),
            "rags" => Ok(SolverId::Rags),
            other => Err(format!(
                "unknown solver '{other}' (expected ga, mads or rags)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InitPolicy {
    Random,
    Warm,
}

impl InitPolicy {
    pub const ALL: [InitPolicy; 2] = [InitPolicy::Random, InitPolicy::Warm];

    pub fn as_str(self) -> &'static str {
        match self {
            InitPolicy::Random => "random",
            InitPolicy::Warm => "warm",
        }
    }
}

impl fmt::Display for InitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "r" => Ok(InitPolicy::Random),
            "warm" | "w" => Ok(InitPolicy::Warm),
            other => Err(format!(
                "unknown init policy '{other}' (expected random or warm)"
            )),
        }
    }
}

/// Axis-aligned bounds, internally mapped to `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SolverError> {
        if lower.len() != upper.len() {
            return Err(SolverError::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(SolverError::InvalidDomain(format!(
                    "coordinate {i}: bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, SolverError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// `[0, 1e8]` N·s/m on every active damper.
    pub fn dampers(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![DEFAULT_MAX_COEFFICIENT; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&t, (&lo, &hi))| {
                if t <= 0.0 {
                    lo
                } else if t >= 1.0 {
                    hi
                } else {
                    (lo + t * (hi - lo)).clamp(lo, hi)
                }
            })
            .collect()
    }

    fn check_init(&self, init: Option<&[f64]>) -> Result<(), SolverError> {
        let Some(x) = init else { return Ok(()) };
        if x.len() != self.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (index, (&value, (&lower, &upper))) in
            x.iter().zip(self.lower.iter().zip(&self.upper)).enumerate()
        {
            if !(value >= lower && value <= upper) {
                return Err(SolverError::InitOutsideDomain {
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }
}

/// Objective value of a finite max together with every component.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxValue {
    pub value: f64,
    pub components: Vec<f64>,
}

impl MinimaxValue {
    pub fn from_components(components: Vec<f64>) -> Self {
        let value = components.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { value, components }
    }

    /// Components within `tolerance` of the maximum.
    pub fn active_set(&self, tolerance: f64) -> Vec<usize> {
        self.components
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= self.value - tolerance)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A finite max `F(x) = max_i f_i(x)` that exposes its components.
pub trait MinimaxOracle {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<MinimaxValue, SolverError>;
}

/// Adapts a closure returning the component values.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> MinimaxOracle for FnOracle<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<MinimaxValue, SolverError> {
        Ok(MinimaxValue::from_components((self.f)(x)))
    }
}

impl<O: MinimaxOracle + ?Sized> MinimaxOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<MinimaxValue, SolverError> {
        (**self).evaluate(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// 1-based index of the oracle call.
    pub call: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    BudgetExhausted,
    Stalled,
    /// Nothing to optimize: the oracle has no variables.
    NoVariables,
}

/// Record of one inner minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun {
    pub solver: SolverId,
    pub init: InitPolicy,
    pub seed: u64,
    pub budget: usize,
    pub trace: Vec<TracePoint>,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub stop: StopReason,
}

impl SolverRun {
    pub fn calls(&self) -> usize {
        self.trace.len()
    }

    /// Running minimum of the trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|p| {
                best = best.min(p.value);
                best
            })
            .collect()
    }

    /// `call_index,objective` rows with a header line.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("call_index,objective\n");
        for p in &self.trace {
            out.push_str(&format!("{},{:e}\n", p.call, p.value));
        }
        out
    }
}

/// Call accountant shared by the solvers: evaluates unit-cube points, keeps
/// the trace and the incumbent, and refuses to exceed the budget.
pub(crate) struct Tracker<'a, O: ?Sized> {
    oracle: &'a O,
    domain: &'a BoxDomain,
    budget: usize,
    trace: Vec<TracePoint>,
    best_unit: Vec<f64>,
    best_value: f64,
}

impl<'a, O: MinimaxOracle + ?Sized> Tracker<'a, O> {
    pub fn new(oracle: &'a O, domain: &'a BoxDomain, budget: usize) -> Self {
        Self {
            oracle,
            domain,
            budget,
            trace: Vec::new(),
            best_unit: Vec::new(),
            best_value: f64::INFINITY,
        }
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    pub fn calls(&self) -> usize {
        self.trace.len()
    }

    /// `Ok(None)` once the budget is spent.
    pub fn evaluate(&mut self, unit: &[f64]) -> Result<Option<MinimaxValue>, SolverError> {
        if self.remaining() == 0 {
            return Ok(None);
        }
        let x = self.domain.from_unit(unit);
        let value = self.oracle.evaluate(&x)?;
        self.trace.push(TracePoint {
            call: self.trace.len() + 1,
            value: value.value,
        });
        if value.value < self.best_value || self.best_unit.is_empty() {
            self.best_value = value.value;
            self.best_unit = unit.to_vec();
        }
        Ok(Some(value))
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn finish(
        self,
        solver: SolverId,
        init: Option<&[f64]>,
        seed: u64,
        stop: StopReason,
    ) -> SolverRun {
        SolverRun {
            solver,
            init: if init.is_some() {
                InitPolicy::Warm
            } else {
                InitPolicy::Random
            },
            seed,
            budget: self.budget,
            best_point: self.domain.from_unit(&self.best_unit),
            best_value: self.best_value,
            trace: self.trace,
            stop,
        }
    }
}

/// Shared handling of the zero-dimensional case: one evaluation, no search.
pub(crate) fn zero_dimensional<O: MinimaxOracle + ?Sized>(
    solver: SolverId,
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
) -> Result<SolverRun, SolverError> {
    let mut tracker = Tracker::new(oracle, domain, budget);
    tracker.evaluate(&[])?;
    Ok(tracker.finish(solver, init, seed, StopReason::NoVariables))
}

pub(crate) fn check_dims<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    domain: &BoxDomain,
    init: Option<&[f64]>,
) -> Result<(), SolverError> {
    if oracle.dim() != domain.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: domain.dim(),
            got: oracle.dim(),
        });
    }
    domain.check_init(init)
}

pub(crate) fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Runs the selected solver with its default options.
pub fn minimize<O: MinimaxOracle + ?Sized>(
    solver: SolverId,
    oracle: &O,
    domain: &BoxDomain,
    seed: u64,
    budget: usize,
    init: Option<&[f64]>,
) -> Result<SolverRun, SolverError> {
    match solver {
        SolverId::Ga => ga_minimize(oracle, domain, seed, budget, init),
        SolverId::Mads => mads_minimize(oracle, domain, seed, budget, init),
        SolverId::Rags => rags_minimize(oracle, domain, seed, budget, init),
    }
}

#[cfg(test)]
pub(crate) mod test_oracles {
    use super::*;

    /// max(x², (x - 2)²): minimizer x = 1, value 1.
    pub fn two_parabolas() -> FnOracle<impl Fn(&[f64]) -> Vec<f64>> {
        FnOracle::new(1, |x: &[f64]| vec![x[0] * x[0], (x[0] - 2.0).powi(2)])
    }

    pub fn wide_box() -> BoxDomain {
        BoxDomain::uniform(1, -10.0, 10.0).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_oracles::*;
    use super::*;
    use std::cell::Cell;

    #[test]
    fn unit_mapping_round_trips_and_clamps() {
        let domain = BoxDomain::new(vec![0.0, -5.0], vec![1e8, 5.0]).unwrap();
        let u = domain.to_unit(&[2.5e7, 0.0]);
        assert_eq!(u, vec![0.25, 0.5]);
        assert_eq!(domain.from_unit(&u), vec![2.5e7, 0.0]);
        assert_eq!(domain.from_unit(&[-0.1, 1.5]), vec![0.0, 5.0]);
        assert!(domain.contains(&[0.0, 5.0]));
        assert!(!domain.contains(&[-1.0, 0.0]));
        assert!(BoxDomain::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn active_set_and_max() {
        let v = MinimaxValue::from_components(vec![1.0, 3.0, 2.9995, -1.0]);
        assert_eq!(v.value, 3.0);
        assert_eq!(v.active_set(0.0), vec![1]);
        assert_eq!(v.active_set(1e-3), vec![1, 2]);
    }

    #[test]
    fn invalid_init_is_rejected_by_every_solver() {
        let oracle = two_parabolas();
        let domain = wide_box();
        for solver in SolverId::ALL {
            assert!(matches!(
                minimize(solver, &oracle, &domain, 0, 500, Some(&[11.0])),
                Err(SolverError::InitOutsideDomain { .. })
            ));
            assert!(matches!(
                minimize(solver, &oracle, &domain, 0, 500, Some(&[1.0, 2.0])),
                Err(SolverError::DimensionMismatch { .. })
            ));
        }
    }

    #[test]
    fn zero_dimensional_oracle_is_evaluated_once() {
        let oracle = FnOracle::new(0, |_: &[f64]| vec![4.0, 2.0]);
        let domain = BoxDomain::dampers(0);
        for solver in SolverId::ALL {
            let run = minimize(solver, &oracle, &domain, 3, 100, None).unwrap();
            assert_eq!(run.calls(), 1);
            assert_eq!(run.best_value, 4.0);
            assert!(run.best_point.is_empty());
            assert_eq!(run.stop, StopReason::NoVariables);
        }
    }

    /// Counts invocations and checks feasibility of every evaluated point.
    struct Audited<'a, O> {
        inner: O,
        domain: &'a BoxDomain,
        calls: Cell<usize>,
    }

    impl<O: MinimaxOracle> MinimaxOracle for Audited<'_, O> {
        fn dim(&self) -> usize {
            self.inner.dim()
        }

        fn evaluate(&self, x: &[f64]) -> Result<MinimaxValue, SolverError> {
            assert!(self.domain.contains(x), "infeasible point {x:?}");
            self.calls.set(self.calls.get() + 1);
            self.inner.evaluate(x)
        }
    }

    #[test]
    fn accounting_feasibility_and_monotone_best() {
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1e8, 1e8]).unwrap();
        for solver in SolverId::ALL {
            for init in [None, Some(&[0.0, 3e7][..])] {
                let audited = Audited {
                    inner: FnOracle::new(2, |x: &[f64]| {
                        let (a, b) = (x[0] / 1e7, x[1] / 1e7);
                        vec![(a - 2.0).powi(2) + b, (b - 1.0).powi(2) + 0.5 * a]
                    }),
                    domain: &domain,
                    calls: Cell::new(0),
                };
                let run = minimize(solver, &audited, &domain, 11, 400, init).unwrap();
                assert_eq!(run.calls(), audited.calls.get(), "{solver}");
                assert!(run.calls() <= 400);
                assert!(run.trace.windows(2).all(|w| w[1].call == w[0].call + 1));
                let running = run.best_so_far();
                assert!(running.windows(2).all(|w| w[1] <= w[0]));
                assert_eq!(*running.last().unwrap(), run.best_value);
                let min = run
                    .trace
                    .iter()
                    .map(|p| p.value)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(run.best_value, min);
                assert!(domain.contains(&run.best_point));
                assert_eq!(
                    audited.evaluate(&run.best_point).unwrap().value,
                    run.best_value
                );
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let oracle = two_parabolas();
        let domain = wide_box();
        for solver in SolverId::ALL {
            let a = minimize(solver, &oracle, &domain, 42, 300, None).unwrap();
            let b = minimize(solver, &oracle, &domain, 42, 300, None).unwrap();
            assert_eq!(a, b);
            let bits = |r: &SolverRun| {
                r.trace
                    .iter()
                    .map(|p| p.value.to_bits())
                    .collect::<Vec<_>>()
            };
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn warm_start_is_evaluated_first() {
        let oracle = two_parabolas();
        let domain = wide_box();
        for solver in SolverId::ALL {
            let run = minimize(solver, &oracle, &domain, 5, 300, Some(&[4.0])).unwrap();
            assert_eq!(run.trace[0].value, 16.0, "{solver}");
            assert!(run.best_value <= 16.0);
            assert_eq!(run.init, InitPolicy::Warm);
        }
    }

    #[test]
    fn trace_export() {
        let oracle = two_parabolas();
        let run = mads_minimize(&oracle, &wide_box(), 0, 3, Some(&[0.0])).unwrap();
        let csv = run.trace_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "call_index,objective");
        assert_eq!(lines[1], "1,4e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn parse_identifiers() {
        assert_eq!("MADS".parse::<SolverId>().unwrap(), SolverId::Mads);
        assert_eq!("warm".parse::<InitPolicy>().unwrap(), InitPolicy::Warm);
        assert!("nomad".parse::<SolverId>().is_err());
    }
}
