//! Performance profiles over objective-call counts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::solvers::{InitPolicy, SolverId};

use super::{BenchError, MaterialSet, ResultRow};

/// Which call count a profile compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CallMeasure {
    /// Calls from the start of the outer run up to this `nd`.
    #[default]
    Cumulative,
    /// Calls spent in the iteration that inserted the `nd`-th damper.
    PerIteration,
}

type ProblemKey = (MaterialSet, u8, usize, u64);
pub type Variant = (SolverId, InitPolicy);

/// Empirical distribution of one variant's cost ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver: SolverId,
    pub policy: InitPolicy,
    /// Sorted ascending; failures are `+inf`.
    pub ratios: Vec<f64>,
}

impl ProfileCurve {
    pub fn problems(&self) -> usize {
        self.ratios.len()
    }

    /// Fraction of problems solved within a factor `tau` of the cheapest
    /// successful variant.
    pub fn fraction_at(&self, tau: f64) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        let solved = self.ratios.partition_point(|&r| r <= tau);
        solved as f64 / self.ratios.len() as f64
    }

    pub fn failure_rate(&self) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        self.ratios.iter().filter(|r| r.is_infinite()).count() as f64 / self.ratios.len() as f64
    }

    /// Distinct finite ratios, where the step function jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .ratios
            .iter()
            .copied()
            .filter(|r| r.is_finite())
            .collect();
        out.dedup();
        out
    }
}

pub fn performance_profile(
    rows: &[ResultRow],
    tolerance: f64,
) -> Result<Vec<ProfileCurve>, BenchError> {
    performance_profile_with(rows, tolerance, CallMeasure::default())
}

/// A variant fails a problem when its objective exceeds the best objective of
/// any variant by more than `tolerance` (relative); otherwise its ratio is its
/// call count over the smallest call count among non-failed variants.
pub fn performance_profile_with(
    rows: &[ResultRow],
    tolerance: f64,
    measure: CallMeasure,
) -> Result<Vec<ProfileCurve>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyResults);
    }
    let mut table: BTreeMap<Variant, BTreeMap<ProblemKey, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        let calls = match measure {
            CallMeasure::Cumulative => r.calls_cum,
            CallMeasure::PerIteration => r.calls_iter,
        };
        let key = (r.material, r.height_case, r.nd, r.seed);
        if table
            .entry((r.solver, r.policy))
            .or_default()
            .insert(key, (r.objective, calls))
            .is_some()
        {
            return Err(BenchError::Coverage(format!(
                "duplicate row for {} {} {key:?}",
                r.solver, r.policy
            )));
        }
    }
    let problems: BTreeSet<ProblemKey> = table.values().next().unwrap().keys().copied().collect();
    for (variant, entries) in &table {
        if entries.len() != problems.len() || !entries.keys().all(|k| problems.contains(k)) {
            return Err(BenchError::Coverage(format!(
                "{} {} covers a different problem set",
                variant.0, variant.1
            )));
        }
    }

    let mut ratios: BTreeMap<Variant, Vec<f64>> = table.keys().map(|&v| (v, Vec::new())).collect();
    for key in &problems {
        let best = table
            .values()
            .map(|e| e[key].0)
            .fold(f64::INFINITY, f64::min);
        let ok = |f: f64| (f - best) <= tolerance * best.abs();
        let min_calls = table
            .values()
            .filter(|e| ok(e[key].0))
            .map(|e| e[key].1)
            .min()
            .expect("the best variant never fails");
        for (variant, entries) in &table {
            let (f, calls) = entries[key];
            let ratio = if ok(f) {
                calls as f64 / (min_calls.max(1)) as f64
            } else {
                f64::INFINITY
            };
            ratios.get_mut(variant).unwrap().push(ratio);
        }
    }
    Ok(ratios
        .into_iter()
        .map(|((solver, policy), mut ratios)| {
            ratios.sort_by(f64::total_cmp);
            ProfileCurve {
                solver,
                policy,
                ratios,
            }
        })
        .collect())
}

/// Writes `solver,policy,tau,fraction`, evaluating every curve at the union
/// of all breakpoints (and `tau = 1`).
pub fn write_profile<W: Write>(writer: W, curves: &[ProfileCurve]) -> Result<(), BenchError> {
    let mut taus: Vec<f64> = curves.iter().flat_map(|c| c.breakpoints()).collect();
    taus.push(1.0);
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["solver", "policy", "tau", "fraction"])?;
    for c in curves {
        for &tau in &taus {
            w.write_record([
                c.solver.to_string(),
                c.policy.to_string(),
                format!("{tau}"),
                format!("{}", c.fraction_at(tau)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
