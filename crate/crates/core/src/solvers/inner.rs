use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::{BoxDomain, MinimaxOracle, MinimaxValue, SolverError};
use crate::spectral::{DriftEvaluation, DriftEvaluator, ExcitationSpec, FrequencyGrid};
use crate::structure::{CoupledModel, DamperLayout};

/// Maximum drift as a function of the coefficients on a fixed set of floors.
///
/// Coordinates follow the floors in increasing order. The components are the
/// drifts of every floor of both buildings, building 1 first.
#[derive(Debug, Clone)]
pub struct DamperOracle {
    evaluator: Arc<DriftEvaluator>,
    floors: BTreeSet<usize>,
    calls: Arc<AtomicUsize>,
}

/// Builds the inner oracle for the floors of `layout` (its coefficients are
/// ignored).
pub fn make_inner_oracle(
    model: &CoupledModel,
    layout: &DamperLayout,
    exc: &ExcitationSpec,
    grid: &FrequencyGrid,
) -> DamperOracle {
    DamperOracle::new(
        Arc::new(DriftEvaluator::new(model, exc, grid)),
        layout.active_floors().clone(),
        Arc::new(AtomicUsize::new(0)),
    )
}

impl DamperOracle {
    pub fn new(
        evaluator: Arc<DriftEvaluator>,
        floors: BTreeSet<usize>,
        calls: Arc<AtomicUsize>,
    ) -> Self {
        Self {
            evaluator,
            floors,
            calls,
        }
    }

    pub fn floors(&self) -> &BTreeSet<usize> {
        &self.floors
    }

    /// Number of evaluations made through this oracle and every oracle
    /// sharing its counter.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn counter(&self) -> Arc<AtomicUsize> {
        Arc::clone(&self.calls)
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::dampers(self.floors.len())
    }

    pub fn layout(&self, x: &[f64]) -> Result<DamperLayout, SolverError> {
        DamperLayout::from_active_values(self.evaluator.model().n(), &self.floors, x)
            .map_err(|e| SolverError::Oracle(Box::new(e)))
    }

    /// Full drift evaluation at `x`; counted like [`MinimaxOracle::evaluate`].
    pub fn evaluate_drifts(&self, x: &[f64]) -> Result<DriftEvaluation, SolverError> {
        let layout = self.layout(x)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.evaluator
            .evaluate(&layout)
            .map_err(|e| SolverError::Oracle(Box::new(e)))
    }
}

impl MinimaxOracle for DamperOracle {
    fn dim(&self) -> usize {
        self.floors.len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<MinimaxValue, SolverError> {
        let eval = self.evaluate_drifts(x)?;
        Ok(MinimaxValue {
            value: eval.objective,
            components: eval.drifts,
        })
    }
}
