//! The 150-problem benchmark: case registry, suite runner, result tables and
//! their analyses.

mod analysis;
mod cases;
mod profile;
mod reference;
mod results;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::bilevel::{inserting_dampers, InsertionOptions};
use crate::solvers::{InitPolicy, SolverId, DEFAULT_BUDGET};
use crate::spectral::FrequencyGrid;

pub use analysis::{
    damper_threshold, location_histogram, write_histograms, write_thresholds, LocationHistogram,
    Threshold,
};
pub use cases::{FloorProperties, MaterialSet, ProblemCase, HEIGHTS};
pub use profile::{
    performance_profile, performance_profile_with, write_profile, CallMeasure, ProfileCurve,
    Variant,
};
pub use reference::{
    appendix_a, compare_with_appendix, example_vectors, write_comparison, AppendixRow,
    ComparisonLine, APPENDIX_SCALE,
};
pub use results::{
    read_results, rows_from_insertion, sort_rows, write_labelled_results, write_results, ResultRow,
    RESULTS_HEADER,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown problem case '{0}'")]
    UnknownCase(String),
    #[error("malformed results: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("empty result set")]
    EmptyResults,
    #[error("incomplete coverage: {0}")]
    Coverage(String),
}

/// What to run: every case against every solver, policy and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub cases: Vec<ProblemCase>,
    pub solvers: Vec<SolverId>,
    pub policies: Vec<InitPolicy>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    /// Dampers per case; `None` fills every shared floor.
    pub nd_max: Option<usize>,
    pub grid: FrequencyGrid,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            cases: ProblemCase::all(),
            solvers: SolverId::ALL.to_vec(),
            policies: InitPolicy::ALL.to_vec(),
            seeds: vec![0],
            budget: DEFAULT_BUDGET,
            nd_max: None,
            grid: FrequencyGrid::default(),
        }
    }
}

/// An outer run that did not complete.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub case: ProblemCase,
    pub solver: SolverId,
    pub policy: InitPolicy,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOutcome {
    /// Sorted by case, `nd`, solver, policy and seed.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RunFailure>,
}

/// Runs the greedy insertion for every combination in `config`. Failed runs
/// are logged and reported; the remaining runs still complete.
pub fn run_suite(config: &SuiteConfig) -> SuiteOutcome {
    let mut jobs = Vec::new();
    for &case in &config.cases {
        for &solver in &config.solvers {
            for &policy in &config.policies {
                for &seed in &config.seeds {
                    jobs.push((case, solver, policy, seed));
                }
            }
        }
    }
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(case, solver, policy, seed)| {
            let model = case.model();
            let nd = config.nd_max.unwrap_or(case.max_dampers());
            let options = InsertionOptions::new(solver, policy, nd)
                .seed(seed)
                .budget(config.budget);
            let result = inserting_dampers(&model, &case.excitation(), &config.grid, &options);
            match result {
                Ok(res) => {
                    info!(
                        "{case} {solver}_{policy} seed {seed}: {} calls",
                        res.total_calls()
                    );
                    Ok(rows_from_insertion(case, &res))
                }
                Err(e) => {
                    warn!("{case} {solver}_{policy} seed {seed} failed: {e}");
                    Err(RunFailure {
                        case,
                        solver,
                        policy,
                        seed,
                        message: e.to_string(),
                    })
                }
            }
        })
        .collect();
    let mut out = SuiteOutcome::default();
    for o in outcomes {
        match o {
            Ok(rows) => out.rows.extend(rows),
            Err(f) => out.failures.push(f),
        }
    }
    sort_rows(&mut out.rows);
    out
}

/// Profile tolerances written by [`write_suite_outputs`].
pub const PROFILE_TOLERANCES: [f64; 2] = [0.05, 0.01];

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), BenchError> {
    let path = dir.join(name);
    Ok((BufWriter::new(File::create(&path)?), path))
}

/// Writes `results.csv`, profiles, thresholds, location histograms and the
/// reference comparison into `dir`. Returns the written paths. Analyses whose
/// preconditions the rows do not meet are skipped with a warning.
pub fn write_suite_outputs(dir: &Path, rows: &[ResultRow]) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let (w, path) = create(dir, "results.csv")?;
    write_results(w, rows)?;
    written.push(path);

    for tol in PROFILE_TOLERANCES {
        for (measure, prefix) in [
            (CallMeasure::Cumulative, "profile"),
            (CallMeasure::PerIteration, "profile_iter"),
        ] {
            match performance_profile_with(rows, tol, measure) {
                Ok(curves) => {
                    let (w, path) = create(dir, &format!("{prefix}_{tol}.csv"))?;
                    write_profile(w, &curves)?;
                    written.push(path);
                }
                Err(e) => warn!("skipping {prefix}_{tol}.csv: {e}"),
            }
        }
        match damper_threshold(rows, tol) {
            Ok(thresholds) => {
                let (w, path) = create(dir, &format!("thresholds_{tol}.csv"))?;
                write_thresholds(w, &thresholds)?;
                written.push(path);
            }
            Err(e) => warn!("skipping thresholds_{tol}.csv: {e}"),
        }
    }

    let max_nd = rows.iter().map(|r| r.nd).max().unwrap_or(0);
    let histograms: Vec<_> = (1..=max_nd)
        .map(|nd| location_histogram(rows, nd))
        .collect();
    let (w, path) = create(dir, "histograms.csv")?;
    write_histograms(w, &histograms)?;
    written.push(path);

    let (w, path) = create(dir, "comparison.csv")?;
    write_comparison(w, &compare_with_appendix(rows))?;
    written.push(path);
    Ok(written)
}
