//! Command-line front end: `evaluate`, `optimize` and `bench`.

mod problem;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use thiserror::Error;

use crate::bench::{
    rows_from_insertion, run_suite, write_labelled_results, write_results, write_suite_outputs,
    BenchError, ProblemCase, SuiteConfig,
};
use crate::bilevel::{inserting_dampers, InsertionOptions, InsertionResult};
use crate::solvers::{InitPolicy, SolverId, DEFAULT_BUDGET};
use crate::spectral::{DriftEvaluator, ExcitationSpec, FrequencyGrid, SpectralError};
use crate::structure::{assemble_model, Building, CoupledModel, DamperLayout, StructureError};

pub use problem::{load_problem, parse_problem, ProblemDefinition};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read problem file {}: {source}", path.display())]
    ReadProblem {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed problem file {}: {message}", path.display())]
    BadProblem { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Parser)]
#[command(
    name = "retrofit",
    version,
    about = "Optimal damper placement between adjacent buildings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the drift objective for given damper coefficients.
    Evaluate(EvaluateArgs),
    /// Run the greedy damper insertion on one problem.
    Optimize(OptimizeArgs),
    /// Run the benchmark suite and its analyses.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Built-in case, e.g. `set1:1`.
    #[arg(long, conflicts_with = "problem")]
    pub case: Option<String>,
    /// Problem file (TOML).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Frequency grid `min,max,step` in rad/s.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated coefficient per shared floor (N·s/m); zeros if omitted.
    #[arg(long, value_delimiter = ',')]
    pub coefficients: Vec<f64>,
    /// Also write `evaluation.csv` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = "mads")]
    pub solver: SolverId,
    #[arg(long, default_value = "warm")]
    pub init: InitPolicy,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    /// Oracle calls per inner solve.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Dampers to insert; defaults to every shared floor.
    #[arg(long)]
    pub nd: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Cases to run, e.g. `set1:1,set2:3`; all 15 if omitted.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values = ["ga", "mads", "rags"])]
    pub solver: Vec<SolverId>,
    #[arg(long, value_delimiter = ',', default_values = ["random", "warm"])]
    pub init: Vec<InitPolicy>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub nd: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value = "bench_out")]
    pub out: PathBuf,
}

/// Where a problem comes from, resolved before any run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Case(ProblemCase),
    File(PathBuf),
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub model: CoupledModel,
    pub excitation: ExcitationSpec,
    pub grid: FrequencyGrid,
    pub solvers: Vec<SolverId>,
    pub policies: Vec<InitPolicy>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    pub nd_max: usize,
    pub out: PathBuf,
}

impl RunConfig {
    /// Label written in the material and height columns of `results.csv`.
    fn labels(&self) -> (String, String) {
        match &self.source {
            ProblemSource::Case(c) => (c.material.to_string(), c.height_case.to_string()),
            ProblemSource::File(p) => (
                p.file_stem()
                    .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned()),
                "0".to_string(),
            ),
        }
    }
}

pub fn parse_grid(text: &str) -> Result<FrequencyGrid, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let values: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    match values.as_deref() {
        Ok([min, max, step]) => Ok(FrequencyGrid::new(*min, *max, *step)?),
        _ => Err(CliError::Invalid(format!(
            "--grid expects min,max,step, got '{text}'"
        ))),
    }
}

pub fn parse_case(text: &str) -> Result<ProblemCase, CliError> {
    text.parse()
        .map_err(|_| CliError::Invalid(format!("unknown case '{text}' (expected set<1-3>:<1-5>)")))
}

struct ResolvedProblem {
    source: ProblemSource,
    model: CoupledModel,
    excitation: ExcitationSpec,
    grid: FrequencyGrid,
}

fn resolve_problem(args: &ProblemArgs) -> Result<ResolvedProblem, CliError> {
    let override_grid = args.grid.as_deref().map(parse_grid).transpose()?;
    match (&args.case, &args.problem) {
        (Some(case), None) => {
            let case = parse_case(case)?;
            Ok(ResolvedProblem {
                source: ProblemSource::Case(case),
                model: case.model(),
                excitation: case.excitation(),
                grid: override_grid.unwrap_or_default(),
            })
        }
        (None, Some(path)) => {
            let def = load_problem(path)?;
            Ok(ResolvedProblem {
                source: ProblemSource::File(path.clone()),
                model: assemble_model(&def.a, &def.b),
                excitation: def.excitation,
                grid: override_grid.or(def.grid).unwrap_or_default(),
            })
        }
        _ => Err(CliError::Invalid(
            "exactly one of --case or --problem is required".to_string(),
        )),
    }
}

fn check_nd(nd: usize, floors: usize, what: &str) -> Result<(), CliError> {
    if nd == 0 || nd > floors {
        return Err(CliError::Invalid(format!(
            "--nd {nd} is outside 1..={floors} for {what}"
        )));
    }
    Ok(())
}

fn check_budget(budget: usize) -> Result<(), CliError> {
    if budget == 0 {
        return Err(CliError::Invalid("--budget must be positive".to_string()));
    }
    Ok(())
}

impl TryFrom<&OptimizeArgs> for RunConfig {
    type Error = CliError;

    fn try_from(args: &OptimizeArgs) -> Result<Self, CliError> {
        let problem = resolve_problem(&args.problem)?;
        let n = problem.model.n();
        let nd_max = args.nd.unwrap_or(n);
        check_nd(nd_max, n, "this problem")?;
        check_budget(args.budget)?;
        if args.seed.is_empty() {
            return Err(CliError::Invalid(
                "--seed needs at least one value".to_string(),
            ));
        }
        Ok(RunConfig {
            source: problem.source,
            model: problem.model,
            excitation: problem.excitation,
            grid: problem.grid,
            solvers: vec![args.solver],
            policies: vec![args.init],
            seeds: args.seed.clone(),
            budget: args.budget,
            nd_max,
            out: args.out.clone(),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

/// Evaluates one layout and prints the report. Returns `Ok(true)`.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<bool, CliError> {
    let problem = resolve_problem(&args.problem)?;
    let n = problem.model.n();
    let coefficients = if args.coefficients.is_empty() {
        vec![0.0; n]
    } else {
        args.coefficients.clone()
    };
    let layout = DamperLayout::from_coefficients(coefficients)?;
    if layout.n() != n {
        return Err(StructureError::DimensionMismatch {
            expected: n,
            got: layout.n(),
        }
        .into());
    }
    let evaluator = DriftEvaluator::new(&problem.model, &problem.excitation, &problem.grid);
    let eval = evaluator.evaluate(&layout)?;

    let mut report = String::from("building,floor,sigma,drift\n");
    for b in [Building::One, Building::Two] {
        for (i, (s, d)) in eval.sigmas_of(b).iter().zip(eval.drifts_of(b)).enumerate() {
            report.push_str(&format!("{},{},{:e},{:e}\n", b.index(), i + 1, s, d));
        }
    }
    print!("{report}");
    let (b, floor) = eval.argmax;
    println!(
        "F = {:e} (building {}, floor {floor})",
        eval.objective,
        b.index()
    );
    if let Some(dir) = &args.out {
        write_text(&dir.join("evaluation.csv"), &report)?;
    }
    Ok(true)
}

fn trace_name(run: &InsertionResult, nd: usize) -> String {
    format!(
        "{}_{}_seed{}_nd{nd}.csv",
        run.options.solver, run.options.init, run.options.seed
    )
}

/// Runs the greedy insertion once per seed and writes `results.csv` plus the
/// winning inner trace of every iteration under `traces/`. Returns whether
/// every seed completed.
pub fn run_optimize(config: &RunConfig) -> Result<bool, CliError> {
    let mut runs = Vec::new();
    let mut ok = true;
    for &solver in &config.solvers {
        for &init in &config.policies {
            for &seed in &config.seeds {
                let options = InsertionOptions::new(solver, init, config.nd_max)
                    .seed(seed)
                    .budget(config.budget);
                match inserting_dampers(&config.model, &config.excitation, &config.grid, &options) {
                    Ok(run) => {
                        info!("{solver}_{init} seed {seed}: {} calls", run.total_calls());
                        runs.push(run);
                    }
                    Err(e) => {
                        error!("{solver}_{init} seed {seed} failed: {e}");
                        ok = false;
                    }
                }
            }
        }
    }

    let path = config.out.join("results.csv");
    let w = create(&path)?;
    match &config.source {
        ProblemSource::Case(case) => {
            let rows: Vec<_> = runs
                .iter()
                .flat_map(|r| rows_from_insertion(*case, r))
                .collect();
            write_results(w, &rows)?;
        }
        ProblemSource::File(_) => {
            let (material, height) = config.labels();
            write_labelled_results(w, &material, &height, &runs)?;
        }
    }
    for run in &runs {
        for it in &run.iterations {
            let path = config.out.join("traces").join(trace_name(run, it.nd));
            write_text(&path, &it.winner.trace_csv())?;
        }
        for it in &run.iterations {
            let floors: Vec<String> = it.layout.iter().map(|f| f.to_string()).collect();
            println!(
                "{}_{} seed {} nd {}: F = {:e}, floors {}, calls {}",
                run.options.solver,
                run.options.init,
                run.options.seed,
                it.nd,
                it.objective,
                floors.join(";"),
                it.calls_cum
            );
        }
    }
    Ok(ok)
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<bool, CliError> {
    let config = RunConfig::try_from(args)?;
    run_optimize(&config)
}

pub fn suite_config(args: &BenchArgs) -> Result<SuiteConfig, CliError> {
    let cases = if args.subset.is_empty() {
        ProblemCase::all()
    } else {
        args.subset
            .iter()
            .map(|s| parse_case(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    if let Some(nd) = args.nd {
        for case in &cases {
            check_nd(nd, case.max_dampers(), &case.to_string())?;
        }
    }
    check_budget(args.budget)?;
    if args.solver.is_empty() || args.init.is_empty() || args.seed.is_empty() {
        return Err(CliError::Invalid(
            "--solver, --init and --seed need at least one value".to_string(),
        ));
    }
    Ok(SuiteConfig {
        cases,
        solvers: args.solver.clone(),
        policies: args.init.clone(),
        seeds: args.seed.clone(),
        budget: args.budget,
        nd_max: args.nd,
        grid: args
            .grid
            .as_deref()
            .map(parse_grid)
            .transpose()?
            .unwrap_or_default(),
    })
}

/// Runs the suite, writes every artifact plus `status.csv`, and prints a
/// per-case summary. Returns whether every run completed.
pub fn cmd_bench(args: &BenchArgs) -> Result<bool, CliError> {
    let config = suite_config(args)?;
    let outcome = run_suite(&config);
    let written = write_suite_outputs(&args.out, &outcome.rows)?;

    let mut status = String::from("case,solver,policy,seed,status,message\n");
    for &case in &config.cases {
        for &solver in &config.solvers {
            for &policy in &config.policies {
                for &seed in &config.seeds {
                    let failure = outcome.failures.iter().find(|f| {
                        f.case == case && f.solver == solver && f.policy == policy && f.seed == seed
                    });
                    let (state, message) = match failure {
                        Some(f) => ("failed", f.message.replace(['\n', ','], " ")),
                        None => ("ok", String::new()),
                    };
                    status.push_str(&format!(
                        "{case},{solver},{policy},{seed},{state},{message}\n"
                    ));
                }
            }
        }
    }
    write_text(&args.out.join("status.csv"), &status)?;

    for &case in &config.cases {
        let rows = outcome.rows.iter().filter(|r| r.case() == case).count();
        let failed = outcome.failures.iter().filter(|f| f.case == case).count();
        println!(
            "{case}: {rows} rows, {}",
            if failed == 0 {
                "ok".to_string()
            } else {
                format!("{failed} failed runs")
            }
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(outcome.failures.is_empty())
}

/// Sizes the global worker pool from `RETROFIT_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("RETROFIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            CliError::Invalid(format!(
                "RETROFIT_THREADS must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

/// Dispatches a parsed command line. `Ok(false)` means some run failed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_case_parsing() {
        let g = parse_grid("-20,20,0.02").unwrap();
        assert_eq!(g.len(), 2001);
        assert!(parse_grid("1,2").is_err());
        assert!(parse_grid("2,1,0.1").is_err());
        assert_eq!(parse_case("set3:4").unwrap().floors(), (10, 40));
        assert!(parse_case("set3:9").is_err());
    }

    #[test]
    fn optimize_validates_eagerly() {
        let cli = Cli::try_parse_from([
            "retrofit", "optimize", "--case", "set1:1", "--nd", "11", "--solver", "mads",
        ])
        .unwrap();
        let Command::Optimize(args) = cli.command else {
            unreachable!()
        };
        let err = RunConfig::try_from(&args).unwrap_err();
        assert!(err.to_string().contains("--nd 11"), "{err}");

        let cli = Cli::try_parse_from(["retrofit", "optimize", "--case", "set1:1"]).unwrap();
        let Command::Optimize(args) = cli.command else {
            unreachable!()
        };
        let config = RunConfig::try_from(&args).unwrap();
        assert_eq!(config.nd_max, 10);
        assert_eq!(config.solvers, vec![SolverId::Mads]);
        assert_eq!(config.policies, vec![InitPolicy::Warm]);
        assert_eq!(config.labels(), ("I".to_string(), "1".to_string()));
    }

    #[test]
    fn problem_source_is_exclusive() {
        assert!(Cli::try_parse_from([
            "retrofit",
            "evaluate",
            "--case",
            "set1:1",
            "--problem",
            "x.toml"
        ])
        .is_err());
        let cli = Cli::try_parse_from(["retrofit", "evaluate"]).unwrap();
        let Command::Evaluate(args) = cli.command else {
            unreachable!()
        };
        assert!(resolve_problem(&args.problem).is_err());
    }

    #[test]
    fn bench_defaults_cover_every_variant() {
        let cli = Cli::try_parse_from(["retrofit", "bench"]).unwrap();
        let Command::Bench(args) = cli.command else {
            unreachable!()
        };
        let config = suite_config(&args).unwrap();
        assert_eq!(config.cases.len(), 15);
        assert_eq!(config.solvers.len(), 3);
        assert_eq!(config.policies.len(), 2);

        let cli =
            Cli::try_parse_from(["retrofit", "bench", "--subset", "set1:1", "--nd", "11"]).unwrap();
        let Command::Bench(args) = cli.command else {
            unreachable!()
        };
        assert!(suite_config(&args).is_err());
    }
}
