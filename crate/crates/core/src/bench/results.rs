use std::io::{Read, Write};

use crate::bilevel::InsertionResult;
use crate::solvers::{InitPolicy, SolverId};

use super::{BenchError, MaterialSet, ProblemCase};

pub const RESULTS_HEADER: [&str; 11] = [
    "material",
    "height_case",
    "nd",
    "solver",
    "policy",
    "seed",
    "calls_iter",
    "calls_cum",
    "objective",
    "layout",
    "coefficients",
];

/// One `(case, nd, solver, policy, seed)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub material: MaterialSet,
    pub height_case: u8,
    pub nd: usize,
    pub solver: SolverId,
    pub policy: InitPolicy,
    pub seed: u64,
    pub calls_iter: usize,
    pub calls_cum: usize,
    pub objective: f64,
    pub layout: Vec<usize>,
    /// Full coefficient vector, zero off the layout.
    pub coefficients: Vec<f64>,
}

impl ResultRow {
    pub fn case(&self) -> ProblemCase {
        ProblemCase {
            material: self.material,
            height_case: self.height_case,
        }
    }

    fn sort_key(&self) -> (MaterialSet, u8, usize, SolverId, InitPolicy, u64) {
        (
            self.material,
            self.height_case,
            self.nd,
            self.solver,
            self.policy,
            self.seed,
        )
    }
}

/// Rows for every iteration of one outer run.
pub fn rows_from_insertion(case: ProblemCase, result: &InsertionResult) -> Vec<ResultRow> {
    result
        .iterations
        .iter()
        .map(|it| ResultRow {
            material: case.material,
            height_case: case.height_case,
            nd: it.nd,
            solver: result.options.solver,
            policy: result.options.init,
            seed: result.options.seed,
            calls_iter: it.calls_iter,
            calls_cum: it.calls_cum,
            objective: it.objective,
            layout: it.layout.iter().copied().collect(),
            coefficients: it.coefficients.clone(),
        })
        .collect()
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

#[allow(clippy::too_many_arguments)]
fn record(
    material: &str,
    height_case: &str,
    nd: usize,
    solver: SolverId,
    policy: InitPolicy,
    seed: u64,
    calls: (usize, usize),
    objective: f64,
    layout: &[usize],
    coefficients: &[f64],
) -> [String; 11] {
    [
        material.to_string(),
        height_case.to_string(),
        nd.to_string(),
        solver.to_string(),
        policy.to_string(),
        seed.to_string(),
        calls.0.to_string(),
        calls.1.to_string(),
        format!("{objective:e}"),
        join(layout, |f| f.to_string()),
        join(coefficients, |c| format!("{c:.5e}")),
    ]
}

fn write_records<W: Write>(
    writer: W,
    records: impl IntoIterator<Item = [String; 11]>,
) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the rows sorted by case, `nd`, solver, policy and seed.
pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> Result<(), BenchError> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    write_records(
        writer,
        sorted.iter().map(|r| {
            record(
                r.material.as_str(),
                &r.height_case.to_string(),
                r.nd,
                r.solver,
                r.policy,
                r.seed,
                (r.calls_iter, r.calls_cum),
                r.objective,
                &r.layout,
                &r.coefficients,
            )
        }),
    )
}

/// Same format as [`write_results`] for problems outside the case registry;
/// `material` and `height_case` are written verbatim. Runs keep their order.
pub fn write_labelled_results<W: Write>(
    writer: W,
    material: &str,
    height_case: &str,
    runs: &[InsertionResult],
) -> Result<(), BenchError> {
    write_records(
        writer,
        runs.iter().flat_map(|run| {
            run.iterations.iter().map(move |it| {
                let layout: Vec<usize> = it.layout.iter().copied().collect();
                record(
                    material,
                    height_case,
                    it.nd,
                    run.options.solver,
                    run.options.init,
                    run.options.seed,
                    (it.calls_iter, it.calls_cum),
                    it.objective,
                    &layout,
                    &it.coefficients,
                )
            })
        }),
    )
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize) -> Result<T, BenchError> {
    let raw = record.get(index).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        BenchError::Parse(format!(
            "column {} has invalid value '{raw}'",
            RESULTS_HEADER[index]
        ))
    })
}

fn split<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, BenchError> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(';')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| BenchError::Parse(format!("invalid {what} entry '{s}'")))
        })
        .collect()
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>, BenchError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(BenchError::Parse(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse_enum = |i: usize| record.get(i).unwrap_or("").to_string();
        rows.push(ResultRow {
            material: parse_enum(0).parse()?,
            height_case: field(&record, 1)?,
            nd: field(&record, 2)?,
            solver: parse_enum(3).parse().map_err(BenchError::Parse)?,
            policy: parse_enum(4).parse().map_err(BenchError::Parse)?,
            seed: field(&record, 5)?,
            calls_iter: field(&record, 6)?,
            calls_cum: field(&record, 7)?,
            objective: field(&record, 8)?,
            layout: split(record.get(9).unwrap_or(""), "layout")?,
            coefficients: split(record.get(10).unwrap_or(""), "coefficient")?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(nd: usize, solver: SolverId) -> ResultRow {
        ResultRow {
            material: MaterialSet::II,
            height_case: 3,
            nd,
            solver,
            policy: InitPolicy::Warm,
            seed: 7,
            calls_iter: 120,
            calls_cum: 400,
            objective: 1.234_567_891e-6,
            layout: vec![2, 10],
            coefficients: vec![0.0, 2.417_9e7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0e6],
        }
    }

    #[test]
    fn csv_round_trip_and_format() {
        let rows = vec![row(2, SolverId::Rags), row(1, SolverId::Mads)];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_HEADER.join(","));
        let first = lines.next().unwrap();
        assert!(first.starts_with("II,3,1,mads,warm,7,120,400,1.234567891e-6,2;10,"));
        assert!(first.contains("0.00000e0;2.41790e7;"));
        let back = read_results(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].nd, 1);
        assert_eq!(back[0].objective, 1.234_567_891e-6);
        assert_eq!(back[0].layout, vec![2, 10]);
        assert_eq!(back[0].coefficients[1], 2.4179e7);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(read_results("a,b\n1,2\n".as_bytes()).is_err());
    }
}
