//! Damper-count thresholds and aggregate damper locations.

use std::collections::BTreeMap;
use std::io::Write;

use super::{BenchError, ProblemCase, ResultRow};

/// Smallest damper count reaching the case optimum within a tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub case: ProblemCase,
    pub nd: usize,
    /// Minimum objective over every solver and damper count of the case.
    pub optimum: f64,
}

/// Per case: the optimum is the minimum objective over all solvers and damper
/// counts; the threshold is the smallest `nd` whose best objective is within
/// `(1 + tolerance)` of it. Every case must cover `nd = 1..=max`.
pub fn damper_threshold(rows: &[ResultRow], tolerance: f64) -> Result<Vec<Threshold>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyResults);
    }
    let mut best: BTreeMap<ProblemCase, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in rows {
        let slot = best
            .entry(r.case())
            .or_default()
            .entry(r.nd)
            .or_insert(f64::INFINITY);
        *slot = slot.min(r.objective);
    }
    let mut out = Vec::with_capacity(best.len());
    for (case, per_nd) in best {
        let max = *per_nd.keys().next_back().unwrap();
        if per_nd.len() != max || per_nd.keys().next() != Some(&1) {
            return Err(BenchError::Coverage(format!(
                "{case} lacks some damper counts in 1..={max}"
            )));
        }
        let optimum = per_nd.values().copied().fold(f64::INFINITY, f64::min);
        let limit = (1.0 + tolerance) * optimum;
        let nd = per_nd
            .iter()
            .find(|(_, &f)| f <= limit)
            .map(|(&nd, _)| nd)
            .expect("the optimum is attained");
        out.push(Threshold { case, nd, optimum });
    }
    Ok(out)
}

pub fn write_thresholds<W: Write>(writer: W, thresholds: &[Threshold]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["material", "height_case", "nd", "optimum"])?;
    for t in thresholds {
        w.write_record([
            t.case.material.to_string(),
            t.case.height_case.to_string(),
            t.nd.to_string(),
            format!("{:e}", t.optimum),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Floor counts over the best layout of each case at one damper count.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationHistogram {
    pub nd: usize,
    pub cases: usize,
    /// floor -> number of best layouts with a damper there
    pub counts: BTreeMap<usize, usize>,
}

impl LocationHistogram {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Most frequent floor; ties go to the lowest floor.
    pub fn mode(&self) -> Option<usize> {
        let max = *self.counts.values().max()?;
        self.counts.iter().find(|(_, &c)| c == max).map(|(&f, _)| f)
    }

    /// Shannon entropy (nats) of the floor distribution.
    pub fn entropy(&self) -> f64 {
        let total = self.total() as f64;
        if total == 0.0 {
            return 0.0;
        }
        self.counts
            .values()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.ln()
            })
            .sum()
    }
}

/// For every case with rows at `nd`, takes the layout with the lowest
/// objective (first in sorted order on ties) and counts its floors.
pub fn location_histogram(rows: &[ResultRow], nd: usize) -> LocationHistogram {
    let mut sorted: Vec<&ResultRow> = rows.iter().filter(|r| r.nd == nd).collect();
    sorted.sort_by(|a, b| {
        (a.material, a.height_case, a.solver, a.policy, a.seed).cmp(&(
            b.material,
            b.height_case,
            b.solver,
            b.policy,
            b.seed,
        ))
    });
    let mut best: BTreeMap<ProblemCase, &ResultRow> = BTreeMap::new();
    for r in sorted {
        best.entry(r.case())
            .and_modify(|b| {
                if r.objective < b.objective {
                    *b = r;
                }
            })
            .or_insert(r);
    }
    let mut counts = BTreeMap::new();
    for r in best.values() {
        for &f in &r.layout {
            *counts.entry(f).or_insert(0) += 1;
        }
    }
    LocationHistogram {
        nd,
        cases: best.len(),
        counts,
    }
}

/// `nd,floor,count` for every floor that appears in any histogram.
pub fn write_histograms<W: Write>(
    writer: W,
    histograms: &[LocationHistogram],
) -> Result<(), BenchError> {
    let floors = histograms
        .iter()
        .flat_map(|h| h.counts.keys().copied())
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["nd", "floor", "count"])?;
    for h in histograms {
        for floor in 1..=floors {
            w.write_record([
                h.nd.to_string(),
                floor.to_string(),
                h.counts.get(&floor).copied().unwrap_or(0).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
