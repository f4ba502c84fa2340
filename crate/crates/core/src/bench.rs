//! Scalability harness: generated instances of growing size, timed end to end.
//!
//! The CSV schema is documented in `docs/bench.md`.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::criteria::{objective_vector, CriteriaList};
use crate::gen::{gen_document, GenParams, RequestKind};
use crate::optimizer::{optimize, Budget, Outcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub size: usize,
    pub seed: u64,
    pub outcome: &'static str,
    /// Objective vector joined by `;`, empty without a solution.
    pub vector: String,
    pub millis: u128,
    pub sat_calls: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub vars: usize,
    pub clauses: usize,
}

pub const CSV_HEADER: &str = "size,seed,outcome,vector,millis,sat_calls,conflicts,decisions,vars,clauses";

impl BenchRow {
    /// The columns that must not change between runs.
    pub fn outcome_columns(&self) -> (usize, u64, &'static str, &str, u64, u64, usize, usize) {
        (
            self.size,
            self.seed,
            self.outcome,
            &self.vector,
            self.conflicts,
            self.decisions,
            self.vars,
            self.clauses,
        )
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.size,
            self.seed,
            self.outcome,
            self.vector,
            self.millis,
            self.sat_calls,
            self.conflicts,
            self.decisions,
            self.vars,
            self.clauses
        )
    }
}

/// Generates, solves and times one instance with a mixed request.
pub fn bench_one(size: usize, seed: u64, c: &CriteriaList, budget: Budget) -> BenchRow {
    let doc = gen_document(&GenParams::new(size, seed), RequestKind::Mixed);
    let u = doc.universe().expect("generated universes are well formed");
    let r = doc.request();
    let start = Instant::now();
    let report = optimize(&u, &r, c, budget);
    let millis = start.elapsed().as_millis();
    let (outcome, vector) = match &report.outcome {
        Outcome::Solution(s) => ("solution", Some(s)),
        Outcome::NoSolution => ("nosolution", None),
        Outcome::Unknown(_) => ("unknown", None),
    };
    let vector = vector
        .map(|s| {
            objective_vector(c, &u, s)
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default();
    BenchRow {
        size,
        seed,
        outcome,
        vector,
        millis,
        sat_calls: report.stats.sat_calls,
        conflicts: report.stats.conflicts,
        decisions: report.stats.decisions,
        vars: report.stats.vars,
        clauses: report.stats.clauses,
    }
}

/// One row per `(size, seed)`, sizes outermost. `parallel` trades timing
/// accuracy for throughput.
pub fn run_bench(sizes: &[usize], seeds: &[u64], c: &CriteriaList, budget: Budget, parallel: bool) -> Vec<BenchRow> {
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    if parallel {
        jobs.par_iter().map(|&(n, s)| bench_one(n, s, c, budget)).collect()
    } else {
        jobs.iter().map(|&(n, s)| bench_one(n, s, c, budget)).collect()
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv());
        out.push('\n');
    }
    out
}

fn median<T: Copy + Ord>(mut xs: Vec<T>) -> Option<T> {
    xs.sort_unstable();
    xs.get(xs.len() / 2).copied()
}

/// Per-size medians of time and encoding size, with outcome counts.
pub fn summary(rows: &[BenchRow]) -> String {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.dedup();
    let mut out = String::new();
    writeln!(
        out,
        "{:>8} {:>6} {:>8} {:>8} {:>8} {:>10} {:>10}",
        "size", "runs", "solved", "unsat", "unknown", "med_ms", "med_clauses"
    )
    .unwrap();
    for size in sizes {
        let group: Vec<&BenchRow> = rows.iter().filter(|r| r.size == size).collect();
        let count = |o: &str| group.iter().filter(|r| r.outcome == o).count();
        writeln!(
            out,
            "{:>8} {:>6} {:>8} {:>8} {:>8} {:>10} {:>10}",
            size,
            group.len(),
            count("solution"),
            count("nosolution"),
            count("unknown"),
            median(group.iter().map(|r| r.millis).collect()).unwrap_or(0),
            median(group.iter().map(|r| r.clauses).collect()).unwrap_or(0),
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_size_single_row() {
        let rows = run_bench(&[0], &[1], &CriteriaList::paranoid(), Budget::default(), false);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].outcome, "solution");
        assert_eq!(rows[0].vector, "0;0");
        assert!(to_csv(&rows).starts_with(CSV_HEADER));
    }

    #[test]
    fn outcomes_reproducible() {
        let c = CriteriaList::paranoid();
        let a = run_bench(&[30, 60], &[1, 2, 3], &c, Budget::default(), false);
        let b = run_bench(&[30, 60], &[1, 2, 3], &c, Budget::default(), true);
        let cols = |rows: &[BenchRow]| rows.iter().map(|r| r.outcome_columns()).map(|t| format!("{t:?}")).collect::<Vec<_>>();
        assert_eq!(cols(&a), cols(&b));
        assert!(summary(&a).contains("60"));
    }
}
