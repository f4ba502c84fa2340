//! DIMACS CNF reading and writing.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Lit, SolveResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
}

/// A parsed CNF formula.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

/// Parses DIMACS CNF. Comment lines start with `c`; clauses may span lines
/// and are terminated by `0`. A trailing clause without `0` is accepted.
pub fn parse(text: &str) -> Result<Cnf, DimacsError> {
    let mut cnf = Cnf::default();
    let mut header = false;
    let mut current = vec![];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = || DimacsError::Syntax {
                line: line_no,
                reason: format!("bad header {trimmed:?}"),
            };
            if header || parts.len() != 4 || parts[1] != "cnf" {
                return Err(bad());
            }
            cnf.num_vars = parts[2].parse().map_err(|_| bad())?;
            let _: usize = parts[3].parse().map_err(|_| bad())?;
            header = true;
            continue;
        }
        if !header {
            return Err(DimacsError::MissingHeader);
        }
        for token in trimmed.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| DimacsError::Syntax {
                line: line_no,
                reason: format!("bad literal {token:?}"),
            })?;
            if value == 0 {
                cnf.clauses.push(std::mem::take(&mut current));
            } else {
                if value.unsigned_abs() as usize > cnf.num_vars {
                    cnf.num_vars = value.unsigned_abs() as usize;
                }
                current.push(Lit::from_dimacs(value));
            }
        }
    }
    if !header {
        return Err(DimacsError::MissingHeader);
    }
    if !current.is_empty() {
        cnf.clauses.push(current);
    }
    Ok(cnf)
}

/// Writes a formula with the standard header and zero-terminated clauses.
pub fn write(num_vars: usize, clauses: &[Vec<Lit>]) -> String {
    let mut out = format!("p cnf {} {}\n", num_vars, clauses.len());
    for clause in clauses {
        for l in clause {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

/// Renders a solver answer in the competition output style.
pub fn format_result(result: &SolveResult, num_vars: usize) -> String {
    match result {
        SolveResult::Sat(model) => {
            let mut out = String::from("s SATISFIABLE\n");
            let values: Vec<String> = (0..num_vars)
                .map(|v| {
                    let x = v as i64 + 1;
                    if model.get(v).copied().unwrap_or(false) {
                        x.to_string()
                    } else {
                        (-x).to_string()
                    }
                })
                .chain(std::iter::once("0".to_string()))
                .collect();
            for chunk in values.chunks(10) {
                let _ = writeln!(out, "v {}", chunk.join(" "));
            }
            out
        }
        SolveResult::Unsat(_) => "s UNSATISFIABLE\n".to_string(),
        SolveResult::Unknown => "s UNKNOWN\n".to_string(),
    }
}
