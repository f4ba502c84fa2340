//! Lexicographic optimization of upgrade problems over the CDCL core.
//!
//! Each criterion becomes a layer of weighted literals. Layers are minimized
//! in priority order by binary search on a totalizer bound, asserted through
//! assumptions; the optimum of a layer is then frozen with a permanent unit
//! before the next layer starts. A final pass fixes package variables one by
//! one so that co-optimal answers are canonical.

use std::time::{Duration, Instant};

use crate::criteria::{CriteriaList, Sense};
use crate::encoder::{build_objective, encode_problem, totalizer, ClauseSet, ObjectiveLayer, VarMap};
use crate::model::{Request, Solution, Universe};
use crate::sat::{Lit, SolveResult, Solver, SolverConfig};

/// Resource limits for one [`solve_upgrade`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Total conflicts over every SAT call; `None` is unlimited.
    pub conflicts: Option<u64>,
    pub time: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            conflicts: Some(1_000_000),
            time: None,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            conflicts: None,
            time: None,
        }
    }

    pub fn conflicts(n: u64) -> Self {
        Budget {
            conflicts: Some(n),
            time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solution(Solution),
    NoSolution,
    /// The budget ran out; carries the best feasible solution seen, if any.
    Unknown(Option<Solution>),
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solution(s) | Outcome::Unknown(Some(s)) => Some(s),
            _ => None,
        }
    }

    pub fn is_solution(&self) -> bool {
        matches!(self, Outcome::Solution(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OptimizerStats {
    pub sat_calls: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    /// Variables and clauses of the encoding before any search.
    pub vars: usize,
    pub clauses: usize,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub outcome: Outcome,
    pub stats: OptimizerStats,
}

/// Componentwise measure values of `s`, one per criterion.
pub fn objective_vector(u: &Universe, c: &CriteriaList, s: &Solution) -> Vec<u64> {
    crate::criteria::objective_vector(c, u, s)
}

/// Solves `(u, r)` optimally under `c`.
pub fn solve_upgrade(u: &Universe, r: &Request, c: &CriteriaList, budget: Budget) -> Outcome {
    optimize(u, r, c, budget).outcome
}

/// Like [`solve_upgrade`], also returning search statistics.
pub fn optimize(u: &Universe, r: &Request, c: &CriteriaList, budget: Budget) -> Report {
    let (mut vm, mut clauses) = encode_problem(u, r);
    let layers: Vec<ObjectiveLayer> = c
        .criteria()
        .iter()
        .map(|criterion| build_objective(u, &mut vm, criterion))
        .collect();
    for layer in &layers {
        clauses.append(layer.defining_clauses.clone());
    }

    let mut run = Run::new(u, &vm, &clauses, budget);
    let outcome = run.go(layers, vm);
    let solver_stats = run.solver.stats();
    Report {
        outcome,
        stats: OptimizerStats {
            sat_calls: run.calls,
            conflicts: solver_stats.conflicts,
            decisions: solver_stats.decisions,
            propagations: solver_stats.propagations,
            vars: run.encoded_vars,
            clauses: clauses.len(),
        },
    }
}

struct Run<'a> {
    u: &'a Universe,
    solver: Solver,
    budget: Budget,
    calls: u64,
    encoded_vars: usize,
    base_ok: bool,
    best: Option<Vec<bool>>,
}

/// A search step ended without an answer.
struct OutOfBudget;

impl<'a> Run<'a> {
    fn new(u: &'a Universe, vm: &VarMap, clauses: &ClauseSet, budget: Budget) -> Self {
        let config = SolverConfig {
            deadline: budget.time.map(|t| Instant::now() + t),
            ..SolverConfig::default()
        };
        let mut solver = Solver::new(config);
        solver.ensure_vars(vm.num_vars());
        for (i, p) in u.stanzas().iter().enumerate() {
            solver.set_phase(vm.package_var(i), p.installed);
        }
        let base_ok = clauses.iter().all(|c| solver.add_clause(c).is_ok());
        Run {
            u,
            solver,
            budget,
            calls: 0,
            encoded_vars: vm.num_vars(),
            base_ok,
            best: None,
        }
    }

    fn solution(&self, model: &[bool]) -> Solution {
        (0..self.u.len())
            .filter(|&i| model[i])
            .map(|i| self.u.stanza(i).id.clone())
            .collect()
    }

    fn unknown(&self) -> Outcome {
        Outcome::Unknown(self.best.as_deref().map(|m| self.solution(m)))
    }

    fn solve(&mut self, assumptions: &[Lit]) -> Result<Option<Vec<bool>>, OutOfBudget> {
        let used = self.solver.stats().conflicts;
        let remaining = match self.budget.conflicts {
            Some(total) if used >= total => return Err(OutOfBudget),
            Some(total) => Some(total - used),
            None => None,
        };
        self.solver.config_mut().conflict_budget = remaining;
        self.calls += 1;
        match self.solver.solve(assumptions) {
            SolveResult::Sat(model) => {
                self.best = Some(model.clone());
                Ok(Some(model))
            }
            SolveResult::Unsat(_) => Ok(None),
            SolveResult::Unknown => Err(OutOfBudget),
        }
    }

    fn commit(&mut self, lit: Lit) {
        self.solver
            .add_clause(&[lit])
            .expect("committed literal is consistent with a known model");
    }

    fn go(&mut self, layers: Vec<ObjectiveLayer>, mut vm: VarMap) -> Outcome {
        if !self.base_ok {
            return Outcome::NoSolution;
        }
        let mut model = match self.solve(&[]) {
            Ok(Some(m)) => m,
            Ok(None) => return Outcome::NoSolution,
            Err(OutOfBudget) => return self.unknown(),
        };
        for layer in layers {
            match self.minimize_layer(&layer, &mut vm, model) {
                Ok(m) => model = m,
                Err(OutOfBudget) => return self.unknown(),
            }
        }
        match self.canonicalize(model) {
            Ok(m) => Outcome::Solution(self.solution(&m)),
            Err(OutOfBudget) => self.unknown(),
        }
    }

    /// Minimizes one layer starting from a model of everything frozen so far,
    /// freezes its optimum and returns an optimal model.
    fn minimize_layer(
        &mut self,
        layer: &ObjectiveLayer,
        vm: &mut VarMap,
        mut model: Vec<bool>,
    ) -> Result<Vec<bool>, OutOfBudget> {
        // maximizing Σ w·l is minimizing Σ w·¬l
        let terms: Vec<(u64, Lit)> = match layer.sense {
            Sense::Minimize => layer.terms.clone(),
            Sense::Maximize => layer.terms.iter().map(|&(w, l)| (w, !l)).collect(),
        };
        if terms.is_empty() {
            return Ok(model);
        }
        let cost = |m: &[bool]| -> u64 {
            terms
                .iter()
                .filter(|(_, l)| m[l.var().index()] != l.is_negated())
                .map(|&(w, _)| w)
                .sum()
        };
        let mut hi = cost(&model);
        if hi == 0 {
            for &(_, l) in &terms {
                self.commit(!l);
            }
            return Ok(model);
        }

        let mut gadget = ClauseSet::default();
        let outputs = totalizer(&terms, hi + 1, vm, &mut gadget);
        self.solver.ensure_vars(vm.num_vars());
        for clause in gadget.iter() {
            self.solver
                .add_clause(clause)
                .expect("counter clauses only constrain fresh outputs");
        }

        let mut lo = 0;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match self.solve(&[!outputs[mid as usize]])? {
                Some(m) => {
                    hi = cost(&m);
                    model = m;
                }
                None => lo = mid + 1,
            }
        }
        if let Some(&o) = outputs.get(hi as usize) {
            self.commit(!o);
        }
        Ok(model)
    }

    /// Names in lexicographic order: a name absent initially is kept absent if
    /// possible; otherwise its highest feasible version is fixed installed and
    /// the remaining versions are removed where possible. Each decision is
    /// committed permanently.
    fn canonicalize(&mut self, mut model: Vec<bool>) -> Result<Vec<bool>, OutOfBudget> {
        let names: Vec<_> = self.u.names().cloned().collect();
        for name in names {
            let range = self.u.name_range(&name);
            let was_installed = range.clone().any(|i| self.u.stanza(i).installed);

            if !was_installed {
                let absent: Vec<Lit> = range.clone().map(|i| lit(i, false)).collect();
                if !range.clone().any(|i| model[i]) {
                    absent.iter().for_each(|&l| self.commit(l));
                    continue;
                }
                if let Some(m) = self.solve(&absent)? {
                    model = m;
                    absent.iter().for_each(|&l| self.commit(l));
                    continue;
                }
            }

            let mut chosen = None;
            for i in range.clone().rev() {
                if model[i] {
                    chosen = Some(i);
                } else if let Some(m) = self.solve(&[lit(i, true)])? {
                    model = m;
                    chosen = Some(i);
                }
                if chosen.is_some() {
                    self.commit(lit(i, true));
                    break;
                }
                self.commit(lit(i, false));
            }
            let Some(top) = chosen else { continue };
            for i in (range.start..top).rev() {
                if !model[i] {
                    self.commit(lit(i, false));
                } else if let Some(m) = self.solve(&[lit(i, false)])? {
                    model = m;
                    self.commit(lit(i, false));
                } else {
                    self.commit(lit(i, true));
                }
            }
        }
        Ok(model)
    }
}

fn lit(index: usize, value: bool) -> Lit {
    Lit::new(crate::sat::Var(index as u32), !value)
}
