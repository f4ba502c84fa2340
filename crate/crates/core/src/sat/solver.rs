//! Conflict-driven clause learning with two watched literals, activity-based
//! branching, phase saving, Luby restarts and activity-based learnt clause
//! deletion. Assumptions are placed on dedicated decision levels, so the same
//! solver can be queried repeatedly while clauses are added in between.

use std::time::Instant;

use thiserror::Error;

use super::heap::VarHeap;
use super::lit::{Lit, Var};
use crate::rng::SplitMix64;

const FALSE: u8 = 0;
const TRUE: u8 = 1;
const UNDEF: u8 = 2;

#[inline]
fn value(assigns: &[u8], l: Lit) -> u8 {
    let a = assigns[l.var().index()];
    if a == UNDEF {
        UNDEF
    } else {
        a ^ l.is_negated() as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("conflict at decision level zero: the formula is unsatisfiable")]
pub struct ConflictAtLevelZero;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    /// A total model, indexed by variable.
    Sat(Vec<bool>),
    /// A subset of the assumptions that is already unsatisfiable.
    Unsat(Vec<Lit>),
    /// The conflict budget or deadline ran out.
    Unknown,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat(_))
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub var_decay: f64,
    pub clause_decay: f64,
    /// Conflicts per Luby unit.
    pub restart_base: u64,
    pub random_var_freq: f64,
    pub seed: u64,
    /// Conflicts allowed per `solve` call; `None` means unlimited.
    pub conflict_budget: Option<u64>,
    pub deadline: Option<Instant>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            var_decay: 0.95,
            clause_decay: 0.999,
            restart_base: 100,
            random_var_freq: 0.01,
            seed: 91_648_253,
            conflict_budget: Some(1_000_000),
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub deleted_learnts: u64,
}

#[derive(Debug, Clone)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

enum SearchStatus {
    Sat,
    Unsat,
    Restart,
    OutOfBudget,
}

#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    stats: SolverStats,
    ok: bool,

    clauses: Vec<Clause>,
    free: Vec<u32>,
    learnts: Vec<u32>,
    n_original: usize,
    watches: Vec<Vec<Watcher>>,

    assigns: Vec<u8>,
    levels: Vec<u32>,
    reasons: Vec<Option<u32>>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,

    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    max_learnts: f64,
    rng: SplitMix64,
    core_buf: Vec<Lit>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(SolverConfig::default())
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        let rng = SplitMix64::new(config.seed);
        Solver {
            config,
            stats: SolverStats::default(),
            ok: true,
            clauses: vec![],
            free: vec![],
            learnts: vec![],
            n_original: 0,
            watches: vec![],
            assigns: vec![],
            levels: vec![],
            reasons: vec![],
            phase: vec![],
            seen: vec![],
            trail: vec![],
            trail_lim: vec![],
            qhead: 0,
            activity: vec![],
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            max_learnts: 0.0,
            rng,
            core_buf: vec![],
        }
    }

    pub fn config_mut(&mut self) -> &mut SolverConfig {
        &mut self.config
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.n_original
    }

    /// False once the clause database is known to be unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len();
        self.assigns.push(UNDEF);
        self.levels.push(0);
        self.reasons.push(None);
        self.phase.push(false);
        self.seen.push(false);
        self.activity.push(0.0);
        self.watches.push(vec![]);
        self.watches.push(vec![]);
        self.heap.insert(v as u32, &self.activity);
        Var(v as u32)
    }

    /// Allocates variables until `n` exist.
    pub fn ensure_vars(&mut self, n: usize) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    /// Sets the polarity tried first when branching on `var`.
    pub fn set_phase(&mut self, var: Var, value: bool) {
        self.ensure_vars(var.index() + 1);
        self.phase[var.index()] = value;
    }

    /// Value fixed at decision level zero, if any.
    pub fn root_value(&self, lit: Lit) -> Option<bool> {
        if lit.var().index() >= self.num_vars() {
            return None;
        }
        match value(&self.assigns, lit) {
            TRUE if self.levels[lit.var().index()] == 0 => Some(true),
            FALSE if self.levels[lit.var().index()] == 0 => Some(false),
            _ => None,
        }
    }

    /// Adds a clause at decision level zero, growing the variable set as needed.
    pub fn add_clause(&mut self, lits: &[Lit]) -> Result<(), ConflictAtLevelZero> {
        if !self.ok {
            return Err(ConflictAtLevelZero);
        }
        self.cancel_until(0);
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let mut c = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return Ok(());
        }
        if c.iter().any(|&l| value(&self.assigns, l) == TRUE) {
            return Ok(());
        }
        c.retain(|&l| value(&self.assigns, l) != FALSE);
        match c.len() {
            0 => {
                self.ok = false;
                Err(ConflictAtLevelZero)
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                    return Err(ConflictAtLevelZero);
                }
                Ok(())
            }
            _ => {
                let cref = self.alloc(c, false);
                self.attach(cref);
                self.n_original += 1;
                Ok(())
            }
        }
    }

    /// Learnt clauses currently in the database.
    pub fn learnt_clauses(&self) -> Vec<Vec<Lit>> {
        self.learnts
            .iter()
            .map(|&c| self.clauses[c as usize].lits.clone())
            .collect()
    }

    /// Solves under `assumptions`.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        if !self.ok {
            return SolveResult::Unsat(vec![]);
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        self.max_learnts = (self.n_original as f64 / 3.0).max(2000.0);
        let limit = self
            .config
            .conflict_budget
            .map(|b| self.stats.conflicts.saturating_add(b));
        let mut restarts = 0u32;
        loop {
            let budget = luby(2.0, restarts) * self.config.restart_base as f64;
            match self.search(budget as u64, assumptions, limit) {
                SearchStatus::Sat => {
                    let model = self.assigns.iter().map(|&a| a == TRUE).collect();
                    self.cancel_until(0);
                    return SolveResult::Sat(model);
                }
                SearchStatus::Unsat => {
                    self.cancel_until(0);
                    return SolveResult::Unsat(self.take_core());
                }
                SearchStatus::OutOfBudget => {
                    self.cancel_until(0);
                    return SolveResult::Unknown;
                }
                SearchStatus::Restart => {
                    restarts += 1;
                    self.stats.restarts += 1;
                    self.max_learnts *= 1.05;
                }
            }
        }
    }

    fn take_core(&mut self) -> Vec<Lit> {
        let mut core = std::mem::take(&mut self.core_buf);
        core.sort_unstable();
        core.dedup();
        core
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = !l.is_negated() as u8;
        self.levels[v] = self.decision_level() as u32;
        self.reasons[v] = reason;
        self.trail.push(l);
    }

    fn alloc(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let clause = Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        };
        match self.free.pop() {
            Some(cref) => {
                self.clauses[cref as usize] = clause;
                cref
            }
            None => {
                self.clauses.push(clause);
                (self.clauses.len() - 1) as u32
            }
        }
    }

    fn attach(&mut self, cref: u32) {
        let lits = &self.clauses[cref as usize].lits;
        let (a, b) = (lits[0], lits[1]);
        self.watches[a.code()].push(Watcher { cref, blocker: b });
        self.watches[b.code()].push(Watcher { cref, blocker: a });
    }

    fn new_decision_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = UNDEF;
            self.reasons[v] = None;
            self.phase[v] = !l.is_negated();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = self.trail.len();
    }

    /// Unit propagation; returns a conflicting clause if one is found.
    fn propagate(&mut self) -> Option<u32> {
        let level = self.decision_level() as u32;
        let Solver {
            assigns,
            levels,
            reasons,
            trail,
            clauses,
            watches,
            qhead,
            stats,
            ..
        } = self;
        let mut conflict = None;
        while *qhead < trail.len() {
            let p = trail[*qhead];
            *qhead += 1;
            stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut watches[false_lit.code()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if value(assigns, w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let clause = &mut clauses[cref as usize];
                if clause.lits[0] == false_lit {
                    clause.lits.swap(0, 1);
                }
                let first = clause.lits[0];
                if first != w.blocker && value(assigns, first) == TRUE {
                    ws[j] = Watcher {
                        cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.lits.len() {
                    let l = clause.lits[k];
                    if value(assigns, l) != FALSE {
                        clause.lits.swap(1, k);
                        watches[l.code()].push(Watcher {
                            cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher {
                    cref,
                    blocker: first,
                };
                j += 1;
                if value(assigns, first) == FALSE {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    let v = first.var().index();
                    assigns[v] = !first.is_negated() as u8;
                    levels[v] = level;
                    reasons[v] = Some(cref);
                    trail.push(first);
                }
            }
            ws.truncate(j);
            watches[false_lit.code()] = ws;
            if conflict.is_some() {
                *qhead = trail.len();
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest-level other literal second) and the backjump
    /// level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let level = self.decision_level() as u32;
        let mut learnt = vec![Lit::new(Var(0), false)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();

        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl as usize].lits.len() {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.levels[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.levels[v] >= level {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            self.seen[pl.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reasons[pl.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("analysis visits at least one literal");

        // drop literals implied by the rest of the clause
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let redundant = match self.reasons[l.var().index()] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..].iter().all(|q| {
                    let v = q.var().index();
                    self.seen[v] || self.levels[v] == 0
                }),
            };
            if !redundant {
                kept.push(l);
            }
        }
        for l in &learnt {
            self.seen[l.var().index()] = false;
        }

        let backjump = if kept.len() == 1 {
            0
        } else {
            let (best, _) = kept
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|&(i, l)| (self.levels[l.var().index()], std::cmp::Reverse(i)))
                .expect("clause has a second literal");
            kept.swap(1, best);
            self.levels[kept[1].var().index()] as usize
        };
        (kept, backjump)
    }

    /// Collects the assumptions responsible for assumption `p` being false.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut core = vec![p];
        if self.decision_level() == 0 {
            return core;
        }
        self.seen[p.var().index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reasons[v] {
                None => core.push(l),
                Some(r) => {
                    for k in 1..self.clauses[r as usize].lits.len() {
                        let q = self.clauses[r as usize].lits[k].var().index();
                        if self.levels[q] > 0 {
                            self.seen[q] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.var().index()] = false;
        core
    }

    fn locked(&self, cref: u32) -> bool {
        let first = self.clauses[cref as usize].lits[0];
        self.reasons[first.var().index()] == Some(cref) && value(&self.assigns, first) == TRUE
    }

    /// Removes roughly half of the learnt clauses, least active first.
    fn reduce_db(&mut self) {
        let mut order = std::mem::take(&mut self.learnts);
        order.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .total_cmp(&self.clauses[b as usize].activity)
                .then(a.cmp(&b))
        });
        let extra = self.cla_inc / order.len().max(1) as f64;
        let half = order.len() / 2;
        let mut kept = Vec::with_capacity(order.len());
        for (i, cref) in order.into_iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if c.lits.len() > 2 && !self.locked(cref) && (i < half || c.activity < extra) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = vec![];
                self.free.push(cref);
                self.stats.deleted_learnts += 1;
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch_lit(&mut self) -> Option<Lit> {
        if self.config.random_var_freq > 0.0
            && !self.heap.is_empty()
            && self.rng.chance(self.config.random_var_freq)
        {
            let v = self.heap.get(self.rng.below(self.heap.len() as u64) as usize);
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(Var(v), !self.phase[v as usize]));
            }
        }
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(Var(v), !self.phase[v as usize]));
            }
        }
        None
    }

    fn out_of_budget(&self, limit: Option<u64>) -> bool {
        if limit.is_some_and(|l| self.stats.conflicts >= l) {
            return true;
        }
        self.config.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn search(&mut self, nof_conflicts: u64, assumptions: &[Lit], limit: Option<u64>) -> SearchStatus {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    self.core_buf.clear();
                    return SearchStatus::Unsat;
                }
                let (learnt, backjump) = self.analyze(confl);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.alloc(learnt, true);
                    self.attach(cref);
                    self.learnts.push(cref);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= self.config.var_decay;
                self.cla_inc /= self.config.clause_decay;
                if self.out_of_budget(limit) {
                    return SearchStatus::OutOfBudget;
                }
                continue;
            }

            if conflicts >= nof_conflicts {
                self.cancel_until(0);
                return SearchStatus::Restart;
            }
            if self.out_of_budget(limit) {
                return SearchStatus::OutOfBudget;
            }
            if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                self.reduce_db();
            }

            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let p = assumptions[self.decision_level()];
                match value(&self.assigns, p) {
                    TRUE => self.new_decision_level(),
                    FALSE => {
                        self.core_buf = self.analyze_final(p);
                        return SearchStatus::Unsat;
                    }
                    _ => {
                        next = Some(p);
                        break;
                    }
                }
            }
            let next = match next {
                Some(p) => p,
                None => {
                    self.stats.decisions += 1;
                    match self.pick_branch_lit() {
                        Some(l) => l,
                        None => return SearchStatus::Sat,
                    }
                }
            };
            self.new_decision_level();
            self.enqueue(next, None);
        }
    }
}

/// The Luby sequence scaled by powers of `y`: 1 1 2 1 1 2 4 ...
fn luby(y: f64, mut x: u32) -> f64 {
    let (mut size, mut seq) = (1u64, 0i32);
    while size < x as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x as u64 {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size as u32;
    }
    y.powi(seq)
}
