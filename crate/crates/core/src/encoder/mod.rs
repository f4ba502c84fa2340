//! Translation of universes, requests and criteria into clauses.
//!
//! Every package version gets one boolean variable: stanza index `i` of the
//! universe is variable `i`. Auxiliary variables for counters and objective
//! definitions are allocated above the package variables.

mod card;

use std::collections::HashSet;

pub use card::{at_most_one, cardinality_leq, totalizer};

use crate::criteria::{Criterion, Measure, Sense};
use crate::model::{KeepLevel, PackageId, RelOp, Request, Universe, VpkgAtom};
use crate::sat::{dimacs, Lit, Var};

/// Bijection between package ids and variables, plus the auxiliary counter.
#[derive(Debug, Clone)]
pub struct VarMap {
    ids: Vec<PackageId>,
    packages: usize,
    next: u32,
}

impl VarMap {
    pub fn new(u: &Universe) -> Self {
        VarMap {
            ids: u.ids().cloned().collect(),
            packages: u.len(),
            next: u.len() as u32,
        }
    }

    /// A map with `n` anonymous package variables, for encoding gadgets alone.
    pub fn with_packages(n: usize) -> Self {
        VarMap {
            ids: vec![],
            packages: n,
            next: n as u32,
        }
    }

    pub fn num_packages(&self) -> usize {
        self.packages
    }

    pub fn num_vars(&self) -> usize {
        self.next as usize
    }

    pub fn package_var(&self, index: usize) -> Var {
        debug_assert!(index < self.packages);
        Var(index as u32)
    }

    pub fn var_of(&self, id: &PackageId) -> Option<Var> {
        self.ids.binary_search(id).ok().map(|i| Var(i as u32))
    }

    pub fn id_of(&self, var: Var) -> Option<&PackageId> {
        self.ids.get(var.index())
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var(self.next);
        self.next += 1;
        v
    }
}

/// A list of clauses. Duplicate literals are merged and tautologies dropped on
/// insertion; the empty clause is kept (it makes the set unsatisfiable).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseSet {
    clauses: Vec<Vec<Lit>>,
}

impl ClauseSet {
    pub fn push(&mut self, mut clause: Vec<Lit>) {
        clause.sort_unstable();
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        self.clauses.push(clause);
    }

    pub fn append(&mut self, other: ClauseSet) {
        self.clauses.extend(other.clauses);
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec<Lit>> {
        self.clauses.iter()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn to_dimacs(&self, num_vars: usize) -> String {
        dimacs::write(num_vars, &self.clauses)
    }
}

/// One optimization criterion as weighted literals plus their definitions.
#[derive(Debug, Clone)]
pub struct ObjectiveLayer {
    pub terms: Vec<(u64, Lit)>,
    pub sense: Sense,
    pub defining_clauses: ClauseSet,
}

impl ObjectiveLayer {
    pub fn total_weight(&self) -> u64 {
        self.terms.iter().map(|&(w, _)| w).sum()
    }

    /// Weighted sum of the terms true in `model`.
    pub fn value(&self, model: &[bool]) -> u64 {
        self.terms
            .iter()
            .filter(|(_, l)| model[l.var().index()] != l.is_negated())
            .map(|&(w, _)| w)
            .sum()
    }
}

fn pkg(i: usize) -> Lit {
    Var(i as u32).positive()
}

fn provider_lits(u: &Universe, atom: &VpkgAtom) -> Vec<Lit> {
    u.provider_indices(atom).into_iter().map(pkg).collect()
}

/// Dependency and conflict clauses of every stanza.
pub fn encode_universe(u: &Universe, vm: &VarMap) -> ClauseSet {
    debug_assert_eq!(vm.num_packages(), u.len());
    let mut out = ClauseSet::default();
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for (i, p) in u.stanzas().iter().enumerate() {
        let x = pkg(i);
        for disjunct in p.depends.conjuncts() {
            let mut clause = vec![!x];
            for atom in disjunct {
                clause.extend(provider_lits(u, atom));
            }
            out.push(clause);
        }
        for atom in &p.conflicts {
            for q in u.provider_indices(atom) {
                if q == i {
                    continue;
                }
                let pair = (i.min(q), i.max(q));
                if pairs.insert(pair) {
                    out.push(vec![!pkg(pair.0), !pkg(pair.1)]);
                }
            }
        }
    }
    out
}

/// Clauses for the install, remove and upgrade lists of `r`.
pub fn encode_request(u: &Universe, vm: &mut VarMap, r: &Request) -> ClauseSet {
    let mut out = ClauseSet::default();
    for atom in &r.install {
        out.push(provider_lits(u, atom));
    }
    for atom in &r.remove {
        for l in provider_lits(u, atom) {
            out.push(vec![!l]);
        }
    }
    for atom in &r.upgrade {
        let range = u.name_range(&atom.name);
        let newest_installed = range
            .clone()
            .filter(|&i| u.stanza(i).installed)
            .map(|i| u.stanza(i).id.version)
            .max();
        out.push(
            range
                .clone()
                .filter(|&i| atom.accepts(u.stanza(i).id.version))
                .map(pkg)
                .collect(),
        );
        if let Some(floor) = newest_installed {
            for i in range.clone() {
                if u.stanza(i).id.version < floor {
                    out.push(vec![!pkg(i)]);
                }
            }
        }
        let versions: Vec<Lit> = range.map(pkg).collect();
        at_most_one(&versions, vm, &mut out);
    }
    out
}

/// Clauses for the `keep` flags of installed stanzas.
pub fn encode_keep(u: &Universe, _vm: &VarMap) -> ClauseSet {
    let mut out = ClauseSet::default();
    for (i, p) in u.stanzas().iter().enumerate() {
        if !p.installed {
            continue;
        }
        match p.keep {
            KeepLevel::None => {}
            KeepLevel::Version => out.push(vec![pkg(i)]),
            KeepLevel::Package => out.push(u.name_range(&p.id.name).map(pkg).collect()),
            KeepLevel::Feature => {
                for (feature, version) in &p.provides {
                    let atom = match version {
                        Some(v) => VpkgAtom::with(feature.clone(), RelOp::Eq, *v),
                        None => VpkgAtom::any(feature.clone()),
                    };
                    out.push(provider_lits(u, &atom));
                }
            }
        }
    }
    out
}

/// `a ↔ (l1 ∨ … ∨ ln)`; returns the single literal itself when `n = 1`.
fn define_or(lits: Vec<Lit>, vm: &mut VarMap, out: &mut ClauseSet) -> Option<Lit> {
    match lits.len() {
        0 => None,
        1 => Some(lits[0]),
        _ => {
            let a = vm.fresh().positive();
            let mut wide = vec![!a];
            for &l in &lits {
                out.push(vec![a, !l]);
                wide.push(l);
            }
            out.push(wide);
            Some(a)
        }
    }
}

/// `a ↔ (l1 ∧ … ∧ ln)`; returns the single literal itself when `n = 1`.
fn define_and(lits: Vec<Lit>, vm: &mut VarMap, out: &mut ClauseSet) -> Option<Lit> {
    define_or(lits.into_iter().map(|l| !l).collect(), vm, out).map(|l| !l)
}

/// Objective terms whose weighted sum equals the criterion's measure on the
/// solution read off any model of the defining clauses.
pub fn build_objective(u: &Universe, vm: &mut VarMap, c: &Criterion) -> ObjectiveLayer {
    let mut defs = ClauseSet::default();
    let mut terms = vec![];
    let names: Vec<_> = u.names().cloned().collect();
    match c.measure {
        Measure::Removed | Measure::New => {
            let removed = c.measure == Measure::Removed;
            for name in &names {
                let range = u.name_range(name);
                let was_installed = range.clone().any(|i| u.stanza(i).installed);
                if was_installed != removed {
                    continue;
                }
                let lits: Vec<Lit> = range.map(pkg).collect();
                let term = if removed {
                    define_and(lits.into_iter().map(|l| !l).collect(), vm, &mut defs)
                } else {
                    define_or(lits, vm, &mut defs)
                };
                terms.extend(term.map(|l| (1, l)));
            }
        }
        Measure::Changed => {
            for name in &names {
                let flips: Vec<Lit> = u
                    .name_range(name)
                    .map(|i| if u.stanza(i).installed { !pkg(i) } else { pkg(i) })
                    .collect();
                terms.extend(define_or(flips, vm, &mut defs).map(|l| (1, l)));
            }
        }
        Measure::NotUpToDate => {
            for name in &names {
                let range = u.name_range(name);
                if range.len() < 2 {
                    continue;
                }
                let newest = pkg(range.end - 1);
                let older: Vec<Lit> = (range.start..range.end - 1).map(pkg).collect();
                let any_older = define_or(older, vm, &mut defs).expect("at least one older version");
                terms.extend(define_and(vec![!newest, any_older], vm, &mut defs).map(|l| (1, l)));
            }
        }
        Measure::UnsatRecommends => {
            for (i, p) in u.stanzas().iter().enumerate() {
                for disjunct in p.recommends.conjuncts() {
                    let mut providers: Vec<usize> = disjunct
                        .iter()
                        .flat_map(|atom| u.provider_indices(atom))
                        .collect();
                    providers.sort_unstable();
                    providers.dedup();
                    if providers.contains(&i) {
                        continue;
                    }
                    let mut lits = vec![pkg(i)];
                    lits.extend(providers.into_iter().map(|q| !pkg(q)));
                    terms.extend(define_and(lits, vm, &mut defs).map(|l| (1, l)));
                }
            }
        }
    }
    ObjectiveLayer {
        terms,
        sense: c.sense,
        defining_clauses: defs,
    }
}

/// Encodes universe, request and keep flags together.
pub fn encode_problem(u: &Universe, r: &Request) -> (VarMap, ClauseSet) {
    let mut vm = VarMap::new(u);
    let mut clauses = encode_universe(u, &vm);
    clauses.append(encode_request(u, &mut vm, r));
    clauses.append(encode_keep(u, &vm));
    (vm, clauses)
}
