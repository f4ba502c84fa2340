//! Test-side reference semantics, written from the definitions and sharing no
//! code with the library's checker, encoder or SAT engine.

#![allow(dead_code)]

use cudfsolve::criteria::{CriteriaList, Measure, Sense};
use cudfsolve::gen::{gen_document, GenParams, RequestKind};
use cudfsolve::model::{KeepLevel, PackageStanza, RelOp, Request, Solution, Universe, VpkgAtom};
use cudfsolve::sat::Lit;
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------- semantics

pub fn op_holds(op: RelOp, lhs: u64, rhs: u64) -> bool {
    match op {
        RelOp::Eq => lhs == rhs,
        RelOp::Neq => lhs != rhs,
        RelOp::Geq => lhs >= rhs,
        RelOp::Gt => lhs > rhs,
        RelOp::Leq => lhs <= rhs,
        RelOp::Lt => lhs < rhs,
    }
}

/// Does stanza `p` satisfy `atom`, by its own name or by a provide?
pub fn matches(p: &PackageStanza, atom: &VpkgAtom) -> bool {
    let direct = p.id.name == atom.name
        && atom
            .constraint
            .map_or(true, |(op, v)| op_holds(op, p.id.version.get(), v.get()));
    let provided = p.provides.iter().any(|(f, fv)| {
        f == &atom.name
            && match (atom.constraint, fv) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some((op, v)), Some(pv)) => op_holds(op, pv.get(), v.get()),
            }
    });
    direct || provided
}

fn members<'a>(u: &'a Universe, member: &'a [bool]) -> impl Iterator<Item = (usize, &'a PackageStanza)> + 'a {
    u.stanzas().iter().enumerate().filter(move |(i, _)| member[*i])
}

fn satisfied(u: &Universe, member: &[bool], atom: &VpkgAtom) -> bool {
    members(u, member).any(|(_, q)| matches(q, atom))
}

/// Full validity: consistency, request and keep.
pub fn valid(u: &Universe, r: &Request, member: &[bool]) -> bool {
    for (i, p) in members(u, member) {
        for disjunct in p.depends.conjuncts() {
            if !disjunct.iter().any(|a| satisfied(u, member, a)) {
                return false;
            }
        }
        for c in &p.conflicts {
            if members(u, member).any(|(j, q)| j != i && matches(q, c)) {
                return false;
            }
        }
    }
    if !r.install.iter().all(|a| satisfied(u, member, a)) {
        return false;
    }
    if r.remove.iter().any(|a| satisfied(u, member, a)) {
        return false;
    }
    for a in &r.upgrade {
        let chosen: Vec<u64> = members(u, member)
            .filter(|(_, p)| p.id.name == a.name)
            .map(|(_, p)| p.id.version.get())
            .collect();
        let floor = u
            .stanzas()
            .iter()
            .filter(|p| p.installed && p.id.name == a.name)
            .map(|p| p.id.version.get())
            .max()
            .unwrap_or(0);
        if chosen.len() != 1 {
            return false;
        }
        let v = chosen[0];
        if v < floor || !a.constraint.map_or(true, |(op, x)| op_holds(op, v, x.get())) {
            return false;
        }
    }
    for (i, p) in u.stanzas().iter().enumerate() {
        if !p.installed {
            continue;
        }
        let ok = match p.keep {
            KeepLevel::None => true,
            KeepLevel::Version => member[i],
            KeepLevel::Package => members(u, member).any(|(_, q)| q.id.name == p.id.name),
            KeepLevel::Feature => p.provides.iter().all(|(f, fv)| {
                let atom = VpkgAtom {
                    name: f.clone(),
                    constraint: fv.map(|v| (RelOp::Eq, v)),
                };
                satisfied(u, member, &atom)
            }),
        };
        if !ok {
            return false;
        }
    }
    true
}

fn version_sets(u: &Universe, pick: impl Fn(usize, &PackageStanza) -> bool) -> BTreeMap<String, BTreeSet<u64>> {
    let mut m: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
    for (i, p) in u.stanzas().iter().enumerate() {
        if pick(i, p) {
            m.entry(p.id.name.to_string()).or_default().insert(p.id.version.get());
        }
    }
    m
}

/// Measure value straight from its definition.
pub fn measure(m: Measure, u: &Universe, member: &[bool]) -> u64 {
    let before = version_sets(u, |_, p| p.installed);
    let after = version_sets(u, |i, _| member[i]);
    let all = version_sets(u, |_, _| true);
    let empty = BTreeSet::new();
    let names: BTreeSet<&String> = all.keys().collect();
    let count = |f: &dyn Fn(&BTreeSet<u64>, &BTreeSet<u64>, &BTreeSet<u64>) -> bool| -> u64 {
        names
            .iter()
            .filter(|n| {
                f(
                    before.get(**n).unwrap_or(&empty),
                    after.get(**n).unwrap_or(&empty),
                    &all[**n],
                )
            })
            .count() as u64
    };
    match m {
        Measure::Removed => count(&|b, a, _| !b.is_empty() && a.is_empty()),
        Measure::New => count(&|b, a, _| b.is_empty() && !a.is_empty()),
        Measure::Changed => count(&|b, a, _| b != a),
        Measure::NotUpToDate => count(&|_, a, all| a.last().is_some_and(|x| x < all.last().unwrap())),
        Measure::UnsatRecommends => members(u, member)
            .map(|(_, p)| {
                p.recommends
                    .conjuncts()
                    .iter()
                    .filter(|d| !d.iter().any(|a| satisfied(u, member, a)))
                    .count() as u64
            })
            .sum(),
    }
}

pub fn vector(c: &CriteriaList, u: &Universe, member: &[bool]) -> Vec<u64> {
    c.criteria().iter().map(|k| measure(k.measure, u, member)).collect()
}

/// Lexicographic "strictly better" with signs applied.
pub fn better(c: &CriteriaList, a: &[u64], b: &[u64]) -> bool {
    for (k, (x, y)) in c.criteria().iter().zip(a.iter().zip(b)) {
        if x != y {
            return match k.sense {
                Sense::Minimize => x < y,
                Sense::Maximize => x > y,
            };
        }
    }
    false
}

pub fn membership(u: &Universe, s: &Solution) -> Vec<bool> {
    u.stanzas().iter().map(|p| s.contains(&p.id)).collect()
}

/// Every valid membership vector, by plain counting order.
pub fn feasible(u: &Universe, r: &Request) -> Vec<Vec<bool>> {
    let n = u.len();
    assert!(n <= 20);
    (0u32..1 << n)
        .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<bool>>())
        .filter(|m| valid(u, r, m))
        .collect()
}

/// Optimal vector over `feasible`, or `None` when it is empty.
pub fn optimum(c: &CriteriaList, u: &Universe, feasible: &[Vec<bool>]) -> Option<Vec<u64>> {
    let mut best: Option<Vec<u64>> = None;
    for m in feasible {
        let v = vector(c, u, m);
        if best.as_ref().is_none_or(|b| better(c, &v, b)) {
            best = Some(v);
        }
    }
    best
}

// ---------------------------------------------------------------- corpus

pub struct Instance {
    pub seed: u64,
    pub universe: Universe,
    pub request: Request,
}

const KINDS: [RequestKind; 4] = [
    RequestKind::Install,
    RequestKind::Remove,
    RequestKind::Upgrade,
    RequestKind::Mixed,
];

pub fn params(seed: u64, size: usize) -> GenParams {
    GenParams {
        n_packages: size,
        versions_per_name: (1, 3),
        dep_density: if seed & 1 == 0 { 0.3 } else { 0.5 },
        conflict_density: if seed & 2 == 0 { 0.1 } else { 0.25 },
        installed_fraction: if seed & 4 == 0 { 0.3 } else { 0.5 },
        seed,
    }
}

pub fn instance(seed: u64, size: usize) -> Instance {
    let doc = gen_document(&params(seed, size), KINDS[(seed / 8 % 4) as usize]);
    Instance {
        seed,
        universe: doc.universe().unwrap(),
        request: doc.request(),
    }
}

/// `count` small instances with 4 to 12 package versions.
pub fn small_corpus(count: u64) -> Vec<Instance> {
    (0..count).map(|seed| instance(seed, 4 + (seed % 9) as usize)).collect()
}

pub fn criteria_lists() -> Vec<(&'static str, CriteriaList)> {
    ["paranoid", "trendy", "-changed,-removed", "+new,-removed"]
        .into_iter()
        .map(|t| (t, cudfsolve::parse_criteria(t).unwrap()))
        .collect()
}

// ---------------------------------------------------------------- CNF

pub fn lit_true(l: Lit, model: &[bool]) -> bool {
    model[l.var().index()] != l.is_negated()
}

pub fn satisfies(clauses: &[Vec<Lit>], model: &[bool]) -> bool {
    clauses.iter().all(|c| c.iter().any(|&l| lit_true(l, model)))
}

/// Number of satisfying assignments over `n ≤ 20` variables, using bitmasks.
pub fn count_models(n: usize, clauses: &[Vec<Lit>]) -> u64 {
    let masks: Vec<(u32, u32)> = clauses
        .iter()
        .map(|c| {
            c.iter().fold((0, 0), |(pos, neg), l| {
                let bit = 1u32 << l.var().index();
                if l.is_negated() {
                    (pos, neg | bit)
                } else {
                    (pos | bit, neg)
                }
            })
        })
        .collect();
    (0u32..1 << n)
        .filter(|&a| masks.iter().all(|&(pos, neg)| a & pos != 0 || !a & neg != 0))
        .count() as u64
}

/// Unit propagation to fixpoint; `Err` on conflict.
pub fn propagate(clauses: &[Vec<Lit>], assign: &mut [Option<bool>]) -> Result<(), ()> {
    loop {
        let mut changed = false;
        for c in clauses {
            let mut unassigned = None;
            let mut open = 0;
            let mut sat = false;
            for &l in c {
                match assign[l.var().index()] {
                    Some(v) if v != l.is_negated() => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            match open {
                0 => return Err(()),
                1 => {
                    let l = unassigned.unwrap();
                    assign[l.var().index()] = Some(!l.is_negated());
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Plain recursive DPLL: a model extending `assign`, if one exists.
pub fn dpll(clauses: &[Vec<Lit>], assign: &mut Vec<Option<bool>>) -> bool {
    if propagate(clauses, assign).is_err() {
        return false;
    }
    let Some(v) = assign.iter().position(Option::is_none) else {
        return true;
    };
    for value in [false, true] {
        let mut next = assign.clone();
        next[v] = Some(value);
        if dpll(clauses, &mut next) {
            *assign = next;
            return true;
        }
    }
    false
}

/// Seeded random k-CNF via the library's documented generator stream.
pub fn random_cnf(rng: &mut cudfsolve::rng::SplitMix64, n: usize, m: usize, k: usize) -> Vec<Vec<Lit>> {
    (0..m)
        .map(|_| {
            let width = if k == 0 { 1 + rng.below(4) as usize } else { k };
            (0..width)
                .map(|_| {
                    let v = rng.below(n as u64) as i64 + 1;
                    Lit::from_dimacs(if rng.chance(0.5) { v } else { -v })
                })
                .collect()
        })
        .collect()
}
