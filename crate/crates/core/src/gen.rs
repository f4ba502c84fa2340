//! Seeded random universes and requests.
//!
//! The draw order is fixed and documented in `docs/generator.md`; changing it
//! changes every generated corpus.

use std::str::FromStr;

use crate::cudf::{CudfDocument, RequestStanza};
use crate::model::{
    KeepLevel, PackageId, PackageName, PackageStanza, RelOp, Request, Universe, Version, VpkgAtom,
    VpkgFormula,
};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Total number of package versions.
    pub n_packages: usize,
    /// Inclusive range of versions drawn per name.
    pub versions_per_name: (u64, u64),
    pub dep_density: f64,
    pub conflict_density: f64,
    pub installed_fraction: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_packages: 12,
            versions_per_name: (1, 3),
            dep_density: 0.3,
            conflict_density: 0.1,
            installed_fraction: 0.3,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn new(n_packages: usize, seed: u64) -> Self {
        GenParams {
            n_packages,
            seed,
            ..Default::default()
        }
    }
}

const MAX_CONJUNCTS: usize = 3;
const UNSAT_BOUND_P: f64 = 0.05;
const FEATURE_P: f64 = 0.1;
const KEEP_P: f64 = 0.1;

fn pname(k: usize) -> PackageName {
    PackageName::new(format!("p{k}")).expect("generated names are valid")
}

fn fname(k: u64) -> PackageName {
    PackageName::new(format!("feat{k}")).expect("generated names are valid")
}

fn ver(v: u64) -> Version {
    Version::new(v).expect("generated versions are positive")
}

/// Index of another name than `own`, or `None` when there is no other.
fn other_name(rng: &mut SplitMix64, own: usize, n_names: usize) -> Option<usize> {
    if n_names < 2 {
        return None;
    }
    Some((own + 1 + rng.below(n_names as u64 - 1) as usize) % n_names)
}

const DEP_OPS: [RelOp; 4] = [RelOp::Geq, RelOp::Leq, RelOp::Eq, RelOp::Neq];
const CONFLICT_OPS: [RelOp; 3] = [RelOp::Eq, RelOp::Geq, RelOp::Leq];

/// Stanzas of a random universe, in generation order.
pub fn gen_stanzas(p: &GenParams) -> Vec<PackageStanza> {
    let mut rng = SplitMix64::new(p.seed);
    let (lo, hi) = (p.versions_per_name.0.max(1), p.versions_per_name.1.max(p.versions_per_name.0.max(1)));

    let mut counts: Vec<u64> = vec![];
    let mut total = 0usize;
    while total < p.n_packages {
        let drawn = lo + rng.below(hi - lo + 1);
        let count = drawn.min((p.n_packages - total) as u64);
        counts.push(count);
        total += count as usize;
    }
    let n_names = counts.len();
    let n_features = (n_names / 4).max(1) as u64;

    let mut stanzas: Vec<PackageStanza> = vec![];
    let mut owner: Vec<usize> = vec![];
    for (k, &count) in counts.iter().enumerate() {
        for v in 1..=count {
            let mut s = PackageStanza::new(PackageId::new(pname(k), ver(v)));
            s.installed = rng.chance(p.installed_fraction);
            if rng.chance(FEATURE_P) {
                let f = fname(rng.below(n_features));
                let fv = if rng.chance(0.5) { Some(ver(1 + rng.below(3))) } else { None };
                s.provides.push((f, fv));
            }
            stanzas.push(s);
            owner.push(k);
        }
    }
    let provided: Vec<PackageName> = {
        let mut fs: Vec<PackageName> = stanzas
            .iter()
            .flat_map(|s| s.provides.iter().map(|(f, _)| f.clone()))
            .collect();
        fs.sort();
        fs.dedup();
        fs
    };

    for (idx, s) in stanzas.iter_mut().enumerate() {
        let own = owner[idx];

        let mut conjuncts = vec![];
        for _ in 0..MAX_CONJUNCTS {
            if !rng.chance(p.dep_density) {
                continue;
            }
            let width = 1 + rng.below(2);
            let mut disjunct = vec![];
            for _ in 0..width {
                if !provided.is_empty() && rng.chance(FEATURE_P) {
                    let f = provided[rng.below(provided.len() as u64) as usize].clone();
                    disjunct.push(VpkgAtom::any(f));
                    continue;
                }
                let Some(target) = other_name(&mut rng, own, n_names) else { continue };
                let newest = counts[target];
                let atom = if rng.chance(UNSAT_BOUND_P) {
                    VpkgAtom::with(pname(target), RelOp::Gt, ver(newest))
                } else if rng.chance(0.5) {
                    VpkgAtom::any(pname(target))
                } else {
                    let op = DEP_OPS[rng.below(DEP_OPS.len() as u64) as usize];
                    VpkgAtom::with(pname(target), op, ver(1 + rng.below(newest)))
                };
                disjunct.push(atom);
            }
            if !disjunct.is_empty() {
                conjuncts.push(disjunct);
            }
        }
        s.depends = VpkgFormula::cnf(conjuncts);

        if rng.chance(p.conflict_density) {
            if let Some(target) = other_name(&mut rng, own, n_names) {
                let atom = if rng.chance(0.5) {
                    VpkgAtom::any(pname(target))
                } else {
                    let op = CONFLICT_OPS[rng.below(CONFLICT_OPS.len() as u64) as usize];
                    VpkgAtom::with(pname(target), op, ver(1 + rng.below(counts[target])))
                };
                s.conflicts.push(atom);
            }
        }

        if rng.chance(p.dep_density / 2.0) {
            if let Some(target) = other_name(&mut rng, own, n_names) {
                s.recommends = VpkgFormula::cnf(vec![vec![VpkgAtom::any(pname(target))]]);
            }
        }

        if s.installed && rng.chance(KEEP_P) {
            s.keep = match rng.below(3) {
                0 => KeepLevel::Version,
                1 => KeepLevel::Package,
                _ => KeepLevel::Feature,
            };
        }
    }
    settle_installation(&mut stanzas);
    stanzas
}

/// Clears installed marks until the installation is consistent: every
/// installed stanza has its dependencies met and no conflicting stanza
/// installed. Drops are made in id order and draw nothing from the stream.
fn settle_installation(stanzas: &mut [PackageStanza]) {
    let u = Universe::new(stanzas.to_vec()).expect("generated ids are unique");
    let mut on: Vec<bool> = u.stanzas().iter().map(|s| s.installed).collect();
    let atoms: Vec<(Vec<Vec<usize>>, Vec<usize>)> = u
        .stanzas()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let deps = p.depends.conjuncts().iter().map(|d| d.iter().flat_map(|a| u.provider_indices(a)).collect()).collect();
            let conflicts = p.conflicts.iter().flat_map(|a| u.provider_indices(a)).filter(|&j| j != i).collect();
            (deps, conflicts)
        })
        .collect();
    loop {
        let mut changed = false;
        for (i, (deps, conflicts)) in atoms.iter().enumerate() {
            if !on[i] {
                continue;
            }
            let broken = deps.iter().any(|d| !d.iter().any(|&j| on[j])) || conflicts.iter().any(|&j| on[j]);
            if broken {
                on[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for s in stanzas.iter_mut() {
        if !on[u.index_of(&s.id).expect("same ids")] {
            s.installed = false;
            s.keep = KeepLevel::None;
        }
    }
}

/// A random universe; see [`gen_stanzas`].
pub fn gen_universe(p: &GenParams) -> Universe {
    Universe::new(gen_stanzas(p)).expect("generated ids are unique")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestKind {
    Install,
    Remove,
    Upgrade,
    Mixed,
}

impl FromStr for RequestKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "install" => Ok(RequestKind::Install),
            "remove" => Ok(RequestKind::Remove),
            "upgrade" => Ok(RequestKind::Upgrade),
            "mixed" => Ok(RequestKind::Mixed),
            other => Err(format!("unknown request kind {other:?} (install|remove|upgrade|mixed)")),
        }
    }
}

/// A random request over the names of `u`; empty when `u` has no names.
pub fn gen_request(u: &Universe, kind: RequestKind, seed: u64) -> Request {
    let mut rng = SplitMix64::new(seed);
    let names: Vec<PackageName> = u.names().cloned().collect();
    let mut r = Request::default();
    if names.is_empty() {
        return r;
    }
    let count = match kind {
        RequestKind::Mixed => 1 + rng.below(3),
        _ => 1,
    };
    for _ in 0..count {
        let kind = match kind {
            RequestKind::Mixed => [RequestKind::Install, RequestKind::Remove, RequestKind::Upgrade]
                [rng.below(3) as usize],
            k => k,
        };
        let name = names[rng.below(names.len() as u64) as usize].clone();
        match kind {
            RequestKind::Install => {
                let atom = if rng.chance(0.5) {
                    VpkgAtom::any(name)
                } else {
                    let versions = u.versions(&name);
                    let v = versions[rng.below(versions.len() as u64) as usize];
                    VpkgAtom::with(name, RelOp::Geq, v)
                };
                r.install.push(atom);
            }
            RequestKind::Remove => r.remove.push(VpkgAtom::any(name)),
            RequestKind::Upgrade => r.upgrade.push(VpkgAtom::any(name)),
            RequestKind::Mixed => unreachable!("resolved above"),
        }
    }
    r
}

/// A complete problem document: universe from `p`, request drawn with `p.seed`.
pub fn gen_document(p: &GenParams, kind: RequestKind) -> CudfDocument {
    let stanzas = gen_stanzas(p);
    let u = Universe::new(stanzas.clone()).expect("generated ids are unique");
    let request = gen_request(&u, kind, p.seed);
    let mut rs = RequestStanza::new(request);
    rs.label = format!("gen-{}", p.seed);
    CudfDocument {
        preamble: None,
        packages: stanzas,
        request: Some(rs),
    }
}
