//! Domain types for package universes, requests and solutions.
//!
//! A [`Universe`] is an immutable, indexed set of [`PackageStanza`]s. Stanzas
//! are kept sorted by [`PackageId`] (name, then version), so the versions of a
//! single name always occupy a contiguous index range. The encoder relies on
//! this: stanza index `i` is boolean variable `i`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// A CUDF package version: a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Version(u64);

impl Version {
    pub fn new(value: u64) -> Result<Self, ModelError> {
        if value == 0 {
            return Err(ModelError::InvalidVersion(value));
        }
        Ok(Version(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A package (or feature) name: `[a-zA-Z0-9][a-zA-Z0-9.+-]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageName(String);

impl PackageName {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if is_valid_name(&text) {
            Ok(PackageName(text))
        } else {
            Err(ModelError::InvalidName(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-')
}

fn is_valid_name(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) if first.is_ascii_alphanumeric() => chars.all(is_name_char),
        _ => false,
    }
}

impl fmt::Display for PackageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for PackageName {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PackageName::new(s)
    }
}

/// A concrete `(name, version)` unit of a universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageId {
    pub name: PackageName,
    pub version: Version,
}

impl PackageId {
    pub fn new(name: PackageName, version: Version) -> Self {
        PackageId { name, version }
    }
}

impl fmt::Display for PackageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} v{}", self.name, self.version)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelOp {
    Eq,
    Neq,
    Geq,
    Gt,
    Leq,
    Lt,
}

impl RelOp {
    /// Evaluates `lhs OP rhs`.
    pub fn eval(self, lhs: Version, rhs: Version) -> bool {
        match self {
            RelOp::Eq => lhs == rhs,
            RelOp::Neq => lhs != rhs,
            RelOp::Geq => lhs >= rhs,
            RelOp::Gt => lhs > rhs,
            RelOp::Leq => lhs <= rhs,
            RelOp::Lt => lhs < rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Neq => "!=",
            RelOp::Geq => ">=",
            RelOp::Gt => ">",
            RelOp::Leq => "<=",
            RelOp::Lt => "<",
        }
    }

    pub fn from_symbol(s: &str) -> Option<RelOp> {
        Some(match s {
            "=" => RelOp::Eq,
            "!=" => RelOp::Neq,
            ">=" => RelOp::Geq,
            ">" => RelOp::Gt,
            "<=" => RelOp::Leq,
            "<" => RelOp::Lt,
            _ => return None,
        })
    }
}

/// A versioned package predicate such as `attr >= 2` or plain `mail-agent`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VpkgAtom {
    pub name: PackageName,
    pub constraint: Option<(RelOp, Version)>,
}

impl VpkgAtom {
    pub fn any(name: PackageName) -> Self {
        VpkgAtom {
            name,
            constraint: None,
        }
    }

    pub fn with(name: PackageName, op: RelOp, version: Version) -> Self {
        VpkgAtom {
            name,
            constraint: Some((op, version)),
        }
    }

    pub fn op(&self) -> Option<(RelOp, Version)> {
        self.constraint
    }

    /// Does a concrete version of `self.name` satisfy the constraint?
    pub fn accepts(&self, version: Version) -> bool {
        self.op().is_none_or(|(op, v)| op.eval(version, v))
    }

    /// Does a provided feature version satisfy the constraint? A versionless
    /// provide only answers constraint-free atoms.
    pub fn accepts_provide(&self, provided: Option<Version>) -> bool {
        match (self.op(), provided) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((op, v)), Some(pv)) => op.eval(pv, v),
        }
    }
}

impl fmt::Display for VpkgAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op() {
            None => write!(f, "{}", self.name),
            Some((op, v)) => write!(f, "{} {} {}", self.name, op.symbol(), v),
        }
    }
}

/// A dependency formula in conjunctive normal form.
///
/// TRUE is the empty conjunction; FALSE is a conjunction holding a single
/// empty disjunct. All other disjuncts are nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VpkgFormula {
    conjuncts: Vec<Vec<VpkgAtom>>,
}

impl VpkgFormula {
    pub fn truth() -> Self {
        VpkgFormula { conjuncts: vec![] }
    }

    pub fn falsity() -> Self {
        VpkgFormula {
            conjuncts: vec![vec![]],
        }
    }

    /// Builds a formula; any empty disjunct collapses the whole formula to FALSE.
    pub fn cnf(conjuncts: Vec<Vec<VpkgAtom>>) -> Self {
        if conjuncts.iter().any(Vec::is_empty) {
            return Self::falsity();
        }
        VpkgFormula { conjuncts }
    }

    pub fn is_true(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn is_false(&self) -> bool {
        self.conjuncts.len() == 1 && self.conjuncts[0].is_empty()
    }

    pub fn conjuncts(&self) -> &[Vec<VpkgAtom>] {
        &self.conjuncts
    }
}

impl fmt::Display for VpkgFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_true() {
            return f.write_str("true!");
        }
        if self.is_false() {
            return f.write_str("false!");
        }
        for (i, disjunct) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            for (j, atom) in disjunct.iter().enumerate() {
                if j > 0 {
                    f.write_str(" | ")?;
                }
                write!(f, "{atom}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum KeepLevel {
    #[default]
    None,
    Version,
    Package,
    Feature,
}

impl KeepLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            KeepLevel::None => "none",
            KeepLevel::Version => "version",
            KeepLevel::Package => "package",
            KeepLevel::Feature => "feature",
        }
    }
}

/// One package description of a universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageStanza {
    pub id: PackageId,
    pub depends: VpkgFormula,
    pub conflicts: Vec<VpkgAtom>,
    pub provides: Vec<(PackageName, Option<Version>)>,
    pub recommends: VpkgFormula,
    pub installed: bool,
    pub keep: KeepLevel,
    /// Unrecognized fields, preserved verbatim in input order.
    pub extras: Vec<(String, String)>,
}

impl PackageStanza {
    pub fn new(id: PackageId) -> Self {
        PackageStanza {
            id,
            depends: VpkgFormula::truth(),
            conflicts: vec![],
            provides: vec![],
            recommends: VpkgFormula::truth(),
            installed: false,
            keep: KeepLevel::None,
            extras: vec![],
        }
    }
}

/// The user request: install, remove and upgrade atom lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Request {
    pub install: Vec<VpkgAtom>,
    pub remove: Vec<VpkgAtom>,
    pub upgrade: Vec<VpkgAtom>,
}

impl Request {
    pub fn is_empty(&self) -> bool {
        self.install.is_empty() && self.remove.is_empty() && self.upgrade.is_empty()
    }
}

/// A target installation state.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Solution(BTreeSet<PackageId>);

impl Solution {
    pub fn new(ids: impl IntoIterator<Item = PackageId>) -> Self {
        Solution(ids.into_iter().collect())
    }

    pub fn ids(&self) -> &BTreeSet<PackageId> {
        &self.0
    }

    pub fn contains(&self, id: &PackageId) -> bool {
        self.0.contains(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PackageId> {
        self.0.iter()
    }
}

impl FromIterator<PackageId> for Solution {
    fn from_iter<T: IntoIterator<Item = PackageId>>(iter: T) -> Self {
        Solution::new(iter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid version {0}: versions are positive integers")]
    InvalidVersion(u64),
    #[error("invalid package name {0:?}")]
    InvalidName(String),
    #[error("duplicate package {0}")]
    DuplicatePackage(PackageId),
    #[error("unknown package {0}")]
    UnknownPackage(PackageId),
}

/// A consistency failure of an installation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `package` has a dependency disjunct none of whose atoms is satisfied.
    /// An empty disjunct stands for a `false!` dependency.
    UnsatDependency {
        package: PackageId,
        disjunct: Vec<VpkgAtom>,
    },
    /// `package` declares a conflict matched by installed `with`.
    Conflict { package: PackageId, with: PackageId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnsatDependency { package, disjunct } => {
                let text = VpkgFormula::cnf(vec![disjunct.clone()]);
                write!(f, "unsatisfied dependency: {package} depends on {text}")
            }
            Violation::Conflict { package, with } => {
                write!(f, "conflict: {package} conflicts with installed {with}")
            }
        }
    }
}

/// Immutable indexed package universe.
#[derive(Debug, Clone, Default)]
pub struct Universe {
    stanzas: Vec<PackageStanza>,
    by_id: HashMap<PackageId, usize>,
    names: BTreeMap<PackageName, Range<usize>>,
    features: BTreeMap<PackageName, Vec<(usize, Option<Version>)>>,
}

/// Builds the indexed universe, rejecting duplicate package ids.
pub fn build_universe(stanzas: Vec<PackageStanza>) -> Result<Universe, ModelError> {
    Universe::new(stanzas)
}

impl Universe {
    pub fn new(mut stanzas: Vec<PackageStanza>) -> Result<Self, ModelError> {
        stanzas.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = stanzas.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ModelError::DuplicatePackage(w[0].id.clone()));
        }

        let mut by_id = HashMap::with_capacity(stanzas.len());
        let mut names: BTreeMap<PackageName, Range<usize>> = BTreeMap::new();
        let mut features: BTreeMap<PackageName, Vec<(usize, Option<Version>)>> = BTreeMap::new();
        for (i, stanza) in stanzas.iter().enumerate() {
            by_id.insert(stanza.id.clone(), i);
            names
                .entry(stanza.id.name.clone())
                .and_modify(|r| r.end = i + 1)
                .or_insert(i..i + 1);
            for (feature, version) in &stanza.provides {
                let entry = features.entry(feature.clone()).or_default();
                if !entry.contains(&(i, *version)) {
                    entry.push((i, *version));
                }
            }
        }

        Ok(Universe {
            stanzas,
            by_id,
            names,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.stanzas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stanzas.is_empty()
    }

    /// All stanzas, sorted by id.
    pub fn stanzas(&self) -> &[PackageStanza] {
        &self.stanzas
    }

    pub fn stanza(&self, index: usize) -> &PackageStanza {
        &self.stanzas[index]
    }

    pub fn index_of(&self, id: &PackageId) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &PackageId) -> Option<&PackageStanza> {
        self.index_of(id).map(|i| &self.stanzas[i])
    }

    pub fn contains(&self, id: &PackageId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &PackageId> {
        self.stanzas.iter().map(|s| &s.id)
    }

    /// Real (non-virtual) package names in lexicographic order.
    pub fn names(&self) -> impl Iterator<Item = &PackageName> {
        self.names.keys()
    }

    /// Stanza indices of every version of `name`, ascending by version.
    pub fn name_range(&self, name: &PackageName) -> Range<usize> {
        self.names.get(name).cloned().unwrap_or(0..0)
    }

    /// Name index: versions of `name` present in the universe, ascending.
    pub fn versions(&self, name: &PackageName) -> Vec<Version> {
        self.name_range(name)
            .map(|i| self.stanzas[i].id.version)
            .collect()
    }

    pub fn max_version(&self, name: &PackageName) -> Option<Version> {
        let range = self.name_range(name);
        (!range.is_empty()).then(|| self.stanzas[range.end - 1].id.version)
    }

    /// Feature index: providers of virtual `name` with their provided version.
    pub fn feature_providers(&self, name: &PackageName) -> Vec<(PackageId, Option<Version>)> {
        self.features
            .get(name)
            .map(|entries| {
                entries
                    .iter()
                    .map(|&(i, v)| (self.stanzas[i].id.clone(), v))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Sorted, deduplicated stanza indices satisfying `atom`.
    pub fn provider_indices(&self, atom: &VpkgAtom) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .name_range(&atom.name)
            .filter(|&i| atom.accepts(self.stanzas[i].id.version))
            .collect();
        if let Some(entries) = self.features.get(&atom.name) {
            let before = out.len();
            out.extend(
                entries
                    .iter()
                    .filter(|(_, v)| atom.accepts_provide(*v))
                    .map(|&(i, _)| i),
            );
            if out.len() != before {
                out.sort_unstable();
                out.dedup();
            }
        }
        out
    }

    /// Every package id satisfying `atom`, directly or through `provides`.
    pub fn providers(&self, atom: &VpkgAtom) -> BTreeSet<PackageId> {
        self.provider_indices(atom)
            .into_iter()
            .map(|i| self.stanzas[i].id.clone())
            .collect()
    }

    /// Ids of stanzas flagged `installed`.
    pub fn initial_installation(&self) -> BTreeSet<PackageId> {
        self.stanzas
            .iter()
            .filter(|s| s.installed)
            .map(|s| s.id.clone())
            .collect()
    }

    /// Membership vector over stanza indices for a set of ids.
    pub fn membership<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a PackageId>,
    ) -> Result<Vec<bool>, ModelError> {
        let mut member = vec![false; self.stanzas.len()];
        for id in ids {
            let i = self
                .index_of(id)
                .ok_or_else(|| ModelError::UnknownPackage(id.clone()))?;
            member[i] = true;
        }
        Ok(member)
    }
}

/// Ids of stanzas flagged `installed`.
pub fn initial_installation(u: &Universe) -> BTreeSet<PackageId> {
    u.initial_installation()
}

/// Lists every dependency and conflict failure of installation set `s`.
pub fn consistency_violations<'a>(
    u: &Universe,
    s: impl IntoIterator<Item = &'a PackageId>,
) -> Result<Vec<Violation>, ModelError> {
    let member = u.membership(s)?;
    Ok(violations_of_membership(u, &member))
}

pub(crate) fn violations_of_membership(u: &Universe, member: &[bool]) -> Vec<Violation> {
    let mut out = vec![];
    for (i, stanza) in u.stanzas().iter().enumerate() {
        if !member[i] {
            continue;
        }
        for disjunct in stanza.depends.conjuncts() {
            let satisfied = disjunct
                .iter()
                .any(|atom| u.provider_indices(atom).into_iter().any(|q| member[q]));
            if !satisfied {
                out.push(Violation::UnsatDependency {
                    package: stanza.id.clone(),
                    disjunct: disjunct.clone(),
                });
            }
        }
        let mut hit: BTreeSet<usize> = BTreeSet::new();
        for atom in &stanza.conflicts {
            hit.extend(
                u.provider_indices(atom)
                    .into_iter()
                    .filter(|&q| q != i && member[q]),
            );
        }
        out.extend(hit.into_iter().map(|q| Violation::Conflict {
            package: stanza.id.clone(),
            with: u.stanza(q).id.clone(),
        }));
    }
    out
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn name(s: &str) -> PackageName {
        PackageName::new(s).unwrap()
    }

    pub fn ver(v: u64) -> Version {
        Version::new(v).unwrap()
    }

    pub fn pid(n: &str, v: u64) -> PackageId {
        PackageId::new(name(n), ver(v))
    }

    pub fn atom(n: &str) -> VpkgAtom {
        VpkgAtom::any(name(n))
    }

    pub fn atom_op(n: &str, op: RelOp, v: u64) -> VpkgAtom {
        VpkgAtom::with(name(n), op, ver(v))
    }

    pub fn stanza(n: &str, v: u64) -> PackageStanza {
        PackageStanza::new(pid(n, v))
    }
}
