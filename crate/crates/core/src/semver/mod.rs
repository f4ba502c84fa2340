//! Front-end adapter from semver manifests and a registry snapshot to CUDF,
//! and from CUDF solutions back to lockfiles.
//!
//! Versions of each name are mapped to CUDF integers by rank (1 for the
//! oldest). Ranges compile to explicit `name = rank` disjunctions over the
//! versions the registry actually has. File formats are described in
//! `docs/semver-formats.md`.

mod range;
mod version;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use range::{range_matches, CmpOp, Operand, Primitive, RangeExpr};
pub use version::SemverVersion;

use crate::cudf::{CudfDocument, RequestStanza};
use crate::model::{PackageId, PackageName, PackageStanza, RelOp, Request, Solution, Version, VpkgAtom, VpkgFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemverError {
    #[error("invalid semver version {0:?}")]
    Version(String),
    #[error("invalid range {text:?}: {reason}")]
    Range { text: String, reason: String },
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("{name} {version} appears twice in the registry")]
    DuplicateVersion { name: String, version: SemverVersion },
    #[error("{0:?} cannot be used as a CUDF package name")]
    InvalidName(String),
    #[error("{0} depends on itself")]
    SelfDependency(String),
    #[error("registry already has a package named {0}, which is reserved for the root")]
    RootCollision(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("solution contains {0}, which the version mapping does not know")]
pub struct MappingGap(pub PackageId);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: SemverVersion,
    #[serde(default)]
    pub dependencies: BTreeMap<String, RangeExpr>,
    /// Extra dependencies enabled by a build-configuration tag such as `test`.
    #[serde(default)]
    pub qualified_dependencies: BTreeMap<String, BTreeMap<String, RangeExpr>>,
    #[serde(default)]
    pub conflicts: BTreeMap<String, RangeExpr>,
}

impl Manifest {
    pub fn new(name: impl Into<String>, version: SemverVersion) -> Self {
        Manifest {
            name: name.into(),
            version,
            dependencies: BTreeMap::new(),
            qualified_dependencies: BTreeMap::new(),
            conflicts: BTreeMap::new(),
        }
    }
}

/// Every known release of every name; each release carries its own manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    pub packages: BTreeMap<String, Vec<Manifest>>,
}

impl Registry {
    pub fn add(&mut self, m: Manifest) {
        self.packages.entry(m.name.clone()).or_default().push(m);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedFrom {
    pub name: String,
    pub version: SemverVersion,
    pub criteria: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lockfile {
    pub generated_from: GeneratedFrom,
    pub resolved: BTreeMap<String, SemverVersion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestMode {
    /// Install the root.
    Install,
    /// Install the root and upgrade every locked name still in the registry.
    Upgrade,
}

/// Bidirectional map between registry versions and CUDF ranks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersionMapping {
    root: String,
    versions: BTreeMap<String, Vec<SemverVersion>>,
}

impl VersionMapping {
    pub fn root_name(&self) -> &str {
        &self.root
    }

    pub fn rank(&self, name: &str, v: &SemverVersion) -> Option<Version> {
        let vs = self.versions.get(name)?;
        let i = vs.binary_search(v).ok()?;
        Some(Version::new(i as u64 + 1).expect("ranks start at 1"))
    }

    pub fn semver(&self, name: &str, rank: Version) -> Option<&SemverVersion> {
        self.versions.get(name)?.get(rank.get() as usize - 1)
    }

    pub fn versions(&self, name: &str) -> &[SemverVersion] {
        self.versions.get(name).map_or(&[], Vec::as_slice)
    }
}

/// Name of the synthetic stanza standing for the manifest being resolved.
pub fn root_name(manifest_name: &str) -> String {
    format!("root--{manifest_name}")
}

fn cudf_name(name: &str) -> Result<PackageName, TranslateError> {
    PackageName::new(name).map_err(|_| TranslateError::InvalidName(name.to_string()))
}

fn rank_version(i: usize) -> Version {
    Version::new(i as u64 + 1).expect("ranks start at 1")
}

/// `name = rank` for every registry version of `name` matching `range`.
/// A name missing from the registry gives its bare name (no providers); an
/// existing name without match gives `name > newest`.
pub fn compile_range(name: &str, range: &RangeExpr, mapping: &VersionMapping) -> Result<Vec<VpkgAtom>, TranslateError> {
    let pname = cudf_name(name)?;
    let versions = mapping.versions(name);
    if versions.is_empty() {
        return Ok(vec![VpkgAtom::any(pname)]);
    }
    let atoms: Vec<VpkgAtom> = versions
        .iter()
        .enumerate()
        .filter(|(_, v)| range.matches(v))
        .map(|(i, _)| VpkgAtom::with(pname.clone(), RelOp::Eq, rank_version(i)))
        .collect();
    if atoms.is_empty() {
        return Ok(vec![VpkgAtom::with(pname, RelOp::Gt, rank_version(versions.len() - 1))]);
    }
    Ok(atoms)
}

fn dependency_formula(
    owner: &str,
    deps: &BTreeMap<&String, &RangeExpr>,
    mapping: &VersionMapping,
) -> Result<VpkgFormula, TranslateError> {
    let mut conjuncts = vec![];
    for (name, range) in deps {
        if name.as_str() == owner {
            return Err(TranslateError::SelfDependency(owner.to_string()));
        }
        conjuncts.push(compile_range(name, range, mapping)?);
    }
    Ok(VpkgFormula::cnf(conjuncts))
}

fn conflict_atoms(m: &Manifest, mapping: &VersionMapping) -> Result<Vec<VpkgAtom>, TranslateError> {
    let mut atoms = vec![];
    for (name, range) in &m.conflicts {
        if mapping.versions(name).is_empty() {
            continue;
        }
        atoms.extend(compile_range(name, range, mapping)?);
    }
    Ok(atoms)
}

/// Builds the CUDF problem for resolving `m` against `reg`.
///
/// Every registry release becomes a stanza that conflicts with its own name,
/// so at most one version per name is installed. Qualified dependencies are
/// honoured on the root only. Lockfile entries absent from the registry are
/// ignored.
pub fn translate(
    m: &Manifest,
    reg: &Registry,
    installed: Option<&Lockfile>,
    qualifiers: &BTreeSet<String>,
    mode: RequestMode,
) -> Result<(CudfDocument, VersionMapping), TranslateError> {
    let root = root_name(&m.name);
    if reg.packages.contains_key(&root) {
        return Err(TranslateError::RootCollision(root));
    }
    let mut mapping = VersionMapping {
        root: root.clone(),
        versions: BTreeMap::new(),
    };
    for (name, releases) in &reg.packages {
        cudf_name(name)?;
        let mut vs: Vec<SemverVersion> = releases.iter().map(|r| r.version.clone()).collect();
        vs.sort();
        if let Some(w) = vs.windows(2).find(|w| w[0] == w[1]) {
            return Err(TranslateError::DuplicateVersion {
                name: name.clone(),
                version: w[0].clone(),
            });
        }
        mapping.versions.insert(name.clone(), vs);
    }

    let locked = |name: &str, v: &SemverVersion| {
        installed.is_some_and(|l| l.resolved.get(name) == Some(v))
    };

    let mut packages = vec![];
    for (name, releases) in &reg.packages {
        let pname = cudf_name(name)?;
        for release in releases {
            let rank = mapping.rank(name, &release.version).expect("mapped above");
            let mut s = PackageStanza::new(PackageId::new(pname.clone(), rank));
            let deps: BTreeMap<&String, &RangeExpr> = release.dependencies.iter().collect();
            s.depends = dependency_formula(name, &deps, &mapping)?;
            s.conflicts = vec![VpkgAtom::any(pname.clone())];
            s.conflicts.extend(conflict_atoms(release, &mapping)?);
            s.installed = locked(name, &release.version);
            packages.push(s);
        }
    }

    let root_pname = cudf_name(&root)?;
    let mut root_deps: BTreeMap<&String, &RangeExpr> = m.dependencies.iter().collect();
    for (tag, deps) in &m.qualified_dependencies {
        if qualifiers.contains(tag) {
            root_deps.extend(deps.iter());
        }
    }
    let mut root_stanza = PackageStanza::new(PackageId::new(root_pname.clone(), rank_version(0)));
    root_stanza.depends = dependency_formula(&m.name, &root_deps, &mapping)?;
    root_stanza.conflicts = conflict_atoms(m, &mapping)?;
    packages.push(root_stanza);

    let mut request = Request {
        install: vec![VpkgAtom::any(root_pname)],
        ..Default::default()
    };
    if let (RequestMode::Upgrade, Some(lock)) = (mode, installed) {
        for name in lock.resolved.keys() {
            if reg.packages.contains_key(name) {
                request.upgrade.push(VpkgAtom::any(cudf_name(name)?));
            }
        }
    }
    let mut rs = RequestStanza::new(request);
    rs.label = m.name.clone();
    Ok((
        CudfDocument {
            preamble: None,
            packages,
            request: Some(rs),
        },
        mapping,
    ))
}

/// Maps a solution of a translated problem back to semver versions.
pub fn lift_solution(
    s: &Solution,
    mapping: &VersionMapping,
    m: &Manifest,
    criteria: &str,
) -> Result<Lockfile, MappingGap> {
    let mut resolved = BTreeMap::new();
    for id in s.iter() {
        if id.name.as_str() == mapping.root {
            if id.version.get() != 1 {
                return Err(MappingGap(id.clone()));
            }
            continue;
        }
        let v = mapping
            .semver(id.name.as_str(), id.version)
            .ok_or_else(|| MappingGap(id.clone()))?;
        resolved.insert(id.name.as_str().to_string(), v.clone());
    }
    Ok(Lockfile {
        generated_from: GeneratedFrom {
            name: m.name.clone(),
            version: m.version.clone(),
            criteria: criteria.to_string(),
        },
        resolved,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, TranslateError> {
    let text = fs::read_to_string(path).map_err(|source| TranslateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| TranslateError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest, TranslateError> {
    read_json(path)
}

pub fn load_lockfile(path: &Path) -> Result<Lockfile, TranslateError> {
    read_json(path)
}

#[derive(Deserialize)]
struct RegistryFile {
    name: String,
    releases: Vec<Release>,
}

#[derive(Deserialize)]
struct Release {
    version: SemverVersion,
    #[serde(default)]
    dependencies: BTreeMap<String, RangeExpr>,
    #[serde(default)]
    conflicts: BTreeMap<String, RangeExpr>,
}

/// Loads every `*.json` file of `dir`, one file per package name.
pub fn load_registry(dir: &Path) -> Result<Registry, TranslateError> {
    let io_err = |source| TranslateError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    let mut reg = Registry::default();
    for path in paths {
        let file: RegistryFile = read_json(&path)?;
        for r in file.releases {
            reg.add(Manifest {
                name: file.name.clone(),
                version: r.version,
                dependencies: r.dependencies,
                qualified_dependencies: BTreeMap::new(),
                conflicts: r.conflicts,
            });
        }
    }
    Ok(reg)
}
