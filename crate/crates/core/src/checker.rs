//! Independent solution validation, computed directly on sets.
//!
//! Nothing here touches the encoder or the SAT engine, so a bug shared by
//! both cannot hide a wrong answer from this module.

use std::fmt;

use crate::model::{
    violations_of_membership, KeepLevel, ModelError, PackageId, PackageName, RelOp, Request,
    Solution, Universe, Version, Violation, VpkgAtom,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestViolation {
    NotInstalled(VpkgAtom),
    NotRemoved { atom: VpkgAtom, by: PackageId },
    /// The upgraded name must end up with exactly one version, accepted by
    /// the atom and no older than the newest initially installed version.
    Upgrade { atom: VpkgAtom, reason: String },
}

impl fmt::Display for RequestViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestViolation::NotInstalled(atom) => write!(f, "request: install {atom} not satisfied"),
            RequestViolation::NotRemoved { atom, by } => {
                write!(f, "request: remove {atom} violated by installed {by}")
            }
            RequestViolation::Upgrade { atom, reason } => {
                write!(f, "request: upgrade {atom} violated: {reason}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeepViolation {
    Version(PackageId),
    Package(PackageId),
    Feature {
        package: PackageId,
        feature: PackageName,
        version: Option<Version>,
    },
}

impl fmt::Display for KeepViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeepViolation::Version(p) => write!(f, "keep: version of {p} not kept"),
            KeepViolation::Package(p) => write!(f, "keep: package {} not kept", p.name),
            KeepViolation::Feature {
                package,
                feature,
                version,
            } => match version {
                Some(v) => write!(f, "keep: feature {feature} = {v} of {package} not kept"),
                None => write!(f, "keep: feature {feature} of {package} not kept"),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub consistency: Vec<Violation>,
    pub request: Vec<RequestViolation>,
    pub keep: Vec<KeepViolation>,
}

impl CheckReport {
    pub fn is_valid(&self) -> bool {
        self.consistency.is_empty() && self.request.is_empty() && self.keep.is_empty()
    }

    /// One line per violation.
    pub fn lines(&self) -> Vec<String> {
        self.consistency
            .iter()
            .map(ToString::to_string)
            .chain(self.request.iter().map(ToString::to_string))
            .chain(self.keep.iter().map(ToString::to_string))
            .collect()
    }

    /// Does any violation name `id`, either as the offending package or as
    /// a package that would satisfy one of the atoms involved?
    pub fn mentions(&self, u: &Universe, id: &PackageId) -> bool {
        let index = u.index_of(id);
        let matches = |atom: &VpkgAtom| index.is_some_and(|i| u.provider_indices(atom).contains(&i));
        self.consistency.iter().any(|v| match v {
            Violation::UnsatDependency { package, disjunct } => package == id || disjunct.iter().any(matches),
            Violation::Conflict { package, with } => package == id || with == id,
        }) || self.request.iter().any(|v| match v {
            RequestViolation::NotInstalled(atom) => matches(atom),
            RequestViolation::NotRemoved { by, .. } => by == id,
            RequestViolation::Upgrade { atom, .. } => atom.name == id.name,
        }) || self.keep.iter().any(|v| match v {
            KeepViolation::Version(p) | KeepViolation::Package(p) => p.name == id.name,
            KeepViolation::Feature {
                package,
                feature,
                version,
            } => {
                let atom = VpkgAtom {
                    name: feature.clone(),
                    constraint: version.map(|v| (RelOp::Eq, v)),
                };
                package == id || matches(&atom)
            }
        })
    }
}

fn satisfied(u: &Universe, member: &[bool], atom: &VpkgAtom) -> bool {
    u.provider_indices(atom).into_iter().any(|q| member[q])
}

/// Validates `s` against universe consistency, the request and keep flags.
pub fn check(u: &Universe, r: &Request, s: &Solution) -> Result<CheckReport, ModelError> {
    let member = u.membership(s.iter())?;
    Ok(check_membership(u, r, &member))
}

/// Same as [`check`], over a membership vector indexed like `u.stanzas()`.
pub fn check_membership(u: &Universe, r: &Request, member: &[bool]) -> CheckReport {
    let mut report = CheckReport {
        consistency: violations_of_membership(u, member),
        ..Default::default()
    };

    for atom in &r.install {
        if !satisfied(u, member, atom) {
            report.request.push(RequestViolation::NotInstalled(atom.clone()));
        }
    }
    for atom in &r.remove {
        for q in u.provider_indices(atom) {
            if member[q] {
                report.request.push(RequestViolation::NotRemoved {
                    atom: atom.clone(),
                    by: u.stanza(q).id.clone(),
                });
            }
        }
    }
    for atom in &r.upgrade {
        let range = u.name_range(&atom.name);
        let chosen: Vec<Version> = range
            .clone()
            .filter(|&i| member[i])
            .map(|i| u.stanza(i).id.version)
            .collect();
        let floor = range
            .filter(|&i| u.stanza(i).installed)
            .map(|i| u.stanza(i).id.version)
            .max();
        let reason = match chosen.as_slice() {
            [] => Some("no version installed".to_string()),
            [v] if !atom.accepts(*v) => Some(format!("version {v} does not match")),
            [v] if floor.is_some_and(|f| *v < f) => Some(format!(
                "version {v} is older than installed {}",
                floor.expect("checked")
            )),
            [_] => None,
            many => Some(format!("{} versions installed", many.len())),
        };
        if let Some(reason) = reason {
            report.request.push(RequestViolation::Upgrade {
                atom: atom.clone(),
                reason,
            });
        }
    }

    for (i, p) in u.stanzas().iter().enumerate() {
        if !p.installed {
            continue;
        }
        match p.keep {
            KeepLevel::None => {}
            KeepLevel::Version => {
                if !member[i] {
                    report.keep.push(KeepViolation::Version(p.id.clone()));
                }
            }
            KeepLevel::Package => {
                if !u.name_range(&p.id.name).any(|q| member[q]) {
                    report.keep.push(KeepViolation::Package(p.id.clone()));
                }
            }
            KeepLevel::Feature => {
                for (feature, version) in &p.provides {
                    let atom = match version {
                        Some(v) => VpkgAtom::with(feature.clone(), RelOp::Eq, *v),
                        None => VpkgAtom::any(feature.clone()),
                    };
                    if !satisfied(u, member, &atom) {
                        report.keep.push(KeepViolation::Feature {
                            package: p.id.clone(),
                            feature: feature.clone(),
                            version: *version,
                        });
                    }
                }
            }
        }
    }
    report
}
