//! Reader and writer for CUDF documents.
//!
//! A document is a sequence of blank-line separated stanzas made of
//! `field: value` lines. The first line of a stanza decides its kind:
//! `preamble:`, `package:` or `request:`. Full-line `#` comments are skipped,
//! CR before LF is stripped and a line starting with a space continues the
//! previous field's value.
//!
//! Printing is canonical: package fields come out in the order `package`,
//! `version`, `depends`, `conflicts`, `provides`, `recommends`, `installed`,
//! `keep`, followed by unknown fields in input order, and default-valued fields
//! are omitted.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    is_name_char, KeepLevel, PackageId, PackageName, PackageStanza, RelOp, Request, Solution,
    Universe, Version, VpkgAtom, VpkgFormula,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CudfError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown package {name} version {version}")]
    UnknownPackage { name: String, version: u64 },
}

impl CudfError {
    fn parse(line: usize, reason: impl Into<String>) -> Self {
        CudfError::Parse {
            line,
            reason: reason.into(),
        }
    }
}

/// The request stanza: its label, the request proper and unknown fields.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RequestStanza {
    pub label: String,
    pub request: Request,
    pub extras: Vec<(String, String)>,
}

impl RequestStanza {
    pub fn new(request: Request) -> Self {
        RequestStanza {
            label: String::new(),
            request,
            extras: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CudfDocument {
    /// Preamble fields in input order, including the leading `preamble` field.
    pub preamble: Option<Vec<(String, String)>>,
    pub packages: Vec<PackageStanza>,
    pub request: Option<RequestStanza>,
}

impl CudfDocument {
    pub fn universe(&self) -> Result<Universe, crate::model::ModelError> {
        Universe::new(self.packages.clone())
    }

    pub fn request(&self) -> Request {
        self.request
            .as_ref()
            .map(|r| r.request.clone())
            .unwrap_or_default()
    }
}

/// Either a solution or the `FAIL` marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolutionDocument {
    Solution(Solution),
    NoSolution,
}

struct Field {
    line: usize,
    key: String,
    value: String,
}

struct RawStanza {
    fields: Vec<Field>,
}

fn split_stanzas(text: &str) -> Result<Vec<RawStanza>, CudfError> {
    let mut stanzas = vec![];
    let mut current: Vec<Field> = vec![];
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if !current.is_empty() {
                stanzas.push(RawStanza {
                    fields: std::mem::take(&mut current),
                });
            }
            continue;
        }
        if line.starts_with(' ') || line.starts_with('\t') {
            let Some(last) = current.last_mut() else {
                return Err(CudfError::parse(line_no, "continuation line outside a field"));
            };
            let more = line.trim();
            if !last.value.is_empty() {
                last.value.push(' ');
            }
            last.value.push_str(more);
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(CudfError::parse(line_no, "expected `field: value`"));
        };
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(CudfError::parse(line_no, format!("invalid field name {key:?}")));
        }
        current.push(Field {
            line: line_no,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    if !current.is_empty() {
        stanzas.push(RawStanza { fields: current });
    }
    Ok(stanzas)
}

/// Parses a CUDF document.
pub fn parse_document(text: &str) -> Result<CudfDocument, CudfError> {
    let mut doc = CudfDocument::default();
    for (position, stanza) in split_stanzas(text)?.into_iter().enumerate() {
        let lead = &stanza.fields[0];
        match lead.key.as_str() {
            "preamble" => {
                if position != 0 {
                    return Err(CudfError::parse(lead.line, "preamble must be the first stanza"));
                }
                doc.preamble = Some(
                    stanza
                        .fields
                        .into_iter()
                        .map(|f| (f.key, f.value))
                        .collect(),
                );
            }
            "package" => {
                if doc.request.is_some() {
                    return Err(CudfError::parse(
                        lead.line,
                        "package stanza after the request stanza",
                    ));
                }
                doc.packages.push(parse_package(stanza)?);
            }
            "request" => {
                if doc.request.is_some() {
                    return Err(CudfError::parse(lead.line, "duplicate request stanza"));
                }
                doc.request = Some(parse_request(stanza)?);
            }
            other => {
                return Err(CudfError::parse(
                    lead.line,
                    format!("unexpected stanza lead `{other}`"),
                ))
            }
        }
    }
    Ok(doc)
}

fn check_unique(seen: &mut BTreeSet<String>, field: &Field) -> Result<(), CudfError> {
    if !seen.insert(field.key.clone()) {
        return Err(CudfError::parse(
            field.line,
            format!("duplicate field `{}`", field.key),
        ));
    }
    Ok(())
}

fn parse_package(stanza: RawStanza) -> Result<PackageStanza, CudfError> {
    let mut fields = stanza.fields.into_iter();
    let lead = fields.next().expect("stanzas are nonempty");
    let lead_line = lead.line;
    let name = parse_name(&lead.value, lead.line)?;

    let mut version = None;
    let mut depends = VpkgFormula::truth();
    let mut conflicts = vec![];
    let mut provides: Vec<(PackageName, Option<Version>)> = vec![];
    let mut recommends = VpkgFormula::truth();
    let mut installed = false;
    let mut keep = KeepLevel::None;
    let mut extras = vec![];
    let mut seen = BTreeSet::from(["package".to_string()]);

    for field in fields {
        check_unique(&mut seen, &field)?;
        let line = field.line;
        match field.key.as_str() {
            "version" => version = Some(parse_version(&field.value, line)?),
            "depends" => depends = parse_formula(&field.value, line)?,
            "recommends" => recommends = parse_formula(&field.value, line)?,
            "conflicts" => conflicts = parse_atom_list(&field.value, line)?,
            "provides" => {
                for atom in parse_atom_list(&field.value, line)? {
                    let entry = match atom.op() {
                        None => (atom.name, None),
                        Some((RelOp::Eq, v)) => (atom.name, Some(v)),
                        Some(_) => {
                            return Err(CudfError::parse(
                                line,
                                "provides entries only allow `= version`",
                            ))
                        }
                    };
                    if !provides.contains(&entry) {
                        provides.push(entry);
                    }
                }
            }
            "installed" => installed = parse_bool(&field.value, line)?,
            "keep" => {
                keep = match field.value.as_str() {
                    "version" => KeepLevel::Version,
                    "package" => KeepLevel::Package,
                    "feature" => KeepLevel::Feature,
                    "none" => KeepLevel::None,
                    other => {
                        return Err(CudfError::parse(line, format!("invalid keep value {other:?}")))
                    }
                }
            }
            _ => extras.push((field.key, field.value)),
        }
    }

    let version = version.ok_or_else(|| CudfError::parse(lead_line, "missing version field"))?;
    Ok(PackageStanza {
        id: PackageId::new(name, version),
        depends,
        conflicts,
        provides,
        recommends,
        installed,
        keep,
        extras,
    })
}

fn parse_request(stanza: RawStanza) -> Result<RequestStanza, CudfError> {
    let mut fields = stanza.fields.into_iter();
    let lead = fields.next().expect("stanzas are nonempty");
    let mut out = RequestStanza {
        label: lead.value,
        ..Default::default()
    };
    let mut seen = BTreeSet::from(["request".to_string()]);
    for field in fields {
        check_unique(&mut seen, &field)?;
        match field.key.as_str() {
            "install" => out.request.install = parse_atom_list(&field.value, field.line)?,
            "remove" => out.request.remove = parse_atom_list(&field.value, field.line)?,
            "upgrade" => out.request.upgrade = parse_atom_list(&field.value, field.line)?,
            _ => out.extras.push((field.key, field.value)),
        }
    }
    Ok(out)
}

fn parse_name(text: &str, line: usize) -> Result<PackageName, CudfError> {
    PackageName::new(text.trim())
        .map_err(|_| CudfError::parse(line, format!("invalid package name {:?}", text.trim())))
}

fn parse_version(text: &str, line: usize) -> Result<Version, CudfError> {
    let value: u64 = text
        .trim()
        .parse()
        .map_err(|_| CudfError::parse(line, format!("invalid version {:?}", text.trim())))?;
    Version::new(value).map_err(|_| CudfError::parse(line, "version must be ≥ 1"))
}

fn parse_bool(text: &str, line: usize) -> Result<bool, CudfError> {
    match text {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(CudfError::parse(line, format!("invalid boolean {other:?}"))),
    }
}

/// Parses `name` or `name OP version`, with optional whitespace around OP.
pub fn parse_atom(text: &str, line: usize) -> Result<VpkgAtom, CudfError> {
    let text = text.trim();
    let name_end = text
        .char_indices()
        .find(|&(_, c)| !is_name_char(c))
        .map_or(text.len(), |(i, _)| i);
    let name = parse_name(&text[..name_end], line)?;
    let rest = text[name_end..].trim_start();
    if rest.is_empty() {
        return Ok(VpkgAtom::any(name));
    }
    let op_end = rest
        .char_indices()
        .find(|&(_, c)| !matches!(c, '=' | '!' | '<' | '>'))
        .map_or(rest.len(), |(i, _)| i);
    let op = RelOp::from_symbol(&rest[..op_end])
        .ok_or_else(|| CudfError::parse(line, format!("invalid constraint in {text:?}")))?;
    let version = parse_version(&rest[op_end..], line)?;
    Ok(VpkgAtom::with(name, op, version))
}

fn parse_atom_list(text: &str, line: usize) -> Result<Vec<VpkgAtom>, CudfError> {
    if text.trim().is_empty() {
        return Ok(vec![]);
    }
    text.split(',').map(|a| parse_atom(a, line)).collect()
}

/// Parses a dependency formula: `,` separates conjuncts, `|` disjuncts.
pub fn parse_formula(text: &str, line: usize) -> Result<VpkgFormula, CudfError> {
    match text.trim() {
        "" | "true!" => return Ok(VpkgFormula::truth()),
        "false!" => return Ok(VpkgFormula::falsity()),
        _ => {}
    }
    let conjuncts = text
        .split(',')
        .map(|disjunct| {
            disjunct
                .split('|')
                .map(|a| parse_atom(a, line))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VpkgFormula::cnf(conjuncts))
}

fn push_field(out: &mut String, key: &str, value: &str) {
    if value.is_empty() {
        let _ = writeln!(out, "{key}:");
    } else {
        let _ = writeln!(out, "{key}: {value}");
    }
}

fn join_atoms(atoms: &[VpkgAtom]) -> String {
    atoms
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text of a single package stanza (no trailing blank line).
pub fn print_stanza(stanza: &PackageStanza) -> String {
    let mut out = String::new();
    push_field(&mut out, "package", stanza.id.name.as_str());
    push_field(&mut out, "version", &stanza.id.version.to_string());
    if !stanza.depends.is_true() {
        push_field(&mut out, "depends", &stanza.depends.to_string());
    }
    if !stanza.conflicts.is_empty() {
        push_field(&mut out, "conflicts", &join_atoms(&stanza.conflicts));
    }
    if !stanza.provides.is_empty() {
        let provides = stanza
            .provides
            .iter()
            .map(|(name, v)| match v {
                Some(v) => format!("{name} = {v}"),
                None => name.to_string(),
            })
            .collect::<Vec<_>>()
            .join(", ");
        push_field(&mut out, "provides", &provides);
    }
    if !stanza.recommends.is_true() {
        push_field(&mut out, "recommends", &stanza.recommends.to_string());
    }
    if stanza.installed {
        push_field(&mut out, "installed", "true");
    }
    if stanza.keep != KeepLevel::None {
        push_field(&mut out, "keep", stanza.keep.as_str());
    }
    for (key, value) in &stanza.extras {
        push_field(&mut out, key, value);
    }
    out
}

fn print_request(request: &RequestStanza) -> String {
    let mut out = String::new();
    push_field(&mut out, "request", &request.label);
    let r = &request.request;
    for (key, atoms) in [
        ("install", &r.install),
        ("remove", &r.remove),
        ("upgrade", &r.upgrade),
    ] {
        if !atoms.is_empty() {
            push_field(&mut out, key, &join_atoms(atoms));
        }
    }
    for (key, value) in &request.extras {
        push_field(&mut out, key, value);
    }
    out
}

/// Renders a document canonically.
pub fn print_document(doc: &CudfDocument) -> String {
    let mut blocks = vec![];
    if let Some(preamble) = &doc.preamble {
        let mut out = String::new();
        for (key, value) in preamble {
            push_field(&mut out, key, value);
        }
        blocks.push(out);
    }
    blocks.extend(doc.packages.iter().map(print_stanza));
    if let Some(request) = &doc.request {
        blocks.push(print_request(request));
    }
    blocks.join("\n")
}

/// Parses a solution document against the universe it answers.
pub fn parse_solution(text: &str, u: &Universe) -> Result<SolutionDocument, CudfError> {
    if text.trim() == "FAIL" {
        return Ok(SolutionDocument::NoSolution);
    }
    let doc = parse_document(text)?;
    let mut ids = BTreeSet::new();
    for stanza in doc.packages.into_iter().filter(|s| s.installed) {
        if !u.contains(&stanza.id) {
            return Err(CudfError::UnknownPackage {
                name: stanza.id.name.to_string(),
                version: stanza.id.version.get(),
            });
        }
        ids.insert(stanza.id);
    }
    Ok(SolutionDocument::Solution(Solution::new(ids)))
}

/// Renders a solution, one stanza per installed id in (name, version) order.
pub fn print_solution(solution: Option<&Solution>) -> String {
    let Some(solution) = solution else {
        return "FAIL\n".to_string();
    };
    solution
        .iter()
        .map(|id| {
            let mut stanza = PackageStanza::new(id.clone());
            stanza.installed = true;
            print_stanza(&stanza)
        })
        .collect::<Vec<_>>()
        .join("\n")
}
