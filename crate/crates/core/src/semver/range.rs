use std::fmt;
use std::str::FromStr;

use super::version::{parse_number, SemverVersion};
use super::SemverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Neq,
    Geq,
    Gt,
    Leq,
    Lt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "!=",
            CmpOp::Geq => ">=",
            CmpOp::Gt => ">",
            CmpOp::Leq => "<=",
            CmpOp::Lt => "<",
        }
    }
}

/// Right-hand side of a comparator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Exact(SemverVersion),
    /// `*`, `4.*` or `4.3.*`.
    Wildcard { major: Option<u64>, minor: Option<u64> },
}

impl Operand {
    /// Half-open bounds `[lo, hi)`; `None` is unbounded.
    fn bounds(&self) -> (Option<SemverVersion>, Option<SemverVersion>) {
        match self {
            Operand::Exact(v) => (Some(v.clone()), None),
            Operand::Wildcard { major: None, .. } => (None, None),
            Operand::Wildcard {
                major: Some(a),
                minor: None,
            } => (Some(SemverVersion::new(*a, 0, 0)), Some(SemverVersion::new(a + 1, 0, 0))),
            Operand::Wildcard {
                major: Some(a),
                minor: Some(b),
            } => (Some(SemverVersion::new(*a, *b, 0)), Some(SemverVersion::new(*a, b + 1, 0))),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Exact(v) => write!(f, "{v}"),
            Operand::Wildcard { major: None, .. } => write!(f, "*"),
            Operand::Wildcard {
                major: Some(a),
                minor: None,
            } => write!(f, "{a}.*"),
            Operand::Wildcard {
                major: Some(a),
                minor: Some(b),
            } => write!(f, "{a}.{b}.*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitive {
    Cmp(CmpOp, Operand),
    /// `^a.b.c`: up to, not including, the next change of the leftmost nonzero part.
    Caret(SemverVersion),
    /// `~a.b.c`: patch updates only.
    Tilde(SemverVersion),
}

impl Primitive {
    pub fn matches(&self, v: &SemverVersion) -> bool {
        match self {
            Primitive::Cmp(op, Operand::Exact(x)) => match op {
                CmpOp::Eq => v == x,
                CmpOp::Neq => v != x,
                CmpOp::Geq => v >= x,
                CmpOp::Gt => v > x,
                CmpOp::Leq => v <= x,
                CmpOp::Lt => v < x,
            },
            Primitive::Cmp(op, w) => {
                // A comparator against a wildcard compares with its bounds.
                let (lo, hi) = w.bounds();
                let at_least_lo = lo.as_ref().is_none_or(|lo| v >= lo);
                let below_hi = hi.as_ref().is_none_or(|hi| v < hi);
                match op {
                    CmpOp::Eq => at_least_lo && below_hi,
                    CmpOp::Neq => !(at_least_lo && below_hi),
                    CmpOp::Geq => at_least_lo,
                    CmpOp::Gt => !below_hi,
                    CmpOp::Lt => !at_least_lo,
                    CmpOp::Leq => below_hi,
                }
            }
            Primitive::Caret(x) => {
                let upper = if x.major > 0 {
                    SemverVersion::new(x.major + 1, 0, 0)
                } else if x.minor > 0 {
                    SemverVersion::new(0, x.minor + 1, 0)
                } else {
                    SemverVersion::new(0, 0, x.patch + 1)
                };
                v >= x && *v < upper
            }
            Primitive::Tilde(x) => v >= x && *v < SemverVersion::new(x.major, x.minor + 1, 0),
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Cmp(CmpOp::Eq, operand) => write!(f, "{operand}"),
            Primitive::Cmp(op, operand) => write!(f, "{}{operand}", op.symbol()),
            Primitive::Caret(v) => write!(f, "^{v}"),
            Primitive::Tilde(v) => write!(f, "~{v}"),
        }
    }
}

/// A disjunction (`||`) of conjunctions of primitives.
///
/// Within one alternative, primitives are separated by whitespace or commas;
/// an operator may be separated from its operand by spaces (`>= 4.3.*`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeExpr {
    pub alternatives: Vec<Vec<Primitive>>,
}

impl RangeExpr {
    pub fn matches(&self, v: &SemverVersion) -> bool {
        self.alternatives
            .iter()
            .any(|all| all.iter().all(|p| p.matches(v)))
    }
}

/// Convenience wrapper around [`RangeExpr::matches`].
pub fn range_matches(r: &RangeExpr, v: &SemverVersion) -> bool {
    r.matches(v)
}

fn parse_operand(text: &str, whole: &str) -> Result<Operand, SemverError> {
    let bad = || SemverError::Range {
        text: whole.to_string(),
        reason: format!("bad operand {text:?}"),
    };
    if text == "*" {
        return Ok(Operand::Wildcard {
            major: None,
            minor: None,
        });
    }
    if let Some(prefix) = text.strip_suffix(".*") {
        let parts: Vec<&str> = prefix.split('.').collect();
        return match parts.as_slice() {
            [a] => Ok(Operand::Wildcard {
                major: Some(parse_number(a, whole).map_err(|_| bad())?),
                minor: None,
            }),
            [a, b] => Ok(Operand::Wildcard {
                major: Some(parse_number(a, whole).map_err(|_| bad())?),
                minor: Some(parse_number(b, whole).map_err(|_| bad())?),
            }),
            _ => Err(bad()),
        };
    }
    text.parse().map(Operand::Exact).map_err(|_| bad())
}

fn split_op(token: &str) -> (Option<&str>, &str) {
    for op in [">=", "<=", "!=", ">", "<", "=", "^", "~"] {
        if let Some(rest) = token.strip_prefix(op) {
            return (Some(op), rest);
        }
    }
    (None, token)
}

fn parse_primitive(op: Option<&str>, operand: &str, whole: &str) -> Result<Primitive, SemverError> {
    let exact = |text: &str| -> Result<SemverVersion, SemverError> {
        text.parse().map_err(|_| SemverError::Range {
            text: whole.to_string(),
            reason: format!("{text:?} needs a full version"),
        })
    };
    let cmp = match op {
        None | Some("=") => CmpOp::Eq,
        Some("!=") => CmpOp::Neq,
        Some(">=") => CmpOp::Geq,
        Some(">") => CmpOp::Gt,
        Some("<=") => CmpOp::Leq,
        Some("<") => CmpOp::Lt,
        Some("^") => return Ok(Primitive::Caret(exact(operand)?)),
        Some("~") => return Ok(Primitive::Tilde(exact(operand)?)),
        Some(other) => unreachable!("operator {other} not produced by split_op"),
    };
    Ok(Primitive::Cmp(cmp, parse_operand(operand, whole)?))
}

impl FromStr for RangeExpr {
    type Err = SemverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut alternatives = vec![];
        for alt in s.split("||") {
            let tokens: Vec<&str> = alt
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .collect();
            if tokens.is_empty() {
                return Err(SemverError::Range {
                    text: s.to_string(),
                    reason: "empty alternative".into(),
                });
            }
            let mut prims = vec![];
            let mut i = 0;
            while i < tokens.len() {
                let (op, mut rest) = split_op(tokens[i]);
                if rest.is_empty() && op.is_some() {
                    i += 1;
                    rest = tokens.get(i).copied().ok_or_else(|| SemverError::Range {
                        text: s.to_string(),
                        reason: "operator without operand".into(),
                    })?;
                }
                prims.push(parse_primitive(op, rest, s)?);
                i += 1;
            }
            alternatives.push(prims);
        }
        Ok(RangeExpr { alternatives })
    }
}

impl fmt::Display for RangeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, alt) in self.alternatives.iter().enumerate() {
            if i > 0 {
                write!(f, " || ")?;
            }
            for (j, p) in alt.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{p}")?;
            }
        }
        Ok(())
    }
}

impl serde::Serialize for RangeExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for RangeExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
