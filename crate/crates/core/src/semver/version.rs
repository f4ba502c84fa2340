use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::SemverError;

/// `major.minor.patch` with an optional `-qualifier`.
///
/// A qualified version sorts before the plain release with the same numbers;
/// qualifiers compare as plain strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemverVersion {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
    pub qualifier: Option<String>,
}

impl SemverVersion {
    pub const fn new(major: u64, minor: u64, patch: u64) -> Self {
        SemverVersion {
            major,
            minor,
            patch,
            qualifier: None,
        }
    }

    pub fn with_qualifier(mut self, q: impl Into<String>) -> Self {
        self.qualifier = Some(q.into());
        self
    }
}

impl Ord for SemverVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.major, self.minor, self.patch)
            .cmp(&(other.major, other.minor, other.patch))
            .then_with(|| match (&self.qualifier, &other.qualifier) {
                (None, None) => Ordering::Equal,
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (Some(a), Some(b)) => a.cmp(b),
            })
    }
}

impl PartialOrd for SemverVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SemverVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)?;
        if let Some(q) = &self.qualifier {
            write!(f, "-{q}")?;
        }
        Ok(())
    }
}

pub(super) fn parse_number(part: &str, whole: &str) -> Result<u64, SemverError> {
    if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(SemverError::Version(whole.to_string()));
    }
    part.parse().map_err(|_| SemverError::Version(whole.to_string()))
}

impl FromStr for SemverVersion {
    type Err = SemverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (numbers, qualifier) = match s.split_once('-') {
            Some((n, q)) => {
                let ok = !q.is_empty()
                    && q.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-');
                if !ok {
                    return Err(SemverError::Version(s.to_string()));
                }
                (n, Some(q.to_string()))
            }
            None => (s, None),
        };
        let parts: Vec<&str> = numbers.split('.').collect();
        let [major, minor, patch] = parts.as_slice() else {
            return Err(SemverError::Version(s.to_string()));
        };
        Ok(SemverVersion {
            major: parse_number(major, s)?,
            minor: parse_number(minor, s)?,
            patch: parse_number(patch, s)?,
            qualifier,
        })
    }
}

impl TryFrom<String> for SemverVersion {
    type Error = SemverError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SemverVersion> for String {
    fn from(v: SemverVersion) -> String {
        v.to_string()
    }
}

impl serde::Serialize for SemverVersion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SemverVersion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
