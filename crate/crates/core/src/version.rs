//! Debian version handling: parsing, canonical rendering, total ordering and
//! relational constraints.
//!
//! The comparison algorithm follows dpkg's `verrevcmp`: versions are split
//! into `[epoch:]upstream[-revision]`, the epoch is compared numerically and
//! the other two parts segment-wise, alternating between non-digit and digit
//! runs. `~` sorts before everything, including the empty string, which makes
//! `1.0~rc1` earlier than `1.0`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Error raised when a version string or relation cannot be parsed.
///
/// Every variant names the offending span so callers can surface precise
/// diagnostics for malformed index data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VersionError {
    #[error("empty version string")]
    Empty,
    #[error("epoch `{0}` is not a number")]
    BadEpoch(String),
    #[error("epoch `{0}` does not fit in 32 bits")]
    EpochRange(String),
    #[error("upstream version is empty in `{0}`")]
    EmptyUpstream(String),
    #[error("upstream version `{0}` must start with a digit or letter")]
    UpstreamStart(String),
    #[error("invalid character `{ch}` in upstream version `{span}`")]
    UpstreamChar { ch: char, span: String },
    #[error("revision is empty in `{0}`")]
    EmptyRevision(String),
    #[error("invalid character `{ch}` in revision `{span}`")]
    RevisionChar { ch: char, span: String },
    #[error("unknown version relation `{0}`")]
    BadRelation(String),
}

/// A parsed Debian package version.
///
/// Equality and ordering are semantic, not textual: `1.0` equals `1.0-0` and
/// `0:1.0`, because a missing epoch means `0` and a missing revision compares
/// like an empty string (which in turn compares equal to `0` as a digit run).
/// Because distinct strings can compare equal, `DebVersion` deliberately does
/// not implement `Hash`; use the rendered string as a map key instead.
#[derive(Debug, Clone)]
pub struct DebVersion {
    epoch: u32,
    upstream: String,
    revision: String,
}

impl DebVersion {
    /// Parse a version string. Convenience alias for the `FromStr` impl.
    pub fn parse(s: &str) -> Result<Self, VersionError> {
        s.parse()
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn upstream(&self) -> &str {
        &self.upstream
    }

    /// The Debian revision, empty when the version has none.
    pub fn revision(&self) -> &str {
        &self.revision
    }

    /// True when the upstream part carries a `~` pre-release marker.
    pub fn is_prerelease(&self) -> bool {
        self.upstream.contains('~')
    }
}

impl FromStr for DebVersion {
    type Err = VersionError;

    fn from_str(s: &str) -> Result<Self, VersionError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(VersionError::Empty);
        }
        let (epoch, rest) = match s.split_once(':') {
            Some((e, rest)) => {
                if e.is_empty() || !e.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(VersionError::BadEpoch(e.to_string()));
                }
                let epoch = e
                    .parse::<u32>()
                    .map_err(|_| VersionError::EpochRange(e.to_string()))?;
                (epoch, rest)
            }
            None => (0, s),
        };
        let (upstream, revision) = match rest.rsplit_once('-') {
            Some((u, r)) => (u, r),
            None => (rest, ""),
        };
        if upstream.is_empty() {
            return Err(VersionError::EmptyUpstream(s.to_string()));
        }
        if rest.contains('-') && revision.is_empty() {
            return Err(VersionError::EmptyRevision(s.to_string()));
        }
        let first = upstream.chars().next().unwrap();
        if !first.is_ascii_alphanumeric() {
            return Err(VersionError::UpstreamStart(upstream.to_string()));
        }
        if let Some(ch) = upstream
            .chars()
            .find(|&c| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '~' | '-')))
        {
            return Err(VersionError::UpstreamChar {
                ch,
                span: upstream.to_string(),
            });
        }
        if let Some(ch) = revision
            .chars()
            .find(|&c| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '~')))
        {
            return Err(VersionError::RevisionChar {
                ch,
                span: revision.to_string(),
            });
        }
        Ok(DebVersion {
            epoch,
            upstream: upstream.to_string(),
            revision: revision.to_string(),
        })
    }
}

impl fmt::Display for DebVersion {
    /// Canonical rendering: the epoch appears only when non-zero, the
    /// revision only when non-empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.epoch != 0 {
            write!(f, "{}:", self.epoch)?;
        }
        f.write_str(&self.upstream)?;
        if !self.revision.is_empty() {
            write!(f, "-{}", self.revision)?;
        }
        Ok(())
    }
}

impl Serialize for DebVersion {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DebVersion {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PartialEq for DebVersion {
    fn eq(&self, other: &Self) -> bool {
        compare(self, other) == Ordering::Equal
    }
}

impl Eq for DebVersion {}

impl PartialOrd for DebVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DebVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

/// Sort weight of a single byte in a non-digit run: `~` before end-of-string,
/// end-of-string before letters, letters before everything else.
fn order(b: Option<u8>) -> i32 {
    match b {
        None => 0,
        Some(b'~') => -1,
        Some(b) if b.is_ascii_digit() => 0,
        Some(b) if b.is_ascii_alphabetic() => i32::from(b),
        Some(b) => i32::from(b) + 256,
    }
}

/// dpkg's `verrevcmp`: alternate between comparing non-digit runs
/// byte-by-byte (with `~` sorting lowest) and digit runs numerically.
/// Leading zeros are skipped so the numeric comparison needs no big
/// integers regardless of run length.
fn verrevcmp(a: &str, b: &str) -> Ordering {
    let a = a.as_bytes();
    let b = b.as_bytes();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        // Non-digit run: while either side has a non-digit byte left.
        while (i < a.len() && !a[i].is_ascii_digit()) || (j < b.len() && !b[j].is_ascii_digit()) {
            let oa = order(a.get(i).copied());
            let ob = order(b.get(j).copied());
            if oa != ob {
                return oa.cmp(&ob);
            }
            i += 1;
            j += 1;
        }
        // Digit run: skip leading zeros, then compare digit-wise; the longer
        // remaining run wins, otherwise the first differing digit decides.
        while i < a.len() && a[i] == b'0' {
            i += 1;
        }
        while j < b.len() && b[j] == b'0' {
            j += 1;
        }
        let mut first_diff = Ordering::Equal;
        while i < a.len() && a[i].is_ascii_digit() && j < b.len() && b[j].is_ascii_digit() {
            if first_diff == Ordering::Equal {
                first_diff = a[i].cmp(&b[j]);
            }
            i += 1;
            j += 1;
        }
        if i < a.len() && a[i].is_ascii_digit() {
            return Ordering::Greater;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            return Ordering::Less;
        }
        if first_diff != Ordering::Equal {
            return first_diff;
        }
    }
    Ordering::Equal
}

/// Total order over Debian versions: epoch first (numeric), then upstream,
/// then revision, the last two via `verrevcmp`.
pub fn compare(a: &DebVersion, b: &DebVersion) -> Ordering {
    a.epoch
        .cmp(&b.epoch)
        .then_with(|| verrevcmp(&a.upstream, &b.upstream))
        .then_with(|| verrevcmp(&a.revision, &b.revision))
}

/// The five dependency relations. Obsolete single `<` and `>` are accepted
/// on input as aliases for `<=` and `>=` but are never rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VersionRelation {
    #[serde(rename = "<<")]
    StrictlyEarlier,
    #[serde(rename = "<=")]
    EarlierOrEqual,
    #[serde(rename = "=")]
    Exact,
    #[serde(rename = ">=")]
    LaterOrEqual,
    #[serde(rename = ">>")]
    StrictlyLater,
}

impl VersionRelation {
    pub fn parse(s: &str) -> Result<Self, VersionError> {
        match s {
            "<<" => Ok(Self::StrictlyEarlier),
            "<=" | "<" => Ok(Self::EarlierOrEqual),
            "=" => Ok(Self::Exact),
            ">=" | ">" => Ok(Self::LaterOrEqual),
            ">>" => Ok(Self::StrictlyLater),
            other => Err(VersionError::BadRelation(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::StrictlyEarlier => "<<",
            Self::EarlierOrEqual => "<=",
            Self::Exact => "=",
            Self::LaterOrEqual => ">=",
            Self::StrictlyLater => ">>",
        }
    }
}

impl fmt::Display for VersionRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VersionRelation {
    type Err = VersionError;

    fn from_str(s: &str) -> Result<Self, VersionError> {
        Self::parse(s)
    }
}

/// A version bound: a relation together with its right-hand side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub relation: VersionRelation,
    pub version: DebVersion,
}

impl Constraint {
    pub fn new(relation: VersionRelation, version: DebVersion) -> Self {
        Constraint { relation, version }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.relation, self.version)
    }
}

/// Does `candidate` satisfy the constraint?
pub fn satisfies(candidate: &DebVersion, constraint: &Constraint) -> bool {
    let ord = compare(candidate, &constraint.version);
    match constraint.relation {
        VersionRelation::StrictlyEarlier => ord == Ordering::Less,
        VersionRelation::EarlierOrEqual => ord != Ordering::Greater,
        VersionRelation::Exact => ord == Ordering::Equal,
        VersionRelation::LaterOrEqual => ord != Ordering::Less,
        VersionRelation::StrictlyLater => ord == Ordering::Greater,
    }
}
