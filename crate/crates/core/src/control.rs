//! Parsing and rendering of Debian control data: deb822 paragraphs, the
//! dependency field grammar, and binary package records as they appear in
//! `Packages` indices.
//!
//! Parsing is strict per paragraph but recoverable per index: a malformed
//! paragraph is reported as a diagnostic and skipped so one broken stanza
//! cannot poison a whole snapshot.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::version::{Constraint, DebVersion, VersionError, VersionRelation};

/// Error for a single paragraph or field that cannot be parsed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("line {line}: expected `field: value`, got `{text}`")]
    NotAField { line: usize, text: String },
    #[error("line {line}: continuation line before any field")]
    OrphanContinuation { line: usize },
    #[error("line {line}: field name `{name}` is empty or contains whitespace")]
    BadFieldName { line: usize, name: String },
    #[error("line {line}: duplicate field `{name}` (field names are case-insensitive)")]
    DuplicateField { line: usize, name: String },
    #[error("paragraph is empty")]
    EmptyParagraph,
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}`: {source}")]
    BadVersion {
        field: &'static str,
        source: VersionError,
    },
    #[error("field `{field}`: {source}")]
    BadDepends {
        field: &'static str,
        source: DependsError,
    },
    #[error("field `Size`: `{0}` is not an unsigned integer")]
    BadSize(String),
}

/// Error within a dependency expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DependsError {
    #[error("empty dependency clause in `{0}`")]
    EmptyClause(String),
    #[error("invalid package name `{0}`")]
    BadName(String),
    #[error("unsubstituted variable `{0}`")]
    Substitution(String),
    #[error("unbalanced `{delim}` in `{span}`")]
    Unbalanced { delim: char, span: String },
    #[error("malformed version constraint `{0}`")]
    BadConstraint(String),
    #[error("{0}")]
    Version(#[from] VersionError),
    #[error("malformed architecture restriction `{0}`")]
    BadArchRestriction(String),
    #[error("trailing garbage `{garbage}` after atom `{atom}`")]
    TrailingGarbage { atom: String, garbage: String },
}

/// A non-fatal problem found while parsing an index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Zero-based paragraph number within the input.
    pub paragraph: usize,
    /// One-based line number where the problem was detected, if known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "paragraph {} (line {}): {}", self.paragraph, line, self.message),
            None => write!(f, "paragraph {}: {}", self.paragraph, self.message),
        }
    }
}

/// One deb822 paragraph: an ordered list of `(name, value)` fields.
///
/// Field order and name spelling are preserved for rendering; lookup and the
/// uniqueness guarantee are case-insensitive. Multi-line values store their
/// logical lines joined with `\n` (the leading continuation marker of each
/// physical line is not part of the value).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Paragraph {
    fields: Vec<(String, String)>,
}

impl Paragraph {
    /// Parse exactly one paragraph; fails on the first malformed line.
    pub fn parse(text: &str) -> Result<Self, ControlError> {
        let mut lines = text.lines().enumerate().peekable();
        let para = parse_one_paragraph(&mut lines)?;
        para.ok_or(ControlError::EmptyParagraph)
    }

    /// Case-insensitive field lookup.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Fields in original order.
    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    /// Append a field, enforcing case-insensitive uniqueness.
    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) -> Result<(), ControlError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_ascii_whitespace() || c == ':') {
            return Err(ControlError::BadFieldName { line: 0, name });
        }
        if self.get(&name).is_some() {
            return Err(ControlError::DuplicateField { line: 0, name });
        }
        self.fields.push((name, value.into()));
        Ok(())
    }

    /// Render back to deb822 text (no trailing blank line). Continuation
    /// lines are emitted with a single leading space.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.fields {
            let mut lines = value.split('\n');
            let _ = writeln!(out, "{}: {}", name, lines.next().unwrap_or(""));
            for cont in lines {
                let _ = writeln!(out, " {cont}");
            }
        }
        out
    }
}

type Lines<'a> = std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>;

/// Consume one paragraph from the line stream. Returns `Ok(None)` when the
/// stream held only blank / comment lines.
fn parse_one_paragraph(lines: &mut Lines) -> Result<Option<Paragraph>, ControlError> {
    // Skip leading blank lines and comments.
    while let Some((_, line)) = lines.peek() {
        if line.trim().is_empty() || line.starts_with('#') {
            lines.next();
        } else {
            break;
        }
    }
    let mut para = Paragraph::default();
    while let Some(&(idx, line)) = lines.peek() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            break;
        }
        if line.starts_with('#') {
            lines.next();
            continue;
        }
        if line.starts_with(' ') || line.starts_with('\t') {
            // Continuation of the previous field; strip the one-char marker.
            let cont = &line[1..];
            match para.fields.last_mut() {
                Some((_, value)) => {
                    value.push('\n');
                    value.push_str(cont);
                }
                None => return Err(ControlError::OrphanContinuation { line: lineno }),
            }
            lines.next();
            continue;
        }
        let Some((name, value)) = line.split_once(':') else {
            return Err(ControlError::NotAField {
                line: lineno,
                text: line.to_string(),
            });
        };
        let name = name.trim_end();
        if name.is_empty() || name.chars().any(|c| c.is_ascii_whitespace()) {
            return Err(ControlError::BadFieldName {
                line: lineno,
                name: name.to_string(),
            });
        }
        if para.get(name).is_some() {
            return Err(ControlError::DuplicateField {
                line: lineno,
                name: name.to_string(),
            });
        }
        para.fields
            .push((name.to_string(), value.trim_start().to_string()));
        lines.next();
    }
    if para.fields.is_empty() {
        Ok(None)
    } else {
        Ok(Some(para))
    }
}

/// Split a text into paragraphs. Malformed paragraphs are skipped and
/// reported; parsing always continues with the next blank-line boundary.
pub fn parse_paragraphs(text: &str) -> (Vec<Paragraph>, Vec<Diagnostic>) {
    let mut paras = Vec::new();
    let mut diagnostics = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    let mut index = 0;
    loop {
        match parse_one_paragraph(&mut lines) {
            Ok(Some(p)) => {
                paras.push(p);
                index += 1;
            }
            Ok(None) => break,
            Err(err) => {
                let line = match &err {
                    ControlError::NotAField { line, .. }
                    | ControlError::OrphanContinuation { line }
                    | ControlError::BadFieldName { line, .. }
                    | ControlError::DuplicateField { line, .. } => Some(*line),
                    _ => None,
                };
                diagnostics.push(Diagnostic {
                    paragraph: index,
                    line,
                    message: err.to_string(),
                });
                index += 1;
                // Resynchronise: drop lines up to the next paragraph break.
                while let Some((_, l)) = lines.peek() {
                    if l.trim().is_empty() {
                        break;
                    }
                    lines.next();
                }
            }
        }
        if lines.peek().is_none() {
            break;
        }
    }
    (paras, diagnostics)
}

/// One architecture token inside `[...]`, e.g. `amd64` or `!i386`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchRestriction {
    pub negated: bool,
    pub arch: String,
}

impl fmt::Display for ArchRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        f.write_str(&self.arch)
    }
}

/// A single dependency target: package name with optional multiarch
/// qualifier, version constraint and architecture restriction list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyAtom {
    pub package: String,
    /// Multiarch qualifier after the name (`pkg:any` stores `any`); the bare
    /// name is what gets matched during resolution.
    pub arch_qualifier: Option<String>,
    pub constraint: Option<Constraint>,
    pub arch_restrictions: Vec<ArchRestriction>,
}

impl DependencyAtom {
    pub fn unversioned(package: impl Into<String>) -> Self {
        DependencyAtom {
            package: package.into(),
            arch_qualifier: None,
            constraint: None,
            arch_restrictions: Vec::new(),
        }
    }

    pub fn versioned(package: impl Into<String>, relation: VersionRelation, version: DebVersion) -> Self {
        DependencyAtom {
            constraint: Some(Constraint::new(relation, version)),
            ..Self::unversioned(package)
        }
    }
}

impl fmt::Display for DependencyAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.package)?;
        if let Some(q) = &self.arch_qualifier {
            write!(f, ":{q}")?;
        }
        if let Some(c) = &self.constraint {
            write!(f, " ({c})")?;
        }
        if !self.arch_restrictions.is_empty() {
            f.write_str(" [")?;
            for (i, r) in self.arch_restrictions.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{r}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

/// One comma-separated element of a dependency field: alternatives joined
/// by `|`, satisfied when any alternative is satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyClause {
    pub alternatives: Vec<DependencyAtom>,
}

impl fmt::Display for DependencyClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, alt) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{alt}")?;
        }
        Ok(())
    }
}

fn valid_package_name(name: &str) -> bool {
    name.len() >= 2
        && name.chars().next().is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '+' | '-' | '.'))
}

/// Split on `sep` at nesting depth zero with respect to `()` and `[]`.
fn split_top_level(s: &str, sep: char) -> Result<Vec<&str>, DependsError> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(DependsError::Unbalanced {
                        delim: c,
                        span: s.to_string(),
                    });
                }
            }
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(DependsError::Unbalanced {
            delim: '(',
            span: s.to_string(),
        });
    }
    parts.push(&s[start..]);
    Ok(parts)
}

/// Parse one dependency atom: `name[:qual] [(rel ver)] [[arches]]`.
fn parse_atom(s: &str) -> Result<DependencyAtom, DependsError> {
    let s = s.trim();
    if let Some(pos) = s.find("${") {
        let end = s[pos..].find('}').map(|e| pos + e + 1).unwrap_or(s.len());
        return Err(DependsError::Substitution(s[pos..end].to_string()));
    }
    // Name runs up to the first whitespace, `(` or `[`.
    let name_end = s
        .find(|c: char| c.is_ascii_whitespace() || c == '(' || c == '[')
        .unwrap_or(s.len());
    let (raw_name, mut rest) = s.split_at(name_end);
    let (name, qualifier) = match raw_name.split_once(':') {
        Some((n, q)) => (n, Some(q.to_string())),
        None => (raw_name, None),
    };
    if !valid_package_name(name) {
        return Err(DependsError::BadName(raw_name.to_string()));
    }
    if let Some(q) = &qualifier {
        if q.is_empty() || !q.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(DependsError::BadName(raw_name.to_string()));
        }
    }
    rest = rest.trim_start();
    let mut constraint = None;
    if let Some(after) = rest.strip_prefix('(') {
        let Some(close) = after.find(')') else {
            return Err(DependsError::Unbalanced {
                delim: '(',
                span: s.to_string(),
            });
        };
        let inner = after[..close].trim();
        let rel_end = inner
            .find(|c: char| !matches!(c, '<' | '>' | '='))
            .ok_or_else(|| DependsError::BadConstraint(inner.to_string()))?;
        if rel_end == 0 {
            return Err(DependsError::BadConstraint(inner.to_string()));
        }
        let relation = VersionRelation::parse(&inner[..rel_end])
            .map_err(|_| DependsError::BadConstraint(inner.to_string()))?;
        let version: DebVersion = inner[rel_end..].trim().parse()?;
        constraint = Some(Constraint::new(relation, version));
        rest = after[close + 1..].trim_start();
    }
    let mut arch_restrictions = Vec::new();
    if let Some(after) = rest.strip_prefix('[') {
        let Some(close) = after.find(']') else {
            return Err(DependsError::Unbalanced {
                delim: '[',
                span: s.to_string(),
            });
        };
        let inner = after[..close].trim();
        if inner.is_empty() {
            return Err(DependsError::BadArchRestriction(s.to_string()));
        }
        for token in inner.split_ascii_whitespace() {
            let (negated, arch) = match token.strip_prefix('!') {
                Some(a) => (true, a),
                None => (false, token),
            };
            if arch.is_empty()
                || !arch
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
            {
                return Err(DependsError::BadArchRestriction(token.to_string()));
            }
            arch_restrictions.push(ArchRestriction {
                negated,
                arch: arch.to_string(),
            });
        }
        rest = after[close + 1..].trim_start();
    }
    if !rest.is_empty() {
        return Err(DependsError::TrailingGarbage {
            atom: s.to_string(),
            garbage: rest.to_string(),
        });
    }
    Ok(DependencyAtom {
        package: name.to_string(),
        arch_qualifier: qualifier,
        constraint,
        arch_restrictions,
    })
}

/// Parse a full dependency field value (`Depends`, `Pre-Depends`, ...).
/// An empty value yields an empty clause list.
pub fn parse_depends(s: &str) -> Result<Vec<DependencyClause>, DependsError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let mut clauses = Vec::new();
    for clause_text in split_top_level(s, ',')? {
        let clause_text = clause_text.trim();
        if clause_text.is_empty() {
            return Err(DependsError::EmptyClause(s.to_string()));
        }
        let mut alternatives = Vec::new();
        for alt in split_top_level(clause_text, '|')? {
            let alt = alt.trim();
            if alt.is_empty() {
                return Err(DependsError::EmptyClause(clause_text.to_string()));
            }
            alternatives.push(parse_atom(alt)?);
        }
        clauses.push(DependencyClause { alternatives });
    }
    Ok(clauses)
}

/// Render a clause list back to field-value text.
pub fn render_depends(clauses: &[DependencyClause]) -> String {
    clauses
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// A binary package stanza from a `Packages` index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: String,
    pub version: DebVersion,
    pub architecture: String,
    /// Base source package name with any parenthesized version stripped;
    /// `None` when the stanza has no `Source` field (source == name).
    pub source_name: Option<String>,
    pub depends: Vec<DependencyClause>,
    pub pre_depends: Vec<DependencyClause>,
    pub recommends: Vec<DependencyClause>,
    pub suggests: Vec<DependencyClause>,
    pub provides: Vec<DependencyAtom>,
    pub filename: Option<String>,
    pub size: Option<u64>,
    pub sha256: Option<String>,
    pub description: Option<String>,
}

impl PackageRecord {
    /// The source package this binary belongs to: the `Source` base name when
    /// present, otherwise the package's own name.
    pub fn source_or_name(&self) -> &str {
        self.source_name.as_deref().unwrap_or(&self.name)
    }

    /// Extract a record from a parsed paragraph.
    pub fn from_paragraph(para: &Paragraph) -> Result<Self, ControlError> {
        let name = para
            .get("Package")
            .ok_or(ControlError::MissingField("Package"))?
            .trim()
            .to_string();
        if !valid_package_name(&name) {
            return Err(ControlError::BadDepends {
                field: "Package",
                source: DependsError::BadName(name),
            });
        }
        let version: DebVersion = para
            .get("Version")
            .ok_or(ControlError::MissingField("Version"))?
            .parse()
            .map_err(|source| ControlError::BadVersion {
                field: "Version",
                source,
            })?;
        let architecture = para
            .get("Architecture")
            .ok_or(ControlError::MissingField("Architecture"))?
            .trim()
            .to_string();
        let source_name = para.get("Source").map(|s| {
            // `Source: glibc (2.28-10)` → base name before the version.
            s.split_whitespace().next().unwrap_or("").to_string()
        });
        let rels = |field: &'static str| -> Result<Vec<DependencyClause>, ControlError> {
            match para.get(field) {
                Some(v) => parse_depends(v).map_err(|source| ControlError::BadDepends { field, source }),
                None => Ok(Vec::new()),
            }
        };
        let provides = match para.get("Provides") {
            Some(v) => parse_depends(v)
                .map_err(|source| ControlError::BadDepends {
                    field: "Provides",
                    source,
                })?
                .into_iter()
                .flat_map(|c| c.alternatives)
                .collect(),
            None => Vec::new(),
        };
        let size = match para.get("Size") {
            Some(v) => Some(
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| ControlError::BadSize(v.to_string()))?,
            ),
            None => None,
        };
        Ok(PackageRecord {
            name,
            version,
            architecture,
            source_name,
            depends: rels("Depends")?,
            pre_depends: rels("Pre-Depends")?,
            recommends: rels("Recommends")?,
            suggests: rels("Suggests")?,
            provides,
            filename: para.get("Filename").map(str::to_string),
            size,
            sha256: para.get("SHA256").map(str::to_string),
            description: para.get("Description").map(str::to_string),
        })
    }

    /// Render back to a paragraph with canonical field order.
    pub fn to_paragraph(&self) -> Paragraph {
        let mut p = Paragraph::default();
        let mut push = |name: &str, value: String| {
            p.push(name, value).expect("canonical fields are unique");
        };
        push("Package", self.name.clone());
        if let Some(src) = &self.source_name {
            push("Source", src.clone());
        }
        push("Version", self.version.to_string());
        push("Architecture", self.architecture.clone());
        for (field, clauses) in [
            ("Pre-Depends", &self.pre_depends),
            ("Depends", &self.depends),
            ("Recommends", &self.recommends),
            ("Suggests", &self.suggests),
        ] {
            if !clauses.is_empty() {
                push(field, render_depends(clauses));
            }
        }
        if !self.provides.is_empty() {
            let rendered = self
                .provides
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            push("Provides", rendered);
        }
        if let Some(f) = &self.filename {
            push("Filename", f.clone());
        }
        if let Some(s) = self.size {
            push("Size", s.to_string());
        }
        if let Some(h) = &self.sha256 {
            push("SHA256", h.clone());
        }
        if let Some(d) = &self.description {
            push("Description", d.clone());
        }
        p
    }
}

/// Result of parsing a whole `Packages` index.
#[derive(Debug, Clone, Default)]
pub struct IndexParse {
    pub records: Vec<PackageRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parse a `Packages` index: paragraphs become records, malformed stanzas
/// become diagnostics, and `(name, version)` duplicates keep the last
/// occurrence (with a diagnostic), matching how mirrors overwrite entries.
pub fn parse_packages_index(text: &str) -> IndexParse {
    let (paras, mut diagnostics) = parse_paragraphs(text);
    let mut records: Vec<PackageRecord> = Vec::with_capacity(paras.len());
    let mut by_key: std::collections::HashMap<(String, String), usize> = std::collections::HashMap::new();
    for (idx, para) in paras.iter().enumerate() {
        match PackageRecord::from_paragraph(para) {
            Ok(rec) => {
                let key = (rec.name.clone(), rec.version.to_string());
                if let Some(&slot) = by_key.get(&key) {
                    diagnostics.push(Diagnostic {
                        paragraph: idx,
                        line: None,
                        message: format!(
                            "duplicate entry for {} {}; keeping the later one",
                            key.0, key.1
                        ),
                    });
                    records[slot] = rec;
                } else {
                    by_key.insert(key, records.len());
                    records.push(rec);
                }
            }
            Err(err) => diagnostics.push(Diagnostic {
                paragraph: idx,
                line: None,
                message: err.to_string(),
            }),
        }
    }
    IndexParse {
        records,
        diagnostics,
    }
}
