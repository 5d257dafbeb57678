use std::fmt;
use std::str::FromStr;

use crate::digest::Digest;

const SEPARATOR: char = '\u{1F}';

/// Canonical form of a header list: trimmed, lowercased, sorted bytewise and
/// joined with the unit separator.
pub fn canonical_headers<S: AsRef<str>>(headers: &[S]) -> String {
    let mut normalized: Vec<String> = headers
        .iter()
        .map(|h| h.as_ref().trim().to_lowercase())
        .collect();
    normalized.sort_unstable_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
    let mut out = String::new();
    for (i, h) in normalized.iter().enumerate() {
        if i > 0 {
            out.push(SEPARATOR);
        }
        out.push_str(h);
    }
    out
}

/// Schema id of a tabular output, derived from its column headers only.
pub fn schema_hash<S: AsRef<str>>(headers: &[S]) -> Digest {
    Digest::of(canonical_headers(headers).as_bytes())
}

/// What a component accepts as input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputSchema {
    /// Pipeline roots (datasets) accept anything.
    Any,
    Digest(Digest),
}

impl InputSchema {
    pub fn accepts(&self, schema: &Digest) -> bool {
        match self {
            InputSchema::Any => true,
            InputSchema::Digest(d) => d == schema,
        }
    }
}

impl fmt::Display for InputSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSchema::Any => f.write_str("any"),
            InputSchema::Digest(d) => d.fmt(f),
        }
    }
}

impl FromStr for InputSchema {
    type Err = crate::digest::ParseDigestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "any" {
            Ok(InputSchema::Any)
        } else {
            s.parse().map(InputSchema::Digest)
        }
    }
}
