use std::fmt;
use std::str::FromStr;

use crate::digest::Digest;
use crate::model::{InputSchema, ModelError, SemanticVersion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentKind {
    Dataset,
    /// Pre-processing methods and models.
    Library,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Dataset => "dataset",
            ComponentKind::Library => "library",
        })
    }
}

impl FromStr for ComponentKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "dataset" => Ok(ComponentKind::Dataset),
            "library" => Ok(ComponentKind::Library),
            other => Err(ModelError::BadKind(other.to_string())),
        }
    }
}

/// Identity of a component version: name plus full semantic version.
///
/// Renders as `name@branch@schema.increment#digest`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentId {
    pub name: String,
    pub version: SemanticVersion,
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.version.to_record())
    }
}

impl FromStr for ComponentId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = s
            .split_once('@')
            .filter(|(n, _)| !n.is_empty())
            .ok_or_else(|| ModelError::BadVersion(s.to_string()))?;
        Ok(ComponentId {
            name: name.to_string(),
            version: SemanticVersion::parse_record(rest)?,
        })
    }
}

/// One registered version of a dataset or library.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComponentVersion {
    pub name: String,
    pub kind: ComponentKind,
    pub version: SemanticVersion,
    /// Object id of the payload bundle (metafile plus files) in the store.
    pub payload: Digest,
    pub input_schema: InputSchema,
    pub output_schema: Digest,
    pub schema_changed: bool,
}

impl ComponentVersion {
    pub fn id(&self) -> ComponentId {
        ComponentId {
            name: self.name.clone(),
            version: self.version.clone(),
        }
    }

    /// `<name, label>` as used in logs, e.g. `<cnn, dev@0.2>`.
    pub fn display(&self) -> String {
        format!("<{}, {}>", self.name, self.version)
    }
}

/// Whether `downstream` can consume what `upstream` produces.
///
/// Output schema is the only factor: the downstream input digest must equal
/// the upstream output digest, unless the downstream accepts anything.
pub fn is_compatible(upstream: &ComponentVersion, downstream: &ComponentVersion) -> bool {
    downstream.input_schema.accepts(&upstream.output_schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{schema_hash, MASTER};

    fn lib(name: &str, inc: u32, input: Digest, output: Digest) -> ComponentVersion {
        ComponentVersion {
            name: name.into(),
            kind: ComponentKind::Library,
            version: SemanticVersion {
                branch: MASTER.into(),
                schema_ordinal: 0,
                increment: inc,
                schema_digest: output,
            },
            payload: Digest::ZERO,
            input_schema: InputSchema::Digest(input),
            output_schema: output,
            schema_changed: false,
        }
    }

    #[test]
    fn compatibility_is_digest_equality() {
        let raw = schema_hash(&["a", "b"]);
        let feat0 = schema_hash(&["a", "b", "f"]);
        let feat1 = schema_hash(&["a", "b", "f", "g"]);
        let fe0 = lib("feature_extract", 0, raw, feat0);
        let mut fe1 = lib("feature_extract", 0, raw, feat1);
        fe1.version.schema_ordinal = 1;
        let cnn0 = lib("cnn", 0, feat0, schema_hash(&["model"]));
        assert!(is_compatible(&fe0, &cnn0));
        assert!(!is_compatible(&fe1, &cnn0));
    }

    #[test]
    fn reflexive_when_in_equals_out() {
        let s = schema_hash(&["x"]);
        let c = lib("cleanse", 0, s, s);
        assert!(is_compatible(&c, &c));
    }

    #[test]
    fn any_input_accepts_everything() {
        let mut ds = lib("data", 0, Digest::ZERO, schema_hash(&["x"]));
        ds.input_schema = InputSchema::Any;
        ds.kind = ComponentKind::Dataset;
        let up = lib("other", 0, Digest::ZERO, schema_hash(&["y"]));
        assert!(is_compatible(&up, &ds));
    }

    #[test]
    fn id_round_trip() {
        let c = lib("feature_extract", 4, Digest::ZERO, schema_hash(&["y"]));
        let id = c.id();
        let text = id.to_string();
        assert!(text.starts_with("feature_extract@master@0.4#"));
        assert_eq!(text.parse::<ComponentId>().unwrap(), id);
        assert_eq!(c.display(), "<feature_extract, 0.4>");
    }
}
