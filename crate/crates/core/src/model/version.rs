use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::digest::Digest;
use crate::model::ModelError;

pub const MASTER: &str = "master";

/// The human-facing part of a component version: `branch@schema.increment`.
///
/// Versions on `master` render in the short form `schema.increment`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VersionLabel {
    pub branch: String,
    pub schema_ordinal: u32,
    pub increment: u32,
}

impl fmt::Display for VersionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.branch == MASTER {
            write!(f, "{}.{}", self.schema_ordinal, self.increment)
        } else {
            write!(f, "{}@{}.{}", self.branch, self.schema_ordinal, self.increment)
        }
    }
}

impl FromStr for VersionLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadVersion(s.to_string());
        let (branch, numbers) = match s.rsplit_once('@') {
            Some((b, n)) if !b.is_empty() => (b.to_string(), n),
            Some(_) => return Err(bad()),
            None => (MASTER.to_string(), s),
        };
        let (schema, inc) = numbers.split_once('.').ok_or_else(bad)?;
        Ok(VersionLabel {
            branch,
            schema_ordinal: schema.parse().map_err(|_| bad())?,
            increment: inc.parse().map_err(|_| bad())?,
        })
    }
}

/// A component's semantic version.
///
/// `schema_ordinal` is a per-component display counter; `schema_digest` is
/// what compatibility is actually decided on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemanticVersion {
    pub branch: String,
    pub schema_ordinal: u32,
    pub increment: u32,
    pub schema_digest: Digest,
}

impl SemanticVersion {
    /// The `0.0` version a component receives on its first commit.
    pub fn initial(branch: impl Into<String>, schema_digest: Digest) -> Self {
        SemanticVersion {
            branch: branch.into(),
            schema_ordinal: 0,
            increment: 0,
            schema_digest,
        }
    }

    pub fn label(&self) -> VersionLabel {
        VersionLabel {
            branch: self.branch.clone(),
            schema_ordinal: self.schema_ordinal,
            increment: self.increment,
        }
    }

    pub fn with_label(label: VersionLabel, schema_digest: Digest) -> Self {
        SemanticVersion {
            branch: label.branch,
            schema_ordinal: label.schema_ordinal,
            increment: label.increment,
            schema_digest,
        }
    }

    /// Record form `branch@schema.increment#digest`, always with the branch.
    pub fn to_record(&self) -> String {
        format!(
            "{}@{}.{}#{}",
            self.branch, self.schema_ordinal, self.increment, self.schema_digest
        )
    }

    pub fn parse_record(s: &str) -> Result<Self, ModelError> {
        let (label, digest) = s
            .split_once('#')
            .ok_or_else(|| ModelError::BadVersion(s.to_string()))?;
        let digest = digest
            .parse()
            .map_err(|_| ModelError::BadVersion(s.to_string()))?;
        Ok(Self::with_label(label.parse()?, digest))
    }
}

impl fmt::Display for SemanticVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label().fmt(f)
    }
}

/// Ordered by `(schema_ordinal, increment, branch)`, digest last.
impl Ord for SemanticVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.schema_ordinal, self.increment, &self.branch, &self.schema_digest).cmp(&(
            other.schema_ordinal,
            other.increment,
            &other.branch,
            &other.schema_digest,
        ))
    }
}

impl PartialOrd for SemanticVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Derive the version that follows `prev`.
///
/// An unchanged schema bumps the increment; a changed schema bumps the
/// schema ordinal and resets the increment. The flag must agree with the
/// digests.
pub fn next_version(
    prev: &SemanticVersion,
    schema_changed: bool,
    new_schema_digest: Digest,
    branch: &str,
) -> Result<SemanticVersion, ModelError> {
    let digest_changed = new_schema_digest != prev.schema_digest;
    if digest_changed != schema_changed {
        return Err(ModelError::SchemaFlagMismatch {
            flagged: schema_changed,
            digest_changed,
        });
    }
    let (schema_ordinal, increment) = if schema_changed {
        (prev.schema_ordinal + 1, 0)
    } else {
        (prev.schema_ordinal, prev.increment + 1)
    };
    Ok(SemanticVersion {
        branch: branch.to_string(),
        schema_ordinal,
        increment,
        schema_digest: new_schema_digest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(n: u8) -> Digest {
        Digest::of(&[n])
    }

    #[test]
    fn incremental_then_schema_update() {
        let v0 = SemanticVersion::initial(MASTER, d(0));
        assert_eq!(v0.to_string(), "0.0");
        let v1 = next_version(&v0, false, d(0), MASTER).unwrap();
        assert_eq!(v1.to_string(), "0.1");
        let v2 = next_version(&v1, true, d(1), MASTER).unwrap();
        assert_eq!(v2.to_string(), "1.0");
        let v3 = next_version(&v2, false, d(1), MASTER).unwrap();
        assert_eq!(v3.to_string(), "1.1");
    }

    #[test]
    fn flag_mismatch_rejected() {
        let v0 = SemanticVersion::initial(MASTER, d(0));
        assert_eq!(
            next_version(&v0, true, d(0), MASTER),
            Err(ModelError::SchemaFlagMismatch {
                flagged: true,
                digest_changed: false
            })
        );
        assert!(next_version(&v0, false, d(1), MASTER).is_err());
    }

    #[test]
    fn labels_render_and_parse() {
        let dev: VersionLabel = "dev@2.3".parse().unwrap();
        assert_eq!(dev.branch, "dev");
        assert_eq!(dev.to_string(), "dev@2.3");
        let m: VersionLabel = "0.1".parse().unwrap();
        assert_eq!(m.branch, MASTER);
        assert_eq!(m.to_string(), "0.1");
        assert_eq!("master@0.1".parse::<VersionLabel>().unwrap().to_string(), "0.1");
        for bad in ["", "1", "a.b", "@1.0", "dev@1"] {
            assert!(bad.parse::<VersionLabel>().is_err(), "{bad}");
        }
    }

    #[test]
    fn record_round_trip() {
        let v = SemanticVersion {
            branch: "feature-x".into(),
            schema_ordinal: 3,
            increment: 7,
            schema_digest: d(9),
        };
        assert_eq!(SemanticVersion::parse_record(&v.to_record()).unwrap(), v);
    }

    proptest! {
        #[test]
        fn label_round_trips(branch in "[a-z][a-z0-9_-]{0,8}", s in 0u32..1000, i in 0u32..1000) {
            let label = VersionLabel { branch, schema_ordinal: s, increment: i };
            prop_assert_eq!(label.to_string().parse::<VersionLabel>().unwrap(), label);
        }

        #[test]
        fn next_version_never_decreases(changes in proptest::collection::vec(any::<bool>(), 1..30)) {
            let mut v = SemanticVersion::initial(MASTER, d(0));
            let mut schema = 0u8;
            for changed in changes {
                if changed { schema = schema.wrapping_add(1); }
                let next = next_version(&v, changed, d(schema), MASTER).unwrap();
                prop_assert!((next.schema_ordinal, next.increment) > (v.schema_ordinal, v.increment));
                v = next;
            }
        }
    }
}
