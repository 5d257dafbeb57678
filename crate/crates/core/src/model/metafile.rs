use crate::digest::Digest;
use crate::kv::KvDoc;
use crate::model::{schema_hash, ComponentKind, InputSchema, ModelError};

pub const METAFILE_NAME: &str = "component.meta";

/// Parsed component metafile.
///
/// Required keys: `name`, `kind`, `schema_changed`, `output_schema`.
/// `output_schema` and `input_schema` accept either a 64-char hex digest or a
/// comma-separated header list that is run through the schema hash.
/// `input_schema` defaults to `any`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentMeta {
    pub name: String,
    pub kind: ComponentKind,
    pub schema_changed: bool,
    pub output_schema: Digest,
    pub input_schema: InputSchema,
    /// Executable inside the payload, relative path. Defaults to `run`.
    pub entry: String,
    /// Declared cost, reported as execution time in virtual-time mode.
    pub cost_ms: Option<u64>,
    pub doc: KvDoc,
}

fn schema_value(v: &str) -> Digest {
    let v = v.trim();
    if v.len() == 64 {
        if let Ok(d) = v.parse() {
            return d;
        }
    }
    let headers: Vec<&str> = if v.is_empty() { vec![] } else { v.split(',').collect() };
    schema_hash(&headers)
}

impl ComponentMeta {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let doc = KvDoc::parse(text)?;
        let name = doc.require("name")?.to_string();
        if name.is_empty() || name.contains(['@', '#', '=', ';']) {
            return Err(ModelError::BadName(name));
        }
        let kind: ComponentKind = doc.require("kind")?.parse()?;
        let schema_changed = match doc.require("schema_changed")? {
            "true" => true,
            "false" => false,
            other => {
                return Err(ModelError::Meta(crate::kv::KvError::Invalid {
                    key: "schema_changed".into(),
                    value: other.into(),
                }))
            }
        };
        let output_schema = schema_value(doc.require("output_schema")?);
        let input_schema = match doc.get("input_schema") {
            None => InputSchema::Any,
            Some(v) if v.trim() == "any" => InputSchema::Any,
            Some(v) => InputSchema::Digest(schema_value(v)),
        };
        let entry = doc.get("entry").unwrap_or("run").to_string();
        let cost_ms = doc.parse_value("cost_ms")?;
        Ok(ComponentMeta {
            name,
            kind,
            schema_changed,
            output_schema,
            input_schema,
            entry,
            cost_ms,
            doc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_required_and_defaults() {
        let m = ComponentMeta::parse(
            "name=feature_extract\nkind=library\nschema_changed=true\noutput_schema=age,sex,f1\ninput_schema=age,sex\n",
        )
        .unwrap();
        assert_eq!(m.kind, ComponentKind::Library);
        assert!(m.schema_changed);
        assert_eq!(m.output_schema, schema_hash(&["f1", "sex", "age"]));
        assert_eq!(m.input_schema, InputSchema::Digest(schema_hash(&["age", "sex"])));
        assert_eq!(m.entry, "run");

        let ds = ComponentMeta::parse(&format!(
            "name=d\nkind=dataset\nschema_changed=false\noutput_schema={}\ncost_ms=5\n",
            Digest::of(b"x")
        ))
        .unwrap();
        assert_eq!(ds.input_schema, InputSchema::Any);
        assert_eq!(ds.output_schema, Digest::of(b"x"));
        assert_eq!(ds.cost_ms, Some(5));
    }

    #[test]
    fn rejects_missing_or_bad_keys() {
        assert!(ComponentMeta::parse("kind=library\nschema_changed=false\noutput_schema=a").is_err());
        assert!(ComponentMeta::parse("name=a\nkind=tool\nschema_changed=false\noutput_schema=a").is_err());
        assert!(ComponentMeta::parse("name=a\nkind=library\nschema_changed=maybe\noutput_schema=a").is_err());
        assert!(ComponentMeta::parse("name=a@b\nkind=library\nschema_changed=false\noutput_schema=a").is_err());
    }
}
