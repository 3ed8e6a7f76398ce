//! Generic record/schema model for dataset entities.
//!
//! Every entity a dataset can provide (documents, queries, relevance
//! judgments, scored documents, training doc pairs) is represented as a
//! [`Record`]: an ordered tuple of values described by a shared [`Schema`].
//! Records are immutable after construction and cheap to clone, so they can
//! be passed freely between threads.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entity types a dataset can expose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Docs,
    Queries,
    Qrels,
    Scoreddocs,
    Docpairs,
}

impl EntityType {
    pub const ALL: [EntityType; 5] = [
        EntityType::Docs,
        EntityType::Queries,
        EntityType::Qrels,
        EntityType::Scoreddocs,
        EntityType::Docpairs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityType::Docs => "docs",
            EntityType::Queries => "queries",
            EntityType::Qrels => "qrels",
            EntityType::Scoreddocs => "scoreddocs",
            EntityType::Docpairs => "docpairs",
        }
    }

    /// Parses an entity name, accepting the common community aliases
    /// (`documents`, `topics`, `judgments`).
    pub fn parse(name: &str) -> Option<EntityType> {
        match name {
            "docs" | "documents" => Some(EntityType::Docs),
            "queries" | "topics" => Some(EntityType::Queries),
            "qrels" | "judgments" => Some(EntityType::Qrels),
            "scoreddocs" => Some(EntityType::Scoreddocs),
            "docpairs" => Some(EntityType::Docpairs),
            _ => None,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Semantic kind of a record field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    IdString,
    Text,
    Integer,
    Float,
    IdStringList,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::IdString => "id_string",
            FieldKind::Text => "text",
            FieldKind::Integer => "integer",
            FieldKind::Float => "float",
            FieldKind::IdStringList => "id_string_list",
        }
    }
}

/// One named, typed field of a schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, kind: FieldKind) -> FieldSpec {
        FieldSpec {
            name: name.into(),
            kind,
        }
    }
}

/// Errors raised by record construction, validation, and projection.
#[derive(Debug, Error)]
pub enum RecordError {
    #[error("schema violation in field `{field}`: {reason}")]
    SchemaViolation { field: String, reason: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
}

impl RecordError {
    fn violation(field: impl Into<String>, reason: impl Into<String>) -> RecordError {
        RecordError::SchemaViolation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Ordered field specification for one entity type.
///
/// Construction enforces the conventions shared by all datasets: a `docs`
/// schema starts with a `doc_id` identifier, a `queries` schema with
/// `query_id`, `qrels` carry a `relevance` integer, and so on. Schemas
/// produced by [`Record::project`] skip those conventions (a projection may
/// drop the ID column) but still describe their values exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    entity_type: EntityType,
    fields: Vec<FieldSpec>,
}

impl Schema {
    pub fn new(entity_type: EntityType, fields: Vec<FieldSpec>) -> Result<Schema, RecordError> {
        if fields.is_empty() {
            return Err(RecordError::violation("<schema>", "schema has no fields"));
        }
        for (i, f) in fields.iter().enumerate() {
            if f.name.is_empty() {
                return Err(RecordError::violation(
                    format!("<field {i}>"),
                    "field name is empty",
                ));
            }
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(RecordError::violation(&f.name, "duplicate field name"));
            }
        }
        let has = |name: &str, kind: FieldKind| {
            fields.iter().any(|f| f.name == name && f.kind == kind)
        };
        match entity_type {
            EntityType::Docs => {
                if fields[0].name != "doc_id" || fields[0].kind != FieldKind::IdString {
                    return Err(RecordError::violation(
                        &fields[0].name,
                        "docs schema must start with doc_id (id_string)",
                    ));
                }
            }
            EntityType::Queries => {
                if fields[0].name != "query_id" || fields[0].kind != FieldKind::IdString {
                    return Err(RecordError::violation(
                        &fields[0].name,
                        "queries schema must start with query_id (id_string)",
                    ));
                }
            }
            EntityType::Qrels => {
                if !has("query_id", FieldKind::IdString)
                    || !has("doc_id", FieldKind::IdString)
                    || !has("relevance", FieldKind::Integer)
                {
                    return Err(RecordError::violation(
                        "<schema>",
                        "qrels schema requires query_id, doc_id and an integer relevance",
                    ));
                }
            }
            EntityType::Scoreddocs => {
                if !has("query_id", FieldKind::IdString)
                    || !has("doc_id", FieldKind::IdString)
                    || !has("score", FieldKind::Float)
                {
                    return Err(RecordError::violation(
                        "<schema>",
                        "scoreddocs schema requires query_id, doc_id and a float score",
                    ));
                }
            }
            EntityType::Docpairs => {
                let doc_ids = fields
                    .iter()
                    .filter(|f| f.kind == FieldKind::IdString && f.name.starts_with("doc_id"))
                    .count();
                if !has("query_id", FieldKind::IdString) || doc_ids < 2 {
                    return Err(RecordError::violation(
                        "<schema>",
                        "docpairs schema requires query_id and at least two doc_id fields",
                    ));
                }
            }
        }
        Ok(Schema {
            entity_type,
            fields,
        })
    }

    /// Builds a schema without entity-specific convention checks. Used for
    /// projections, which may drop conventional fields.
    fn derived(entity_type: EntityType, fields: Vec<FieldSpec>) -> Schema {
        Schema {
            entity_type,
            fields,
        }
    }

    pub fn entity_type(&self) -> EntityType {
        self.entity_type
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }

    /// Generic document schema: `(doc_id, text)`.
    pub fn generic_docs() -> Schema {
        Schema::new(
            EntityType::Docs,
            vec![
                FieldSpec::new("doc_id", FieldKind::IdString),
                FieldSpec::new("text", FieldKind::Text),
            ],
        )
        .expect("generic docs schema is valid")
    }

    /// Generic query schema: `(query_id, text)`.
    pub fn generic_queries() -> Schema {
        Schema::new(
            EntityType::Queries,
            vec![
                FieldSpec::new("query_id", FieldKind::IdString),
                FieldSpec::new("text", FieldKind::Text),
            ],
        )
        .expect("generic queries schema is valid")
    }

    /// TREC relevance judgment schema: `(query_id, iteration, doc_id, relevance)`.
    pub fn trec_qrels() -> Schema {
        Schema::new(
            EntityType::Qrels,
            vec![
                FieldSpec::new("query_id", FieldKind::IdString),
                FieldSpec::new("iteration", FieldKind::IdString),
                FieldSpec::new("doc_id", FieldKind::IdString),
                FieldSpec::new("relevance", FieldKind::Integer),
            ],
        )
        .expect("trec qrels schema is valid")
    }

    /// Run-file schema: `(query_id, doc_id, rank, score, tag)`.
    pub fn trec_run() -> Schema {
        Schema::new(
            EntityType::Scoreddocs,
            vec![
                FieldSpec::new("query_id", FieldKind::IdString),
                FieldSpec::new("doc_id", FieldKind::IdString),
                FieldSpec::new("rank", FieldKind::Integer),
                FieldSpec::new("score", FieldKind::Float),
                FieldSpec::new("tag", FieldKind::Text),
            ],
        )
        .expect("trec run schema is valid")
    }

    /// Training pair schema: `(query_id, doc_id_a, doc_id_b)`.
    pub fn generic_docpairs() -> Schema {
        Schema::new(
            EntityType::Docpairs,
            vec![
                FieldSpec::new("query_id", FieldKind::IdString),
                FieldSpec::new("doc_id_a", FieldKind::IdString),
                FieldSpec::new("doc_id_b", FieldKind::IdString),
            ],
        )
        .expect("generic docpairs schema is valid")
    }
}

/// A single field value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Id(String),
    Text(String),
    Int(i64),
    Float(f64),
    IdList(Vec<String>),
}

impl Value {
    pub fn kind(&self) -> FieldKind {
        match self {
            Value::Id(_) => FieldKind::IdString,
            Value::Text(_) => FieldKind::Text,
            Value::Int(_) => FieldKind::Integer,
            Value::Float(_) => FieldKind::Float,
            Value::IdList(_) => FieldKind::IdStringList,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Id(s) | Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    /// Plain-text rendering: numbers as decimal text, ID lists comma-joined.
    pub fn render(&self) -> String {
        match self {
            Value::Id(s) | Value::Text(s) => s.clone(),
            Value::Int(v) => v.to_string(),
            Value::Float(v) => v.to_string(),
            Value::IdList(ids) => ids.join(","),
        }
    }

    /// Parses `text` into a value of `kind`. ID lists are comma-separated.
    pub fn coerce(text: &str, kind: FieldKind) -> Result<Value, String> {
        match kind {
            FieldKind::IdString => Ok(Value::Id(text.to_string())),
            FieldKind::Text => Ok(Value::Text(text.to_string())),
            FieldKind::Integer => text
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| format!("`{text}` is not an integer")),
            FieldKind::Float => text
                .parse::<f64>()
                .map(Value::Float)
                .map_err(|_| format!("`{text}` is not a float")),
            FieldKind::IdStringList => Ok(Value::IdList(
                if text.is_empty() {
                    Vec::new()
                } else {
                    text.split(',').map(str::to_string).collect()
                },
            )),
        }
    }
}

/// One dataset entity: an immutable tuple of values matching a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    schema: Arc<Schema>,
    values: Arc<[Value]>,
}

impl Record {
    /// Builds a record, checking arity and per-field kinds.
    pub fn new(schema: Arc<Schema>, values: Vec<Value>) -> Result<Record, RecordError> {
        let record = Record {
            schema,
            values: values.into(),
        };
        record.validate()?;
        Ok(record)
    }

    /// Re-checks the record invariants: one well-typed value per field.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.values.len() != self.schema.len() {
            return Err(RecordError::violation(
                "<record>",
                format!(
                    "expected {} values, got {}",
                    self.schema.len(),
                    self.values.len()
                ),
            ));
        }
        for (spec, value) in self.schema.fields().iter().zip(self.values.iter()) {
            if value.kind() != spec.kind {
                return Err(RecordError::violation(
                    &spec.name,
                    format!("expected {}, got {}", spec.kind.as_str(), value.kind().as_str()),
                ));
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.schema.field_index(name).map(|i| &self.values[i])
    }

    /// First-field ID, the conventional handle for docs/queries records.
    pub fn first_id(&self) -> Option<&str> {
        self.values.first().and_then(Value::as_str)
    }

    /// Returns a record over a derived schema containing exactly
    /// `field_names`, in the given order, with values copied.
    pub fn project(&self, field_names: &[&str]) -> Result<Record, RecordError> {
        let mut fields = Vec::with_capacity(field_names.len());
        let mut values = Vec::with_capacity(field_names.len());
        for name in field_names {
            let idx = self
                .schema
                .field_index(name)
                .ok_or_else(|| RecordError::UnknownField(name.to_string()))?;
            fields.push(self.schema.fields()[idx].clone());
            values.push(self.values[idx].clone());
        }
        Ok(Record {
            schema: Arc::new(Schema::derived(self.schema.entity_type(), fields)),
            values: values.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrel(query: &str, iteration: &str, doc: &str, relevance: i64) -> Record {
        Record::new(
            Arc::new(Schema::trec_qrels()),
            vec![
                Value::Id(query.into()),
                Value::Id(iteration.into()),
                Value::Id(doc.into()),
                Value::Int(relevance),
            ],
        )
        .unwrap()
    }

    fn doc(id: &str, text: &str) -> Record {
        Record::new(
            Arc::new(Schema::generic_docs()),
            vec![Value::Id(id.into()), Value::Text(text.into())],
        )
        .unwrap()
    }

    #[test]
    fn qrel_record_validates() {
        let r = qrel("1185869", "0", "0", 1);
        assert!(r.validate().is_ok());
        assert_eq!(r.get("relevance").unwrap().as_int(), Some(1));
    }

    #[test]
    fn arity_mismatch_rejected() {
        let err = Record::new(
            Arc::new(Schema::generic_docs()),
            vec![Value::Id("d1".into())],
        )
        .unwrap_err();
        assert!(matches!(err, RecordError::SchemaViolation { .. }));
    }

    #[test]
    fn kind_mismatch_rejected() {
        // relevance carries non-integer text
        let err = Record::new(
            Arc::new(Schema::trec_qrels()),
            vec![
                Value::Id("q1".into()),
                Value::Id("0".into()),
                Value::Id("d1".into()),
                Value::Text("high".into()),
            ],
        )
        .unwrap_err();
        match err {
            RecordError::SchemaViolation { field, .. } => assert_eq!(field, "relevance"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn project_single_field() {
        let d = doc("16", "The approach is based on a theory of justice");
        let p = d.project(&["doc_id"]).unwrap();
        assert_eq!(p.values(), &[Value::Id("16".into())]);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn project_identity() {
        let d = doc("16", "The approach is based");
        let names: Vec<&str> = d.schema().field_names().collect();
        assert_eq!(d.project(&names).unwrap(), d);
    }

    #[test]
    fn project_unknown_field() {
        let d = doc("1", "x");
        assert!(matches!(
            d.project(&["nonexistent"]),
            Err(RecordError::UnknownField(_))
        ));
    }

    #[test]
    fn project_is_idempotent() {
        let r = qrel("q1", "0", "d9", 2);
        let names = ["doc_id", "query_id"];
        let once = r.project(&names).unwrap();
        let twice = once.project(&names).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn schema_conventions_enforced() {
        // docs must lead with doc_id
        assert!(Schema::new(
            EntityType::Docs,
            vec![
                FieldSpec::new("text", FieldKind::Text),
                FieldSpec::new("doc_id", FieldKind::IdString),
            ],
        )
        .is_err());
        // duplicate names rejected
        assert!(Schema::new(
            EntityType::Docs,
            vec![
                FieldSpec::new("doc_id", FieldKind::IdString),
                FieldSpec::new("doc_id", FieldKind::Text),
            ],
        )
        .is_err());
        // docpairs need two doc ids
        assert!(Schema::new(
            EntityType::Docpairs,
            vec![
                FieldSpec::new("query_id", FieldKind::IdString),
                FieldSpec::new("doc_id_a", FieldKind::IdString),
            ],
        )
        .is_err());
        assert!(Schema::generic_docpairs().fields().len() == 3);
    }

    #[test]
    fn coerce_kinds() {
        assert_eq!(
            Value::coerce("-2", FieldKind::Integer).unwrap(),
            Value::Int(-2)
        );
        assert_eq!(
            Value::coerce("12.5", FieldKind::Float).unwrap(),
            Value::Float(12.5)
        );
        assert!(Value::coerce("twelve", FieldKind::Float).is_err());
        assert_eq!(
            Value::coerce("a,b", FieldKind::IdStringList).unwrap(),
            Value::IdList(vec!["a".into(), "b".into()])
        );
    }
}
