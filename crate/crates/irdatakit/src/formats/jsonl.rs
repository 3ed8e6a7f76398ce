//! JSON-lines record parser: one object per line, values extracted by
//! schema field name. Extra keys are ignored; missing keys are errors.

use std::io::BufRead;
use std::sync::Arc;

use crate::record::{FieldKind, Record, Schema, Value};

use super::{
    fix_double_encoding, parse_error, FormatError, LineReader, ParseOptions, ParseStats,
};

pub fn parse_jsonl<R: BufRead>(
    reader: R,
    schema: Arc<Schema>,
    options: ParseOptions,
) -> JsonlRecords<R> {
    JsonlRecords {
        lines: LineReader::new(reader, options.encoding),
        schema,
        options,
        records: 0,
        failed: false,
    }
}

pub struct JsonlRecords<R: BufRead> {
    lines: LineReader<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
    failed: bool,
}

impl<R: BufRead> JsonlRecords<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.lines.replaced(),
        }
    }

    fn value_from_json(
        &self,
        json: &serde_json::Value,
        kind: FieldKind,
    ) -> Result<Value, String> {
        match (kind, json) {
            (FieldKind::IdString, serde_json::Value::String(s)) => Ok(Value::Id(s.clone())),
            // Numeric IDs occur in the wild; normalize them to their decimal text.
            (FieldKind::IdString, serde_json::Value::Number(n)) => Ok(Value::Id(n.to_string())),
            (FieldKind::Text, serde_json::Value::String(s)) => {
                Ok(Value::Text(if self.options.repair_double_encoding {
                    fix_double_encoding(s).into_owned()
                } else {
                    s.clone()
                }))
            }
            (FieldKind::Integer, serde_json::Value::Number(n)) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| format!("`{n}` is not an integer")),
            (FieldKind::Float, serde_json::Value::Number(n)) => n
                .as_f64()
                .map(Value::Float)
                .ok_or_else(|| format!("`{n}` is not a float")),
            (FieldKind::IdStringList, serde_json::Value::Array(items)) => {
                let mut ids = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        serde_json::Value::String(s) => ids.push(s.clone()),
                        serde_json::Value::Number(n) => ids.push(n.to_string()),
                        other => return Err(format!("`{other}` is not an id string")),
                    }
                }
                Ok(Value::IdList(ids))
            }
            (kind, other) => Err(format!("expected {}, got `{other}`", kind.as_str())),
        }
    }
}

impl<R: BufRead> Iterator for JsonlRecords<R> {
    type Item = Result<Record, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.read_line() {
                Ok(Some(line)) => line,
                Ok(None) => return None,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            };
            if line.text.trim().is_empty() {
                continue;
            }
            let parsed: serde_json::Value = match serde_json::from_str(&line.text) {
                Ok(v) => v,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(parse_error(
                        &self.options,
                        line.line_number,
                        line.byte_offset,
                        format!("malformed JSON: {e}"),
                    )));
                }
            };
            let object = match parsed.as_object() {
                Some(o) => o,
                None => {
                    self.failed = true;
                    return Some(Err(parse_error(
                        &self.options,
                        line.line_number,
                        line.byte_offset,
                        "line is not a JSON object",
                    )));
                }
            };
            let mut values = Vec::with_capacity(self.schema.len());
            for spec in self.schema.fields() {
                let json = match object.get(&spec.name) {
                    Some(j) => j,
                    None => {
                        self.failed = true;
                        return Some(Err(parse_error(
                            &self.options,
                            line.line_number,
                            line.byte_offset,
                            format!("missing field `{}`", spec.name),
                        )));
                    }
                };
                match self.value_from_json(json, spec.kind) {
                    Ok(v) => values.push(v),
                    Err(msg) => {
                        self.failed = true;
                        return Some(Err(parse_error(
                            &self.options,
                            line.line_number,
                            line.byte_offset,
                            format!("field `{}`: {msg}", spec.name),
                        )));
                    }
                }
            }
            self.records += 1;
            return Some(Ok(Record::new(self.schema.clone(), values)
                .expect("extracted values always match the schema")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn docs_schema() -> Arc<Schema> {
        Arc::new(Schema::generic_docs())
    }

    #[test]
    fn parses_doc_object() {
        let input = Cursor::new(
            r#"{"doc_id":"0","text":"The presence of communication amid scientific minds"}"#,
        );
        let r = parse_jsonl(input, docs_schema(), ParseOptions::default())
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(r.get("doc_id").unwrap().as_str(), Some("0"));
        assert!(r
            .get("text")
            .unwrap()
            .as_str()
            .unwrap()
            .starts_with("The presence of commun"));
    }

    #[test]
    fn extra_keys_ignored() {
        let input = Cursor::new(r#"{"doc_id":"1","text":"x","extra":true}"#);
        let r = parse_jsonl(input, docs_schema(), ParseOptions::default())
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(r.get("doc_id").unwrap().as_str(), Some("1"));
    }

    #[test]
    fn missing_field_is_error() {
        let input = Cursor::new(r#"{"text":"x"}"#);
        let err = parse_jsonl(input, docs_schema(), ParseOptions::default())
            .next()
            .unwrap()
            .unwrap_err();
        assert!(err.to_string().contains("missing field `doc_id`"));
    }

    #[test]
    fn malformed_json_is_error() {
        let input = Cursor::new("{not json\n");
        let err = parse_jsonl(input, docs_schema(), ParseOptions::default())
            .next()
            .unwrap()
            .unwrap_err();
        assert!(err.to_string().contains("malformed JSON"));
    }
}
