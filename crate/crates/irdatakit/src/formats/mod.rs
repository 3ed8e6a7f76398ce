//! Streaming parsers and serializers for common IR dataset wire formats:
//! TSV, CSV, JSON lines, TREC SGML documents, TREC qrels/topics, and run
//! files.
//!
//! Parsers consume a [`BufRead`] and yield records lazily; memory use is
//! bounded by the largest single record, never by stream length. All
//! parsers report how many bytes had to be replaced during decoding via
//! [`ParseStats`].

mod encoding;
mod jsonl;
mod trec;
mod tsv;

pub mod source;

pub use encoding::{decode_counting, fix_double_encoding, latin1_misdecode, TextEncoding};
pub use jsonl::{parse_jsonl, JsonlRecords};
pub use trec::{
    parse_trec_docs, parse_trec_qrels, parse_trec_run, parse_trec_topics, TrecDocs, TrecQrels,
    TrecRun, TrecTopics,
};
pub use tsv::{parse_csv, parse_tsv, CsvRecords, TsvRecords};

use std::fmt;
use std::io::{self, BufRead};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::record::{EntityType, FieldKind, Record, Schema, Value};

/// Where in a stream a parser is working; attached to parse errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseContext {
    pub source_name: String,
    pub line_number: u64,
    pub byte_offset: u64,
}

impl fmt::Display for ParseContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} (byte {})",
            self.source_name, self.line_number, self.byte_offset
        )
    }
}

/// Errors raised while parsing or serializing records.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error at {context}: {message}")]
    Parse {
        context: ParseContext,
        message: String,
    },
    #[error("cannot serialize {entity} records as {format}")]
    UnsupportedFormat {
        entity: EntityType,
        format: OutputFormat,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Counters accumulated while a parser runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    /// Records yielded so far.
    pub records: u64,
    /// U+FFFD replacement events performed while decoding dirty bytes.
    pub encoding_replacements: u64,
}

/// Per-source parser configuration.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub source_name: String,
    pub encoding: TextEncoding,
    /// Apply [`fix_double_encoding`] to every text-kind field.
    pub repair_double_encoding: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            source_name: "<stream>".to_string(),
            encoding: TextEncoding::Utf8,
            repair_double_encoding: false,
        }
    }
}

impl ParseOptions {
    pub fn named(source_name: impl Into<String>) -> ParseOptions {
        ParseOptions {
            source_name: source_name.into(),
            ..ParseOptions::default()
        }
    }

    pub fn encoding(mut self, encoding: TextEncoding) -> ParseOptions {
        self.encoding = encoding;
        self
    }

    pub fn repair_double_encoding(mut self, on: bool) -> ParseOptions {
        self.repair_double_encoding = on;
        self
    }
}

/// Buffered line reader with decode counting. Offsets and line numbers are
/// tracked over the raw byte stream so error contexts stay accurate.
pub(crate) struct LineReader<R: BufRead> {
    inner: R,
    encoding: TextEncoding,
    next_line: u64,
    next_offset: u64,
    replaced: u64,
    raw: Vec<u8>,
}

pub(crate) struct LineInfo {
    pub text: String,
    pub line_number: u64,
    pub byte_offset: u64,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R, encoding: TextEncoding) -> Self {
        LineReader {
            inner,
            encoding,
            next_line: 1,
            next_offset: 0,
            replaced: 0,
            raw: Vec::new(),
        }
    }

    /// Next line with the trailing newline (and a preceding CR) removed.
    pub fn read_line(&mut self) -> io::Result<Option<LineInfo>> {
        self.read(true)
    }

    /// Next line verbatim, newline included; for block-structured formats
    /// that must preserve whitespace.
    pub fn read_line_raw(&mut self) -> io::Result<Option<LineInfo>> {
        self.read(false)
    }

    fn read(&mut self, strip: bool) -> io::Result<Option<LineInfo>> {
        self.raw.clear();
        let n = self.inner.read_until(b'\n', &mut self.raw)?;
        if n == 0 {
            return Ok(None);
        }
        let line_number = self.next_line;
        let byte_offset = self.next_offset;
        self.next_line += 1;
        self.next_offset += n as u64;
        let mut bytes = &self.raw[..];
        if strip {
            if bytes.last() == Some(&b'\n') {
                bytes = &bytes[..bytes.len() - 1];
            }
            if bytes.last() == Some(&b'\r') {
                bytes = &bytes[..bytes.len() - 1];
            }
        }
        let (text, replaced) = decode_counting(bytes, self.encoding);
        self.replaced += replaced;
        Ok(Some(LineInfo {
            text,
            line_number,
            byte_offset,
        }))
    }

    pub fn replaced(&self) -> u64 {
        self.replaced
    }
}

/// Serialization targets for [`serialize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Tsv,
    Jsonl,
    Trec,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Tsv => "tsv",
            OutputFormat::Jsonl => "jsonl",
            OutputFormat::Trec => "trec",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(OutputFormat::Tsv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            "trec" => Ok(OutputFormat::Trec),
            other => Err(format!("unknown output format `{other}`")),
        }
    }
}

fn sanitize_tsv(value: &str) -> String {
    value.replace(['\t', '\n', '\r'], " ")
}

/// Serializes one record as a single LF-terminated line.
///
/// TSV joins the rendered values with TABs, replacing any interior
/// TAB/LF/CR in a value with one space. JSONL emits one object keyed by the
/// schema field names. TREC emits the conventional 4-column qrels line or
/// 6-column run line and is only defined for those entity types.
pub fn serialize(record: &Record, format: OutputFormat) -> Result<String, FormatError> {
    let schema = record.schema();
    match format {
        OutputFormat::Tsv => {
            let mut line = String::new();
            for (i, value) in record.values().iter().enumerate() {
                if i > 0 {
                    line.push('\t');
                }
                line.push_str(&sanitize_tsv(&value.render()));
            }
            line.push('\n');
            Ok(line)
        }
        OutputFormat::Jsonl => {
            let mut map = serde_json::Map::with_capacity(schema.len());
            for (spec, value) in schema.fields().iter().zip(record.values()) {
                let json = match value {
                    Value::Id(s) | Value::Text(s) => serde_json::Value::String(s.clone()),
                    Value::Int(v) => serde_json::Value::from(*v),
                    Value::Float(v) => serde_json::Value::from(*v),
                    Value::IdList(ids) => {
                        serde_json::Value::Array(ids.iter().cloned().map(Into::into).collect())
                    }
                };
                map.insert(spec.name.clone(), json);
            }
            let mut line = serde_json::to_string(&serde_json::Value::Object(map))
                .expect("record values are always serializable");
            line.push('\n');
            Ok(line)
        }
        OutputFormat::Trec => {
            let unsupported = || FormatError::UnsupportedFormat {
                entity: schema.entity_type(),
                format,
            };
            let text_of = |name: &str| record.get(name).map(Value::render);
            match schema.entity_type() {
                EntityType::Qrels => {
                    let query = text_of("query_id").ok_or_else(unsupported)?;
                    let iteration = text_of("iteration").unwrap_or_else(|| "0".to_string());
                    let doc = text_of("doc_id").ok_or_else(unsupported)?;
                    let relevance = text_of("relevance").ok_or_else(unsupported)?;
                    Ok(format!("{query} {iteration} {doc} {relevance}\n"))
                }
                EntityType::Scoreddocs => {
                    let query = text_of("query_id").ok_or_else(unsupported)?;
                    let doc = text_of("doc_id").ok_or_else(unsupported)?;
                    let rank = text_of("rank").unwrap_or_else(|| "0".to_string());
                    let score = text_of("score").ok_or_else(unsupported)?;
                    let tag = text_of("tag").unwrap_or_else(|| "run".to_string());
                    Ok(format!("{query} Q0 {doc} {rank} {score} {tag}\n"))
                }
                _ => Err(unsupported()),
            }
        }
    }
}

pub(crate) fn coerce_field(
    text: &str,
    kind: FieldKind,
    repair: bool,
) -> Result<Value, String> {
    if repair && kind == FieldKind::Text {
        return Ok(Value::Text(fix_double_encoding(text).into_owned()));
    }
    Value::coerce(text, kind)
}

pub(crate) fn parse_error(
    options: &ParseOptions,
    line_number: u64,
    byte_offset: u64,
    message: impl Into<String>,
) -> FormatError {
    FormatError::Parse {
        context: ParseContext {
            source_name: options.source_name.clone(),
            line_number,
            byte_offset,
        },
        message: message.into(),
    }
}

pub(crate) fn shared(schema: Schema) -> Arc<Schema> {
    Arc::new(schema)
}
