//! Tab-separated and RFC-4180 CSV record parsers.

use std::io::BufRead;
use std::sync::Arc;

use crate::record::{Record, Schema};

use super::{
    coerce_field, decode_counting, parse_error, FormatError, LineReader, ParseOptions, ParseStats,
};

/// Streaming TSV parser: each nonempty line is split on TAB into exactly
/// one value per schema field. Iteration order is line order.
pub fn parse_tsv<R: BufRead>(reader: R, schema: Arc<Schema>, options: ParseOptions) -> TsvRecords<R> {
    TsvRecords {
        lines: LineReader::new(reader, options.encoding),
        schema,
        options,
        records: 0,
        failed: false,
    }
}

pub struct TsvRecords<R: BufRead> {
    lines: LineReader<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
    failed: bool,
}

impl<R: BufRead> TsvRecords<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.lines.replaced(),
        }
    }
}

impl<R: BufRead> Iterator for TsvRecords<R> {
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
            if line.text.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.text.split('\t').collect();
            if fields.len() != self.schema.len() {
                self.failed = true;
                return Some(Err(parse_error(
                    &self.options,
                    line.line_number,
                    line.byte_offset,
                    format!(
                        "field count mismatch: expected {}, got {}",
                        self.schema.len(),
                        fields.len()
                    ),
                )));
            }
            let mut values = Vec::with_capacity(fields.len());
            for (spec, text) in self.schema.fields().iter().zip(fields) {
                match coerce_field(text, spec.kind, self.options.repair_double_encoding) {
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
            return Some(Ok(Record::new(self.schema.clone(), values).expect(
                "coerced values always match the schema",
            )));
        }
    }
}

/// RFC-4180 CSV parser mapped through the same coercion path as TSV:
/// quoted fields are unescaped by the reader, then each row must have
/// exactly one column per schema field.
pub fn parse_csv<R: BufRead>(
    reader: R,
    schema: Arc<Schema>,
    options: ParseOptions,
) -> CsvRecords<R> {
    let inner = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    CsvRecords {
        rows: inner.into_byte_records(),
        schema,
        options,
        records: 0,
        replaced: 0,
        row: 0,
        failed: false,
    }
}

pub struct CsvRecords<R: BufRead> {
    rows: csv::ByteRecordsIntoIter<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
    replaced: u64,
    row: u64,
    failed: bool,
}

impl<R: BufRead> CsvRecords<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.replaced,
        }
    }
}

impl<R: BufRead> Iterator for CsvRecords<R> {
    type Item = Result<Record, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let row = match self.rows.next()? {
            Ok(row) => row,
            Err(e) => {
                self.failed = true;
                return Some(Err(parse_error(
                    &self.options,
                    self.row + 1,
                    0,
                    format!("malformed CSV: {e}"),
                )));
            }
        };
        self.row += 1;
        let line_number = row.position().map(|p| p.line()).unwrap_or(self.row);
        let byte_offset = row.position().map(|p| p.byte()).unwrap_or(0);
        if row.len() != self.schema.len() {
            self.failed = true;
            return Some(Err(parse_error(
                &self.options,
                line_number,
                byte_offset,
                format!(
                    "field count mismatch: expected {}, got {}",
                    self.schema.len(),
                    row.len()
                ),
            )));
        }
        let mut values = Vec::with_capacity(row.len());
        for (spec, bytes) in self.schema.fields().iter().zip(row.iter()) {
            let (text, rep) = decode_counting(bytes, self.options.encoding);
            self.replaced += rep;
            match coerce_field(&text, spec.kind, self.options.repair_double_encoding) {
                Ok(v) => values.push(v),
                Err(msg) => {
                    self.failed = true;
                    return Some(Err(parse_error(
                        &self.options,
                        line_number,
                        byte_offset,
                        format!("field `{}`: {msg}", spec.name),
                    )));
                }
            }
        }
        self.records += 1;
        Some(Ok(Record::new(self.schema.clone(), values)
            .expect("coerced values always match the schema")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn queries_schema() -> Arc<Schema> {
        Arc::new(Schema::generic_queries())
    }

    #[test]
    fn parses_query_line() {
        let input = Cursor::new("121352\tdefine extreme\n");
        let mut it = parse_tsv(input, queries_schema(), ParseOptions::default());
        let r = it.next().unwrap().unwrap();
        assert_eq!(r.get("query_id").unwrap().as_str(), Some("121352"));
        assert_eq!(r.get("text").unwrap().as_str(), Some("define extreme"));
        assert!(it.next().is_none());
        assert_eq!(it.stats().records, 1);
    }

    #[test]
    fn empty_stream_yields_nothing() {
        let mut it = parse_tsv(Cursor::new(""), queries_schema(), ParseOptions::default());
        assert!(it.next().is_none());
    }

    #[test]
    fn arity_mismatch_is_error() {
        let input = Cursor::new("a\tb\tc\n");
        let mut it = parse_tsv(input, queries_schema(), ParseOptions::default());
        let err = it.next().unwrap().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("field count mismatch"), "{msg}");
        assert!(msg.contains(":1"), "context should name line 1: {msg}");
        assert!(it.next().is_none(), "parser stops after a structural error");
    }

    #[test]
    fn blank_lines_and_crlf_tolerated() {
        let input = Cursor::new("q1\tfirst\r\n\nq2\tsecond\n");
        let records: Vec<_> = parse_tsv(input, queries_schema(), ParseOptions::default())
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].get("query_id").unwrap().as_str(), Some("q2"));
    }

    #[test]
    fn repair_option_fixes_text_fields() {
        let input = Cursor::new("q1\tcaf\u{c3}\u{a9}\n");
        let opts = ParseOptions::default().repair_double_encoding(true);
        let r = parse_tsv(input, queries_schema(), opts)
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(r.get("text").unwrap().as_str(), Some("café"));
    }

    #[test]
    fn csv_quoted_fields() {
        let input = Cursor::new("d1,\"text, with comma\"\nd2,plain\n");
        let docs: Vec<_> = parse_csv(
            input,
            Arc::new(Schema::generic_docs()),
            ParseOptions::default(),
        )
        .map(|r| r.unwrap())
        .collect();
        assert_eq!(docs[0].get("text").unwrap().as_str(), Some("text, with comma"));
        assert_eq!(docs.len(), 2);
    }
}
