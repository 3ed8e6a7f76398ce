//! TREC format parsers: SGML document collections, qrels, topics, and run
//! files.

use std::io::BufRead;
use std::sync::Arc;

use crate::record::{Record, Schema, Value};

use super::{
    coerce_field, parse_error, shared, FormatError, LineReader, ParseOptions, ParseStats,
};

/// 4-column whitespace-separated relevance judgments:
/// `query_id iteration doc_id relevance`. Relevance is a signed integer
/// (negative grades occur in TREC data); iteration is kept verbatim.
pub fn parse_trec_qrels<R: BufRead>(reader: R, options: ParseOptions) -> TrecQrels<R> {
    TrecQrels {
        lines: LineReader::new(reader, options.encoding),
        schema: shared(Schema::trec_qrels()),
        options,
        records: 0,
        failed: false,
    }
}

pub struct TrecQrels<R: BufRead> {
    lines: LineReader<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
    failed: bool,
}

impl<R: BufRead> TrecQrels<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.lines.replaced(),
        }
    }
}

impl<R: BufRead> Iterator for TrecQrels<R> {
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
            let cols: Vec<&str> = line.text.split_whitespace().collect();
            if cols.is_empty() {
                continue;
            }
            if cols.len() != 4 {
                self.failed = true;
                return Some(Err(parse_error(
                    &self.options,
                    line.line_number,
                    line.byte_offset,
                    format!("expected 4 columns, got {}", cols.len()),
                )));
            }
            let relevance = match cols[3].parse::<i64>() {
                Ok(v) => v,
                Err(_) => {
                    self.failed = true;
                    return Some(Err(parse_error(
                        &self.options,
                        line.line_number,
                        line.byte_offset,
                        format!("relevance `{}` is not an integer", cols[3]),
                    )));
                }
            };
            self.records += 1;
            let record = Record::new(
                self.schema.clone(),
                vec![
                    Value::Id(cols[0].to_string()),
                    Value::Id(cols[1].to_string()),
                    Value::Id(cols[2].to_string()),
                    Value::Int(relevance),
                ],
            )
            .expect("qrels values match the qrels schema");
            return Some(Ok(record));
        }
    }
}

/// 6-column run lines `query_id Q0 doc_id rank score tag`; the second
/// column is required but not kept.
pub fn parse_trec_run<R: BufRead>(reader: R, options: ParseOptions) -> TrecRun<R> {
    TrecRun {
        lines: LineReader::new(reader, options.encoding),
        schema: shared(Schema::trec_run()),
        options,
        records: 0,
        failed: false,
    }
}

pub struct TrecRun<R: BufRead> {
    lines: LineReader<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
    failed: bool,
}

impl<R: BufRead> TrecRun<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.lines.replaced(),
        }
    }
}

impl<R: BufRead> Iterator for TrecRun<R> {
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
            let cols: Vec<&str> = line.text.split_whitespace().collect();
            if cols.is_empty() {
                continue;
            }
            if cols.len() != 6 {
                self.failed = true;
                return Some(Err(parse_error(
                    &self.options,
                    line.line_number,
                    line.byte_offset,
                    format!("expected 6 columns, got {}", cols.len()),
                )));
            }
            let rank = cols[3].parse::<i64>();
            let score = cols[4].parse::<f64>();
            let (rank, score) = match (rank, score) {
                (Ok(r), Ok(s)) => (r, s),
                _ => {
                    self.failed = true;
                    return Some(Err(parse_error(
                        &self.options,
                        line.line_number,
                        line.byte_offset,
                        format!("rank `{}` / score `{}` must be numeric", cols[3], cols[4]),
                    )));
                }
            };
            self.records += 1;
            let record = Record::new(
                self.schema.clone(),
                vec![
                    Value::Id(cols[0].to_string()),
                    Value::Id(cols[2].to_string()),
                    Value::Int(rank),
                    Value::Float(score),
                    Value::Text(cols[5].to_string()),
                ],
            )
            .expect("run values match the run schema");
            return Some(Ok(record));
        }
    }
}

/// SGML-style `<DOC>…</DOC>` collections. The document ID is the trimmed
/// `<DOCNO>` content; the text is everything else in the block with tags
/// stripped and whitespace preserved.
pub fn parse_trec_docs<R: BufRead>(reader: R, options: ParseOptions) -> TrecDocs<R> {
    TrecDocs {
        scanner: BlockScanner::new(reader, &options, "<DOC>", "</DOC>"),
        schema: shared(Schema::generic_docs()),
        options,
        records: 0,
    }
}

pub struct TrecDocs<R: BufRead> {
    scanner: BlockScanner<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
}

impl<R: BufRead> TrecDocs<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.scanner.replaced(),
        }
    }
}

impl<R: BufRead> Iterator for TrecDocs<R> {
    type Item = Result<Record, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        let block = match self.scanner.next_block(&self.options) {
            Ok(Some(block)) => block,
            Ok(None) => return None,
            Err(e) => return Some(Err(e)),
        };
        let (docno, rest) = match extract_element(&block.content, "DOCNO") {
            Some(parts) => parts,
            None => {
                return Some(Err(parse_error(
                    &self.options,
                    block.line_number,
                    block.byte_offset,
                    "document block has no <DOCNO> element",
                )));
            }
        };
        let doc_id = docno.trim().to_string();
        let text = match coerce_field(
            &strip_tags(&rest),
            crate::record::FieldKind::Text,
            self.options.repair_double_encoding,
        ) {
            Ok(v) => v,
            Err(msg) => {
                return Some(Err(parse_error(
                    &self.options,
                    block.line_number,
                    block.byte_offset,
                    msg,
                )));
            }
        };
        self.records += 1;
        let record = Record::new(self.schema.clone(), vec![Value::Id(doc_id), text])
            .expect("doc values match the docs schema");
        Some(Ok(record))
    }
}

/// Classic `<top>` topic statements with `<num>`, `<title>`, `<desc>` and
/// `<narr>` sections. Elements are unterminated; each section runs until
/// the next marker or the end of the block. Labels like `Number:` are
/// dropped.
pub fn parse_trec_topics<R: BufRead>(reader: R, options: ParseOptions) -> TrecTopics<R> {
    let schema = Schema::new(
        crate::record::EntityType::Queries,
        vec![
            crate::record::FieldSpec::new("query_id", crate::record::FieldKind::IdString),
            crate::record::FieldSpec::new("title", crate::record::FieldKind::Text),
            crate::record::FieldSpec::new("description", crate::record::FieldKind::Text),
            crate::record::FieldSpec::new("narrative", crate::record::FieldKind::Text),
        ],
    )
    .expect("topics schema is valid");
    TrecTopics {
        scanner: BlockScanner::new(reader, &options, "<top>", "</top>"),
        schema: shared(schema),
        options,
        records: 0,
    }
}

pub struct TrecTopics<R: BufRead> {
    scanner: BlockScanner<R>,
    schema: Arc<Schema>,
    options: ParseOptions,
    records: u64,
}

impl<R: BufRead> TrecTopics<R> {
    pub fn stats(&self) -> ParseStats {
        ParseStats {
            records: self.records,
            encoding_replacements: self.scanner.replaced(),
        }
    }
}

impl<R: BufRead> Iterator for TrecTopics<R> {
    type Item = Result<Record, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        let block = match self.scanner.next_block(&self.options) {
            Ok(Some(block)) => block,
            Ok(None) => return None,
            Err(e) => return Some(Err(e)),
        };
        let num = topic_section(&block.content, "<num>", "Number:");
        let num = match num {
            Some(v) if !v.is_empty() => v,
            _ => {
                return Some(Err(parse_error(
                    &self.options,
                    block.line_number,
                    block.byte_offset,
                    "topic block has no <num> element",
                )));
            }
        };
        let title = topic_section(&block.content, "<title>", "Topic:").unwrap_or_default();
        let desc = topic_section(&block.content, "<desc>", "Description:").unwrap_or_default();
        let narr = topic_section(&block.content, "<narr>", "Narrative:").unwrap_or_default();
        self.records += 1;
        let record = Record::new(
            self.schema.clone(),
            vec![
                Value::Id(num),
                Value::Text(title),
                Value::Text(desc),
                Value::Text(narr),
            ],
        )
        .expect("topic values match the topics schema");
        Some(Ok(record))
    }
}

fn topic_section(block: &str, marker: &str, label: &str) -> Option<String> {
    let start = block.find(marker)? + marker.len();
    let rest = &block[start..];
    let end = rest.find('<').unwrap_or(rest.len());
    let mut section = rest[..end].trim();
    if let Some(stripped) = section.strip_prefix(label) {
        section = stripped.trim_start();
    }
    Some(section.trim().to_string())
}

struct FoundBlock {
    content: String,
    line_number: u64,
    byte_offset: u64,
}

/// Incremental scanner for `open…close` blocks. Only the current block is
/// buffered, so memory stays bounded by the largest document.
struct BlockScanner<R: BufRead> {
    lines: LineReader<R>,
    open: &'static str,
    close: &'static str,
    carry: String,
    carry_line: u64,
    carry_offset: u64,
    eof: bool,
    failed: bool,
}

impl<R: BufRead> BlockScanner<R> {
    fn new(reader: R, options: &ParseOptions, open: &'static str, close: &'static str) -> Self {
        BlockScanner {
            lines: LineReader::new(reader, options.encoding),
            open,
            close,
            carry: String::new(),
            carry_line: 1,
            carry_offset: 0,
            eof: false,
            failed: false,
        }
    }

    fn replaced(&self) -> u64 {
        self.lines.replaced()
    }

    fn fill(&mut self) -> Result<bool, FormatError> {
        match self.lines.read_line_raw()? {
            Some(line) => {
                if self.carry.is_empty() {
                    self.carry_line = line.line_number;
                    self.carry_offset = line.byte_offset;
                }
                self.carry.push_str(&line.text);
                Ok(true)
            }
            None => {
                self.eof = true;
                Ok(false)
            }
        }
    }

    fn next_block(&mut self, options: &ParseOptions) -> Result<Option<FoundBlock>, FormatError> {
        if self.failed {
            return Ok(None);
        }
        loop {
            if let Some(start) = self.carry.find(self.open) {
                let body_start = start + self.open.len();
                if let Some(end_rel) = self.carry[body_start..].find(self.close) {
                    let content = self.carry[body_start..body_start + end_rel].to_string();
                    let line_number = self.carry_line;
                    let byte_offset = self.carry_offset;
                    // Keep everything after the closing tag for the next block.
                    let consumed = body_start + end_rel + self.close.len();
                    let newlines = self.carry[..consumed].matches('\n').count() as u64;
                    self.carry.drain(..consumed);
                    self.carry_line += newlines;
                    return Ok(Some(FoundBlock {
                        content,
                        line_number,
                        byte_offset,
                    }));
                }
                if self.eof || !self.fill()? {
                    self.failed = true;
                    return Err(parse_error(
                        options,
                        self.carry_line,
                        self.carry_offset,
                        format!("`{}` without matching `{}` before end of input", self.open, self.close),
                    ));
                }
                continue;
            }
            if self.eof {
                return Ok(None);
            }
            // Drop scanned prefix that cannot start a marker, keeping a tail
            // in case a marker straddles the read boundary.
            if self.carry.len() > self.open.len() {
                let keep_from = self.carry.len() - self.open.len();
                let boundary = self
                    .carry
                    .char_indices()
                    .map(|(i, _)| i)
                    .take_while(|&i| i <= keep_from)
                    .last()
                    .unwrap_or(0);
                let dropped = &self.carry[..boundary];
                let newlines = dropped.matches('\n').count() as u64;
                self.carry.drain(..boundary);
                self.carry_line += newlines;
            }
            if !self.fill()? {
                return Ok(None);
            }
        }
    }
}

/// Returns `(element_content, block_without_element)` for the first
/// `<NAME>…</NAME>` element, or `None` if absent.
fn extract_element(block: &str, name: &str) -> Option<(String, String)> {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let start = block.find(&open)?;
    let content_start = start + open.len();
    let end_rel = block[content_start..].find(&close)?;
    let content = block[content_start..content_start + end_rel].to_string();
    let mut rest = String::with_capacity(block.len());
    rest.push_str(&block[..start]);
    rest.push_str(&block[content_start + end_rel + close.len()..]);
    Some((content, rest))
}

/// Removes well-formed `<…>` spans; a `<` with no closing `>` is kept
/// verbatim.
fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(lt) = rest.find('<') {
        out.push_str(&rest[..lt]);
        match rest[lt..].find('>') {
            Some(gt) => rest = &rest[lt + gt + 1..],
            None => {
                out.push_str(&rest[lt..]);
                return out;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn opts() -> ParseOptions {
        ParseOptions::default()
    }

    #[test]
    fn qrels_line_parses() {
        let mut it = parse_trec_qrels(Cursor::new("1185869 0 0 1\n"), opts());
        let r = it.next().unwrap().unwrap();
        assert_eq!(r.get("query_id").unwrap().as_str(), Some("1185869"));
        assert_eq!(r.get("iteration").unwrap().as_str(), Some("0"));
        assert_eq!(r.get("doc_id").unwrap().as_str(), Some("0"));
        assert_eq!(r.get("relevance").unwrap().as_int(), Some(1));
    }

    #[test]
    fn negative_relevance_accepted() {
        let mut it = parse_trec_qrels(Cursor::new("q1 0 d1 -2\n"), opts());
        let r = it.next().unwrap().unwrap();
        assert_eq!(r.get("relevance").unwrap().as_int(), Some(-2));
    }

    #[test]
    fn three_column_qrel_rejected() {
        let mut it = parse_trec_qrels(Cursor::new("q1 d1 1\n"), opts());
        assert!(it.next().unwrap().is_err());
    }

    #[test]
    fn minimal_doc_block() {
        let mut it = parse_trec_docs(Cursor::new("<DOC><DOCNO> d1 </DOCNO>hello</DOC>"), opts());
        let r = it.next().unwrap().unwrap();
        assert_eq!(r.get("doc_id").unwrap().as_str(), Some("d1"));
        assert_eq!(r.get("text").unwrap().as_str(), Some("hello"));
        assert!(it.next().is_none());
    }

    #[test]
    fn two_blocks_in_order() {
        let input = "<DOC><DOCNO>a</DOCNO>one</DOC>\n<DOC><DOCNO>b</DOCNO>two</DOC>\n";
        let ids: Vec<String> = parse_trec_docs(Cursor::new(input), opts())
            .map(|r| r.unwrap().get("doc_id").unwrap().as_str().unwrap().to_string())
            .collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn missing_docno_is_error() {
        let mut it = parse_trec_docs(Cursor::new("<DOC>no docno</DOC>"), opts());
        assert!(it.next().unwrap().is_err());
    }

    #[test]
    fn unterminated_block_is_error() {
        let mut it = parse_trec_docs(Cursor::new("<DOC><DOCNO>x</DOCNO>..."), opts());
        assert!(it.next().unwrap().is_err());
        assert!(it.next().is_none());
    }

    #[test]
    fn inner_tags_are_stripped_and_whitespace_kept() {
        let input = "<DOC>\n<DOCNO>d9</DOCNO>\n<TITLE>head</TITLE>\nbody  text\n</DOC>";
        let r = parse_trec_docs(Cursor::new(input), opts())
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(r.get("text").unwrap().as_str(), Some("\n\nhead\nbody  text\n"));
    }

    #[test]
    fn concatenation_property() {
        let a = "<DOC><DOCNO>1</DOCNO>x</DOC>";
        let b = "<DOC><DOCNO>2</DOCNO>y</DOC>";
        let joined: Vec<_> = parse_trec_docs(Cursor::new(format!("{a}{b}")), opts())
            .map(|r| r.unwrap())
            .collect();
        let separate: Vec<_> = parse_trec_docs(Cursor::new(a), opts())
            .chain(parse_trec_docs(Cursor::new(b), opts()))
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(joined, separate);
    }

    #[test]
    fn run_line_parses() {
        let mut it = parse_trec_run(Cursor::new("q1 Q0 d5 1 12.5 sys\n"), opts());
        let r = it.next().unwrap().unwrap();
        assert_eq!(r.get("doc_id").unwrap().as_str(), Some("d5"));
        assert_eq!(r.get("rank").unwrap().as_int(), Some(1));
        assert_eq!(r.get("score").unwrap().as_float(), Some(12.5));
        assert_eq!(r.get("tag").unwrap().as_str(), Some("sys"));
    }

    #[test]
    fn run_rejects_textual_score() {
        let mut it = parse_trec_run(Cursor::new("q1 Q0 d5 1 twelve sys\n"), opts());
        assert!(it.next().unwrap().is_err());
    }

    #[test]
    fn run_empty_stream() {
        assert!(parse_trec_run(Cursor::new(""), opts()).next().is_none());
    }

    #[test]
    fn topics_block_parses() {
        let input = "<top>\n<num> Number: 301\n<title> International Organized Crime\n\
                     <desc> Description:\nIdentify organizations.\n<narr> Narrative:\nDetails.\n</top>\n";
        let r = parse_trec_topics(Cursor::new(input), opts())
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(r.get("query_id").unwrap().as_str(), Some("301"));
        assert_eq!(
            r.get("title").unwrap().as_str(),
            Some("International Organized Crime")
        );
        assert_eq!(
            r.get("description").unwrap().as_str(),
            Some("Identify organizations.")
        );
        assert_eq!(r.get("narrative").unwrap().as_str(), Some("Details."));
    }
}
