//! On-disk layout of a docstore.
//!
//! A store is three files in one directory:
//!
//! - `data.log` — the record log: each record serialized and compressed as
//!   an independent lz4 frame, frames concatenated in iteration order;
//! - `index.bin` — `count` fixed-width entries sorted strictly ascending
//!   by document ID: the ID padded with 0x00 to the store's maximum ID
//!   width, then the u64 LE byte offset and u32 LE compressed length of
//!   the record's frame;
//! - `meta.bin` — magic `IRDS1`, u8 format version (1), u64 LE record
//!   count, u16 LE maximum ID byte length, u32 LE schema-descriptor length
//!   followed by the descriptor (JSON), and a final build-complete flag
//!   byte, written last.
//!
//! Record serialization inside a frame: for each field in schema order, a
//! u32 LE byte length followed by the UTF-8 bytes of the value (integers
//! and floats as decimal text, ID lists comma-joined).

use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::record::{Record, Schema, Value};

use super::DocstoreError;

pub(crate) const META_MAGIC: &[u8; 5] = b"IRDS1";
pub(crate) const META_VERSION: u8 = 1;

pub(crate) const DATA_FILE: &str = "data.log";
pub(crate) const INDEX_FILE: &str = "index.bin";
pub(crate) const META_FILE: &str = "meta.bin";

pub(crate) fn data_path(dir: &Path) -> PathBuf {
    dir.join(DATA_FILE)
}

pub(crate) fn index_path(dir: &Path) -> PathBuf {
    dir.join(INDEX_FILE)
}

pub(crate) fn meta_path(dir: &Path) -> PathBuf {
    dir.join(META_FILE)
}

#[derive(Debug, Clone)]
pub(crate) struct Meta {
    pub count: u64,
    pub max_id_len: u16,
    pub schema: Arc<Schema>,
    pub complete: bool,
}

pub(crate) fn write_meta(dir: &Path, meta: &Meta) -> Result<(), DocstoreError> {
    let descriptor = serde_json::to_vec(meta.schema.as_ref())
        .map_err(|e| DocstoreError::Storage(format!("cannot encode schema descriptor: {e}")))?;
    let mut bytes = Vec::with_capacity(21 + descriptor.len());
    bytes.extend_from_slice(META_MAGIC);
    bytes.push(META_VERSION);
    bytes.extend_from_slice(&meta.count.to_le_bytes());
    bytes.extend_from_slice(&meta.max_id_len.to_le_bytes());
    bytes.extend_from_slice(&(descriptor.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&descriptor);
    bytes.push(meta.complete as u8);
    // Atomic swap so a crash can never leave a meta that claims completion
    // over mismatched data/index files.
    let tmp = dir.join("meta.tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, meta_path(dir))?;
    Ok(())
}

pub(crate) fn read_meta(dir: &Path) -> Result<Meta, DocstoreError> {
    let corrupt = |msg: &str| DocstoreError::Corrupt(format!("{}: {msg}", dir.display()));
    let mut bytes = Vec::new();
    File::open(meta_path(dir))?.read_to_end(&mut bytes)?;
    if bytes.len() < 21 || &bytes[..5] != META_MAGIC {
        return Err(corrupt("bad meta header"));
    }
    if bytes[5] != META_VERSION {
        return Err(corrupt("unsupported format version"));
    }
    let count = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let max_id_len = u16::from_le_bytes(bytes[14..16].try_into().unwrap());
    let desc_len = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    if bytes.len() != 20 + desc_len + 1 {
        return Err(corrupt("meta length mismatch"));
    }
    let schema: Schema = serde_json::from_slice(&bytes[20..20 + desc_len])
        .map_err(|_| corrupt("unreadable schema descriptor"))?;
    Ok(Meta {
        count,
        max_id_len,
        schema: Arc::new(schema),
        complete: bytes[20 + desc_len] == 1,
    })
}

pub(crate) fn entry_size(max_id_len: u16) -> usize {
    max_id_len as usize + 12
}

pub(crate) fn encode_index_entry(out: &mut Vec<u8>, id: &[u8], max_id_len: u16, offset: u64, len: u32) {
    out.extend_from_slice(id);
    out.resize(out.len() + (max_id_len as usize - id.len()), 0);
    out.extend_from_slice(&offset.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
}

pub(crate) fn decode_index_entry(entry: &[u8], max_id_len: u16) -> (&[u8], u64, u32) {
    let id = &entry[..max_id_len as usize];
    let offset = u64::from_le_bytes(entry[max_id_len as usize..max_id_len as usize + 8].try_into().unwrap());
    let len = u32::from_le_bytes(entry[max_id_len as usize + 8..].try_into().unwrap());
    (id, offset, len)
}

/// Serializes a record's fields (length-prefixed UTF-8), uncompressed.
pub(crate) fn encode_record(record: &Record) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    for value in record.values() {
        let text = value.render();
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
    }
    out
}

pub(crate) fn decode_record(bytes: &[u8], schema: &Arc<Schema>) -> Result<Record, DocstoreError> {
    let corrupt = |msg: &str| DocstoreError::Corrupt(msg.to_string());
    let mut values = Vec::with_capacity(schema.len());
    let mut rest = bytes;
    for spec in schema.fields() {
        if rest.len() < 4 {
            return Err(corrupt("truncated record payload"));
        }
        let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(corrupt("record field overruns payload"));
        }
        let text = std::str::from_utf8(&rest[..len])
            .map_err(|_| corrupt("record field is not valid UTF-8"))?;
        rest = &rest[len..];
        let value =
            Value::coerce(text, spec.kind).map_err(|e| corrupt(&format!("field decode: {e}")))?;
        values.push(value);
    }
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes after record payload"));
    }
    Record::new(schema.clone(), values)
        .map_err(|e| DocstoreError::Corrupt(format!("decoded record invalid: {e}")))
}

/// Compresses one serialized record as an independent lz4 frame.
pub(crate) fn compress_record(payload: &[u8]) -> Result<Vec<u8>, DocstoreError> {
    let mut enc = lz4_flex::frame::FrameEncoder::new(Vec::with_capacity(payload.len() / 2 + 16));
    enc.write_all(payload)
        .and_then(|_| enc.finish().map_err(std::io::Error::other))
        .map_err(|e| DocstoreError::Storage(format!("lz4 compression failed: {e}")))
}

pub(crate) fn decompress_record(frame: &[u8]) -> Result<Vec<u8>, DocstoreError> {
    let mut out = Vec::with_capacity(frame.len() * 3);
    lz4_flex::frame::FrameDecoder::new(frame)
        .read_to_end(&mut out)
        .map_err(|e| DocstoreError::Corrupt(format!("lz4 frame decode failed: {e}")))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Schema;

    #[test]
    fn record_payload_roundtrip() {
        let schema = Arc::new(Schema::trec_run());
        let record = Record::new(
            schema.clone(),
            vec![
                Value::Id("q1".into()),
                Value::Id("d5".into()),
                Value::Int(-3),
                Value::Float(12.5),
                Value::Text("tag".into()),
            ],
        )
        .unwrap();
        let payload = encode_record(&record);
        assert_eq!(decode_record(&payload, &schema).unwrap(), record);
        let frame = compress_record(&payload).unwrap();
        assert_eq!(decompress_record(&frame).unwrap(), payload);
    }

    #[test]
    fn meta_roundtrip_and_completion_flag() {
        let dir = tempfile::tempdir().unwrap();
        let meta = Meta {
            count: 42,
            max_id_len: 9,
            schema: Arc::new(Schema::generic_docs()),
            complete: false,
        };
        write_meta(dir.path(), &meta).unwrap();
        let read = read_meta(dir.path()).unwrap();
        assert_eq!(read.count, 42);
        assert_eq!(read.max_id_len, 9);
        assert!(!read.complete);
        assert_eq!(read.schema.as_ref(), meta.schema.as_ref());
    }
}
