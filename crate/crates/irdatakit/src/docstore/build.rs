//! Docstore construction.
//!
//! One pass over the source iterator writes the compressed record log and
//! collects `(id, offset, length)` entries. Entries are sorted by raw ID
//! bytes — spilling sorted runs to disk when they exceed the memory budget
//! — then merged into the fixed-width index. The meta file is finalized
//! last, so a crash at any earlier point leaves the store visibly
//! incomplete rather than serving partial data.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::lock::{LockFile, DEFAULT_STALE_AFTER};
use crate::record::Schema;
use crate::Error;

use super::layout::{self, Meta};
use super::{Docstore, DocstoreError, DocstoreOptions};

// Field order gives the sort key: ID bytes first, then data-file offset,
// so equal IDs surface adjacent with the earliest occurrence first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct IdEntry {
    id: Vec<u8>,
    offset: u64,
    len: u32,
}

/// Builds a store at `dir` from `docs`. The iterator's order becomes the
/// data-file order; the index is sorted by ID regardless.
pub fn build(
    schema: Arc<Schema>,
    docs: impl Iterator<Item = Result<crate::record::Record, Error>>,
    dir: &Path,
    options: &DocstoreOptions,
) -> Result<Docstore, DocstoreError> {
    fs::create_dir_all(dir)?;
    let _lock = LockFile::acquire(&dir.join("store"), DEFAULT_STALE_AFTER)?;

    // Invalidate any previous build immediately.
    let _ = fs::remove_file(layout::meta_path(dir));

    let mut data = BufWriter::new(File::create(layout::data_path(dir))?);
    let mut sorter = ExtSorter::new(dir.to_path_buf(), options.memory_budget);
    let mut offset = 0u64;
    let mut max_id_len = 0u16;
    let mut total = 0u64;

    for doc in docs {
        let doc = doc.map_err(|e| DocstoreError::Source(Box::new(e)))?;
        if doc.schema().as_ref() != schema.as_ref() {
            return Err(DocstoreError::Storage(
                "document schema differs from the store schema".to_string(),
            ));
        }
        let id = doc
            .first_id()
            .ok_or_else(|| DocstoreError::Storage("document has no ID field".to_string()))?;
        if id.is_empty() {
            return Err(DocstoreError::Storage("empty document ID".to_string()));
        }
        if id.bytes().any(|b| b == 0) {
            return Err(DocstoreError::Storage(format!(
                "document ID {id:?} contains a NUL byte"
            )));
        }
        let id_bytes = id.as_bytes().to_vec();
        let id_len = u16::try_from(id_bytes.len())
            .map_err(|_| DocstoreError::Storage(format!("document ID longer than 64 KiB: {id:?}")))?;
        max_id_len = max_id_len.max(id_len);

        let frame = layout::compress_record(&layout::encode_record(&doc))?;
        let len = u32::try_from(frame.len())
            .map_err(|_| DocstoreError::Storage("compressed record exceeds 4 GiB".to_string()))?;
        data.write_all(&frame)?;
        sorter.push(
            IdEntry {
                id: id_bytes,
                offset,
                len,
            },
        )?;
        offset += frame.len() as u64;
        total += 1;
    }
    data.flush()?;
    data.get_ref().sync_all()?;

    // Merge sorted entries into the fixed-width index, catching duplicates
    // by adjacency.
    let mut index = BufWriter::new(File::create(layout::index_path(dir))?);
    let mut entry_buf = Vec::with_capacity(layout::entry_size(max_id_len));
    let mut prev_id: Option<Vec<u8>> = None;
    let mut kept = 0u64;
    let mut dropped = 0u64;
    for entry in sorter.finish()? {
        let entry = entry?;
        if prev_id.as_deref() == Some(&entry.id) {
            if options.keep_first_duplicate {
                dropped += 1;
                continue;
            }
            return Err(DocstoreError::DuplicateDocId(
                String::from_utf8_lossy(&entry.id).into_owned(),
            ));
        }
        entry_buf.clear();
        layout::encode_index_entry(&mut entry_buf, &entry.id, max_id_len, entry.offset, entry.len);
        index.write_all(&entry_buf)?;
        prev_id = Some(entry.id);
        kept += 1;
    }
    index.flush()?;
    index.get_ref().sync_all()?;
    debug_assert_eq!(kept + dropped, total);

    layout::write_meta(
        dir,
        &Meta {
            count: kept,
            max_id_len,
            schema: schema.clone(),
            complete: true,
        },
    )?;

    let store = Docstore::open(dir, options)?;
    store.set_dropped_duplicates(dropped);
    Ok(store)
}

/// Sorts `(id, offset, len)` entries, spilling runs to disk past the
/// memory budget.
struct ExtSorter {
    dir: PathBuf,
    budget: usize,
    used: usize,
    entries: Vec<IdEntry>,
    runs: Vec<PathBuf>,
}

impl ExtSorter {
    fn new(dir: PathBuf, budget: usize) -> ExtSorter {
        ExtSorter {
            dir,
            budget: budget.max(64 * 1024),
            used: 0,
            entries: Vec::new(),
            runs: Vec::new(),
        }
    }

    fn push(&mut self, entry: IdEntry) -> Result<(), DocstoreError> {
        self.used += entry.id.len() + std::mem::size_of::<IdEntry>();
        self.entries.push(entry);
        if self.used > self.budget {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> Result<(), DocstoreError> {
        self.entries.sort_unstable();
        let path = self.dir.join(format!("sort-run-{}.tmp", self.runs.len()));
        let mut w = BufWriter::new(File::create(&path)?);
        for e in &self.entries {
            w.write_all(&(e.id.len() as u16).to_le_bytes())?;
            w.write_all(&e.id)?;
            w.write_all(&e.offset.to_le_bytes())?;
            w.write_all(&e.len.to_le_bytes())?;
        }
        w.flush()?;
        self.runs.push(path);
        self.entries.clear();
        self.used = 0;
        Ok(())
    }

    fn finish(mut self) -> Result<MergeIter, DocstoreError> {
        self.entries.sort_unstable();
        let mut sources: Vec<RunSource> = Vec::with_capacity(self.runs.len() + 1);
        for path in &self.runs {
            sources.push(RunSource::File(RunReader {
                reader: BufReader::new(File::open(path)?),
            }));
        }
        if !self.entries.is_empty() {
            sources.push(RunSource::Memory(std::mem::take(&mut self.entries).into_iter()));
        }
        let mut merge = MergeIter {
            sources,
            heap: BinaryHeap::new(),
            cleanup: self.runs,
        };
        for i in 0..merge.sources.len() {
            if let Some(entry) = merge.sources[i].next_entry()? {
                merge.heap.push(Reverse((entry, i)));
            }
        }
        Ok(merge)
    }
}

enum RunSource {
    File(RunReader),
    Memory(std::vec::IntoIter<IdEntry>),
}

impl RunSource {
    fn next_entry(&mut self) -> Result<Option<IdEntry>, DocstoreError> {
        match self {
            RunSource::Memory(it) => Ok(it.next()),
            RunSource::File(r) => r.next_entry(),
        }
    }
}

struct RunReader {
    reader: BufReader<File>,
}

impl RunReader {
    fn next_entry(&mut self) -> Result<Option<IdEntry>, DocstoreError> {
        let mut len_buf = [0u8; 2];
        match self.reader.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let id_len = u16::from_le_bytes(len_buf) as usize;
        let mut id = vec![0u8; id_len];
        self.reader.read_exact(&mut id)?;
        let mut off = [0u8; 8];
        self.reader.read_exact(&mut off)?;
        let mut len = [0u8; 4];
        self.reader.read_exact(&mut len)?;
        Ok(Some(IdEntry {
            id,
            offset: u64::from_le_bytes(off),
            len: u32::from_le_bytes(len),
        }))
    }
}

struct MergeIter {
    sources: Vec<RunSource>,
    heap: BinaryHeap<Reverse<(IdEntry, usize)>>,
    cleanup: Vec<PathBuf>,
}

impl Iterator for MergeIter {
    type Item = Result<IdEntry, DocstoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        let Reverse((entry, source_idx)) = self.heap.pop()?;
        match self.sources[source_idx].next_entry() {
            Ok(Some(next)) => self.heap.push(Reverse((next, source_idx))),
            Ok(None) => {}
            Err(e) => return Some(Err(e)),
        }
        Some(Ok(entry))
    }
}

impl Drop for MergeIter {
    fn drop(&mut self) {
        for path in &self.cleanup {
            let _ = fs::remove_file(path);
        }
    }
}
