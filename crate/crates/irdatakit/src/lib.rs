//! Acquire, verify, store, and stream Information Retrieval datasets.
//!
//! The toolkit centers on a registry of hierarchical dataset IDs (for
//! instance `cord19/trec-covid`, where `cord19` supplies the documents and
//! the benchmark adds queries and judgments). A loaded dataset handle is a
//! stateless descriptor: it knows how to acquire its source files, parse
//! them into typed records, and build lookup structures, but performs no
//! I/O until an iterator or docstore is actually used.
//!
//! Beyond parsing and iteration the crate provides:
//!
//! - resumable, hash-verified downloads with license notices and a
//!   manual-placement flow for restricted corpora ([`fetch`]);
//! - an on-disk document store with per-record lz4 compression and a
//!   sorted fixed-width ID index for binary-search lookups ([`docstore`]);
//! - random access into gzip sources via decompressor checkpoints
//!   ([`gzseek`]);
//! - slicing of document iterators by index ranges, fractions, and steps,
//!   resolved to seeks rather than scans ([`slicing`]).

pub mod docstore;
pub mod fetch;
pub mod formats;
pub mod gzseek;
pub mod hash;
pub mod home;
pub mod lock;
pub mod record;
pub mod registry;
pub mod slicing;

pub use formats::{FormatError, OutputFormat, ParseOptions, ParseStats};
pub use home::Home;
pub use record::{EntityType, FieldKind, FieldSpec, Record, RecordError, Schema, Value};

use thiserror::Error;

/// Crate-level error, aggregating the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Record(#[from] record::RecordError),
    #[error(transparent)]
    Format(#[from] formats::FormatError),
    #[error(transparent)]
    Fetch(#[from] fetch::FetchError),
    #[error(transparent)]
    Docstore(#[from] docstore::DocstoreError),
    #[error(transparent)]
    Gz(#[from] gzseek::GzError),
    #[error(transparent)]
    Registry(#[from] registry::RegistryError),
    #[error(transparent)]
    Slice(#[from] slicing::SliceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boxed lazy record stream; errors surface at iteration time.
pub type RecordIter = Box<dyn Iterator<Item = Result<Record, Error>> + Send>;
