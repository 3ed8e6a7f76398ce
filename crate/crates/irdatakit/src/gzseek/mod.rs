//! Random access into gzip files via decompressor checkpoints.
//!
//! A gzip stream normally has to be decompressed from the start to reach a
//! given byte. During one full decompression pass we record, at deflate
//! block boundaries, the exact (byte, bit) position plus the 32 KiB history
//! window. Any later read seeks to the nearest checkpoint at or before the
//! target, primes the decoder with the saved window, and decodes only the
//! remainder — so fetching a document near the end of a multi-GiB source
//! touches a tiny fraction of the compressed bytes.
//!
//! Checkpoint indexes are stored beside the source as `<name>.chk` and can
//! themselves be distributed as downloadable artifacts.

pub(crate) mod inflate;

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hash::{sha256_file, to_hex};
use crate::lock::{LockFile, DEFAULT_STALE_AFTER};

use inflate::{
    decode_members, read_gzip_header, BitReader, BoundaryInfo, CountingSink, Inflater, Sink,
};

pub use inflate::WINDOW_SIZE;

/// Smallest accepted checkpoint interval.
pub const MIN_INTERVAL: u64 = 64 * 1024;

/// Default target spacing between checkpoints (uncompressed bytes).
pub const DEFAULT_INTERVAL: u64 = 8 * 1024 * 1024;

const CHK_MAGIC: &[u8; 5] = b"IRGZ1";
const CHK_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum GzError {
    #[error("corrupt gzip stream near byte {position}: {message}")]
    CorruptGzip { position: u64, message: String },
    #[error("requested range [{offset}, {offset}+{length}) exceeds uncompressed size {total}")]
    OutOfRange { offset: u64, length: u64, total: u64 },
    #[error("checkpoint index was built for a different file (expected sha256 {expected}, found {found})")]
    IndexMismatch { expected: String, found: String },
    #[error("checkpoint interval {0} is below the minimum {MIN_INTERVAL}")]
    IntervalTooSmall(u64),
    #[error("corrupt checkpoint index: {0}")]
    CorruptIndex(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A resumable decoding position: deflate block boundary (or member start)
/// plus the history needed to continue from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    /// Byte offset of the deflate bit position.
    pub comp_byte: u64,
    /// Bit offset (0–7) within that byte.
    pub comp_bit: u8,
    /// Uncompressed byte position this checkpoint resumes at.
    pub uncomp_offset: u64,
    /// Most recent uncompressed output, at most 32 KiB (shorter right after
    /// a member start).
    pub window: Vec<u8>,
}

/// All checkpoints for one gzip file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointIndex {
    pub source_sha256: [u8; 32],
    pub interval: u64,
    pub total_uncompressed: u64,
    pub checkpoints: Vec<Checkpoint>,
}

impl CheckpointIndex {
    /// Greatest checkpoint at or before `offset`, if any.
    pub fn select(&self, offset: u64) -> Option<&Checkpoint> {
        match self
            .checkpoints
            .partition_point(|c| c.uncomp_offset <= offset)
        {
            0 => None,
            n => Some(&self.checkpoints[n - 1]),
        }
    }

    /// Conventional index path for a source file: `<name>.chk` beside it.
    pub fn path_for(gz_path: &Path) -> PathBuf {
        let mut name = gz_path.file_name().unwrap_or_default().to_os_string();
        name.push(".chk");
        gz_path.with_file_name(name)
    }

    pub fn write_to(&self, path: &Path) -> Result<(), GzError> {
        let tmp = path.with_extension("chk.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            w.write_all(CHK_MAGIC)?;
            w.write_all(&[CHK_VERSION])?;
            w.write_all(&self.source_sha256)?;
            w.write_all(&self.interval.to_le_bytes())?;
            w.write_all(&self.total_uncompressed.to_le_bytes())?;
            w.write_all(&(self.checkpoints.len() as u64).to_le_bytes())?;
            for cp in &self.checkpoints {
                w.write_all(&cp.comp_byte.to_le_bytes())?;
                w.write_all(&[cp.comp_bit])?;
                w.write_all(&cp.uncomp_offset.to_le_bytes())?;
                w.write_all(&(cp.window.len() as u16).to_le_bytes())?;
                // Windows dominate the index size; compressing them is
                // nearly free.
                let mut enc = flate2::write::ZlibEncoder::new(
                    Vec::new(),
                    flate2::Compression::default(),
                );
                enc.write_all(&cp.window)?;
                let packed = enc.finish()?;
                w.write_all(&(packed.len() as u32).to_le_bytes())?;
                w.write_all(&packed)?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<CheckpointIndex, GzError> {
        let mut r = io::BufReader::new(File::open(path)?);
        let corrupt = |msg: &str| GzError::CorruptIndex(msg.to_string());
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != CHK_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version)?;
        if version[0] != CHK_VERSION {
            return Err(corrupt("unsupported version"));
        }
        let mut sha = [0u8; 32];
        r.read_exact(&mut sha)?;
        let interval = read_u64(&mut r)?;
        let total_uncompressed = read_u64(&mut r)?;
        let count = read_u64(&mut r)?;
        let mut checkpoints = Vec::with_capacity(count.min(1 << 20) as usize);
        let mut prev_offset = None;
        for _ in 0..count {
            let comp_byte = read_u64(&mut r)?;
            let mut bit = [0u8; 1];
            r.read_exact(&mut bit)?;
            if bit[0] > 7 {
                return Err(corrupt("bit offset out of range"));
            }
            let uncomp_offset = read_u64(&mut r)?;
            if prev_offset.is_some_and(|p| uncomp_offset <= p) {
                return Err(corrupt("checkpoint offsets not strictly increasing"));
            }
            prev_offset = Some(uncomp_offset);
            let mut wlen = [0u8; 2];
            r.read_exact(&mut wlen)?;
            let wlen = u16::from_le_bytes(wlen) as usize;
            if wlen > WINDOW_SIZE {
                return Err(corrupt("window longer than 32 KiB"));
            }
            let mut plen = [0u8; 4];
            r.read_exact(&mut plen)?;
            let plen = u32::from_le_bytes(plen) as usize;
            let mut packed = vec![0u8; plen];
            r.read_exact(&mut packed)?;
            let mut window = Vec::with_capacity(wlen);
            flate2::read::ZlibDecoder::new(&packed[..])
                .read_to_end(&mut window)
                .map_err(|_| corrupt("window decompression failed"))?;
            if window.len() != wlen {
                return Err(corrupt("window length mismatch"));
            }
            checkpoints.push(Checkpoint {
                comp_byte,
                comp_bit: bit[0],
                uncomp_offset,
                window,
            });
        }
        Ok(CheckpointIndex {
            source_sha256: sha,
            interval,
            total_uncompressed,
            checkpoints,
        })
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, GzError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Hashes everything pulled through it; lets the checkpoint build compute
/// the source digest in the same pass.
struct HashingReader<R: Read> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// Runs one full decompression pass over `gz_path`, recording a checkpoint
/// at the first deflate block boundary at or after each multiple of
/// `interval` uncompressed bytes. Member starts count as natural
/// boundaries. The stream's CRCs are verified along the way.
pub fn build_checkpoints(gz_path: &Path, interval: u64) -> Result<CheckpointIndex, GzError> {
    if interval < MIN_INTERVAL {
        return Err(GzError::IntervalTooSmall(interval));
    }
    let file = File::open(gz_path)?;
    let mut br = BitReader::new(
        HashingReader {
            inner: file,
            hasher: Sha256::new(),
        },
        0,
    );
    read_gzip_header(&mut br)?;
    let mut inf = Inflater::new();
    let mut sink = CountingSink { total: 0 };
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut next_target = interval;
    {
        let mut on_boundary = |b: BoundaryInfo<'_>| {
            if b.uncomp_offset >= next_target {
                checkpoints.push(Checkpoint {
                    comp_byte: b.bit_position / 8,
                    comp_bit: (b.bit_position % 8) as u8,
                    uncomp_offset: b.uncomp_offset,
                    window: b.window.to_vec(),
                });
                next_target = (b.uncomp_offset / interval + 1) * interval;
            }
        };
        decode_members(&mut br, &mut inf, &mut sink, true, false, Some(&mut on_boundary))?;
    }
    Ok(CheckpointIndex {
        source_sha256: br.into_inner_hash(),
        interval,
        total_uncompressed: inf.total_out(),
        checkpoints,
    })
}

impl<R: Read> BitReader<HashingReader<R>> {
    fn into_inner_hash(self) -> [u8; 32] {
        self.into_inner().hasher.finalize().into()
    }
}

struct SliceSink {
    skip: u64,
    want: usize,
    out: Vec<u8>,
}

impl Sink for SliceSink {
    fn write(&mut self, data: &[u8]) -> bool {
        let mut data = data;
        if self.skip > 0 {
            let s = self.skip.min(data.len() as u64) as usize;
            data = &data[s..];
            self.skip -= s as u64;
        }
        if !data.is_empty() && self.out.len() < self.want {
            let take = (self.want - self.out.len()).min(data.len());
            self.out.extend_from_slice(&data[..take]);
        }
        self.out.len() < self.want
    }
}

/// Handle over one gzip file plus its checkpoint index. Verifies on open
/// that the index matches the file, then serves arbitrary-offset reads.
/// Safe for concurrent callers; every read opens its own file handle.
pub struct GzSeekReader {
    path: PathBuf,
    index: CheckpointIndex,
    compressed_bytes: AtomicU64,
    source_reads: AtomicU64,
}

impl GzSeekReader {
    pub fn open(gz_path: impl Into<PathBuf>, index: CheckpointIndex) -> Result<GzSeekReader, GzError> {
        let path = gz_path.into();
        let found = sha256_file(&path)?;
        if found != index.source_sha256 {
            return Err(GzError::IndexMismatch {
                expected: to_hex(&index.source_sha256),
                found: to_hex(&found),
            });
        }
        Ok(GzSeekReader {
            path,
            index,
            compressed_bytes: AtomicU64::new(0),
            source_reads: AtomicU64::new(0),
        })
    }

    pub fn index(&self) -> &CheckpointIndex {
        &self.index
    }

    pub fn total_uncompressed(&self) -> u64 {
        self.index.total_uncompressed
    }

    /// Cumulative compressed bytes consumed by reads on this handle.
    pub fn compressed_bytes_read(&self) -> u64 {
        self.compressed_bytes.load(Ordering::Relaxed)
    }

    /// Number of reads that touched the source file.
    pub fn source_reads(&self) -> u64 {
        self.source_reads.load(Ordering::Relaxed)
    }

    pub fn read_at(&self, offset: u64, length: u64) -> Result<Vec<u8>, GzError> {
        Ok(self.read_at_counted(offset, length)?.0)
    }

    /// As [`read_at`](Self::read_at), also returning the compressed bytes
    /// consumed by this one call.
    pub fn read_at_counted(&self, offset: u64, length: u64) -> Result<(Vec<u8>, u64), GzError> {
        let total = self.index.total_uncompressed;
        if offset.checked_add(length).is_none_or(|end| end > total) {
            return Err(GzError::OutOfRange {
                offset,
                length,
                total,
            });
        }
        if length == 0 {
            return Ok((Vec::new(), 0));
        }
        self.source_reads.fetch_add(1, Ordering::Relaxed);
        let mut file = File::open(&self.path)?;
        let (mut br, mut inf, base, partial) = match self.index.select(offset) {
            Some(cp) => {
                file.seek(SeekFrom::Start(cp.comp_byte))?;
                let mut br = BitReader::new(file, cp.comp_byte);
                if cp.comp_bit > 0 {
                    br.skip_initial_bits(cp.comp_bit)?;
                }
                (br, Inflater::with_window(&cp.window), cp.uncomp_offset, true)
            }
            None => {
                let mut br = BitReader::new(file, 0);
                read_gzip_header(&mut br)?;
                (br, Inflater::new(), 0, false)
            }
        };
        let mut sink = SliceSink {
            skip: offset - base,
            want: length as usize,
            out: Vec::with_capacity(length as usize),
        };
        decode_members(&mut br, &mut inf, &mut sink, false, partial, None)?;
        if sink.out.len() != length as usize {
            return Err(GzError::CorruptGzip {
                position: br.bit_position() / 8,
                message: format!(
                    "stream ended {} bytes short of the indexed size",
                    length as usize - sink.out.len()
                ),
            });
        }
        let consumed = br.compressed_bytes_consumed();
        self.compressed_bytes.fetch_add(consumed, Ordering::Relaxed);
        Ok((sink.out, consumed))
    }
}

/// One-shot read: verifies the index against the file, then reads the
/// slice. Prefer [`GzSeekReader`] when issuing many reads.
pub fn read_at(
    gz_path: &Path,
    index: &CheckpointIndex,
    offset: u64,
    length: u64,
) -> Result<Vec<u8>, GzError> {
    let reader = GzSeekReader::open(gz_path, index.clone())?;
    reader.read_at(offset, length)
}

/// On-disk cache of fetched slices, keyed by `(source_id, offset, length)`.
/// A hit is served without touching the source file at all.
pub struct SliceCache {
    root: PathBuf,
}

impl SliceCache {
    pub fn new(root: impl Into<PathBuf>) -> SliceCache {
        SliceCache { root: root.into() }
    }

    fn slice_path(&self, source_id: &str, offset: u64, length: u64) -> PathBuf {
        let digest = crate::hash::sha256_bytes(source_id.as_bytes());
        self.root
            .join(&to_hex(&digest)[..16])
            .join(format!("{offset}-{length}.bin"))
    }

    pub fn fetch(
        &self,
        reader: &GzSeekReader,
        source_id: &str,
        offset: u64,
        length: u64,
    ) -> Result<Vec<u8>, GzError> {
        let path = self.slice_path(source_id, offset, length);
        if let Ok(bytes) = fs::read(&path) {
            if bytes.len() as u64 == length {
                return Ok(bytes);
            }
            // Wrong size: stale or torn entry, refetch below.
        }
        let bytes = reader.read_at(offset, length)?;
        let _lock = LockFile::acquire(&path, DEFAULT_STALE_AFTER)?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(bytes)
    }

    /// Drops every cached slice.
    pub fn clear(&self) -> io::Result<()> {
        if self.root.exists() {
            fs::remove_dir_all(&self.root)?;
        }
        Ok(())
    }
}
