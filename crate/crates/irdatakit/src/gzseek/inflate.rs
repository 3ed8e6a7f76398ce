//! DEFLATE/gzip decoder with bit-exact position tracking.
//!
//! Checkpointed seeking needs two things ordinary decompressors do not
//! expose: the precise (byte, bit) position of every deflate block
//! boundary, and the ability to resume raw-deflate decoding at such a
//! position with a caller-supplied 32 KiB history window. This module
//! implements both on top of a counting bit reader.

use std::io::Read;

use super::GzError;

/// Deflate history window size.
pub const WINDOW_SIZE: usize = 32 * 1024;

/// Linear output buffer: history plus one window of fresh output.
const BUF_SIZE: usize = 2 * WINDOW_SIZE;

const CHUNK_SIZE: usize = 32 * 1024;

/// Receives decompressed bytes. Returning `false` stops decoding early.
pub trait Sink {
    fn write(&mut self, data: &[u8]) -> bool;
}

/// Counts output; never stops.
pub struct CountingSink {
    pub total: u64,
}

impl Sink for CountingSink {
    fn write(&mut self, data: &[u8]) -> bool {
        self.total += data.len() as u64;
        true
    }
}

/// LSB-first bit reader over a byte stream, tracking the absolute bit
/// position of the next unread bit and the number of compressed bytes
/// consumed (readahead excluded).
pub struct BitReader<R: Read> {
    inner: R,
    chunk: Vec<u8>,
    pos: usize,
    filled: usize,
    bitbuf: u64,
    bitcount: u32,
    consumed: u64,
    base_byte: u64,
}

impl<R: Read> BitReader<R> {
    /// `base_byte` is the absolute offset in the compressed stream at which
    /// `inner` begins; positions are reported relative to the whole stream.
    pub fn new(inner: R, base_byte: u64) -> Self {
        BitReader {
            inner,
            chunk: vec![0u8; CHUNK_SIZE],
            pos: 0,
            filled: 0,
            bitbuf: 0,
            bitcount: 0,
            consumed: 0,
            base_byte,
        }
    }

    fn corrupt(&self, message: impl Into<String>) -> GzError {
        GzError::CorruptGzip {
            position: self.bit_position() / 8,
            message: message.into(),
        }
    }

    fn try_fill_byte(&mut self) -> Result<Option<u8>, GzError> {
        if self.pos == self.filled {
            loop {
                match self.inner.read(&mut self.chunk) {
                    Ok(0) => return Ok(None),
                    Ok(n) => {
                        self.filled = n;
                        self.pos = 0;
                        break;
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                    Err(e) => return Err(GzError::Io(e)),
                }
            }
        }
        let b = self.chunk[self.pos];
        self.pos += 1;
        self.consumed += 1;
        Ok(Some(b))
    }

    fn fill_byte(&mut self) -> Result<u8, GzError> {
        self.try_fill_byte()?
            .ok_or_else(|| self.corrupt("unexpected end of compressed stream"))
    }

    /// Reads `n` (≤ 32) bits, LSB first.
    pub fn bits(&mut self, n: u32) -> Result<u32, GzError> {
        while self.bitcount < n {
            let b = self.fill_byte()?;
            self.bitbuf |= (b as u64) << self.bitcount;
            self.bitcount += 8;
        }
        let v = (self.bitbuf & ((1u64 << n) - 1)) as u32;
        self.bitbuf >>= n;
        self.bitcount -= n;
        Ok(v)
    }

    /// Peeks up to `n` bits, zero-padded near end of stream. Returns the
    /// padded value and how many real bits are available.
    fn peek_lenient(&mut self, n: u32) -> Result<(u32, u32), GzError> {
        while self.bitcount < n {
            match self.try_fill_byte()? {
                Some(b) => {
                    self.bitbuf |= (b as u64) << self.bitcount;
                    self.bitcount += 8;
                }
                None => break,
            }
        }
        let v = (self.bitbuf & ((1u64 << n) - 1)) as u32;
        Ok((v, self.bitcount.min(n)))
    }

    fn drop_bits(&mut self, n: u32) {
        debug_assert!(n <= self.bitcount);
        self.bitbuf >>= n;
        self.bitcount -= n;
    }

    /// Discards bits up to the next byte boundary.
    pub fn align_byte(&mut self) {
        let drop = self.bitcount % 8;
        self.bitbuf >>= drop;
        self.bitcount -= drop;
    }

    /// Next whole byte; caller must be byte-aligned.
    pub fn read_aligned_byte(&mut self) -> Result<u8, GzError> {
        debug_assert_eq!(self.bitcount % 8, 0);
        if self.bitcount >= 8 {
            let b = (self.bitbuf & 0xFF) as u8;
            self.bitbuf >>= 8;
            self.bitcount -= 8;
            Ok(b)
        } else {
            self.fill_byte()
        }
    }

    /// Peeks one byte at a byte-aligned position, `None` at end of stream.
    pub fn peek_aligned_byte(&mut self) -> Result<Option<u8>, GzError> {
        debug_assert_eq!(self.bitcount % 8, 0);
        if self.bitcount == 0 {
            match self.try_fill_byte()? {
                Some(b) => {
                    self.bitbuf = b as u64;
                    self.bitcount = 8;
                }
                None => return Ok(None),
            }
        }
        Ok(Some((self.bitbuf & 0xFF) as u8))
    }

    /// Discards `n` bits at the start of a resumed stream.
    pub fn skip_initial_bits(&mut self, n: u8) -> Result<(), GzError> {
        self.bits(n as u32)?;
        Ok(())
    }

    /// Absolute bit offset of the next unread bit.
    pub fn bit_position(&self) -> u64 {
        (self.base_byte + self.consumed) * 8 - self.bitcount as u64
    }

    /// Compressed bytes pulled out of the underlying stream so far.
    pub fn compressed_bytes_consumed(&self) -> u64 {
        self.consumed
    }

    pub fn into_inner(self) -> R {
        self.inner
    }
}

/// Canonical Huffman decoding table: one flat lookup indexed by the next
/// `index_bits` stream bits. Entry = `symbol << 4 | code_length`; length 0
/// marks an unused pattern.
struct Huffman {
    index_bits: u32,
    table: Vec<u16>,
}

impl Huffman {
    fn build(lengths: &[u8]) -> Result<Huffman, &'static str> {
        let max_len = lengths.iter().copied().max().unwrap_or(0) as u32;
        if max_len == 0 {
            // No codes at all; any decode attempt is an error.
            return Ok(Huffman {
                index_bits: 1,
                table: vec![0, 0],
            });
        }
        if max_len > 15 {
            return Err("code length exceeds 15");
        }
        let mut count = [0u32; 16];
        for &l in lengths {
            count[l as usize] += 1;
        }
        count[0] = 0;
        // Over-subscription check (Kraft inequality).
        let mut left = 1i64;
        for l in 1..=15 {
            left <<= 1;
            left -= count[l] as i64;
            if left < 0 {
                return Err("over-subscribed code set");
            }
        }
        let mut next_code = [0u32; 16];
        let mut code = 0u32;
        for l in 1..=15 {
            code = (code + count[l - 1]) << 1;
            next_code[l] = code;
        }
        let mut table = vec![0u16; 1 << max_len];
        for (sym, &len) in lengths.iter().enumerate() {
            if len == 0 {
                continue;
            }
            let len = len as u32;
            let code = next_code[len as usize];
            next_code[len as usize] += 1;
            // Codes are read LSB-first from the stream, so index patterns by
            // the reversed code, replicated across the unused high bits.
            let mut rev = 0u32;
            for i in 0..len {
                rev |= ((code >> i) & 1) << (len - 1 - i);
            }
            let entry = ((sym as u16) << 4) | len as u16;
            let step = 1usize << len;
            let mut idx = rev as usize;
            while idx < table.len() {
                table[idx] = entry;
                idx += step;
            }
        }
        Ok(Huffman {
            index_bits: max_len,
            table,
        })
    }

    fn decode<R: Read>(&self, br: &mut BitReader<R>) -> Result<u16, GzError> {
        let (pattern, have) = br.peek_lenient(self.index_bits)?;
        let entry = self.table[pattern as usize];
        let len = (entry & 0xF) as u32;
        if len == 0 || len > have {
            return Err(br.corrupt("invalid Huffman code"));
        }
        br.drop_bits(len);
        Ok(entry >> 4)
    }
}

const LENGTH_BASE: [u16; 29] = [
    3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15, 17, 19, 23, 27, 31, 35, 43, 51, 59, 67, 83, 99, 115,
    131, 163, 195, 227, 258,
];
const LENGTH_EXTRA: [u8; 29] = [
    0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0,
];
const DIST_BASE: [u16; 30] = [
    1, 2, 3, 4, 5, 7, 9, 13, 17, 25, 33, 49, 65, 97, 129, 193, 257, 385, 513, 769, 1025, 1537,
    2049, 3073, 4097, 6145, 8193, 12289, 16385, 24577,
];
const DIST_EXTRA: [u8; 30] = [
    0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12,
    13, 13,
];
const CODE_LENGTH_ORDER: [usize; 19] = [
    16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15,
];

fn fixed_tables() -> &'static (Huffman, Huffman) {
    use std::sync::OnceLock;
    static TABLES: OnceLock<(Huffman, Huffman)> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut litlen = [0u8; 288];
        litlen[..144].fill(8);
        litlen[144..256].fill(9);
        litlen[256..280].fill(7);
        litlen[280..].fill(8);
        let dist = [5u8; 30];
        (
            Huffman::build(&litlen).expect("fixed litlen table is valid"),
            Huffman::build(&dist).expect("fixed distance table is valid"),
        )
    })
}

/// Decompression state: a linear buffer holding the most recent history
/// window followed by pending output. Keeping the window linear makes both
/// match copies and checkpoint snapshots cheap.
pub struct Inflater {
    buf: Vec<u8>,
    wpos: usize,
    emit_start: usize,
    hist: usize,
    total_out: u64,
    stopped: bool,
}

impl Inflater {
    pub fn new() -> Inflater {
        Inflater {
            buf: vec![0u8; BUF_SIZE],
            wpos: 0,
            emit_start: 0,
            hist: 0,
            total_out: 0,
            stopped: false,
        }
    }

    /// Preloads the history window for a mid-stream resume.
    pub fn with_window(window: &[u8]) -> Inflater {
        assert!(window.len() <= WINDOW_SIZE);
        let mut inf = Inflater::new();
        inf.buf[..window.len()].copy_from_slice(window);
        inf.wpos = window.len();
        inf.emit_start = window.len();
        inf.hist = window.len();
        inf
    }

    /// Clears history at a member boundary; pending output must already be
    /// flushed.
    pub fn reset_window(&mut self) {
        debug_assert_eq!(self.emit_start, self.wpos);
        self.wpos = 0;
        self.emit_start = 0;
        self.hist = 0;
    }

    pub fn total_out(&self) -> u64 {
        self.total_out
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    /// Most recent output (up to 32 KiB), contiguous.
    pub fn window_snapshot(&self) -> &[u8] {
        &self.buf[self.wpos - self.hist..self.wpos]
    }

    /// Sends pending output to the sink.
    pub fn flush_pending(&mut self, sink: &mut dyn Sink) {
        if self.wpos > self.emit_start {
            if !sink.write(&self.buf[self.emit_start..self.wpos]) {
                self.stopped = true;
            }
            self.emit_start = self.wpos;
        }
    }

    fn slide(&mut self, sink: &mut dyn Sink) {
        self.flush_pending(sink);
        self.buf.copy_within(BUF_SIZE - WINDOW_SIZE.., 0);
        self.wpos = WINDOW_SIZE;
        self.emit_start = WINDOW_SIZE;
    }

    #[inline]
    fn push(&mut self, b: u8, sink: &mut dyn Sink) {
        if self.wpos == BUF_SIZE {
            self.slide(sink);
        }
        self.buf[self.wpos] = b;
        self.wpos += 1;
        self.total_out += 1;
        if self.hist < WINDOW_SIZE {
            self.hist += 1;
        }
    }

    fn copy_match(
        &mut self,
        len: usize,
        dist: usize,
        sink: &mut dyn Sink,
    ) -> Result<(), &'static str> {
        if dist == 0 || dist > self.hist {
            return Err("match distance exceeds available history");
        }
        for _ in 0..len {
            let b = self.buf[self.wpos - dist];
            self.push(b, sink);
        }
        Ok(())
    }
}

/// How a run of blocks ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberEnd {
    /// Final block of the member fully decoded.
    Finished,
    /// Sink asked to stop.
    Stopped,
}

/// A resumable position: a deflate block boundary (or member start).
pub struct BoundaryInfo<'a> {
    pub bit_position: u64,
    pub uncomp_offset: u64,
    pub window: &'a [u8],
}

/// Decodes deflate blocks until the member's final block completes or the
/// sink stops. `on_boundary` fires at every non-final block boundary.
pub fn inflate_member_blocks<R: Read>(
    br: &mut BitReader<R>,
    inf: &mut Inflater,
    sink: &mut dyn Sink,
    mut on_boundary: Option<&mut dyn FnMut(BoundaryInfo<'_>)>,
) -> Result<MemberEnd, GzError> {
    loop {
        let bfinal = br.bits(1)? == 1;
        let btype = br.bits(2)?;
        match btype {
            0 => {
                br.align_byte();
                let len = br.bits(16)? as usize;
                let nlen = br.bits(16)? as usize;
                if len != (!nlen & 0xFFFF) {
                    return Err(br.corrupt("stored block length check failed"));
                }
                for _ in 0..len {
                    let b = br.read_aligned_byte()?;
                    inf.push(b, sink);
                }
            }
            1 | 2 => {
                let built;
                let (litlen, dist) = if btype == 1 {
                    let t = fixed_tables();
                    (&t.0, &t.1)
                } else {
                    built = read_dynamic_tables(br)?;
                    (&built.0, &built.1)
                };
                loop {
                    let sym = litlen.decode(br)?;
                    if sym < 256 {
                        inf.push(sym as u8, sink);
                    } else if sym == 256 {
                        break;
                    } else {
                        let li = sym as usize - 257;
                        if li >= LENGTH_BASE.len() {
                            return Err(br.corrupt("invalid length symbol"));
                        }
                        let len =
                            LENGTH_BASE[li] as usize + br.bits(LENGTH_EXTRA[li] as u32)? as usize;
                        let dsym = dist.decode(br)? as usize;
                        if dsym >= DIST_BASE.len() {
                            return Err(br.corrupt("invalid distance symbol"));
                        }
                        let distance =
                            DIST_BASE[dsym] as usize + br.bits(DIST_EXTRA[dsym] as u32)? as usize;
                        if let Err(msg) = inf.copy_match(len, distance, sink) {
                            return Err(br.corrupt(msg));
                        }
                    }
                    if inf.stopped {
                        return Ok(MemberEnd::Stopped);
                    }
                }
            }
            _ => return Err(br.corrupt("reserved block type")),
        }
        if inf.stopped {
            return Ok(MemberEnd::Stopped);
        }
        if bfinal {
            return Ok(MemberEnd::Finished);
        }
        if let Some(cb) = on_boundary.as_deref_mut() {
            cb(BoundaryInfo {
                bit_position: br.bit_position(),
                uncomp_offset: inf.total_out,
                window: inf.window_snapshot(),
            });
        }
    }
}

fn read_dynamic_tables<R: Read>(br: &mut BitReader<R>) -> Result<(Huffman, Huffman), GzError> {
    let hlit = br.bits(5)? as usize + 257;
    let hdist = br.bits(5)? as usize + 1;
    let hclen = br.bits(4)? as usize + 4;
    if hlit > 286 {
        return Err(br.corrupt("too many literal/length codes"));
    }
    let mut cl_lengths = [0u8; 19];
    for &slot in CODE_LENGTH_ORDER.iter().take(hclen) {
        cl_lengths[slot] = br.bits(3)? as u8;
    }
    let cl_table = Huffman::build(&cl_lengths).map_err(|m| br.corrupt(m))?;

    let total = hlit + hdist;
    let mut lengths = vec![0u8; total];
    let mut i = 0;
    while i < total {
        let sym = cl_table.decode(br)?;
        match sym {
            0..=15 => {
                lengths[i] = sym as u8;
                i += 1;
            }
            16 => {
                if i == 0 {
                    return Err(br.corrupt("length repeat with no previous length"));
                }
                let prev = lengths[i - 1];
                let reps = 3 + br.bits(2)? as usize;
                if i + reps > total {
                    return Err(br.corrupt("length repeat overflows table"));
                }
                lengths[i..i + reps].fill(prev);
                i += reps;
            }
            17 => {
                let reps = 3 + br.bits(3)? as usize;
                if i + reps > total {
                    return Err(br.corrupt("zero repeat overflows table"));
                }
                i += reps;
            }
            18 => {
                let reps = 11 + br.bits(7)? as usize;
                if i + reps > total {
                    return Err(br.corrupt("zero repeat overflows table"));
                }
                i += reps;
            }
            _ => return Err(br.corrupt("invalid code-length symbol")),
        }
    }
    if lengths[256] == 0 {
        return Err(br.corrupt("missing end-of-block code"));
    }
    let litlen = Huffman::build(&lengths[..hlit]).map_err(|m| br.corrupt(m))?;
    let dist = Huffman::build(&lengths[hlit..]).map_err(|m| br.corrupt(m))?;
    Ok((litlen, dist))
}

/// Reads and validates a gzip member header; the reader must be aligned at
/// the
/// first header byte.
pub fn read_gzip_header<R: Read>(br: &mut BitReader<R>) -> Result<(), GzError> {
    let m0 = br.read_aligned_byte()?;
    let m1 = br.read_aligned_byte()?;
    if (m0, m1) != (0x1f, 0x8b) {
        return Err(br.corrupt("bad gzip magic"));
    }
    let method = br.read_aligned_byte()?;
    if method != 8 {
        return Err(br.corrupt("unsupported compression method"));
    }
    let flags = br.read_aligned_byte()?;
    if flags & 0xE0 != 0 {
        return Err(br.corrupt("reserved gzip flag bits set"));
    }
    for _ in 0..6 {
        br.read_aligned_byte()?; // MTIME, XFL, OS
    }
    if flags & 0x04 != 0 {
        // FEXTRA
        let lo = br.read_aligned_byte()? as usize;
        let hi = br.read_aligned_byte()? as usize;
        for _ in 0..(hi << 8 | lo) {
            br.read_aligned_byte()?;
        }
    }
    if flags & 0x08 != 0 {
        // FNAME
        while br.read_aligned_byte()? != 0 {}
    }
    if flags & 0x10 != 0 {
        // FCOMMENT
        while br.read_aligned_byte()? != 0 {}
    }
    if flags & 0x02 != 0 {
        // FHCRC
        br.read_aligned_byte()?;
        br.read_aligned_byte()?;
    }
    Ok(())
}

/// Reads the 8-byte member trailer, optionally verifying CRC32 and ISIZE.
pub fn read_gzip_trailer<R: Read>(
    br: &mut BitReader<R>,
    expected: Option<(u32, u64)>,
) -> Result<(), GzError> {
    br.align_byte();
    let mut trailer = [0u8; 8];
    for b in trailer.iter_mut() {
        *b = br.read_aligned_byte()?;
    }
    if let Some((crc, member_len)) = expected {
        let stored_crc = u32::from_le_bytes(trailer[..4].try_into().unwrap());
        let stored_isize = u32::from_le_bytes(trailer[4..].try_into().unwrap());
        if stored_crc != crc {
            return Err(br.corrupt("member CRC mismatch"));
        }
        if stored_isize != (member_len & 0xFFFF_FFFF) as u32 {
            return Err(br.corrupt("member length mismatch"));
        }
    }
    Ok(())
}

/// Drives decoding across all remaining members.
///
/// `first_member_partial` marks a mid-member resume: the first member's
/// trailer cannot be verified because its output was not observed from the
/// start.
pub fn decode_members<R: Read>(
    br: &mut BitReader<R>,
    inf: &mut Inflater,
    sink: &mut dyn Sink,
    verify: bool,
    first_member_partial: bool,
    mut on_boundary: Option<&mut dyn FnMut(BoundaryInfo<'_>)>,
) -> Result<bool, GzError> {
    let mut partial = first_member_partial;
    loop {
        let mut member = MemberSink {
            inner: sink,
            crc: crc32fast::Hasher::new(),
            out: 0,
        };
        let end = inflate_member_blocks(br, inf, &mut member, on_boundary.as_deref_mut())?;
        inf.flush_pending(&mut member);
        if end == MemberEnd::Stopped || inf.stopped {
            return Ok(true);
        }
        let check = (verify && !partial).then(|| (member.crc.finalize(), member.out));
        read_gzip_trailer(br, check)?;
        partial = false;
        match br.peek_aligned_byte()? {
            None => return Ok(false),
            Some(_) => {
                read_gzip_header(br)?;
                inf.reset_window();
                if let Some(cb) = on_boundary.as_deref_mut() {
                    cb(BoundaryInfo {
                        bit_position: br.bit_position(),
                        uncomp_offset: inf.total_out(),
                        window: inf.window_snapshot(),
                    });
                }
            }
        }
    }
}

/// Per-member CRC/length accounting layered over the caller's sink.
struct MemberSink<'a> {
    inner: &'a mut dyn Sink,
    crc: crc32fast::Hasher,
    out: u64,
}

impl Sink for MemberSink<'_> {
    fn write(&mut self, data: &[u8]) -> bool {
        self.crc.update(data);
        self.out += data.len() as u64;
        self.inner.write(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn gzip(data: &[u8], level: u32) -> Vec<u8> {
        let mut enc = GzEncoder::new(Vec::new(), Compression::new(level));
        enc.write_all(data).unwrap();
        enc.finish().unwrap()
    }

    struct Collect(Vec<u8>);

    impl Sink for Collect {
        fn write(&mut self, data: &[u8]) -> bool {
            self.0.extend_from_slice(data);
            true
        }
    }

    fn decode_all(compressed: &[u8]) -> Vec<u8> {
        let mut br = BitReader::new(compressed, 0);
        read_gzip_header(&mut br).unwrap();
        let mut inf = Inflater::new();
        let mut out = Collect(Vec::new());
        let stopped = decode_members(&mut br, &mut inf, &mut out, true, false, None).unwrap();
        assert!(!stopped);
        out.0
    }

    #[test]
    fn roundtrip_simple() {
        let data = b"hello hello hello hello world".repeat(100);
        assert_eq!(decode_all(&gzip(&data, 6)), data);
    }

    #[test]
    fn roundtrip_stored_blocks() {
        // Level 0 produces stored (uncompressed) blocks.
        let data: Vec<u8> = (0..100_000u32).map(|i| (i * 7 % 251) as u8).collect();
        assert_eq!(decode_all(&gzip(&data, 0)), data);
    }

    #[test]
    fn roundtrip_empty() {
        assert_eq!(decode_all(&gzip(b"", 6)), b"");
    }

    #[test]
    fn roundtrip_multi_member() {
        let a = b"first member ".repeat(5000);
        let b = b"second member ".repeat(5000);
        let mut joined = gzip(&a, 6);
        joined.extend(gzip(&b, 9));
        let mut expect = a.clone();
        expect.extend_from_slice(&b);
        assert_eq!(decode_all(&joined), expect);
    }

    #[test]
    fn corrupt_magic_rejected() {
        let mut bad = gzip(b"data", 6);
        bad[0] = 0x00;
        let mut br = BitReader::new(&bad[..], 0);
        assert!(read_gzip_header(&mut br).is_err());
    }

    #[test]
    fn corrupt_crc_rejected() {
        let mut bad = gzip(b"some data to protect", 6);
        let n = bad.len();
        bad[n - 5] ^= 0xFF; // flip a CRC byte
        let mut br = BitReader::new(&bad[..], 0);
        read_gzip_header(&mut br).unwrap();
        let mut inf = Inflater::new();
        let mut out = Collect(Vec::new());
        assert!(decode_members(&mut br, &mut inf, &mut out, true, false, None).is_err());
    }

    #[test]
    fn truncated_stream_rejected() {
        let full = gzip(&b"payload ".repeat(1000), 6);
        let cut = &full[..full.len() / 2];
        let mut br = BitReader::new(cut, 0);
        read_gzip_header(&mut br).unwrap();
        let mut inf = Inflater::new();
        let mut out = Collect(Vec::new());
        assert!(decode_members(&mut br, &mut inf, &mut out, true, false, None).is_err());
    }

    #[test]
    fn boundary_resume_is_bitwise_exact() {
        // Capture every block boundary, then resume at each and compare
        // against the straight decode.
        let mut data = Vec::new();
        for i in 0..40_000u32 {
            data.extend_from_slice(format!("line {} with some repeated text\n", i).as_bytes());
        }
        let compressed = gzip(&data, 6);

        let mut boundaries: Vec<(u64, u64, Vec<u8>)> = Vec::new();
        {
            let mut br = BitReader::new(&compressed[..], 0);
            read_gzip_header(&mut br).unwrap();
            let mut inf = Inflater::new();
            let mut out = Collect(Vec::new());
            let mut cb = |b: BoundaryInfo<'_>| {
                boundaries.push((b.bit_position, b.uncomp_offset, b.window.to_vec()));
            };
            decode_members(&mut br, &mut inf, &mut out, true, false, Some(&mut cb)).unwrap();
            assert_eq!(out.0, data);
        }
        assert!(!boundaries.is_empty(), "expected several deflate blocks");

        for (bit_pos, uncomp, window) in &boundaries {
            let byte = (bit_pos / 8) as usize;
            let bit = (bit_pos % 8) as u8;
            let mut br = BitReader::new(&compressed[byte..], byte as u64);
            if bit > 0 {
                br.skip_initial_bits(bit).unwrap();
            }
            let mut inf = Inflater::with_window(window);
            let mut out = Collect(Vec::new());
            decode_members(&mut br, &mut inf, &mut out, false, true, None).unwrap();
            assert_eq!(
                out.0,
                &data[*uncomp as usize..],
                "resume at bit {bit_pos} diverged"
            );
        }
    }
}
