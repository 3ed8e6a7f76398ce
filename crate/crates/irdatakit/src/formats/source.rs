//! Opening source files for streaming iteration.
//!
//! Files ending in `.gz` are decompressed transparently; everything else is
//! read as-is. Sequential iteration always streams from the start of the
//! file — checkpoint indexes only pay off for random access, which goes
//! through the gzseek module instead.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;

/// Opens `path` as a buffered text stream, decompressing `.gz` sources.
pub fn open_text_source(path: &Path) -> std::io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::{Read, Write};

    #[test]
    fn gz_sources_transparently_decompressed() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("a.tsv");
        std::fs::write(&plain, "1\thello\n").unwrap();
        let gz = dir.path().join("a.tsv.gz");
        let mut enc = GzEncoder::new(File::create(&gz).unwrap(), Compression::default());
        enc.write_all(b"1\thello\n").unwrap();
        enc.finish().unwrap();

        for path in [plain, gz] {
            let mut text = String::new();
            open_text_source(&path)
                .unwrap()
                .read_to_string(&mut text)
                .unwrap();
            assert_eq!(text, "1\thello\n");
        }
    }
}
