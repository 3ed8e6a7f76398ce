//! Per-destination lock files.
//!
//! Processes sharing one data home serialize writes to a given path by
//! holding `<path>.lock`. A lock whose file has not been touched for the
//! stale timeout is considered abandoned (crashed holder) and taken over.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

pub const DEFAULT_STALE_AFTER: Duration = Duration::from_secs(15 * 60);

const POLL_INTERVAL: Duration = Duration::from_millis(25);

#[derive(Debug)]
pub struct LockFile {
    path: PathBuf,
}

impl LockFile {
    /// Lock path guarding `dest`.
    pub fn path_for(dest: &Path) -> PathBuf {
        let mut name = dest.file_name().unwrap_or_default().to_os_string();
        name.push(".lock");
        dest.with_file_name(name)
    }

    /// Blocks until the lock is held, taking over locks older than
    /// `stale_after`.
    pub fn acquire(dest: &Path, stale_after: Duration) -> io::Result<LockFile> {
        let path = Self::path_for(dest);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut file) => {
                    let _ = write!(file, "{}", std::process::id());
                    return Ok(LockFile { path });
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    let stale = fs::metadata(&path)
                        .and_then(|md| md.modified())
                        .ok()
                        .and_then(|m| m.elapsed().ok())
                        .map(|age| age > stale_after)
                        .unwrap_or(false);
                    if stale {
                        let _ = fs::remove_file(&path);
                    } else {
                        std::thread::sleep(POLL_INTERVAL);
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
}

impl Drop for LockFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    #[test]
    fn serializes_concurrent_holders() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("file.bin");
        let inside = Arc::new(AtomicU32::new(0));
        let mut handles = Vec::new();
        for _ in 0..4 {
            let dest = dest.clone();
            let inside = inside.clone();
            handles.push(std::thread::spawn(move || {
                let _lock = LockFile::acquire(&dest, DEFAULT_STALE_AFTER).unwrap();
                assert_eq!(inside.fetch_add(1, Ordering::SeqCst), 0);
                std::thread::sleep(Duration::from_millis(20));
                inside.fetch_sub(1, Ordering::SeqCst);
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn stale_lock_taken_over() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("file.bin");
        let lock_path = LockFile::path_for(&dest);
        fs::write(&lock_path, "12345").unwrap();
        std::thread::sleep(Duration::from_millis(30));
        let _lock = LockFile::acquire(&dest, Duration::from_millis(10)).unwrap();
        // Acquired by takeover rather than hanging.
    }
}
