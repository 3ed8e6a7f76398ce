//! Text decoding and the double-encoding repair.
//!
//! Source files are decoded as UTF-8 by default; malformed sequences are
//! replaced with U+FFFD and counted rather than aborting iteration, since
//! large crawled corpora routinely contain dirty bytes. Latin-1 decoding is
//! available as a per-source option and is total.

use std::borrow::Cow;

/// Source byte encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextEncoding {
    #[default]
    Utf8,
    Latin1,
}

/// Decodes `bytes` per `encoding`, returning the text and the number of
/// replacement events (invalid sequences swapped for U+FFFD).
pub fn decode_counting(bytes: &[u8], encoding: TextEncoding) -> (String, u64) {
    match encoding {
        TextEncoding::Latin1 => (bytes.iter().map(|&b| b as char).collect(), 0),
        TextEncoding::Utf8 => {
            match std::str::from_utf8(bytes) {
                Ok(s) => (s.to_string(), 0),
                Err(_) => {
                    let mut out = String::with_capacity(bytes.len());
                    let mut replaced = 0u64;
                    let mut rest = bytes;
                    loop {
                        match std::str::from_utf8(rest) {
                            Ok(s) => {
                                out.push_str(s);
                                break;
                            }
                            Err(e) => {
                                let valid = e.valid_up_to();
                                out.push_str(std::str::from_utf8(&rest[..valid]).unwrap());
                                out.push('\u{FFFD}');
                                replaced += 1;
                                // error_len is None only for a truncated
                                // sequence at the end of input.
                                let skip = valid + e.error_len().unwrap_or(rest.len() - valid);
                                rest = &rest[skip..];
                                if rest.is_empty() {
                                    break;
                                }
                            }
                        }
                    }
                    (out, replaced)
                }
            }
        }
    }
}

/// Repairs text that was UTF-8 encoded and then mistakenly decoded as
/// Latin-1 (so `café` became `cafÃ©`).
///
/// If every code point of `text` fits in one byte and those bytes form
/// valid UTF-8 that differs from the input, the re-decoded string is
/// returned; otherwise the input is returned unchanged. Total: never fails.
pub fn fix_double_encoding(text: &str) -> Cow<'_, str> {
    if text.is_ascii() {
        return Cow::Borrowed(text);
    }
    let mut bytes = Vec::with_capacity(text.len());
    for ch in text.chars() {
        let cp = ch as u32;
        if cp > 0xFF {
            return Cow::Borrowed(text);
        }
        bytes.push(cp as u8);
    }
    match String::from_utf8(bytes) {
        Ok(fixed) => Cow::Owned(fixed),
        Err(_) => Cow::Borrowed(text),
    }
}

/// Simulates the misdecoding this module repairs: `text`'s UTF-8 bytes
/// read back as Latin-1 code points. Useful for tests and diagnostics.
pub fn latin1_misdecode(text: &str) -> String {
    text.bytes().map(|b| b as char).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repairs_misdecoded_utf8() {
        let mangled = latin1_misdecode("café");
        assert_eq!(mangled, "cafÃ©");
        assert_eq!(fix_double_encoding(&mangled), "café");
    }

    #[test]
    fn ascii_is_fixpoint() {
        assert_eq!(fix_double_encoding("plain ascii"), "plain ascii");
        assert_eq!(fix_double_encoding(""), "");
    }

    #[test]
    fn wide_codepoints_left_alone() {
        assert_eq!(fix_double_encoding("日本語"), "日本語");
    }

    #[test]
    fn lone_high_bytes_left_alone() {
        // "é" alone is not valid UTF-8 when re-read as the byte 0xE9.
        assert_eq!(fix_double_encoding("caf\u{e9}"), "caf\u{e9}");
    }

    #[test]
    fn counts_replacements() {
        let (s, n) = decode_counting(b"ok\xff\xfeok", TextEncoding::Utf8);
        assert_eq!(n, 2);
        assert_eq!(s, "ok\u{FFFD}\u{FFFD}ok");
        let (s, n) = decode_counting(b"ok\xff", TextEncoding::Latin1);
        assert_eq!(n, 0);
        assert_eq!(s, "okÿ");
    }

    #[test]
    fn truncated_tail_counts_once() {
        // 0xE2 0x82 is a truncated three-byte sequence.
        let (s, n) = decode_counting(b"a\xe2\x82", TextEncoding::Utf8);
        assert_eq!(n, 1);
        assert_eq!(s, "a\u{FFFD}");
    }
}
