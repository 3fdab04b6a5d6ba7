//! Helpers for the multi-line snippet encoding.
//!
//! On disk a snippet keeps all of its physical lines in a single record,
//! separated by the two characters `\` `n`. In memory a decoded snippet may
//! also carry real line breaks; both forms are accepted everywhere.

/// The two-character line separator used in stored snippets.
pub const LINE_SEPARATOR: &str = "\\n";

/// Split a snippet into its raw line segments (untrimmed, empty segments kept).
pub fn raw_segments(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            out.push(&text[start..i]);
            i += 1;
            start = i;
        } else if bytes[i] == b'\\' && i + 1 < bytes.len() && bytes[i + 1] == b'n' {
            out.push(&text[start..i]);
            i += 2;
            start = i;
        } else {
            i += 1;
        }
    }
    out.push(&text[start..]);
    out
}

/// Trimmed, non-empty physical lines of a snippet.
pub fn physical_lines(text: &str) -> Vec<&str> {
    raw_segments(text)
        .into_iter()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}

/// Re-encode a snippet with real line breaks into the stored single-line form.
pub fn encode(text: &str) -> String {
    physical_lines(text).join(" \\n ")
}

/// Join physical lines with real line breaks.
pub fn decode(text: &str) -> String {
    physical_lines(text).join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_both_separator_forms() {
        assert_eq!(physical_lines("cmp al, cl\\njne short decode\\njmp shellcode").len(), 3);
        assert_eq!(physical_lines("scasd \n jnz _start"), vec!["scasd", "jnz _start"]);
        assert_eq!(physical_lines("int 0x80"), vec!["int 0x80"]);
        assert!(physical_lines("  ").is_empty());
    }

    #[test]
    fn doubled_backslash_leaves_stray_backslash() {
        let segs = raw_segments("scasd \\\\n jnz");
        assert_eq!(segs, vec!["scasd \\", " jnz"]);
    }

    #[test]
    fn encode_decode() {
        assert_eq!(encode("a\nb"), "a \\n b");
        assert_eq!(decode("a \\n b"), "a\nb");
    }
}
