use std::fmt;

use thiserror::Error;

/// Error returned by [`SourceScript::locate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("byte offset {offset} is outside the script (length {len})")]
pub struct OffsetOutOfRange {
    pub offset: usize,
    pub len: usize,
}

/// A PowerShell source file: its path, decoded text and a line index.
///
/// The text never contains the byte-order mark; `had_bom` records whether one
/// was present on input. All token and diagnostic offsets are relative to
/// `raw`.
#[derive(Clone, PartialEq, Eq)]
pub struct SourceScript {
    path: String,
    raw: String,
    line_starts: Vec<usize>,
    had_bom: bool,
    lossy: bool,
}

impl fmt::Debug for SourceScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceScript")
            .field("path", &self.path)
            .field("len", &self.raw.len())
            .field("lines", &self.line_starts.len())
            .field("had_bom", &self.had_bom)
            .field("lossy", &self.lossy)
            .finish()
    }
}

impl SourceScript {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let mut raw = text.into();
        let had_bom = raw.starts_with('\u{feff}');
        if had_bom {
            raw.drain(..'\u{feff}'.len_utf8());
        }
        Self::build(path.into(), raw, had_bom, false)
    }

    /// Decodes bytes as UTF-8, replacing invalid sequences. `is_lossy`
    /// reports whether any replacement happened.
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        let (had_bom, bytes) = match bytes.strip_prefix(b"\xef\xbb\xbf".as_slice()) {
            Some(rest) => (true, rest),
            None => (false, bytes),
        };
        let (raw, lossy) = match String::from_utf8_lossy(bytes) {
            std::borrow::Cow::Borrowed(s) => (s.to_owned(), false),
            std::borrow::Cow::Owned(s) => (s, true),
        };
        Self::build(path.into(), raw, had_bom, lossy)
    }

    fn build(path: String, raw: String, had_bom: bool, lossy: bool) -> Self {
        let line_starts = std::iter::once(0)
            .chain(raw.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        Self {
            path,
            raw,
            line_starts,
            had_bom,
            lossy,
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn line_starts(&self) -> &[usize] {
        &self.line_starts
    }

    pub fn had_bom(&self) -> bool {
        self.had_bom
    }

    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    /// Maps a byte offset to a 1-based `(line, column)` pair. Columns count
    /// characters, not bytes.
    pub fn locate(&self, offset: usize) -> Result<(usize, usize), OffsetOutOfRange> {
        if offset > self.raw.len() {
            return Err(OffsetOutOfRange {
                offset,
                len: self.raw.len(),
            });
        }
        let line_idx = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.line_starts[line_idx];
        let column = self.raw.as_bytes()[start..offset]
            .iter()
            .filter(|b| (**b & 0xC0) != 0x80)
            .count()
            + 1;
        Ok((line_idx + 1, column))
    }

    /// Like [`locate`](Self::locate) but clamps out-of-range offsets to the end.
    pub(crate) fn position(&self, offset: usize) -> (usize, usize) {
        self.locate(offset.min(self.raw.len()))
            .expect("clamped offset is in range")
    }

    /// Inverse of [`locate`](Self::locate). Columns past the end of the line
    /// are clamped to the line end.
    pub fn offset_of(&self, line: usize, column: usize) -> Option<usize> {
        let start = *self.line_starts.get(line.checked_sub(1)?)?;
        let end = self
            .line_starts
            .get(line)
            .copied()
            .unwrap_or(self.raw.len());
        let skip = column.checked_sub(1)?;
        Some(
            self.raw[start..end]
                .char_indices()
                .nth(skip)
                .map(|(i, _)| start + i)
                .unwrap_or(end),
        )
    }

    /// Source text covered by `span`.
    pub fn span_text(&self, span: &super::Span) -> &str {
        let a = self.offset_of(span.start_line, span.start_column);
        let b = self.offset_of(span.end_line, span.end_column);
        match (a, b) {
            (Some(a), Some(b)) if a <= b => &self.raw[a..b],
            _ => "",
        }
    }

    /// Text of the given 1-based line without its terminator.
    pub fn line_text(&self, line: usize) -> Option<&str> {
        let start = *self.line_starts.get(line.checked_sub(1)?)?;
        let end = self
            .line_starts
            .get(line)
            .map(|next| next - 1)
            .unwrap_or(self.raw.len());
        Some(self.raw[start..end].trim_end_matches('\r'))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_offset_is_line_one_column_one() {
        let s = SourceScript::new("a.ps1", "abc\ndef");
        assert_eq!(s.locate(0), Ok((1, 1)));
    }

    #[test]
    fn offset_after_newline_starts_line_two() {
        let s = SourceScript::new("a.ps1", "abc\ndef");
        assert_eq!(s.locate(4), Ok((2, 1)));
    }

    #[test]
    fn mid_line_three() {
        let s = SourceScript::new("a.ps1", "a\nbb\ncccc\n");
        let off = s.line_starts()[2] + 2;
        assert_eq!(s.locate(off), Ok((3, off - s.line_starts()[2] + 1)));
    }

    #[test]
    fn end_of_text_is_valid_and_beyond_is_not() {
        let s = SourceScript::new("a.ps1", "ab");
        assert_eq!(s.locate(2), Ok((1, 3)));
        assert_eq!(s.locate(3), Err(OffsetOutOfRange { offset: 3, len: 2 }));
    }

    #[test]
    fn columns_count_characters() {
        let s = SourceScript::new("a.ps1", "é$x");
        assert_eq!(s.locate(2), Ok((1, 2)));
    }

    #[test]
    fn bom_is_recorded_and_removed() {
        let s = SourceScript::from_bytes("a.ps1", b"\xef\xbb\xbf$x");
        assert!(s.had_bom());
        assert_eq!(s.raw(), "$x");
        let s = SourceScript::new("a.ps1", "\u{feff}$y");
        assert!(s.had_bom());
        assert_eq!(s.raw(), "$y");
    }

    #[test]
    fn invalid_utf8_is_replaced_and_flagged() {
        let s = SourceScript::from_bytes("a.ps1", b"$x = '\xff'");
        assert!(s.is_lossy());
        assert!(s.raw().contains('\u{fffd}'));
    }

    #[test]
    fn line_text_strips_terminators() {
        let s = SourceScript::new("a.ps1", "one\r\ntwo\n");
        assert_eq!(s.line_text(1), Some("one"));
        assert_eq!(s.line_text(2), Some("two"));
        assert_eq!(s.line_text(3), Some(""));
        assert_eq!(s.line_text(4), None);
    }
}
