//! Single-pass structural annotation of a JSON byte stream.
//!
//! The scanner tracks just enough state to tell structure from content: a
//! string mask with escape handling, a stack of open brackets and, per open
//! bracket, the index of the comma-separated segment currently being read.
//! It never validates; unbalanced closers are clamped and flagged.

/// Annotation for one input byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ScanEvent {
    pub byte: u8,
    pub offset: usize,
    /// Content bytes and the closing quote of a string literal. The opening
    /// quote is reported as structure.
    pub in_string: bool,
    /// Nesting level in effect. Bracket bytes report the level of the scope
    /// they open or close.
    pub level: u32,
    /// Innermost enclosing open bracket, 0 at top level.
    pub scope_id: u32,
    /// Index of the comma-separated segment within `scope_id`.
    pub segment: u32,
    /// `,` outside any string. It belongs to the segment it terminates.
    pub structural_comma: bool,
    /// The closing bracket that returns the nesting level to 0.
    pub record_end: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct OpenScope {
    id: u32,
    segment: u32,
}

#[derive(Clone, Debug)]
pub struct Scanner {
    in_string: bool,
    escape_pending: bool,
    scopes: Vec<OpenScope>,
    top_segment: u32,
    next_scope_id: u32,
    offset: usize,
    malformed: bool,
}

impl Default for Scanner {
    fn default() -> Self {
        Scanner::new()
    }
}

impl Scanner {
    pub fn new() -> Scanner {
        Scanner {
            in_string: false,
            escape_pending: false,
            scopes: Vec::new(),
            top_segment: 0,
            next_scope_id: 1,
            offset: 0,
            malformed: false,
        }
    }

    pub fn in_string(&self) -> bool {
        self.in_string
    }

    pub fn escape_pending(&self) -> bool {
        self.escape_pending
    }

    pub fn level(&self) -> u32 {
        self.scopes.len() as u32
    }

    pub fn malformed(&self) -> bool {
        self.malformed
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    fn current(&self) -> (u32, u32) {
        match self.scopes.last() {
            Some(s) => (s.id, s.segment),
            None => (0, self.top_segment),
        }
    }

    #[inline]
    pub fn scan_byte(&mut self, byte: u8) -> ScanEvent {
        let offset = self.offset;
        self.offset += 1;
        let (scope_id, segment) = self.current();
        let mut event = ScanEvent {
            byte,
            offset,
            in_string: false,
            level: self.level(),
            scope_id,
            segment,
            structural_comma: false,
            record_end: false,
        };

        if self.in_string {
            event.in_string = true;
            if self.escape_pending {
                self.escape_pending = false;
            } else if byte == b'\\' {
                self.escape_pending = true;
            } else if byte == b'"' {
                self.in_string = false;
            }
            return event;
        }

        match byte {
            b'"' => self.in_string = true,
            b'{' | b'[' => {
                let id = self.next_scope_id;
                self.next_scope_id += 1;
                self.scopes.push(OpenScope { id, segment: 0 });
                event.level = self.level();
                event.scope_id = id;
                event.segment = 0;
            }
            b'}' | b']' => {
                if self.scopes.pop().is_some() {
                    event.record_end = self.scopes.is_empty();
                } else {
                    self.malformed = true;
                }
            }
            b',' => {
                event.structural_comma = true;
                match self.scopes.last_mut() {
                    Some(s) => s.segment += 1,
                    None => self.top_segment += 1,
                }
            }
            _ => {}
        }
        event
    }

    /// Scans a whole buffer from the current state.
    pub fn scan_all(&mut self, bytes: &[u8]) -> Vec<ScanEvent> {
        bytes.iter().map(|&b| self.scan_byte(b)).collect()
    }
}

/// Convenience: events for one buffer scanned from a fresh state.
pub fn scan(bytes: &[u8]) -> Vec<ScanEvent> {
    Scanner::new().scan_all(bytes)
}

/// Half-open byte range of one record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordSpan {
    pub start: usize,
    pub end: usize,
    /// Unclosed at end of input, stray top-level bytes, or unbalanced.
    pub malformed: bool,
}

impl RecordSpan {
    pub fn bytes<'a>(&self, stream: &'a [u8]) -> &'a [u8] {
        &stream[self.start..self.end]
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[inline]
fn is_json_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r')
}

/// Splits a stream of concatenated (optionally newline separated) records at
/// the points where the nesting level returns to 0.
///
/// Top-level bytes that do not open a bracket are grouped into malformed
/// spans that run until the next top-level whitespace or opening bracket, so
/// that nothing in the input is ever silently dropped.
pub fn segment_records(stream: &[u8]) -> Vec<RecordSpan> {
    enum Open {
        None,
        Record(usize),
        Stray(usize),
    }
    let mut spans = Vec::new();
    let mut scanner = Scanner::new();
    let mut open = Open::None;

    for (offset, &b) in stream.iter().enumerate() {
        let at_top = scanner.level() == 0 && !scanner.in_string();
        if at_top {
            if let Open::Stray(start) = open {
                if is_json_whitespace(b) || b == b'{' || b == b'[' {
                    spans.push(RecordSpan {
                        start,
                        end: offset,
                        malformed: true,
                    });
                    open = Open::None;
                }
            }
            if let Open::None = open {
                if !is_json_whitespace(b) {
                    open = if b == b'{' || b == b'[' {
                        Open::Record(offset)
                    } else {
                        Open::Stray(offset)
                    };
                }
            }
        }
        let event = scanner.scan_byte(b);
        if event.record_end {
            if let Open::Record(start) = open {
                spans.push(RecordSpan {
                    start,
                    end: offset + 1,
                    malformed: false,
                });
                open = Open::None;
            }
        }
    }
    match open {
        Open::Record(start) | Open::Stray(start) => spans.push(RecordSpan {
            start,
            end: stream.len(),
            malformed: true,
        }),
        Open::None => {}
    }
    spans
}

/// One span per non-blank line. A trailing `\r` is not part of the record.
pub fn segment_lines(stream: &[u8]) -> Vec<RecordSpan> {
    let mut spans = Vec::new();
    let mut start = 0;
    while start < stream.len() {
        let end = stream[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(stream.len(), |p| start + p);
        let mut trimmed_end = end;
        if trimmed_end > start && stream[trimmed_end - 1] == b'\r' {
            trimmed_end -= 1;
        }
        let line = &stream[start..trimmed_end];
        if line.iter().any(|&b| !is_json_whitespace(b)) {
            spans.push(RecordSpan {
                start,
                end: trimmed_end,
                malformed: !is_balanced_record(line),
            });
        }
        start = end + 1;
    }
    spans
}

/// One bracketed value, balanced, with nothing but whitespace around it.
pub fn is_balanced_record(bytes: &[u8]) -> bool {
    let spans = segment_records(bytes);
    spans.len() == 1 && !spans[0].malformed
}
