//! Exact reference semantics: a strict JSON parser and query evaluation.
//!
//! Labels produced here are the ground truth against which raw filters are
//! measured. Numbers are kept as exact decimals, so range checks never round.

use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::error::{Error, Result};
use crate::query::{Predicate, QueryAst};

const MAX_DEPTH: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JsonValue {
    Null,
    Bool(bool),
    Number(Decimal),
    String(String),
    Array(Vec<JsonValue>),
    /// Members in input order, duplicates kept.
    Object(Vec<(String, JsonValue)>),
}

impl JsonValue {
    /// Numeric value, with numeric strings coerced by the JSON number grammar.
    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            JsonValue::Number(n) => Some(n.clone()),
            JsonValue::String(s) => Decimal::parse_json(s).ok(),
            _ => None,
        }
    }

    /// Compact serialization.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        self.write_json(&mut out);
        out
    }

    fn write_json(&self, out: &mut String) {
        match self {
            JsonValue::Null => out.push_str("null"),
            JsonValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JsonValue::Number(n) => out.push_str(&n.to_json_string()),
            JsonValue::String(s) => write_string(s, out),
            JsonValue::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_json(out);
                }
                out.push(']');
            }
            JsonValue::Object(members) => {
                out.push('{');
                for (i, (k, v)) in members.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_string(k, out);
                    out.push(':');
                    v.write_json(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn parse_json(bytes: &[u8]) -> Result<JsonValue> {
    let mut p = JsonParser::new(bytes, false);
    p.document()
}

/// Per-byte string mask computed from a full parse: `true` for the content
/// bytes and the closing quote of every string literal (keys included).
pub fn string_literal_mask(bytes: &[u8]) -> Result<Vec<bool>> {
    let mut p = JsonParser::new(bytes, true);
    p.document()?;
    let mut mask = vec![false; bytes.len()];
    for (open, close) in p.spans {
        mask[open + 1..=close].iter_mut().for_each(|m| *m = true);
    }
    Ok(mask)
}

/// Resolves JSON escapes in the body of a string literal (no quotes).
pub fn unescape_str(raw: &str) -> Option<String> {
    let quoted = format!("\"{raw}\"");
    let mut p = JsonParser::new(quoted.as_bytes(), false);
    let s = p.string().ok()?;
    (p.pos == quoted.len()).then_some(s)
}

struct JsonParser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
    record_spans: bool,
    spans: Vec<(usize, usize)>,
}

impl<'a> JsonParser<'a> {
    fn new(src: &'a [u8], record_spans: bool) -> Self {
        JsonParser {
            src,
            pos: 0,
            depth: 0,
            record_spans,
            spans: Vec::new(),
        }
    }

    fn error(&self, message: &str) -> Error {
        Error::Json {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn ws(&mut self) {
        while matches!(self.src.get(self.pos), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn document(&mut self) -> Result<JsonValue> {
        self.ws();
        let v = self.value()?;
        self.ws();
        if self.pos != self.src.len() {
            return Err(self.error("trailing bytes after value"));
        }
        Ok(v)
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &[u8], value: JsonValue) -> Result<JsonValue> {
        if self.src[self.pos..].starts_with(word) {
            self.pos += word.len();
            Ok(value)
        } else {
            Err(self.error("invalid literal"))
        }
    }

    fn value(&mut self) -> Result<JsonValue> {
        match self.src.get(self.pos) {
            Some(b'{') => self.nested(Self::object),
            Some(b'[') => self.nested(Self::array),
            Some(b'"') => self.string().map(JsonValue::String),
            Some(b't') => self.keyword(b"true", JsonValue::Bool(true)),
            Some(b'f') => self.keyword(b"false", JsonValue::Bool(false)),
            Some(b'n') => self.keyword(b"null", JsonValue::Null),
            Some(b'-' | b'0'..=b'9') => self.number(),
            Some(_) => Err(self.error("unexpected byte")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn nested(&mut self, f: fn(&mut Self) -> Result<JsonValue>) -> Result<JsonValue> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("nesting too deep"));
        }
        let v = f(self);
        self.depth -= 1;
        v
    }

    fn object(&mut self) -> Result<JsonValue> {
        self.pos += 1;
        let mut members = Vec::new();
        self.ws();
        if self.eat(b'}') {
            return Ok(JsonValue::Object(members));
        }
        loop {
            self.ws();
            if self.src.get(self.pos) != Some(&b'"') {
                return Err(self.error("expected a key"));
            }
            let key = self.string()?;
            self.ws();
            if !self.eat(b':') {
                return Err(self.error("expected ':'"));
            }
            self.ws();
            let v = self.value()?;
            members.push((key, v));
            self.ws();
            if self.eat(b',') {
                continue;
            }
            if self.eat(b'}') {
                return Ok(JsonValue::Object(members));
            }
            return Err(self.error("expected ',' or '}'"));
        }
    }

    fn array(&mut self) -> Result<JsonValue> {
        self.pos += 1;
        let mut items = Vec::new();
        self.ws();
        if self.eat(b']') {
            return Ok(JsonValue::Array(items));
        }
        loop {
            self.ws();
            items.push(self.value()?);
            self.ws();
            if self.eat(b',') {
                continue;
            }
            if self.eat(b']') {
                return Ok(JsonValue::Array(items));
            }
            return Err(self.error("expected ',' or ']'"));
        }
    }

    fn hex4(&mut self) -> Result<u32> {
        let digits = self
            .src
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| self.error("truncated \\u escape"))?;
        let text = std::str::from_utf8(digits).map_err(|_| self.error("bad \\u escape"))?;
        if !text.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(self.error("bad \\u escape"));
        }
        let v = u32::from_str_radix(text, 16).map_err(|_| self.error("bad \\u escape"))?;
        self.pos += 4;
        Ok(v)
    }

    fn string(&mut self) -> Result<String> {
        let open = self.pos;
        self.pos += 1;
        let mut out = Vec::new();
        loop {
            let Some(&b) = self.src.get(self.pos) else {
                return Err(self.error("unterminated string"));
            };
            match b {
                b'"' => {
                    if self.record_spans {
                        self.spans.push((open, self.pos));
                    }
                    self.pos += 1;
                    return String::from_utf8(out).map_err(|_| Error::Json {
                        position: open,
                        message: "string is not valid UTF-8".into(),
                    });
                }
                b'\\' => {
                    self.pos += 1;
                    let Some(&e) = self.src.get(self.pos) else {
                        return Err(self.error("unterminated escape"));
                    };
                    self.pos += 1;
                    let c = match e {
                        b'"' => '"',
                        b'\\' => '\\',
                        b'/' => '/',
                        b'b' => '\u{8}',
                        b'f' => '\u{c}',
                        b'n' => '\n',
                        b'r' => '\r',
                        b't' => '\t',
                        b'u' => {
                            let hi = self.hex4()?;
                            let code = if (0xD800..0xDC00).contains(&hi) {
                                if !(self.eat(b'\\') && self.eat(b'u')) {
                                    return Err(self.error("unpaired surrogate"));
                                }
                                let lo = self.hex4()?;
                                if !(0xDC00..0xE000).contains(&lo) {
                                    return Err(self.error("unpaired surrogate"));
                                }
                                0x10000 + ((hi - 0xD800) << 10) + (lo - 0xDC00)
                            } else {
                                hi
                            };
                            char::from_u32(code).ok_or_else(|| self.error("unpaired surrogate"))?
                        }
                        _ => return Err(self.error("invalid escape")),
                    };
                    let mut buf = [0u8; 4];
                    out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                }
                0x00..=0x1f => return Err(self.error("control byte in string")),
                _ => {
                    out.push(b);
                    self.pos += 1;
                }
            }
        }
    }

    fn number(&mut self) -> Result<JsonValue> {
        let start = self.pos;
        while matches!(
            self.src.get(self.pos),
            Some(b'0'..=b'9' | b'-' | b'+' | b'.' | b'e' | b'E')
        ) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Decimal::parse_json(text)
            .map(JsonValue::Number)
            .map_err(|e| Error::Json {
                position: start + e.position,
                message: e.message.to_string(),
            })
    }
}

/// Does some occurrence of the predicate's attribute hold a value in range?
///
/// An object supplies an occurrence when its key `n` equals the attribute
/// (the value is then its `v` member), or when it has the attribute as a key.
pub fn eval_predicate(pred: &Predicate, v: &JsonValue) -> bool {
    eval_key(&pred.key(), pred, v)
}

fn eval_key(key: &str, pred: &Predicate, v: &JsonValue) -> bool {
    match v {
        JsonValue::Object(members) => {
            let named = members
                .iter()
                .any(|(k, val)| k == "n" && matches!(val, JsonValue::String(s) if s == key));
            let hit = members.iter().any(|(k, val)| {
                let occurrence = k == key || (named && k == "v");
                occurrence && val.as_number().is_some_and(|n| pred.bound.contains(&n))
            });
            hit || members.iter().any(|(_, val)| eval_key(key, pred, val))
        }
        JsonValue::Array(items) => items.iter().any(|item| eval_key(key, pred, item)),
        _ => false,
    }
}

pub fn eval_exact(query: &QueryAst, v: &JsonValue) -> bool {
    query.eval_with(&mut |_, pred| eval_predicate(pred, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchLabel {
    pub index: usize,
    pub exact_match: bool,
    /// The record did not parse; it counts as a non-match.
    pub malformed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub labels: Vec<MatchLabel>,
    pub matches: usize,
    pub malformed: usize,
    /// `matches / records`, 0 for an empty dataset.
    pub selectivity: f64,
    pub empty: bool,
}

pub fn label_record(query: &QueryAst, record: &[u8]) -> (bool, bool) {
    match parse_json(record) {
        Ok(v) => (eval_exact(query, &v), false),
        Err(_) => (false, true),
    }
}

pub fn label_dataset<R: AsRef<[u8]>>(query: &QueryAst, records: &[R]) -> LabeledDataset {
    let labels: Vec<MatchLabel> = records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let (exact_match, malformed) = label_record(query, r.as_ref());
            MatchLabel {
                index,
                exact_match,
                malformed,
            }
        })
        .collect();
    let matches = labels.iter().filter(|l| l.exact_match).count();
    let malformed = labels.iter().filter(|l| l.malformed).count();
    let empty = labels.is_empty();
    LabeledDataset {
        selectivity: if empty {
            0.0
        } else {
            matches as f64 / labels.len() as f64
        },
        labels,
        matches,
        malformed,
        empty,
    }
}
