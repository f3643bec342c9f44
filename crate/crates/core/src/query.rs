//! Range-predicate queries.
//!
//! ```text
//! expr   := term ("OR" term)*
//! term   := clause ("AND" clause)*
//! clause := "(" literal op "\"" attr "\"" op literal ")"
//!         | "(" literal op "\"" attr "\"" ")"
//!         | "(" "\"" attr "\"" op literal ")"
//!         | "(" expr ")"
//! op     := "<=" | "≤"
//! ```
//!
//! `AND` binds tighter than `OR`. A bound is integer-valued unless one of its
//! literals has a decimal point.

use std::fmt;

use crate::error::{Error, Result};
use crate::range::NumericBound;

/// `lower <= attr <= upper`, one side optional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    /// Attribute as written between the quotes, escapes left intact. This is
    /// also the byte pattern searched for in the raw stream.
    pub attr: String,
    pub bound: NumericBound,
}

impl Predicate {
    /// Attribute with JSON string escapes resolved, for comparison against
    /// parsed keys. Falls back to the raw text if an escape is invalid.
    pub fn key(&self) -> String {
        crate::oracle::unescape_str(&self.attr).unwrap_or_else(|| self.attr.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryAst {
    Pred(Predicate),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
}

impl QueryAst {
    /// Leaf predicates in left-to-right order.
    pub fn leaves(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            QueryAst::Pred(p) => out.push(p),
            QueryAst::And(children) | QueryAst::Or(children) => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            QueryAst::Pred(_) => 1,
            QueryAst::And(c) | QueryAst::Or(c) => c.iter().map(QueryAst::leaf_count).sum(),
        }
    }

    /// Evaluates the tree given the truth of each leaf, indexed in leaf order.
    pub fn eval_with(&self, leaf: &mut impl FnMut(usize, &Predicate) -> bool) -> bool {
        let mut next = 0;
        self.eval_inner(leaf, &mut next)
    }

    fn eval_inner(
        &self,
        leaf: &mut impl FnMut(usize, &Predicate) -> bool,
        next: &mut usize,
    ) -> bool {
        match self {
            QueryAst::Pred(p) => {
                let i = *next;
                *next += 1;
                leaf(i, p)
            }
            // no short-circuit: every leaf must consume its index
            QueryAst::And(children) => children
                .iter()
                .fold(true, |acc, c| c.eval_inner(leaf, next) & acc),
            QueryAst::Or(children) => children
                .iter()
                .fold(false, |acc, c| c.eval_inner(leaf, next) | acc),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some((_, lower)) = self.bound.lower_text() {
            write!(f, "{lower} <= ")?;
        }
        write!(f, "\"{}\"", self.attr)?;
        if let Some((_, upper)) = self.bound.upper_text() {
            write!(f, " <= {upper}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Pred(p) => write!(f, "{p}"),
            QueryAst::And(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    match c {
                        QueryAst::Or(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            QueryAst::Or(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn parse_query(text: &str) -> Result<QueryAst> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(ast)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let end = self.pos + word.len();
        if self.src.get(self.pos..end) == Some(word.as_bytes())
            && !self.src.get(end).is_some_and(|b| b.is_ascii_alphanumeric())
        {
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, byte: u8, what: &str) -> Result<()> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn op(&mut self) -> bool {
        self.skip_ws();
        for token in ["<=", "≤"] {
            if self.src[self.pos..].starts_with(token.as_bytes()) {
                self.pos += token.len();
                return true;
            }
        }
        false
    }

    fn expr(&mut self) -> Result<QueryAst> {
        let mut terms = vec![self.term()?];
        while self.keyword("OR") {
            terms.push(self.term()?);
        }
        Ok(flatten(terms, QueryAst::Or))
    }

    fn term(&mut self) -> Result<QueryAst> {
        let mut clauses = vec![self.clause()?];
        while self.keyword("AND") {
            clauses.push(self.clause()?);
        }
        Ok(flatten(clauses, QueryAst::And))
    }

    fn clause(&mut self) -> Result<QueryAst> {
        self.expect(b'(', "'('")?;
        let inner_start = self.pos;
        match self.peek() {
            Some(b'(') => {
                let e = self.expr()?;
                self.expect(b')', "')'")?;
                Ok(e)
            }
            Some(b'"') => {
                let attr = self.attr()?;
                if !self.op() {
                    return Err(self.error("expected '<='"));
                }
                let upper = self.literal()?;
                self.expect(b')', "')'")?;
                self.predicate(attr, None, Some(upper), inner_start)
            }
            Some(_) => {
                let lower = self.literal()?;
                if !self.op() {
                    return Err(self.error("expected '<='"));
                }
                let attr = self.attr()?;
                let upper = if self.op() {
                    Some(self.literal()?)
                } else {
                    None
                };
                self.expect(b')', "')'")?;
                self.predicate(attr, Some(lower), upper, inner_start)
            }
            None => Err(self.error("unexpected end of query")),
        }
    }

    fn predicate(
        &self,
        attr: String,
        lower: Option<String>,
        upper: Option<String>,
        position: usize,
    ) -> Result<QueryAst> {
        let bound = NumericBound::new(lower.as_deref(), upper.as_deref()).map_err(|e| match e {
            Error::InvalidBound { .. } => Error::Syntax {
                position,
                message: e.to_string(),
            },
            other => other,
        })?;
        Ok(QueryAst::Pred(Predicate { attr, bound }))
    }

    fn attr(&mut self) -> Result<String> {
        self.expect(b'"', "'\"'")?;
        let start = self.pos;
        let mut escaped = false;
        while let Some(&b) = self.src.get(self.pos) {
            match b {
                b'"' if !escaped => {
                    let attr = &self.src[start..self.pos];
                    self.pos += 1;
                    if attr.is_empty() {
                        return Err(Error::Syntax {
                            position: start,
                            message: "empty attribute".into(),
                        });
                    }
                    // the slice is delimited by ASCII bytes, so it stays valid UTF-8
                    return Ok(String::from_utf8(attr.to_vec()).expect("utf-8 input"));
                }
                b'\\' => escaped = !escaped,
                _ => escaped = false,
            }
            self.pos += 1;
        }
        Err(self.error("unterminated attribute"))
    }

    fn literal(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(&b) = self.src.get(self.pos) {
            if b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(text.to_string())
    }
}

fn flatten(mut parts: Vec<QueryAst>, wrap: fn(Vec<QueryAst>) -> QueryAst) -> QueryAst {
    if parts.len() == 1 {
        return parts.pop().expect("one part");
    }
    let mut flat = Vec::with_capacity(parts.len());
    for p in parts {
        match (p, wrap(Vec::new())) {
            (QueryAst::And(c), QueryAst::And(_)) | (QueryAst::Or(c), QueryAst::Or(_)) => {
                flat.extend(c)
            }
            (p, _) => flat.push(p),
        }
    }
    wrap(flat)
}
