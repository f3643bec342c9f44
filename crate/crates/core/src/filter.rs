//! Filter configurations, compiled raw filters and record evaluation.
//!
//! A [`FilterConfig`] picks, per query predicate, which primitives to use and
//! how to combine them. [`compile_filter`] turns query plus configuration into
//! a [`RawFilterExpr`]: an immutable tree of Boolean nodes over string and
//! range primitives. Evaluation state lives in a separate [`FilterState`] so
//! one compiled filter can be shared by many workers.

use std::fmt;
use std::sync::Arc;

use crate::automaton::{symbol_of, SYM_OTHER};
use crate::error::{Error, Result};
use crate::query::{Predicate, QueryAst};
use crate::range::{NumberScanner, NumericBound, RangeDfa, Site};
use crate::scanner::{ScanEvent, Scanner};
use crate::string_match::{MatcherKind, StringMatcher, StringSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Omit,
    ValueOnly,
    /// String and value primitives AND-ed, structure-agnostic.
    Flat,
    /// String and value fire inside the same bracket scope.
    Scoped,
    /// String and value fire inside the same comma-separated segment.
    KeyValue,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Omit,
        Mode::ValueOnly,
        Mode::Flat,
        Mode::Scoped,
        Mode::KeyValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Omit => "OMIT",
            Mode::ValueOnly => "VALUE_ONLY",
            Mode::Flat => "FLAT",
            Mode::Scoped => "SCOPED",
            Mode::KeyValue => "KEYVALUE",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn uses_string(self) -> bool {
        matches!(self, Mode::Flat | Mode::Scoped | Mode::KeyValue)
    }
}

/// Block length choice for the string primitive of a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockLen {
    /// Approximate matcher over `B`-byte substrings.
    Bytes(usize),
    /// Exact, compares the last `N` bytes.
    Full,
    /// Exact, KMP automaton.
    Dfa,
}

impl BlockLen {
    pub fn matcher_kind(self, pattern_len: usize) -> Result<MatcherKind> {
        match self {
            BlockLen::Bytes(b) if b == 0 || b > pattern_len => Err(Error::BlockLength {
                block: b,
                len: pattern_len,
            }),
            BlockLen::Bytes(b) => Ok(MatcherKind::SubstringBlock(b)),
            BlockLen::Full => Ok(MatcherKind::FullCompare),
            BlockLen::Dfa => Ok(MatcherKind::Dfa),
        }
    }

    pub fn parse(token: &str) -> Option<BlockLen> {
        match token {
            "N" => Some(BlockLen::Full),
            "DFA" => Some(BlockLen::Dfa),
            _ => token.parse().ok().filter(|&b| b > 0).map(BlockLen::Bytes),
        }
    }
}

impl fmt::Display for BlockLen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLen::Bytes(b) => write!(f, "{b}"),
            BlockLen::Full => f.write_str("N"),
            BlockLen::Dfa => f.write_str("DFA"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafConfig {
    pub mode: Mode,
    /// Present exactly when the mode uses a string primitive.
    pub block: Option<BlockLen>,
}

impl LeafConfig {
    pub const OMIT: LeafConfig = LeafConfig {
        mode: Mode::Omit,
        block: None,
    };
    pub const VALUE_ONLY: LeafConfig = LeafConfig {
        mode: Mode::ValueOnly,
        block: None,
    };

    pub fn with_string(mode: Mode, block: BlockLen) -> LeafConfig {
        LeafConfig {
            mode,
            block: Some(block),
        }
    }

    fn block_token(&self) -> String {
        self.block
            .map_or_else(|| "-".to_string(), |b| b.to_string())
    }
}

/// One [`LeafConfig`] per query leaf, in leaf order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FilterConfig {
    pub leaves: Vec<(String, LeafConfig)>,
}

/// Whether a node of the query tree contributes to the compiled filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Presence {
    Omitted,
    Active,
}

impl FilterConfig {
    pub fn new(ast: &QueryAst, leaves: Vec<LeafConfig>) -> Result<FilterConfig> {
        let preds = ast.leaves();
        if preds.len() != leaves.len() {
            return Err(Error::Config(format!(
                "query has {} predicates, configuration has {}",
                preds.len(),
                leaves.len()
            )));
        }
        let cfg = FilterConfig {
            leaves: preds
                .iter()
                .zip(leaves)
                .map(|(p, c)| (p.attr.clone(), c))
                .collect(),
        };
        cfg.validate(ast)?;
        Ok(cfg)
    }

    /// Every predicate omitted; not valid on its own, a starting point for
    /// [`FilterConfig::set`].
    pub fn all_omitted(ast: &QueryAst) -> FilterConfig {
        FilterConfig {
            leaves: ast
                .leaves()
                .iter()
                .map(|p| (p.attr.clone(), LeafConfig::OMIT))
                .collect(),
        }
    }

    pub fn set(&mut self, leaf: usize, config: LeafConfig) {
        self.leaves[leaf].1 = config;
    }

    /// Parses `attr MODE B` lines. Predicates without a line are omitted; the
    /// k-th line naming an attribute applies to its k-th occurrence.
    pub fn parse(text: &str, ast: &QueryAst) -> Result<FilterConfig> {
        let preds = ast.leaves();
        let mut cfg = FilterConfig::all_omitted(ast);
        let mut assigned = vec![false; preds.len()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let (mode_at, block) = match tokens.last().copied().and_then(Mode::from_name) {
                Some(_) => (tokens.len() - 1, None),
                None if tokens.len() >= 3 => (tokens.len() - 2, Some(tokens[tokens.len() - 1])),
                None => return Err(err(format!("expected `attr MODE B`, got {line:?}"))),
            };
            let mode = Mode::from_name(tokens[mode_at])
                .ok_or_else(|| err(format!("unknown mode {:?}", tokens[mode_at])))?;
            let attr = line_prefix(line, &tokens, mode_at);
            let block = match (mode.uses_string(), block) {
                (true, Some(tok)) => Some(
                    BlockLen::parse(tok)
                        .ok_or_else(|| err(format!("invalid block length {tok:?}")))?,
                ),
                (true, None) => return Err(err(format!("{} needs a block length", mode.name()))),
                (false, None | Some("-")) => None,
                (false, Some(tok)) => {
                    return Err(err(format!(
                        "{} takes no block length, got {tok:?}",
                        mode.name()
                    )))
                }
            };
            let slot = preds
                .iter()
                .enumerate()
                .position(|(i, p)| p.attr == attr && !assigned[i])
                .ok_or_else(|| err(format!("no unassigned predicate on attribute {attr:?}")))?;
            assigned[slot] = true;
            cfg.leaves[slot].1 = LeafConfig { mode, block };
        }
        cfg.validate(ast)?;
        Ok(cfg)
    }

    /// One line per predicate, omitted ones included.
    pub fn to_text(&self) -> String {
        self.leaves
            .iter()
            .map(|(attr, c)| format!("{attr} {} {}\n", c.mode.name(), c.block_token()))
            .collect()
    }

    /// Compact single-line form: `temperature:SCOPED:1|humidity:OMIT:-`.
    pub fn descriptor(&self) -> String {
        self.leaves
            .iter()
            .map(|(attr, c)| format!("{attr}:{}:{}", c.mode.name(), c.block_token()))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Checks the configuration against the query shape: an AND keeps at
    /// least one conjunct unless the whole AND is dropped, an OR keeps all
    /// disjuncts or none, and the root is kept.
    pub fn validate(&self, ast: &QueryAst) -> Result<()> {
        let preds = ast.leaves();
        if preds.len() != self.leaves.len() {
            return Err(Error::Config(format!(
                "query has {} predicates, configuration has {}",
                preds.len(),
                self.leaves.len()
            )));
        }
        for (pred, (attr, c)) in preds.iter().zip(&self.leaves) {
            if &pred.attr != attr {
                return Err(Error::Config(format!(
                    "configuration names {attr:?} where the query has {:?}",
                    pred.attr
                )));
            }
            match (c.mode.uses_string(), c.block) {
                (true, Some(b)) => {
                    b.matcher_kind(pred.attr.len())?;
                }
                (true, None) => return Err(Error::Config(format!("{attr}: missing block length"))),
                (false, Some(_)) => {
                    return Err(Error::Config(format!(
                        "{attr}: {} takes no block length",
                        c.mode.name()
                    )))
                }
                (false, None) => {}
            }
        }
        let mut next = 0;
        match self.presence(ast, &mut next)? {
            Presence::Active => Ok(()),
            Presence::Omitted => Err(Error::Config("every predicate is omitted".into())),
        }
    }

    fn presence(&self, ast: &QueryAst, next: &mut usize) -> Result<Presence> {
        match ast {
            QueryAst::Pred(_) => {
                let mode = self.leaves[*next].1.mode;
                *next += 1;
                Ok(if mode == Mode::Omit {
                    Presence::Omitted
                } else {
                    Presence::Active
                })
            }
            QueryAst::And(children) => {
                let mut any = false;
                for c in children {
                    any |= self.presence(c, next)? == Presence::Active;
                }
                Ok(if any {
                    Presence::Active
                } else {
                    Presence::Omitted
                })
            }
            QueryAst::Or(children) => {
                let states = children
                    .iter()
                    .map(|c| self.presence(c, next))
                    .collect::<Result<Vec<_>>>()?;
                if states.iter().all(|&s| s == Presence::Active) {
                    Ok(Presence::Active)
                } else if states.iter().all(|&s| s == Presence::Omitted) {
                    Ok(Presence::Omitted)
                } else {
                    Err(Error::Config(
                        "an OR must keep all of its alternatives or none".into(),
                    ))
                }
            }
        }
    }
}

/// Text before token `upto`, which may contain spaces.
fn line_prefix<'a>(line: &'a str, tokens: &[&str], upto: usize) -> &'a str {
    let mut rest = line;
    let mut end = 0;
    for tok in &tokens[..upto] {
        let at = rest.find(tok).expect("token from this line");
        end += at + tok.len();
        rest = &rest[at + tok.len()..];
    }
    line[..end].trim()
}

impl fmt::Display for FilterConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// What a primitive looks for, independent of any compiled instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrimitiveSpec {
    String(StringSpec),
    Range(NumericBound),
}

impl fmt::Display for PrimitiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimitiveSpec::String(s) => write!(f, "{s}"),
            PrimitiveSpec::Range(b) => write!(f, "v({b})"),
        }
    }
}

/// A compiled primitive.
#[derive(Clone, Debug)]
pub enum Primitive {
    String {
        spec: StringSpec,
        template: StringMatcher,
    },
    Range(Arc<RangeDfa>),
}

impl Primitive {
    pub fn compile(spec: &PrimitiveSpec) -> Result<Primitive> {
        Ok(match spec {
            PrimitiveSpec::String(s) => Primitive::String {
                template: StringMatcher::new(&s.pattern, s.kind)?,
                spec: s.clone(),
            },
            PrimitiveSpec::Range(b) => Primitive::Range(Arc::new(RangeDfa::new(b.clone()))),
        })
    }

    pub fn spec(&self) -> PrimitiveSpec {
        match self {
            Primitive::String { spec, .. } => PrimitiveSpec::String(spec.clone()),
            Primitive::Range(dfa) => PrimitiveSpec::Range(dfa.bound().clone()),
        }
    }
}

/// Fires of one primitive within the current record.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FireLog {
    pub fired: bool,
    /// Firing sites, a new entry only when the scope or segment changes.
    pub sites: Vec<Site>,
}

impl FireLog {
    #[inline]
    fn record(&mut self, site: Site, keep_sites: bool) {
        self.fired = true;
        if keep_sites
            && self
                .sites
                .last()
                .is_none_or(|s| s.scope_id != site.scope_id || s.segment != site.segment)
        {
            self.sites.push(site);
        }
    }

    pub fn clear(&mut self) {
        self.fired = false;
        self.sites.clear();
    }

    fn scopes(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.sites.iter().map(|s| s.scope_id).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn segments(&self) -> Vec<(u32, u32)> {
        let mut s: Vec<(u32, u32)> = self.sites.iter().map(|s| (s.scope_id, s.segment)).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FilterNode {
    And(Vec<FilterNode>),
    Or(Vec<FilterNode>),
    /// Every listed primitive fires in one common scope.
    ScopeConj(Vec<usize>),
    /// Every listed primitive fires in one common comma segment of a scope.
    SegmentConj(Vec<usize>),
    Leaf(usize),
}

impl FilterNode {
    /// Evaluates the tree from per-primitive fire logs.
    pub fn eval<'a>(&self, log: &impl Fn(usize) -> &'a FireLog) -> bool {
        match self {
            FilterNode::Leaf(p) => log(*p).fired,
            FilterNode::And(children) => children.iter().all(|c| c.eval(log)),
            FilterNode::Or(children) => children.iter().any(|c| c.eval(log)),
            FilterNode::ScopeConj(ps) => {
                if ps.iter().any(|&p| !log(p).fired) {
                    return false;
                }
                let mut common = log(ps[0]).scopes();
                for &p in &ps[1..] {
                    let other = log(p).scopes();
                    common.retain(|s| other.binary_search(s).is_ok());
                }
                !common.is_empty()
            }
            FilterNode::SegmentConj(ps) => {
                if ps.iter().any(|&p| !log(p).fired) {
                    return false;
                }
                let mut common = log(ps[0]).segments();
                for &p in &ps[1..] {
                    let other = log(p).segments();
                    common.retain(|s| other.binary_search(s).is_ok());
                }
                !common.is_empty()
            }
        }
    }

    /// Primitive ids whose fire sites matter, not just their latch.
    fn collect_site_users(&self, out: &mut [bool]) {
        match self {
            FilterNode::Leaf(_) => {}
            FilterNode::And(c) | FilterNode::Or(c) => {
                c.iter().for_each(|n| n.collect_site_users(out))
            }
            FilterNode::ScopeConj(ps) | FilterNode::SegmentConj(ps) => {
                ps.iter().for_each(|&p| out[p] = true)
            }
        }
    }

    /// Number of combinator nodes that bind primitives to structure.
    pub fn structural_nodes(&self) -> usize {
        match self {
            FilterNode::Leaf(_) => 0,
            FilterNode::And(c) | FilterNode::Or(c) => {
                c.iter().map(FilterNode::structural_nodes).sum()
            }
            FilterNode::ScopeConj(_) | FilterNode::SegmentConj(_) => 1,
        }
    }

    /// Renumbers primitive ids through `map`.
    pub fn remap(&self, map: &impl Fn(usize) -> usize) -> FilterNode {
        match self {
            FilterNode::Leaf(p) => FilterNode::Leaf(map(*p)),
            FilterNode::And(c) => FilterNode::And(c.iter().map(|n| n.remap(map)).collect()),
            FilterNode::Or(c) => FilterNode::Or(c.iter().map(|n| n.remap(map)).collect()),
            FilterNode::ScopeConj(ps) => {
                FilterNode::ScopeConj(ps.iter().map(|&p| map(p)).collect())
            }
            FilterNode::SegmentConj(ps) => {
                FilterNode::SegmentConj(ps.iter().map(|&p| map(p)).collect())
            }
        }
    }

    fn write_notation(
        &self,
        f: &mut fmt::Formatter<'_>,
        name: &impl Fn(usize) -> String,
        nested: bool,
    ) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, ps: &[usize], open: &str, close: &str| {
            let inner: Vec<String> = ps.iter().map(|&p| name(p)).collect();
            write!(f, "{open} {} {close}", inner.join(" & "))
        };
        match self {
            FilterNode::Leaf(p) => f.write_str(&name(*p)),
            FilterNode::ScopeConj(ps) => join(f, ps, "{", "}"),
            FilterNode::SegmentConj(ps) => join(f, ps, "[", "]"),
            FilterNode::And(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    c.write_notation(f, name, true)?;
                }
                Ok(())
            }
            FilterNode::Or(children) => {
                if nested {
                    f.write_str("( ")?;
                }
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    c.write_notation(f, name, true)?;
                }
                if nested {
                    f.write_str(" )")?;
                }
                Ok(())
            }
        }
    }
}

/// An immutable compiled raw filter.
#[derive(Clone, Debug)]
pub struct RawFilterExpr {
    root: FilterNode,
    primitives: Vec<Primitive>,
    keeps_sites: Vec<bool>,
    needs_sites: bool,
}

impl RawFilterExpr {
    pub fn from_parts(root: FilterNode, primitives: Vec<Primitive>) -> RawFilterExpr {
        let mut keeps_sites = vec![false; primitives.len()];
        root.collect_site_users(&mut keeps_sites);
        RawFilterExpr {
            root,
            primitives,
            needs_sites: keeps_sites.iter().any(|&k| k),
            keeps_sites,
        }
    }

    pub fn root(&self) -> &FilterNode {
        &self.root
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn new_state(&self) -> FilterState {
        let mut strings = Vec::new();
        let mut ranges = Vec::new();
        for (prim, p) in self.primitives.iter().enumerate() {
            let keep_sites = self.keeps_sites[prim];
            match p {
                Primitive::String { template, .. } => {
                    let mut matcher = template.clone();
                    matcher.reset();
                    strings.push(StringSlot {
                        prim,
                        keep_sites,
                        matcher,
                    });
                }
                Primitive::Range(dfa) => ranges.push(RangeSlot {
                    prim,
                    keep_sites,
                    dfa: Arc::clone(dfa),
                    scanner: NumberScanner::new(dfa),
                }),
            }
        }
        FilterState {
            strings,
            ranges,
            logs: vec![FireLog::default(); self.primitives.len()],
            sites: Vec::new(),
            tokens: Vec::new(),
        }
    }

    /// Scans one record and decides whether it may match.
    pub fn filter_record(&self, state: &mut FilterState, record: &[u8]) -> bool {
        self.scan_record(state, record);
        self.eval(state)
    }

    /// Runs every primitive over one record, leaving the fire logs in `state`.
    ///
    /// Primitives run one after another over the whole record; range
    /// primitives only visit the number tokens. One whose sites no
    /// combinator reads stops at its first fire.
    pub fn scan_record(&self, state: &mut FilterState, record: &[u8]) {
        self.reset(state);
        let FilterState {
            strings,
            ranges,
            logs,
            sites,
            tokens,
        } = state;
        sites.clear();
        if self.needs_sites {
            let mut scanner = Scanner::new();
            sites.extend(record.iter().map(|&b| {
                let e = scanner.scan_byte(b);
                (e.scope_id, e.segment)
            }));
        }
        let site_at = |offset: usize| {
            let (scope_id, segment) = sites[offset];
            Site {
                offset,
                scope_id,
                segment,
            }
        };

        for slot in strings.iter_mut() {
            let log = &mut logs[slot.prim];
            let keep = slot.keep_sites;
            slot.matcher.scan(record, |i| {
                if keep {
                    log.record(site_at(i), true);
                } else {
                    log.fired = true;
                }
                keep
            });
        }
        if !ranges.is_empty() {
            tokens.clear();
            let mut start = None;
            for (i, &b) in record.iter().enumerate() {
                match (symbol_of(b) != SYM_OTHER, start) {
                    (true, None) => start = Some(i),
                    (false, Some(s)) => {
                        tokens.push((s, i));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                tokens.push((s, record.len()));
            }
        }
        for slot in ranges.iter() {
            let log = &mut logs[slot.prim];
            for &(start, end) in tokens.iter() {
                if slot.dfa.matches_token(&record[start..end]) {
                    if !slot.keep_sites {
                        log.fired = true;
                        break;
                    }
                    log.record(site_at(start), true);
                }
            }
        }
    }

    /// Same as [`RawFilterExpr::filter_record`] over pre-computed events.
    pub fn filter_events(&self, state: &mut FilterState, events: &[ScanEvent]) -> bool {
        self.reset(state);
        for event in events {
            self.step(state, event);
        }
        self.finish(state)
    }

    pub fn reset(&self, state: &mut FilterState) {
        for slot in &mut state.strings {
            slot.matcher.reset();
        }
        for slot in &mut state.ranges {
            slot.scanner.reset(&slot.dfa);
        }
        state.logs.iter_mut().for_each(FireLog::clear);
    }

    #[inline]
    pub fn step(&self, state: &mut FilterState, event: &ScanEvent) {
        for slot in &mut state.strings {
            if slot.matcher.step(event.byte) {
                state.logs[slot.prim].record(
                    Site {
                        offset: event.offset,
                        scope_id: event.scope_id,
                        segment: event.segment,
                    },
                    slot.keep_sites,
                );
            }
        }
        for slot in &mut state.ranges {
            if let Some(site) = slot.scanner.step(&slot.dfa, event) {
                state.logs[slot.prim].record(site, slot.keep_sites);
            }
        }
    }

    /// Flushes pending number tokens and evaluates the tree.
    pub fn finish(&self, state: &mut FilterState) -> bool {
        self.flush(state);
        self.eval(state)
    }

    /// Evaluates the tree on the logs gathered so far.
    pub fn eval(&self, state: &FilterState) -> bool {
        let logs = &state.logs;
        self.root.eval(&|p| &logs[p])
    }

    fn flush(&self, state: &mut FilterState) {
        for slot in &mut state.ranges {
            if let Some(site) = slot.scanner.finish(&slot.dfa) {
                state.logs[slot.prim].record(site, slot.keep_sites);
            }
        }
    }
}

impl fmt::Display for RawFilterExpr {
    /// `{ s1(temperature) & v(0.7<=f<=35.1) } & v(12<=i<=49)`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |p: usize| self.primitives[p].spec().to_string();
        self.root.write_notation(f, &name, false)
    }
}

/// Per-worker evaluation state for one [`RawFilterExpr`].
#[derive(Clone, Debug)]
pub struct FilterState {
    strings: Vec<StringSlot>,
    ranges: Vec<RangeSlot>,
    logs: Vec<FireLog>,
    /// Scope and segment of every byte of the current record.
    sites: Vec<(u32, u32)>,
    /// Maximal runs of number-alphabet bytes in the current record.
    tokens: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
struct StringSlot {
    prim: usize,
    keep_sites: bool,
    matcher: StringMatcher,
}

#[derive(Clone, Debug)]
struct RangeSlot {
    prim: usize,
    keep_sites: bool,
    dfa: Arc<RangeDfa>,
    scanner: NumberScanner,
}

impl FilterState {
    pub fn logs(&self) -> &[FireLog] {
        &self.logs
    }
}

/// Primitive specs a predicate needs under a given leaf configuration.
pub fn leaf_primitives(pred: &Predicate, config: &LeafConfig) -> Result<Vec<PrimitiveSpec>> {
    let range = PrimitiveSpec::Range(pred.bound.clone());
    match (config.mode, config.block) {
        (Mode::Omit, _) => Ok(Vec::new()),
        (Mode::ValueOnly, _) => Ok(vec![range]),
        (_, Some(block)) => Ok(vec![
            PrimitiveSpec::String(StringSpec {
                pattern: pred.attr.as_bytes().to_vec(),
                kind: block.matcher_kind(pred.attr.len())?,
            }),
            range,
        ]),
        (mode, None) => Err(Error::Config(format!(
            "{}: {} needs a block length",
            pred.attr,
            mode.name()
        ))),
    }
}

/// Builds the filter tree over primitive specs without compiling them.
/// `intern` maps a spec to the primitive id used in the tree.
pub fn build_tree(
    ast: &QueryAst,
    cfg: &FilterConfig,
    intern: &mut impl FnMut(PrimitiveSpec) -> Result<usize>,
) -> Result<FilterNode> {
    cfg.validate(ast)?;
    let mut next = 0;
    build_node(ast, cfg, intern, &mut next)?
        .ok_or_else(|| Error::Config("every predicate is omitted".into()))
}

fn build_node(
    ast: &QueryAst,
    cfg: &FilterConfig,
    intern: &mut impl FnMut(PrimitiveSpec) -> Result<usize>,
    next: &mut usize,
) -> Result<Option<FilterNode>> {
    match ast {
        QueryAst::Pred(pred) => {
            let config = cfg.leaves[*next].1;
            *next += 1;
            let ids = leaf_primitives(pred, &config)?
                .into_iter()
                .map(&mut *intern)
                .collect::<Result<Vec<_>>>()?;
            Ok(match config.mode {
                Mode::Omit => None,
                Mode::ValueOnly => Some(FilterNode::Leaf(ids[0])),
                Mode::Flat => Some(FilterNode::And(
                    ids.into_iter().map(FilterNode::Leaf).collect(),
                )),
                Mode::Scoped => Some(FilterNode::ScopeConj(ids)),
                Mode::KeyValue => Some(FilterNode::SegmentConj(ids)),
            })
        }
        QueryAst::And(children) => {
            let mut kept = Vec::new();
            for c in children {
                match build_node(c, cfg, intern, next)? {
                    Some(FilterNode::And(inner)) => kept.extend(inner),
                    Some(node) => kept.push(node),
                    None => {}
                }
            }
            Ok(match kept.len() {
                0 => None,
                1 => kept.pop(),
                _ => Some(FilterNode::And(kept)),
            })
        }
        QueryAst::Or(children) => {
            let mut kept = Vec::new();
            let mut omitted = 0;
            for c in children {
                match build_node(c, cfg, intern, next)? {
                    Some(FilterNode::Or(inner)) => kept.extend(inner),
                    Some(node) => kept.push(node),
                    None => omitted += 1,
                }
            }
            match (kept.is_empty(), omitted) {
                (true, _) => Ok(None),
                (false, 0) => Ok(Some(FilterNode::Or(kept))),
                (false, _) => Err(Error::Config(
                    "an OR must keep all of its alternatives or none".into(),
                )),
            }
        }
    }
}

/// Compiles a query under a configuration. Each leaf gets its own primitive
/// instances.
pub fn compile_filter(ast: &QueryAst, cfg: &FilterConfig) -> Result<RawFilterExpr> {
    let mut primitives = Vec::new();
    let root = build_tree(ast, cfg, &mut |spec| {
        primitives.push(Primitive::compile(&spec)?);
        Ok(primitives.len() - 1)
    })?;
    Ok(RawFilterExpr::from_parts(root, primitives))
}
