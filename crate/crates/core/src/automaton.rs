//! Small finite automata over the numeric input alphabet.
//!
//! Bytes are folded into [`SYMBOLS`] symbols before they reach an automaton:
//! the ten digits, `-`, `+`, `.`, the exponent letters and everything else.
//! Regexes compile to an epsilon-NFA (Thompson), which is determinized by
//! subset construction and minimized by partition refinement.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

pub const SYMBOLS: usize = 15;
pub const SYM_MINUS: usize = 10;
pub const SYM_PLUS: usize = 11;
pub const SYM_DOT: usize = 12;
pub const SYM_EXP: usize = 13;
pub const SYM_OTHER: usize = 14;

const SYMBOL_TABLE: [u8; 256] = {
    let mut table = [SYM_OTHER as u8; 256];
    let mut d = 0;
    while d < 10 {
        table[b'0' as usize + d] = d as u8;
        d += 1;
    }
    table[b'-' as usize] = SYM_MINUS as u8;
    table[b'+' as usize] = SYM_PLUS as u8;
    table[b'.' as usize] = SYM_DOT as u8;
    table[b'e' as usize] = SYM_EXP as u8;
    table[b'E' as usize] = SYM_EXP as u8;
    table
};

#[inline]
pub fn symbol_of(byte: u8) -> usize {
    SYMBOL_TABLE[byte as usize] as usize
}

/// Set of symbols as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSet(pub u16);

impl SymbolSet {
    pub const DIGITS: SymbolSet = SymbolSet(0x3ff);

    pub fn single(symbol: usize) -> Self {
        SymbolSet(1 << symbol)
    }

    /// Digits `lo..=hi`; empty when `lo > hi`.
    pub fn digit_range(lo: u8, hi: u8) -> Self {
        if lo > hi {
            return SymbolSet(0);
        }
        let mut bits = 0u16;
        for d in lo..=hi {
            bits |= 1 << d;
        }
        SymbolSet(bits)
    }

    pub fn contains(self, symbol: usize) -> bool {
        self.0 & (1 << symbol) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for SymbolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut d = 0u8;
        while d < 10 {
            if self.contains(d as usize) {
                let start = d;
                while d < 9 && self.contains(d as usize + 1) {
                    d += 1;
                }
                parts.push(match d - start {
                    0 => format!("{start}"),
                    1 => format!("{start}{d}"),
                    _ => format!("{start}-{d}"),
                });
            }
            d += 1;
        }
        for (sym, text) in [
            (SYM_MINUS, "\\-"),
            (SYM_PLUS, "+"),
            (SYM_DOT, "."),
            (SYM_EXP, "eE"),
        ] {
            if self.contains(sym) {
                parts.push(text.to_string());
            }
        }
        let body = parts.concat();
        let single = self.0.count_ones() == 1;
        if single && self.contains(SYM_DOT) {
            f.write_str("\\.")
        } else if single && self.contains(SYM_MINUS) {
            f.write_str("-")
        } else if single && self.0 & SymbolSet::DIGITS.0 != 0 {
            f.write_str(&body)
        } else {
            write!(f, "[{body}]")
        }
    }
}

/// Regular expressions over [`SymbolSet`]s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Regex {
    /// Matches nothing.
    Empty,
    Epsilon,
    Set(SymbolSet),
    Concat(Vec<Regex>),
    Alt(Vec<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn digit(d: u8) -> Regex {
        Regex::Set(SymbolSet::single(d as usize))
    }

    pub fn digits(lo: u8, hi: u8) -> Regex {
        let set = SymbolSet::digit_range(lo, hi);
        if set.is_empty() {
            Regex::Empty
        } else {
            Regex::Set(set)
        }
    }

    pub fn any_digit() -> Regex {
        Regex::Set(SymbolSet::DIGITS)
    }

    pub fn literal(digits: &[u8]) -> Regex {
        Regex::concat(digits.iter().map(|&d| Regex::digit(d)).collect())
    }

    pub fn star(inner: Regex) -> Regex {
        match inner {
            Regex::Empty | Regex::Epsilon => Regex::Epsilon,
            other => Regex::Star(Box::new(other)),
        }
    }

    pub fn optional(inner: Regex) -> Regex {
        Regex::alt(vec![Regex::Epsilon, inner])
    }

    pub fn repeat(inner: Regex, times: usize) -> Regex {
        Regex::concat(std::iter::repeat_n(inner, times).collect())
    }

    /// Flattening concatenation; any `Empty` factor empties the whole product.
    pub fn concat(parts: Vec<Regex>) -> Regex {
        let mut flat = Vec::with_capacity(parts.len());
        for part in parts {
            match part {
                Regex::Empty => return Regex::Empty,
                Regex::Epsilon => {}
                Regex::Concat(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Regex::Epsilon,
            1 => flat.pop().unwrap(),
            _ => Regex::Concat(flat),
        }
    }

    /// Flattening alternation; `Empty` branches vanish.
    pub fn alt(parts: Vec<Regex>) -> Regex {
        let mut flat: Vec<Regex> = Vec::with_capacity(parts.len());
        for part in parts {
            match part {
                Regex::Empty => {}
                Regex::Alt(inner) => {
                    for r in inner {
                        if !flat.contains(&r) {
                            flat.push(r);
                        }
                    }
                }
                other => {
                    if !flat.contains(&other) {
                        flat.push(other);
                    }
                }
            }
        }
        match flat.len() {
            0 => Regex::Empty,
            1 => flat.pop().unwrap(),
            _ => Regex::Alt(flat),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Regex::Empty => f.write_str("[]"),
            Regex::Epsilon => f.write_str("()"),
            Regex::Set(set) => write!(f, "{set}"),
            Regex::Concat(parts) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                // `x x*` is rendered as `x+`
                let mut i = 0;
                while i < parts.len() {
                    if let Some(Regex::Star(inner)) = parts.get(i + 1) {
                        if **inner == parts[i] {
                            parts[i].fmt_prec(f, 3)?;
                            f.write_str("+")?;
                            i += 2;
                            continue;
                        }
                    }
                    parts[i].fmt_prec(f, 2)?;
                    i += 1;
                }
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Regex::Alt(parts) => {
                let (optional, rest): (Vec<&Regex>, Vec<&Regex>) =
                    parts.iter().partition(|r| matches!(r, Regex::Epsilon));
                if !optional.is_empty() && rest.len() == 1 {
                    rest[0].fmt_prec(f, 3)?;
                    return f.write_str("?");
                }
                if prec > 0 || !optional.is_empty() {
                    f.write_str("(")?;
                }
                for (i, part) in rest.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    part.fmt_prec(f, 1)?;
                }
                if prec > 0 || !optional.is_empty() {
                    f.write_str(")")?;
                }
                if !optional.is_empty() {
                    f.write_str("?")?;
                }
                Ok(())
            }
            Regex::Star(inner) => {
                inner.fmt_prec(f, 3)?;
                f.write_str("*")
            }
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Epsilon-NFA.
#[derive(Clone, Debug, Default)]
pub struct Nfa {
    epsilon: Vec<Vec<usize>>,
    edges: Vec<Vec<(SymbolSet, usize)>>,
    start: usize,
    accept: usize,
}

impl Nfa {
    /// Thompson construction with a single accepting state.
    pub fn from_regex(regex: &Regex) -> Nfa {
        let mut nfa = Nfa::default();
        let (start, accept) = nfa.build(regex);
        nfa.start = start;
        nfa.accept = accept;
        nfa
    }

    pub fn state_count(&self) -> usize {
        self.edges.len()
    }

    fn add_state(&mut self) -> usize {
        self.epsilon.push(Vec::new());
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn build(&mut self, regex: &Regex) -> (usize, usize) {
        match regex {
            Regex::Empty => {
                let s = self.add_state();
                let t = self.add_state();
                (s, t)
            }
            Regex::Epsilon => {
                let s = self.add_state();
                let t = self.add_state();
                self.epsilon[s].push(t);
                (s, t)
            }
            Regex::Set(set) => {
                let s = self.add_state();
                let t = self.add_state();
                self.edges[s].push((*set, t));
                (s, t)
            }
            Regex::Concat(parts) => {
                let s = self.add_state();
                let mut tail = s;
                for part in parts {
                    let (ps, pt) = self.build(part);
                    self.epsilon[tail].push(ps);
                    tail = pt;
                }
                (s, tail)
            }
            Regex::Alt(parts) => {
                let s = self.add_state();
                let t = self.add_state();
                for part in parts {
                    let (ps, pt) = self.build(part);
                    self.epsilon[s].push(ps);
                    self.epsilon[pt].push(t);
                }
                (s, t)
            }
            Regex::Star(inner) => {
                let s = self.add_state();
                let t = self.add_state();
                let (ps, pt) = self.build(inner);
                self.epsilon[s].push(ps);
                self.epsilon[s].push(t);
                self.epsilon[pt].push(ps);
                self.epsilon[pt].push(t);
                (s, t)
            }
        }
    }

    fn closure(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(s) = stack.pop() {
            if set.insert(s) {
                stack.extend(self.epsilon[s].iter().copied());
            }
        }
        set
    }

    /// Direct simulation; used to cross-check determinization.
    pub fn accepts(&self, input: &[u8]) -> bool {
        let mut current = self.closure([self.start]);
        for &b in input {
            let sym = symbol_of(b);
            let next: Vec<usize> = current
                .iter()
                .flat_map(|&s| {
                    self.edges[s]
                        .iter()
                        .filter(move |(set, _)| set.contains(sym))
                        .map(|&(_, t)| t)
                })
                .collect();
            current = self.closure(next);
            if current.is_empty() {
                return false;
            }
        }
        current.contains(&self.accept)
    }
}

/// Total DFA over the symbol alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    transitions: Vec<[u32; SYMBOLS]>,
    accepting: Vec<bool>,
    start: u32,
}

impl Dfa {
    /// Subset construction. The result is total; the empty subset becomes an
    /// explicit dead state.
    pub fn from_nfa(nfa: &Nfa) -> Dfa {
        let mut index: HashMap<BTreeSet<usize>, u32> = HashMap::new();
        let mut transitions: Vec<[u32; SYMBOLS]> = Vec::new();
        let mut accepting = Vec::new();
        let mut queue = VecDeque::new();

        let start = nfa.closure([nfa.start]);
        index.insert(start.clone(), 0);
        transitions.push([0; SYMBOLS]);
        accepting.push(start.contains(&nfa.accept));
        queue.push_back(start);

        while let Some(subset) = queue.pop_front() {
            let from = index[&subset];
            for sym in 0..SYMBOLS {
                let targets = subset.iter().flat_map(|&s| {
                    nfa.edges[s]
                        .iter()
                        .filter(move |(set, _)| set.contains(sym))
                        .map(|&(_, t)| t)
                });
                let next = nfa.closure(targets);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = transitions.len() as u32;
                        index.insert(next.clone(), id);
                        transitions.push([0; SYMBOLS]);
                        accepting.push(next.contains(&nfa.accept));
                        queue.push_back(next);
                        id
                    }
                };
                transitions[from as usize][sym] = id;
            }
        }
        Dfa {
            transitions,
            accepting,
            start: 0,
        }
    }

    pub fn from_regex(regex: &Regex) -> Dfa {
        Dfa::from_nfa(&Nfa::from_regex(regex)).minimize()
    }

    /// Removes unreachable states, merges equivalent ones by partition
    /// refinement and renumbers states in breadth-first order from the start.
    pub fn minimize(&self) -> Dfa {
        let reachable = self.reachable();
        let mut class: Vec<usize> = vec![usize::MAX; self.transitions.len()];
        for &s in &reachable {
            class[s] = self.accepting[s] as usize;
        }
        let mut class_count = reachable
            .iter()
            .map(|&s| class[s])
            .collect::<BTreeSet<_>>()
            .len();
        loop {
            let mut signatures: BTreeMap<(usize, [usize; SYMBOLS]), usize> = BTreeMap::new();
            let mut next = vec![usize::MAX; self.transitions.len()];
            for &s in &reachable {
                let mut sig = [0usize; SYMBOLS];
                for (sym, slot) in sig.iter_mut().enumerate() {
                    *slot = class[self.transitions[s][sym] as usize];
                }
                let fresh = signatures.len();
                next[s] = *signatures.entry((class[s], sig)).or_insert(fresh);
            }
            let count = signatures.len();
            class = next;
            if count == class_count {
                break;
            }
            class_count = count;
        }

        let mut renumber: HashMap<usize, u32> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.start as usize]);
        renumber.insert(class[self.start as usize], 0);
        order.push(self.start as usize);
        while let Some(s) = queue.pop_front() {
            for sym in 0..SYMBOLS {
                let t = self.transitions[s][sym] as usize;
                if let std::collections::hash_map::Entry::Vacant(e) = renumber.entry(class[t]) {
                    e.insert(order.len() as u32);
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let transitions = order
            .iter()
            .map(|&s| {
                let mut row = [0u32; SYMBOLS];
                for (sym, slot) in row.iter_mut().enumerate() {
                    *slot = renumber[&class[self.transitions[s][sym] as usize]];
                }
                row
            })
            .collect();
        let accepting = order.iter().map(|&s| self.accepting[s]).collect();
        Dfa {
            transitions,
            accepting,
            start: 0,
        }
    }

    fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.transitions.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.start as usize]);
        seen[self.start as usize] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for &t in &self.transitions[s] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t as usize);
                }
            }
        }
        order
    }

    /// Product automaton accepting strings accepted by both.
    pub fn intersect(&self, other: &Dfa) -> Dfa {
        self.product(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Dfa) -> Dfa {
        self.product(other, |a, b| a || b)
    }

    fn product(&self, other: &Dfa, combine: impl Fn(bool, bool) -> bool) -> Dfa {
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut transitions = Vec::new();
        let mut accepting = Vec::new();
        let mut queue = VecDeque::new();
        let start = (self.start, other.start);
        index.insert(start, 0);
        transitions.push([0; SYMBOLS]);
        accepting.push(combine(
            self.accepting[start.0 as usize],
            other.accepting[start.1 as usize],
        ));
        queue.push_back(start);
        while let Some((a, b)) = queue.pop_front() {
            let from = index[&(a, b)];
            for sym in 0..SYMBOLS {
                let pair = (
                    self.transitions[a as usize][sym],
                    other.transitions[b as usize][sym],
                );
                let id = *index.entry(pair).or_insert_with(|| {
                    transitions.push([0; SYMBOLS]);
                    accepting.push(combine(
                        self.accepting[pair.0 as usize],
                        other.accepting[pair.1 as usize],
                    ));
                    queue.push_back(pair);
                    (transitions.len() - 1) as u32
                });
                transitions[from as usize][sym] = id;
            }
        }
        Dfa {
            transitions,
            accepting,
            start: 0,
        }
    }

    /// Language equality by breadth-first search over the pair automaton;
    /// returns a distinguishing symbol string when the languages differ.
    pub fn distinguishing_word(&self, other: &Dfa) -> Option<Vec<usize>> {
        type Pair = (u32, u32);
        // pair -> (predecessor, symbol)
        let mut seen: HashMap<Pair, Option<(Pair, usize)>> = HashMap::new();
        let start = (self.start, other.start);
        seen.insert(start, None);
        let mut queue = VecDeque::from([start]);
        while let Some((a, b)) = queue.pop_front() {
            if self.accepting[a as usize] != other.accepting[b as usize] {
                let mut word = Vec::new();
                let mut cur = (a, b);
                while let Some(Some((prev, sym))) = seen.get(&cur) {
                    word.push(*sym);
                    cur = *prev;
                }
                word.reverse();
                return Some(word);
            }
            for sym in 0..SYMBOLS {
                let pair = (
                    self.transitions[a as usize][sym],
                    other.transitions[b as usize][sym],
                );
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(pair) {
                    e.insert(Some(((a, b), sym)));
                    queue.push_back(pair);
                }
            }
        }
        None
    }

    pub fn equivalent(&self, other: &Dfa) -> bool {
        self.distinguishing_word(other).is_none()
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    #[inline]
    pub fn step(&self, state: u32, symbol: usize) -> u32 {
        self.transitions[state as usize][symbol]
    }

    #[inline]
    pub fn is_accepting(&self, state: u32) -> bool {
        self.accepting[state as usize]
    }

    /// All states, including a dead sink if there is one.
    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    /// States from which an accepting state is reachable. A minimized DFA
    /// has at most one state that fails this.
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.transitions.len();
        let mut live = self.accepting.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if !live[s] && self.transitions[s].iter().any(|&t| live[t as usize]) {
                    live[s] = true;
                    changed = true;
                }
            }
        }
        live
    }

    /// Number of states excluding the dead sink.
    pub fn live_state_count(&self) -> usize {
        self.live_states().iter().filter(|&&l| l).count()
    }

    /// Number of distinct transition columns, i.e. the byte classes a
    /// hardware implementation would have to decode.
    pub fn input_classes(&self) -> usize {
        (0..SYMBOLS)
            .map(|sym| {
                self.transitions
                    .iter()
                    .map(|row| row[sym])
                    .collect::<Vec<_>>()
            })
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn accepts(&self, input: &[u8]) -> bool {
        let mut state = self.start;
        for &b in input {
            state = self.step(state, symbol_of(b));
        }
        self.is_accepting(state)
    }
}
