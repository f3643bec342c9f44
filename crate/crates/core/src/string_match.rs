//! String primitives.
//!
//! Three ways to look for a pattern of `N` bytes in a byte stream:
//!
//! * a state machine with `N + 1` states (KMP automaton), exact;
//! * a buffer of the last `N` bytes compared against the pattern, exact;
//! * a buffer of the last `B` bytes tested against every `B`-byte substring
//!   of the pattern, with a run counter that signals once `N - B + 1`
//!   consecutive windows hit. This one is approximate: it accepts every
//!   occurrence but also strings assembled from the right pieces.
//!
//! Matching is structure-agnostic; scoping is done by the filter layer.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scanner::ScanEvent;

/// Distinct `block`-byte substrings of `pattern`, in order of first
/// occurrence.
pub fn build_substring_set(pattern: &[u8], block: usize) -> Result<Vec<Vec<u8>>> {
    if block == 0 || block > pattern.len() {
        return Err(Error::BlockLength {
            block,
            len: pattern.len(),
        });
    }
    let mut seen = HashSet::new();
    Ok(pattern
        .windows(block)
        .filter(|w| seen.insert(*w))
        .map(|w| w.to_vec())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatcherKind {
    /// (i) exact, KMP automaton.
    Dfa,
    /// (ii) exact, last `N` bytes compared wholesale.
    FullCompare,
    /// (iii) approximate, `B`-byte substring blocks.
    SubstringBlock(usize),
}

/// Membership test for the gram set of a block matcher.
#[derive(Debug)]
enum GramIndex {
    /// One bit per possible gram of up to two bytes.
    Bits(Box<[u64; 1024]>),
    Packed(HashSet<u64>),
    Long(HashSet<Vec<u8>>),
}

impl GramIndex {
    fn new(grams: &[Vec<u8>], block: usize) -> GramIndex {
        match block {
            1 | 2 => {
                let mut bits = Box::new([0u64; 1024]);
                for g in grams {
                    let key = pack(g);
                    bits[(key >> 6) as usize & 1023] |= 1 << (key & 63);
                }
                GramIndex::Bits(bits)
            }
            3..=8 => GramIndex::Packed(grams.iter().map(|g| pack(g)).collect()),
            _ => GramIndex::Long(grams.iter().cloned().collect()),
        }
    }

    #[inline]
    fn contains_packed(&self, key: u64) -> bool {
        match self {
            GramIndex::Bits(bits) => has_bit(bits, key),
            GramIndex::Packed(set) => set.contains(&key),
            GramIndex::Long(_) => unreachable!("long grams are not packed"),
        }
    }
}

#[inline(always)]
fn has_bit(bits: &[u64; 1024], key: u64) -> bool {
    bits[(key >> 6) as usize & 1023] & (1 << (key & 63)) != 0
}

fn pack(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64)
}

#[derive(Debug)]
struct BlockTables {
    block: usize,
    threshold: u32,
    grams: Vec<Vec<u8>>,
    index: GramIndex,
}

/// Approximate `B`-byte block matcher.
#[derive(Clone, Debug)]
pub struct SubstringBlockMatcher {
    tables: Arc<BlockTables>,
    block: usize,
    threshold: u32,
    /// Keeps the last `block` bytes of `packed`, for blocks up to 8 bytes.
    mask: u64,
    packed: u64,
    long_window: Vec<u8>,
    filled: usize,
    run: u32,
    latched: bool,
}

impl SubstringBlockMatcher {
    pub fn new(pattern: &[u8], block: usize) -> Result<Self> {
        let grams = build_substring_set(pattern, block)?;
        let index = GramIndex::new(&grams, block);
        let threshold = (pattern.len() - block + 1) as u32;
        Ok(SubstringBlockMatcher {
            block,
            threshold,
            mask: match block {
                8.. => u64::MAX,
                _ => (1u64 << (8 * block)) - 1,
            },
            tables: Arc::new(BlockTables {
                block,
                threshold,
                grams,
                index,
            }),
            packed: 0,
            long_window: Vec::with_capacity(if block > 8 { block } else { 0 }),
            filled: 0,
            run: 0,
            latched: false,
        })
    }

    pub fn block_len(&self) -> usize {
        self.tables.block
    }

    /// `N - B + 1`
    pub fn threshold(&self) -> u32 {
        self.tables.threshold
    }

    pub fn grams(&self) -> &[Vec<u8>] {
        &self.tables.grams
    }

    pub fn run_counter(&self) -> u32 {
        self.run
    }

    #[inline]
    pub fn step(&mut self, byte: u8) -> bool {
        let block = self.block;
        let hit = if block <= 8 {
            self.packed = ((self.packed << 8) | byte as u64) & self.mask;
            if self.filled < block {
                self.filled += 1;
                if self.filled < block {
                    return false;
                }
            }
            self.tables.index.contains_packed(self.packed)
        } else {
            if self.long_window.len() == block {
                self.long_window.remove(0);
            }
            self.long_window.push(byte);
            if self.long_window.len() < block {
                return false;
            }
            match &self.tables.index {
                GramIndex::Long(set) => set.contains(self.long_window.as_slice()),
                _ => unreachable!("short index for a long block"),
            }
        };
        if hit {
            self.run = (self.run + 1).min(self.threshold);
        } else {
            self.run = 0;
        }
        let fired = self.run == self.threshold;
        self.latched |= fired;
        fired
    }

    /// [`SubstringBlockMatcher::step`] over a slice; see [`StringMatcher::scan`].
    fn scan(&mut self, input: &[u8], on_fire: &mut impl FnMut(usize) -> bool) {
        if self.block > 8 {
            for (i, &b) in input.iter().enumerate() {
                if self.step(b) && !on_fire(i) {
                    return;
                }
            }
            return;
        }
        let tables = Arc::clone(&self.tables);
        match &tables.index {
            GramIndex::Bits(bits) => self.scan_packed(input, on_fire, |k| has_bit(bits, k)),
            GramIndex::Packed(set) => self.scan_packed(input, on_fire, |k| set.contains(&k)),
            GramIndex::Long(_) => unreachable!("long grams are not packed"),
        }
    }

    #[inline(always)]
    fn scan_packed(
        &mut self,
        input: &[u8],
        on_fire: &mut impl FnMut(usize) -> bool,
        contains: impl Fn(u64) -> bool,
    ) {
        let (block, mask, threshold) = (self.block, self.mask, self.threshold);
        let (mut packed, mut filled, mut run) = (self.packed, self.filled, self.run);
        for (i, &b) in input.iter().enumerate() {
            packed = ((packed << 8) | b as u64) & mask;
            if filled < block {
                filled += 1;
                if filled < block {
                    continue;
                }
            }
            run = if contains(packed) {
                (run + 1).min(threshold)
            } else {
                0
            };
            if run == threshold {
                self.latched = true;
                if !on_fire(i) {
                    break;
                }
            }
        }
        self.packed = packed;
        self.filled = filled;
        self.run = run;
    }

    pub fn reset(&mut self) {
        self.packed = 0;
        self.long_window.clear();
        self.filled = 0;
        self.run = 0;
        self.latched = false;
    }
}

/// KMP automaton with `N + 1` states.
#[derive(Clone, Debug)]
pub struct DfaMatcher {
    table: Arc<Vec<u16>>,
    len: u16,
    state: u16,
    latched: bool,
}

impl DfaMatcher {
    pub fn new(pattern: &[u8]) -> Result<Self> {
        if pattern.is_empty() || pattern.len() >= u16::MAX as usize {
            return Err(Error::BlockLength {
                block: pattern.len(),
                len: pattern.len(),
            });
        }
        let n = pattern.len();
        let mut table = vec![0u16; (n + 1) * 256];
        table[pattern[0] as usize] = 1;
        let mut restart = 0usize;
        for state in 1..=n {
            for b in 0..256 {
                table[state * 256 + b] = table[restart * 256 + b];
            }
            if state < n {
                table[state * 256 + pattern[state] as usize] = (state + 1) as u16;
                restart = table[restart * 256 + pattern[state] as usize] as usize;
            }
        }
        Ok(DfaMatcher {
            table: Arc::new(table),
            len: n as u16,
            state: 0,
            latched: false,
        })
    }

    pub fn state_count(&self) -> usize {
        self.len as usize + 1
    }

    /// Number of distinct bytes the automaton distinguishes, plus "other".
    pub fn input_classes(&self) -> usize {
        let mut seen = [false; 256];
        for state in 0..self.state_count() {
            let row = &self.table[state * 256..(state + 1) * 256];
            for (s, &next) in seen.iter_mut().zip(row) {
                *s |= next != 0;
            }
        }
        seen.iter().filter(|&&s| s).count() + 1
    }

    #[inline]
    pub fn step(&mut self, byte: u8) -> bool {
        self.state = self.table[self.state as usize * 256 + byte as usize];
        let fired = self.state == self.len;
        self.latched |= fired;
        fired
    }

    pub fn reset(&mut self) {
        self.state = 0;
        self.latched = false;
    }
}

/// Buffer of the last `N` bytes compared against the pattern every byte.
#[derive(Clone, Debug)]
pub struct FullCompareMatcher {
    pattern: Arc<Vec<u8>>,
    ring: Vec<u8>,
    head: usize,
    filled: usize,
    latched: bool,
}

impl FullCompareMatcher {
    pub fn new(pattern: &[u8]) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::BlockLength { block: 0, len: 0 });
        }
        Ok(FullCompareMatcher {
            pattern: Arc::new(pattern.to_vec()),
            ring: vec![0; pattern.len()],
            head: 0,
            filled: 0,
            latched: false,
        })
    }

    #[inline]
    pub fn step(&mut self, byte: u8) -> bool {
        let n = self.ring.len();
        self.ring[self.head] = byte;
        self.head = (self.head + 1) % n;
        if self.filled < n {
            self.filled += 1;
            if self.filled < n {
                return false;
            }
        }
        // oldest byte sits at `head`
        let (newer, older) = self.ring.split_at(self.head);
        let fired = self.pattern[..older.len()] == *older && self.pattern[older.len()..] == *newer;
        self.latched |= fired;
        fired
    }

    pub fn reset(&mut self) {
        self.head = 0;
        self.filled = 0;
        self.latched = false;
    }
}

/// One string primitive instance: pattern, variant and per-record state.
#[derive(Clone, Debug)]
pub enum StringMatcher {
    Dfa(DfaMatcher),
    FullCompare(FullCompareMatcher),
    SubstringBlock(SubstringBlockMatcher),
}

impl StringMatcher {
    pub fn new(pattern: &[u8], kind: MatcherKind) -> Result<Self> {
        Ok(match kind {
            MatcherKind::Dfa => StringMatcher::Dfa(DfaMatcher::new(pattern)?),
            MatcherKind::FullCompare => {
                StringMatcher::FullCompare(FullCompareMatcher::new(pattern)?)
            }
            MatcherKind::SubstringBlock(b) => {
                StringMatcher::SubstringBlock(SubstringBlockMatcher::new(pattern, b)?)
            }
        })
    }

    #[inline]
    pub fn step(&mut self, byte: u8) -> bool {
        match self {
            StringMatcher::Dfa(m) => m.step(byte),
            StringMatcher::FullCompare(m) => m.step(byte),
            StringMatcher::SubstringBlock(m) => m.step(byte),
        }
    }

    #[inline]
    pub fn step_event(&mut self, event: &ScanEvent) -> bool {
        self.step(event.byte)
    }

    pub fn latched(&self) -> bool {
        match self {
            StringMatcher::Dfa(m) => m.latched,
            StringMatcher::FullCompare(m) => m.latched,
            StringMatcher::SubstringBlock(m) => m.latched,
        }
    }

    pub fn reset(&mut self) {
        match self {
            StringMatcher::Dfa(m) => m.reset(),
            StringMatcher::FullCompare(m) => m.reset(),
            StringMatcher::SubstringBlock(m) => m.reset(),
        }
    }

    /// Steps through `input`, calling `on_fire` with the offset of every
    /// firing byte until it returns false.
    #[inline]
    pub fn scan(&mut self, input: &[u8], mut on_fire: impl FnMut(usize) -> bool) {
        fn run(
            input: &[u8],
            on_fire: &mut impl FnMut(usize) -> bool,
            mut step: impl FnMut(u8) -> bool,
        ) {
            for (i, &b) in input.iter().enumerate() {
                if step(b) && !on_fire(i) {
                    return;
                }
            }
        }
        match self {
            StringMatcher::Dfa(m) => run(input, &mut on_fire, |b| m.step(b)),
            StringMatcher::FullCompare(m) => run(input, &mut on_fire, |b| m.step(b)),
            StringMatcher::SubstringBlock(m) => m.scan(input, &mut on_fire),
        }
    }

    /// True if any byte of `input` fires, starting from a reset state.
    pub fn search(&mut self, input: &[u8]) -> bool {
        self.reset();
        for &b in input {
            self.step(b);
        }
        self.latched()
    }
}

/// Pattern plus variant, rendered as `s1(temperature)`, `sN(...)` for the
/// full compare and `sD(...)` for the automaton.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StringSpec {
    pub pattern: Vec<u8>,
    pub kind: MatcherKind,
}

impl fmt::Display for StringSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pattern = String::from_utf8_lossy(&self.pattern);
        match self.kind {
            MatcherKind::Dfa => write!(f, "sD({pattern})"),
            MatcherKind::FullCompare => write!(f, "sN({pattern})"),
            MatcherKind::SubstringBlock(b) => write!(f, "s{b}({pattern})"),
        }
    }
}
