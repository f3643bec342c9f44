//! Number-range primitive.
//!
//! A closed interval is turned into a regular expression over decimal
//! representations by digit-wise interval refinement, the expression is
//! compiled to a minimal DFA, and number tokens in the byte stream are run
//! through it. A token ends at the first byte outside `[0-9+\-.eE]`; at that
//! point the primitive fires if the DFA sits in an accepting state, or if the
//! token has an exponent after a digit, which is accepted unconditionally.

use std::cmp::Ordering;
use std::fmt;

use crate::automaton::{
    symbol_of, Dfa, Nfa, Regex, SymbolSet, SYM_DOT, SYM_EXP, SYM_MINUS, SYM_OTHER,
};
use crate::decimal::Decimal;
use crate::error::{Error, Result};
use crate::scanner::ScanEvent;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumberKind {
    Integer,
    Decimal,
}

/// Bounds of a range predicate, both inclusive. At least one is present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumericBound {
    kind: NumberKind,
    lower: Option<(Decimal, String)>,
    upper: Option<(Decimal, String)>,
}

fn parse_literal(text: &str) -> Result<Decimal> {
    Decimal::parse_plain(text).map_err(|e| Error::InvalidBound {
        literal: text.to_string(),
        message: e.to_string(),
    })
}

impl NumericBound {
    /// Kind is `Decimal` when any literal has a fraction part.
    pub fn new(lower: Option<&str>, upper: Option<&str>) -> Result<Self> {
        let kind = if lower.into_iter().chain(upper).any(|t| t.contains('.')) {
            NumberKind::Decimal
        } else {
            NumberKind::Integer
        };
        NumericBound::with_kind(kind, lower, upper)
    }

    pub fn with_kind(kind: NumberKind, lower: Option<&str>, upper: Option<&str>) -> Result<Self> {
        if lower.is_none() && upper.is_none() {
            return Err(Error::InvalidBound {
                literal: String::new(),
                message: "at least one bound is required".into(),
            });
        }
        let lower = lower
            .map(|t| parse_literal(t).map(|v| (v, t.to_string())))
            .transpose()?;
        let upper = upper
            .map(|t| parse_literal(t).map(|v| (v, t.to_string())))
            .transpose()?;
        if kind == NumberKind::Integer {
            for (value, text) in lower.iter().chain(upper.iter()) {
                if value.scale() > 0 {
                    return Err(Error::InvalidBound {
                        literal: text.clone(),
                        message: "integer bound with a fraction part".into(),
                    });
                }
            }
        }
        if let (Some((l, lt)), Some((u, ut))) = (&lower, &upper) {
            if l > u {
                return Err(Error::EmptyInterval {
                    lower: lt.clone(),
                    upper: ut.clone(),
                });
            }
        }
        Ok(NumericBound { kind, lower, upper })
    }

    pub fn kind(&self) -> NumberKind {
        self.kind
    }

    pub fn lower(&self) -> Option<&Decimal> {
        self.lower.as_ref().map(|(v, _)| v)
    }

    pub fn upper(&self) -> Option<&Decimal> {
        self.upper.as_ref().map(|(v, _)| v)
    }

    /// Lower bound with the literal it was written as.
    pub fn lower_text(&self) -> Option<(&Decimal, &str)> {
        self.lower.as_ref().map(|(v, t)| (v, t.as_str()))
    }

    pub fn upper_text(&self) -> Option<(&Decimal, &str)> {
        self.upper.as_ref().map(|(v, t)| (v, t.as_str()))
    }

    pub fn contains(&self, value: &Decimal) -> bool {
        self.lower().is_none_or(|l| l <= value) && self.upper().is_none_or(|u| value <= u)
    }
}

impl fmt::Display for NumericBound {
    /// `0.7<=f<=35.1`, `i>=35`, `i<=49`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = match self.kind {
            NumberKind::Integer => "i",
            NumberKind::Decimal => "f",
        };
        match (&self.lower, &self.upper) {
            (Some((_, l)), Some((_, u))) => write!(f, "{l}<={var}<={u}"),
            (Some((_, l)), None) => write!(f, "{var}>={l}"),
            (None, Some((_, u))) => write!(f, "{var}<={u}"),
            (None, None) => unreachable!("bound without limits"),
        }
    }
}

// Canonical magnitudes: digits without leading zeros, zero is empty.

fn cmp_canonical(a: &[u8], b: &[u8]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn increment(digits: &[u8]) -> Vec<u8> {
    let mut out = digits.to_vec();
    for d in out.iter_mut().rev() {
        if *d == 9 {
            *d = 0;
        } else {
            *d += 1;
            return out;
        }
    }
    out.insert(0, 1);
    out
}

/// Requires a nonzero input.
fn decrement(digits: &[u8]) -> Vec<u8> {
    let mut out = digits.to_vec();
    for d in out.iter_mut().rev() {
        if *d == 0 {
            *d = 9;
        } else {
            *d -= 1;
            break;
        }
    }
    let lead = out.iter().take_while(|&&d| d == 0).count();
    out.drain(..lead);
    out
}

/// Fixed-length digit strings `s` with `lo <= s <= hi` (lexicographic, equal
/// lengths, `lo <= hi`).
fn same_length_range(lo: &[u8], hi: &[u8]) -> Regex {
    if lo.is_empty() {
        return Regex::Epsilon;
    }
    if lo == hi {
        return Regex::literal(lo);
    }
    let rest = lo.len() - 1;
    let (l0, h0) = (lo[0], hi[0]);
    if l0 == h0 {
        return Regex::concat(vec![
            Regex::digit(l0),
            same_length_range(&lo[1..], &hi[1..]),
        ]);
    }
    let lo_open = lo[1..].iter().all(|&d| d == 0);
    let hi_open = hi[1..].iter().all(|&d| d == 9);
    let mid_lo = if lo_open { l0 } else { l0 + 1 };
    let mid_hi = if hi_open { h0 } else { h0 - 1 };
    let mut alts = Vec::new();
    if !lo_open {
        alts.push(Regex::concat(vec![
            Regex::digit(l0),
            same_length_range(&lo[1..], &vec![9; rest]),
        ]));
    }
    alts.push(Regex::concat(vec![
        Regex::digits(mid_lo, mid_hi),
        Regex::repeat(Regex::any_digit(), rest),
    ]));
    if !hi_open {
        alts.push(Regex::concat(vec![
            Regex::digit(h0),
            same_length_range(&vec![0; rest], &hi[1..]),
        ]));
    }
    Regex::alt(alts)
}

/// Canonical integers in `[lo, hi]`; `hi = None` is unbounded. Zero is the
/// empty string.
fn integer_range(lo: &[u8], hi: Option<&[u8]>) -> Regex {
    if let Some(hi) = hi {
        if cmp_canonical(lo, hi) == Ordering::Greater {
            return Regex::Empty;
        }
    }
    let mut alts = Vec::new();
    let lo: Vec<u8> = if lo.is_empty() {
        alts.push(Regex::Epsilon);
        vec![1]
    } else {
        lo.to_vec()
    };
    let la = lo.len();
    match hi {
        Some([]) => {}
        Some(hi) if la == hi.len() => {
            if cmp_canonical(&lo, hi) != Ordering::Greater {
                alts.push(same_length_range(&lo, hi));
            }
        }
        Some(hi) => {
            alts.push(same_length_range(&lo, &vec![9; la]));
            for len in la + 1..hi.len() {
                alts.push(Regex::concat(vec![
                    Regex::digits(1, 9),
                    Regex::repeat(Regex::any_digit(), len - 1),
                ]));
            }
            let mut first = vec![0; hi.len()];
            first[0] = 1;
            alts.push(same_length_range(&first, hi));
        }
        None => {
            alts.push(same_length_range(&lo, &vec![9; la]));
            alts.push(Regex::concat(vec![
                Regex::digits(1, 9),
                Regex::repeat(Regex::any_digit(), la),
                Regex::star(Regex::any_digit()),
            ]));
        }
    }
    Regex::alt(alts)
}

fn dot() -> Regex {
    Regex::Set(SymbolSet::single(SYM_DOT))
}

fn any_fraction() -> Regex {
    Regex::optional(Regex::concat(vec![dot(), Regex::star(Regex::any_digit())]))
}

/// Fraction digit strings `f` with `0.f >= 0.s`; `s` has no trailing zeros.
fn fraction_at_least(s: &[u8]) -> Regex {
    match s.split_first() {
        None => Regex::star(Regex::any_digit()),
        Some((&first, rest)) => Regex::alt(vec![
            Regex::concat(vec![
                Regex::digits(first + 1, 9),
                Regex::star(Regex::any_digit()),
            ]),
            Regex::concat(vec![Regex::digit(first), fraction_at_least(rest)]),
        ]),
    }
}

/// Fraction digit strings `f` with `0.f <= 0.s`.
fn fraction_at_most(s: &[u8]) -> Regex {
    match s.split_first() {
        None => Regex::star(Regex::digit(0)),
        Some((&first, rest)) => Regex::alt(vec![
            Regex::Epsilon,
            if first > 0 {
                Regex::concat(vec![
                    Regex::digits(0, first - 1),
                    Regex::star(Regex::any_digit()),
                ])
            } else {
                Regex::Empty
            },
            Regex::concat(vec![Regex::digit(first), fraction_at_most(rest)]),
        ]),
    }
}

/// Fraction digit strings between `0.lo` and `0.hi`; `lo` is nonzero.
fn fraction_between(lo: &[u8], hi: &[u8]) -> Regex {
    let (l0, lrest) = (lo[0], &lo[1..]);
    let h0 = hi.first().copied().unwrap_or(0);
    let hrest = hi.get(1..).unwrap_or(&[]);
    if l0 == h0 {
        let tail = if lrest.is_empty() {
            fraction_at_most(hrest)
        } else {
            fraction_between(lrest, hrest)
        };
        return Regex::concat(vec![Regex::digit(l0), tail]);
    }
    Regex::alt(vec![
        Regex::concat(vec![Regex::digit(l0), fraction_at_least(lrest)]),
        if h0 > l0 + 1 {
            Regex::concat(vec![
                Regex::digits(l0 + 1, h0 - 1),
                Regex::star(Regex::any_digit()),
            ])
        } else {
            Regex::Empty
        },
        Regex::concat(vec![Regex::digit(h0), fraction_at_most(hrest)]),
    ])
}

/// Unsigned representations (leading zeros excluded) of values in
/// `[lo, hi]`, both nonnegative.
fn magnitude_range(kind: NumberKind, lo: &Decimal, hi: Option<&Decimal>) -> Regex {
    let lo_int = lo.int_digits();
    let hi_int = hi.map(|h| h.int_digits());
    if kind == NumberKind::Integer {
        return integer_range(&lo_int, hi_int.as_deref());
    }
    let lo_frac = lo.frac_digits();
    let hi_frac = hi.map(|h| h.frac_digits());

    if let (Some(hi_int), Some(hi_frac)) = (&hi_int, &hi_frac) {
        if *hi_int == lo_int {
            let fraction = if lo_frac.is_empty() {
                Regex::optional(Regex::concat(vec![dot(), fraction_at_most(hi_frac)]))
            } else {
                Regex::concat(vec![dot(), fraction_between(&lo_frac, hi_frac)])
            };
            return Regex::concat(vec![Regex::literal(&lo_int), fraction]);
        }
    }

    let mut alts = Vec::new();
    let lo_fraction = if lo_frac.is_empty() {
        any_fraction()
    } else {
        Regex::concat(vec![dot(), fraction_at_least(&lo_frac)])
    };
    alts.push(Regex::concat(vec![Regex::literal(&lo_int), lo_fraction]));
    let inner_lo = increment(&lo_int);
    match (&hi_int, &hi_frac) {
        (Some(hi_int), Some(hi_frac)) => {
            let inner_hi = decrement(hi_int);
            alts.push(Regex::concat(vec![
                integer_range(&inner_lo, Some(&inner_hi)),
                any_fraction(),
            ]));
            alts.push(Regex::concat(vec![
                Regex::literal(hi_int),
                Regex::optional(Regex::concat(vec![dot(), fraction_at_most(hi_frac)])),
            ]));
        }
        _ => alts.push(Regex::concat(vec![
            integer_range(&inner_lo, None),
            any_fraction(),
        ])),
    }
    Regex::alt(alts)
}

/// Regular expression accepting the decimal representations of the values
/// inside `bound`. Leading zeros are tolerated, and for decimal bounds the
/// fraction is compared by value, so `35.10` is accepted under `u = 35.1`.
///
/// Negative values are handled by a separate `-`-prefixed branch over
/// magnitudes. Exponent forms are not part of the language.
pub fn derive_range_regex(bound: &NumericBound) -> Regex {
    let zero = Decimal::zero();
    let zeros = || Regex::star(Regex::digit(0));

    let positive = if bound.upper().is_none_or(|u| !u.is_negative()) {
        let lo = match bound.lower() {
            Some(l) if !l.is_negative() => l.clone(),
            _ => zero.clone(),
        };
        Regex::concat(vec![
            zeros(),
            magnitude_range(bound.kind, &lo, bound.upper()),
        ])
    } else {
        Regex::Empty
    };

    let negative = if bound.lower().is_none_or(|l| l <= &zero) {
        let lo = match bound.upper() {
            Some(u) if u.is_negative() => u.negated(),
            _ => zero.clone(),
        };
        let hi = bound.lower().map(Decimal::negated);
        Regex::concat(vec![
            Regex::Set(SymbolSet::single(SYM_MINUS)),
            zeros(),
            magnitude_range(bound.kind, &lo, hi.as_ref()),
        ])
    } else {
        Regex::Empty
    };

    Regex::alt(vec![positive, negative])
}

/// Compiled range primitive.
#[derive(Clone, Debug)]
pub struct RangeDfa {
    bound: NumericBound,
    regex: Regex,
    dfa: Dfa,
    nfa_states: usize,
    subset_states: usize,
}

impl RangeDfa {
    pub fn new(bound: NumericBound) -> RangeDfa {
        let regex = derive_range_regex(&bound);
        let nfa = Nfa::from_regex(&regex);
        let subset = Dfa::from_nfa(&nfa);
        let dfa = subset.minimize();
        RangeDfa {
            bound,
            regex,
            nfa_states: nfa.state_count(),
            subset_states: subset.state_count(),
            dfa,
        }
    }

    pub fn bound(&self) -> &NumericBound {
        &self.bound
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    /// Live states of the minimized DFA (the dead sink is not counted).
    pub fn state_count(&self) -> usize {
        self.dfa.live_state_count()
    }

    pub fn input_classes(&self) -> usize {
        self.dfa.input_classes()
    }

    pub fn nfa_state_count(&self) -> usize {
        self.nfa_states
    }

    pub fn unminimized_state_count(&self) -> usize {
        self.subset_states
    }

    /// Runs one complete token (no delimiters) through a fresh scanner.
    #[inline]
    pub fn matches_token(&self, token: &[u8]) -> bool {
        let mut scanner = NumberScanner::new(self);
        for &b in token {
            debug_assert!(symbol_of(b) != SYM_OTHER);
            scanner.push(self, b, Site::default());
        }
        scanner.finish(self).is_some()
    }
}

/// Where a token started: the scope and segment its fire is attributed to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Site {
    pub offset: usize,
    pub scope_id: u32,
    pub segment: u32,
}

/// Per-record token state of a range primitive.
#[derive(Clone, Debug)]
pub struct NumberScanner {
    state: u32,
    in_token: bool,
    saw_digit: bool,
    saw_exponent_after_digit: bool,
    /// Integer bounds only: verdict taken at the decimal point. Any value
    /// inside an integer interval has its truncated integer part inside it
    /// too, so the fraction can be skipped.
    frozen: Option<bool>,
    site: Site,
}

impl NumberScanner {
    pub fn new(dfa: &RangeDfa) -> NumberScanner {
        NumberScanner {
            state: dfa.dfa.start(),
            in_token: false,
            saw_digit: false,
            saw_exponent_after_digit: false,
            frozen: None,
            site: Site::default(),
        }
    }

    pub fn reset(&mut self, dfa: &RangeDfa) {
        *self = NumberScanner::new(dfa);
    }

    pub fn in_token(&self) -> bool {
        self.in_token
    }

    pub fn is_fresh(&self, dfa: &RangeDfa) -> bool {
        !self.in_token
            && !self.saw_digit
            && !self.saw_exponent_after_digit
            && self.frozen.is_none()
            && self.state == dfa.dfa.start()
    }

    /// Advances by one event. Returns the token's site when a token ends on
    /// this byte and the primitive fires.
    #[inline]
    pub fn step(&mut self, dfa: &RangeDfa, event: &ScanEvent) -> Option<Site> {
        self.push(
            dfa,
            event.byte,
            Site {
                offset: event.offset,
                scope_id: event.scope_id,
                segment: event.segment,
            },
        )
    }

    #[inline]
    fn push(&mut self, dfa: &RangeDfa, byte: u8, site: Site) -> Option<Site> {
        let symbol = symbol_of(byte);
        if symbol == SYM_OTHER {
            return self.finish(dfa);
        }
        if !self.in_token {
            self.in_token = true;
            self.site = site;
        }
        match symbol {
            0..=9 => self.saw_digit = true,
            SYM_EXP if self.saw_digit => self.saw_exponent_after_digit = true,
            SYM_DOT
                if dfa.bound.kind == NumberKind::Integer
                    && self.saw_digit
                    && self.frozen.is_none() =>
            {
                self.frozen = Some(dfa.dfa.is_accepting(self.state));
            }
            _ => {}
        }
        if self.frozen.is_none() {
            self.state = dfa.dfa.step(self.state, symbol);
        }
        None
    }

    /// Ends the current token, if any, as if a delimiter had been seen.
    #[inline]
    pub fn finish(&mut self, dfa: &RangeDfa) -> Option<Site> {
        if !self.in_token {
            return None;
        }
        let fired = self.saw_digit
            && (self.saw_exponent_after_digit
                || self
                    .frozen
                    .unwrap_or_else(|| dfa.dfa.is_accepting(self.state)));
        let site = self.site;
        self.reset(dfa);
        fired.then_some(site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn range(lower: Option<&str>, upper: Option<&str>) -> RangeDfa {
        RangeDfa::new(NumericBound::new(lower, upper).unwrap())
    }

    #[test]
    fn lower_bound_35_matches_the_five_state_machine() {
        let dfa = range(Some("35"), None);
        assert_eq!(
            dfa.regex().to_string(),
            "0*(3[5-9]|[4-9][0-9]|[1-9][0-9][0-9]+)"
        );
        assert_eq!(dfa.state_count(), 5);
        for t in ["35", "36", "99", "340", "120", "70", "035", "1000000"] {
            assert!(dfa.matches_token(t.as_bytes()), "{t}");
        }
        for t in ["34", "12", "7", "0", "29", "-40", "3", "00"] {
            assert!(!dfa.matches_token(t.as_bytes()), "{t}");
        }
        let d = dfa.dfa();
        // s0 --3--> s1 --5..9--> acc, s0 --0--> s0
        let s0 = d.start();
        assert_eq!(d.step(s0, 0), s0);
        let s1 = d.step(s0, 3);
        let acc = d.step(s1, 5);
        assert!(d.is_accepting(acc));
        assert!((0..10).all(|k| d.step(acc, k) == acc));
        let s2 = d.step(s0, 1);
        assert_eq!(d.step(s0, 2), s2);
        let s3 = d.step(s0, 4);
        assert!((0..10).all(|k| d.step(s2, k) == s3));
        assert!((0..5).all(|k| d.step(s1, k) == s3));
        assert!((0..10).all(|k| d.step(s3, k) == acc));
        assert_eq!(
            [s0, s1, s2, s3, acc]
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len(),
            5
        );
    }

    #[test]
    fn point_interval() {
        let dfa = range(Some("7"), Some("7"));
        assert!(dfa.matches_token(b"7"));
        assert!(dfa.matches_token(b"07"));
        assert!(!dfa.matches_token(b"70"));
        assert!(!dfa.matches_token(b"6"));
    }

    #[test]
    fn decimal_interval_uses_value_semantics() {
        let dfa = range(Some("0.7"), Some("35.1"));
        for t in ["12", "0.7", "35.1", "35.0", "35.10", "0.70", "1.", "20.999"] {
            assert!(dfa.matches_token(t.as_bytes()), "{t}");
        }
        for t in ["35.2", "0.65", "35.11", "0.69999", "36", "-1", "0"] {
            assert!(!dfa.matches_token(t.as_bytes()), "{t}");
        }
    }

    #[test]
    fn negative_bounds_split_by_sign() {
        let dfa = range(Some("-12.5"), Some("43.1"));
        for t in ["-12.5", "-12", "-0.1", "0", "-0", "43.1", "7"] {
            assert!(dfa.matches_token(t.as_bytes()), "{t}");
        }
        for t in ["-12.51", "-13", "43.2", "-", "--1"] {
            assert!(!dfa.matches_token(t.as_bytes()), "{t}");
        }
        let only_negative = range(Some("-20"), Some("-10"));
        assert!(only_negative.matches_token(b"-15"));
        assert!(!only_negative.matches_token(b"15"));
        assert!(!only_negative.matches_token(b"-9"));
    }

    #[test]
    fn exponent_forms_always_fire() {
        let dfa = range(Some("35"), Some("36"));
        for t in ["2.1e3", "1e+1", "100e-1", "5E5", "0e0"] {
            assert!(dfa.matches_token(t.as_bytes()), "{t}");
        }
        assert!(!dfa.matches_token(b"e5"));
    }

    #[test]
    fn integer_bounds_truncate_fractions() {
        let dfa = range(Some("12"), Some("49"));
        assert!(dfa.matches_token(b"48.7"));
        assert!(dfa.matches_token(b"12.0"));
        assert!(!dfa.matches_token(b"11.9"));
        assert!(!dfa.matches_token(b"50.1"));
    }

    #[test]
    fn plus_sign_is_rejected_without_exponent() {
        let dfa = range(Some("0"), Some("100"));
        assert!(!dfa.matches_token(b"+5"));
        assert!(dfa.matches_token(b"5e+1"));
    }

    #[test]
    fn token_scanning_over_events() {
        let dfa = range(Some("35"), None);
        let stream = br#"{"v":"35","w":"34","x":340}"#;
        let events = crate::scanner::scan(stream);
        let mut scanner = NumberScanner::new(&dfa);
        let fired: Vec<usize> = events
            .iter()
            .filter_map(|e| scanner.step(&dfa, e).map(|_| e.offset))
            .collect();
        // closing quote of "35" and the closing brace after 340
        assert_eq!(fired, [8, stream.len() - 1]);
        assert!(scanner.is_fresh(&dfa));
    }

    #[test]
    fn fire_is_attributed_to_the_token_scope() {
        let dfa = range(Some("1"), Some("9"));
        let stream = br#"{"a":{"v":5},"b":0}"#;
        let events = crate::scanner::scan(stream);
        let mut scanner = NumberScanner::new(&dfa);
        let sites: Vec<Site> = events
            .iter()
            .filter_map(|e| scanner.step(&dfa, e))
            .collect();
        assert_eq!(sites.len(), 1);
        let five = stream.iter().position(|&b| b == b'5').unwrap();
        assert_eq!(sites[0].scope_id, events[five].scope_id);
        assert_eq!(sites[0].offset, five);
    }

    #[test]
    fn bound_errors() {
        assert!(matches!(
            NumericBound::new(Some("1"), Some("0")),
            Err(Error::EmptyInterval { .. })
        ));
        assert!(NumericBound::new(Some("1e3"), None).is_err());
        assert!(NumericBound::new(Some("abc"), None).is_err());
        assert!(NumericBound::new(None, None).is_err());
        assert!(NumericBound::with_kind(NumberKind::Integer, Some("1.5"), None).is_err());
        assert_eq!(
            NumericBound::new(Some("0.7"), Some("35.1"))
                .unwrap()
                .to_string(),
            "0.7<=f<=35.1"
        );
    }

    #[test]
    fn one_sided_product_equals_direct_range() {
        for (lo, hi) in [
            ("35", "120"),
            ("0.7", "35.1"),
            ("-12.5", "43.1"),
            ("-20", "-3"),
            ("6.00", "201.00"),
        ] {
            let both = range(Some(lo), Some(hi));
            let lower = range(Some(lo), None);
            let upper = range(None, Some(hi));
            let product = lower.dfa().intersect(upper.dfa()).minimize();
            assert!(product.equivalent(both.dfa()), "[{lo}, {hi}]");
            assert_eq!(
                product,
                *both.dfa(),
                "canonical forms differ for [{lo}, {hi}]"
            );
        }
    }

    proptest! {
        // Any token a sign-aware decimal rendering of an in-range value fires.
        #[test]
        fn no_false_negatives_on_in_range_values(lo in -5000i64..5000, width in 0i64..5000, pick in 0.0f64..1.0, scale in 0u32..3) {
            let hi = lo + width;
            let lo_d = Decimal::from_scaled(lo as i128, scale);
            let hi_d = Decimal::from_scaled(hi as i128, scale);
            let dfa = range(Some(&lo_d.to_string()), Some(&hi_d.to_string()));
            let v = lo + ((width as f64) * pick) as i64;
            let value = Decimal::from_scaled(v as i128, scale);
            prop_assert!(dfa.bound().contains(&value));
            prop_assert!(dfa.matches_token(value.to_string().as_bytes()), "{} in {}", value, dfa.bound());
        }
    }
}
