//! Property tests over the filter, the matchers and the range automata.

mod common;

use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rawfilter::decimal::Decimal;
use rawfilter::filter::{compile_filter, BlockLen, FilterConfig, LeafConfig, Mode};
use rawfilter::oracle::label_record;
use rawfilter::query::{parse_query, QueryAst};
use rawfilter::range::{NumberKind, NumericBound, RangeDfa};
use rawfilter::scanner::{scan, segment_records};
use rawfilter::string_match::{MatcherKind, StringMatcher};

use common::{Fuzzer, Shape};

const Q3: &str =
    r#"(0.7 <= "temperature" <= 35.1) AND (20.3 <= "humidity" <= 69.1) AND (0 <= "light" <= 5153)"#;
const Q_OR: &str =
    r#"(0.7 <= "temperature" <= 35.1) OR (20.3 <= "humidity" <= 69.1) AND ("light" <= 5153)"#;

fn fuzz(shape: Shape, seed: u64, n: usize) -> Vec<String> {
    let mut fz = Fuzzer::new(
        ChaCha8Rng::seed_from_u64(seed),
        &["temperature", "humidity", "light"],
        &["0.7", "35.1", "20.3", "69.1", "0", "5153"],
    );
    fz.planted = vec![
        (
            "temperature".into(),
            vec!["0.7".into(), "35.1".into(), "12".into()],
        ),
        (
            "humidity".into(),
            vec!["20.3".into(), "69.1".into(), "45".into()],
        ),
        ("light".into(), vec!["0".into(), "5153".into(), "-0".into()]),
    ];
    fz.plant_rate = 0.3;
    (0..n).map(|_| fz.record(shape)).collect()
}

const ALL_LEAVES: [LeafConfig; 14] = {
    let mut out = [LeafConfig::OMIT; 14];
    out[1] = LeafConfig::VALUE_ONLY;
    let modes = [Mode::Flat, Mode::Scoped, Mode::KeyValue];
    let blocks = [
        BlockLen::Bytes(1),
        BlockLen::Bytes(2),
        BlockLen::Full,
        BlockLen::Dfa,
    ];
    let mut i = 0;
    while i < 12 {
        out[2 + i] = LeafConfig {
            mode: modes[i / 4],
            block: Some(blocks[i % 4]),
        };
        i += 1;
    }
    out
};

fn random_config(rng: &mut ChaCha8Rng, q: &QueryAst) -> FilterConfig {
    loop {
        let leaves = (0..q.leaf_count())
            .map(|_| *ALL_LEAVES.choose(rng).unwrap())
            .collect();
        if let Ok(cfg) = FilterConfig::new(q, leaves) {
            return cfg;
        }
    }
}

fn accepts(q: &QueryAst, cfg: &FilterConfig, records: &[String]) -> Vec<bool> {
    let expr = compile_filter(q, cfg).unwrap();
    let mut state = expr.new_state();
    records
        .iter()
        .map(|r| expr.filter_record(&mut state, r.as_bytes()))
        .collect()
}

#[test]
fn record_scan_agrees_with_event_stream() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for text in [Q3, Q_OR] {
        let q = parse_query(text).unwrap();
        for (shape, seed) in [(Shape::SenMl, 11), (Shape::Flat, 12)] {
            let records = fuzz(shape, seed, 300);
            let events: Vec<_> = records.iter().map(|r| scan(r.as_bytes())).collect();
            for _ in 0..150 {
                let cfg = random_config(&mut rng, &q);
                let expr = compile_filter(&q, &cfg).unwrap();
                let mut a = expr.new_state();
                let mut b = expr.new_state();
                for (r, ev) in records.iter().zip(&events) {
                    let fast = expr.filter_record(&mut a, r.as_bytes());
                    let slow = expr.filter_events(&mut b, ev);
                    assert_eq!(fast, slow, "{} on {r}", cfg.to_text());
                }
            }
        }
    }
}

#[test]
fn disjunctive_query_has_no_false_negatives() {
    let q = parse_query(Q_OR).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (shape, seed) in [(Shape::SenMl, 21), (Shape::Flat, 22)] {
        let records = fuzz(shape, seed, 2000);
        let labels: Vec<bool> = records
            .iter()
            .map(|r| label_record(&q, r.as_bytes()).0)
            .collect();
        assert!(labels.iter().filter(|&&l| l).count() > 100);
        let mut tried = 0;
        while tried < 60 {
            let cfg = random_config(&mut rng, &q);
            // Segment co-occurrence does not hold across SenML object fields.
            if shape == Shape::SenMl && cfg.leaves.iter().any(|(_, l)| l.mode == Mode::KeyValue) {
                continue;
            }
            tried += 1;
            let got = accepts(&q, &cfg, &records);
            for (i, (&label, &acc)) in labels.iter().zip(&got).enumerate() {
                assert!(!label || acc, "{} missed {}", cfg.to_text(), records[i]);
            }
        }
    }
}

#[test]
fn stronger_leaf_configs_accept_subsets() {
    let q = parse_query(r#"(0.7 <= "temperature" <= 35.1)"#).unwrap();
    let chains: [&[LeafConfig]; 2] = [
        &[
            LeafConfig::with_string(Mode::Scoped, BlockLen::Full),
            LeafConfig::with_string(Mode::Flat, BlockLen::Full),
            LeafConfig::VALUE_ONLY,
        ],
        &[
            LeafConfig::with_string(Mode::Flat, BlockLen::Dfa),
            LeafConfig::with_string(Mode::Flat, BlockLen::Bytes(3)),
            LeafConfig::with_string(Mode::Flat, BlockLen::Bytes(2)),
            LeafConfig::with_string(Mode::Flat, BlockLen::Bytes(1)),
            LeafConfig::VALUE_ONLY,
        ],
    ];
    for shape in [Shape::SenMl, Shape::Flat] {
        let records = fuzz(shape, 31, 3000);
        for chain in chains {
            let sets: Vec<Vec<bool>> = chain
                .iter()
                .map(|&l| accepts(&q, &FilterConfig::new(&q, vec![l]).unwrap(), &records))
                .collect();
            for pair in sets.windows(2) {
                assert!(pair[0].iter().zip(&pair[1]).all(|(&s, &w)| !s || w));
            }
        }
    }
}

#[test]
fn adding_a_conjunct_never_raises_acceptance() {
    let q = parse_query(Q3).unwrap();
    let records = fuzz(Shape::SenMl, 41, 2000);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let cfg = random_config(&mut rng, &q);
        let omitted: Vec<usize> = (0..3)
            .filter(|&i| cfg.leaves[i].1 == LeafConfig::OMIT)
            .collect();
        let Some(&leaf) = omitted.choose(&mut rng) else {
            continue;
        };
        let mut grown = cfg.clone();
        grown.set(leaf, LeafConfig::VALUE_ONLY);
        let before = accepts(&q, &cfg, &records);
        let after = accepts(&q, &grown, &records);
        assert!(after.iter().zip(&before).all(|(&a, &b)| !a || b));
    }
}

#[test]
fn segmentation_recovers_concatenated_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let records = fuzz(Shape::Flat, 52, 500);
    let mut stream = String::new();
    let mut starts = Vec::new();
    for r in &records {
        for _ in 0..rng.random_range(0..3) {
            stream.push(*[' ', '\n', '\t', '\r'].choose(&mut rng).unwrap());
        }
        starts.push(stream.len());
        stream.push_str(r);
    }
    let spans = segment_records(stream.as_bytes());
    assert_eq!(spans.len(), records.len());
    for ((span, r), start) in spans.iter().zip(&records).zip(starts) {
        assert!(!span.malformed);
        assert_eq!(
            (span.start, &stream[span.start..span.end]),
            (start, r.as_str())
        );
    }
}

fn decimal_text(max_int: u32, frac: usize) -> impl Strategy<Value = String> {
    (
        any::<bool>(),
        0..=max_int,
        proptest::collection::vec(0u8..10, frac),
    )
        .prop_map(|(neg, int, digits)| {
            let mut s = String::new();
            if neg {
                s.push('-');
            }
            s.push_str(&int.to_string());
            if !digits.is_empty() {
                s.push('.');
                s.extend(digits.iter().map(|d| char::from(b'0' + d)));
            }
            s
        })
}

fn bound_pair(frac: usize) -> impl Strategy<Value = (Option<String>, Option<String>)> {
    (
        proptest::option::weighted(0.85, decimal_text(99_999, frac)),
        proptest::option::weighted(0.85, decimal_text(99_999, frac)),
    )
        .prop_filter("one side", |(l, u)| l.is_some() || u.is_some())
        .prop_map(|(l, u)| match (l, u) {
            (Some(l), Some(u)) if num(&l) > num(&u) => (Some(u), Some(l)),
            pair => pair,
        })
}

fn num(text: &str) -> Decimal {
    Decimal::parse_plain(text).unwrap()
}

fn dfa_for(kind: NumberKind, bounds: &(Option<String>, Option<String>)) -> RangeDfa {
    let bound = NumericBound::with_kind(kind, bounds.0.as_deref(), bounds.1.as_deref()).unwrap();
    RangeDfa::new(bound)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    #[test]
    fn integer_automaton_is_exact_on_integers(
        bounds in bound_pair(0),
        tokens in proptest::collection::vec(decimal_text(200_000, 0), 64),
    ) {
        let dfa = dfa_for(NumberKind::Integer, &bounds);
        for t in &tokens {
            let v = Decimal::parse_plain(t).unwrap();
            prop_assert_eq!(dfa.matches_token(t.as_bytes()), dfa.bound().contains(&v), "{}", t);
        }
    }

    #[test]
    fn integer_automaton_accepts_in_range_decimals(
        bounds in bound_pair(0),
        tokens in proptest::collection::vec((0usize..4).prop_flat_map(|f| decimal_text(200_000, f)), 64),
    ) {
        let dfa = dfa_for(NumberKind::Integer, &bounds);
        for t in &tokens {
            let v = Decimal::parse_plain(t).unwrap();
            if dfa.bound().contains(&v) {
                prop_assert!(dfa.matches_token(t.as_bytes()), "{}", t);
            }
        }
    }

    #[test]
    fn decimal_automaton_is_exact_on_plain_numbers(
        bounds in (0usize..3).prop_flat_map(bound_pair),
        tokens in proptest::collection::vec((0usize..4).prop_flat_map(|f| decimal_text(200_000, f)), 64),
    ) {
        let dfa = dfa_for(NumberKind::Decimal, &bounds);
        for t in &tokens {
            let v = Decimal::parse_plain(t).unwrap();
            prop_assert_eq!(dfa.matches_token(t.as_bytes()), dfa.bound().contains(&v), "{}", t);
        }
    }

    #[test]
    fn block_matchers_form_a_superset_chain(
        pattern in proptest::collection::vec(prop::sample::select(b"abcd".to_vec()), 1..8),
        text in proptest::collection::vec(prop::sample::select(b"abcd\"".to_vec()), 0..200),
    ) {
        let n = pattern.len();
        let mut kinds = vec![MatcherKind::Dfa, MatcherKind::FullCompare];
        kinds.extend((1..=n).rev().map(MatcherKind::SubstringBlock));
        let mut matchers: Vec<StringMatcher> =
            kinds.iter().map(|&k| StringMatcher::new(&pattern, k).unwrap()).collect();
        for &b in &text {
            let out: Vec<bool> = matchers.iter_mut().map(|m| m.step(b)).collect();
            prop_assert_eq!(out[0], out[1]);
            for w in out.windows(2) {
                prop_assert!(!w[0] || w[1], "{:?}", out);
            }
        }
    }
}

#[test]
fn exponent_tokens_in_range_are_accepted() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let dfa = RangeDfa::new(NumericBound::new(Some("0.7"), Some("35.1")).unwrap());
    for _ in 0..5000 {
        let mantissa: u32 = rng.random_range(1..100_000);
        let exp: i32 = rng.random_range(-8..4);
        let digits = mantissa.to_string();
        let token = format!("{}.{}e{exp}", &digits[..1], &digits[1..]);
        let token = token.replace(".e", "e");
        let v: f64 = token.parse().unwrap();
        if (0.7..=35.1).contains(&v) {
            assert!(dfa.matches_token(token.as_bytes()), "{token}");
        }
    }
}
