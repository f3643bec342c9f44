//! Adversarial JSON record generator shared by the integration tests.

#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    SenMl,
    Flat,
}

/// Random well-formed records around a set of attributes and number anchors.
pub struct Fuzzer {
    pub rng: ChaCha8Rng,
    /// Query attributes.
    pub attrs: Vec<String>,
    /// Keys that share letters or prefixes with the attributes.
    pub decoys: Vec<String>,
    /// Interesting magnitudes, usually the query bounds.
    pub anchors: Vec<String>,
    /// Attributes with in-range values, all inserted into a record at once.
    pub planted: Vec<(String, Vec<String>)>,
    pub plant_rate: f64,
}

const JUNK_KEYS: &[&str] = &["u", "bt", "id", "meta", "tags", "x", "note", "e", "n", "v"];

impl Fuzzer {
    pub fn new(rng: ChaCha8Rng, attrs: &[&str], anchors: &[&str]) -> Fuzzer {
        let mut decoys = Vec::new();
        for a in attrs {
            let a = a.to_string();
            decoys.push(format!("{a}_raw"));
            decoys.push(format!("x{a}"));
            decoys.push(a[..a.len() - 1].to_string());
            let mut rev: Vec<char> = a.chars().collect();
            rev.reverse();
            decoys.push(rev.into_iter().collect());
            let mut swapped: Vec<char> = a.chars().collect();
            if swapped.len() > 2 {
                swapped.swap(1, 2);
            }
            let swapped: String = swapped.into_iter().collect();
            if swapped != a {
                decoys.push(swapped);
            }
        }
        decoys.retain(|d| !attrs.contains(&d.as_str()));
        Fuzzer {
            rng,
            attrs: attrs.iter().map(|s| s.to_string()).collect(),
            decoys,
            anchors: anchors.iter().map(|s| s.to_string()).collect(),
            planted: Vec::new(),
            plant_rate: 0.0,
        }
    }

    pub fn record(&mut self, shape: Shape) -> String {
        let mut out = String::new();
        match shape {
            Shape::SenMl => self.senml(&mut out),
            Shape::Flat => self.flat(&mut out, 0),
        }
        out
    }

    fn ws(&mut self, out: &mut String) {
        match self.rng.random_range(0..10) {
            0 => out.push(' '),
            1 => out.push_str(" \t "),
            2 => out.push_str("\r\n  "),
            _ => {}
        }
    }

    fn name(&mut self) -> String {
        match self.rng.random_range(0..10) {
            0..=4 => self.attrs.choose(&mut self.rng).unwrap().clone(),
            5..=7 => self.decoys.choose(&mut self.rng).unwrap().clone(),
            _ => JUNK_KEYS.choose(&mut self.rng).unwrap().to_string(),
        }
    }

    /// String contents with escapes, brackets and attribute names.
    pub fn string_body(&mut self, out: &mut String) {
        for _ in 0..self.rng.random_range(0..8) {
            let piece: &str = match self.rng.random_range(0..20) {
                0 => "\\\"",
                1 => "\\\\",
                2 => "\\n",
                3 => "\\/",
                4 => "\\u00e9",
                5 => "\\ud83d\\ude00",
                6 => "{",
                7 => "}[",
                8 => "]",
                9 => ",",
                10 => ":",
                11 => "\\\\\\\"",
                12 => "é",
                13 => " ",
                14 => "12.5",
                15 => "-3e2",
                16..=17 => {
                    let a = self.name();
                    out.push_str(&a);
                    continue;
                }
                _ => "ab",
            };
            out.push_str(piece);
        }
    }

    fn string(&mut self, out: &mut String) {
        out.push('"');
        self.string_body(out);
        out.push('"');
    }

    /// A JSON number token, usually close to an anchor.
    pub fn number(&mut self) -> String {
        let base = if self.rng.random_bool(0.7) && !self.anchors.is_empty() {
            self.anchors.choose(&mut self.rng).unwrap().clone()
        } else {
            self.rng.random_range(-500i64..30000).to_string()
        };
        let nudged = match self.rng.random_range(0..8) {
            0 | 1 => base,
            2 => nudge(&base, "0.01"),
            3 => nudge(&base, "-0.01"),
            4 => nudge(&base, "1"),
            5 => nudge(&base, "-1"),
            6 => nudge(&base, "0.1"),
            _ => nudge(&base, "-0.1"),
        };
        match self.rng.random_range(0..14) {
            0 => to_exponent(&nudged, &mut self.rng),
            1 if nudged.contains('.') => format!("{nudged}0"),
            2 => {
                if nudged.contains('.') {
                    nudged
                } else {
                    format!("{nudged}.0")
                }
            }
            3 => ["0", "-0", "-0.0", "0.00", "1E2", "5e-1", "-1"]
                .choose(&mut self.rng)
                .unwrap()
                .to_string(),
            _ => nudged,
        }
    }

    fn scalar(&mut self, out: &mut String) {
        match self.rng.random_range(0..12) {
            0..=4 => {
                let n = self.number();
                out.push_str(&n);
            }
            5..=6 => {
                let n = self.number();
                out.push('"');
                out.push_str(&n);
                out.push('"');
            }
            7..=8 => self.string(out),
            9 => out.push_str("true"),
            10 => out.push_str("null"),
            _ => out.push_str("false"),
        }
    }

    fn value(&mut self, out: &mut String, depth: usize) {
        match self.rng.random_range(0..10) {
            0 if depth < 3 => self.flat(out, depth + 1),
            1 if depth < 3 => {
                out.push('[');
                let n = self.rng.random_range(0..4);
                for i in 0..n {
                    if i > 0 {
                        out.push(',');
                    }
                    self.ws(out);
                    self.value(out, depth + 1);
                }
                out.push(']');
            }
            _ => self.scalar(out),
        }
    }

    fn key(&mut self, out: &mut String, key: &str) {
        out.push('"');
        out.push_str(key);
        out.push('"');
        self.ws(out);
        out.push(':');
        self.ws(out);
    }

    fn flat(&mut self, out: &mut String, depth: usize) {
        let n = self.rng.random_range(if depth == 0 { 1..8 } else { 0..4 });
        let mut members = Vec::new();
        for _ in 0..n {
            let mut m = String::new();
            self.ws(&mut m);
            let k = if self.rng.random_bool(0.15) {
                let mut s = String::new();
                self.string_body(&mut s);
                s
            } else {
                self.name()
            };
            self.key(&mut m, &k);
            self.value(&mut m, depth);
            self.ws(&mut m);
            members.push(m);
        }
        if depth == 0 && self.rng.random_bool(self.plant_rate) {
            for (attr, values) in self.planted.clone() {
                let mut m = String::new();
                let v = self.planted_value(&values);
                if self.rng.random_bool(0.2) {
                    m.push_str("\"meta\":{");
                    self.key(&mut m, &attr);
                    m.push_str(&v);
                    m.push('}');
                } else {
                    self.key(&mut m, &attr);
                    m.push_str(&v);
                }
                let at = self.rng.random_range(0..=members.len());
                members.insert(at, m);
            }
        }
        out.push('{');
        out.push_str(&members.join(","));
        out.push('}');
    }

    /// An in-range value in one of the encodings a record may use.
    fn planted_value(&mut self, values: &[String]) -> String {
        let v = values.choose(&mut self.rng).unwrap().clone();
        let v = match self.rng.random_range(0..6) {
            0 => to_exponent(&v, &mut self.rng),
            1 if v.contains('.') => format!("{v}0"),
            _ => v,
        };
        if self.rng.random_bool(0.5) {
            format!("\"{v}\"")
        } else {
            v
        }
    }

    fn senml_entry(&mut self, out: &mut String) {
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut v = String::new();
        match self.rng.random_range(0..10) {
            0..=5 => {
                v.push('"');
                v.push_str(&self.number());
                v.push('"');
            }
            6..=8 => v.push_str(&self.number()),
            _ => self.value(&mut v, 2),
        }
        if self.rng.random_bool(0.95) {
            fields.push(("v".into(), v));
        }
        if self.rng.random_bool(0.95) {
            let mut n = String::from("\"");
            n.push_str(&self.name());
            n.push('"');
            fields.push(("n".into(), n));
        }
        if self.rng.random_bool(0.6) {
            let mut u = String::new();
            self.string(&mut u);
            fields.push(("u".into(), u));
        }
        if self.rng.random_bool(0.2) {
            let mut j = String::new();
            self.value(&mut j, 2);
            let k = self.name();
            fields.push((k, j));
        }
        for i in (1..fields.len()).rev() {
            let j = self.rng.random_range(0..=i);
            fields.swap(i, j);
        }
        out.push('{');
        for (i, (k, v)) in fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.ws(out);
            self.key(out, k);
            out.push_str(v);
        }
        out.push('}');
    }

    fn senml(&mut self, out: &mut String) {
        let mut entries = Vec::new();
        for _ in 0..self.rng.random_range(0..7) {
            let mut e = String::new();
            self.ws(&mut e);
            self.senml_entry(&mut e);
            entries.push(e);
        }
        if self.rng.random_bool(self.plant_rate) {
            for (attr, values) in self.planted.clone() {
                let v = self.planted_value(&values);
                let mut fields = vec![format!("\"n\":\"{attr}\""), format!("\"v\":{v}")];
                if self.rng.random_bool(0.5) {
                    fields.push("\"u\":\"per\"".to_string());
                }
                for i in (1..fields.len()).rev() {
                    let j = self.rng.random_range(0..=i);
                    fields.swap(i, j);
                }
                let at = self.rng.random_range(0..=entries.len());
                entries.insert(at, format!("{{{}}}", fields.join(",")));
            }
        }
        out.push('{');
        self.ws(out);
        self.key(out, "e");
        out.push('[');
        out.push_str(&entries.join(","));
        out.push(']');
        out.push(',');
        self.key(out, "bt");
        let bt = self
            .rng
            .random_range(1_400_000_000_000u64..1_500_000_000_000);
        out.push_str(&bt.to_string());
        if self.rng.random_bool(0.3) {
            out.push(',');
            self.key(out, "bn");
            self.string(out);
        }
        out.push('}');
    }
}

/// `base + delta` on decimal strings, keeping the longer fraction.
fn nudge(base: &str, delta: &str) -> String {
    let scale = |s: &str| s.split_once('.').map_or(0, |(_, f)| f.len());
    let k = scale(base).max(scale(delta));
    let to_int = |s: &str| -> i128 {
        let neg = s.starts_with('-');
        let s = s.trim_start_matches('-');
        let (i, f) = s.split_once('.').unwrap_or((s, ""));
        let mut f = f.to_string();
        while f.len() < k {
            f.push('0');
        }
        let v: i128 = format!("{i}{f}").parse().unwrap();
        if neg {
            -v
        } else {
            v
        }
    };
    format_scaled(to_int(base) + to_int(delta), k)
}

fn format_scaled(v: i128, scale: usize) -> String {
    let neg = v < 0;
    let digits = v.unsigned_abs().to_string();
    let digits = format!("{digits:0>width$}", width = scale + 1);
    let (i, f) = digits.split_at(digits.len() - scale);
    let body = if scale == 0 {
        i.to_string()
    } else {
        format!("{i}.{f}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Same value in exponent form, e.g. `35.1` -> `3.51e1` or `351E-1`.
fn to_exponent(text: &str, rng: &mut ChaCha8Rng) -> String {
    let neg = text.starts_with('-');
    let body = text.trim_start_matches('-');
    let (i, f) = body.split_once('.').unwrap_or((body, ""));
    let digits = format!("{i}{f}");
    let sign = if neg { "-" } else { "" };
    let e = if rng.random_bool(0.5) { 'e' } else { 'E' };
    if rng.random_bool(0.5) {
        let digits = digits.trim_start_matches('0');
        let digits = if digits.is_empty() { "0" } else { digits };
        format!("{sign}{digits}{e}-{}", f.len())
    } else {
        let trimmed = digits.trim_start_matches('0');
        if trimmed.is_empty() {
            return format!("{sign}0{e}+0");
        }
        let exp = trimmed.len() as i64 - 1 - f.len() as i64;
        let mant = if trimmed.len() > 1 {
            format!("{}.{}", &trimmed[..1], &trimmed[1..])
        } else {
            trimmed.to_string()
        };
        format!("{sign}{mant}{e}{exp}")
    }
}
