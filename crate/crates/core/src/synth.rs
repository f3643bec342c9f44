//! Deterministic synthetic datasets with a known share of matching records.
//!
//! A spec is key-value text:
//!
//! ```text
//! layout = senml            # or flat
//! records = 10000
//! seed = 7
//! attribute = temperature decimal -20 50 1 far
//! attribute = humidity decimal 0 100 1
//! attribute = airquality_raw integer 0 400 0
//! query = (0.7 <= "temperature" <= 35.1) AND (12 <= "airquality_raw" <= 49)
//! selectivity = 0.25
//! leaf_selectivity = 0.5    # chance a non-matching record still has a leaf in range
//! decoys = 1                # extra fields with scrambled attribute names
//! ```
//!
//! Attribute lines are `name kind min max decimals [unit]`. Exactly
//! `round(selectivity * records)` records match the query; the rest are
//! pushed out of range leaf by leaf until the query is false.

use rand::seq::index::sample;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decimal::Decimal;
use crate::error::{Error, Result};
use crate::oracle::label_record;
use crate::query::{parse_query, QueryAst};
use crate::range::NumericBound;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// `{"e":[{"v":"35.2","u":"far","n":"temperature"},...],"bt":...}`
    SenMl,
    /// `{"temperature":35.2,...}`
    Flat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub decimals: u32,
    /// Scaled by `10^decimals`.
    pub min: i128,
    pub max: i128,
    pub unit: String,
}

#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub layout: Layout,
    pub records: usize,
    pub seed: u64,
    pub attributes: Vec<AttributeSpec>,
    pub query: Option<QueryAst>,
    pub selectivity: f64,
    pub leaf_selectivity: f64,
    pub decoys: usize,
}

fn spec_error(msg: impl Into<String>) -> Error {
    Error::Generator(msg.into())
}

impl GeneratorSpec {
    pub fn parse(text: &str) -> Result<GeneratorSpec> {
        let mut spec = GeneratorSpec {
            layout: Layout::SenMl,
            records: 1000,
            seed: 0,
            attributes: Vec::new(),
            query: None,
            selectivity: 0.5,
            leaf_selectivity: 0.5,
            decoys: 0,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find(" #") {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| spec_error(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`"))?;
            let value = value.trim();
            let number = |what: &str| -> Result<f64> {
                value
                    .parse()
                    .map_err(|_| err(&format!("invalid {what} {value:?}")))
            };
            match key.trim() {
                "layout" => {
                    spec.layout = match value {
                        "senml" => Layout::SenMl,
                        "flat" => Layout::Flat,
                        _ => return Err(err("layout must be senml or flat")),
                    }
                }
                "records" => {
                    spec.records = value.parse().map_err(|_| err("invalid record count"))?
                }
                "seed" => spec.seed = value.parse().map_err(|_| err("invalid seed"))?,
                "attribute" => spec.attributes.push(parse_attribute(value).map_err(|e| {
                    err(&match e {
                        Error::Generator(m) => m,
                        other => other.to_string(),
                    })
                })?),
                "query" => spec.query = Some(parse_query(value)?),
                "selectivity" => spec.selectivity = number("selectivity")?,
                "leaf_selectivity" => spec.leaf_selectivity = number("leaf selectivity")?,
                "decoys" => spec.decoys = value.parse().map_err(|_| err("invalid decoy count"))?,
                other => return Err(err(&format!("unknown key {other:?}"))),
            }
        }
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(spec_error("at least one attribute is required"));
        }
        for p in [self.selectivity, self.leaf_selectivity] {
            if !(0.0..=1.0).contains(&p) {
                return Err(spec_error("selectivities must lie in [0, 1]"));
            }
        }
        for (i, a) in self.attributes.iter().enumerate() {
            if self.attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(spec_error(format!("attribute {:?} declared twice", a.name)));
            }
        }
        if let Some(q) = &self.query {
            let leaves = q.leaves();
            for (i, p) in leaves.iter().enumerate() {
                if leaves[..i].iter().any(|o| o.attr == p.attr) {
                    return Err(spec_error(format!(
                        "query attributes must be distinct, {:?} repeats",
                        p.attr
                    )));
                }
                let attr = self
                    .attributes
                    .iter()
                    .find(|a| a.name == p.attr)
                    .ok_or_else(|| spec_error(format!("query names undeclared {:?}", p.attr)))?;
                if in_range_interval(attr, &p.bound).is_none() {
                    return Err(spec_error(format!(
                        "no value of {:?} with {} decimals lies in {}",
                        attr.name, attr.decimals, p.bound
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_attribute(value: &str) -> Result<AttributeSpec> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    if !(5..=6).contains(&tokens.len()) {
        return Err(spec_error(
            "attribute is `name kind min max decimals [unit]`",
        ));
    }
    let decimals: u32 = tokens[4]
        .parse()
        .ok()
        .filter(|&d| d <= 12)
        .ok_or_else(|| spec_error("decimals must be an integer in 0..=12"))?;
    match tokens[1] {
        "integer" if decimals != 0 => return Err(spec_error("integer attributes take 0 decimals")),
        "integer" | "decimal" => {}
        _ => return Err(spec_error("kind must be integer or decimal")),
    }
    let scaled = |t: &str| -> Result<i128> {
        let v = Decimal::parse_plain(t).map_err(|e| spec_error(format!("{t:?}: {e}")))?;
        v.scaled_floor(decimals)
            .ok_or_else(|| spec_error("value too large"))
    };
    let (min, max) = (scaled(tokens[2])?, scaled(tokens[3])?);
    if min > max {
        return Err(spec_error("min exceeds max"));
    }
    if tokens[0].contains(['"', '\\']) {
        return Err(spec_error(
            "attribute names may not contain quotes or backslashes",
        ));
    }
    Ok(AttributeSpec {
        name: tokens[0].to_string(),
        decimals,
        min,
        max,
        unit: tokens.get(5).unwrap_or(&"per").to_string(),
    })
}

/// Scaled values of `attr` inside the bound and the attribute's domain.
fn in_range_interval(attr: &AttributeSpec, bound: &NumericBound) -> Option<(i128, i128)> {
    let d = attr.decimals;
    let lo = bound.lower().map_or(Some(attr.min), |l| {
        l.scaled_ceil(d).map(|l| l.max(attr.min))
    })?;
    let hi = bound.upper().map_or(Some(attr.max), |u| {
        u.scaled_floor(d).map(|u| u.min(attr.max))
    })?;
    (lo <= hi).then_some((lo, hi))
}

/// A scaled value outside the bound, inside the domain when possible.
fn out_of_range(rng: &mut ChaCha8Rng, attr: &AttributeSpec, bound: &NumericBound) -> i128 {
    let d = attr.decimals;
    let span = ((attr.max - attr.min) / 10).max(1);
    let below = bound.lower().and_then(|l| l.scaled_ceil(d)).map(|l| l - 1);
    let above = bound.upper().and_then(|u| u.scaled_floor(d)).map(|u| u + 1);
    let mut sides = Vec::new();
    if let Some(b) = below.filter(|&b| attr.min <= b) {
        sides.push((attr.min, b));
    }
    if let Some(a) = above.filter(|&a| a <= attr.max) {
        sides.push((a, attr.max));
    }
    if sides.is_empty() {
        // the bound covers the domain on every finite side
        sides.extend(below.map(|b| (b - span, b)));
        sides.extend(above.map(|a| (a, a + span)));
    }
    let &(lo, hi) = sides.choose(rng).expect("a bound has at least one side");
    rng.random_range(lo..=hi)
}

fn format_scaled(v: i128, decimals: u32) -> String {
    if decimals == 0 {
        return v.to_string();
    }
    let p = 10i128.pow(decimals);
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    format!(
        "{sign}{}.{:0width$}",
        a / p as u128,
        a % p as u128,
        width = decimals as usize
    )
}

fn scramble(rng: &mut ChaCha8Rng, name: &str) -> String {
    let mut bytes: Vec<u8> = name.bytes().collect();
    for _ in 0..4 {
        bytes.shuffle(rng);
        if bytes != name.as_bytes() {
            break;
        }
    }
    let s = String::from_utf8(bytes).unwrap_or_else(|_| format!("{name}_x"));
    if s == name {
        format!("{name}_")
    } else {
        s
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    /// One serialized record per entry, no trailing newline.
    pub records: Vec<String>,
    /// Oracle labels, one per record.
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn to_ndjson(&self) -> String {
        let mut out = String::with_capacity(self.records.iter().map(|r| r.len() + 1).sum());
        for r in &self.records {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn selectivity(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len() as f64
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.records;
    let planted = (spec.selectivity * n as f64).round() as usize;
    let mut is_match = vec![false; n];
    if spec.query.is_some() {
        for i in sample(&mut rng, n, planted.min(n)).into_iter() {
            is_match[i] = true;
        }
    }
    let leaves: Vec<_> = spec
        .query
        .as_ref()
        .map(|q| q.leaves().into_iter().cloned().collect())
        .unwrap_or_default();
    let leaf_attr: Vec<usize> = leaves
        .iter()
        .map(|p| {
            spec.attributes
                .iter()
                .position(|a| a.name == p.attr)
                .expect("checked when parsing")
        })
        .collect();

    let mut records = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (i, &want) in is_match.iter().enumerate() {
        let mut values: Vec<i128> = spec
            .attributes
            .iter()
            .map(|a| rng.random_range(a.min..=a.max))
            .collect();
        if let Some(q) = &spec.query {
            let mut inside = vec![false; leaves.len()];
            for (k, p) in leaves.iter().enumerate() {
                let attr = &spec.attributes[leaf_attr[k]];
                inside[k] = want || rng.random_bool(spec.leaf_selectivity);
                values[leaf_attr[k]] = if inside[k] {
                    let (lo, hi) = in_range_interval(attr, &p.bound).expect("checked when parsing");
                    rng.random_range(lo..=hi)
                } else {
                    out_of_range(&mut rng, attr, &p.bound)
                };
            }
            while !want && q.eval_with(&mut |k, _| inside[k]) {
                let candidates: Vec<usize> = (0..leaves.len()).filter(|&k| inside[k]).collect();
                let &k = candidates
                    .choose(&mut rng)
                    .expect("a true query has a true leaf");
                inside[k] = false;
                values[leaf_attr[k]] =
                    out_of_range(&mut rng, &spec.attributes[leaf_attr[k]], &leaves[k].bound);
            }
        }
        let record = render(spec, &mut rng, &values, i);
        let label = match &spec.query {
            Some(q) => {
                let (label, malformed) = label_record(q, record.as_bytes());
                if malformed || label != want {
                    return Err(spec_error(format!(
                        "record {i} came out {} but was planted as {}",
                        if label { "matching" } else { "non-matching" },
                        if want { "matching" } else { "non-matching" }
                    )));
                }
                label
            }
            None => false,
        };
        records.push(record);
        labels.push(label);
    }
    Ok(Dataset { records, labels })
}

fn render(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, values: &[i128], index: usize) -> String {
    let mut fields: Vec<(String, String, &str)> = spec
        .attributes
        .iter()
        .zip(values)
        .map(|(a, &v)| {
            (
                a.name.clone(),
                format_scaled(v, a.decimals),
                a.unit.as_str(),
            )
        })
        .collect();
    for _ in 0..spec.decoys {
        let a = &spec.attributes[rng.random_range(0..spec.attributes.len())];
        let v = rng.random_range(a.min..=a.max);
        let mut name = scramble(rng, &a.name);
        while spec.attributes.iter().any(|b| b.name == name) {
            name.push('_');
        }
        fields.push((name, format_scaled(v, a.decimals), "per"));
    }
    let bt = 1_422_748_800_000u64 + index as u64 * 1000;
    match spec.layout {
        Layout::SenMl => {
            let items: Vec<String> = fields
                .iter()
                .map(|(name, v, unit)| format!(r#"{{"v":"{v}","u":"{unit}","n":"{name}"}}"#))
                .collect();
            format!(r#"{{"e":[{}],"bt":{bt}}}"#, items.join(","))
        }
        Layout::Flat => {
            let items: Vec<String> = fields
                .iter()
                .map(|(name, v, _)| format!(r#""{name}":{v}"#))
                .collect();
            format!(r#"{{{},"ts":{bt}}}"#, items.join(","))
        }
    }
}
