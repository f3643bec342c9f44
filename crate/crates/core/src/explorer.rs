//! Design-space exploration.
//!
//! Enumerates every valid [`FilterConfig`] of a query, measures each one
//! against oracle labels, prices it with a proxy [`CostModel`] and extracts
//! the FPR/cost Pareto front.
//!
//! Evaluation shares work across configurations: each distinct primitive
//! runs once per record, each distinct leaf or structural conjunction is
//! turned into a bit column over records, and a configuration is then a
//! Boolean combination of columns.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{
    build_tree, compile_filter, BlockLen, FilterConfig, FilterNode, LeafConfig, Mode, Primitive,
    PrimitiveSpec, RawFilterExpr,
};
use crate::oracle::LabeledDataset;
use crate::query::{Predicate, QueryAst};
use crate::string_match::{MatcherKind, StringMatcher};

pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    /// Modes tried per predicate, in enumeration order.
    pub modes: Vec<Mode>,
    /// Block lengths tried for every string-using mode.
    pub blocks: Vec<BlockLen>,
    pub cap: u128,
    /// Evaluate on a seeded random subset of this many records.
    pub sample: Option<(usize, u64)>,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            modes: vec![Mode::Omit, Mode::ValueOnly, Mode::Flat, Mode::Scoped],
            blocks: vec![BlockLen::Bytes(1), BlockLen::Bytes(2), BlockLen::Full],
            cap: DEFAULT_CAP,
            sample: None,
        }
    }
}

/// Options for one predicate, omission first when allowed.
pub fn leaf_options(pred: &Predicate, opts: &ExploreOptions) -> Vec<LeafConfig> {
    let mut out = Vec::new();
    for &mode in &opts.modes {
        if mode.uses_string() {
            for &block in &opts.blocks {
                if block.matcher_kind(pred.attr.len()).is_ok() {
                    out.push(LeafConfig::with_string(mode, block));
                }
            }
        } else {
            out.push(LeafConfig { mode, block: None });
        }
    }
    out.dedup();
    out
}

/// Number of valid configurations, without enumerating them.
pub fn count_configs(ast: &QueryAst, opts: &ExploreOptions) -> u128 {
    let mut next = 0;
    count_node(ast, opts, &mut next).1
}

/// (ways to omit the subtree, ways to keep it)
fn count_node(ast: &QueryAst, opts: &ExploreOptions, next: &mut usize) -> (u128, u128) {
    match ast {
        QueryAst::Pred(p) => {
            *next += 1;
            let options = leaf_options(p, opts);
            let omit = options.iter().filter(|c| c.mode == Mode::Omit).count() as u128;
            (omit, options.len() as u128 - omit)
        }
        QueryAst::And(children) => {
            let (mut omit, mut total) = (1u128, 1u128);
            for c in children {
                let (o, a) = count_node(c, opts, next);
                omit = omit.saturating_mul(o);
                total = total.saturating_mul(o.saturating_add(a));
            }
            (omit, total.saturating_sub(omit))
        }
        QueryAst::Or(children) => {
            let (mut omit, mut keep) = (1u128, 1u128);
            for c in children {
                let (o, a) = count_node(c, opts, next);
                omit = omit.saturating_mul(o);
                keep = keep.saturating_mul(a);
            }
            (omit, keep)
        }
    }
}

/// All valid configurations in odometer order over leaves, the first leaf
/// varying slowest.
pub fn enumerate_configs(ast: &QueryAst, opts: &ExploreOptions) -> Result<Vec<FilterConfig>> {
    let count = count_configs(ast, opts);
    if count > opts.cap {
        return Err(Error::EnumerationCap {
            count,
            cap: opts.cap,
        });
    }
    let preds = ast.leaves();
    let options: Vec<Vec<LeafConfig>> = preds.iter().map(|p| leaf_options(p, opts)).collect();
    if options.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; preds.len()];
    let mut cfg = FilterConfig::all_omitted(ast);
    loop {
        for (i, &d) in digits.iter().enumerate() {
            cfg.set(i, options[i][d]);
        }
        if cfg.validate(ast).is_ok() {
            out.push(cfg.clone());
        }
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                debug_assert_eq!(out.len() as u128, count);
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < options[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Proxy resource weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    /// Per gram byte of a substring-block matcher.
    pub w_g: f64,
    /// Per run-counter bit.
    pub w_c: f64,
    /// Per buffered bit of a full compare.
    pub w_f: f64,
    /// Per DFA state and input class.
    pub w_s: f64,
    /// Per structural combinator.
    pub w_x: f64,
    /// Structural scanner, once per filter.
    pub w_t: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            w_g: 1.0,
            w_c: 1.0,
            w_f: 1.0,
            w_s: 1.0,
            w_x: 1.0,
            w_t: 1.0,
        }
    }
}

impl CostModel {
    /// Reads `name = value` lines; unnamed weights keep their defaults.
    pub fn parse(text: &str) -> Result<CostModel> {
        let mut model = CostModel::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = || Error::Config(format!("cost weights line {}: {line:?}", lineno + 1));
            let (name, value) = line.split_once('=').ok_or_else(err)?;
            let value: f64 = value.trim().parse().map_err(|_| err())?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(err());
            }
            let slot = match name.trim() {
                "w_g" => &mut model.w_g,
                "w_c" => &mut model.w_c,
                "w_f" => &mut model.w_f,
                "w_s" => &mut model.w_s,
                "w_x" => &mut model.w_x,
                "w_t" => &mut model.w_t,
                _ => return Err(err()),
            };
            *slot = value;
        }
        Ok(model)
    }

    pub fn primitive_cost(&self, primitive: &Primitive) -> f64 {
        match primitive {
            Primitive::String { spec, template } => {
                let n = spec.pattern.len();
                match (spec.kind, template) {
                    (MatcherKind::SubstringBlock(b), StringMatcher::SubstringBlock(m)) => {
                        let counter_bits = ((n - b + 2) as f64).log2().ceil();
                        self.w_g * (m.grams().len() * b) as f64 + self.w_c * counter_bits
                    }
                    (MatcherKind::FullCompare, _) => self.w_f * (8 * n) as f64,
                    (MatcherKind::Dfa, StringMatcher::Dfa(m)) => {
                        self.w_s * (m.state_count() * m.input_classes()) as f64
                    }
                    _ => unreachable!("matcher does not match its spec"),
                }
            }
            Primitive::Range(dfa) => self.w_s * (dfa.state_count() * dfa.input_classes()) as f64,
        }
    }

    fn node_cost(&self, node: &FilterNode, primitives: &[Primitive]) -> f64 {
        match node {
            FilterNode::Leaf(p) => self.primitive_cost(&primitives[*p]),
            FilterNode::And(c) | FilterNode::Or(c) => {
                c.iter().map(|n| self.node_cost(n, primitives)).sum()
            }
            FilterNode::ScopeConj(ps) | FilterNode::SegmentConj(ps) => {
                self.w_x
                    + ps.iter()
                        .map(|&p| self.primitive_cost(&primitives[p]))
                        .sum::<f64>()
            }
        }
    }

    /// Cost of a tree whose ids index `primitives`. Every occurrence counts.
    pub fn tree_cost(&self, root: &FilterNode, primitives: &[Primitive]) -> f64 {
        self.w_t + self.node_cost(root, primitives)
    }
}

pub fn estimate_cost(expr: &RawFilterExpr, model: &CostModel) -> f64 {
    model.tree_cost(expr.root(), expr.primitives())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub config_id: usize,
    pub config: FilterConfig,
    /// Filter notation, e.g. `{ s1(temperature) & v(0.7<=f<=35.1) }`.
    pub notation: String,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub fpr: f64,
    pub cost: f64,
    pub wall_time: Duration,
}

/// Accepted records split by label, plus label totals.
#[derive(Clone, Copy, Debug)]
struct Tally {
    tp: usize,
    fp: usize,
    matches: usize,
    non_matches: usize,
}

impl EvalReport {
    fn from_tally(
        config_id: usize,
        config: FilterConfig,
        notation: String,
        tally: Tally,
        cost: f64,
        wall_time: Duration,
    ) -> EvalReport {
        let fp = tally.fp;
        let tn = tally.non_matches - fp;
        EvalReport {
            config_id,
            config,
            notation,
            tp: tally.tp,
            fp,
            tn,
            fn_: tally.matches - tally.tp,
            fpr: if fp + tn == 0 {
                0.0
            } else {
                fp as f64 / (fp + tn) as f64
            },
            cost,
            wall_time,
        }
    }

    pub fn records(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn check(self) -> Result<EvalReport> {
        if self.fn_ > 0 {
            return Err(Error::FalseNegatives {
                config: self.config.descriptor(),
                count: self.fn_,
            });
        }
        Ok(self)
    }
}

/// Compiles and runs one configuration record by record. A false negative
/// is an error, never a report.
pub fn evaluate_config<R: AsRef<[u8]>>(
    config_id: usize,
    cfg: &FilterConfig,
    ast: &QueryAst,
    records: &[R],
    labels: &LabeledDataset,
    model: &CostModel,
) -> Result<EvalReport> {
    assert_eq!(
        records.len(),
        labels.labels.len(),
        "labels for another dataset"
    );
    let start = Instant::now();
    let expr = compile_filter(ast, cfg)?;
    let mut state = expr.new_state();
    let (mut tp, mut fp) = (0, 0);
    for (record, label) in records.iter().zip(&labels.labels) {
        if expr.filter_record(&mut state, record.as_ref()) {
            if label.exact_match {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    EvalReport::from_tally(
        config_id,
        cfg.clone(),
        expr.to_string(),
        Tally {
            tp,
            fp,
            matches: labels.matches,
            non_matches: records.len() - labels.matches,
        },
        estimate_cost(&expr, model),
        start.elapsed(),
    )
    .check()
}

/// Boolean combination of record-bit columns.
#[derive(Clone, Debug)]
enum Comb {
    And(Vec<Comb>),
    Or(Vec<Comb>),
    Atom(usize),
}

type Column = Vec<u64>;

fn eval_comb(comb: &Comb, columns: &[Column], words: usize) -> Column {
    match comb {
        Comb::Atom(a) => columns[*a].clone(),
        Comb::And(children) => {
            let mut acc = eval_comb(&children[0], columns, words);
            for c in &children[1..] {
                let col = eval_comb(c, columns, words);
                acc.iter_mut().zip(&col).for_each(|(x, y)| *x &= y);
            }
            acc
        }
        Comb::Or(children) => {
            let mut acc = vec![0u64; words];
            for c in children {
                let col = eval_comb(c, columns, words);
                acc.iter_mut().zip(&col).for_each(|(x, y)| *x |= y);
            }
            acc
        }
    }
}

#[derive(Default)]
struct Interner {
    specs: Vec<PrimitiveSpec>,
    spec_ids: HashMap<String, usize>,
    atoms: Vec<FilterNode>,
    atom_ids: HashMap<FilterNode, usize>,
}

impl Interner {
    fn spec(&mut self, spec: PrimitiveSpec) -> usize {
        let key = spec.to_string();
        *self.spec_ids.entry(key).or_insert_with(|| {
            self.specs.push(spec);
            self.specs.len() - 1
        })
    }

    fn comb(&mut self, node: &FilterNode) -> Comb {
        match node {
            FilterNode::And(c) => Comb::And(c.iter().map(|n| self.comb(n)).collect()),
            FilterNode::Or(c) => Comb::Or(c.iter().map(|n| self.comb(n)).collect()),
            atom => {
                let next = self.atoms.len();
                let id = *self.atom_ids.entry(atom.clone()).or_insert(next);
                if id == next {
                    self.atoms.push(atom.clone());
                }
                Comb::Atom(id)
            }
        }
    }
}

/// Selects the records an exploration runs on.
pub fn sample_indices(total: usize, sample_size: Option<(usize, u64)>) -> Vec<usize> {
    match sample_size {
        Some((n, seed)) if n < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, total, n).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..total).collect(),
    }
}

/// Evaluates every configuration over the dataset. Reports come back in
/// configuration order; a false negative anywhere aborts with an error.
pub fn explore<R: AsRef<[u8]> + Sync>(
    ast: &QueryAst,
    records: &[R],
    labels: &LabeledDataset,
    opts: &ExploreOptions,
    model: &CostModel,
) -> Result<Vec<EvalReport>> {
    assert_eq!(
        records.len(),
        labels.labels.len(),
        "labels for another dataset"
    );
    let configs = enumerate_configs(ast, opts)?;
    let chosen = sample_indices(records.len(), opts.sample);

    let mut interner = Interner::default();
    let mut trees = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let tree = build_tree(ast, cfg, &mut |spec| Ok(interner.spec(spec)))?;
        let comb = interner.comb(&tree);
        trees.push((tree, comb));
    }
    let primitives = interner
        .specs
        .iter()
        .map(Primitive::compile)
        .collect::<Result<Vec<_>>>()?;
    let atoms = interner.atoms;
    if atoms.is_empty() {
        return Ok(Vec::new());
    }
    let scan = RawFilterExpr::from_parts(FilterNode::And(atoms.clone()), primitives.clone());

    let words = chosen.len().div_ceil(64);
    let chunks: Vec<Vec<Column>> = chosen
        .par_chunks(64)
        .map(|chunk| {
            let mut state = scan.new_state();
            let mut bits = vec![0u64; atoms.len()];
            for (bit, &i) in chunk.iter().enumerate() {
                scan.scan_record(&mut state, records[i].as_ref());
                let logs = state.logs();
                for (a, atom) in atoms.iter().enumerate() {
                    if atom.eval(&|p| &logs[p]) {
                        bits[a] |= 1 << bit;
                    }
                }
            }
            bits.into_iter().map(|w| vec![w]).collect()
        })
        .collect();
    let mut columns: Vec<Column> = vec![Vec::with_capacity(words); atoms.len()];
    for chunk in chunks {
        for (a, w) in chunk.into_iter().enumerate() {
            columns[a].extend(w);
        }
    }

    let mut truth = vec![0u64; words];
    for (bit, &i) in chosen.iter().enumerate() {
        if labels.labels[i].exact_match {
            truth[bit / 64] |= 1 << (bit % 64);
        }
    }
    let matches: usize = truth.iter().map(|w| w.count_ones() as usize).sum();
    let non_matches = chosen.len() - matches;

    configs
        .into_par_iter()
        .zip(trees.into_par_iter())
        .enumerate()
        .map(|(config_id, (cfg, (tree, comb)))| {
            let start = Instant::now();
            let accepted = eval_comb(&comb, &columns, words);
            let (mut tp, mut fp) = (0usize, 0usize);
            for (a, t) in accepted.iter().zip(&truth) {
                tp += (a & t).count_ones() as usize;
                fp += (a & !t).count_ones() as usize;
            }
            let notation = {
                let expr = RawFilterExpr::from_parts(tree.clone(), primitives.clone());
                expr.to_string()
            };
            EvalReport::from_tally(
                config_id,
                cfg,
                notation,
                Tally {
                    tp,
                    fp,
                    matches,
                    non_matches,
                },
                model.tree_cost(&tree, &primitives),
                start.elapsed(),
            )
            .check()
        })
        .collect()
}

/// Indices of the non-dominated reports, ordered by FPR descending then cost
/// ascending. Of reports tied on both axes only the one with the smallest
/// configuration descriptor is kept.
pub fn pareto_front(reports: &[EvalReport]) -> Vec<usize> {
    let descriptors: Vec<String> = reports.iter().map(|r| r.config.descriptor()).collect();
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&reports[a], &reports[b]);
        ra.cost
            .total_cmp(&rb.cost)
            .then(ra.fpr.total_cmp(&rb.fpr))
            .then_with(|| descriptors[a].cmp(&descriptors[b]))
    });
    let mut front = Vec::new();
    let mut best_fpr = f64::INFINITY;
    for i in order {
        if reports[i].fpr < best_fpr {
            best_fpr = reports[i].fpr;
            front.push(i);
        }
    }
    // ascending cost with strictly falling FPR is FPR descending already
    front
}
