use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rawfilter::explorer::{
    enumerate_configs, estimate_cost, evaluate_config, explore, pareto_front, CostModel,
    EvalReport, ExploreOptions, DEFAULT_CAP,
};
use rawfilter::filter::{compile_filter, BlockLen, FilterConfig, Mode, Primitive, RawFilterExpr};
use rawfilter::oracle::label_dataset;
use rawfilter::query::{parse_query, QueryAst};
use rawfilter::scanner::{segment_lines, segment_records, RecordSpan};
use rawfilter::string_match::StringMatcher;
use rawfilter::synth::{generate, GeneratorSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_FALSE_NEGATIVE: u8 = 4;
const EXIT_CAP: u8 = 5;

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<rawfilter::Error> for Failure {
    fn from(e: rawfilter::Error) -> Self {
        use rawfilter::Error as E;
        let code = match e {
            E::FalseNegatives { .. } => EXIT_FALSE_NEGATIVE,
            E::EnumerationCap { .. } => EXIT_CAP,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_IO,
        error: e.into(),
    }
}

fn usage_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: e.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Parser)]
#[command(
    name = "rawfilter",
    version,
    about = "Raw filters for JSON record streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a query and configuration into a filter descriptor
    Compile(CompileArgs),
    /// Filter a dataset, writing accepted records to stdout
    Run(RunArgs),
    /// Measure one configuration against exact labels
    Eval(EvalArgs),
    /// Evaluate every configuration and extract the Pareto front
    Explore(ExploreArgs),
    /// Generate a synthetic NDJSON dataset
    Gen(GenArgs),
    /// Measure filter throughput
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ndjson,
    Concat,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset file, or - for stdin
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum, default_value = "concat")]
    format: Format,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Cost weights file (`w_g = 1` lines)
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Descriptor written by `compile`
    #[arg(long)]
    filter: PathBuf,
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long)]
    query: PathBuf,
    #[command(flatten)]
    data: DatasetArgs,
    /// Directory receiving reports.csv and pareto.csv
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
    /// Modes per predicate, comma separated
    #[arg(long, default_value = "OMIT,VALUE_ONLY,FLAT,SCOPED")]
    modes: String,
    /// Block lengths, comma separated (integers, N, DFA)
    #[arg(long, default_value = "1,2,N")]
    blocks: String,
    /// Evaluate on a random subset of this many records
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Fill the wall_ms column (otherwise 0, keeping output byte-stable)
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed in the generator spec
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the record count in the generator spec
    #[arg(long)]
    records: Option<usize>,
    /// NDJSON output; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Label sidecar; defaults to <out>.labels.csv
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    filter: PathBuf,
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also time the dataset doubled and check the time ratio
    #[arg(long)]
    linearity: bool,
    /// Also time with 1, 2 and 4 workers
    #[arg(long)]
    scaling: bool,
}

#[derive(Serialize, Deserialize)]
struct Descriptor {
    query: String,
    config: Vec<String>,
    notation: String,
    cost: f64,
    primitives: Vec<PrimitiveInfo>,
}

#[derive(Serialize, Deserialize)]
struct PrimitiveInfo {
    id: usize,
    notation: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pattern: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grams: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dfa_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_classes: Option<usize>,
    cost: f64,
}

#[derive(Serialize)]
struct RunStats {
    records_in: usize,
    records_out: usize,
    malformed: usize,
    bytes_in: usize,
    accept_ratio: f64,
    elapsed_ms: f64,
    throughput_bytes_per_sec: f64,
    fires: Vec<FireCount>,
}

#[derive(Serialize)]
struct FireCount {
    primitive: String,
    records: usize,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config: String,
    notation: &'a str,
    records: usize,
    tp: usize,
    fp: usize,
    tn: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    fpr: f64,
    cost: f64,
    selectivity: f64,
    malformed: usize,
    wall_ms: f64,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_failure)
}

fn read_dataset(args: &DatasetArgs) -> CliResult<Vec<u8>> {
    if args.dataset == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .context("reading stdin")
            .map_err(io_failure)?;
        Ok(buf)
    } else {
        fs::read(&args.dataset)
            .with_context(|| format!("reading {}", args.dataset))
            .map_err(io_failure)
    }
}

fn segment(bytes: &[u8], format: Format) -> Vec<RecordSpan> {
    match format {
        Format::Ndjson => segment_lines(bytes),
        Format::Concat => segment_records(bytes),
    }
}

fn load_weights(path: Option<&Path>) -> CliResult<CostModel> {
    match path {
        Some(p) => Ok(CostModel::parse(&read_text(p)?)?),
        None => Ok(CostModel::default()),
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(p) => fs::write(p, bytes)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(io_failure),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .context("writing stdout")
                .map_err(io_failure)
        }
    }
}

fn primitive_info(id: usize, p: &Primitive, model: &CostModel) -> PrimitiveInfo {
    let mut info = PrimitiveInfo {
        id,
        notation: p.spec().to_string(),
        kind: String::new(),
        pattern: None,
        grams: None,
        threshold: None,
        regex: None,
        dfa_states: None,
        input_classes: None,
        cost: model.primitive_cost(p),
    };
    match p {
        Primitive::String { spec, template } => {
            info.pattern = Some(String::from_utf8_lossy(&spec.pattern).into_owned());
            match template {
                StringMatcher::SubstringBlock(m) => {
                    info.kind = format!("substring_block B={}", m.block_len());
                    info.grams = Some(
                        m.grams()
                            .iter()
                            .map(|g| String::from_utf8_lossy(g).into_owned())
                            .collect(),
                    );
                    info.threshold = Some(m.threshold());
                }
                StringMatcher::FullCompare(_) => info.kind = "full_compare".into(),
                StringMatcher::Dfa(m) => {
                    info.kind = "string_dfa".into();
                    info.dfa_states = Some(m.state_count());
                    info.input_classes = Some(m.input_classes());
                }
            }
        }
        Primitive::Range(dfa) => {
            info.kind = "range_dfa".into();
            info.regex = Some(dfa.regex().to_string());
            info.dfa_states = Some(dfa.state_count());
            info.input_classes = Some(dfa.input_classes());
        }
    }
    info
}

fn load_query_config(query: &Path, config: &Path) -> CliResult<(QueryAst, FilterConfig)> {
    let ast = parse_query(read_text(query)?.trim())?;
    let cfg = FilterConfig::parse(&read_text(config)?, &ast)?;
    Ok((ast, cfg))
}

fn cmd_compile(args: CompileArgs) -> CliResult {
    let (ast, cfg) = load_query_config(&args.query, &args.config)?;
    let model = load_weights(args.weights.as_deref())?;
    let expr = compile_filter(&ast, &cfg)?;
    let descriptor = Descriptor {
        query: ast.to_string(),
        config: cfg.to_text().lines().map(str::to_string).collect(),
        notation: expr.to_string(),
        cost: estimate_cost(&expr, &model),
        primitives: expr
            .primitives()
            .iter()
            .enumerate()
            .map(|(i, p)| primitive_info(i, p, &model))
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&descriptor).map_err(usage_failure)?;
    text.push('\n');
    write_output(args.out.as_deref(), text.as_bytes())
}

fn load_descriptor(path: &Path) -> CliResult<RawFilterExpr> {
    let text = read_text(path)?;
    let d: Descriptor = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a filter descriptor", path.display()))
        .map_err(usage_failure)?;
    let ast = parse_query(&d.query)?;
    let cfg = FilterConfig::parse(&d.config.join("\n"), &ast)?;
    let expr = compile_filter(&ast, &cfg)?;
    if expr.to_string() != d.notation {
        return Err(usage_failure(anyhow::anyhow!(
            "descriptor notation {:?} does not match its configuration ({})",
            d.notation,
            expr
        )));
    }
    Ok(expr)
}

fn thread_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(usage_failure)
}

/// Accept flags plus per-primitive latch counts, in record order.
fn run_filter(
    expr: &RawFilterExpr,
    bytes: &[u8],
    spans: &[RecordSpan],
    pool: &rayon::ThreadPool,
) -> (Vec<bool>, Vec<usize>) {
    let n_prims = expr.primitives().len();
    let chunk = 256;
    let parts: Vec<(Vec<bool>, Vec<usize>)> = pool.install(|| {
        spans
            .par_chunks(chunk)
            .map(|group| {
                let mut state = expr.new_state();
                let mut fires = vec![0usize; n_prims];
                let accepted = group
                    .iter()
                    .map(|span| {
                        let ok = expr.filter_record(&mut state, span.bytes(bytes));
                        for (f, log) in fires.iter_mut().zip(state.logs()) {
                            *f += log.fired as usize;
                        }
                        ok
                    })
                    .collect();
                (accepted, fires)
            })
            .collect()
    });
    let mut accepted = Vec::with_capacity(spans.len());
    let mut fires = vec![0usize; n_prims];
    for (a, f) in parts {
        accepted.extend(a);
        fires.iter_mut().zip(f).for_each(|(x, y)| *x += y);
    }
    (accepted, fires)
}

fn cmd_run(args: RunArgs) -> CliResult {
    let expr = load_descriptor(&args.filter)?;
    let bytes = read_dataset(&args.data)?;
    let pool = thread_pool(args.workers)?;
    let start = Instant::now();
    let spans = segment(&bytes, args.data.format);
    let (accepted, fires) = run_filter(&expr, &bytes, &spans, &pool);
    let elapsed = start.elapsed().as_secs_f64();

    let mut out = Vec::new();
    for (span, &ok) in spans.iter().zip(&accepted) {
        if ok {
            out.extend_from_slice(span.bytes(&bytes));
            out.push(b'\n');
        }
    }
    write_output(args.out.as_deref(), &out)?;

    let records_out = accepted.iter().filter(|&&a| a).count();
    let stats = RunStats {
        records_in: spans.len(),
        records_out,
        malformed: spans.iter().filter(|s| s.malformed).count(),
        bytes_in: bytes.len(),
        accept_ratio: if spans.is_empty() {
            0.0
        } else {
            records_out as f64 / spans.len() as f64
        },
        elapsed_ms: elapsed * 1e3,
        throughput_bytes_per_sec: if elapsed > 0.0 {
            bytes.len() as f64 / elapsed
        } else {
            0.0
        },
        fires: expr
            .primitives()
            .iter()
            .zip(fires)
            .map(|(p, records)| FireCount {
                primitive: p.spec().to_string(),
                records,
            })
            .collect(),
    };
    eprintln!("{}", serde_json::to_string(&stats).map_err(usage_failure)?);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CliResult {
    let (ast, cfg) = load_query_config(&args.query, &args.config)?;
    let model = load_weights(args.weights.as_deref())?;
    let bytes = read_dataset(&args.data)?;
    let spans = segment(&bytes, args.data.format);
    let records: Vec<&[u8]> = spans.iter().map(|s| s.bytes(&bytes)).collect();
    let labels = label_dataset(&ast, &records);
    let report = evaluate_config(0, &cfg, &ast, &records, &labels, &model)?;
    let json = ReportJson {
        config: report.config.descriptor(),
        notation: &report.notation,
        records: report.records(),
        tp: report.tp,
        fp: report.fp,
        tn: report.tn,
        fn_: report.fn_,
        fpr: report.fpr,
        cost: report.cost,
        selectivity: labels.selectivity,
        malformed: labels.malformed,
        wall_ms: report.wall_time.as_secs_f64() * 1e3,
    };
    let mut text = serde_json::to_string_pretty(&json).map_err(usage_failure)?;
    text.push('\n');
    write_output(args.out.as_deref(), text.as_bytes())
}

fn parse_list<T>(text: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| f(t).ok_or_else(|| usage_failure(anyhow::anyhow!("invalid {what} {t:?}"))))
        .collect()
}

fn reports_csv(reports: &[EvalReport], rows: &[usize], timing: bool) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "config_id",
        "config",
        "fpr",
        "fp",
        "tn",
        "tp",
        "fn",
        "cost",
        "wall_ms",
    ])
    .map_err(io_failure)?;
    for &i in rows {
        let r = &reports[i];
        let wall = if timing {
            format!("{:.3}", r.wall_time.as_secs_f64() * 1e3)
        } else {
            "0".to_string()
        };
        w.write_record([
            r.config_id.to_string(),
            r.config.descriptor(),
            format!("{:.6}", r.fpr),
            r.fp.to_string(),
            r.tn.to_string(),
            r.tp.to_string(),
            r.fn_.to_string(),
            format!("{}", r.cost),
            wall,
        ])
        .map_err(io_failure)?;
    }
    w.into_inner()
        .map_err(|e| io_failure(anyhow::anyhow!("{e}")))
}

fn cmd_explore(args: ExploreArgs) -> CliResult {
    let ast = parse_query(read_text(&args.query)?.trim())?;
    let model = load_weights(args.weights.as_deref())?;
    let opts = ExploreOptions {
        modes: parse_list(&args.modes, "mode", Mode::from_name)?,
        blocks: parse_list(&args.blocks, "block length", BlockLen::parse)?,
        cap: args.cap,
        sample: args.sample.map(|n| (n, args.seed)),
    };
    // fail on the cap before reading the dataset
    enumerate_configs(&ast, &opts)?;
    let bytes = read_dataset(&args.data)?;
    let spans = segment(&bytes, args.data.format);
    let records: Vec<&[u8]> = spans.iter().map(|s| s.bytes(&bytes)).collect();
    let labels = label_dataset(&ast, &records);
    let pool = thread_pool(args.workers.unwrap_or_else(rayon::current_num_threads))?;
    let reports = pool.install(|| explore(&ast, &records, &labels, &opts, &model))?;
    let front = pareto_front(&reports);

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(io_failure)?;
    let all: Vec<usize> = (0..reports.len()).collect();
    write_output(
        Some(&args.out.join("reports.csv")),
        &reports_csv(&reports, &all, args.timing)?,
    )?;
    write_output(
        Some(&args.out.join("pareto.csv")),
        &reports_csv(&reports, &front, args.timing)?,
    )?;
    eprintln!(
        "{} configurations, {} on the Pareto front, {} records, selectivity {:.4}",
        reports.len(),
        front.len(),
        records.len(),
        labels.selectivity
    );
    Ok(())
}

fn cmd_gen(args: GenArgs) -> CliResult {
    let mut spec = GeneratorSpec::parse(&read_text(&args.spec)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.records {
        spec.records = n;
    }
    let data = generate(&spec)?;
    write_output(args.out.as_deref(), data.to_ndjson().as_bytes())?;
    let labels_path = args.labels.or_else(|| {
        args.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".labels.csv");
            PathBuf::from(s)
        })
    });
    if let Some(path) = labels_path {
        let mut text = String::from("index,match\n");
        for (i, &l) in data.labels.iter().enumerate() {
            text.push_str(&format!("{i},{}\n", l as u8));
        }
        write_output(Some(&path), text.as_bytes())?;
    }
    Ok(())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Median seconds for segmenting and filtering `bytes`.
fn time_filter(
    expr: &RawFilterExpr,
    bytes: &[u8],
    format: Format,
    reps: usize,
    pool: &rayon::ThreadPool,
) -> (f64, usize) {
    let mut times = Vec::with_capacity(reps);
    let mut records = 0;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let spans = segment(bytes, format);
        let (accepted, _) = run_filter(expr, bytes, &spans, pool);
        std::hint::black_box(&accepted);
        times.push(start.elapsed().as_secs_f64());
        records = spans.len();
    }
    (median(times), records)
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    let expr = load_descriptor(&args.filter)?;
    let bytes = read_dataset(&args.data)?;
    let pool = thread_pool(args.workers)?;
    let (secs, records) = time_filter(&expr, &bytes, args.data.format, args.repetitions, &pool);
    let mbps = |b: usize, s: f64| b as f64 / s / 1e6;
    println!(
        "{} records, {} bytes, median {:.3} s, {:.1} MB/s ({} workers)",
        records,
        bytes.len(),
        secs,
        mbps(bytes.len(), secs),
        args.workers
    );
    if args.linearity {
        let mut doubled = bytes.clone();
        if !doubled.ends_with(b"\n") {
            doubled.push(b'\n');
        }
        doubled.extend_from_slice(&bytes);
        let (secs2, _) = time_filter(&expr, &doubled, args.data.format, args.repetitions, &pool);
        let ratio = secs2 / secs;
        let verdict = if (1.6..=2.6).contains(&ratio) {
            "linear"
        } else {
            "WARNING: outside [1.6, 2.6]"
        };
        println!("doubled input: median {secs2:.3} s, time ratio {ratio:.2} ({verdict})");
    }
    if args.scaling {
        let mut last = 0.0;
        for w in [1, 2, 4] {
            let pool = thread_pool(w)?;
            let (s, _) = time_filter(&expr, &bytes, args.data.format, args.repetitions, &pool);
            let t = mbps(bytes.len(), s);
            let note = if t + 1e-9 < last {
                " (WARNING: slower than fewer workers)"
            } else {
                ""
            };
            println!("{w} workers: {t:.1} MB/s{note}");
            last = t;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
