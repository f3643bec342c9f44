use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

const RUNNING_EXAMPLE: &str = r#"{"e":[{"v":"35.2","u":"far","n":"temperature"},{"v":"12","u":"per","n":"humidity"},{"v":"713","u":"per","n":"light"},{"v":"305.01","u":"per","n":"dust"},{"v":"20","u":"per","n":"airquality_raw"}],"bt":1422748800000}"#;
const Q0: &str = r#"(0.7 <= "temperature" <= 35.1)"#;
const QS1: &str = r#"(-12.5 <= "temperature" <= 43.1) AND (10.7 <= "humidity" <= 95.2) AND (1345 <= "light" <= 26282) AND (186.61 <= "dust" <= 5188.21) AND (17 <= "airquality_raw" <= 363)"#;
const QT: &str = r#"(140 <= "trip_time_in_secs" <= 3155) AND (0.65 <= "tip_amount" <= 38.55) AND (6.00 <= "fare_amount" <= 201.00) AND (2.50 <= "tolls_amount" <= 18.00) AND (1.37 <= "trip_distance" <= 29.86)"#;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Sandbox {
        Sandbox {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn compile(&self, name: &str, query: &str, config: &str) -> PathBuf {
        let q = self.file(&format!("{name}.query"), query);
        let c = self.file(&format!("{name}.config"), config);
        let out = self.path(&format!("{name}.json"));
        let o = rawfilter(&[
            "compile",
            "--query",
            s(&q),
            "--config",
            s(&c),
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rawfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rawfilter"))
        .args(args)
        .output()
        .unwrap()
}

fn rawfilter_stdin(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rawfilter"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn stats(o: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(err.lines().last().unwrap()).unwrap()
}

#[test]
fn compile_scoped_running_example() {
    let sb = Sandbox::new();
    let d = sb.compile("q0", Q0, "temperature SCOPED 1\n");
    let text = fs::read_to_string(d).unwrap();
    assert!(text.contains("{ s1(temperature) & v(0.7<=f<=35.1) }"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(
        v["primitives"][0]["grams"],
        serde_json::json!(["t", "e", "m", "p", "r", "a", "u"])
    );
    assert!(v["primitives"][1]["dfa_states"].as_u64().unwrap() > 0);
}

#[test]
fn compile_rejects_all_omitted() {
    let sb = Sandbox::new();
    let q = sb.file("q", QS1);
    let c = sb.file("c", "temperature OMIT\n");
    let o = rawfilter(&["compile", "--query", s(&q), "--config", s(&c)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omitted"));
}

#[test]
fn compile_reports_syntax_position() {
    let sb = Sandbox::new();
    let q = sb.file("q", r#"(1 <= "a" <= 2) AND"#);
    let c = sb.file("c", "a VALUE_ONLY\n");
    let o = rawfilter(&["compile", "--query", s(&q), "--config", s(&c)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte 19"));
}

#[test]
fn compile_tolls_amount_bigrams() {
    let sb = Sandbox::new();
    let d = sb.compile("qt", QT, "tolls_amount SCOPED 2\n");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d).unwrap()).unwrap();
    let grams: Vec<&str> = v["primitives"][0]["grams"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g.as_str().unwrap())
        .collect();
    assert_eq!(
        grams,
        ["to", "ol", "ll", "ls", "s_", "_a", "am", "mo", "ou", "un", "nt"]
    );
    assert_eq!(v["notation"], "{ s2(tolls_amount) & v(2.50<=f<=18.00) }");
}

#[test]
fn missing_file_is_an_io_error() {
    let o = rawfilter(&[
        "compile",
        "--query",
        "/nonexistent/q",
        "--config",
        "/nonexistent/c",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn run_flat_versus_scoped() {
    let sb = Sandbox::new();
    let data = sb.file("l1.json", &format!("{RUNNING_EXAMPLE}\n"));
    let flat = sb.compile("f", Q0, "temperature FLAT 1\n");
    let scoped = sb.compile("s", Q0, "temperature SCOPED 1\n");

    let o = rawfilter(&["run", "--filter", s(&flat), "--dataset", s(&data)]);
    assert!(o.status.success());
    assert_eq!(
        String::from_utf8(o.stdout.clone()).unwrap(),
        format!("{RUNNING_EXAMPLE}\n")
    );
    assert_eq!(stats(&o)["records_out"], 1);

    let o = rawfilter(&["run", "--filter", s(&scoped), "--dataset", s(&data)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let st = stats(&o);
    assert_eq!(st["records_in"], 1);
    assert_eq!(st["records_out"], 0);
}

#[test]
fn run_empty_input() {
    let sb = Sandbox::new();
    let f = sb.compile("f", Q0, "temperature FLAT 1\n");
    let o = rawfilter_stdin(&["run", "--filter", s(&f), "--dataset", "-"], b"");
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let st = stats(&o);
    assert_eq!(st["records_in"], 0);
    assert_eq!(st["records_out"], 0);
}

#[test]
fn run_passes_records_through_verbatim_in_order() {
    let sb = Sandbox::new();
    let mut input = String::new();
    for i in 0..500 {
        input.push_str(&format!(
            "{{ \"bt\" : {} , \"s\":\"x\\\"{{\" }}\n",
            1000 + i
        ));
    }
    input.push_str("{\"unclosed\":1");
    let data = sb.file("d.ndjson", &input);
    let f = sb.compile("f", r#"(0 <= "bt")"#, "bt VALUE_ONLY\n");
    let one = rawfilter(&[
        "run",
        "--filter",
        s(&f),
        "--dataset",
        s(&data),
        "--workers",
        "1",
    ]);
    let four = rawfilter(&[
        "run",
        "--filter",
        s(&f),
        "--dataset",
        s(&data),
        "--workers",
        "4",
    ]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let mut expected = input.clone();
    expected.push('\n');
    assert_eq!(String::from_utf8(one.stdout.clone()).unwrap(), expected);
    let st = stats(&one);
    assert_eq!(st["records_in"], 501);
    assert_eq!(st["malformed"], 1);

    let ndjson = rawfilter(&[
        "run",
        "--filter",
        s(&f),
        "--dataset",
        s(&data),
        "--format",
        "ndjson",
    ]);
    assert_eq!(stats(&ndjson)["records_in"], 501);
}

#[test]
fn run_rejects_tampered_descriptor() {
    let sb = Sandbox::new();
    let f = sb.compile("f", Q0, "temperature FLAT 1\n");
    let text = fs::read_to_string(&f)
        .unwrap()
        .replace("s1(temperature) &", "s2(temperature) &");
    let bad = sb.file("bad.json", &text);
    let data = sb.file("d", RUNNING_EXAMPLE);
    let o = rawfilter(&["run", "--filter", s(&bad), "--dataset", s(&data)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_toy_corpus() {
    let sb = Sandbox::new();
    let q = sb.file("q", r#"(1 <= "a" <= 2)"#);
    let c = sb.file("c", "a VALUE_ONLY\n");
    let data = sb.file("d", "{\"a\":1}\n{\"b\":1}\n{\"a\":5}\n{\"b\":7}\n");
    let o = rawfilter(&[
        "eval",
        "--query",
        s(&q),
        "--config",
        s(&c),
        "--dataset",
        s(&data),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tp"], 1);
    assert_eq!(v["fp"], 1);
    assert_eq!(v["tn"], 2);
    assert_eq!(v["fn"], 0);
    assert!((v["fpr"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn eval_all_accepting_filter() {
    let sb = Sandbox::new();
    let q = sb.file("q", r#"(0 <= "a")"#);
    let c = sb.file("c", "a VALUE_ONLY\n");
    let data = sb.file("d", "{\"a\":1,\"t\":9}\n{\"b\":1}\n{\"a\":-5,\"t\":9}\n");
    let o = rawfilter(&[
        "eval",
        "--query",
        s(&q),
        "--config",
        s(&c),
        "--dataset",
        s(&data),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["fpr"].as_f64().unwrap(), 1.0);
    assert_eq!(v["fn"], 0);
}

#[test]
fn eval_false_negative_exits_4() {
    // key and value sit in different comma segments of the SenML object
    let sb = Sandbox::new();
    let q = sb.file("q", Q0);
    let c = sb.file("c", "temperature KEYVALUE N\n");
    let data = sb.file("d", &RUNNING_EXAMPLE.replace("35.2", "30.0"));
    let o = rawfilter(&[
        "eval",
        "--query",
        s(&q),
        "--config",
        s(&c),
        "--dataset",
        s(&data),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

const GEN_SPEC: &str = r#"
layout = senml
records = 3000
seed = 5
attribute = temperature decimal -20 50 1 far
attribute = humidity decimal 0 100 1
attribute = light integer 0 30000 0
query = (0.7 <= "temperature" <= 35.1) AND (20.3 <= "humidity" <= 69.1) AND (0 <= "light" <= 5153)
selectivity = 0.2
decoys = 2
"#;

#[test]
fn gen_is_deterministic_and_labels_match() {
    let sb = Sandbox::new();
    let spec = sb.file("spec", GEN_SPEC);
    let a = sb.path("a.ndjson");
    let b = sb.path("b.ndjson");
    assert!(rawfilter(&["gen", "--spec", s(&spec), "--out", s(&a)])
        .status
        .success());
    assert!(rawfilter(&["gen", "--spec", s(&spec), "--out", s(&b)])
        .status
        .success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let labels = fs::read_to_string(sb.path("a.ndjson.labels.csv")).unwrap();
    let matches = labels.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(matches, 600);
    let first = fs::read_to_string(&a).unwrap();
    assert!(first.starts_with(r#"{"e":[{"v":""#));

    let o = rawfilter(&["gen", "--spec", s(&spec), "--seed", "6"]);
    assert_ne!(o.stdout, fs::read(&a).unwrap());
}

#[test]
fn gen_realized_selectivity() {
    let sb = Sandbox::new();
    let spec = sb.file(
        "spec",
        &GEN_SPEC.replace("selectivity = 0.2", "selectivity = 0.054"),
    );
    let out = sb.path("d.ndjson");
    let o = rawfilter(&[
        "gen",
        "--spec",
        s(&spec),
        "--records",
        "100000",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let labels = fs::read_to_string(sb.path("d.ndjson.labels.csv")).unwrap();
    let n = labels.lines().count() - 1;
    let m = labels.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(n, 100_000);
    assert!((m as f64 / n as f64 - 0.054).abs() <= 0.01);
}

#[test]
fn gen_invalid_spec_exits_2() {
    let sb = Sandbox::new();
    let spec = sb.file("spec", "attribute = a real 0 1 0\n");
    assert_eq!(
        rawfilter(&["gen", "--spec", s(&spec)]).status.code(),
        Some(2)
    );
}

#[test]
fn eval_all_scoped_exact_is_zero_fpr_on_generated_data() {
    let sb = Sandbox::new();
    let spec = sb.file("spec", GEN_SPEC);
    let data = sb.path("d.ndjson");
    assert!(rawfilter(&["gen", "--spec", s(&spec), "--out", s(&data)])
        .status
        .success());
    let q = sb.file(
        "q",
        GEN_SPEC
            .lines()
            .find(|l| l.starts_with("query"))
            .unwrap()
            .split_once('=')
            .unwrap()
            .1,
    );
    let c = sb.file(
        "c",
        "temperature SCOPED N\nhumidity SCOPED N\nlight SCOPED N\n",
    );
    let o = rawfilter(&[
        "eval",
        "--query",
        s(&q),
        "--config",
        s(&c),
        "--dataset",
        s(&data),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["fpr"].as_f64().unwrap(), 0.0);
    assert_eq!(v["tp"], 600);
}

#[test]
fn explore_two_predicates_single_block() {
    let sb = Sandbox::new();
    let spec = sb.file("spec", GEN_SPEC);
    let data = sb.path("d.ndjson");
    assert!(rawfilter(&["gen", "--spec", s(&spec), "--out", s(&data)])
        .status
        .success());
    let q = sb.file(
        "q",
        r#"(0.7 <= "temperature" <= 35.1) AND (20.3 <= "humidity" <= 69.1)"#,
    );
    let out = sb.path("ex");
    let o = rawfilter(&[
        "explore",
        "--query",
        s(&q),
        "--dataset",
        s(&data),
        "--blocks",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = fs::read_to_string(out.join("reports.csv")).unwrap();
    let mut lines = reports.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_id,config,fpr,fp,tn,tp,fn,cost,wall_ms"
    );
    assert_eq!(lines.count(), 15);
}

#[test]
fn explore_front_is_ordered_and_byte_stable() {
    let sb = Sandbox::new();
    let spec = sb.file("spec", GEN_SPEC);
    let data = sb.path("d.ndjson");
    assert!(rawfilter(&["gen", "--spec", s(&spec), "--out", s(&data)])
        .status
        .success());
    let q = sb.file(
        "q",
        GEN_SPEC
            .lines()
            .find(|l| l.starts_with("query"))
            .unwrap()
            .split_once('=')
            .unwrap()
            .1,
    );
    let (a, b) = (sb.path("a"), sb.path("b"));
    for (out, workers) in [(&a, "1"), (&b, "4")] {
        let o = rawfilter(&[
            "explore",
            "--query",
            s(&q),
            "--dataset",
            s(&data),
            "--out",
            s(out),
            "--workers",
            workers,
        ]);
        assert!(o.status.success());
    }
    for f in ["reports.csv", "pareto.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let front = fs::read_to_string(a.join("pareto.csv")).unwrap();
    let rows: Vec<(f64, f64)> = front
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[2].parse().unwrap(), cols[7].parse().unwrap())
        })
        .collect();
    assert!(rows.len() > 2);
    for w in rows.windows(2) {
        assert!(w[0].0 > w[1].0 && w[0].1 < w[1].1, "{w:?}");
    }
    let fns_zero = fs::read_to_string(a.join("reports.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(6) == Some("0"));
    assert!(fns_zero);
}

#[test]
fn explore_cap_exits_5() {
    let sb = Sandbox::new();
    let q = sb.file("q", QS1);
    let data = sb.file("d", RUNNING_EXAMPLE);
    let o = rawfilter(&[
        "explore",
        "--query",
        s(&q),
        "--dataset",
        s(&data),
        "--cap",
        "1000",
        "--out",
        s(&sb.path("x")),
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("32767"));
}

#[test]
fn bench_reports_throughput() {
    let sb = Sandbox::new();
    let spec = sb.file("spec", GEN_SPEC);
    let data = sb.path("d.ndjson");
    assert!(rawfilter(&["gen", "--spec", s(&spec), "--out", s(&data)])
        .status
        .success());
    let f = sb.compile("f", Q0, "temperature SCOPED 2\n");
    let o = rawfilter(&[
        "bench",
        "--filter",
        s(&f),
        "--dataset",
        s(&data),
        "--repetitions",
        "3",
        "--scaling",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("3000 records"));
    assert!(text.contains("MB/s"));
    assert!(text.contains("4 workers"));
}
