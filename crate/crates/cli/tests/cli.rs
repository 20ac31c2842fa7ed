//! The command surface: binary exit codes, archive contents, analysis
//! outputs, and the serve/exec ends of the adapter protocol.

mod support;

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;

use filler_gap_cli::archive::{decompress, manifest_path, read_profiles};
use filler_gap_cli::backends::BackendSpec;
use filler_gap_cli::commands::{self, Failure, RunOptions};
use filler_gap_cli::fmt::{num, parse_num, Table};
use filler_gap_cli::svg::attribute_values;
use filler_gap_core::backend::{spawn_external, Backend, ExternalConfig, SentenceScorer, UniformBackend};
use filler_gap_core::ngram;
use filler_gap_core::suite::{expand, measure, MeasurementSpec};
use support::{bin, fixture, load_fixture};
use tempfile::TempDir;

const TOY: &str = "the cat sat .\nthe dog sat .\na cat ran .\nthe cat ran home .\n";

fn opts() -> RunOptions {
    RunOptions { threads: 4, allow_nondeterministic: false }
}

fn filler_gap(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_table(p: &Path) -> Table {
    Table::parse(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn train_fixture_model(dir: &Path, order: usize) -> PathBuf {
    let arpa = dir.join(format!("o{order}.arpa"));
    commands::train(&fixture("corpus.txt"), order, 1, &arpa).unwrap();
    arpa
}

#[test]
fn train_writes_importable_arpa() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("toy.txt");
    std::fs::write(&corpus, TOY).unwrap();
    for order in [1, 3] {
        let out = dir.path().join(format!("toy{order}.arpa"));
        let o = filler_gap(&["train", "--corpus", path(&corpus), "--order", &order.to_string(), "--out", path(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains("vocabulary: "), "{stdout}");
        let text = std::fs::read_to_string(&out).unwrap();
        let model = ngram::import_arpa(&text).unwrap();
        assert_eq!(model.order(), order);
        let direct = ngram::train(&ngram::tokenize_corpus(TOY), order, 1).unwrap();
        let words = ["the", "cat", "sat", "home", "."];
        let (a, b) = (model.score_words(&words), direct.score_words(&words));
        for (x, y) in a.bits.iter().zip(&b.bits) {
            assert!((x - y).abs() < 1e-9);
        }
        if order == 1 {
            assert!(text.contains("ngram 1=") && !text.contains("ngram 2="));
            assert!(!text.contains("\\2-grams:"));
        }
    }
}

#[test]
fn io_and_usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.arpa");
    let o = filler_gap(&["train", "--corpus", "/nonexistent/corpus.txt", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/corpus.txt"));
    assert_eq!(filler_gap(&["run", "--experiment", "x.json", "--backend", "gpt:foo"]).status.code(), Some(2));
    assert_eq!(filler_gap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(filler_gap(&["--help"]).status.code(), Some(0));
}

#[test]
fn uniform_backend_gives_three_bits_everywhere() {
    let dir = TempDir::new().unwrap();
    let archive = dir.path().join("u.tsv.gz");
    let exp = fixture("flexibility.json");
    let o = filler_gap(&["run", "--experiment", path(&exp), "--backend", "uniform:8", "--out", path(&archive)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = decompress(&std::fs::read(&archive).unwrap()).unwrap();
    let t = Table::parse(&text).unwrap();
    let e = load_fixture("flexibility");
    let words: usize = expand(&e).iter().map(|s| s.words.len() + 1).sum();
    assert_eq!(t.rows.len(), words);
    assert!(t.column("bits").unwrap().iter().all(|b| *b == "3"));
}

#[test]
fn ngram_archive_reproduces_score_words() {
    let dir = TempDir::new().unwrap();
    let arpa = train_fixture_model(dir.path(), 3);
    let archive = dir.path().join("n.tsv.gz");
    let spec = BackendSpec::Ngram(arpa.clone());
    commands::run(&fixture("length.json"), &spec, &archive, &opts()).unwrap();
    let e = load_fixture("length");
    let sentences = expand(&e);
    let profiles = read_profiles(&std::fs::read(&archive).unwrap(), &e, &sentences, "ngram").unwrap();
    let model = ngram::import_arpa(&std::fs::read_to_string(&arpa).unwrap()).unwrap();
    for (s, p) in sentences.iter().zip(&profiles) {
        let want = model.score_words(&s.words);
        assert_eq!(p.bits, want.bits);
        assert_eq!(p.eos_bits, want.eos_bits);
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let arpa = train_fixture_model(dir.path(), 4);
    for (k, threads) in [(0, 1), (1, 8)] {
        let spec = BackendSpec::Ngram(arpa.clone());
        let archive = dir.path().join(format!("r{k}.tsv.gz"));
        commands::run(&fixture("wh_island.json"), &spec, &archive, &RunOptions { threads, ..opts() }).unwrap();
    }
    let a = std::fs::read(dir.path().join("r0.tsv.gz")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("r1.tsv.gz")).unwrap());
}

#[test]
fn stale_inputs_refuse_without_force() {
    let dir = TempDir::new().unwrap();
    let exp = dir.path().join("exp.json");
    std::fs::copy(fixture("flexibility.json"), &exp).unwrap();
    let archive = dir.path().join("a.tsv.gz");
    let out = dir.path().join("res");
    commands::run(&exp, &BackendSpec::Uniform(8), &archive, &opts()).unwrap();
    let analyze = |extra: &[&str]| {
        let mut args = vec!["analyze", "--archive", path(&archive), "--out", path(&out)];
        args.extend(extra);
        filler_gap(&args)
    };
    assert_eq!(analyze(&[]).status.code(), Some(0));

    // same content, different bytes
    let text = std::fs::read_to_string(&exp).unwrap();
    std::fs::write(&exp, format!("{text}\n")).unwrap();
    let o = analyze(&[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("experiment") && err.contains("--force"), "{err}");
    assert_eq!(analyze(&["--force"]).status.code(), Some(0));
    assert_eq!(analyze(&["--force", "--analysis", "nope"]).status.code(), Some(1));

    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest_path(&archive)).unwrap()).unwrap();
    for key in ["experiment", "backend", "deterministic", "harness_version", "timestamp", "digests"] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }
}

#[test]
fn null_archive_gives_zero_bars_and_zero_width_intervals() {
    let dir = TempDir::new().unwrap();
    let arpa = train_fixture_model(dir.path(), 5);
    let archive = dir.path().join("n.tsv.gz");
    commands::run(&fixture("flexibility.json"), &BackendSpec::Ngram(arpa), &archive, &opts()).unwrap();
    let run = commands::load_run(&archive, false).unwrap();
    let out = dir.path().join("res");
    for a in commands::analyze(&run, &[], &out).unwrap() {
        let svg = std::fs::read_to_string(a.dir.join("interaction.svg")).unwrap();
        let values = attribute_values(&svg, "data-value");
        assert!(!values.is_empty());
        assert!(values.iter().all(|v| v == "0"), "{}: {values:?}", a.name);
        assert!(attribute_values(&svg, "data-half-width").iter().all(|v| v == "0"));
        if a.dir.join("regions.svg").exists() {
            let svg = std::fs::read_to_string(a.dir.join("regions.svg")).unwrap();
            assert!(attribute_values(&svg, "data-value").iter().all(|v| v == "0"));
        }
    }
}

#[test]
fn constant_archive_gives_flat_plots() {
    let dir = TempDir::new().unwrap();
    let archive = dir.path().join("c.tsv.gz");
    commands::run(&fixture("length.json"), &BackendSpec::Uniform(16), &archive, &opts()).unwrap();
    let run = commands::load_run(&archive, false).unwrap();
    for a in commands::analyze(&run, &[], &dir.path().join("res")).unwrap() {
        for f in a.files.iter().filter(|f| f.extension().is_some_and(|x| x == "svg")) {
            let name = f.file_name().unwrap().to_str().unwrap();
            let svg = std::fs::read_to_string(f).unwrap();
            let values = attribute_values(&svg, "data-value");
            if name.starts_with("conditions") {
                // the wh and that variants have equal length, so only the gap moves the means
                assert_eq!(values[0], values[1], "{name}");
                assert_eq!(values[2], values[3], "{name}");
            } else {
                assert!(values.iter().all(|v| v == "0"), "{name}: {values:?}");
            }
        }
    }
}

#[test]
fn region_interactions_partition_the_sentence() {
    let dir = TempDir::new().unwrap();
    let arpa = train_fixture_model(dir.path(), 3);
    let archive = dir.path().join("p.tsv.gz");
    commands::run(&fixture("wh_island.json"), &BackendSpec::Ngram(arpa), &archive, &opts()).unwrap();
    let run = commands::load_run(&archive, false).unwrap();
    let out = dir.path().join("res");
    commands::analyze(&run, &["interaction".to_string()], &out).unwrap();
    let regions = read_table(&out.join("interaction/regions.tsv"));

    let e = &run.experiment;
    let sentences = expand(e);
    let labels: Vec<String> = e.items[0].regions.iter().map(|r| r.label.clone()).collect();
    let all = MeasurementSpec { name: "all".into(), regions: labels, include_eos: false };
    let whole = |c: &filler_gap_core::suite::Condition| -> f64 {
        let mut sum = 0.0;
        for (s, p) in sentences.iter().zip(&run.profiles).filter(|(s, _)| s.condition == *c) {
            let _ = s.item;
            sum += measure(e, s, p, &all).unwrap();
        }
        sum / e.items.len() as f64
    };
    for base in e.conditions().into_iter().filter(|c| c.0[e.wh_factor()] == 0 && c.0[e.gap_factor()] == 0) {
        let [a, b, c, d] = e.core_cells(&base).map(|c| whole(&c));
        let expect = (b - a) - (d - c);
        let island = &e.factors[e.factor_index("island").unwrap()];
        let label = format!("island={}", island.levels[base.0[2]]);
        let total: f64 = regions.rows.iter().filter(|r| r[0] == label).map(|r| parse_num(&r[2]).unwrap()).sum();
        assert!((total - expect).abs() < 1e-9, "{label}: {total} vs {expect}");
    }
}

fn slope_file(files: &[PathBuf]) -> String {
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_str().unwrap().to_string())
        .filter(|n| n.starts_with("slope"))
        .collect();
    assert_eq!(names.len(), 1, "{names:?}");
    names[0].clone()
}

#[test]
fn figures_show_exactly_the_tsv_values() {
    let dir = TempDir::new().unwrap();
    let arpa = train_fixture_model(dir.path(), 3);
    let archive = dir.path().join("f.tsv.gz");
    commands::run(&fixture("length.json"), &BackendSpec::Ngram(arpa), &archive, &opts()).unwrap();
    let run = commands::load_run(&archive, false).unwrap();
    let out = dir.path().join("res");
    let report = commands::report(&run, &archive, &out).unwrap();
    let md = std::fs::read_to_string(report).unwrap();
    assert!(md.contains("## object_slope") && md.contains("slope_position_obj.svg"), "{md}");

    for a in commands::analyze(&run, &[], &out).unwrap() {
        if a.dir.join("points.tsv").exists() {
            let points = read_table(&a.dir.join("points.tsv"));
            let svg = std::fs::read_to_string(a.dir.join(slope_file(&a.files))).unwrap();
            assert_eq!(attribute_values(&svg, "data-value"), points.column("interaction").unwrap());
            assert_eq!(attribute_values(&svg, "data-x"), points.column("length").unwrap());
            let coefs = read_table(&a.dir.join("coefficients.tsv"));
            let slope = coefs.rows.iter().find(|r| r[1] == "length").unwrap();
            assert_eq!(attribute_values(&svg, "data-slope"), vec![slope[2].clone()]);
            continue;
        }
        let contrasts = read_table(&a.dir.join("contrasts.tsv"));
        let rows: Vec<&Vec<String>> = contrasts.rows.iter().filter(|r| r[1] == "interaction").collect();
        let svg = std::fs::read_to_string(a.dir.join("interaction.svg")).unwrap();
        assert_eq!(attribute_values(&svg, "data-value"), rows.iter().map(|r| r[2].clone()).collect::<Vec<_>>());
        assert_eq!(attribute_values(&svg, "data-half-width"), rows.iter().map(|r| r[3].clone()).collect::<Vec<_>>());

        let conditions = read_table(&a.dir.join("conditions.tsv"));
        let regions = read_table(&a.dir.join("regions.tsv"));
        let mut plotted = Vec::new();
        for f in &a.files {
            let name = f.file_name().unwrap().to_str().unwrap();
            if name.starts_with("conditions_") && name.ends_with(".svg") {
                plotted.extend(attribute_values(&std::fs::read_to_string(f).unwrap(), "data-value"));
            }
        }
        assert_eq!(plotted, conditions.column("mean").unwrap());
        let svg = std::fs::read_to_string(a.dir.join("regions.svg")).unwrap();
        assert_eq!(attribute_values(&svg, "data-value"), regions.column("interaction").unwrap());
    }
}

#[test]
fn oracle_backend_from_file() {
    let dir = TempDir::new().unwrap();
    let e = load_fixture("wh_island");
    let table = support::island_oracle(&e, 4.0, 0.5);
    let file = dir.path().join("oracle.json");
    std::fs::write(&file, table.to_json()).unwrap();
    let archive = dir.path().join("o.tsv.gz");
    let o = filler_gap(&[
        "run",
        "--experiment",
        path(&fixture("wh_island.json")),
        "--backend",
        &format!("oracle:{}", path(&file)),
        "--out",
        path(&archive),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = filler_gap(&["analyze", "--archive", path(&archive), "--out", path(&dir.path().join("res"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let red = read_table(&dir.path().join("res/island_contrast/reductions.tsv"));
    for r in red.column("reduction").unwrap() {
        assert!((parse_num(r).unwrap() - 3.5).abs() < 1e-6, "{r}");
    }

    // a sentence the table does not cover is reported with its item and condition
    let mut partial = filler_gap_core::backend::OracleTable::new("partial");
    partial.insert(&[], "I", 0.5);
    std::fs::write(&file, partial.to_json()).unwrap();
    let o = filler_gap(&[
        "run",
        "--experiment",
        path(&fixture("wh_island.json")),
        "--backend",
        &format!("oracle:{}", path(&file)),
        "--out",
        path(&archive),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("item 1, condition wh=that,gap=nogap,island=none"), "{err}");
}

const MOCK: &str = r#"
import json, sys
mode = sys.argv[1]
for line in sys.stdin:
    req = json.loads(line)
    if req["type"] == "hello":
        print(json.dumps({"type": "hello", "protocol": 1, "name": "mock-" + mode, "deterministic": mode != "nondet"}), flush=True)
    elif req["type"] == "score":
        bits = [1.0] * len(req["words"])
        if mode == "short" and "gazelle" in req["words"]:
            bits = bits[:-1]
        print(json.dumps({"type": "surprisals", "id": req["id"], "bits": bits, "eos_bits": 0.0}), flush=True)
    else:
        break
"#;

fn mock(dir: &Path, mode: &str) -> String {
    let script = dir.join("mock.py");
    std::fs::write(&script, MOCK).unwrap();
    format!("exec:python3 {} {mode}", path(&script))
}

#[test]
fn exec_backends() {
    let dir = TempDir::new().unwrap();
    let exp = fixture("wh_island.json");
    let archive = dir.path().join("x.tsv.gz");
    let run = |mode: &str, extra: &[&str]| {
        let spec = mock(dir.path(), mode);
        let mut args = vec!["run", "--experiment", path(&exp), "--backend", &spec, "--out", path(&archive)];
        args.extend(extra);
        filler_gap(&args)
    };

    let o = run("ok", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("terminal event"));

    let o = run("nondet", &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nondeterministic") && err.contains("--allow-nondeterministic"), "{err}");
    assert!(run("nondet", &["--allow-nondeterministic"]).status.success());

    let o = run("short", &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("item 1, condition wh=that,gap=nogap,island=none"), "{err}");
    assert!(err.contains("surprisal values for"), "{err}");
}

#[test]
fn serve_speaks_the_protocol() {
    let mut child = Command::new(bin())
        .args(["serve", "--backend", "uniform:1024"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut ask = |line: &str| {
        writeln!(stdin, "{line}").unwrap();
        stdin.flush().unwrap();
        let mut reply = String::new();
        stdout.read_line(&mut reply).unwrap();
        serde_json::from_str::<serde_json::Value>(&reply).unwrap()
    };
    assert_eq!(
        ask(r#"{"type":"hello","protocol":1}"#),
        serde_json::json!({"type": "hello", "protocol": 1, "name": "uniform-1024", "deterministic": true})
    );
    assert_eq!(
        ask(r#"{"type":"score","id":7,"words":["a","b"]}"#),
        serde_json::json!({"type": "surprisals", "id": 7, "bits": [10.0, 10.0], "eos_bits": 10.0})
    );
    writeln!(stdin, r#"{{"type":"shutdown"}}"#).unwrap();
    drop(stdin);
    assert!(child.wait().unwrap().success());

    // and the harness side accepts it, self-test and double-scoring included
    let mut ext = spawn_external(
        path(&bin()),
        &["serve".into(), "--backend".into(), "uniform:8".into()],
        ExternalConfig::default(),
    )
    .unwrap();
    assert!(ext.deterministic());
    let words: Vec<Vec<String>> = (1..30).map(|n| (0..n).map(|i| format!("w{i}")).collect()).collect();
    let got = ext.score_batch(&words).unwrap();
    let u = UniformBackend::new(8).unwrap();
    for (w, p) in words.iter().zip(&got) {
        assert_eq!(p.bits, u.score(0, w).unwrap().bits);
    }
}

#[test]
fn score_command_prints_word_rows() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("s.txt");
    std::fs::write(&input, "I know what the lion devoured .\n\nthe cat sat .\n").unwrap();
    let arpa = train_fixture_model(dir.path(), 3);
    let o = filler_gap(&["score", "--backend", &format!("ngram:{}", path(&arpa)), path(&input)]);
    assert!(o.status.success());
    let t = Table::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 8 + 5);
    let model = Arc::new(ngram::import_arpa(&std::fs::read_to_string(&arpa).unwrap()).unwrap());
    let p = model.score_words(&["the", "cat", "sat", "."]);
    let last: Vec<&str> = t.column("bits").unwrap()[8..].to_vec();
    let want: Vec<String> = p.bits.iter().chain(p.eos_bits.iter()).map(|b| num(*b)).collect();
    assert_eq!(last, want);
}

#[test]
fn failures_are_marked_for_exit_code_1() {
    let dir = TempDir::new().unwrap();
    let archive = dir.path().join("missing.tsv.gz");
    let err = commands::load_run(&archive, false).err().unwrap();
    assert!(!err.chain().any(|c| c.is::<Failure>()), "a missing manifest is an I/O error");
}
