mod support;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde_json::json;

use sentasm::harness::{BugReport, Evidence, Mr, RunStats, Verdict};
use sentasm::jsonl::{read_jsonl, to_jsonl_string, NodeRecord, TemplateRecord};
use sentasm::metamorphic::{SaTest, SsmTest};
use sentasm::mutation::Provenance;
use sentasm::Task;
use support::*;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Copies the fixture parses of `ids` into `dir`.
fn corpus_subset(dir: &Path, ids: &[&str]) -> Vec<String> {
    let f = fixtures();
    let conllu = fs::read_to_string(f.join("corpus.conllu")).unwrap();
    let blocks: Vec<&str> = conllu
        .split("\n\n")
        .filter(|b| ids.iter().any(|id| b.contains(&format!("# sent_id = {id}\n"))))
        .collect();
    let keep = |file: &str, pick: &dyn Fn(&str, &str) -> bool| {
        let text = fs::read_to_string(f.join(file)).unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| ids.iter().any(|id| pick(l, id))).collect();
        fs::write(dir.join(file), lines.join("\n") + "\n").unwrap();
    };
    fs::write(dir.join("corpus.conllu"), blocks.join("\n\n") + "\n\n").unwrap();
    keep("trees.ptb", &|l, id| l.starts_with(&format!("{id}\t")));
    keep("labels.jsonl", &|l, id| l.contains(&format!("\"id\": \"{id}\"")));
    vec![
        "--conllu".into(),
        path_str(&dir.join("corpus.conllu")),
        "--trees".into(),
        path_str(&dir.join("trees.ptb")),
        "--labels".into(),
        path_str(&dir.join("labels.jsonl")),
    ]
}

#[test]
fn disassemble_writes_one_record_per_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["disassemble".to_string(), "--out".into(), path_str(dir.path())];
    args.extend(corpus_subset(dir.path(), &["p2s1", "sa02", "m03"]));
    let out = sentasm(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let records: Vec<TemplateRecord> =
        read_jsonl(&fs::read_to_string(dir.path().join("templates.jsonl")).unwrap()).unwrap();
    assert_eq!(records.len(), 3);
    let p2s1 = records.iter().find(|r| r.id == "p2s1").unwrap();
    assert_eq!(p2s1.base, "Downtown Jacksonville was ravaged by a fire.");
    assert_eq!(p2s1.slots.len(), 2);
    assert!(records.iter().find(|r| r.id == "m03").unwrap().degenerate.is_some());
    assert!(stdout(&out).contains("templates: 3"));
}

#[test]
fn empty_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.conllu");
    fs::write(&empty, "").unwrap();
    let out = sentasm(&["disassemble", "--conllu", &path_str(&empty), "--out", &path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no sentences"), "{}", stderr(&out));
    assert!(!dir.path().join("templates.jsonl").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = sentasm(&["generate", "--out", &path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no task"));

    let out = sentasm(&["generate", "--beam", "0", "--task", "sa"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sentasm(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sentasm(&["test", "--task", "sa", "--out", &path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--endpoint"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "beam_size = 4\n").unwrap();
    let out = sentasm(&["disassemble", "--config", &path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(sentasm(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_paths_are_relative_to_it() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "conllu = \"{}\"\ntrees = \"{}\"\nlabels = \"{}\"\nout = \"results\"\nbeam = 2\n",
            path_str(&f.join("corpus.conllu")),
            path_str(&f.join("trees.ptb")),
            path_str(&f.join("labels.jsonl")),
        ),
    )
    .unwrap();
    let out = sentasm(&["disassemble", "--config", &path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("results/templates.jsonl").exists());
}

fn generate(task: &str, out_dir: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec!["generate".to_string(), "--task".into(), task.into(), "--seeds".into(), seeds(task)];
    // Flags in `extra` replace the fixture defaults.
    for pair in corpus_args().chunks(2) {
        if !extra.contains(&pair[0].as_str()) {
            args.extend(pair.iter().cloned());
        }
    }
    args.extend(["--out".to_string(), path_str(out_dir)]);
    args.extend(extra.iter().map(|s| s.to_string()));
    sentasm(&args)
}

#[test]
fn mrc_suites_are_byte_identical_for_a_fixed_seed() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let workers = ["1", "1", "4"];
    let suites: Vec<Vec<u8>> = dirs
        .iter()
        .zip(workers)
        .map(|(d, w)| {
            let out = generate("mrc", d.path(), &["--seed", "42", "--workers", w]);
            assert!(out.status.success(), "{}", stderr(&out));
            fs::read(d.path().join("suite.mrc.jsonl")).unwrap()
        })
        .collect();
    assert!(!suites[0].is_empty());
    assert_eq!(suites[0], suites[1]);
    assert_eq!(suites[0], suites[2]);

    let other = tempfile::tempdir().unwrap();
    assert!(generate("mrc", other.path(), &["--seed", "7"]).status.success());
    assert_ne!(fs::read(other.path().join("suite.mrc.jsonl")).unwrap(), suites[0]);
}

#[test]
fn summary_reports_the_average_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate("sa", dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let tests: Vec<SaTest> = read_jsonl(&fs::read_to_string(dir.path().join("suite.sa.jsonl")).unwrap()).unwrap();
    let seeds = fs::read_to_string(seeds("sa")).unwrap().lines().skip(1).filter(|l| !l.is_empty()).count();
    let avg = tests.len() as f64 / seeds as f64;
    let line = format!("seeds {seeds}, trees {seeds}, tests {}, avg tests/seed {avg:.2}", tests.len());
    assert!(stdout(&out).contains(&line), "{}\nexpected: {line}", stdout(&out));

    let nodes: Vec<NodeRecord> = read_jsonl(&fs::read_to_string(dir.path().join("trees.sa.jsonl")).unwrap()).unwrap();
    for t in &tests {
        assert!(nodes.iter().any(|n| n.node_id == t.child_id && n.text == t.child_text));
    }
}

#[test]
fn chain_trees_give_three_pairs_each() {
    // Without synonyms every tree is a chain; a chain over two slots has
    // three ancestor/descendant pairs.
    let dir = tempfile::tempdir().unwrap();
    let lexicon = dir.path().join("empty.tsv");
    fs::write(&lexicon, "# lemma\tupos\tsynonyms\n").unwrap();
    let out = generate("ssm", dir.path(), &["--lexicon", &path_str(&lexicon)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let nodes: Vec<NodeRecord> = read_jsonl(&fs::read_to_string(dir.path().join("trees.ssm.jsonl")).unwrap()).unwrap();
    let tests: Vec<SsmTest> = read_jsonl(&fs::read_to_string(dir.path().join("suite.ssm.jsonl")).unwrap()).unwrap();
    let mut sizes: HashMap<&str, usize> = HashMap::new();
    for n in &nodes {
        *sizes.entry(n.tree_id.as_str()).or_default() += 1;
    }
    let chains: Vec<&str> = sizes.iter().filter(|(_, &n)| n == 3).map(|(id, _)| *id).collect();
    assert!(!chains.is_empty());
    for id in chains {
        let pairs = tests.iter().filter(|t| t.seed_id == id).count();
        assert_eq!(pairs, 3, "tree {id}");
    }
    assert!(sizes.values().all(|&n| n <= 4));
}

#[test]
fn mlm_generation_uses_the_fill_mask_service() {
    let mlm = toy_fill_mask();
    let dir = tempfile::tempdir().unwrap();
    let out = generate("sa", dir.path(), &["--strategy", "mlm", "--mlm-endpoint", &mlm.url, "--workers", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(mlm.hits() > 0);
    let tests: Vec<SaTest> = read_jsonl(&fs::read_to_string(dir.path().join("suite.sa.jsonl")).unwrap()).unwrap();
    assert!(tests.iter().any(|t| t.provenance == Provenance::Mlm));
}

#[test]
fn unreachable_services_exit_three() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let dead = format!("http://127.0.0.1:{port}");
    let dir = tempfile::tempdir().unwrap();
    let out = generate("sa", dir.path(), &["--strategy", "mlm", "--mlm-endpoint", &dead]);
    assert_eq!(out.status.code(), Some(3));

    assert!(generate("sa", dir.path(), &[]).status.success());
    let out = sentasm(&["test", "--task", "sa", "--endpoint", &dead, "--out", &path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("unreachable"), "{}", stderr(&out));
}

fn ssm_test(id: &str, a: &str, b: &str) -> SsmTest {
    SsmTest {
        id: id.into(),
        seed_id: "s".into(),
        node_a: "s:r".into(),
        node_b: "s:0".into(),
        text_a: a.into(),
        text_b: b.into(),
        levels: (0, 1),
    }
}

#[test]
fn stub_model_yields_the_scripted_violations() {
    // The stub calls a pair duplicate exactly when the longer text says
    // "quickly", which two of the four tests do.
    let stub = StubServer::start(|_, req| {
        let b = req["text_b"].as_str().unwrap_or("");
        (200, json!({ "duplicate": u8::from(b.contains("quickly")) }))
    });
    let dir = tempfile::tempdir().unwrap();
    let suite = [
        ssm_test("s/1", "He ran.", "He ran quickly."),
        ssm_test("s/2", "He ran.", "He ran home."),
        ssm_test("s/3", "She left.", "She left quickly at noon."),
        ssm_test("s/4", "She left.", "She left at noon."),
    ];
    let path = dir.path().join("suite.ssm.jsonl");
    fs::write(&path, to_jsonl_string(&suite)).unwrap();
    let out = sentasm(&["test", "--task", "ssm", "--endpoint", &stub.url, "--out", &path_str(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stub.hits(), 4);

    let reports: Vec<BugReport> =
        read_jsonl(&fs::read_to_string(dir.path().join("reports.ssm.jsonl")).unwrap()).unwrap();
    let ids: Vec<&str> = reports.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["bug-s/1", "bug-s/3"]);
    assert!(reports.iter().all(|r| r.mr == Mr::SemVar && r.verdict == Verdict::Unlabeled));
    let stats: RunStats = serde_json::from_str(&fs::read_to_string(dir.path().join("stats.ssm.json")).unwrap()).unwrap();
    assert_eq!((stats.total, stats.executed, stats.violations), (4, 4, 2));
}

fn report(id: &str) -> BugReport {
    BugReport {
        id: id.into(),
        task: Task::Ssm,
        mr: Mr::SemVar,
        test_id: id.trim_start_matches("bug-").into(),
        inputs: json!({}),
        outputs: json!({ "duplicate": 1 }),
        evidence: Evidence::Ssm { duplicate: 1 },
        verdict: Verdict::Unlabeled,
    }
}

#[test]
fn report_computes_precision_from_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports.jsonl");
    let ids = ["bug-a", "bug-b", "bug-c", "bug-d"];
    fs::write(&reports, to_jsonl_string(ids.iter().map(|id| report(id)))).unwrap();
    let verdicts = dir.path().join("verdicts.csv");
    fs::write(&verdicts, "report_id,verdict\nbug-a,TP\nbug-b,TP\nbug-c,FP\nbug-d,TP\n").unwrap();
    let out = sentasm(&["report", "--reports", &path_str(&reports), "--verdicts", &path_str(&verdicts)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "reports: 4\nTP: 3\nprecision: 0.7500\n");
}

#[test]
fn report_lists_ids_without_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports.jsonl");
    fs::write(&reports, to_jsonl_string([report("bug-a"), report("bug-b"), report("bug-c")])).unwrap();
    let verdicts = dir.path().join("verdicts.csv");
    fs::write(&verdicts, "bug-a,TP\n").unwrap();
    let out = sentasm(&["report", "--reports", &path_str(&reports), "--verdicts", &path_str(&verdicts)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bug-b") && err.contains("bug-c") && !err.contains("bug-a,"), "{err}");

    let out = sentasm(&["report", "--reports", &path_str(&reports)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bug-a"));
}

#[test]
fn example_config_generates_a_suite() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fixtures.toml");
    let out = sentasm(&["generate", "--config", &path_str(&config), "--out", &path_str(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("sa: seeds 20,"));
}
