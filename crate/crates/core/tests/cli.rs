use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tutorial() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tutorial")
}

fn setexpand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setexpand"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tutorial_corpus_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (sessions, truth) = (dir.path().join("s.tsv"), dir.path().join("t.tsv"));
    let spec = tutorial().join("spec.toml");
    let out = setexpand(&[
        "gen-corpus",
        "--spec",
        path(&spec),
        "--out-sessions",
        path(&sessions),
        "--out-truth",
        path(&truth),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(&sessions).unwrap(),
        std::fs::read(tutorial().join("sessions.tsv")).unwrap()
    );
    assert_eq!(
        std::fs::read(&truth).unwrap(),
        std::fs::read(tutorial().join("truth.tsv")).unwrap()
    );
}

#[test]
fn tutorial_expansion_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let t = tutorial();
    let out = setexpand(&[
        "expand",
        "--sessions",
        path(&t.join("sessions.tsv")),
        "--seeds",
        path(&t.join("seeds.txt")),
        "--config",
        path(&t.join("config.toml")),
        "--out-dir",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in [
        "diagnostic_ngrams.tsv",
        "intermediate.tsv",
        "positives.tsv",
        "negatives.tsv",
    ] {
        let got = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let want = std::fs::read_to_string(t.join("expected").join(name)).unwrap();
        assert_eq!(got, want, "{name} drifted from the golden file");
    }
}

#[test]
fn staged_commands_reproduce_expand() {
    let dir = tempfile::tempdir().unwrap();
    let t = tutorial();
    let d = dir.path();
    let config = t.join("config.toml");
    let out = setexpand(&[
        "build-graph",
        "--sessions",
        path(&t.join("sessions.tsv")),
        "--out",
        path(&d.join("g.tsv")),
        "--config",
        path(&config),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = setexpand(&[
        "phase1",
        "--graph",
        path(&d.join("g.tsv")),
        "--seeds",
        path(&t.join("seeds.txt")),
        "--out-diagnostic",
        path(&d.join("f.tsv")),
        "--out-intermediate",
        path(&d.join("i.tsv")),
        "--config",
        path(&config),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = setexpand(&[
        "phase2",
        "--sessions",
        path(&t.join("sessions.tsv")),
        "--intermediate",
        path(&d.join("i.tsv")),
        "--out-positives",
        path(&d.join("p.tsv")),
        "--out-negatives",
        path(&d.join("n.tsv")),
        "--config",
        path(&config),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for (ours, golden) in [
        ("f.tsv", "diagnostic_ngrams.tsv"),
        ("i.tsv", "intermediate.tsv"),
        ("p.tsv", "positives.tsv"),
        ("n.tsv", "negatives.tsv"),
    ] {
        assert_eq!(
            std::fs::read(d.join(ours)).unwrap(),
            std::fs::read(t.join("expected").join(golden)).unwrap(),
            "{ours}"
        );
    }
}

#[test]
fn missing_seeds_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-seeds.txt");
    let out = setexpand(&[
        "expand",
        "--sessions",
        path(&tutorial().join("sessions.tsv")),
        "--seeds",
        path(&missing),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("no-such-seeds.txt"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn seeds_outside_the_graph_are_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(&seeds, "nothing like this\n").unwrap();
    let out = setexpand(&[
        "expand",
        "--sessions",
        path(&tutorial().join("sessions.tsv")),
        "--seeds",
        path(&seeds),
        "--config",
        path(&tutorial().join("config.toml")),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = tutorial();
    let (sessions, seeds, config) = (
        t.join("sessions.tsv"),
        t.join("seeds.txt"),
        t.join("config.toml"),
    );
    let run = |extra: &[&str], sub: &str| {
        let out_dir = dir.path().join(sub);
        let mut args = vec![
            "expand",
            "--sessions",
            path(&sessions),
            "--seeds",
            path(&seeds),
            "--config",
            path(&config),
            "--out-dir",
            path(&out_dir),
        ];
        args.extend_from_slice(extra);
        let out = setexpand(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read_to_string(out_dir.join("diagnostic_ngrams.tsv")).unwrap()
    };
    let base = run(&[], "base");
    let narrow = run(&["--top-k", "3"], "narrow");
    assert!(base.lines().count() > 3);
    assert_eq!(narrow.lines().count(), 3);
    assert!(base.starts_with(&narrow));
}

#[test]
fn sigma_one_keeps_a_single_seed_link() {
    let dir = tempfile::tempdir().unwrap();
    let t = tutorial();
    let d = dir.path();
    let config = t.join("config.toml");
    let out = setexpand(&[
        "build-graph",
        "--sessions",
        path(&t.join("sessions.tsv")),
        "--out",
        path(&d.join("g.tsv")),
        "--config",
        path(&config),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = setexpand(&[
        "phase1",
        "--graph",
        path(&d.join("g.tsv")),
        "--seeds",
        path(&t.join("seeds.txt")),
        "--out-diagnostic",
        path(&d.join("f.tsv")),
        "--out-intermediate",
        path(&d.join("i.tsv")),
        "--config",
        path(&config),
        "--sigma",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = setexpand(&[
        "explain",
        "--graph",
        path(&d.join("g.tsv")),
        "--ngram",
        "weed",
        "--seeds",
        path(&t.join("seeds.txt")),
        "--config",
        path(&config),
        "--sigma",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("#explain\tngram=weed\t"), "{text}");
    assert!(text.contains("\tcontributing=1\t"), "{text}");
    let f = std::fs::read_to_string(d.join("f.tsv")).unwrap();
    let listed = f.lines().find(|l| l.starts_with("weed\t")).unwrap();
    let score = listed.split('\t').nth(1).unwrap();
    assert!(
        text.lines()
            .next()
            .unwrap()
            .ends_with(&format!("score={score}")),
        "{text}\n{listed}"
    );
}

#[test]
fn explain_query_against_golden_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let t = tutorial();
    let graph = dir.path().join("g.tsv");
    let config = t.join("config.toml");
    let out = setexpand(&[
        "build-graph",
        "--sessions",
        path(&t.join("sessions.tsv")),
        "--out",
        path(&graph),
        "--config",
        path(&config),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = setexpand(&[
        "explain",
        "--graph",
        path(&graph),
        "--query",
        "kush",
        "--diagnostic",
        path(&t.join("expected/diagnostic_ngrams.tsv")),
        "--config",
        path(&config),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let golden = std::fs::read_to_string(t.join("expected/intermediate.tsv")).unwrap();
    let score = golden
        .lines()
        .find(|l| l.starts_with("kush\t"))
        .unwrap()
        .split('\t')
        .nth(1)
        .unwrap();
    assert!(
        text.lines()
            .next()
            .unwrap()
            .ends_with(&format!("score={score}")),
        "{text}"
    );

    let out = setexpand(&["explain", "--graph", path(&graph), "--query", "kush"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "--query without --diagnostic is a usage error"
    );
}

#[test]
fn help_lists_published_defaults() {
    let out = setexpand(&["expand", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for default in [
        "[default: -18, published]",
        "[default: 100, published]",
        "[default: 50, published]",
        "[default: 0.005, published]",
    ] {
        assert!(text.contains(default), "missing {default}\n{text}");
    }
}

#[test]
fn hybrid_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let expected = tutorial().join("expected");
    let (p, n) = (
        expected.join("positives.tsv"),
        expected.join("negatives.tsv"),
    );
    let out = setexpand(&[
        "hybrid-train",
        "--positives",
        path(&p),
        "--negatives",
        path(&n),
        "--out",
        path(&d.join("m.tsv")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = setexpand(&[
        "hybrid-diff",
        "--positives",
        path(&p),
        "--negatives",
        path(&n),
        "--model",
        path(&d.join("m.tsv")),
        "--out",
        path(&d.join("table.tsv")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let queries: String = ["grow indica", "crock", "pot chicken", "slow pot"]
        .iter()
        .map(|q| format!("{q}\n"))
        .collect();
    let input = d.join("queries.txt");
    std::fs::write(&input, queries).unwrap();
    let out = setexpand(&[
        "hybrid-classify",
        "--model",
        path(&d.join("m.tsv")),
        "--table",
        path(&d.join("table.tsv")),
        "--input",
        path(&input),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    // every training query gets its behavioral label back
    assert!(text.contains("grow indica\tpositive"), "{text}");
    assert!(text.contains("crock\tpositive"), "{text}");
    assert!(text.contains("pot chicken\tnegative"), "{text}");
    assert!(text.contains("slow pot\tnegative"), "{text}");
}
