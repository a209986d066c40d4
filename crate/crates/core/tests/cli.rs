use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FIX1: &str = r#"<http://ex.org/A> <http://ex.org/type> <http://ex.org/Actor> .
<http://ex.org/B> <http://ex.org/type> <http://ex.org/Actor> .
<http://ex.org/A> <http://ex.org/actedIn> <http://ex.org/F> .
<http://ex.org/B> <http://ex.org/actedIn> <http://ex.org/F> .
<http://ex.org/A> <http://ex.org/wonPrize> <http://ex.org/P> .
<http://ex.org/F> <http://ex.org/label> "Philadelphia" .
<http://ex.org/P> <http://ex.org/label> "Academy Award" .
"#;

fn skq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skq"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.nt"), FIX1).unwrap();
    assert_eq!(skq(&["ingest", "g.nt", "--store", "g.store"], dir.path()).status.code(), Some(0));
    assert_eq!(
        skq(&["index", "--store", "g.store", "--index", "g.idx"], dir.path()).status.code(),
        Some(0)
    );
    dir
}

#[test]
fn query_reports_ranked_results() {
    let dir = setup();
    let q = r#"SELECT ?a WHERE { ?a type Actor . ?a actedIn ?f } KEYWORDS("Academy Award") K=2"#;
    for strategy in ["indexed", "naive", "exhaustive"] {
        let out = skq(&["query", "--store", "g.store", "--index", "g.idx", "--strategy", strategy, q], dir.path());
        assert_eq!(out.status.code(), Some(0), "{strategy}");
        let text = stdout(&out);
        let results: Vec<&str> = text.lines().filter(|l| l.starts_with("result ")).collect();
        assert_eq!(results.len(), 2, "{strategy}: {text}");
        assert!(results[0].starts_with("result rank=1 total=0.857143 "), "{strategy}: {text}");
        assert!(results[1].starts_with("result rank=2 total=1.285714 "), "{strategy}: {text}");
        assert!(text.lines().any(|l| l.starts_with("timing seconds=")));
    }
}

#[test]
fn unknown_keyword_is_unanswerable_not_an_error() {
    let dir = setup();
    let q = r#"SELECT ?a WHERE { ?a type Actor } KEYWORDS("zanzibar")"#;
    let out = skq(&["query", "--store", "g.store", "--index", "g.idx", q], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("unanswerable reason="));
}

#[test]
fn bench_cross_checks_strategies() {
    let dir = setup();
    let qdir = dir.path().join("queries");
    fs::create_dir(&qdir).unwrap();
    fs::write(
        qdir.join("q1.sk"),
        r#"SELECT ?a WHERE { ?a type Actor . ?a actedIn ?f . ?f label "Philadelphia" } KEYWORDS("Academy Award") K=1"#,
    )
    .unwrap();
    fs::write(qdir.join("q2.sk"), r#"SELECT ?f WHERE { ?a actedIn ?f } KEYWORDS("philadelphia", "award")"#).unwrap();
    let out = skq(
        &["bench", "--store", "g.store", "--index", "g.idx", "--queries", "queries", "--repetitions", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().last().unwrap().starts_with("bench queries=2 agree=true"));
}

#[test]
fn stats_and_bad_inputs() {
    let dir = setup();
    let out = skq(&["stats", "--store", "g.store", "--index", "g.idx"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(!stdout(&out).is_empty());

    assert_eq!(skq(&["query", "--store", "g.store", "--index", "g.idx", "SELECT"], dir.path()).status.code(), Some(2));
    assert_eq!(skq(&["ingest", "missing.nt", "--store", "x.store"], dir.path()).status.code(), Some(2));
    assert_eq!(skq(&["index", "--store", "g.store", "--index", "x.idx", "--gamma-max", "1.5"], dir.path()).status.code(), Some(2));

    // a store file that is not a store
    fs::write(dir.path().join("junk.store"), b"not a store").unwrap();
    assert_eq!(skq(&["stats", "--store", "junk.store"], dir.path()).status.code(), Some(3));
}
