use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TREES: &str = "\
(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN cat))) (. .))
(S (NP (NNP Kim)) (, ,) (VP (VBD saw) (NP (DT the) (NN cat)) (PP (IN with) (NP (DT a) (NN hat)))))
(S (NP (DT a) (NN cat)) (VP (VBD chased) (NP (DT the) (NN dog))) (. .))
";

const TAGS: &str = "\
the/DT dog/NN saw/VBD a/DT cat/NN ./.
Kim/NNP ,/, saw/VBD the/DT cat/NN with/IN a/DT hat/NN

a/DT cat/NN chased/VBD the/DT dog/NN ./.
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexdep"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("tiny.mrg"), TREES).unwrap();
        std::fs::write(dir.path().join("tiny.tags"), TAGS).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn train(&self, out: &str) {
        let o = run(&["train", "-i", &self.p("tiny.mrg"), "-o", &self.p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn train_parse_eval_round_trip() {
    let f = Fixture::new();
    f.train("tiny.model");
    let o = run(&["parse", "-m", &f.p("tiny.model"), "-i", &f.p("tiny.tags"), "-o", &f.p("out.mrg"), "--no-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trees = String::from_utf8(read(&f.path("out.mrg"))).unwrap();
    assert_eq!(trees, TREES);
    let e = run(&["eval", &f.p("tiny.mrg"), &f.p("out.mrg")]);
    assert!(e.status.success());
    assert!(stdout(&e).contains("eval\tall\t3\t100.0000\t100.0000\t0.0000"));
}

#[test]
fn train_reports_sizes() {
    let f = Fixture::new();
    let o = run(&["train", "-i", &f.p("tiny.mrg"), "-o", &f.p("m")]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("trained on 3 sentences"), "{err}");
    assert!(err.contains("triples"));
}

#[test]
fn parse_without_model_is_a_usage_error() {
    let f = Fixture::new();
    let o = run(&["parse", "-i", &f.p("tiny.tags")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--model"));
}

#[test]
fn contradictory_flags_rejected() {
    let f = Fixture::new();
    f.train("m");
    let o = run(&["parse", "-m", &f.p("m"), "-i", &f.p("tiny.tags"), "--threshold", "1e-9", "--no-threshold"]);
    assert!(!o.status.success());
    let o = run(&["parse", "-m", &f.p("m"), "-i", &f.p("tiny.tags"), "--variant", "5"]);
    assert!(!o.status.success());
}

#[test]
fn missing_file_names_the_path() {
    let f = Fixture::new();
    let o = run(&["train", "-i", &f.p("absent.mrg"), "-o", &f.p("m")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.mrg"));
}

#[test]
fn eval_identity_is_perfect() {
    let f = Fixture::new();
    let o = run(&["eval", &f.p("tiny.mrg"), &f.p("tiny.mrg")]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("eval\t<=40\t3\t100.0000\t100.0000"), "{out}");
}

#[test]
fn outputs_are_reproducible() {
    let f = Fixture::new();
    f.train("a.model");
    f.train("b.model");
    assert_eq!(read(&f.path("a.model")), read(&f.path("b.model")));
    let parse = |jobs: &str| {
        let o = run(&[
            "--jobs", jobs, "parse", "-m", &f.p("a.model"), "-i", &f.p("tiny.tags"), "--scores", "--no-timing", "--beam", "20",
        ]);
        assert!(o.status.success());
        o.stdout
    };
    let one = parse("1");
    assert_eq!(one, parse("4"));
    assert_eq!(String::from_utf8(one).unwrap().lines().count(), 3);
}

#[test]
fn config_file_is_applied() {
    let f = Fixture::new();
    f.train("m");
    std::fs::write(f.path("c.toml"), "[parse]\nbeam = 1.0\nvariant = \"Base\"\n").unwrap();
    let o = run(&["--config", &f.p("c.toml"), "parse", "-m", &f.p("m"), "-i", &f.p("tiny.tags"), "--no-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(f.path("bad.toml"), "[parse]\nbeem = 1.0\n").unwrap();
    let o = run(&["--config", &f.p("bad.toml"), "parse", "-m", &f.p("m"), "-i", &f.p("tiny.tags")]);
    assert!(!o.status.success());
}

#[test]
fn score_and_stats() {
    let f = Fixture::new();
    f.train("m");
    let o = run(&["score", "-m", &f.p("m"), "-i", &f.p("tiny.mrg"), "--explain"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("1\t"));
    assert!(out.contains("arc "), "{out}");
    let o = run(&["stats", "-i", &f.p("tiny.mrg"), "--dump-deps"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("AF(1)=(2,<NP,S,VP>)"), "{out}");
    assert!(out.contains("distance\t1\t"));
}

#[test]
fn custom_head_rules() {
    let f = Fixture::new();
    std::fs::write(f.path("rules.txt"), "S left NP\n").unwrap();
    let o = run(&["--head-rules", &f.p("rules.txt"), "stats", "-i", &f.p("tiny.mrg"), "--dump-deps"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("<VP,S,NP>"));
}
