//! End-to-end checks of the `crossvote` binary: subcommand output and the
//! documented exit codes (0 ok, 1 usage, 2 data, 3 external command).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn crossvote(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossvote"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn folds_prints_line_fold_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = crossvote(dir.path(), &["folds", "--lines", "6", "--folds", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0\t0\n1\t0\n2\t1\n3\t1\n4\t2\n5\t2\n");
}

#[test]
fn align_renders_disagreements() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("m1.txt", "inide maricn namen\n"),
        ("m2.txt", "inde maricn namen\n"),
        ("m3.txt", "inde marien namen\n"),
        ("m4.txt", "iade marien namen\n"),
        ("m5.txt", "inde maricn namen\n"),
    ] {
        write(dir.path(), name, text);
    }
    let out = crossvote(
        dir.path(),
        &["align", "m1.txt", "m2.txt", "m3.txt", "m4.txt", "m5.txt"],
    );
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "i{1}de mari{2}n namen\n\
         {1}: M1{ni}, M2{n}, M3{n}, M4{a}, M5{n}\n\
         {2}: M1{c}, M2{c}, M3{e}, M4{e}, M5{c}\n"
    );
}

#[test]
fn vote_majority_over_multi_line_files() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", "hello world\nsecond line\n");
    write(dir.path(), "b.txt", "hxllo world\nsecond line\n");
    write(dir.path(), "c.txt", "hello wxrld\nsecxnd line\n");
    let out = crossvote(
        dir.path(),
        &["vote", "--mode", "majority", "a.txt", "b.txt", "c.txt"],
    );
    assert!(out.status.success());
    assert_eq!(stdout(&out), "hello world\nsecond line\n");
}

#[test]
fn vote_confidence_warns_without_llocs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", "abc\n");
    write(dir.path(), "b.txt", "abc\n");
    let out = crossvote(dir.path(), &["vote", "a.txt", "b.txt"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "abc\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing llocs"));
}

#[test]
fn simulate_vote_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "gt.txt",
        "feder weiss und fein\nherren kamen heim\n",
    );
    write(dir.path(), "em.cfg", "sub_rate = 0.05\nconfuse.e = c:1.0\n");
    let out = crossvote(
        dir.path(),
        &[
            "simulate",
            "--gt",
            "gt.txt",
            "--out",
            "sim",
            "--seed",
            "5",
            "--models",
            "3",
            "--model-config",
            "em.cfg",
        ],
    );
    assert!(out.status.success());
    assert!(dir.path().join("sim/m03/0002.llocs").is_file());

    let out = crossvote(
        dir.path(),
        &[
            "vote",
            "--out",
            "voted.txt",
            "sim/m01",
            "sim/m02",
            "sim/m03",
        ],
    );
    assert!(out.status.success());

    let out = crossvote(
        dir.path(),
        &[
            "eval",
            "--gt",
            "gt.txt",
            "--voted",
            "voted.txt",
            "--csv",
            "report.csv",
            "sim/m01",
            "sim/m02",
            "sim/m03",
        ],
    );
    assert!(out.status.success());
    let table = stdout(&out);
    assert!(table.contains("voted"));
    assert!(table.contains("m01"));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("model_id,cer,"));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gt.txt", "ein kurzer satz\n");
    write(dir.path(), "em.cfg", "sub_rate = 0.2\n");
    for out_dir in ["one", "two"] {
        let out = crossvote(
            dir.path(),
            &[
                "simulate",
                "--gt",
                "gt.txt",
                "--out",
                out_dir,
                "--seed",
                "9",
                "--model-config",
                "em.cfg",
            ],
        );
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("one/m01/0001.llocs")).unwrap();
    let b = fs::read(dir.path().join("two/m01/0001.llocs")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pipeline_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "eval.txt", "ein kurzer satz\nnoch ein satz\n");
    write(
        dir.path(),
        "em.cfg",
        "sub_rate = 0\nconf_correct = 1.0\nconf_noise = 0\n",
    );
    write(
        dir.path(),
        "pipe.cfg",
        "n_folds = 2\neval_gt = eval.txt\nout_dir = out\nsynth_model = em.cfg\n",
    );
    let out = crossvote(dir.path(), &["pipeline", "--config", "pipe.cfg"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0.00%"));
    let voted = fs::read_to_string(dir.path().join("out/voted.txt")).unwrap();
    assert_eq!(voted, "ein kurzer satz\nnoch ein satz\n");
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = crossvote(dir.path(), &["vote", "--mode", "bogus", "x.txt"]);
    assert_eq!(out.status.code(), Some(1));

    write(dir.path(), "a.txt", "x\n");
    let out = crossvote(dir.path(), &["vote", "--alt-threshold", "1.5", "a.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage error"));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = crossvote(dir.path(), &["vote", "no-such-file.txt"]);
    assert_eq!(out.status.code(), Some(2));

    // malformed llocs in a corpus directory
    let corpus = dir.path().join("m01");
    fs::create_dir(&corpus).unwrap();
    write(&corpus, "0001.txt", "a\n");
    write(&corpus, "0001.llocs", "a\t0\t5\tnot-a-number\t\n");
    write(dir.path(), "m2.txt", "a\n");
    let out = crossvote(dir.path(), &["vote", "m01", "m2.txt"]);
    assert_eq!(out.status.code(), Some(2));

    // mismatched line counts
    write(dir.path(), "x.txt", "a\nb\n");
    write(dir.path(), "y.txt", "a\n");
    let out = crossvote(dir.path(), &["vote", "x.txt", "y.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn external_command_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "eval.txt", "eine zeile\n");
    write(dir.path(), "pool.txt", "a\nb\nc\nd\n");
    write(
        dir.path(),
        "pipe.cfg",
        "n_folds = 2\neval_gt = eval.txt\ngt_pool = pool.txt\nout_dir = out\ntrainer_cmd = exit 5\n",
    );
    let out = crossvote(dir.path(), &["pipeline", "--config", "pipe.cfg"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("external command"));
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = crossvote(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("folds"));
    let out = crossvote(dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
}
