use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/smoke")
        .join(name)
        .display()
        .to_string()
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("embfuse").chain(args.iter().copied());
    let code = embfuse::cli::run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn ok(args: &[&str]) -> String {
    let r = cli(args);
    assert_eq!(
        r.code, 0,
        "{args:?}\nstdout:\n{}\nstderr:\n{}",
        r.out, r.err
    );
    r.out
}

/// Runs the whole pipeline in `dir` and returns every file it wrote.
fn pipeline(dir: &Path) -> Vec<PathBuf> {
    let p = |name: &str| dir.join(name).display().to_string();
    let tiny = ["--preset", "tiny", "--seed", "3"];
    let with = |args: &[&str]| -> Vec<String> {
        args.iter().chain(&tiny).map(|s| s.to_string()).collect()
    };
    let run = |args: &[&str]| {
        let v = with(args);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>())
    };

    let prep = run(&[
        "prepare",
        "--csv",
        &fixture("reviews.csv"),
        "--out",
        &p("reviews.dataset"),
        "--max-len",
        "12",
    ]);
    assert!(prep.contains("Riad Jasmine"), "{prep}");
    assert!(prep.contains("train 36 test 4"), "{prep}");

    let emb_a = format!("{}:glove", fixture("emb_a.txt"));
    let emb_b = format!("{}:fasttext", fixture("emb_b.vec"));
    run(&[
        "fuse",
        "--emb1",
        &emb_a,
        "--emb2",
        &emb_b,
        "--dataset",
        &p("reviews.dataset"),
        "--out",
        &p("ab.bin"),
        "--report",
        &p("ab_report.csv"),
    ]);
    run(&[
        "fuse",
        "--emb1",
        &emb_b,
        "--emb2",
        &emb_a,
        "--dataset",
        &p("reviews.dataset"),
        "--out",
        &p("ba.bin"),
    ]);

    let lr = run(&[
        "lr-find",
        "--dataset",
        &p("reviews.dataset"),
        "--fused",
        &p("ab.bin"),
        "--optimizer",
        "adam",
        "--grid",
        "1e-4:1e-1:log4",
        "--epochs",
        "2",
        "--out",
        &p("lr.csv"),
        "--chart",
        &p("lr.svg"),
    ]);
    assert!(lr.contains("best "), "{lr}");

    let train = run(&[
        "train",
        "--dataset",
        &p("reviews.dataset"),
        "--fused",
        &p("ab.bin"),
        "--optimizer",
        "sgd",
        "--lr",
        "0.1",
        "--epochs",
        "3",
        "--batch",
        "8",
        "--out",
        &p("model.ckpt"),
        "--history",
        &p("train.csv"),
        "--chart",
        &p("train.svg"),
    ]);
    assert_eq!(train.lines().filter(|l| l.starts_with("epoch ")).count(), 3);

    let eval = run(&[
        "eval",
        "--dataset",
        &p("reviews.dataset"),
        "--checkpoint",
        &p("model.ckpt"),
        "--out",
        &p("eval.csv"),
    ]);
    assert!(eval.contains("split test examples 4"), "{eval}");

    fs::write(dir.join("pairs.csv"), "pair,fused\nab,ab.bin\nba,ba.bin\n").unwrap();
    run(&[
        "sweep",
        "--dataset",
        &p("reviews.dataset"),
        "--pairs",
        &p("pairs.csv"),
        "--lr",
        "0.05",
        "--epochs",
        "2",
        "--batch",
        "8",
        "--out-dir",
        &p("sweep"),
    ]);
    run(&[
        "report",
        "--history",
        &p("sweep/history.csv"),
        "--out-dir",
        &p("report"),
    ]);

    let files = [
        "reviews.dataset",
        "ab.bin",
        "ab_report.csv",
        "ba.bin",
        "lr.csv",
        "lr.svg",
        "model.ckpt",
        "train.csv",
        "train.svg",
        "eval.csv",
        "sweep/history.csv",
        "sweep/loss_ab.svg",
        "sweep/loss_ba.svg",
        "report/loss_ab.svg",
        "report/loss_ba.svg",
    ];
    files.iter().map(|f| dir.join(f)).collect()
}

#[test]
fn full_pipeline_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = pipeline(a.path());
    let fb = pipeline(b.path());
    for (x, y) in fa.iter().zip(&fb) {
        let bx = fs::read(x).unwrap_or_else(|e| panic!("{}: {e}", x.display()));
        let by = fs::read(y).unwrap();
        assert!(!bx.is_empty(), "{} is empty", x.display());
        assert!(
            bx == by,
            "{} differs between runs",
            x.file_name().unwrap().to_string_lossy()
        );
    }
    let history = fs::read_to_string(a.path().join("sweep/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 2 * 5 * 2);
    assert_eq!(
        fs::read(a.path().join("sweep/loss_ab.svg")).unwrap(),
        fs::read(a.path().join("report/loss_ab.svg")).unwrap()
    );
}

#[test]
fn inspect_reports_table_shape() {
    let out = ok(&["inspect", &fixture("emb_b.vec"), "--format", "fasttext"]);
    assert!(out.contains("dim 4"), "{out}");
    assert!(out.contains("vocab 10"), "{out}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("d.dataset");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "seed = 4\n\n[prepare]\ncsv = {:?}\nout = {:?}\nmax_len = 9\n",
            fixture("reviews.csv"),
            dest.display().to_string()
        ),
    )
    .unwrap();
    let c = cfg.display().to_string();
    ok(&["--config", &c, "prepare"]);
    let text = fs::read_to_string(&dest).unwrap();
    assert!(text.contains("max_len 9"));
    ok(&["--config", &c, "prepare", "--max-len", "5"]);
    assert!(fs::read_to_string(&dest).unwrap().contains("max_len 5"));

    fs::write(&cfg, "[prepare]\nmax_length = 9\n").unwrap();
    let r = cli(&["--config", &c, "prepare"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("ERROR config:"), "{}", r.err);
}

#[test]
fn errors_have_codes_and_exit_statuses() {
    let r = cli(&["frobnicate"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("ERROR unknown-command:"), "{}", r.err);

    let r = cli(&["train", "--lr", "0.1"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("ERROR "), "{}", r.err);

    let r = cli(&["inspect", "/nonexistent/file.txt:glove"]);
    assert_ne!(r.code, 0);
    assert_eq!(r.err.lines().count(), 1, "{}", r.err);
    assert!(r.err.starts_with("ERROR "));

    let r = cli(&[
        "prepare",
        "--csv",
        &fixture("reviews.csv"),
        "--out",
        "/tmp/x",
        "--buckets",
        "1-9",
    ]);
    assert_eq!(r.code, 1, "{}", r.err);
}

#[test]
fn binary_prints_help_and_exits_zero() {
    let bin = env!("CARGO_BIN_EXE_embfuse");
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8(help.stdout).unwrap();
    for sub in [
        "inspect", "prepare", "fuse", "lr-find", "train", "sweep", "eval", "report",
    ] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
    let bad = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stderr)
        .unwrap()
        .starts_with("ERROR unknown-command"));
}
