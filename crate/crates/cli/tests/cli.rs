use std::path::Path;
use std::process::{Command, Output};

fn siglink(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siglink"))
        .current_dir(dir)
        .env("RUST_LOG", "info")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, n: &str, seed: &str) -> Output {
    siglink(
        dir,
        &[
            "synth",
            "--n",
            n,
            "--overlap",
            "0.8",
            "--seed",
            seed,
            "--mcar",
            "0.2",
            "--corrupt",
            "0.2",
            "--out-dir",
            "d",
        ],
    )
}

const INPUTS: &[&str] = &[
    "--db-a",
    "d/a.csv",
    "--db-b",
    "d/b.csv",
    "--config",
    "d/synth.cfg",
];

fn with_inputs<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(INPUTS).chain(tail).copied().collect()
}

#[test]
fn synth_writes_three_files_and_counts_truth() {
    let dir = tempfile::tempdir().unwrap();
    let o = siglink(
        dir.path(),
        &[
            "synth",
            "--n",
            "1000",
            "--overlap",
            "0.8",
            "--seed",
            "7",
            "--out-dir",
            "x",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("truth pairs: 800"));
    let read = |f: &str| std::fs::read(dir.path().join("x").join(f)).unwrap();
    let first = (read("a.csv"), read("b.csv"), read("truth.csv"));
    assert_eq!(String::from_utf8_lossy(&first.2).lines().count(), 801);

    let o = siglink(
        dir.path(),
        &[
            "synth",
            "--n",
            "1000",
            "--overlap",
            "0.8",
            "--seed",
            "7",
            "--out-dir",
            "x",
        ],
    );
    assert!(o.status.success());
    assert_eq!((read("a.csv"), read("b.csv"), read("truth.csv")), first);
}

#[test]
fn synth_rejects_bad_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let o = siglink(dir.path(), &["synth", "--overlap", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("overlap"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(siglink(dir.path(), &["link"]).status.code(), Some(2));
    assert_eq!(siglink(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        siglink(dir.path(), &["--workers", "0", "synth"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = siglink(
        dir.path(),
        &["select", "--db-a", "nope.csv", "--db-b", "nope2.csv"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn select_writes_report_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "1500", "3").status.success());
    let o = siglink(
        dir.path(),
        &with_inputs(&["select"], &["--ct", "0.85", "--out", "combos.csv"]),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("resolved config"));
    assert!(stderr(&o).contains("c_t = 0.85"));
    let report = std::fs::read_to_string(dir.path().join("combos.csv")).unwrap();
    let rows = report.lines().count() - 1;
    assert!((1..=5).contains(&rows), "{report}");
    assert!(report.starts_with("rank,combination,size,"));
    let cached = std::fs::read_dir(dir.path().join(".siglink-cache"))
        .unwrap()
        .count();
    assert_eq!(cached, 1);

    let o = siglink(
        dir.path(),
        &with_inputs(&["link"], &["--ct", "0.85", "--runtime", "rt.txt"]),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("using cached selection"));
    let rt = std::fs::read_to_string(dir.path().join("rt.txt")).unwrap();
    assert!(rt.contains("select_seconds = 0.000  # cached"), "{rt}");
}

#[test]
fn unreachable_threshold_gives_empty_selection() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "1000", "4").status.success());
    let o = siglink(
        dir.path(),
        &with_inputs(&["select"], &["--ct", "0.99", "--no-cache"]),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("WARN"));
    let report = std::fs::read_to_string(dir.path().join("combos.csv")).unwrap();
    assert_eq!(report.lines().count(), 1);
}

#[test]
fn link_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "3000", "5").status.success());
    let mut outputs = Vec::new();
    for w in ["1", "8"] {
        let out = format!("m{w}.csv");
        let metrics = format!("q{w}.txt");
        let args = with_inputs(
            &["--workers", w, "link"],
            &[
                "--ct",
                "0.85",
                "--no-cache",
                "--truth",
                "d/truth.csv",
                "--out",
                &out,
                "--metrics",
                &metrics,
            ],
        );
        let o = siglink(dir.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((
            std::fs::read(dir.path().join(&out)).unwrap(),
            std::fs::read(dir.path().join(&metrics)).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let metrics = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(metrics.contains("precision = ") && metrics.contains("recall = "));
}

#[test]
fn stricter_threshold_gives_fewer_matches() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "3000", "6").status.success());
    let count = |st: &str| {
        let out = format!("m{st}.csv");
        let o = siglink(
            dir.path(),
            &with_inputs(&["link"], &["--ct", "0.85", "--st", st, "--out", &out]),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(dir.path().join(out))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert!(count("1.0") < count("0.5"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "500", "8").status.success());
    let cfg = std::fs::read_to_string(dir.path().join("d/synth.cfg")).unwrap();
    std::fs::write(
        dir.path().join("d/synth.cfg"),
        cfg.replace("s_t = 0.8", "s_t = 0.6"),
    )
    .unwrap();
    let o = siglink(dir.path(), &with_inputs(&["link"], &["--no-cache"]));
    assert!(stderr(&o).contains("s_t = 0.6"));
    let o = siglink(
        dir.path(),
        &with_inputs(&["link"], &["--no-cache", "--st", "0.9"]),
    );
    assert!(stderr(&o).contains("s_t = 0.9"));
}

#[test]
fn schema_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "200", "9").status.success());
    let o = siglink(
        dir.path(),
        &with_inputs(&["link"], &["--set", "relationship=phone"]),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("phone"));
}

#[test]
fn eval_writes_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), "2000", "10").status.success());
    let o = siglink(
        dir.path(),
        &with_inputs(
            &["eval"],
            &["--ct", "0.85", "--truth", "d/truth.csv", "--out", "s.csv"],
        ),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 13);
    let o = siglink(
        dir.path(),
        &with_inputs(
            &["eval"],
            &["--truth", "d/truth.csv", "--thresholds", "0.5,1.5"],
        ),
    );
    assert_eq!(o.status.code(), Some(2));
}
