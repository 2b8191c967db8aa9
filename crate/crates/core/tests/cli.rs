use std::process::Command;

fn gpdc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gpdc")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn run_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/runs.csv");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "task = max-search-1d\npolicies = random, varmax\nreplicas = 2\nsteps = 3\ngrid = 40\noutput = {}\n",
            csv.display()
        ),
    )
    .unwrap();
    let (code, _) = gpdc(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, text) = gpdc(&[
        "summarize",
        "--in",
        csv.to_str().unwrap(),
        "--from",
        "1",
        "--to",
        "5",
        "--normalize-by",
        "random",
    ]);
    assert_eq!(code, 0);
    assert!(text.lines().any(|l| l.starts_with("random,2,1.0000")), "{text}");
    let (code, _) = gpdc(&["summarize", "--in", csv.to_str().unwrap(), "--normalize-by", "mes"]);
    assert_eq!(code, 2);
    let (code, text) = gpdc(&["summarize", "--in", csv.to_str().unwrap(), "--metric", "r2"]);
    assert_eq!(code, 0);
    assert_eq!(text.lines().count(), 1 + 2 * 5);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "task = max-search-1d\nsteps = many\n").unwrap();
    assert_eq!(gpdc(&["run", "--config", cfg.to_str().unwrap()]).0, 2);
    assert_eq!(gpdc(&["run", "--config", "/nonexistent.cfg"]).0, 2);
    assert_eq!(gpdc(&["run"]).0, 2);
}

#[test]
fn grid_and_function_files() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    std::fs::write(&raw, "2 3\n10 20 30\n40 50 60\n").unwrap();
    let out = dir.path().join("scaled.txt");
    let (code, _) = gpdc(&[
        "ingest-grid",
        "--in",
        raw.to_str().unwrap(),
        "--format",
        "ascii",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "2 3\n0 0.2 0.4\n0.6 0.8 1\n");

    std::fs::write(&raw, "2 3\n10 20\n40 50 60\n").unwrap();
    assert_eq!(
        gpdc(&[
            "ingest-grid",
            "--in",
            raw.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])
        .0,
        3
    );

    let f = dir.path().join("f.csv");
    assert_eq!(
        gpdc(&[
            "gen-functions",
            "--seed",
            "7",
            "--count",
            "3",
            "--out",
            f.to_str().unwrap()
        ])
        .0,
        0
    );
    let text = std::fs::read_to_string(&f).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,seed_7,seed_8,seed_9");
    assert_eq!(text.lines().count(), 1201);
}
