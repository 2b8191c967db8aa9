use gpdc::harness::*;
use gpdc::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(policy: &str, replica: usize, step: usize, metric: f64) -> RunRecord {
    RunRecord {
        replica,
        step,
        policy: policy.into(),
        kind: "point".into(),
        location: vec![0.5],
        width: 0.0,
        y: 0.0,
        metric,
        ms: 0.0,
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        -1e-9..1e-9f64,
        Just(0.0),
        Just(-0.0),
        any::<f64>().prop_filter("finite", |v| v.is_finite())
    ]
}

proptest! {
    #[test]
    fn csv_round_trips(
        rows in prop::collection::vec(
            (0usize..100, 1usize..60, "[a-z,\" -]{1,10}", prop::sample::select(vec!["point", "interval", "disk"]),
             prop::collection::vec(finite(), 1..3), finite(), finite(), finite(), finite()),
            0..20)
    ) {
        let records: Vec<RunRecord> = rows
            .into_iter()
            .map(|(replica, step, policy, kind, location, width, y, metric, ms)| RunRecord {
                replica, step, policy, kind: kind.into(), location, width, y, metric, ms,
            })
            .collect();
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!(a.replica, b.replica);
            prop_assert_eq!(&a.policy, &b.policy);
            prop_assert_eq!(a.location.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.location.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            for (u, v) in [(a.width, b.width), (a.y, b.y), (a.metric, b.metric), (a.ms, b.ms)] {
                prop_assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }
}

#[test]
fn csv_rejects_bad_input() {
    assert!(matches!(read_records("a,b\n1,2\n".as_bytes()), Err(Error::Format(_))));
    let bad = format!("{}\n0,1,random,point,0.5,0,1.0,zzz,0\n", CSV_HEADER.join(","));
    assert!(matches!(
        read_records(bad.as_bytes()),
        Err(Error::Parse { line: 2, .. })
    ));
}

#[test]
fn percentiles_match_sorted_positions() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut v: Vec<f64> = (0..64).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect();
    v.sort_by(f64::total_cmp);
    // positions p/100·63: 15.75, 31.5, 47.25
    assert_eq!(percentile(&v, 25.0), v[15] + 0.75 * (v[16] - v[15]));
    assert_eq!(percentile(&v, 50.0), v[31] + 0.5 * (v[32] - v[31]));
    assert_eq!(percentile(&v, 75.0), v[47] + 0.25 * (v[48] - v[47]));
}

#[test]
fn cumulative_regret_matches_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ys: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
    let regret = compute_regret(1.2, &ys);
    let trace: Vec<(usize, f64)> = regret.iter().enumerate().map(|(i, &r)| (i + 1, r)).collect();
    let mut expected = 0.0;
    for t in 20..=50 {
        let mut best = f64::NEG_INFINITY;
        for y in &ys[..t] {
            best = best.max(*y);
        }
        expected += 1.2 - best;
    }
    assert_eq!(cumulative_metric(&trace, 20, 50), expected);
    assert!(regret.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn summaries_and_normalization() {
    let single = vec![record("ei", 0, 20, 3.0), record("ei", 0, 21, 1.0)];
    let s = summarize(&single, (20, 50), None).unwrap();
    assert_eq!((s[0].median, s[0].p25, s[0].p75), (4.0, 4.0, 4.0));

    let mut recs = Vec::new();
    for r in 0..5 {
        recs.push(record("random", r, 20, r as f64 + 1.0));
        recs.push(record("gp-dcor", r, 20, 0.5 * r as f64));
    }
    let s = summarize(&recs, (20, 50), Some("random")).unwrap();
    let random = s.iter().find(|x| x.policy == "random").unwrap();
    assert_eq!(random.median, 1.0);
    let dc = s.iter().find(|x| x.policy == "gp-dcor").unwrap();
    assert_eq!(dc.median, 1.0 / 3.0);
    assert!(summarize(&recs, (20, 50), Some("mes")).is_err());
    assert!(summarize(&[], (20, 50), None).is_err());
}

fn small_config(task: Task, policies: &[&str]) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(task);
    c.policies = policies.iter().map(|s| s.to_string()).collect();
    c.replicas = 1;
    c.steps = 1;
    c.draws = 30;
    c.hyper_budget = 4;
    c
}

#[test]
fn one_random_step_is_logged_after_initial_queries() {
    for task in [
        Task::Estimation1D,
        Task::Gradient1D,
        Task::MaxSearch1D,
        Task::MaxSearchBenchmark,
    ] {
        let cfg = small_config(task, &["random"]);
        let out = run_experiment(&cfg).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 3, "{}", task.name());
        assert_eq!(out.records.iter().map(|r| r.step).collect::<Vec<_>>(), vec![1, 2, 3]);
    }
    let mut cfg = small_config(Task::Elevation2D, &["random"]);
    cfg.grid = 8;
    cfg.elevation_size = 16;
    assert_eq!(run_experiment(&cfg).unwrap().records.len(), 3);
}

#[test]
fn reruns_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Task::MaxSearch1D, &["gp-dcor", "ei", "random"]);
    cfg.grid = 50;
    cfg.steps = 4;
    cfg.replicas = 2;
    cfg.noise = 1e-3;
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        cfg.output = Some(dir.path().join(name));
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 3 * 2 * 6);
        bytes.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let back = read_records_file(&dir.path().join("a.csv")).unwrap();
    for (_, reps) in traces(&back) {
        for t in reps.values() {
            assert!(t.windows(2).all(|w| w[1].1 <= w[0].1));
        }
    }
}

#[test]
fn estimation_learns() {
    let mut cfg = ExperimentConfig::defaults(Task::Estimation1D);
    cfg.policies = vec!["gp-dc".into()];
    cfg.steps = 33;
    let out = run_experiment(&cfg).unwrap();
    assert!(out.failures.is_empty());
    let (_, trace) = &mean_metric_by_step(&out.records)[0];
    let at = |s: usize| trace.iter().find(|t| t.0 == s).unwrap().1;
    assert!(at(35) > at(5), "R² {} at 35 vs {} at 5", at(35), at(5));
}

#[test]
fn config_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.cfg");
    std::fs::write(
        &p,
        "task = elevation-2d\nwidths = 0, 0.1\ncandidates = 20 # per width\n",
    )
    .unwrap();
    let c = ExperimentConfig::load(&p).unwrap();
    assert_eq!(c.widths, vec![0.0, 0.1]);
    assert_eq!(c.candidates, 20);
    std::fs::write(&p, "task = elevation-2d\nradius = 0.1\n").unwrap();
    assert!(matches!(ExperimentConfig::load(&p), Err(Error::Config(_))));
    assert!(matches!(
        ExperimentConfig::load(&dir.path().join("none.cfg")),
        Err(Error::Config(_))
    ));
}
