use std::path::Path;
use std::process::{Command, Output};

fn hut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hut"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn generate(dir: &Path, name: &str, n: usize, profile: &str, seed: u64) -> String {
    let path = dir.join(name);
    let out = hut(&[
        "generate",
        "--n",
        &n.to_string(),
        "--profile",
        profile,
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

fn small_config(dir: &Path, body: &str) -> String {
    let path = dir.join("grid.conf");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.csv", 300, "bimodal", 9);
    let b = generate(dir.path(), "b.csv", 300, "bimodal", 9);
    let c = generate(dir.path(), "c.csv", 300, "bimodal", 10);
    let read = |p: &str| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(read(&a).starts_with("id,value\n"));
    assert_eq!(read(&a).lines().count(), 301);
}

#[test]
fn print_defaults_round_trips_through_config() {
    let out = hut(&["sweep", "--print-defaults"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("epsilons = 0.008, 0.01, 0.02, 0.05"));
    assert!(text.contains("trials = 20"));
    let spec = hut::harness::parse_config(&text, hut::harness::QueryKind::Counting).unwrap();
    assert_eq!(
        spec,
        hut::harness::SweepSpec::defaults(hut::harness::QueryKind::Counting)
    );
}

#[test]
fn sweep_writes_reports_and_plots_for_both_queries() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "speeds.csv", 400, "right-skewed", 1);
    let config = small_config(
        dir.path(),
        "# trimmed grid\nepsilons = 0.01, 0.05\nks_simple = 5, 10\nks_counting = 5, 10\nps = 0.35\ntrials = 3\n",
    );
    let out_dir = dir.path().join("out");
    let out = hut(&[
        "sweep",
        "--data",
        &data,
        "--config",
        &config,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "counting_mse_vs_epsilon.svg",
            "counting_mse_vs_k.svg",
            "reduction.csv",
            "report.csv",
            "simple_mse_vs_epsilon.svg",
            "simple_mse_vs_k.svg",
        ]
    );
    let report = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    // header + 2 queries x 3 methods x 2 epsilons x 2 ks
    assert_eq!(report.lines().count(), 1 + 24);

    // compare rebuilds identical derived outputs from the report alone
    let again = dir.path().join("again");
    let out = hut(&[
        "compare",
        "--report",
        out_dir.join("report.csv").to_str().unwrap(),
        "--out-dir",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["report.csv", "reduction.csv", "simple_mse_vs_k.svg"] {
        assert_eq!(
            std::fs::read(out_dir.join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "speeds.csv", 300, "uniform", 2);
    let config = small_config(
        dir.path(),
        "epsilons = 0.02\nks = 5\nps = 0.3, 0.4\ntrials = 4\n",
    );
    let run = |extra: &[&str], sub: &str| {
        let out_dir = dir.path().join(sub);
        let mut args = vec![
            "sweep",
            "--query",
            "simple",
            "--data",
            &data,
            "--config",
            &config,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert_eq!(code(&hut(&args)), 0);
        std::fs::read(out_dir.join("report.csv")).unwrap()
    };
    assert_eq!(run(&[], "par"), run(&["--sequential"], "seq"));
}

#[test]
fn run_prints_one_result_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "speeds.csv", 200, "right-skewed", 4);
    let out = hut(&[
        "run",
        "--data",
        &data,
        "--method",
        "k_aggregation",
        "--epsilon",
        "0.5",
        "--k",
        "5",
        "--p",
        "0.35",
        "--trials",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("k_aggregation,simple,0.5,5,0.35,3,"));
}

#[test]
fn audit_reports_ratio_and_bound() {
    let out = hut(&[
        "audit",
        "--epsilon",
        "1.0",
        "--samples",
        "2000",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[0], "1");
    assert_eq!(fields[1], "2000");
    let bound: f64 = fields[3].parse().unwrap();
    assert!((bound - 1f64.exp() * 1.15).abs() < 1e-5);
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(code(&hut(&["sweep", "--bogus"])), 1);
    assert_eq!(code(&hut(&["frobnicate"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "speeds.csv", 100, "uniform", 1);
    let config = small_config(dir.path(), "colour = blue\n");
    let out = hut(&[
        "sweep",
        "--data",
        &data,
        "--config",
        &config,
        "--out-dir",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let out = hut(&[
        "run",
        "--data",
        &data,
        "--epsilon",
        "-1",
        "--k",
        "5",
        "--p",
        "0.3",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_data_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = hut(&[
        "run",
        "--data",
        missing.to_str().unwrap(),
        "--epsilon",
        "1",
        "--k",
        "5",
        "--p",
        "0.3",
    ]);
    assert_eq!(code(&out), 2);

    let negative = dir.path().join("neg.csv");
    std::fs::write(&negative, "id,value\na,1\nb,-3\n").unwrap();
    let out = hut(&[
        "run",
        "--data",
        negative.to_str().unwrap(),
        "--epsilon",
        "1",
        "--k",
        "1",
        "--p",
        "0.5",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn failed_cells_exit_3_but_still_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "speeds.csv", 20, "uniform", 1);
    let config = small_config(
        dir.path(),
        "epsilons = 0.05\nks = 2, 15\nps = 0.3\ntrials = 2\n",
    );
    let out_dir = dir.path().join("out");
    let out = hut(&[
        "sweep",
        "--query",
        "simple",
        "--data",
        &data,
        "--config",
        &config,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let report = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(report.contains("failed:"));
}
