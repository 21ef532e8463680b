use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stoflp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stoflp")).args(args).current_dir(dir).env("STOFLP_THREADS", "2").output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = stoflp(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const QUICK: [&str; 4] = ["--stall", "40", "--max-generations", "120"];

fn solve_into(dir: &Path, instance: &str, seed: &str) {
    let mut args = vec!["solve", instance, "--seed", seed, "--out-dir", "."];
    args.extend(QUICK);
    ok(&args, dir);
}

#[test]
fn solve_is_byte_identical_for_a_fixed_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let inst = data("static9.txt");
    solve_into(a.path(), p(&inst), "3");
    solve_into(b.path(), p(&inst), "3");
    for f in ["layout.txt", "layout.svg", "generations.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_solve_outputs() {
    let inst = data("stoch9.txt");
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["solve", p(&inst), "--b", "1", "--seed", "9", "--out-dir", "."];
        args.extend(QUICK);
        let out = Command::new(env!("CARGO_BIN_EXE_stoflp"))
            .args(&args)
            .current_dir(dir.path())
            .env("STOFLP_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read(dir.path().join("layout.txt")).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn count_prints_exact_and_scientific_forms() {
    let dir = tempfile::tempdir().unwrap();
    // 2^9 * 10! * 9!
    let out = ok(&["count", "10"], dir.path());
    assert!(out.contains("count: 674211299328000"), "{out}");
    assert!(out.contains("scientific: 6.74211E+14"), "{out}");
    assert!(ok(&["count", "7", "--seeded"], dir.path()).contains("count: 13824"));
    let small = stoflp(&["count", "4", "--seeded"], dir.path());
    assert!(!small.status.success());
    assert!(String::from_utf8_lossy(&small.stderr).contains("n >= 5"));
}

#[test]
fn hybrid_refuses_static_deterministic_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = stoflp(&["hybrid", p(&data("static9.txt"))], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("deterministic"));
}

#[test]
fn hybrid_writes_trace_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("dyn10.txt");
    let mut args = vec!["hybrid", p(&inst), "--reps", "300", "--max-iterations", "2", "--out-dir", "."];
    args.extend(["--stall", "20", "--max-generations", "50"]);
    let out = ok(&args, dir.path());
    assert!(out.contains("winning b:"));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("iteration,candidates,means,anova_p,removed_b,inserted_b"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[1].split(';').count(), 5);
    for f in ["layout.txt", "layout.svg", "anova.txt", "anova.csv", "tukey.txt", "tukey.csv", "candidates.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
}

fn anova_row<'a>(out: &'a str, source: &str) -> Vec<&'a str> {
    out.lines().find(|l| l.starts_with(source)).unwrap().split_whitespace().collect()
}

#[test]
fn simulating_one_layout_twice_never_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("stoch9.txt");
    solve_into(dir.path(), p(&inst), "1");
    let out = ok(&["simulate", p(&inst), "layout.txt", "layout.txt", "--reps", "2000"], dir.path());
    let between = anova_row(&out, "between");
    assert_eq!(between[5], "1.0000", "{out}");
    assert!(out.lines().any(|l| l.starts_with("L1 - L2") && l.ends_with("no")));
}

#[test]
fn deterministic_flows_simulate_with_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("static9.txt");
    solve_into(dir.path(), p(&inst), "2");
    let out = ok(&["simulate", p(&inst), "layout.txt", "--reps", "50"], dir.path());
    let row = out.lines().find(|l| l.starts_with("layout.txt,")).unwrap();
    assert_eq!(row.split(',').nth(2), Some("0"), "{row}");
}

#[test]
fn five_layouts_give_the_expected_residual_degrees_of_freedom() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("stoch9.txt");
    let mut names = Vec::new();
    for seed in 0..5 {
        let sub = dir.path().join(format!("s{seed}"));
        std::fs::create_dir(&sub).unwrap();
        solve_into(&sub, p(&inst), &seed.to_string());
        names.push(format!("s{seed}/layout.txt"));
    }
    let mut args = vec!["simulate", p(&inst)];
    args.extend(names.iter().map(String::as_str));
    args.extend(["--reps", "10000", "--samples", "samples.csv"]);
    let out = ok(&args, dir.path());
    assert_eq!(anova_row(&out, "between")[2], "4");
    assert_eq!(anova_row(&out, "error")[2], (5 * 9999).to_string());
    let samples = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 5 * 10_000 + 1);
}

#[test]
fn render_draws_every_department() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("static9.txt");
    solve_into(dir.path(), p(&inst), "5");
    ok(&["render", p(&inst), "layout.txt", "--out", "drawn.svg"], dir.path());
    let svg = std::fs::read_to_string(dir.path().join("drawn.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="department""#).count(), 9);
    assert_eq!(svg.matches("<text").count(), 9);
    assert_eq!(svg.matches(r#"class="facility""#).count(), 1);
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn render_rejects_a_layout_for_another_instance() {
    let dir = tempfile::tempdir().unwrap();
    solve_into(dir.path(), p(&data("static9.txt")), "5");
    let out = stoflp(&["render", p(&data("dyn10.txt")), "layout.txt", "--out", "x.svg"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn one_way_anova_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["anova", p(&data("anova_oneway.csv")), "--out-dir", "."], dir.path());
    // groups {1,2,3} and {2,3,4}: SS between 1.5, SS error 4, F 1.5
    let between = anova_row(&out, "between");
    assert_eq!(between[2], "1");
    assert!((between[4].parse::<f64>().unwrap() - 1.5).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("anova.csv")).unwrap();
    assert!(csv.starts_with("source,ss,df,ms,f,p\n"));
    assert!(dir.path().join("tukey.csv").is_file());
}

#[test]
fn main_effects_anova_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["anova", p(&data("anova_factorial.csv"))], dir.path());
    let dfs: Vec<&str> = out.lines().skip(1).take(3).map(|l| l.split_whitespace().nth(2).unwrap()).collect();
    assert_eq!(dfs, ["4", "2", "1"]);
    assert_eq!(anova_row(&out, "error")[2], "112");
}

#[test]
fn malformed_instance_is_reported_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "[facility]\n30 twenty\n").unwrap();
    let out = stoflp(&["solve", "bad.txt"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&out.stderr));
}
