use std::fs;
use std::process::{Command, Output};

use yule_core::experiments::bootstrap_seed;
use yule_core::stats::bootstrap_ci_variance;

fn yule(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yule")).args(args).output().expect("run yule")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn parse(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn exact_moments_table() {
    let out = stdout(&yule(&["exact-moments", "--k-max", "4"]));
    let (header, rows) = parse(&out);
    assert_eq!(header, ["k", "EG", "ES", "EG2", "var_avg"]);
    assert_eq!(rows[2], ["3", "5", "9", "25", "0"]);
    assert_eq!(rows[3][4], "0.0138888888889");
    assert!(!out.contains('\r'));
}

#[test]
fn limits_text_and_csv() {
    let text = stdout(&yule(&["limits"]));
    assert!(text.contains("0.420263732607") && text.contains("6.57973626739"));
    let (header, rows) = parse(&stdout(&yule(&["limits", "--csv"])));
    assert_eq!(header, ["quantity", "value"]);
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((values[0] + values[1] - 7.0).abs() < 1e-10);
    assert_eq!(values[2], 7.0);
}

#[test]
fn simulate_at_time_zero() {
    let (header, rows) = parse(&stdout(&yule(&["simulate", "--t", "0", "--reps", "3"])));
    assert_eq!(header, ["rep", "z", "g", "s", "avg_depth", "nstar"]);
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r, &[i.to_string(), "1".into(), "0".into(), "0".into(), "0".into(), "0".into()]);
    }
}

#[test]
fn simulate_jump_chain() {
    let (_, rows) = parse(&stdout(&yule(&["simulate", "--k-target", "3", "--reps", "5"])));
    assert!(rows.iter().all(|r| r[1..4] == ["3", "5", "9"]));
}

#[test]
fn capacity_errors_mark_rows_and_fail() {
    let o = yule(&["simulate", "--t", "12", "--reps", "4", "--max-leaves", "50"]);
    assert!(!o.status.success());
    let (_, rows) = parse(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r[1] == "NA"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicate"));
}

#[test]
fn bad_flags_fail() {
    assert!(!yule(&["limits", "--nope"]).status.success());
    assert!(!yule(&["figure", "--reps", "1"]).status.success());
    assert!(!yule(&["simulate", "--lambda", "-1", "--t", "1"]).status.success());
    let o = yule(&["exact-moments", "--out", "/nonexistent-dir/x.csv"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}

const TINY: [&str; 10] = ["figure", "--lambda", "1,1.3", "--t-grid", "1:3:1", "--reps", "200", "--bootstrap", "200", "--seed"];

#[test]
fn figure_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let mut args = TINY.to_vec();
        args.extend(["17", "--threads", threads, "--out", path.to_str().unwrap()]);
        stdout(&yule(&args));
        fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(b, c);
    let (header, rows) = parse(std::str::from_utf8(&a).unwrap());
    assert_eq!(header.len(), 11);
    assert_eq!(rows.len(), 6);
}

#[test]
fn single_cell_figure_equals_simulate_plus_bootstrap() {
    let args = ["--lambda", "1", "--reps", "300", "--seed", "5"];
    let mut fig = vec!["figure", "--t-grid", "2:2:1", "--bootstrap", "400", "--csv-precision", "17"];
    fig.extend(args);
    let (_, fig_rows) = parse(&stdout(&yule(&fig)));
    let mut sim = vec!["simulate", "--t", "2", "--csv-precision", "17"];
    sim.extend(args);
    let (_, sim_rows) = parse(&stdout(&yule(&sim)));

    let col = |i: usize| -> Vec<f64> { sim_rows.iter().map(|r| r[i].parse().unwrap()).collect() };
    let nstar = bootstrap_ci_variance(&col(5), 400, 0.05, bootstrap_seed(5, 0, 0)).unwrap();
    let avg = bootstrap_ci_variance(&col(4), 400, 0.05, bootstrap_seed(5, 0, 1)).unwrap();
    let got: Vec<f64> = fig_rows[0].iter().map(|x| x.parse().unwrap()).collect();
    let want = [nstar.variance, nstar.ci_low, nstar.ci_high, avg.variance, avg.ci_low, avg.ci_high, avg.mean];
    for (g, w) in got[2..9].iter().zip(want) {
        assert!((g - w).abs() <= 1e-14 * w.abs().max(1.0), "{g} vs {w}");
    }
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "k-max = 6\ncsv-precision=3\n").unwrap();
    let (_, rows) = parse(&stdout(&yule(&["exact-moments", "--config", cfg.to_str().unwrap()])));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[3][1], "8.67");
    let (_, rows) = parse(&stdout(&yule(&["exact-moments", "--config", cfg.to_str().unwrap(), "--k-max", "2"])));
    assert_eq!(rows.len(), 2);
    fs::write(&cfg, "no equals sign\n").unwrap();
    assert!(!yule(&["exact-moments", "--config", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn convergence_table() {
    let (header, rows) = parse(&stdout(&yule(&["convergence", "--k-points", "3,4,1000"])));
    assert_eq!(header, ["k", "var_avg", "gap"]);
    assert_eq!(rows[0][1], "0");
    assert_eq!(rows[0][2], "0.420263732607");
    assert_eq!(rows[1][1], "0.0138888888889");
    assert!(!yule(&["convergence", "--k-points", "5,4"]).status.success());
}
