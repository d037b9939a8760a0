use std::path::PathBuf;
use std::process::{Command, Output};

fn bbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbs")).args(args).env_remove("BBS_SEED").output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("bbs-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn current_mean_is_one_third() {
    let o = bbs(&["current", "kind=iid", "p=0.2", "k=10000", "seed=7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], "k,w0,C,mean");
    assert_eq!(rows.len(), 10_001);
    let mean: f64 = rows.last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((mean - 1.0 / 3.0).abs() < 0.02, "mean {mean}");
    assert!(text.contains("# reach=16"));
}

#[test]
fn identical_runs_are_byte_identical() {
    for args in [
        vec!["sample", "kind=markov", "p0=0.2", "p1=0.3", "n=500", "seed=3"],
        vec!["tagged", "k=100", "replicas=30", "seed=5"],
        vec!["reconstruct", "n=120", "k=50", "depth=8", "seed=2"],
    ] {
        let a = bbs(&args);
        let b = bbs(&args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_precedence() {
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_bbs"));
        c.args(["sample", "n=50", "seed=1"]).args(extra).env_remove("BBS_SEED");
        if let Some(v) = env {
            c.env("BBS_SEED", v);
        }
        stdout(&c.output().unwrap())
    };
    assert!(run(&[], None).contains("# seed=1\n"));
    assert!(run(&[], Some("9")).contains("# seed=9\n"));
    assert!(run(&["--seed", "4"], Some("9")).contains("# seed=4\n"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tmp("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# sample settings\nkind=iid p=0.1\nn=40\n").unwrap();
    let o = bbs(&["sample", "--config", cfg.to_str().unwrap(), "n=30"]);
    let text = stdout(&o);
    assert!(text.contains("# p=0.1\n") && text.contains("# n=30\n"));
    assert_eq!(csv_rows(&text).len(), 31);
}

#[test]
fn out_directory_gets_files() {
    let dir = tmp("out");
    let o = bbs(&["evolve", "fixture=two-soliton", "steps=8", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.join("evolve.csv")).unwrap();
    assert!(csv.starts_with("step,site,eta\n"));
    let report = std::fs::read_to_string(dir.join("evolve.report.txt")).unwrap();
    assert!(report.contains("fixture=two-soliton") && report.contains("solitons_final=[3, 1]"));
}

#[test]
fn larger_soliton_overtakes() {
    let text = stdout(&bbs(&["evolve", "fixture=two-soliton", "steps=8"]));
    let frame = |j: usize| -> String {
        text.lines().find(|l| l.starts_with(&format!("# frame {j:>3} "))).unwrap().rsplit(' ').next().unwrap().to_string()
    };
    let first = frame(0);
    let last = frame(8);
    // the block of three starts left of the single particle and ends right of it
    assert!(first.find("111").unwrap() < first.rfind('1').unwrap());
    assert!(last.find("111").unwrap() > last.find('1').unwrap());
}

#[test]
fn domain_errors_exit_nonzero() {
    let o = bbs(&["current", "kind=iid", "p=0.7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p=0.7"));
    let o = bbs(&["sample", "kind=markov", "p0=0.6", "p1=0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("supercritical"));
    let o = bbs(&["constants", "nonsense=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rate_function_csv() {
    let text = stdout(&bbs(&["rate-function", "family=iid", "p=0.2", "from=0", "to=1", "points=5"]));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], "x,rate");
    let vals: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!((vals[0] - (4.0f64 / 3.0).ln()).abs() < 1e-8);
    assert!(vals.iter().all(|v| *v >= 0.0));
}

#[test]
fn constants_report() {
    let text = stdout(&bbs(&["constants", "family=markov", "p0=0.2", "p1=0.3"]));
    let mu: f64 = text.lines().find_map(|l| l.strip_prefix("# mu=")).unwrap().parse().unwrap();
    assert!((mu - 22.0 / 45.0).abs() < 1e-12);
}

#[test]
fn scaling_small_run() {
    let o = bbs(&["scaling", "N=16", "t=1", "replicas=200", "horizon=2", "dt=0.0078125", "seed=3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(csv_rows(&text)[0] == "label,stat,p_value");
}
