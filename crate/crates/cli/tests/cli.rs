//! End-to-end runs of the `recon` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use recon_core::codes::read_alist;

fn recon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recon"))
        .args(args)
        .env_remove("RECON_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn construct(dir: &Path, name: &str, n: usize, seed: u64) -> String {
    let path = dir.join(name);
    let path = path.to_str().unwrap().to_string();
    let out = recon(&["construct", "--regular", "3,6", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn field<'a>(json: &'a str, key: &str) -> &'a str {
    let start = json.find(&format!("\"{key}\":")).unwrap() + key.len() + 3;
    let rest = &json[start..];
    &rest[..rest.find([',', '}']).unwrap()]
}

#[test]
fn construct_reports_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.alist");
    let out = recon(&["construct", "--regular", "3,6", "--n", "1000", "--seed", "4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    for line in ["n=1000", "m=500", "design_rate=0.5", "girth=6"] {
        assert!(text.lines().any(|l| l == line), "{line} missing from\n{text}");
    }
    let code = read_alist(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((code.n(), code.m()), (1000, 500));
    assert!(text.contains(&format!("rank={}", code.rank())));
}

#[test]
fn construct_rejects_short_codes_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.alist");
    let out = recon(&["construct", "--regular", "3,6", "--n", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(recon(&["construct", "--bogus"]).status.code(), Some(2));
    let missing = dir.path().join("none").join("c.alist");
    let out = recon(&["construct", "--regular", "3,6", "--n", "100", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn construct_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = construct(dir.path(), "a.alist", 800, 9);
    let b = construct(dir.path(), "b.alist", 800, 9);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn reconcile_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let alist = construct(dir.path(), "c.alist", 10_000, 1);

    let out = recon(&["reconcile", "--alist", &alist, "--p", "0", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout(&out);
    assert_eq!(field(&json, "residual_mismatch"), "0");
    assert_eq!(field(&json, "no_noise"), "true");

    let out = recon(&["reconcile", "--alist", &alist, "--p", "0.05", "--delta", "0.1", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(field(&stdout(&out), "success"), "true");

    let out = recon(&["reconcile", "--alist", &alist, "--p", "0.2", "--seed", "3", "--max-iterations", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(field(&stdout(&out), "success"), "false");

    let out = recon(&["reconcile", "--alist", &alist, "--p", "0.05", "--mode", "neither"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let alist = construct(dir.path(), "c.alist", 1000, 1);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, format!("alist = {alist}\np = 0.01\nmode = key\nt = 40\n")).unwrap();
    let cfg = cfg.to_str().unwrap();

    let json = stdout(&recon(&["reconcile", "--config", cfg]));
    assert_eq!(field(&json, "mode"), "\"key\"");
    assert_eq!(field(&json, "t"), "40");
    let json = stdout(&recon(&["reconcile", "--config", cfg, "--t", "60", "--mode", "data"]));
    assert_eq!(field(&json, "mode"), "\"data\"");
    assert_eq!(field(&json, "t"), "60");
    assert_eq!(field(&json, "d"), "100");
}

#[test]
fn threshold_csv() {
    let out = recon(&["threshold", "--regular", "3,6", "--rates", ""]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "rate,delta,threshold_p\n");

    // Out-of-range rates are skipped with a warning.
    let out = recon(&["threshold", "--regular", "3,6", "--delta", "0.1", "--rates", "0.55,0.9", "--bin-width", "0.05", "--support", "20"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("0.9"));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "{text}");
    let low: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();

    let out = recon(&["threshold", "--regular", "3,6", "--delta", "0.5", "--rates", "0.55", "--bin-width", "0.05", "--support", "20"]);
    let text = stdout(&out);
    let high: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(low >= high, "δ=0.1: {low}, δ=0.5: {high}");
}

#[test]
fn sweep_reduces_to_reconcile() {
    let dir = tempfile::tempdir().unwrap();
    let alist = construct(dir.path(), "c.alist", 2000, 3);
    let csv = dir.path().join("sweep.csv");
    let out = recon(&[
        "sweep", "--alist", &alist, "--rates", "0.5", "--deltas", "0", "--trials", "10",
        "--p-grid", "0.01:0.03:0.005", "--seed", "1", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "rate,delta,max_ber,f");
    let cols: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(&cols[..3], ["0.5", "0", "0.03"]);
    let f: f64 = cols[3].parse().unwrap();
    assert!((f - 0.5 / 0.194_391_2).abs() < 1e-3, "{f}");

    // A point that never decodes gets an empty BER.
    let out = recon(&[
        "sweep", "--alist", &alist, "--rates", "0.5", "--deltas", "0", "--trials", "5",
        "--p-grid", "0.2:0.3:0.05", "--max-iterations", "50",
    ]);
    assert_eq!(stdout(&out), "rate,delta,max_ber,f\n0.5,0,,\n");
}

#[test]
fn stability_report() {
    let out = recon(&["stability", "--regular", "3,6", "--p", "0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("lambda2=0\n"));
    assert!(text.contains("stable=true\n"));
    let exp_neg_r: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("exp_neg_r="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((exp_neg_r - 2.0 * (0.05f64 * 0.95).sqrt()).abs() < 1e-12);
    assert_eq!(recon(&["stability", "--regular", "3,6", "--p", "0.05", "--delta", "0.1", "--pi", "0.2"]).status.code(), Some(2));
}

#[test]
fn reconcile_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let alist = construct(dir.path(), "c.alist", 2000, 1);
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let bob = Command::new(env!("CARGO_BIN_EXE_recon"))
        .args(["reconcile", "--alist", &alist, "--seed", "6", "--mode", "key", "--listen", &addr])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let alice = (0..100)
        .map(|_| {
            std::thread::sleep(std::time::Duration::from_millis(50));
            recon(&["reconcile", "--alist", &alist, "--seed", "6", "--mode", "key", "--p", "0.02", "--connect", &addr])
        })
        .find(|out| out.status.code() != Some(3))
        .expect("bob never came up");
    let bob = bob.wait_with_output().unwrap();
    assert_eq!(alice.status.code(), Some(0));
    assert_eq!(bob.status.code(), Some(0));
    let (a, b) = (stdout(&alice), stdout(&bob));
    for key in ["success", "p_star", "rate", "shortened", "punctured", "disclosed_bits"] {
        assert_eq!(field(&a, key), field(&b, key), "{key}");
    }
    assert_eq!(field(&a, "p_true"), "0.02");
    assert_eq!(field(&b, "p_true"), "null");
}
