//! End-to-end tests of the binary: exit-code contract, output determinism,
//! file round trips, config handling, and the full selftest run.

use std::process::{Command, Output};

fn treecap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treecap"))
        .args(args)
        .env_remove("TREECAP_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn cap_closed_form_binary() {
    let out = treecap(&["cap", "--tree", "binary:2:3", "--set", "leaves", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    // 8/15 printed with 12 significant digits
    assert!(stdout(&out).contains("0.533333333333"), "{}", stdout(&out));
}

#[test]
fn cap_bad_file_is_exit_one() {
    let out = treecap(&["cap", "--tree", "no-such-file.tree", "--set", "leaves"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flags_are_exit_one() {
    let out = treecap(&["cap", "--tree"]);
    assert_eq!(out.status.code(), Some(1));
    let out = treecap(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = treecap(&[
        "cap", "--tree", "binary:3", "--set", "leaves", "--format", "yaml",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_sweep_rows_are_ordered() {
    let out = treecap(&[
        "estimate",
        "--space",
        "interval",
        "--set",
        "interval 0 0.25",
        "--s",
        "0.5",
        "--p",
        "2",
        "--depths",
        "3..8",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("depth,cells,capacity,ratio_prev"));
    let depths: Vec<u32> = lines
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(depths, vec![3, 4, 5, 6, 7, 8]);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = [
        "check",
        "--name",
        "cmcap",
        "--tree",
        "homogeneous:3:2",
        "--set",
        "leaves",
        "--p",
        "1.5",
        "--samples",
        "25",
        "--seed",
        "99",
        "--format",
        "records",
    ];
    let a = treecap(&args);
    let b = treecap(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn tree_file_round_trip_through_cli() {
    let dir = std::env::temp_dir().join(format!("treecap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.tree");
    std::fs::write(
        &path,
        "delta 5.0000000000000000e-1\n0 - 1.5\n1 0 0.75\n2 0 2.25\n",
    )
    .unwrap();
    let out = treecap(&[
        "cap",
        "--tree",
        path.to_str().unwrap(),
        "--set",
        "ids:1,2",
        "--p",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_defaults_and_oracle_budget() {
    let dir = std::env::temp_dir().join(format!("treecap-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("treecap.conf");
    std::fs::write(&cfg, "p = 3\nformat = records\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_treecap"))
        .args(["cap", "--tree", "chain:2", "--set", "leaves"])
        .env("TREECAP_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    // chain depth 2 at p=3: capacity 3^(1-p) = 1/9
    let text = stdout(&out);
    assert!(
        text.contains("capacity=0.111111111111"),
        "config defaults ignored: {text}"
    );

    // a one-iteration budget cannot certify the primal oracle: exit 3
    std::fs::write(&cfg, "max_iters = 1\ntol = 1e-14\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_treecap"))
        .args([
            "cap",
            "--tree",
            "binary:2",
            "--set",
            "leaves",
            "--oracles",
        ])
        .env("TREECAP_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn ball_sweep_follows_the_two_regimes() {
    let out = treecap(&[
        "ball", "--space", "interval", "--s", "0.75", "--p", "2", "--levels", "2..6", "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // s = 3/4, p = 2: estimate = 2^(-k/2)
    assert!(text.contains("0.250000000000"), "{text}");
    assert!(text.contains("0.176776695297"), "{text}");
    // unweighted case decays like 1/k
    let out = treecap(&["ball", "--space", "interval", "--s", "0.5", "--p", "2", "--levels", "4..4"]);
    assert!(stdout(&out).contains("0.250000000000"));
}

#[test]
fn equilibrium_report_has_summary_and_nodes() {
    let out = treecap(&[
        "equilibrium",
        "--tree",
        "binary:1",
        "--set",
        "leaves",
        "--p",
        "2",
        "--format",
        "records",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("capacity=0.666666666667"), "{text}");
    assert!(text.contains("carleson_norm=1.00000000000"), "{text}");
    // root carries phi = 2/3, the leaves 1/3 with mass 1/3
    assert!(text.contains("phi=0.666666666667"), "{text}");
    assert!(text.contains("mass=0.333333333333"), "{text}");
}

#[test]
fn mww_and_monotonicity_checks_run() {
    let out = treecap(&[
        "check", "--name", "mww", "--space", "interval", "--depth", "6", "--q", "2", "--s", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let out = treecap(&[
        "check",
        "--name",
        "monotonicity",
        "--tree",
        "homogeneous:3:3",
        "--p",
        "1.5",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let out = treecap(&["check", "--name", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn broken_pipe_exits_quietly() {
    use std::process::Stdio;
    // enough output to overflow the pipe buffer after the reader is gone
    let mut child = Command::new(env!("CARGO_BIN_EXE_treecap"))
        .args(["equilibrium", "--tree", "binary:12", "--set", "leaves"])
        .env_remove("TREECAP_CONFIG")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("binary spawns");
    drop(child.stdout.take());
    let status = child.wait().expect("child exits");
    assert_eq!(status.code(), Some(0));
}

#[test]
fn selftest_reflects_suite_status() {
    let out = treecap(&["selftest"]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12, "one line per criterion: {text}");
    for line in &lines {
        assert!(line.starts_with("PASS") || line.starts_with("FAIL"));
    }
    let all_pass = lines.iter().all(|l| l.starts_with("PASS"));
    let code = out.status.code();
    if all_pass {
        assert_eq!(code, Some(0));
    } else {
        assert_eq!(code, Some(2));
    }
    assert!(all_pass, "suite not green:\n{text}");
}
