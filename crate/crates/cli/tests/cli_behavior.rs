//! End-to-end behavior of the binary: exit codes, output sinks, and the
//! documented flag surface.

use std::process::Command;

fn optctl(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_optctl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = optctl(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn success_paths_exit_zero() {
    for args in [
        vec!["list"],
        vec!["analyze", "--gallery", "robinson", "--point", "0,0"],
        vec!["gallery", "--list"],
        vec![
            "simulate",
            "--gallery",
            "pl_nonunique",
            "--x0",
            "0,0",
            "--t",
            "0.5",
            "--dt",
            "0.01",
        ],
    ] {
        let out = optctl(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
    }
}

#[test]
fn input_errors_exit_three() {
    for args in [
        vec!["analyze", "--spec", "missing.spec", "--point", "0,0"],
        vec!["analyze", "--gallery", "nosuch", "--point", "0"],
        vec!["analyze", "--gallery", "robinson", "--point", "abc"],
        vec![
            "probe",
            "--gallery",
            "robinson",
            "--kind",
            "nosuchkind",
            "--center",
            "0,0",
        ],
        vec![
            "probe",
            "--gallery",
            "robinson",
            "--component",
            "9",
            "--kind",
            "point-lipschitz",
            "--center",
            "0,0",
        ],
        vec!["simulate", "--sgf", "--objective", "x1^^2", "--x0", "2"],
        vec!["gallery", "--name", "robinson"], // neither grid nor segment
        vec!["analyze", "--point", "0,0"],     // no source
        vec!["frobnicate"],                    // unknown subcommand
    ] {
        let out = optctl(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn runtime_failures_exit_two() {
    // a program that is infeasible everywhere: u >= 1 and -u >= 0
    let dir = std::env::temp_dir().join("optctl_behavior_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("infeasible.spec");
    std::fs::write(
        &path,
        r#"{"name":"void","n":1,"m":1,"p":2,
            "Q":[{"row":0,"col":0,"terms":[{"coeff":1.0,"powers":[0]}]}],
            "A":[{"row":0,"col":0,"terms":[{"coeff":1.0,"powers":[0]}]},
                 {"row":1,"col":0,"terms":[{"coeff":-1.0,"powers":[0]}]}],
            "b":[{"row":0,"terms":[{"coeff":1.0,"powers":[0]}]}]}"#,
    )
    .unwrap();
    let out = optctl(&["analyze", "--spec", path.to_str().unwrap(), "--point", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn out_flag_writes_files() {
    let dir = std::env::temp_dir().join("optctl_behavior_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("surface.csv");
    let out = optctl(&[
        "gallery",
        "--name",
        "robinson",
        "--grid",
        "5",
        "--range",
        "-1,1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("x1,x2,u4\n"));
    assert_eq!(written.lines().count(), 26); // header + 25 grid rows
}

#[test]
fn grid_export_carries_fig_columns() {
    let text = stdout(&[
        "gallery", "--name", "robinson", "--grid", "3", "--range", "-1,1",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,u4");
    // 9 rows of 3 comma-separated 17-significant-digit floats
    for line in lines {
        assert_eq!(line.split(',').count(), 3);
    }
}

#[test]
fn trajectory_csv_has_state_input_barrier_columns() {
    let text = stdout(&[
        "simulate",
        "--gallery",
        "pl_nonunique",
        "--x0",
        "0,0",
        "--t",
        "0.2",
        "--dt",
        "0.1",
        "--barrier",
        "-x2",
    ]);
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t,x1,x2,u1,h1");
}

#[test]
fn analyze_csv_format_is_machine_readable() {
    let text = stdout(&[
        "analyze",
        "--gallery",
        "robinson",
        "--point",
        "0,0",
        "--format",
        "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "condition,verdict,margin");
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 6);
    assert!(body.iter().any(|l| l.starts_with("LICQ,fails")));
    assert!(body.iter().any(|l| l.starts_with("MFCQ,holds")));
    assert!(body.iter().any(|l| l.starts_with("SLATER,holds")));
    assert!(body.iter().any(|l| l.starts_with("CR,fails")));
}

#[test]
fn probe_solver_source_is_selectable() {
    let closed = stdout(&[
        "probe",
        "--gallery",
        "robinson",
        "--component",
        "4",
        "--kind",
        "pair-quotient",
    ]);
    let solver = stdout(&[
        "probe",
        "--gallery",
        "robinson",
        "--component",
        "4",
        "--kind",
        "pair-quotient",
        "--source-map",
        "solver",
    ]);
    assert!(closed.contains("map=robinson_u4"));
    assert!(solver.contains("map=robinson"));
    // quotient columns agree to solver precision
    let q = |text: &str| -> Vec<f64> {
        text.lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with('s'))
            .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
            .collect()
    };
    for (a, b) in q(&closed).iter().zip(q(&solver).iter()) {
        assert!((a - b).abs() <= 1e-5 * a.abs());
    }
}

#[test]
fn verify_curve_rejects_other_systems() {
    let out = optctl(&[
        "simulate",
        "--sgf",
        "--objective",
        "x1^2",
        "--x0",
        "2",
        "--verify-curve",
        "y1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn monitor_requires_barrier() {
    let out = optctl(&[
        "simulate",
        "--gallery",
        "pl_nonunique",
        "--x0",
        "0,0",
        "--t",
        "0.2",
        "--dt",
        "0.1",
        "--monitor",
        "nagumo",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
