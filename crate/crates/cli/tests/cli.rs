use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resolvent-decay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    let o = run(&all);
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn meta(dir: &Path) -> Vec<(String, String)> {
    fs::read_to_string(dir.join("run.meta"))
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn meta_value(dir: &Path, key: &str) -> String {
    meta(dir)
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .unwrap_or_default()
}

#[test]
fn profile_csvs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = [
        "profile",
        "--L",
        "20",
        "--dx",
        "0.05",
        "--potential",
        "gaussian:10,0.2",
    ];
    run_in(&a, &[&args[..], &["--workers", "3"][..]].concat());
    run_in(&b, &[&args[..], &["--workers", "1"][..]].concat());
    for name in [
        "profile_fd2.csv",
        "profile_ps.csv",
        "profile_mps.csv",
        "potential.csv",
    ] {
        let (x, y) = (
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
        );
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn csv_layout_headers_and_precision() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    run_in(out, &["profile", "--L", "20", "--dx", "0.05"]);
    let text = fs::read_to_string(out.join("profile_fd2.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,absG"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 400 / 2 + 1);
    let mut prev = -1.0;
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 2);
        for f in &fields {
            let mantissa = f.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{f}");
        }
        let x: f64 = fields[0].parse().unwrap();
        assert!(x > prev);
        prev = x;
    }
    // No potential given, so no potential dump.
    assert!(!out.join("potential.csv").exists());
}

#[test]
fn metadata_records_resolved_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    run_in(
        out,
        &[
            "profile", "--L", "20", "--n", "400", "--lambda", "-2+0.5i", "--scheme", "fd2",
        ],
    );
    assert_eq!(meta_value(out, "dx"), "0.05");
    assert_eq!(meta_value(out, "lambda"), "-2+0.5i");
    assert_eq!(meta_value(out, "schemes"), "fd2");
    assert_eq!(meta_value(out, "version"), env!("CARGO_PKG_VERSION"));
    assert!(meta_value(out, "wall_time_s").parse::<f64>().is_ok());
    let keys: Vec<String> = meta(out).into_iter().map(|(k, _)| k).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "# archived run\nexperiment=profile\nL=20\nn=200\nscheme=fd2,ps\nx2 = 5\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    run_in(
        &out,
        &[
            "profile",
            "--config",
            cfg.to_str().unwrap(),
            "--dx",
            "0.05",
            "--scheme",
            "fd2",
        ],
    );
    assert_eq!(meta_value(&out, "n"), "400");
    assert_eq!(meta_value(&out, "schemes"), "fd2");
    assert_eq!(meta_value(&out, "x2"), "5");
    assert!(out.join("profile_fd2.csv").exists());
    assert!(!out.join("profile_ps.csv").exists());

    fs::write(&cfg, "experiment=moments\n").unwrap();
    let o = run(&["profile", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`experiment`"));

    fs::write(&cfg, "colour=blue\n").unwrap();
    let o = run(&["profile", "--config", cfg.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `colour`"));
}

#[test]
fn dense_cap_is_enforced_before_computing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "profile",
        "--scheme",
        "ps",
        "--dense-cap",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("`dense-cap`") && err.contains("N=2000"),
        "{err}"
    );
    assert!(!out.exists());
    // FD2 has no dense path and ignores the cap.
    run_in(&out, &["profile", "--scheme", "fd2", "--dense-cap", "1000"]);
}

#[test]
fn invalid_fields_are_named() {
    for (args, field) in [
        (&["profile", "--lambda", "ten"][..], "`lambda`"),
        (&["profile", "--dx", "2"][..], "`dx`"),
        (&["profile", "--n", "801"][..], "`n`"),
        (&["profile", "--potential", "gaussian:1"][..], "`potential`"),
        (&["profile", "--scheme", "fd4"][..], "`scheme`"),
        (&["profile", "--sigma", "0.3"][..], "`sigma`"),
        (&["profile", "--x1", "3", "--x2", "2"][..], "`x2`"),
        (&["profile", "--L", "10", "--x2", "7"][..], "`x2`"),
        (
            &["moments", "--L", "20", "--dx", "0.1", "--m-max", "13"][..],
            "`m-max`",
        ),
        (&["verify", "--suite", "nope"][..], "`suite`"),
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{args:?}: {err}");
    }
}

#[test]
fn potential_file_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let base = ["profile", "--L", "20", "--dx", "0.05", "--scheme", "fd2"];
    run_in(
        &a,
        &[&base[..], &["--potential", "gaussian:10,0.2,3"][..]].concat(),
    );
    let file = format!("file:{}", a.join("potential.csv").display());
    run_in(
        &b,
        &[&base[..], &["--potential", file.as_str()][..]].concat(),
    );
    assert_eq!(
        fs::read(a.join("profile_fd2.csv")).unwrap(),
        fs::read(b.join("profile_fd2.csv")).unwrap()
    );
    // A file sampled on another grid is rejected.
    let o = run(&[
        "profile",
        "--L",
        "20",
        "--dx",
        "0.1",
        "--potential",
        file.as_str(),
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`potential`"));
}

#[test]
fn gamma_sweeps_are_sorted_and_match_fd_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    run_in(
        out,
        &[
            "gamma-sweep-kc",
            "--L",
            "20",
            "--dxs",
            "0.02,0.05,0.1",
            "--scheme",
            "fd2",
            "--workers",
            "2",
        ],
    );
    let text = fs::read_to_string(out.join("gamma_sweep_kc_fd2.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kc,gamma"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    for (&dx, &(kc, gamma)) in [0.1, 0.05, 0.02].iter().zip(&rows) {
        let kappa = (1.0 + 10.0 * dx * dx / 2.0_f64).acosh() / dx;
        assert!((kc - std::f64::consts::PI / dx).abs() < 1e-9);
        assert!(
            (gamma / kappa - 1.0).abs() < 1e-3,
            "dx={dx}: {gamma} vs {kappa}"
        );
    }

    run_in(out, &["gamma-sweep-l", "--ls", "40,20", "--dx", "0.05"]);
    for scheme in ["fd2", "mps"] {
        let text = fs::read_to_string(out.join(format!("gamma_sweep_l_{scheme}.csv"))).unwrap();
        let ls: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(ls, vec![20.0, 40.0]);
    }
    assert!(meta_value(out, "note.dx").contains("0.005"));
}

#[test]
fn mollifier_table_covers_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    run_in(out, &["mollifier", "--L", "20", "--dx", "0.05"]);
    let text = fs::read_to_string(out.join("mollifier.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,theta0,theta,h"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 400);
    let kc = std::f64::consts::PI / 0.05;
    for r in &rows {
        let (k, t0, t, h) = (r[0], r[1], r[2], r[3]);
        assert!((0.0..=1.0).contains(&t));
        assert_eq!(t0, if k.abs() <= 0.625 * kc { 1.0 } else { 0.0 });
        if k.abs() <= 0.5 * kc {
            assert_eq!(t, 1.0);
            assert_eq!(h, k * k);
        }
    }
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn moments_table_has_integer_orders() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    run_in(
        out,
        &[
            "moments", "--L", "20", "--dx", "0.05", "--lambda", "-1", "--m-max", "4",
        ],
    );
    let text = fs::read_to_string(out.join("moments_mps.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,lhs,rhs"));
    for (m, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], m.to_string());
        let (l, r): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        assert!(l <= r * (1.0 + 1e-10));
    }
    assert_eq!(meta_value(out, "bound_holds.mps"), "true");
}

#[test]
fn verify_reports_each_invariant() {
    let o = run(&["verify", "--suite", "leibniz,lattice"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    for name in [
        "leibniz/backward_difference: PASS",
        "lattice/parseval: PASS",
        "lattice/xbound: PASS",
    ] {
        assert!(stdout.contains(name), "{stdout}");
    }
    assert!(!stdout.contains("FAIL"));
    // Suites print in the order requested.
    assert!(stdout.find("leibniz/").unwrap() < stdout.find("lattice/").unwrap());
}
