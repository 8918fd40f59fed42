use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use glm_pss::pss::{power_error_table, TABLE_REL_ERRORS, TABLE_TARGETS};
use glm_pss::{Family, FamilyLink, Link};
use glm_pss_cli::config::CommandConfig;
use glm_pss_cli::{compute_empirical_effects, load_design_csv, parse_args, Coefficients, DesignSchema};
use tempfile::TempDir;

fn glmpss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glmpss")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Value of `name` in human key/value output.
fn field(text: &str, name: &str) -> String {
    text.lines()
        .find_map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next() == Some(name)).then(|| parts.next().unwrap().to_string())
        })
        .unwrap_or_else(|| panic!("no field {name} in\n{text}"))
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn power_example() {
    let out = stdout(&glmpss(&["power", "--alpha", "0.05", "--df", "1", "--f2", "0.02", "--n", "393"]));
    let p: f64 = field(&out, "power").parse().unwrap();
    assert!((p - 0.8003).abs() < 5e-4, "{p}");
}

#[test]
fn sample_size_from_phi_example() {
    let out = stdout(&glmpss(&[
        "samplesize",
        "--alpha",
        "0.05",
        "--df",
        "1",
        "--power",
        "0.8",
        "--phi",
        "1.0",
        "--mean-y",
        "0.6156",
        "--family",
        "bernoulli",
        "--link",
        "logit",
    ]));
    let w1: f64 = field(&out, "w1").parse().unwrap();
    let f2: f64 = field(&out, "f2").parse().unwrap();
    assert!((w1 - 0.2367).abs() < 1e-4);
    assert!((f2 - 0.0592).abs() < 1e-4);
    assert_eq!(field(&out, "n"), "133");
}

#[test]
fn power_difference_grid() {
    let out = stdout(&glmpss(&["table1"]));
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 9);
    let expected = power_error_table(&TABLE_TARGETS, &TABLE_REL_ERRORS, 1, 0.05).unwrap();
    for (line, (target, row)) in lines[1..].iter().zip(TABLE_TARGETS.iter().zip(&expected)) {
        let values: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(values.len(), 7);
        assert_eq!(values[0], *target);
        assert_eq!(&values[1..], row.as_slice());
    }
}

#[test]
fn two_point_design_file() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "two_point.csv", "x\n0\n1\n");
    let schema = DesignSchema { x_cols: vec!["x".into()], ..Default::default() };
    let coefs = Coefficients { lambda: vec![0.0], beta: vec![1.0] };
    let design = load_design_csv(Path::new(&path), &schema, FamilyLink::logistic(), Some(&coefs)).unwrap();
    let s = compute_empirical_effects(&design).unwrap();
    assert!((s.phi - 1.0).abs() < 1e-12);
    assert!((s.f2 - 0.0550287).abs() < 1e-6);

    let null = Coefficients { lambda: vec![0.3], beta: vec![0.0] };
    let design = load_design_csv(Path::new(&path), &schema, FamilyLink::logistic(), Some(&null)).unwrap();
    let s = compute_empirical_effects(&design).unwrap();
    assert_eq!((s.phi, s.pseudo_r2, s.f2, s.f2_phi, s.f2_r), (0.0, 0.0, 0.0, 0.0, 0.0));
}

#[test]
fn gamma_log_design_has_exact_phi_approximation() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "g.csv", "x,z\n0.1,1\n0.7,0\n1.3,2\n2.0,1\n0.4,3\n");
    let schema = DesignSchema { z_cols: vec!["z".into()], x_cols: vec!["x".into()], y_col: None };
    let coefs = Coefficients { lambda: vec![0.2, -0.3], beta: vec![0.8] };
    let design = load_design_csv(Path::new(&path), &schema, FamilyLink::gamma_log(2.0), Some(&coefs)).unwrap();
    let s = compute_empirical_effects(&design).unwrap();
    assert!(s.re_phi.unwrap().abs() < 1e-12);
}

#[test]
fn outcome_column_is_fitted_first() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("y,a,b\n");
    for i in 0..30 {
        let (a, b) = ((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        text.push_str(&format!("{},{a},{b}\n", 0.5 + 1.25 * a - 2.0 * b));
    }
    let path = write(dir.path(), "lin.csv", &text);
    let schema = DesignSchema { z_cols: vec!["a".into()], x_cols: vec!["b".into()], y_col: Some("y".into()) };
    let design = load_design_csv(Path::new(&path), &schema, FamilyLink::normal(1.0), None).unwrap();
    for (got, want) in design.lambda().iter().chain(design.beta()).zip([0.5, 1.25, -2.0]) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn bad_cell_is_reported_with_row_and_column() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("x,z\n");
    for i in 1..=10 {
        text.push_str(&if i == 7 { "0.5,oops\n".to_string() } else { format!("{},{}\n", i as f64 / 10.0, i) });
    }
    let path = write(dir.path(), "bad.csv", &text);
    let out = glmpss(&[
        "effectsize",
        "--design",
        &path,
        "--z-cols",
        "z",
        "--x-cols",
        "x",
        "--lambda",
        "0,0",
        "--beta",
        "1",
        "--model",
        "logistic",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[ingestion_error]:"));
    assert!(err.contains("row 7") && err.contains("'z'"), "{err}");
}

#[test]
fn exit_statuses() {
    let dir = TempDir::new().unwrap();
    let config = glmpss(&["power", "--f2", "0.02", "--n", "100", "--alpha", "1.5"]);
    assert_eq!(config.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&config.stderr).starts_with("error[config_error]"));
    assert_eq!(glmpss(&["power", "--f2", "0.02"]).status.code(), Some(2));
    assert_eq!(glmpss(&["power", "--f2", "0.02", "--phi", "1", "--n", "9"]).status.code(), Some(2));

    let numerical = glmpss(&["effectsize", "--model", "bernoulli-identity", "--s-x2", "0.2", "--n-mc", "2000"]);
    assert_eq!(numerical.status.code(), Some(4));

    let mut text = String::from("y,x\n");
    for i in 0..20 {
        text.push_str(&format!("{},{i}\n", u8::from(i >= 10)));
    }
    let path = write(dir.path(), "separated.csv", &text);
    let out = glmpss(&["effectsize", "--design", &path, "--x-cols", "x", "--y-col", "y", "--model", "logistic"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[non_convergence]"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let design = write(dir.path(), "d.csv", "x,z\n0,0.2\n1,0.9\n0.5,0.1\n0.2,0.6\n0.8,0.4\n");
    let runs: [&[&str]; 3] = [
        &["relerror-sweep", "--model", "logistic", "--axis", "a_x=0.5,1.5", "--axis", "s_x2=0.1:1:3", "--n-mc", "3000"],
        &["effectsize", "--model", "poisson-log", "--s-x2", "0.5", "--rho", "0.3", "--n-mc", "5000", "--seed", "9"],
        &[
            "verify",
            "--design",
            &design,
            "--z-cols",
            "z",
            "--x-cols",
            "x",
            "--lambda",
            "0,0.5",
            "--beta",
            "1",
            "--model",
            "logistic",
            "--target-f2",
            "0.05",
            "--n",
            "150",
            "--reps",
            "200",
            "--seed",
            "4",
        ],
    ];
    for args in runs {
        let out = dir.path().join("run.csv");
        let mut full = args.to_vec();
        full.extend(["--out", out.to_str().unwrap()]);
        let files: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                stdout(&glmpss(&full));
                fs::read(&out).unwrap()
            })
            .collect();
        assert_eq!(files[0], files[1], "{args:?}");
        let a = stdout(&glmpss(args));
        assert_eq!(a, stdout(&glmpss(args)));
    }
}

#[test]
fn metadata_header_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let out_s = out.to_str().unwrap();
    stdout(&glmpss(&[
        "relerror-sweep",
        "--family",
        "gamma",
        "--link",
        "log",
        "--aux",
        "2",
        "--ref-mean",
        "4",
        "--rho",
        "-0.2",
        "--axis",
        "s_x2=0.2,0.4",
        "--n-mc",
        "1000",
        "--seed",
        "11",
        "--out",
        out_s,
    ]));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(&format!("# glmpss {}\n", env!("CARGO_PKG_VERSION"))));
    let echoed = CommandConfig::from_metadata(&text).unwrap();
    assert_eq!(echoed.command, "relerror-sweep");
    assert_eq!(echoed.seed(), Some(11));
    assert_eq!(echoed.get("rho"), Some("-0.2"));

    let (_, reparsed) = parse_args(echoed.to_args().into_iter().map(Into::into).collect()).unwrap().unwrap();
    assert_eq!(reparsed, echoed);

    // Below the version line, the uncommented header is a config file.
    let header: String =
        text.lines().take_while(|l| l.starts_with('#')).skip(1).map(|l| format!("{}\n", &l[1..])).collect();
    let cfg = write(dir.path(), "rerun.cfg", &header);
    let again = dir.path().join("again.csv");
    stdout(&glmpss(&["relerror-sweep", "--config", &cfg, "--out", again.to_str().unwrap()]));
    let again = fs::read_to_string(&again).unwrap();
    assert_eq!(data_lines(&again), data_lines(&text));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "p.cfg", "command = power\nalpha = 0.01\nf2 = 0.02\nn = 500\n");
    let from_file = stdout(&glmpss(&["power", "--config", &cfg]));
    assert_eq!(field(&from_file, "n"), "500");
    assert_eq!(field(&from_file, "critical_value"), "6.6349");
    let overridden = stdout(&glmpss(&["power", "--config", &cfg, "--n", "393", "--alpha", "0.05"]));
    let p: f64 = field(&overridden, "power").parse().unwrap();
    assert!((p - 0.8003).abs() < 5e-4);

    let wrong = glmpss(&["samplesize", "--config", &cfg, "--power", "0.8"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn human_and_csv_precision() {
    let human = stdout(&glmpss(&["power", "--f2", "0.0123456789", "--n", "100"]));
    assert_eq!(field(&human, "f2"), "0.0123457");
    let csv = stdout(&glmpss(&["power", "--f2", "0.0123456789", "--n", "100", "--format", "csv"]));
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "f2,n,noncentrality,critical_value,power");
    assert!(lines[1].starts_with("0.0123456789,100,"));
}

#[test]
fn family_and_link_parsing() {
    let fl = FamilyLink::new(Family::Poisson, Link::Log, 1.0).unwrap();
    let out = stdout(&glmpss(&[
        "samplesize",
        "--power",
        "0.9",
        "--phi",
        "0.5",
        "--mean-y",
        "2",
        "--family",
        "poisson",
        "--link",
        "log",
    ]));
    let w1: f64 = field(&out, "w1").parse().unwrap();
    assert!((w1 - fl.link_eval(2f64.ln()).unwrap().weight).abs() < 1e-5);
    assert_eq!(
        glmpss(&[
            "samplesize",
            "--power",
            "0.9",
            "--phi",
            "0.5",
            "--mean-y",
            "2",
            "--family",
            "poisson",
            "--link",
            "logit"
        ])
        .status
        .code(),
        Some(2)
    );
}
