use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use shiftdenoise::estimators::{residual_objective, Filter};
use shiftdenoise::io::{read_signal_csv, write_signal_csv};
use shiftdenoise::{Domain, Signal, C64};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shiftdenoise"));
    c.env_remove("SHIFTDENOISE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_signal(dir: &Path, name: &str, x: &Signal) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    write_signal_csv(x, &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn write_text(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_signal(path: &Path) -> Signal {
    read_signal_csv(fs::File::open(path).unwrap()).unwrap()
}

fn two_harmonics(n: usize) -> Signal {
    Signal::from_fn(Domain::symmetric(n), |t| {
        let t = t as f64;
        C64::from_polar(1.0, 0.7 * t) + C64::new(0.5, 0.3) * C64::from_polar(1.0, 2.9 * t)
    })
}

const CONSTRAINED: &str = r#"{"m": 8, "n": 8, "mode": "constrained", "rho_bar": 1.0}"#;

#[test]
fn fit_constant_signal() {
    let dir = TempDir::new().unwrap();
    let x = Signal::from_fn(Domain::symmetric(16), |_| C64::new(2.0, -1.0));
    let input = write_signal(dir.path(), "x.csv", &x);
    let cfg = write_text(dir.path(), "cfg.json", CONSTRAINED);
    let out_path = dir.path().join("filter.json");
    let out = run(&[
        "fit",
        "--input",
        p(&input),
        "--config",
        p(&cfg),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let filter = Filter::from_json(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(filter.converged());
    assert!(residual_objective(&filter, &x, Domain::symmetric(8)).unwrap() < 1e-10);
}

#[test]
fn fit_error_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write_text(dir.path(), "bad.csv", "t,re,im\n0,1,0\n1,oops,0\n");
    let cfg = write_text(dir.path(), "cfg.json", CONSTRAINED);
    let out_path = dir.path().join("f.json");
    let out = run(&[
        "fit",
        "--input",
        p(&bad),
        "--config",
        p(&cfg),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let x = Signal::from_fn(Domain::symmetric(16), |_| C64::new(1.0, 0.0));
    let input = write_signal(dir.path(), "x.csv", &x);
    let small = write_text(dir.path(), "small.json", &CONSTRAINED.replace("1.0", "0.5"));
    let out = run(&[
        "fit",
        "--input",
        p(&input),
        "--config",
        p(&small),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(!out_path.exists());

    let unknown = write_text(
        dir.path(),
        "unknown.json",
        &CONSTRAINED.replace("\"m\"", "\"bogus\": 1, \"m\""),
    );
    let out = run(&[
        "fit",
        "--input",
        p(&input),
        "--config",
        p(&unknown),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 2);

    let short = write_signal(dir.path(), "short.csv", &x.restrict(Domain::symmetric(5)));
    let out = run(&[
        "fit",
        "--input",
        p(&short),
        "--config",
        p(&cfg),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 3);

    let out = run(&[
        "fit",
        "--input",
        p(&input),
        "--config",
        p(&cfg),
        "--output",
        "/nonexistent/dir/f.json",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn fit_unconverged_writes_filter() {
    let dir = TempDir::new().unwrap();
    let input = write_signal(dir.path(), "x.csv", &two_harmonics(40));
    let cfg = write_text(
        dir.path(),
        "cfg.json",
        r#"{"m": 10, "n": 10, "mode": "constrained", "rho_bar": 3.0, "solver": {"max_iters": 2}}"#,
    );
    let out_path = dir.path().join("f.json");
    let out = run(&[
        "fit",
        "--input",
        p(&input),
        "--config",
        p(&cfg),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let filter = Filter::from_json(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(!filter.converged());
}

#[test]
fn denoise_identity_round_trip() {
    let dir = TempDir::new().unwrap();
    let x = two_harmonics(10);
    let input = write_signal(dir.path(), "x.csv", &x);
    let id = write_text(
        dir.path(),
        "id.json",
        &Filter::identity(2).to_json().unwrap(),
    );
    let out_path = dir.path().join("y.csv");
    let out = run(&[
        "denoise",
        "--input",
        p(&input),
        "--mode",
        "filter",
        "--filter",
        p(&id),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let y = read_signal(&out_path);
    assert_eq!((y.start(), y.end()), (-8, 8));
    for t in -8..=8 {
        assert_eq!(y.at(t), x.at(t));
    }
}

#[test]
fn denoise_missing_filter_and_flags() {
    let dir = TempDir::new().unwrap();
    let input = write_signal(dir.path(), "x.csv", &two_harmonics(10));
    let missing = dir.path().join("missing.json");
    let out = run(&[
        "denoise",
        "--input",
        p(&input),
        "--mode",
        "filter",
        "--filter",
        p(&missing),
    ]);
    assert_eq!(code(&out), 3);
    let out = run(&["denoise", "--input", p(&input), "--mode", "filter"]);
    assert_eq!(code(&out), 2);
    let out = run(&["denoise", "--input", p(&input), "--mode", "composite"]);
    assert_eq!(code(&out), 2);
    let junk = write_text(dir.path(), "junk.json", "{not json");
    let out = run(&[
        "denoise",
        "--input",
        p(&input),
        "--mode",
        "filter",
        "--filter",
        p(&junk),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn denoise_composite_noiseless() {
    let dir = TempDir::new().unwrap();
    let x = two_harmonics(64);
    let input = write_signal(dir.path(), "x.csv", &x);
    let out_path = dir.path().join("est.csv");
    let out = run(&[
        "denoise",
        "--input",
        p(&input),
        "--mode",
        "composite",
        "--s",
        "2",
        "--output",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let est = read_signal(&out_path);
    let d = Domain::symmetric(64);
    let err = x.sub(&est).norm(d, 2.0, shiftdenoise::Space::Time);
    let rel = err / x.norm(d, 2.0, shiftdenoise::Space::Time);
    assert!(rel <= 1e-4, "relative error {rel}");
}

#[test]
fn denoise_fit_and_blockwise_to_stdout() {
    let dir = TempDir::new().unwrap();
    let input = write_signal(dir.path(), "x.csv", &two_harmonics(30));
    let cfg = write_text(dir.path(), "cfg.json", &CONSTRAINED.replace("1.0", "4.0"));
    let out = run(&[
        "denoise",
        "--input",
        p(&input),
        "--mode",
        "fit",
        "--config",
        p(&cfg),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let y = read_signal_csv(&out.stdout[..]).unwrap();
    assert_eq!((y.start(), y.end()), (-8, 8));
    let out = run(&[
        "denoise",
        "--input",
        p(&input),
        "--mode",
        "blockwise",
        "--config",
        p(&cfg),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let y = read_signal_csv(&out.stdout[..]).unwrap();
    assert_eq!((y.start(), y.end()), (-22, 22));
}

#[test]
fn oracle_kinds() {
    let dir = TempDir::new().unwrap();
    let constant = write_text(
        dir.path(),
        "c.json",
        r#"{"modes": [{"omega": 0.0, "mult": 1}]}"#,
    );
    let out = run(&[
        "oracle",
        "--spec",
        p(&constant),
        "--kind",
        "interp",
        "--m",
        "4",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let f = Filter::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let taps: Vec<f64> = f
        .coeffs()
        .iter()
        .filter(|z| z.norm() > 1e-12)
        .map(|z| z.re)
        .collect();
    assert_eq!(taps.len(), 5);
    assert!(taps.iter().all(|v| (v - 0.2).abs() < 1e-12));

    let close = write_text(
        dir.path(),
        "close.json",
        r#"{"modes": [{"omega": 0.3, "mult": 1}, {"omega": 0.31, "mult": 1}]}"#,
    );
    let out = run(&[
        "oracle",
        "--spec",
        p(&close),
        "--kind",
        "separated",
        "--m",
        "8",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));

    let two = write_text(
        dir.path(),
        "two.json",
        r#"{"modes": [{"omega": 0.3, "mult": 1}, {"omega": 2.0, "mult": 1}]}"#,
    );
    let out = run(&[
        "oracle",
        "--spec",
        p(&two),
        "--kind",
        "unitroots",
        "--m",
        "20",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("threshold"));
    let dest = dir.path().join("u.json");
    let out = run(&[
        "oracle",
        "--spec",
        p(&two),
        "--kind",
        "unitroots",
        "--m",
        "64",
        "--output",
        p(&dest),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dest.exists());

    let out = run(&["oracle", "--spec", p(&two), "--kind", "square", "--m", "16"]);
    assert_eq!(code(&out), 0);
    let f = Filter::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(f.support(), Domain::symmetric(16));

    let bad = write_text(
        dir.path(),
        "bad.json",
        r#"{"poly": [[2.0, 0.0], [1.0, 0.0]]}"#,
    );
    let out = run(&["oracle", "--spec", p(&bad), "--kind", "interp", "--m", "4"]);
    assert_eq!(code(&out), 2);
}

const SCENARIO: &str = r#"{
  "name": "smoke",
  "signal": {"kind": "harmonic", "s": 2, "seed": 3},
  "estimator": {"kind": "window", "config": {"m": 32, "n": 32, "mode": "constrained", "rho_bar": 8.0}},
  "sigmas": [SIGMAS],
  "trials": 10,
  "master_seed": 2024
}"#;

fn scenario(dir: &Path, sigmas: &str) -> PathBuf {
    write_text(dir, "scenario.json", &SCENARIO.replace("SIGMAS", sigmas))
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(dir.path(), "0.5");
    let mut reports = Vec::new();
    for threads in ["1", "8", "8"] {
        let dest = dir.path().join(format!("r{}.json", reports.len()));
        let start = Instant::now();
        let out = bin()
            .args(["simulate", "--scenario", p(&sc), "--output", p(&dest)])
            .env("SHIFTDENOISE_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(start.elapsed().as_secs() < 60);
        reports.push(fs::read(&dest).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[1], reports[2]);
}

#[test]
fn simulate_zero_noise_and_outputs() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(dir.path(), "0.0");
    let dest = dir.path().join("r.json");
    let trials = dir.path().join("t.csv");
    let curves = dir.path().join("c.csv");
    let out = run(&[
        "simulate",
        "--scenario",
        p(&sc),
        "--output",
        p(&dest),
        "--csv",
        p(&trials),
        "--curves",
        p(&curves),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&dest).unwrap()).unwrap();
    let max = report["points"][0]["report"]["l2_loss"]["max"]
        .as_f64()
        .unwrap();
    assert!(max < 1e-5, "{max}");
    assert_eq!(fs::read_to_string(&trials).unwrap().lines().count(), 11);
    assert_eq!(fs::read_to_string(&curves).unwrap().lines().count(), 2);

    let out = run(&["report", "--input", p(&dest)]);
    assert_eq!(code(&out), 0);
    assert_eq!(out.stdout, fs::read(&curves).unwrap());
    let out = run(&["report", "--input", p(&dest), "--format", "trials"]);
    assert_eq!(code(&out), 0);
    assert_eq!(out.stdout, fs::read(&trials).unwrap());
}

#[test]
fn simulate_and_report_errors() {
    let dir = TempDir::new().unwrap();
    let bad = write_text(dir.path(), "s.json", &SCENARIO.replace("SIGMAS", "-1.0"));
    let dest = dir.path().join("r.json");
    let out = run(&["simulate", "--scenario", p(&bad), "--output", p(&dest)]);
    assert_eq!(code(&out), 2);
    let missing = dir.path().join("nope.json");
    let out = run(&["simulate", "--scenario", p(&missing), "--output", p(&dest)]);
    assert_eq!(code(&out), 3);
    let out = run(&["report", "--input", p(&missing)]);
    assert_eq!(code(&out), 3);

    let sc = scenario(dir.path(), "0.5");
    let out = bin()
        .args(["simulate", "--scenario", p(&sc), "--output", p(&dest)])
        .env("SHIFTDENOISE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn help_lists_flags_and_unknown_flags_fail() {
    let cases: &[(&str, &[&str])] = &[
        ("fit", &["--input", "--config", "--output", "--threads"]),
        (
            "denoise",
            &[
                "--input",
                "--mode",
                "--filter",
                "--config",
                "--s",
                "--output",
                "--threads",
            ],
        ),
        ("oracle", &["--spec", "--kind", "--m", "--output"]),
        (
            "simulate",
            &[
                "--scenario",
                "--output",
                "--csv",
                "--curves",
                "--seed",
                "--threads",
            ],
        ),
        ("report", &["--input", "--format", "--output"]),
    ];
    for (cmd, flags) in cases {
        let out = run(&[cmd, "--help"]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in *flags {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
        let out = run(&[cmd, "--definitely-not-a-flag"]);
        assert_eq!(code(&out), 2);
    }
}
