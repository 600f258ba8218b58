use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_holonomy");

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs");
    assert!(out.stdout.is_empty(), "stdout must stay empty: {}", String::from_utf8_lossy(&out.stdout));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn level<'a>(s: &'a Value, n: u64) -> &'a Value {
    s["levels"].as_array().unwrap().iter().find(|l| l["level"] == n).unwrap()
}

/// `−2 e^{iπ(μ+σ)} cos(πΔ)` from the coefficient formulas.
fn cyclic_reference(theta: f64) -> (f64, f64) {
    let c = theta.cos();
    let c2 = c * c;
    let mu = 2.0 * c2 / (1.0 + c2);
    let nu = -c * (1.0 - c2) / (1.0 + c2);
    let sigma = -(1.0 + 2.0 * (1.0 + c2).powi(2)) / (2.0 * (1.0 + c2));
    let delta = ((1.0 + sigma - mu).powi(2) + nu * nu).sqrt();
    let a = -2.0 * (PI * delta).cos();
    (a * (PI * (mu + sigma)).cos(), a * (PI * (mu + sigma)).sin())
}

#[test]
fn tycko_closed_form_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "tycko.conf", "theta = tycko\nphi0 = 0\nphi_final = 2pi\nconnection = closed-form\n");
    let out = run(tmp.path(), &["phase", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = summary(&tmp.path().join("o"));
    let (re, im) = cyclic_reference((1.0f64 / 3.0).sqrt().acos());
    let t = &level(&s, 2)["trace"];
    assert!((t["re"].as_f64().unwrap() - re).abs() < 1e-8 && (t["im"].as_f64().unwrap() - im).abs() < 1e-8);
    assert!(s["diagnostics"]["oracle"]["pi2_cyclic_gap"].as_f64().unwrap() < 1e-8);
}

#[test]
fn tycko_transported_summary_matches_frame_oracle() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["phase", "--out", "o", "--grid", "600"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = summary(&tmp.path().join("o"));
    assert!(s["diagnostics"]["oracle"]["pi2_frame_gap"].as_f64().unwrap() < 1e-8);
    let c = (1.0f64 / 3.0).sqrt();
    let t = &level(&s, 2)["trace"];
    assert!((t["re"].as_f64().unwrap() - 2.0 * (2.0 * PI * c).cos()).abs() < 1e-8);
    assert!(s["diagnostics"]["max_unitarity_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn phase_output_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = run(tmp.path(), &["phase", "--out", "a", "--grid", "200"]);
    let b = run(tmp.path(), &["phase", "--out", "b", "--grid", "200", "--workers", "1"]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    for name in ["phase.csv", "summary.csv", "summary.json"] {
        let x = fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn zero_sweep_gives_level_dimensions() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "z.conf", "phi0 = 0.4\nphi_final = 0.4\n");
    let out = run(tmp.path(), &["phase", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (h, rows) = table(&tmp.path().join("o/phase.csv"));
    assert_eq!(rows.len(), 2);
    let re = column(&h, "re_pi");
    assert_eq!((f(&rows[0][re]), f(&rows[1][re])), (1.0, 2.0));
}

#[test]
fn oracle_verify_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let ok = run(tmp.path(), &["oracle-verify", "--out", "o"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let (h, rows) = table(&tmp.path().join("o/oracle.csv"));
    let dev = column(&h, "max_deviation");
    let ode = rows.iter().find(|r| r[0] == "ode_vs_closed_form").unwrap();
    assert!(f(&ode[dev]) <= 1e-8);

    let coarse = run(tmp.path(), &["oracle-verify", "--out", "o", "--grid", "16"]);
    assert_eq!(code(&coarse), 1);
    assert!(stderr(&coarse).contains("under-resolved"), "{}", stderr(&coarse));

    let cfg = write(tmp.path(), "c0.conf", "theta = pi/2\n");
    let equator = run(tmp.path(), &["oracle-verify", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&equator), 0, "{}", stderr(&equator));
}

#[test]
fn theta_sweep_follows_the_cyclic_formula() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.conf",
        "connection = closed-form\nsweep_parameter = theta\nsweep_start = 0.1\nsweep_end = pi - 0.1\nsweep_count = 50\n",
    );
    let out = run(tmp.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (h, rows) = table(&tmp.path().join("o/sweep.csv"));
    assert_eq!(rows.len(), 50);
    let (theta, re, im) = (column(&h, "theta"), column(&h, "re_pi_2"), column(&h, "im_pi_2"));
    let mut last = 0.0;
    for r in &rows {
        let t = f(&r[theta]);
        assert!(t > last);
        last = t;
        let (a, b) = cyclic_reference(t);
        assert!((f(&r[re]) - a).abs() < 1e-8 && (f(&r[im]) - b).abs() < 1e-8, "θ = {t}");
    }
}

#[test]
fn single_point_sweep_equals_phase_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "one.conf", "theta = 1.2\ngrid = 300\nsweep_parameter = theta\nsweep_start = 1.2\n");
    let phase = run(tmp.path(), &["phase", "--config", cfg.to_str().unwrap(), "--out", "p"]);
    let sweep = run(tmp.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--out", "s"]);
    assert_eq!((code(&phase), code(&sweep)), (0, 0));
    assert_eq!(fs::read(tmp.path().join("p/summary.csv")).unwrap(), fs::read(tmp.path().join("s/sweep.csv")).unwrap());
}

#[test]
fn azimuth_sweep_profile() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "phi.conf",
        "connection = closed-form\ngrid = 64\nsweep_parameter = phi_final\nsweep_start = 0\nsweep_end = 4pi\nsweep_count = 720\n",
    );
    let out = run(tmp.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (h, rows) = table(&tmp.path().join("o/sweep.csv"));
    assert_eq!(rows.len(), 720);
    let (re, im, cre, cim) =
        (column(&h, "re_pi_2"), column(&h, "im_pi_2"), column(&h, "re_pi2_closed"), column(&h, "im_pi2_closed"));
    for r in &rows {
        assert!((f(&r[re]) - f(&r[cre])).abs() < 1e-9 && (f(&r[im]) - f(&r[cim])).abs() < 1e-9);
    }
    let spot = write(tmp.path(), "spot.conf", "connection = closed-form\nsweep_parameter = phi_final\nsweep_start = 2pi\n");
    let out = run(tmp.path(), &["sweep", "--config", spot.to_str().unwrap(), "--out", "spot"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = table(&tmp.path().join("spot/sweep.csv"));
    let (a, b) = cyclic_reference((1.0f64 / 3.0).sqrt().acos());
    assert!((f(&rows[0][column(&h, "re_pi_2")]) - a).abs() < 1e-8 && (f(&rows[0][column(&h, "im_pi_2")]) - b).abs() < 1e-8);
}

fn constant_family(dir: &Path) -> PathBuf {
    write(dir, "gens.csv", "generator,row,col,re,im\n0,0,0,1.5,0\n0,0,1,0.3,-0.2\n0,1,0,0.3,0.2\n0,1,1,-0.5,0\n0,2,2,2.0,0\n");
    write(dir, "curve.csv", "t,x\n0,1\n1,1\n2,1\n3,1\n4,1\n");
    write(dir, "const.conf", "system = custom-family\ngenerators = gens.csv\ncurve = curve.csv\ntaus = 1, 2, 4, 8\n")
}

#[test]
fn constant_hamiltonian_is_adiabatic() {
    let tmp = TempDir::new().unwrap();
    let cfg = constant_family(tmp.path());
    let out = run(tmp.path(), &["adiabatic", "--config", cfg.to_str().unwrap(), "--out", "o", "--grid", "64"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (h, rows) = table(&tmp.path().join("o/adiabatic.csv"));
    assert_eq!(rows.len(), 4);
    let d = column(&h, "defect");
    assert!(rows.iter().all(|r| f(&r[d]) <= 1e-9));
}

#[test]
fn quadrupole_tau_ladder() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "ad.conf", "duration = 50\n");
    let out = run(tmp.path(), &["adiabatic", "--config", cfg.to_str().unwrap(), "--out", "o", "--grid", "2000"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (h, rows) = table(&tmp.path().join("o/adiabatic.csv"));
    assert_eq!(rows.len(), 5);
    let defects: Vec<f64> = rows.iter().map(|r| f(&r[column(&h, "defect")])).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| f(&r[column(&h, "adiabaticity_ratio")])).collect();
    assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
    assert!(ratios.windows(2).all(|w| (1.3..=3.0).contains(&(w[0] / w[1]))), "{ratios:?}");
}

#[test]
fn gauge_test_passes_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "g.conf", "gauge_count = 12\ngrid = 800\nseed = 77\n");
    let a = run(tmp.path(), &["gauge-test", "--config", cfg.to_str().unwrap(), "--out", "a"]);
    let b = run(tmp.path(), &["gauge-test", "--config", cfg.to_str().unwrap(), "--out", "b", "--workers", "2"]);
    assert_eq!((code(&a), code(&b)), (0, 0), "{}", stderr(&a));
    assert_eq!(fs::read(tmp.path().join("a/gauge.csv")).unwrap(), fs::read(tmp.path().join("b/gauge.csv")).unwrap());
    let (_, rows) = table(&tmp.path().join("a/gauge.csv"));
    assert_eq!(rows.len(), 24);

    let custom = constant_family(tmp.path());
    let c = run(tmp.path(), &["gauge-test", "--config", custom.to_str().unwrap(), "--out", "c", "--seed", "5"]);
    assert_eq!(code(&c), 0, "{}", stderr(&c));
}

#[test]
fn invalid_configurations_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    let unknown = write(tmp.path(), "u.conf", "thetta = 1\n");
    for args in [
        vec!["phase", "--config", unknown.to_str().unwrap()],
        vec!["phase", "--grid", "8"],
        vec!["phase", "--seed", "-3"],
        vec!["phase", "--config", "missing.conf"],
        vec!["sweep"],
    ] {
        let out = run(tmp.path(), &args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn level_crossing_exits_with_3() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "g.csv", "generator,row,col,re,im\n0,0,0,1,0\n0,1,1,-1,0\n");
    write(tmp.path(), "c.csv", "t,x\n0,-1\n0.5,-0.5\n1,0\n1.5,0.5\n2,1\n");
    let cfg = write(tmp.path(), "x.conf", "system = custom-family\ngenerators = g.csv\ncurve = c.csv\n");
    let out = run(tmp.path(), &["phase", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("level crossing"));
}

#[test]
fn log_level_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(BIN)
        .current_dir(tmp.path())
        .env("HOLONOMY_LOG", "debug")
        .args(["oracle-verify", "--out", "o", "--json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let err = stderr(&out);
    assert!(err.contains("DEBUG"), "{err}");
    let last = err.lines().last().unwrap();
    let v: Value = serde_json::from_str(last).unwrap();
    assert_eq!(v["command"], "oracle-verify");
}
