use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ftsmc_cli::{bounds, compare, feasibility, simulate, ExitStatus, Options, Scenario};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn edited(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let src = fs::read_to_string(scenario(name)).unwrap();
    assert!(src.contains(from), "{from} not in {name}");
    let path = dir.join(name);
    fs::write(&path, src.replace(from, to)).unwrap();
    path
}

struct Captured {
    status: ExitStatus,
    out: String,
    err: String,
}

fn capture(f: impl FnOnce(&mut Vec<u8>, &mut Vec<u8>) -> ExitStatus) -> Captured {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = f(&mut out, &mut err);
    Captured { status, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn simulate_first_order_writes_full_record() {
    let dir = tempfile::tempdir().unwrap();
    let c = capture(|o, e| simulate(&scenario("first_order_x0_3.toml"), dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Success, "{}", c.err);
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "x", "xi", "u", "d", "rho"]);
    assert_eq!(rows.len(), 10_001);
    assert!(rows.iter().all(|r| r[1].abs() < r[5]));
    let metrics = fs::read_to_string(dir.path().join("metrics.txt")).unwrap();
    assert!(metrics.contains("J_viol") && metrics.contains("completed      true"));
    assert!(c.err.contains("k0 = \"auto\" resolved"));
}

#[test]
fn csv_values_carry_enough_digits() {
    let dir = tempfile::tempdir().unwrap();
    let c = capture(|o, e| simulate(&scenario("first_order_x0_3.toml"), dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Success);
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let second = text.lines().nth(2).unwrap();
    let x: &str = second.split(',').nth(1).unwrap();
    let mantissa = x.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
    assert!(mantissa.len() >= 9, "{x}");
}

#[test]
fn infeasible_start_refused_then_inflated() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["first_order_x0_4.toml", "first_order_x0_4_5.toml"] {
        let c = capture(|o, e| simulate(&scenario(name), &dir.path().join("refused"), Options::default(), o, e));
        assert_eq!(c.status, ExitStatus::InfeasibleInitial);
        assert!(c.err.contains("|x(0)| < rho(0)"), "{}", c.err);
        assert!(!dir.path().join("refused").exists());

        let path = edited(dir.path(), name, "lambda = 4.0", "lambda = 4.0\nallow_envelope_inflation = true");
        let out = dir.path().join("inflated");
        let c = capture(|o, e| simulate(&path, &out, Options::default(), o, e));
        assert_eq!(c.status, ExitStatus::Success, "{}", c.err);
        assert!(c.err.contains("inflated"));
        let (_, rows) = read_csv(&out.join("trajectory.csv"));
        assert!((rows[0][5] - 1.1 * rows[0][1].abs()).abs() < 1e-9);
    }
}

#[test]
fn equilibrium_stays_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let c = capture(|o, e| simulate(&scenario("second_order_equilibrium.toml"), dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Success);
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "e1", "e2", "xi", "s", "u", "d", "rho"]);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn baseline_csv_has_no_xi_column() {
    let dir = tempfile::tempdir().unwrap();
    let c = capture(|o, e| simulate(&scenario("second_order_baseline.toml"), dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Success);
    assert!(c.err.contains("envelope_violation"));
    let (header, _) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "e1", "e2", "s", "u", "d", "rho"]);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let c = capture(|o, e| simulate(&scenario("second_order_ideal_sliding.toml"), out, Options::default(), o, e));
        assert_eq!(c.status, ExitStatus::Success);
    }
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());
    assert_eq!(fs::read(a.join("metrics.txt")).unwrap(), fs::read(b.join("metrics.txt")).unwrap());
}

#[test]
fn stride_override() {
    let dir = tempfile::tempdir().unwrap();
    let opts = Options { record_stride: Some(10) };
    let c = capture(|o, e| simulate(&scenario("first_order_x0_3.toml"), dir.path(), opts, o, e));
    assert_eq!(c.status, ExitStatus::Success);
    assert_eq!(read_csv(&dir.path().join("trajectory.csv")).1.len(), 1001);
}

#[test]
fn compare_identical_scenarios_gives_zero_gains() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("second_order_ideal_sliding.toml");
    let c = capture(|o, e| compare(&s, &s, dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Success, "{}", c.err);
    assert!(c.out.contains("u_max"));
    let mut r = csv::Reader::from_path(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["metric", "non-PPF", "PPF-aware", "Gain(%)"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let names: Vec<&str> = rows.iter().map(|r| r.get(0).unwrap()).collect();
    assert_eq!(names, ["J_u", "J_peak", "J_viol", "IAE", "ISE"]);
    for row in &rows {
        match row.get(0).unwrap() {
            "J_peak" => assert_eq!(row.get(3), Some("No violation")),
            "J_viol" => assert_eq!(row.get(3), Some("--")),
            _ => assert_eq!(row.get(3), Some("0.0")),
        }
    }
    assert!(dir.path().join("trajectory_ppf.csv").exists());
    assert!(dir.path().join("trajectory_baseline.csv").exists());
}

#[test]
fn compare_rejects_mismatched_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let other = edited(dir.path(), "second_order_baseline.toml", "horizon = 10.0", "horizon = 5.0");
    let c = capture(|o, e| compare(&scenario("second_order_ppf.toml"), &other, dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Usage);
    assert!(c.err.contains("mismatch") && c.err.contains("horizon"));
    let other = edited(dir.path(), "second_order_baseline.toml", "zeta = 0.15", "zeta = 0.2");
    let c = capture(|o, e| compare(&scenario("second_order_ppf.toml"), &other, dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Usage);
}

#[test]
fn feasibility_reports() {
    let c = capture(|o, e| feasibility(&scenario("second_order_ppf.toml"), o, e));
    assert_eq!(c.status, ExitStatus::Success);
    assert!(c.out.contains("k0 = 0.800000 vs 0.250000"), "{}", c.out);

    let c = capture(|o, e| feasibility(&scenario("first_order_x0_3.toml"), o, e));
    assert_eq!(c.status, ExitStatus::Feasibility);
    assert!(c.err.contains("G_in(eps) = 0.109548 <= 4.611973"), "{}", c.err);
    for key in ["xi0", "d_bar_xi(xi0)", "d_bar_xi(eps)", "residual", "T_A", "T_B", "T_out", "T_in"] {
        assert!(c.out.contains(key), "{key} missing");
    }

    let c = capture(|o, e| feasibility(&scenario("second_order_equilibrium.toml"), o, e));
    assert_eq!(c.status, ExitStatus::Success);
    assert!(c.out.contains("residual       0.00000000000e0"), "{}", c.out);
}

#[test]
fn bounds_prints_only_times() {
    let c = capture(|o, e| bounds(&scenario("second_order_ppf.toml"), o, e));
    assert_eq!(c.status, ExitStatus::Success);
    let keys: Vec<&str> = c.out.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(keys, ["T_A", "T_B", "T_out", "T_in"]);
}

#[test]
fn parse_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "second_order_ppf.toml", "eps = 0.1", "eps = 0.5");
    let c = capture(|o, e| simulate(&path, dir.path(), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Usage);
    assert!(c.err.contains("gain.eps (line 18)"), "{}", c.err);
    let path = edited(dir.path(), "second_order_ppf.toml", "[sim]", "[sim]\nsteps = 3");
    let c = capture(|o, e| feasibility(&path, o, e));
    assert_eq!(c.status, ExitStatus::Usage);
    assert!(c.err.contains("steps") && c.err.contains("line 27"), "{}", c.err);
}

#[test]
fn shipped_scenarios_roundtrip() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let sc = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = Scenario::parse(&sc.dump()).unwrap();
        assert_eq!(sc.file, again.file, "{}", path.display());
        assert_eq!(sc.model, again.model);
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ftsmc"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str], env: Option<&str>| {
        let mut cmd = binary();
        cmd.args(args);
        if let Some(v) = env {
            cmd.env("FTSMC_RECORD_STRIDE", v);
        }
        cmd.output().unwrap().status.code().unwrap()
    };
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let s = |n: &str| scenario(n).to_str().unwrap().to_string();

    assert_eq!(code(&["simulate", &s("first_order_x0_3.toml"), "--out", out], Some("100")), 0);
    assert_eq!(read_csv(&Path::new(out).join("trajectory.csv")).1.len(), 101);
    assert_eq!(code(&["simulate", &s("first_order_x0_3.toml"), "--out", out], Some("zero")), 1);
    assert_eq!(code(&["simulate", &s("first_order_x0_4_5.toml"), "--out", out], None), 3);
    assert_eq!(code(&["feasibility", &s("first_order_x0_3.toml")], None), 2);
    assert_eq!(code(&["feasibility", &s("second_order_ppf.toml")], None), 0);
    assert_eq!(code(&["bounds", &s("second_order_ppf.toml")], None), 0);
    assert_eq!(code(&["simulate", "missing.toml", "--out", out], None), 1);
    assert_eq!(code(&["frobnicate"], None), 1);
}

#[test]
fn divergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(scenario("second_order_baseline.toml"))
        .unwrap()
        .replace("c = 0.8", "c = 1000.0")
        .replace("dt = 1e-3", "dt = 0.1")
        .replace("integrator = \"rk4\"", "integrator = \"euler\"")
        .replace("horizon = 10.0", "horizon = 100.0");
    let path = dir.path().join("unstable.toml");
    fs::write(&path, src).unwrap();
    let c = capture(|o, e| simulate(&path, &dir.path().join("out"), Options::default(), o, e));
    assert_eq!(c.status, ExitStatus::Divergence);
    assert!(c.err.contains("divergence"));
}
