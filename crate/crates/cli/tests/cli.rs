use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn heig(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heig"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run heig")
}

fn heig_env(args: &[&str], dir: &Path, key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heig"))
        .args(args)
        .current_dir(dir)
        .env(key, value)
        .output()
        .expect("run heig")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn assert_ok(out: &Output) {
    assert_eq!(
        code(out),
        0,
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Table {
        let mut rdr = csv::Reader::from_path(path).unwrap();
        let header = rdr.headers().unwrap().iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        Table { header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name}"))
    }

    fn f(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }

    fn column(&self, name: &str) -> Vec<f64> {
        (0..self.rows.len()).map(|i| self.f(i, name)).collect()
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn setup(text: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", text);
    (dir, cfg)
}

#[test]
fn bounds_match_closed_forms() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 0.1\noutputs = \"o\"\n");
    assert_ok(&heig(&["bounds", "--config", "run.toml"], dir.path()));
    let t = Table::read(&dir.path().join("o/bounds.csv"));
    assert_eq!(
        t.header,
        ["t", "F_low", "F_up", "oracle_F_low", "oracle_F_up"]
    );
    assert_eq!(t.rows.len(), 1001);
    for i in 0..t.rows.len() {
        assert!((t.f(i, "F_low") - t.f(i, "oracle_F_low")).abs() <= 1e-8);
        assert!((t.f(i, "F_up") - t.f(i, "oracle_F_up")).abs() <= 1e-8);
    }
    assert!(dir.path().join("o/bounds.svg").exists());
}

#[test]
fn every_number_has_seventeen_significant_digits() {
    let (dir, _) = setup("problem = \"example2_dirichlet\"\nrho = 0.3\nemit_svg = false\n");
    assert_ok(&heig(
        &["bounds", "--config", "run.toml", "--out", "x"],
        dir.path(),
    ));
    let t = Table::read(&dir.path().join("x/bounds.csv"));
    for row in &t.rows {
        for cell in row {
            let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
            let v: f64 = cell.parse().unwrap();
            assert_eq!(&format!("{v:.16e}"), cell);
        }
    }
    assert!(!dir.path().join("x/bounds.svg").exists());
}

#[test]
fn large_radius_has_no_positive_lower_bound() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 1.0\n");
    assert_ok(&heig(
        &["bounds", "--config", "run.toml", "--out", "o"],
        dir.path(),
    ));
    let t = Table::read(&dir.path().join("o/bounds.csv"));
    let low = t.column("F_low");
    assert!(low.iter().all(|&v| v <= 1e-12));
    let best = low.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, low[0]);
}

#[test]
fn dirichlet_bounds_vanish_at_both_ends() {
    let (dir, _) = setup("problem = \"example2_dirichlet\"\nrho = 0.1\n");
    assert_ok(&heig(
        &["bounds", "--config", "run.toml", "--out", "o"],
        dir.path(),
    ));
    let t = Table::read(&dir.path().join("o/bounds.csv"));
    assert!(t.f(0, "F_low").abs() <= 1e-10);
    assert!(t.f(1000, "F_low").abs() <= 1e-10);
}

#[test]
fn scans_locate_thresholds() {
    let cases = [
        ("example1_mixed", 0.005, 0.4, 80, (2f64).ln() / 4.0, 1e-6),
        (
            "example2_dirichlet",
            0.005,
            0.8,
            160,
            (4.0 * PI / (PI - 2.0)).ln() / 4.0,
            1e-4,
        ),
    ];
    for (name, lo, hi, count, expected, tol) in cases {
        let (dir, _) = setup(&format!(
            "problem = \"{name}\"\n[rho_grid]\nlo = {lo}\nhi = {hi}\ncount = {count}\n"
        ));
        assert_ok(&heig(
            &["scan", "--config", "run.toml", "--out", "o"],
            dir.path(),
        ));
        let scan = Table::read(&dir.path().join("o/scan.csv"));
        assert_eq!(
            scan.header,
            ["rho", "F_low_max", "t_rho", "holds_5b", "holds_5a", "a_rho"]
        );
        assert_eq!(scan.rows.len(), count);
        let th = Table::read(&dir.path().join("o/thresholds.csv"));
        let row = th
            .rows
            .iter()
            .position(|r| r[0] == "lower_positive")
            .expect("threshold row");
        assert!(
            (th.f(row, "rho_star") - expected).abs() <= tol,
            "{name}: {}",
            th.f(row, "rho_star")
        );
        // a(ρ) is present exactly where some condition holds.
        for r in &scan.rows {
            let holds = r[3] == "true" || r[4] == "true";
            assert_eq!(holds, !r[5].is_empty());
        }
    }
}

#[test]
fn single_point_scan_has_no_threshold() {
    let (dir, _) =
        setup("problem = \"example1_mixed\"\n[rho_grid]\nlo = 0.1\nhi = 0.1\ncount = 1\n");
    assert_ok(&heig(
        &["scan", "--config", "run.toml", "--out", "o"],
        dir.path(),
    ));
    assert_eq!(Table::read(&dir.path().join("o/scan.csv")).rows.len(), 1);
    assert!(Table::read(&dir.path().join("o/thresholds.csv"))
        .rows
        .is_empty());
}

#[test]
fn solve_small_radius_both_signs() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 0.01\n");
    assert_ok(&heig(
        &["solve", "--config", "run.toml", "--out", "o"],
        dir.path(),
    ));
    let linear = 0.01 * 9.0 * PI * PI / 4.0;
    for (sign, s) in [("plus", 1.0), ("minus", -1.0)] {
        let j = json(&dir.path().join(format!("o/pair_{sign}.json")));
        let lambda = j["lambda"].as_f64().unwrap();
        assert!(s * lambda > 0.0);
        // First-order departure from the linearized value stays below 6%.
        assert!((lambda.abs() / linear - 1.0).abs() < 0.06, "{lambda}");
        assert_eq!(j["contained"], true);
        assert!(j["residual"].as_f64().unwrap() <= 1e-9);
        let u = Table::read(&dir.path().join(format!("o/pair_{sign}.csv")));
        assert_eq!(u.rows.len(), 256);
        assert_eq!(u.header, ["t", "u"]);
    }
}

#[test]
fn solve_single_sign_is_contained() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 0.15\n");
    assert_ok(&heig(
        &[
            "solve", "--config", "run.toml", "--sign", "plus", "--out", "o",
        ],
        dir.path(),
    ));
    let j = json(&dir.path().join("o/pair_plus.json"));
    assert!(j["lambda"].as_f64().unwrap() <= j["a_rho"].as_f64().unwrap());
    assert_eq!(j["contained"], true);
    assert_eq!(j["verified"], true);
    assert!(!dir.path().join("o/pair_minus.json").exists());
}

#[test]
fn sweeps_stay_inside_the_band() {
    for (name, hi) in [("example1_mixed", 0.14), ("example2_dirichlet", 0.5)] {
        let (dir, _) = setup(&format!(
            "problem = \"{name}\"\nn = 96\n[rho_grid]\nlo = 0.02\nhi = {hi}\ncount = 8\n"
        ));
        assert_ok(&heig(
            &["sweep", "--config", "run.toml", "--out", "o"],
            dir.path(),
        ));
        let t = Table::read(&dir.path().join("o/sweep.csv"));
        assert_eq!(t.rows.len(), 8);
        for i in 0..8 {
            let a = t.f(i, "a_rho");
            assert!(t.f(i, "lambda_plus") > 0.0 && t.f(i, "lambda_plus") <= a + 1e-8);
            assert!(t.f(i, "lambda_minus") < 0.0 && -t.f(i, "lambda_minus") <= a + 1e-8);
            assert_eq!(t.rows[i][t.col("contained_plus")], "true");
        }
        assert!(dir.path().join("o/region.svg").exists());
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let (dir, _) =
        setup("problem = \"example1_mixed\"\n[rho_grid]\nlo = 0.01\nhi = 0.1\ncount = 0\n");
    assert_ok(&heig(
        &["sweep", "--config", "run.toml", "--out", "o"],
        dir.path(),
    ));
    let text = fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("rho,a_rho,lambda_plus,lambda_minus"));
}

#[test]
fn output_is_deterministic() {
    let (dir, _) = setup(
        "problem = \"example2_dirichlet\"\nn = 64\n[rho_grid]\nlo = 0.05\nhi = 0.4\ncount = 6\n",
    );
    for cmd in ["scan", "sweep"] {
        assert_ok(&heig(
            &[cmd, "--config", "run.toml", "--out", "a"],
            dir.path(),
        ));
        assert_ok(&heig_env(
            &[cmd, "--config", "run.toml", "--out", "b"],
            dir.path(),
            "HEIG_THREADS",
            "1",
        ));
    }
    for f in [
        "scan.csv",
        "thresholds.csv",
        "sweep.csv",
        "scan.svg",
        "region.svg",
    ] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn overrides_replace_config_values() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 0.1\n");
    let out = heig(
        &[
            "scan",
            "--config",
            "run.toml",
            "--set",
            "rho=",
            "--set",
            "rho_grid={lo=0.1,hi=0.2,count=3}",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_ok(&out);
    assert_eq!(Table::read(&dir.path().join("o/scan.csv")).rows.len(), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "problem = \"example3\"\nrho = 0.1\n",
        "problem = \"example1_mixed\"\n",
        "problem = \"example1_mixed\"\nrho = 0.1\n[rho_grid]\nlo = 0.1\nhi = 0.2\ncount = 2\n",
        "problem = \"example1_mixed\"\nrho = 0.1\nn = 3\n",
        "problem = \"example1_mixed\"\nrho = 0.1\nsolve_tol = -1\n",
        "this is not toml",
    ];
    for text in cases {
        write_config(dir.path(), "bad.toml", text);
        let out = heig(&["bounds", "--config", "bad.toml"], dir.path());
        assert_eq!(
            code(&out),
            2,
            "{text}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(
        code(&heig(&["bounds", "--config", "missing.toml"], dir.path())),
        2
    );
    write_config(
        dir.path(),
        "ok.toml",
        "problem = \"example1_mixed\"\nrho = 0.1\n",
    );
    assert_eq!(
        code(&heig_env(
            &["bounds", "--config", "ok.toml"],
            dir.path(),
            "HEIG_THREADS",
            "zero"
        )),
        2
    );
}

#[test]
fn numerical_failure_exits_with_three() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 1000.0\nn = 16\n");
    let out = heig(&["solve", "--config", "run.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn non_convergence_exits_with_four_and_writes_diagnostics() {
    let (dir, _) = setup("problem = \"example1_mixed\"\nrho = 0.1\nn = 32\nsolve_tol = 1e-30\n");
    let out = heig(
        &[
            "solve", "--config", "run.toml", "--sign", "minus", "--out", "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let d = json(&dir.path().join("o/diagnostics_minus.json"));
    assert_eq!(d["u"].as_array().unwrap().len(), 32);
    assert!(d["lambda"].as_f64().unwrap() < 0.0);
}

#[test]
fn custom_problem_from_tables() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let mut g = String::from("t,g\n");
    for i in 0..=600 {
        let t = i as f64 / 600.0;
        g.push_str(&format!("{t},{}\n", (1.5 * PI * t).sin()));
    }
    fs::write(p.join("g.csv"), g).unwrap();
    let mut env = String::from("rho,ell_low,ell_up\n");
    for i in 0..=20 {
        let r = i as f64 * 0.05;
        env.push_str(&format!("{r},{},{}\n", (-2.0 * r).exp(), (2.0 * r).exp()));
    }
    fs::write(p.join("env.csv"), env).unwrap();
    let mut k = String::from("t,s,k\n");
    for i in 0..=40 {
        for j in 0..=40 {
            let (t, s) = (i as f64 / 40.0, j as f64 / 40.0);
            k.push_str(&format!("{t},{s},{}\n", t.min(s)));
        }
    }
    fs::write(p.join("k.csv"), k).unwrap();

    // Tabulated weight with the mixed kernel and the default envelopes
    // reproduces the built-in mixed problem up to interpolation error.
    write_config(
        p,
        "named.toml",
        "rho = 0.1\n[problem]\nkernel = \"green_mixed\"\ng_csv = \"g.csv\"\n",
    );
    assert_ok(&heig(
        &["bounds", "--config", "named.toml", "--out", "named"],
        p,
    ));
    let t = Table::read(&p.join("named/bounds.csv"));
    assert_eq!(t.header, ["t", "F_low", "F_up"]);
    for i in (0..1001).step_by(50) {
        let x = t.f(i, "t");
        let a = (-0.2f64).exp();
        let b = (0.2f64).exp();
        let expected = if x <= 2.0 / 3.0 {
            a * (4.0 / (9.0 * PI * PI) * (1.5 * PI * x).sin() + 2.0 * x / (3.0 * PI))
                - b * 2.0 * x / (3.0 * PI)
        } else {
            a * 4.0 / (9.0 * PI)
                + b * (4.0 / (9.0 * PI * PI) * (1.5 * PI * x).sin() - 4.0 / (9.0 * PI))
        };
        assert!((t.f(i, "F_low") - expected).abs() < 1e-5, "t = {x}");
    }

    // Tabulated kernel and envelope table.
    write_config(
        p,
        "tables.toml",
        "rho = 0.1\nn = 64\n[problem]\nkernel = { csv = \"k.csv\" }\ng_csv = \"g.csv\"\nenvelopes_csv = \"env.csv\"\n",
    );
    assert_ok(&heig(
        &[
            "solve",
            "--config",
            "tables.toml",
            "--sign",
            "plus",
            "--out",
            "tables",
        ],
        p,
    ));
    let j = json(&p.join("tables/pair_plus.json"));
    assert!((j["lambda"].as_f64().unwrap() - 1.802).abs() < 0.01, "{j}");

    // Radii beyond the envelope table are rejected.
    let out = heig(
        &[
            "bounds",
            "--config",
            "tables.toml",
            "--set",
            "rho=2.0",
            "--out",
            "x",
        ],
        p,
    );
    assert_eq!(code(&out), 2);
}
