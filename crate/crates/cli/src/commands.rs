use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use heig_core::bounds::build_bounds;
use heig_core::conditions::{check_conditions_with, interval_threshold_scan, ScanSettings};
use heig_core::eigensolver::{solve_pair, sweep_rho, verify_pair, SweepOptions, CONTAINMENT_SLACK};
use heig_core::oracles::{oracle_f_low, oracle_f_up};
use heig_core::{
    ConditionReport, DiscreteOperator, Error, QuadratureConfig, Sign, SolveOptions, Which,
};

use crate::config::RunConfig;
use crate::problem::Problem;
use crate::svg::{Band, Plot, Series};
use crate::CliError;

pub const BOUNDS_POINTS: usize = 1001;

/// 17 significant digits: enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    problem: &'a Problem,
    out: PathBuf,
}

impl Ctx<'_> {
    fn quad(&self) -> QuadratureConfig {
        QuadratureConfig::with_abs_tol(self.cfg.quad_abs_tol)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn report(&self, rho: f64) -> heig_core::Result<ConditionReport> {
        let b = build_bounds(&self.problem.spec, rho, &self.quad())?;
        check_conditions_with(&b, (0.0, 1.0), &ScanSettings::default())
    }
}

fn context<'a>(cfg: &'a RunConfig, problem: &'a Problem, out: Option<&Path>) -> Result<Ctx<'a>> {
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.outputs.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(Ctx { cfg, problem, out })
}

pub fn bounds(cfg: &RunConfig, problem: &Problem, out: Option<&Path>) -> Result<()> {
    let rho = cfg.single_rho()?;
    problem.check_rho(rho)?;
    let ctx = context(cfg, problem, out)?;
    let b = build_bounds(&problem.spec, rho, &ctx.quad())?;
    let ts: Vec<f64> = (0..BOUNDS_POINTS)
        .map(|i| i as f64 / (BOUNDS_POINTS - 1) as f64)
        .collect();
    let values: Vec<(f64, f64)> = ts
        .par_iter()
        .map(|&t| b.eval(t))
        .collect::<heig_core::Result<_>>()?;

    let mut header = vec!["t", "F_low", "F_up"];
    if problem.builtin.is_some() {
        header.extend(["oracle_F_low", "oracle_F_up"]);
    }
    let mut rows = Vec::with_capacity(ts.len());
    let mut worst = 0.0f64;
    for (&t, &(lo, up)) in ts.iter().zip(&values) {
        let mut row = vec![num(t), num(lo), num(up)];
        if let Some(ex) = problem.builtin {
            let (olo, oup) = (oracle_f_low(ex, rho, t)?, oracle_f_up(ex, rho, t)?);
            worst = worst.max((lo - olo).abs()).max((up - oup).abs());
            row.extend([num(olo), num(oup)]);
        }
        rows.push(row);
    }
    let path = ctx.write_csv("bounds.csv", &header, &rows)?;

    let report = check_conditions_with(&b, (0.0, 1.0), &ScanSettings::default())?;
    println!("{}: rho = {rho}", problem.label);
    println!(
        "  max F_low = {:.10e} at t = {:.10}, min F_up = {:.10e} at t = {:.10}",
        report.f_low_max, report.t_low_max, report.f_up_min, report.t_up_min
    );
    println!(
        "  a(rho) = {}",
        report
            .a_rho
            .map_or("undefined".to_string(), |a| format!("{a:.10e}"))
    );
    if problem.builtin.is_some() {
        println!("  max |numeric - closed form| = {worst:.3e}");
    }
    println!("  wrote {}", path.display());

    if cfg.emit_svg {
        let plot = Plot {
            title: &format!("Bound functions, rho = {rho}"),
            x_label: "t",
            y_label: "F",
            series: vec![
                Series {
                    name: "F_low",
                    color: "#1f77b4",
                    points: ts.iter().zip(&values).map(|(&t, v)| (t, v.0)).collect(),
                    dashed: false,
                },
                Series {
                    name: "F_up",
                    color: "#d62728",
                    points: ts.iter().zip(&values).map(|(&t, v)| (t, v.1)).collect(),
                    dashed: false,
                },
            ],
            bands: Vec::new(),
        };
        ctx.write_text("bounds.svg", &plot.render())?;
    }
    Ok(())
}

pub fn scan(cfg: &RunConfig, problem: &Problem, out: Option<&Path>) -> Result<()> {
    let rhos = cfg.grid()?;
    for &r in &rhos {
        problem.check_rho(r)?;
    }
    let ctx = context(cfg, problem, out)?;
    let reports: Vec<ConditionReport> = rhos
        .par_iter()
        .map(|&rho| ctx.report(rho))
        .collect::<heig_core::Result<_>>()?;

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                num(r.rho),
                num(r.f_low_max),
                num(r.t_low_max),
                r.holds_5b.to_string(),
                r.holds_5a.to_string(),
                opt(r.a_rho),
            ]
        })
        .collect();
    let path = ctx.write_csv(
        "scan.csv",
        &["rho", "F_low_max", "t_rho", "holds_5b", "holds_5a", "a_rho"],
        &rows,
    )?;
    println!(
        "{}: scanned {} radii, wrote {}",
        problem.label,
        reports.len(),
        path.display()
    );

    // Refine every flip of either indicator between neighbouring grid points.
    let settings = ScanSettings::default();
    let mut thresholds = Vec::new();
    for w in reports.windows(2) {
        for which in [Which::LowerPositive, Which::UpperNegative] {
            if w[0].holds(which) == w[1].holds(which) {
                continue;
            }
            let star = interval_threshold_scan(
                &problem.spec,
                w[0].rho,
                w[1].rho,
                which,
                (0.0, 1.0),
                &ctx.quad(),
                &settings,
            )?;
            if let Some(star) = star {
                let direction = if w[0].holds(which) {
                    "holds_to_fails"
                } else {
                    "fails_to_holds"
                };
                println!("  threshold {which}: rho* = {star:.9} ({direction})");
                thresholds.push(vec![
                    which.label().to_string(),
                    num(w[0].rho),
                    num(w[1].rho),
                    num(star),
                    direction.to_string(),
                ]);
            }
        }
    }
    for which in [Which::LowerPositive, Which::UpperNegative] {
        let flips = reports
            .windows(2)
            .filter(|w| w[0].holds(which) != w[1].holds(which))
            .count();
        if flips > 1 {
            log::warn!(
                "{which} flips {flips} times on the scan grid; each flip is refined separately"
            );
        }
    }
    ctx.write_csv(
        "thresholds.csv",
        &[
            "condition",
            "rho_left",
            "rho_right",
            "rho_star",
            "direction",
        ],
        &thresholds,
    )?;

    if cfg.emit_svg {
        let plot = Plot {
            title: "Maximum of F_low over t",
            x_label: "rho",
            y_label: "F_low(t_rho)",
            series: vec![Series {
                name: "F_low max",
                color: "#1f77b4",
                points: reports.iter().map(|r| (r.rho, r.f_low_max)).collect(),
                dashed: false,
            }],
            bands: Vec::new(),
        };
        ctx.write_text("scan.svg", &plot.render())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PairSummary<'a> {
    problem: &'a str,
    sign: &'a str,
    rho: f64,
    n: usize,
    lambda: f64,
    residual: f64,
    norm_defect: f64,
    iterations: usize,
    method: &'a str,
    peak_t: f64,
    a_rho: Option<f64>,
    /// `|λ| ≤ a(ρ)`; false when `a(ρ)` is undefined.
    contained: bool,
    residual_refined: f64,
    norm_defect_refined: f64,
    verified: bool,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    problem: &'a str,
    sign: &'a str,
    rho: f64,
    n: usize,
    reason: &'a str,
    lambda: f64,
    residual: f64,
    norm_defect: f64,
    iterations: usize,
    t: &'a [f64],
    u: &'a [f64],
}

pub fn solve(cfg: &RunConfig, problem: &Problem, signs: &[Sign], out: Option<&Path>) -> Result<()> {
    let rho = cfg.single_rho()?;
    problem.check_rho(rho)?;
    let ctx = context(cfg, problem, out)?;
    let report = ctx.report(rho)?;
    if !report.any_holds() {
        log::warn!("neither sign condition holds at rho = {rho}; the solve is attempted anyway");
    }
    let op = DiscreteOperator::new(&problem.spec, cfg.n)?;
    let opts = SolveOptions::with_tol(cfg.solve_tol);
    for &sign in signs {
        let pair = match solve_pair(&op, rho, sign, None, &opts) {
            Ok(p) => p,
            Err(Error::NoConvergence(d)) => {
                let name = format!("diagnostics_{}.json", sign.label());
                let diag = Diagnostics {
                    problem: &problem.label,
                    sign: sign.label(),
                    rho,
                    n: cfg.n,
                    reason: &d.reason,
                    lambda: d.lambda,
                    residual: d.residual,
                    norm_defect: d.norm_defect,
                    iterations: d.iterations,
                    t: op.nodes(),
                    u: &d.u,
                };
                let path = ctx.write_text(&name, &serde_json::to_string_pretty(&diag)?)?;
                return Err(CliError::NonConvergence {
                    reason: d.to_string(),
                    diagnostics: path,
                }
                .into());
            }
            Err(e) => return Err(e.into()),
        };
        let v = verify_pair(&pair, &op, &report, sign, cfg.solve_tol)?;
        let contained = v
            .containment_margin
            .is_some_and(|m| m >= -CONTAINMENT_SLACK);
        let rows: Vec<Vec<String>> = pair
            .nodes
            .iter()
            .zip(&pair.u)
            .map(|(t, u)| vec![num(*t), num(*u)])
            .collect();
        ctx.write_csv(&format!("pair_{}.csv", sign.label()), &["t", "u"], &rows)?;
        let summary = PairSummary {
            problem: &problem.label,
            sign: sign.label(),
            rho,
            n: cfg.n,
            lambda: pair.lambda,
            residual: pair.residual,
            norm_defect: pair.norm_defect,
            iterations: pair.iterations,
            method: pair.method.label(),
            peak_t: pair.peak_t,
            a_rho: report.a_rho,
            contained,
            residual_refined: v.residual_refined,
            norm_defect_refined: v.norm_defect_refined,
            verified: v.passed,
        };
        ctx.write_text(
            &format!("pair_{}.json", sign.label()),
            &(serde_json::to_string_pretty(&summary)? + "\n"),
        )?;
        println!(
            "{} rho = {rho} {}: lambda = {:.12e}, residual = {:.2e}, norm defect = {:.2e}, a(rho) = {}, contained = {contained}",
            problem.label,
            sign.label(),
            pair.lambda,
            pair.residual,
            pair.norm_defect,
            report.a_rho.map_or("undefined".to_string(), |a| format!("{a:.6e}")),
        );
        if !v.passed {
            log::warn!("verification at {} nodes did not pass: {v:?}", v.refined_n);
        }
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, problem: &Problem, out: Option<&Path>) -> Result<()> {
    let rhos = cfg.grid()?;
    for &r in &rhos {
        problem.check_rho(r)?;
    }
    let ctx = context(cfg, problem, out)?;
    let opts = SweepOptions {
        solve_pairs: true,
        continuation: cfg.continuation,
        solve: SolveOptions::with_tol(cfg.solve_tol),
        quadrature: ctx.quad(),
        scan: ScanSettings::default(),
    };
    let result = sweep_rho(&problem.spec, &rhos, cfg.n, &opts)?;
    let header = [
        "rho",
        "a_rho",
        "lambda_plus",
        "lambda_minus",
        "residual_plus",
        "residual_minus",
        "norm_defect_plus",
        "norm_defect_minus",
        "contained_plus",
        "contained_minus",
        "errors",
    ];
    let mut rows = Vec::with_capacity(result.rows.len());
    let mut solved = 0;
    for row in &result.rows {
        let a = row.a_rho();
        let contained = |s: Sign| {
            row.pair(s)
                .map(|p| {
                    a.is_some_and(|a| p.lambda.abs() <= a + CONTAINMENT_SLACK)
                        .to_string()
                })
                .unwrap_or_default()
        };
        if row.plus.is_some() || row.minus.is_some() {
            solved += 1;
        }
        for e in &row.errors {
            log::warn!("rho = {}: {e}", row.rho);
        }
        rows.push(vec![
            num(row.rho),
            opt(a),
            opt(row.plus.as_ref().map(|p| p.lambda)),
            opt(row.minus.as_ref().map(|p| p.lambda)),
            opt(row.plus.as_ref().map(|p| p.residual)),
            opt(row.minus.as_ref().map(|p| p.residual)),
            opt(row.plus.as_ref().map(|p| p.norm_defect)),
            opt(row.minus.as_ref().map(|p| p.norm_defect)),
            contained(Sign::Plus),
            contained(Sign::Minus),
            row.errors.join("; "),
        ]);
    }
    let path = ctx.write_csv("sweep.csv", &header, &rows)?;
    println!(
        "{}: {} radii, {solved} with at least one eigenpair, wrote {}",
        problem.label,
        result.rows.len(),
        path.display()
    );

    if cfg.emit_svg {
        let band: Vec<(f64, f64, f64)> = result
            .rows
            .iter()
            .filter_map(|r| r.a_rho().map(|a| (r.rho, -a, a)))
            .collect();
        let curve = |s: Sign| -> Vec<(f64, f64)> {
            result
                .rows
                .iter()
                .map(|r| (r.rho, r.pair(s).map_or(f64::NAN, |p| p.lambda)))
                .collect()
        };
        let plot = Plot {
            title: "Eigenvalue localization",
            x_label: "rho",
            y_label: "lambda",
            series: vec![
                Series {
                    name: "lambda+",
                    color: "#d62728",
                    points: curve(Sign::Plus),
                    dashed: false,
                },
                Series {
                    name: "lambda-",
                    color: "#2ca02c",
                    points: curve(Sign::Minus),
                    dashed: false,
                },
            ],
            bands: vec![Band {
                name: "[-a, a]",
                color: "#1f77b4",
                points: band,
            }],
        };
        ctx.write_text("region.svg", &plot.render())?;
    }
    if !result.rows.is_empty() && solved == 0 {
        return Err(CliError::NonConvergence {
            reason: "no sweep row produced an eigenpair".into(),
            diagnostics: path,
        }
        .into());
    }
    Ok(())
}
