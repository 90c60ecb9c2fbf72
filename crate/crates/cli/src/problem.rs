//! Turns a problem block of the config into a [`ProblemSpec`].

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use heig_core::bounds::{exp_integral_bounds, exp_ratio_envelopes, PairFn, TwoArgFn};
use heig_core::kernels::KernelRegistry;
use heig_core::{ExampleId, Functional, Kernel, ProblemSpec, SignChangingWeight};

use crate::config::{CustomProblem, EllKind, FunctionalConfig, KernelSource, ProblemConfig};
use crate::CliError;

pub struct Problem {
    pub spec: ProblemSpec,
    pub builtin: Option<ExampleId>,
    pub label: String,
    /// Radii covered by a tabulated envelope, if any.
    pub envelope_range: Option<(f64, f64)>,
}

impl Problem {
    /// Rejects radii outside the tabulated envelope range.
    pub fn check_rho(&self, rho: f64) -> Result<(), CliError> {
        match self.envelope_range {
            Some((lo, hi)) if rho < lo || rho > hi => Err(CliError::Config(format!(
                "rho = {rho} lies outside the envelope table range [{lo}, {hi}]"
            ))),
            _ => Ok(()),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn build(cfg: &ProblemConfig) -> Result<Problem, CliError> {
    match cfg {
        ProblemConfig::Builtin(name) => {
            let ex: ExampleId = name.parse().map_err(|e| cfg_err(format!("problem: {e}")))?;
            Ok(Problem {
                spec: ProblemSpec::example(ex),
                builtin: Some(ex),
                label: ex.as_str().to_string(),
                envelope_range: None,
            })
        }
        ProblemConfig::Custom(c) => custom(c),
    }
}

fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let file =
        File::open(path).map_err(|e| cfg_err(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| cfg_err(format!("{}: {e}", path.display())))?
        .clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| cfg_err(format!("{}: missing column `{n}`", path.display())))
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        for (col, &i) in cols.iter_mut().zip(&idx) {
            let v: f64 = rec.get(i).unwrap_or("").parse().map_err(|_| {
                cfg_err(format!(
                    "{}: bad number on data row {}",
                    path.display(),
                    line + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(cfg_err(format!(
                    "{}: non-finite value on data row {}",
                    path.display(),
                    line + 1
                )));
            }
            col.push(v);
        }
    }
    Ok(cols)
}

fn strictly_increasing(path: &Path, xs: &[f64]) -> Result<(), CliError> {
    if xs.len() < 2 || xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(cfg_err(format!(
            "{}: need at least two rows with strictly increasing abscissae",
            path.display()
        )));
    }
    Ok(())
}

/// Linear interpolation on sorted abscissae; `None` outside the range.
fn lerp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (x - x0) / (x1 - x0);
    Some(ys[k - 1] + w * (ys[k] - ys[k - 1]))
}

/// Sign changes of a sampled function, by linear interpolation.
pub fn detect_sign_changes(t: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&ti, &gi) in t.iter().zip(g) {
        if gi == 0.0 {
            continue;
        }
        if let Some((tp, gp)) = last {
            if gp * gi < 0.0 {
                out.push(tp + (ti - tp) * gp / (gp - gi));
            }
        }
        last = Some((ti, gi));
    }
    out.retain(|&p| p > 0.0 && p < 1.0);
    out
}

fn kernel(src: &KernelSource) -> Result<Kernel, CliError> {
    match src {
        KernelSource::Name(name) => {
            let reg = KernelRegistry::new();
            let key = match name.as_str() {
                "mixed" => "green_mixed",
                "dirichlet" => "green_dirichlet",
                other => other,
            };
            reg.get(key)
                .cloned()
                .ok_or_else(|| cfg_err(format!("unknown kernel `{name}`")))
        }
        KernelSource::Table {
            csv,
            kink_on_diagonal,
        } => {
            let file = File::open(csv)
                .map_err(|e| cfg_err(format!("cannot open {}: {e}", csv.display())))?;
            let name = csv
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("table")
                .to_string();
            let k = Kernel::from_csv(name, file, *kink_on_diagonal)
                .map_err(|e| cfg_err(format!("{}: {e}", csv.display())))?;
            for w in k.warnings() {
                log::warn!("kernel {}: {w}", csv.display());
            }
            Ok(k)
        }
    }
}

fn custom(c: &CustomProblem) -> Result<Problem, CliError> {
    let kernel = kernel(&c.kernel)?;

    let cols = read_columns(&c.g_csv, &["t", "g"])?;
    let (t, g) = (cols[0].clone(), cols[1].clone());
    strictly_increasing(&c.g_csv, &t)?;
    if t[0] > 0.0 || t[t.len() - 1] < 1.0 {
        return Err(cfg_err(format!(
            "{}: samples must cover [0, 1]",
            c.g_csv.display()
        )));
    }
    let change_points = c
        .change_points
        .clone()
        .unwrap_or_else(|| detect_sign_changes(&t, &g));
    let (ts, gs) = (t.clone(), g.clone());
    let weight = SignChangingWeight::new(
        Arc::new(move |x| lerp(&ts, &gs, x).unwrap_or(0.0)),
        change_points,
    )
    .map_err(|e| cfg_err(format!("g: {e}")))?;

    let ell: TwoArgFn = match c.ell {
        EllKind::ExpRatio => Arc::new(|u: f64, v: f64| u.exp() / v),
        EllKind::One => Arc::new(|_, _| 1.0),
    };
    let (ell_bounds, envelope_range): (PairFn, _) = match &c.envelopes_csv {
        Some(path) => {
            let cols = read_columns(path, &["rho", "ell_low", "ell_up"])?;
            strictly_increasing(path, &cols[0])?;
            if cols[1]
                .iter()
                .zip(&cols[2])
                .any(|(lo, up)| lo > up || *lo < 0.0)
            {
                return Err(cfg_err(format!(
                    "{}: need 0 <= ell_low <= ell_up on every row",
                    path.display()
                )));
            }
            let range = (cols[0][0], cols[0][cols[0].len() - 1]);
            let f: PairFn = Arc::new(move |rho| {
                (
                    lerp(&cols[0], &cols[1], rho).unwrap_or(f64::NAN),
                    lerp(&cols[0], &cols[2], rho).unwrap_or(f64::NAN),
                )
            });
            (f, Some(range))
        }
        None => match c.ell {
            EllKind::ExpRatio => (Arc::new(exp_ratio_envelopes) as PairFn, None),
            EllKind::One => (Arc::new(|_| (1.0, 1.0)) as PairFn, None),
        },
    };
    let (functional, h_bounds): (Functional, PairFn) = match &c.functional {
        FunctionalConfig::ExpIntegralDefault => {
            (Functional::ExpIntegral, Arc::new(exp_integral_bounds))
        }
        FunctionalConfig::Named(n) if n == "exp_integral" => {
            (Functional::ExpIntegral, Arc::new(exp_integral_bounds))
        }
        FunctionalConfig::Named(n) => return Err(cfg_err(format!("unknown functional `{n}`"))),
        FunctionalConfig::Constant { constant } => {
            if !(*constant > 0.0 && constant.is_finite()) {
                return Err(cfg_err("functional constant must be positive"));
            }
            let c = *constant;
            (Functional::Constant(c), Arc::new(move |_| (c, c)))
        }
    };
    let label = format!("custom({})", kernel.name());
    Ok(Problem {
        spec: ProblemSpec::separable(kernel, weight, ell, ell_bounds, functional, h_bounds),
        builtin: None,
        label,
        envelope_range,
    })
}
