//! Run configuration: a TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub rho: Option<f64>,
    pub rho_grid: Option<RhoGrid>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_quad_tol")]
    pub quad_abs_tol: f64,
    #[serde(default = "default_solve_tol")]
    pub solve_tol: f64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default = "yes")]
    pub emit_svg: bool,
    /// Warm-start sweep rows from the previous radius.
    #[serde(default = "yes")]
    pub continuation: bool,
}

fn default_n() -> usize {
    256
}
fn default_quad_tol() -> f64 {
    1e-10
}
fn default_solve_tol() -> f64 {
    1e-9
}
fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProblemConfig {
    Builtin(String),
    Custom(CustomProblem),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub kernel: KernelSource,
    /// CSV with columns `t,g`, linearly interpolated.
    pub g_csv: PathBuf,
    /// Sign changes of `g`; detected from the samples when absent.
    pub change_points: Option<Vec<f64>>,
    #[serde(default)]
    pub ell: EllKind,
    /// CSV with columns `rho,ell_low,ell_up`.
    pub envelopes_csv: Option<PathBuf>,
    #[serde(default)]
    pub functional: FunctionalConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KernelSource {
    Name(String),
    Table {
        csv: PathBuf,
        #[serde(default = "yes")]
        kink_on_diagonal: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EllKind {
    /// `ℓ(u,v) = e^u / v`.
    #[default]
    ExpRatio,
    /// `ℓ ≡ 1`.
    One,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(untagged)]
pub enum FunctionalConfig {
    #[default]
    #[serde(skip)]
    ExpIntegralDefault,
    Named(String),
    Constant {
        constant: f64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RhoGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl RhoGrid {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.lo],
            c => (0..c)
                .map(|i| {
                    if i == c - 1 {
                        self.hi
                    } else {
                        self.lo + (self.hi - self.lo) * i as f64 / (c - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses an override value as TOML, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{spec}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override `{key}`: `{part}` is not a table")))?;
    }
    let leaf = path[path.len() - 1].to_string();
    if raw.trim().is_empty() {
        cur.remove(&leaf);
    } else {
        cur.insert(leaf, override_value(raw.trim()));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, overrides, base)
    }

    /// Parses config text. Relative paths inside a custom problem are taken
    /// relative to `base`.
    pub fn parse(text: &str, overrides: &[String], base: &Path) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| config_err(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| config_err(format!("{e}")))?;
        if let ProblemConfig::Custom(c) = &mut cfg.problem {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut c.g_csv);
            if let Some(p) = &mut c.envelopes_csv {
                fix(p);
            }
            if let KernelSource::Table { csv, .. } = &mut c.kernel {
                fix(csv);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n < heig_core::eigensolver::MIN_NODES {
            return Err(config_err(format!("n must be at least 8, got {}", self.n)));
        }
        for (name, v) in [
            ("quad_abs_tol", self.quad_abs_tol),
            ("solve_tol", self.solve_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(r) = self.rho {
            if !(r > 0.0 && r.is_finite()) {
                return Err(config_err(format!("rho must be positive, got {r}")));
            }
        }
        if let Some(g) = self.rho_grid {
            if !(g.lo > 0.0 && g.lo.is_finite() && g.hi.is_finite()) {
                return Err(config_err("rho_grid.lo must be positive"));
            }
            if g.count > 1 && g.hi <= g.lo {
                return Err(config_err("rho_grid.hi must exceed rho_grid.lo"));
            }
        }
        Ok(())
    }

    /// The single radius a command needs.
    pub fn single_rho(&self) -> Result<f64, CliError> {
        match (self.rho, &self.rho_grid) {
            (Some(r), None) => Ok(r),
            (Some(_), Some(_)) => Err(config_err("give either rho or rho_grid, not both")),
            (None, _) => Err(config_err("this command needs `rho`")),
        }
    }

    /// The radius grid a command needs.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match (self.rho, &self.rho_grid) {
            (None, Some(g)) => Ok(g.values()),
            (Some(_), Some(_)) => Err(config_err("give either rho or rho_grid, not both")),
            (_, None) => Err(config_err("this command needs `rho_grid`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, o: &[&str]) -> Result<RunConfig, CliError> {
        let o: Vec<String> = o.iter().map(|s| s.to_string()).collect();
        RunConfig::parse(text, &o, Path::new("/base"))
    }

    #[test]
    fn defaults() {
        let c = parse("problem = \"example1_mixed\"\nrho = 0.1\n", &[]).unwrap();
        assert_eq!(c.n, 256);
        assert_eq!(c.quad_abs_tol, 1e-10);
        assert_eq!(c.solve_tol, 1e-9);
        assert!(c.emit_svg && c.continuation);
        assert_eq!(c.single_rho().unwrap(), 0.1);
        assert!(c.grid().is_err());
    }

    #[test]
    fn overrides() {
        let c = parse(
            "problem = \"example1_mixed\"\nrho = 0.1\n",
            &[
                "rho=0.2",
                "n = 64",
                "rho_grid.lo=0.01",
                "rho_grid.hi=0.1",
                "rho_grid.count=4",
            ],
        )
        .unwrap();
        assert_eq!(c.rho, Some(0.2));
        assert_eq!(c.n, 64);
        assert_eq!(c.rho_grid.unwrap().count, 4);
        assert!(c.single_rho().is_err());
        let c = parse("problem = \"example1_mixed\"\nrho = 0.1\n", &["rho="]).unwrap();
        assert_eq!(c.rho, None);
        assert!(parse("problem = \"x\"", &["novalue"]).is_err());
        assert!(parse("problem = \"x\"\nrho = 1\n", &["rho.x=1"]).is_err());
    }

    #[test]
    fn grid_values() {
        let g = RhoGrid {
            lo: 0.1,
            hi: 0.5,
            count: 5,
        };
        assert_eq!(g.values().len(), 5);
        assert_eq!(g.values()[4], 0.5);
        assert_eq!(RhoGrid { count: 1, ..g }.values(), vec![0.1]);
        assert!(RhoGrid { count: 0, ..g }.values().is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse("problem = \"example1_mixed\"\nrho = -1\n", &[]).is_err());
        assert!(parse("problem = \"example1_mixed\"\nn = 4\n", &[]).is_err());
        assert!(parse("problem = \"example1_mixed\"\nsolve_tol = 0\n", &[]).is_err());
        assert!(parse("problem = \"example1_mixed\"\nunknown = 1\n", &[]).is_err());
    }

    #[test]
    fn custom_paths_are_rebased() {
        let c = parse(
            "rho = 0.1\n[problem]\nkernel = { csv = \"k.csv\" }\ng_csv = \"g.csv\"\nell = \"one\"\nfunctional = { constant = 2.0 }\n",
            &[],
        )
        .unwrap();
        let ProblemConfig::Custom(p) = c.problem else {
            panic!("expected custom problem")
        };
        assert_eq!(p.g_csv, Path::new("/base/g.csv"));
        assert_eq!(p.ell, EllKind::One);
        assert!(matches!(
            p.kernel,
            KernelSource::Table {
                kink_on_diagonal: true,
                ..
            }
        ));
        assert!(matches!(p.functional, FunctionalConfig::Constant { constant } if constant == 2.0));
    }
}
