//! Kernels `k(t,s)` on the unit square.
//!
//! Two Green's functions are built in: [`green_mixed`] for `u(0) = u'(1) = 0`
//! and [`green_dirichlet`] for `u(0) = u(1) = 0`. Both are continuous with a
//! derivative jump across the diagonal `s = t`, which is recorded in
//! [`Kernel::kink_on_diagonal`] so integrators can split panels there.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use crate::error::{check_unit, Error, Result};

pub type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Side length of the grid used to sample user kernels for negativity.
pub const NONNEGATIVITY_SAMPLES: usize = 101;

/// Green's function of `-u'' = h`, `u(0) = u'(1) = 0`: `min(t, s)`.
pub fn green_mixed(t: f64, s: f64) -> Result<f64> {
    check_unit("t", t)?;
    check_unit("s", s)?;
    Ok(mixed_raw(t, s))
}

/// Green's function of `-u'' = h`, `u(0) = u(1) = 0`.
pub fn green_dirichlet(t: f64, s: f64) -> Result<f64> {
    check_unit("t", t)?;
    check_unit("s", s)?;
    Ok(dirichlet_raw(t, s))
}

fn mixed_raw(t: f64, s: f64) -> f64 {
    if t <= s {
        t
    } else {
        s
    }
}

fn dirichlet_raw(t: f64, s: f64) -> f64 {
    if t <= s {
        t * (1.0 - s)
    } else {
        s * (1.0 - t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelWarning {
    /// The sampled grid found negative values; `k ≥ 0` is required for the
    /// bound functions to enclose the operator.
    Negative {
        t: f64,
        s: f64,
        value: f64,
        count: usize,
    },
}

impl fmt::Display for KernelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelWarning::Negative { t, s, value, count } => write!(
                f,
                "kernel is negative at {count} sampled points (e.g. k({t}, {s}) = {value:e})"
            ),
        }
    }
}

/// An evaluable kernel on `[0,1]²`. Immutable and cheap to clone.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    eval: Arc<KernelFn>,
    kink_on_diagonal: bool,
    piecewise_linear: bool,
    warnings: Vec<KernelWarning>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("kink_on_diagonal", &self.kink_on_diagonal)
            .field("warnings", &self.warnings)
            .finish()
    }
}

impl Kernel {
    /// Wraps a user function. Nonnegativity is sampled on a 101×101 grid and
    /// a warning is attached when it fails; continuity is trusted.
    pub fn new<F>(name: impl Into<String>, eval: F, kink_on_diagonal: bool) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let mut kernel = Kernel {
            name: name.into(),
            eval: Arc::new(eval),
            kink_on_diagonal,
            piecewise_linear: false,
            warnings: Vec::new(),
        };
        kernel.warnings = kernel.sample_nonnegativity();
        for w in &kernel.warnings {
            log::warn!("kernel `{}`: {w}", kernel.name);
        }
        kernel
    }

    pub fn mixed() -> Self {
        Kernel {
            name: "green_mixed".into(),
            eval: Arc::new(mixed_raw),
            kink_on_diagonal: true,
            piecewise_linear: true,
            warnings: Vec::new(),
        }
    }

    pub fn dirichlet() -> Self {
        Kernel {
            name: "green_dirichlet".into(),
            eval: Arc::new(dirichlet_raw),
            kink_on_diagonal: true,
            piecewise_linear: true,
            warnings: Vec::new(),
        }
    }

    /// Kernel backed by a rectangular `t,s,k` table with bilinear
    /// interpolation.
    pub fn from_table(name: impl Into<String>, table: KernelTable, kink_on_diagonal: bool) -> Self {
        Kernel::new(name, move |t, s| table.interpolate(t, s), kink_on_diagonal)
    }

    /// Reads a `t,s,k` CSV table (header required) and wraps it.
    pub fn from_csv<R: Read>(
        name: impl Into<String>,
        reader: R,
        kink_on_diagonal: bool,
    ) -> Result<Self> {
        Ok(Kernel::from_table(
            name,
            KernelTable::from_csv(reader)?,
            kink_on_diagonal,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kink_on_diagonal(&self) -> bool {
        self.kink_on_diagonal
    }

    /// True when `s ↦ k(t,s)` is affine on each side of `s = t`; the
    /// Nyström weights are then integrated exactly.
    pub fn is_piecewise_linear(&self) -> bool {
        self.piecewise_linear
    }

    pub fn warnings(&self) -> &[KernelWarning] {
        &self.warnings
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        check_unit("t", t)?;
        check_unit("s", s)?;
        Ok((self.eval)(t, s))
    }

    /// Evaluation without the domain check, for hot loops whose arguments
    /// are quadrature nodes already known to lie in `[0,1]`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64, s: f64) -> f64 {
        (self.eval)(t, s)
    }

    fn sample_nonnegativity(&self) -> Vec<KernelWarning> {
        let m = NONNEGATIVITY_SAMPLES - 1;
        let mut count = 0;
        let mut worst: Option<(f64, f64, f64)> = None;
        for i in 0..=m {
            let t = i as f64 / m as f64;
            for j in 0..=m {
                let s = j as f64 / m as f64;
                let v = (self.eval)(t, s);
                if v < 0.0 || v.is_nan() {
                    count += 1;
                    if worst.is_none_or(|(_, _, w)| v < w || v.is_nan()) {
                        worst = Some((t, s, v));
                    }
                }
            }
        }
        match worst {
            Some((t, s, value)) => vec![KernelWarning::Negative { t, s, value, count }],
            None => Vec::new(),
        }
    }
}

/// Named kernels, pre-populated with the two Green's functions.
#[derive(Debug, Clone)]
pub struct KernelRegistry {
    kernels: BTreeMap<String, Kernel>,
}

impl Default for KernelRegistry {
    fn default() -> Self {
        let mut kernels = BTreeMap::new();
        for k in [Kernel::mixed(), Kernel::dirichlet()] {
            kernels.insert(k.name().to_string(), k);
        }
        KernelRegistry { kernels }
    }
}

impl KernelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_kernel<F>(
        &mut self,
        name: &str,
        eval: F,
        kink_on_diagonal: bool,
    ) -> Result<Kernel>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if self.kernels.contains_key(name) {
            return Err(Error::DuplicateKernel(name.to_string()));
        }
        let kernel = Kernel::new(name, eval, kink_on_diagonal);
        self.kernels.insert(name.to_string(), kernel.clone());
        Ok(kernel)
    }

    pub fn get(&self, name: &str) -> Option<&Kernel> {
        self.kernels.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.kernels.keys().map(String::as_str)
    }
}

/// Kernel values on a rectangular tensor grid covering `[0,1]²`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    t: Vec<f64>,
    s: Vec<f64>,
    /// Row-major, `values[i * s.len() + j] = k(t[i], s[j])`.
    values: Vec<f64>,
}

impl KernelTable {
    pub fn new(t: Vec<f64>, s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        for (axis, pts) in [("t", &t), ("s", &s)] {
            if pts.len() < 2 {
                return Err(Error::Table(format!(
                    "axis {axis} needs at least two values"
                )));
            }
            if pts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Table(format!(
                    "axis {axis} is not strictly increasing"
                )));
            }
            if pts[0] != 0.0 || pts[pts.len() - 1] != 1.0 {
                return Err(Error::Table(format!(
                    "axis {axis} must start at 0 and end at 1"
                )));
            }
        }
        if values.len() != t.len() * s.len() {
            return Err(Error::Table("value count does not match the grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite kernel value".into()));
        }
        Ok(KernelTable { t, s, values })
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Table(format!("missing column `{name}`")))
        };
        let (ct, cs, ck) = (col("t")?, col("s")?, col("k")?);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |c: usize| -> Result<f64> {
                rec.get(c).unwrap_or("").parse::<f64>().map_err(|e| {
                    Error::Table(format!("line {:?}: {e}", rec.position().map(|p| p.line())))
                })
            };
            rows.push((parse(ct)?, parse(cs)?, parse(ck)?));
        }
        let mut ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut ss: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for axis in [&mut ts, &mut ss] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        if rows.len() != ts.len() * ss.len() {
            return Err(Error::Table(format!(
                "grid is not rectangular: {} rows for {}×{} distinct (t, s)",
                rows.len(),
                ts.len(),
                ss.len()
            )));
        }
        let mut values = vec![f64::NAN; ts.len() * ss.len()];
        for (t, s, k) in rows {
            let i = ts.binary_search_by(|x| x.total_cmp(&t)).unwrap();
            let j = ss.binary_search_by(|x| x.total_cmp(&s)).unwrap();
            let slot = &mut values[i * ss.len() + j];
            if !slot.is_nan() {
                return Err(Error::Table(format!(
                    "duplicate entry for (t, s) = ({t}, {s})"
                )));
            }
            *slot = k;
        }
        KernelTable::new(ts, ss, values)
    }

    pub fn interpolate(&self, t: f64, s: f64) -> f64 {
        let (i, a) = locate(&self.t, t);
        let (j, b) = locate(&self.s, s);
        let ns = self.s.len();
        let v = |i: usize, j: usize| self.values[i * ns + j];
        (1.0 - a) * ((1.0 - b) * v(i, j) + b * v(i, j + 1))
            + a * ((1.0 - b) * v(i + 1, j) + b * v(i + 1, j + 1))
    }
}

/// Cell index and local coordinate of `x` on a sorted axis, clamped to the
/// end cells.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let i = match axis.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => i.min(last),
        Err(i) => i.saturating_sub(1).min(last),
    };
    let a = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, a)
}
