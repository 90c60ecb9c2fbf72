//! Problem definitions and the integrated bound functions.
//!
//! For a radius `ρ`, pointwise envelopes `f_low(s) ≤ f(s,u,v) ≤ f_up(s)` over
//! `|u| ≤ ρ`, `H_low ≤ v ≤ H_up` are integrated against the kernel:
//!
//! ```text
//! F_low(t) = ∫₀¹ k(t,s) f_low(s) ds,    F_up(t) = ∫₀¹ k(t,s) f_up(s) ds.
//! ```
//!
//! When the nonlinearity factors as `g(s)·ℓ(u,v)` with `ℓ ≥ 0` and `g`
//! changing sign, the envelopes are built from `g = g₊ − g₋` and two scalars
//! `ℓ_low ≤ ℓ ≤ ℓ_up`:
//!
//! ```text
//! F_low = ℓ_low·K g₊ − ℓ_up·K g₋,    F_up = ℓ_up·K g₊ − ℓ_low·K g₋.
//! ```
//!
//! `K g₊` and `K g₋` do not depend on `ρ`; they are memoized per problem in a
//! cache shared by every clone of the [`ProblemSpec`]. The cache is behind a
//! mutex, so bound pairs may be evaluated from several threads at once.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{check_unit, Error, Result};
use crate::kernels::Kernel;
use crate::oracles::ExampleId;
use crate::quadrature::{kernel_apply_with_breaks, QuadratureConfig};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;
pub type TwoArgFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ThreeArgFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// `ρ ↦ (f_low, f_up)` for the general form.
pub type EnvelopeFnsProvider = Arc<dyn Fn(f64) -> (ScalarFn, ScalarFn) + Send + Sync>;
/// A functional evaluated from quadrature weights and nodal values.
pub type FunctionalFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Side of the `(u, v)` sample grid used to spot-check user envelopes.
pub const ENVELOPE_SAMPLES: usize = 21;

/// Default tabulation size for general-form envelopes.
pub const DEFAULT_GENERAL_GRID: usize = 2049;

/// A weight `g` together with the declared points where it changes sign.
#[derive(Clone)]
pub struct SignChangingWeight {
    g: ScalarFn,
    change_points: Vec<f64>,
}

impl fmt::Debug for SignChangingWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignChangingWeight")
            .field("change_points", &self.change_points)
            .finish_non_exhaustive()
    }
}

impl SignChangingWeight {
    pub fn new(g: ScalarFn, mut change_points: Vec<f64>) -> Result<Self> {
        for &p in &change_points {
            check_unit("change point", p)?;
        }
        change_points.sort_by(f64::total_cmp);
        change_points.dedup();
        Ok(SignChangingWeight { g, change_points })
    }

    /// `sin(3πt/2)`, nonnegative on `[0, 2/3]` and nonpositive on `[2/3, 1]`.
    pub fn sine_three_halves() -> Self {
        SignChangingWeight {
            g: Arc::new(|t| (1.5 * PI * t).sin()),
            change_points: vec![2.0 / 3.0],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.g)(t)
    }

    pub fn change_points(&self) -> &[f64] {
        &self.change_points
    }

    pub fn plus(&self, t: f64) -> f64 {
        self.eval(t).max(0.0)
    }

    pub fn minus(&self, t: f64) -> f64 {
        -self.eval(t).min(0.0)
    }
}

/// Splits `g` into its positive and negative parts, `g = g₊ − g₋`.
///
/// The change points are carried along only for use as quadrature
/// breakpoints; the split itself is pointwise.
pub fn sign_split(g: ScalarFn, change_points: &[f64]) -> Result<(ScalarFn, ScalarFn)> {
    let w = SignChangingWeight::new(g, change_points.to_vec())?;
    let w2 = w.clone();
    Ok((Arc::new(move |t| w.plus(t)), Arc::new(move |t| w2.minus(t))))
}

/// The built-in envelope for `ℓ(u, v) = e^u / v` with `v = ∫₀¹ e^u`:
/// `e^{-2ρ} ≤ ℓ ≤ e^{2ρ}` on the ball of radius `ρ`.
pub fn exp_ratio_envelopes(rho: f64) -> (f64, f64) {
    ((-2.0 * rho).exp(), (2.0 * rho).exp())
}

/// Bounds `e^{-ρ} ≤ ∫₀¹ e^u ≤ e^ρ` for `‖u‖∞ ≤ ρ`.
pub fn exp_integral_bounds(rho: f64) -> (f64, f64) {
    ((-rho).exp(), rho.exp())
}

/// The scalar functional `H[u]`, evaluated with the same quadrature rule as
/// the operator it feeds.
#[derive(Clone)]
pub enum Functional {
    /// `∫₀¹ e^{u(x)} dx`.
    ExpIntegral,
    /// Constant functional (for problems without a nonlocal term).
    Constant(f64),
    Custom(FunctionalFn),
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::ExpIntegral => f.write_str("ExpIntegral"),
            Functional::Constant(c) => write!(f, "Constant({c})"),
            Functional::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Functional {
    pub fn eval(&self, weights: &[f64], u: &[f64]) -> f64 {
        match self {
            Functional::ExpIntegral => weights.iter().zip(u).map(|(w, x)| w * x.exp()).sum(),
            Functional::Constant(c) => *c,
            Functional::Custom(h) => h(weights, u),
        }
    }

    /// `∂H/∂u_j`; exact for the built-ins, central differences otherwise.
    pub fn gradient(&self, weights: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Functional::ExpIntegral => weights.iter().zip(u).map(|(w, x)| w * x.exp()).collect(),
            Functional::Constant(_) => vec![0.0; u.len()],
            Functional::Custom(h) => {
                let mut work = u.to_vec();
                (0..u.len())
                    .map(|j| {
                        let step = 1e-6 * u[j].abs().max(1.0);
                        work[j] = u[j] + step;
                        let fp = h(weights, &work);
                        work[j] = u[j] - step;
                        let fm = h(weights, &work);
                        work[j] = u[j];
                        (fp - fm) / (2.0 * step)
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone)]
pub enum Nonlinearity {
    /// `f(t,u,v) = g(t)·ℓ(u,v)` with `ℓ ≥ 0`.
    Separable {
        weight: SignChangingWeight,
        ell: TwoArgFn,
        ell_bounds: PairFn,
    },
    /// Arbitrary `f(t,u,v)` with user-supplied envelope functions.
    General {
        f: ThreeArgFn,
        f_bounds: EnvelopeFnsProvider,
        breakpoints: Vec<f64>,
    },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Separable { weight, .. } => f
                .debug_struct("Separable")
                .field("weight", weight)
                .finish_non_exhaustive(),
            Nonlinearity::General { breakpoints, .. } => f
                .debug_struct("General")
                .field("breakpoints", breakpoints)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Default)]
struct SectionCache {
    map: Mutex<HashMap<(u64, u64), (f64, f64)>>,
}

/// Full definition of a problem `u = λ ∫ k(t,s) f(s, u(s), H[u]) ds`.
#[derive(Clone)]
pub struct ProblemSpec {
    kernel: Kernel,
    nonlinearity: Nonlinearity,
    functional: Functional,
    h_bounds: PairFn,
    sections: Arc<SectionCache>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kernel", &self.kernel)
            .field("nonlinearity", &self.nonlinearity)
            .field("functional", &self.functional)
            .finish_non_exhaustive()
    }
}

/// A sampled point where a user-supplied envelope is violated.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation {
    pub what: &'static str,
    pub at: Vec<f64>,
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

impl fmt::Display for EnvelopeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {:e} at {:?} lies outside [{:e}, {:e}]",
            self.what, self.value, self.at, self.low, self.high
        )
    }
}

impl ProblemSpec {
    pub fn separable(
        kernel: Kernel,
        weight: SignChangingWeight,
        ell: TwoArgFn,
        ell_bounds: PairFn,
        functional: Functional,
        h_bounds: PairFn,
    ) -> Self {
        ProblemSpec {
            kernel,
            nonlinearity: Nonlinearity::Separable {
                weight,
                ell,
                ell_bounds,
            },
            functional,
            h_bounds,
            sections: Arc::default(),
        }
    }

    pub fn general(
        kernel: Kernel,
        f: ThreeArgFn,
        f_bounds: EnvelopeFnsProvider,
        breakpoints: Vec<f64>,
        functional: Functional,
        h_bounds: PairFn,
    ) -> Result<Self> {
        for &p in &breakpoints {
            check_unit("breakpoint", p)?;
        }
        Ok(ProblemSpec {
            kernel,
            nonlinearity: Nonlinearity::General {
                f,
                f_bounds,
                breakpoints,
            },
            functional,
            h_bounds,
            sections: Arc::default(),
        })
    }

    /// One of the two built-in problems with `g = sin(3πt/2)`,
    /// `ℓ(u,v) = e^u / v` and `H[u] = ∫₀¹ e^u`.
    pub fn example(ex: ExampleId) -> Self {
        let kernel = match ex {
            ExampleId::Example1Mixed => Kernel::mixed(),
            ExampleId::Example2Dirichlet => Kernel::dirichlet(),
        };
        ProblemSpec::separable(
            kernel,
            SignChangingWeight::sine_three_halves(),
            Arc::new(|u: f64, v: f64| u.exp() / v),
            Arc::new(exp_ratio_envelopes),
            Functional::ExpIntegral,
            Arc::new(exp_integral_bounds),
        )
    }

    /// The same problem expressed through the general form, with envelopes
    /// `f_low = ℓ_low g₊ − ℓ_up g₋` and `f_up = ℓ_up g₊ − ℓ_low g₋`.
    pub fn to_general(&self) -> Result<Self> {
        match &self.nonlinearity {
            Nonlinearity::General { .. } => Ok(self.clone()),
            Nonlinearity::Separable {
                weight,
                ell,
                ell_bounds,
            } => {
                let (w, e) = (weight.clone(), ell.clone());
                let f: ThreeArgFn = Arc::new(move |t, u, v| w.eval(t) * e(u, v));
                let (w, eb) = (weight.clone(), ell_bounds.clone());
                let f_bounds: EnvelopeFnsProvider = Arc::new(move |rho| {
                    let (lo, hi) = eb(rho);
                    let (w1, w2) = (w.clone(), w.clone());
                    let low: ScalarFn = Arc::new(move |t| lo * w1.plus(t) - hi * w1.minus(t));
                    let up: ScalarFn = Arc::new(move |t| hi * w2.plus(t) - lo * w2.minus(t));
                    (low, up)
                });
                ProblemSpec::general(
                    self.kernel.clone(),
                    f,
                    f_bounds,
                    weight.change_points().to_vec(),
                    self.functional.clone(),
                    self.h_bounds.clone(),
                )
            }
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.nonlinearity, Nonlinearity::Separable { .. })
    }

    /// Interior points where the nonlinearity is allowed to be non-smooth in
    /// `t` (sign changes of `g`, or declared breakpoints).
    pub fn breakpoints(&self) -> &[f64] {
        match &self.nonlinearity {
            Nonlinearity::Separable { weight, .. } => weight.change_points(),
            Nonlinearity::General { breakpoints, .. } => breakpoints,
        }
    }

    pub fn h_bounds(&self, rho: f64) -> (f64, f64) {
        (self.h_bounds)(rho)
    }

    #[inline]
    pub fn eval_f(&self, t: f64, u: f64, v: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Separable { weight, ell, .. } => weight.eval(t) * ell(u, v),
            Nonlinearity::General { f, .. } => f(t, u, v),
        }
    }

    /// `(∂f/∂u, ∂f/∂v)` by central differences.
    pub fn eval_f_partials(&self, t: f64, u: f64, v: f64) -> (f64, f64) {
        let hu = 1e-6 * u.abs().max(1.0);
        let hv = 1e-6 * v.abs().max(1.0);
        let du = (self.eval_f(t, u + hu, v) - self.eval_f(t, u - hu, v)) / (2.0 * hu);
        let dv = (self.eval_f(t, u, v + hv) - self.eval_f(t, u, v - hv)) / (2.0 * hv);
        (du, dv)
    }

    /// Spot-checks the user envelopes on sample grids of the box
    /// `[-ρ, ρ] × [H_low, H_up]`; returns every violation found.
    pub fn validate_envelopes(&self, rho: f64) -> Vec<EnvelopeViolation> {
        let mut out = Vec::new();
        let (h_lo, h_hi) = self.h_bounds(rho);
        let m = ENVELOPE_SAMPLES - 1;
        let lin = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / m as f64;
        let slack = |x: f64| 1e-12 * x.abs().max(1.0);

        // H on constants and a few oscillating profiles of sup-norm ≤ ρ.
        let nodes: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let mut weights = vec![0.01; nodes.len()];
        weights[0] = 0.005;
        weights[100] = 0.005;
        let mut profiles: Vec<Vec<f64>> = (0..=m)
            .map(|i| vec![lin(-rho, rho, i); nodes.len()])
            .collect();
        for k in 1..=5 {
            profiles.push(
                nodes
                    .iter()
                    .map(|&x| rho * (2.0 * PI * k as f64 * x).sin())
                    .collect(),
            );
        }
        for (idx, u) in profiles.iter().enumerate() {
            let h = self.functional.eval(&weights, u);
            if !(h >= h_lo - slack(h_lo) && h <= h_hi + slack(h_hi)) {
                out.push(EnvelopeViolation {
                    what: "H[u]",
                    at: vec![idx as f64],
                    value: h,
                    low: h_lo,
                    high: h_hi,
                });
            }
        }

        match &self.nonlinearity {
            Nonlinearity::Separable {
                ell, ell_bounds, ..
            } => {
                let (lo, hi) = ell_bounds(rho);
                if !(0.0 <= lo && lo <= hi) {
                    out.push(EnvelopeViolation {
                        what: "ell envelope ordering",
                        at: vec![rho],
                        value: lo,
                        low: 0.0,
                        high: hi,
                    });
                }
                for i in 0..=m {
                    for j in 0..=m {
                        let (u, v) = (lin(-rho, rho, i), lin(h_lo, h_hi, j));
                        let val = ell(u, v);
                        if !(val >= lo - slack(lo) && val <= hi + slack(hi)) {
                            out.push(EnvelopeViolation {
                                what: "ell(u, v)",
                                at: vec![u, v],
                                value: val,
                                low: lo,
                                high: hi,
                            });
                        }
                    }
                }
            }
            Nonlinearity::General { f, f_bounds, .. } => {
                let (low, up) = f_bounds(rho);
                for a in 0..=m {
                    let t = lin(0.0, 1.0, a);
                    let (lo, hi) = (low(t), up(t));
                    for i in 0..=m {
                        for j in 0..=m {
                            let (u, v) = (lin(-rho, rho, i), lin(h_lo, h_hi, j));
                            let val = f(t, u, v);
                            if !(val >= lo - slack(lo) && val <= hi + slack(hi)) {
                                out.push(EnvelopeViolation {
                                    what: "f(t, u, v)",
                                    at: vec![t, u, v],
                                    value: val,
                                    low: lo,
                                    high: hi,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `(K g₊)(t)` and `(K g₋)(t)`, memoized.
    fn weight_sections(
        &self,
        weight: &SignChangingWeight,
        t: f64,
        cfg: &QuadratureConfig,
    ) -> Result<(f64, f64)> {
        let key = (t.to_bits(), cfg.abs_tol.to_bits());
        if let Some(v) = self
            .sections
            .map
            .lock()
            .expect("section cache poisoned")
            .get(&key)
        {
            return Ok(*v);
        }
        let breaks = weight.change_points();
        let plus = kernel_apply_with_breaks(&self.kernel, |s| weight.plus(s), t, breaks, cfg)?;
        let minus = kernel_apply_with_breaks(&self.kernel, |s| weight.minus(s), t, breaks, cfg)?;
        self.sections
            .map
            .lock()
            .expect("section cache poisoned")
            .insert(key, (plus, minus));
        Ok((plus, minus))
    }
}

/// Piecewise-linear function on sorted nodes.
#[derive(Debug, Clone)]
struct Tabulated {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let i = match self.nodes.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.values[i],
            Err(i) => i.clamp(1, n - 1),
        };
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let a = (x - x0) / (x1 - x0);
        (1.0 - a) * self.values[i - 1] + a * self.values[i]
    }
}

enum BoundSource {
    Separable {
        spec: ProblemSpec,
        weight: SignChangingWeight,
        ell_low: f64,
        ell_up: f64,
        cfg: QuadratureConfig,
    },
    General {
        kernel: Kernel,
        low: Tabulated,
        up: Tabulated,
        cfg: QuadratureConfig,
        cache: Mutex<HashMap<u64, (f64, f64)>>,
    },
    Functions {
        low: ScalarFn,
        up: ScalarFn,
    },
}

/// The two bound functions `F_low`, `F_up` for one radius, evaluable at any
/// `t ∈ [0,1]` (quadrature on demand, memoized).
pub struct BoundPair {
    rho: f64,
    source: BoundSource,
}

impl fmt::Debug for BoundPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            BoundSource::Separable { .. } => "separable",
            BoundSource::General { .. } => "general",
            BoundSource::Functions { .. } => "functions",
        };
        f.debug_struct("BoundPair")
            .field("rho", &self.rho)
            .field("kind", &kind)
            .finish()
    }
}

impl BoundPair {
    /// Wraps two explicit functions, e.g. closed forms.
    pub fn from_functions(rho: f64, low: ScalarFn, up: ScalarFn) -> Self {
        BoundPair {
            rho,
            source: BoundSource::Functions { low, up },
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `(ℓ_low, ℓ_up)` for separable problems.
    pub fn ell_envelopes(&self) -> Option<(f64, f64)> {
        match &self.source {
            BoundSource::Separable {
                ell_low, ell_up, ..
            } => Some((*ell_low, *ell_up)),
            _ => None,
        }
    }

    /// `(F_low(t), F_up(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        check_unit("t", t)?;
        match &self.source {
            BoundSource::Separable {
                spec,
                weight,
                ell_low,
                ell_up,
                cfg,
            } => {
                let (kp, km) = spec.weight_sections(weight, t, cfg)?;
                Ok((ell_low * kp - ell_up * km, ell_up * kp - ell_low * km))
            }
            BoundSource::General {
                kernel,
                low,
                up,
                cfg,
                cache,
            } => {
                if let Some(v) = cache
                    .lock()
                    .expect("bound cache poisoned")
                    .get(&t.to_bits())
                {
                    return Ok(*v);
                }
                let l = kernel_apply_with_breaks(kernel, |s| low.eval(s), t, &low.nodes, cfg)?;
                let u = kernel_apply_with_breaks(kernel, |s| up.eval(s), t, &up.nodes, cfg)?;
                cache
                    .lock()
                    .expect("bound cache poisoned")
                    .insert(t.to_bits(), (l, u));
                Ok((l, u))
            }
            BoundSource::Functions { low, up } => Ok((low(t), up(t))),
        }
    }

    pub fn f_low(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|p| p.0)
    }

    pub fn f_up(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|p| p.1)
    }
}

fn check_radius(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "rho must be positive and finite, got {rho}"
        )))
    }
}

pub fn build_bounds_separable(
    spec: &ProblemSpec,
    rho: f64,
    cfg: &QuadratureConfig,
) -> Result<BoundPair> {
    check_radius(rho)?;
    cfg.validate()?;
    let Nonlinearity::Separable {
        weight, ell_bounds, ..
    } = &spec.nonlinearity
    else {
        return Err(Error::Invalid(
            "build_bounds_separable needs a separable problem".into(),
        ));
    };
    let (ell_low, ell_up) = ell_bounds(rho);
    if !(0.0 <= ell_low && ell_low <= ell_up) {
        return Err(Error::Invalid(format!(
            "envelopes must satisfy 0 ≤ ell_low ≤ ell_up, got ({ell_low}, {ell_up}) at rho = {rho}"
        )));
    }
    Ok(BoundPair {
        rho,
        source: BoundSource::Separable {
            spec: spec.clone(),
            weight: weight.clone(),
            ell_low,
            ell_up,
            cfg: *cfg,
        },
    })
}

pub fn build_bounds_general(
    spec: &ProblemSpec,
    rho: f64,
    grid_n: usize,
    cfg: &QuadratureConfig,
) -> Result<BoundPair> {
    check_radius(rho)?;
    cfg.validate()?;
    if grid_n < 2 {
        return Err(Error::Invalid(
            "envelope grid needs at least two points".into(),
        ));
    }
    let Nonlinearity::General {
        f_bounds,
        breakpoints,
        ..
    } = &spec.nonlinearity
    else {
        return Err(Error::Invalid(
            "build_bounds_general needs a general-form problem".into(),
        ));
    };
    let mut nodes: Vec<f64> = (0..grid_n)
        .map(|i| i as f64 / (grid_n - 1) as f64)
        .collect();
    nodes.extend(breakpoints.iter().copied());
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let (low_fn, up_fn) = f_bounds(rho);
    let low = Tabulated {
        values: nodes.iter().map(|&t| low_fn(t)).collect(),
        nodes: nodes.clone(),
    };
    let up = Tabulated {
        values: nodes.iter().map(|&t| up_fn(t)).collect(),
        nodes,
    };
    if low.values.iter().chain(&up.values).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("envelope functions"));
    }
    Ok(BoundPair {
        rho,
        source: BoundSource::General {
            kernel: spec.kernel.clone(),
            low,
            up,
            cfg: *cfg,
            cache: Mutex::default(),
        },
    })
}

/// Dispatches on the problem form; general problems use
/// [`DEFAULT_GENERAL_GRID`].
pub fn build_bounds(spec: &ProblemSpec, rho: f64, cfg: &QuadratureConfig) -> Result<BoundPair> {
    if spec.is_separable() {
        build_bounds_separable(spec, rho, cfg)
    } else {
        build_bounds_general(spec, rho, DEFAULT_GENERAL_GRID, cfg)
    }
}
