//! Nyström discretization of `Tu(t) = ∫₀¹ k(t,s) f(s, u(s), H[u]) ds` and
//! eigenpairs `u = λ T u` on the sphere `‖u‖∞ = ρ`.
//!
//! # Discretization
//!
//! `[0,1]` is cut at the problem breakpoints (sign changes of `g`) and each
//! piece is covered by Gauss–Legendre panels of at most
//! [`MAX_PANEL_NODES`] nodes. Row `i` of the operator integrates
//! `k(t_i, ·)` against the panel-wise polynomial interpolant of `f`: on the
//! panel that contains `t_i` the rule is split at `s = t_i` (product
//! integration), elsewhere it is the plain Gauss rule `w_j k(t_i, s_j)`.
//! For the built-in kernels, which are affine in `s` on either side of the
//! diagonal, the split integrals are exact, so the scheme converges at the
//! rate of polynomial interpolation of `f`.
//!
//! The same formula evaluated at arbitrary `t` is the Nyström interpolant.
//! Norms of eigenfunctions are sup-norms of that interpolant, not maxima
//! over the nodes, so the constraint `‖u‖∞ = ρ` carries no node-sampling
//! error. `H[u]` is evaluated with the Gauss weights of the same grid.
//!
//! # Solver
//!
//! Stage 1 is the damped projective iteration
//! `u ← (1−θ) u + θ·sign·ρ·Tu/‖Tu‖∞` with `λ = sign·ρ/‖Tu‖∞`. If it stalls,
//! stage 2 runs a damped Newton method on `{u − λTu = 0, |u(t*)| = ρ}`,
//! where `t*` is the current location of the sup-norm (re-selected after
//! every step).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bounds::{build_bounds, ProblemSpec};
use crate::conditions::{check_conditions_with, ConditionReport, ScanSettings};
use crate::error::{check_unit, Error, NoConvergence, Result};
use crate::optimize::golden_section_max;
use crate::quadrature::{gauss_legendre, QuadratureConfig};

/// Upper bound on Gauss nodes per panel.
pub const MAX_PANEL_NODES: usize = 16;

/// Smallest admissible number of nodes.
pub const MIN_NODES: usize = 8;

const PEAK_T_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    start: usize,
    len: usize,
    /// Barycentric weights of the panel nodes.
    bary: Vec<f64>,
}

/// The discretized operator. Immutable once built; share it freely across
/// threads.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    spec: ProblemSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kernel_matrix: DMatrix<f64>,
    operator_matrix: DMatrix<f64>,
    panels: Vec<Panel>,
}

/// Location and value of the sup-norm of a Nyström interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t: f64,
    /// Signed value at `t`.
    pub value: f64,
    /// Index of the node nearest to `t`.
    pub node: usize,
}

impl Peak {
    pub fn abs(&self) -> f64 {
        self.value.abs()
    }
}

fn panel_layout(n: usize, breakpoints: &[f64]) -> Result<Vec<(f64, f64, usize)>> {
    let mut cuts = vec![0.0];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > 0.0 && p < 1.0));
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let segments: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let total = n.div_ceil(MAX_PANEL_NODES).max(segments.len());
    if total > n {
        return Err(Error::Invalid(format!(
            "{n} nodes cannot cover {} breakpoint-delimited segments",
            segments.len()
        )));
    }

    // Panels per segment: at least one each, the rest by largest remainder.
    let mut counts = vec![1usize; segments.len()];
    let spare = total - segments.len();
    let shares: Vec<f64> = segments
        .iter()
        .map(|(a, b)| (b - a) * total as f64)
        .collect();
    for _ in 0..spare {
        let k = (0..segments.len())
            .max_by(|&x, &y| {
                (shares[x] - counts[x] as f64)
                    .total_cmp(&(shares[y] - counts[y] as f64))
                    .then(y.cmp(&x))
            })
            .expect("at least one segment");
        counts[k] += 1;
    }

    let mut edges = Vec::with_capacity(total);
    for ((a, b), &c) in segments.iter().zip(&counts) {
        for k in 0..c {
            let lo = a + (b - a) * k as f64 / c as f64;
            let hi = if k + 1 == c {
                *b
            } else {
                a + (b - a) * (k + 1) as f64 / c as f64
            };
            edges.push((lo, hi));
        }
    }
    let base = n / total;
    let extra = n % total;
    Ok(edges
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| (a, b, base + usize::from(k < extra)))
        .collect())
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let prod: f64 = (0..x.len())
                .filter(|&k| k != j)
                .map(|k| x[j] - x[k])
                .product();
            1.0 / prod
        })
        .collect()
}

/// Lagrange basis values at `s` for nodes `x`, written into `out`.
fn lagrange_basis(x: &[f64], bary: &[f64], s: f64, out: &mut [f64]) {
    if let Some(j) = x.iter().position(|&xj| xj == s) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[j] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for j in 0..x.len() {
        let v = bary[j] / (s - x[j]);
        out[j] = v;
        denom += v;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

impl DiscreteOperator {
    pub fn new(spec: &ProblemSpec, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Invalid(format!(
                "need at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let layout = panel_layout(n, spec.breakpoints())?;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut panels = Vec::with_capacity(layout.len());
        for (a, b, m) in layout {
            let (x, w) = gauss_legendre(m);
            let start = nodes.len();
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let local: Vec<f64> = x.iter().map(|xi| mid + half * xi).collect();
            nodes.extend_from_slice(&local);
            weights.extend(w.iter().map(|wi| half * wi));
            panels.push(Panel {
                a,
                b,
                start,
                len: m,
                bary: barycentric_weights(&local),
            });
        }
        let kernel = spec.kernel();
        let kernel_matrix =
            DMatrix::from_fn(n, n, |i, j| kernel.eval_unchecked(nodes[i], nodes[j]));
        let mut op = DiscreteOperator {
            spec: spec.clone(),
            nodes,
            weights,
            kernel_matrix,
            operator_matrix: DMatrix::zeros(0, 0),
            panels,
        };
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| op.weights_at_unchecked(op.nodes[i]))
            .collect();
        op.operator_matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Gauss weights of the grid; they integrate constants exactly.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `k(t_i, s_j)` on the node grid.
    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.kernel_matrix
    }

    /// Effective row weights: `(Tu)_i = Σ_j W_ij f_j`.
    pub fn operator_matrix(&self) -> &DMatrix<f64> {
        &self.operator_matrix
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// Weights `W_j(t)` with `(T u)(t) = Σ_j W_j(t) f_j`.
    pub fn weights_at(&self, t: f64) -> Result<Vec<f64>> {
        check_unit("t", t)?;
        Ok(self.weights_at_unchecked(t))
    }

    fn weights_at_unchecked(&self, t: f64) -> Vec<f64> {
        let kernel = self.spec.kernel();
        let mut row: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * kernel.eval_unchecked(t, s))
            .collect();
        if !kernel.kink_on_diagonal() {
            return row;
        }
        let Some(panel) = self.panels.iter().find(|p| p.a < t && t < p.b) else {
            return row;
        };
        let x = &self.nodes[panel.start..panel.start + panel.len];
        let order = if kernel.is_piecewise_linear() {
            panel.len + 2
        } else {
            2 * panel.len + 8
        };
        let (gx, gw) = gauss_legendre(order);
        let mut basis = vec![0.0; panel.len];
        let slot = &mut row[panel.start..panel.start + panel.len];
        slot.iter_mut().for_each(|v| *v = 0.0);
        for (lo, hi) in [(panel.a, t), (t, panel.b)] {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (xq, wq) in gx.iter().zip(&gw) {
                let s = mid + half * xq;
                let kw = half * wq * kernel.eval_unchecked(t, s);
                lagrange_basis(x, &panel.bary, s, &mut basis);
                for (acc, l) in slot.iter_mut().zip(&basis) {
                    *acc += kw * l;
                }
            }
        }
        row
    }

    /// `H[u]` with the grid's quadrature weights.
    pub fn functional(&self, u: &[f64]) -> f64 {
        self.spec.functional().eval(&self.weights, u)
    }

    /// Nodal values `f(s_j, u_j, H[u])` and `H[u]`.
    pub fn nonlinear_values(&self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_len(u)?;
        let h = self.functional(u);
        if !h.is_finite() {
            return Err(Error::NonFinite("functional H[u]"));
        }
        let f: Vec<f64> = self
            .nodes
            .iter()
            .zip(u)
            .map(|(&s, &uj)| self.spec.eval_f(s, uj, h))
            .collect();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("nonlinearity f"));
        }
        Ok((f, h))
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::Invalid(format!(
                "expected {} nodal values, got {}",
                self.n(),
                u.len()
            )));
        }
        Ok(())
    }

    fn mul(&self, f: &[f64]) -> Vec<f64> {
        (&self.operator_matrix * DVector::from_column_slice(f))
            .data
            .into()
    }

    /// `(Tu)_i` at the nodes.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (f, _) = self.nonlinear_values(u)?;
        Ok(self.mul(&f))
    }

    /// `(Tu)(t)` at an arbitrary point, given nodal values of `f`.
    pub fn image_at(&self, f: &[f64], t: f64) -> Result<f64> {
        Ok(self
            .weights_at(t)?
            .iter()
            .zip(f)
            .map(|(w, fj)| w * fj)
            .sum())
    }

    /// Sup-norm of the interpolant `t ↦ Σ_j W_j(t) f_j`, whose nodal values
    /// are `at_nodes`.
    pub fn image_sup(&self, f: &[f64], at_nodes: &[f64]) -> Result<Peak> {
        let n = self.n();
        let mut ts = Vec::with_capacity(n + 2);
        let mut vs = Vec::with_capacity(n + 2);
        ts.push(0.0);
        vs.push(self.image_at(f, 0.0)?);
        ts.extend_from_slice(&self.nodes);
        vs.extend_from_slice(at_nodes);
        ts.push(1.0);
        vs.push(self.image_at(f, 1.0)?);

        let largest = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut best = Peak {
            t: 0.0,
            value: vs[0],
            node: 0,
        };
        let m = ts.len();
        for k in 0..m {
            let here = vs[k].abs();
            let left = if k > 0 {
                vs[k - 1].abs()
            } else {
                f64::NEG_INFINITY
            };
            let right = if k + 1 < m {
                vs[k + 1].abs()
            } else {
                f64::NEG_INFINITY
            };
            if here < left || here < right || here < 0.5 * largest {
                continue;
            }
            let lo = ts[k.saturating_sub(1)];
            let hi = ts[(k + 1).min(m - 1)];
            let w = golden_section_max(|t| self.image_at(f, t).map(f64::abs), lo, hi, PEAK_T_TOL)?;
            let (t, value) = if w.value >= here {
                (w.t, self.image_at(f, w.t)?)
            } else {
                (ts[k], vs[k])
            };
            if value.abs() > best.value.abs() {
                best = Peak { t, value, node: 0 };
            }
        }
        best.node = self.nearest_node(best.t);
        Ok(best)
    }

    fn nearest_node(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &x) in self.nodes.iter().enumerate() {
            if (x - t).abs() < (self.nodes[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// The linearized profile `Φ = T(0)`.
    pub fn linear_profile(&self) -> Result<Vec<f64>> {
        self.apply(&vec![0.0; self.n()])
    }

    /// Residual and norm diagnostics of a candidate pair `(λ, u)`.
    pub fn diagnostics(&self, lambda: f64, u: &[f64], rho: f64) -> Result<Diagnostics> {
        let (f, _) = self.nonlinear_values(u)?;
        let tu = self.mul(&f);
        let residual = u
            .iter()
            .zip(&tu)
            .map(|(ui, ti)| (ui - lambda * ti).abs())
            .fold(0.0, f64::max);
        let peak = self.image_sup(&f, &tu)?;
        let sup_norm = lambda.abs() * peak.abs();
        Ok(Diagnostics {
            residual,
            sup_norm,
            norm_defect: (sup_norm - rho).abs(),
            peak_t: peak.t,
        })
    }

    /// Values of the Nyström interpolant `λ (T u)(t)` at the given points.
    pub fn interpolate_pair(&self, lambda: f64, u: &[f64], at: &[f64]) -> Result<Vec<f64>> {
        let (f, _) = self.nonlinear_values(u)?;
        at.iter()
            .map(|&t| self.image_at(&f, t).map(|v| lambda * v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `max_i |u_i − λ (Tu)_i|`.
    pub residual: f64,
    /// Sup-norm of the interpolant `λ T u`.
    pub sup_norm: f64,
    pub norm_defect: f64,
    pub peak_t: f64,
}

/// Requested branch: sign of `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }

    pub fn matches(self, lambda: f64) -> bool {
        match self {
            Sign::Plus => lambda > 0.0,
            Sign::Minus => lambda < 0.0,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "positive" => Ok(Sign::Plus),
            "-" | "minus" | "negative" => Ok(Sign::Minus),
            other => Err(Error::Invalid(format!("unknown sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Projective,
    Newton,
}

impl SolveMethod {
    pub fn label(self) -> &'static str {
        match self {
            SolveMethod::Projective => "projective",
            SolveMethod::Newton => "newton",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Relaxation `θ` of the projective iteration.
    pub damping: f64,
    pub projective_max_iter: usize,
    /// Stage 1 gives up early when the best residual has not halved within
    /// this many iterations.
    pub stall_window: usize,
    pub newton_max_iter: usize,
    /// Active-point relocations tolerated in stage 2.
    pub max_index_switches: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            damping: 0.5,
            projective_max_iter: 500,
            stall_window: 100,
            newton_max_iter: 60,
            max_index_switches: 10,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Nodal values on [`EigenPair::nodes`].
    pub u: Vec<f64>,
    pub nodes: Vec<f64>,
    pub rho: f64,
    /// `max_i |u_i − λ (Tu)_i|`.
    pub residual: f64,
    /// `| ‖u‖∞ − ρ |` with the sup taken over the Nyström interpolant.
    pub norm_defect: f64,
    /// Where `|u|` attains its sup.
    pub peak_t: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

impl EigenPair {
    pub fn sign(&self) -> Sign {
        if self.lambda >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

struct Iterate {
    lambda: f64,
    u: Vec<f64>,
    diag: Diagnostics,
}

fn no_convergence(reason: impl Into<String>, it: &Iterate, iterations: usize) -> Error {
    Error::NoConvergence(Box::new(NoConvergence {
        reason: reason.into(),
        lambda: it.lambda,
        u: it.u.clone(),
        residual: it.diag.residual,
        norm_defect: it.diag.norm_defect,
        iterations,
    }))
}

const DEGENERATE_NORM: f64 = 1e-300;

/// Solves `u = λ T u`, `‖u‖∞ = ρ`, `sign(λ) = sign`.
pub fn solve_pair(
    op: &DiscreteOperator,
    rho: f64,
    sign: Sign,
    init: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<EigenPair> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Invalid(format!("rho must be positive, got {rho}")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Invalid(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Invalid(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }
    let s = sign.factor();
    let mut u = match init {
        Some(u0) => {
            op.check_len(u0)?;
            u0.to_vec()
        }
        None => {
            let phi = op.linear_profile()?;
            let (f, _) = op.nonlinear_values(&vec![0.0; op.n()])?;
            let peak = op.image_sup(&f, &phi)?;
            if peak.abs() < DEGENERATE_NORM {
                return Err(Error::DegenerateImage { norm: peak.abs() });
            }
            phi.iter().map(|p| s * rho * p / peak.abs()).collect()
        }
    };

    // Stage 1: projective iteration.
    let mut best: Option<Iterate> = None;
    let mut best_at = 0;
    let mut iterations = 0;
    for it in 0..=opts.projective_max_iter {
        iterations = it;
        let (f, _) = op.nonlinear_values(&u)?;
        let tu = op.mul(&f);
        let peak = op.image_sup(&f, &tu)?;
        if peak.abs() < DEGENERATE_NORM {
            return Err(Error::DegenerateImage { norm: peak.abs() });
        }
        let lambda = s * rho / peak.abs();
        let residual = u
            .iter()
            .zip(&tu)
            .map(|(ui, ti)| (ui - lambda * ti).abs())
            .fold(0.0, f64::max);
        let current = Iterate {
            lambda,
            u: u.clone(),
            diag: Diagnostics {
                residual,
                sup_norm: rho,
                norm_defect: 0.0,
                peak_t: peak.t,
            },
        };
        if residual <= opts.tol {
            let diag = op.diagnostics(lambda, &u, rho)?;
            if diag.residual <= opts.tol && diag.norm_defect <= opts.tol {
                return Ok(EigenPair {
                    lambda,
                    u,
                    nodes: op.nodes.clone(),
                    rho,
                    residual: diag.residual,
                    norm_defect: diag.norm_defect,
                    peak_t: diag.peak_t,
                    iterations: it,
                    method: SolveMethod::Projective,
                });
            }
        }
        let improved = best
            .as_ref()
            .is_none_or(|b| residual < 0.5 * b.diag.residual);
        if improved {
            best_at = it;
        }
        if best.as_ref().is_none_or(|b| residual < b.diag.residual) {
            best = Some(current);
        }
        if it - best_at >= opts.stall_window {
            log::debug!("projective iteration stalled at residual {residual:e} after {it} steps");
            break;
        }
        let theta = opts.damping;
        for (ui, ti) in u.iter_mut().zip(&tu) {
            *ui = (1.0 - theta) * *ui + theta * lambda * ti;
        }
    }

    let start = best.expect("at least one projective step");
    log::debug!(
        "switching to Newton from residual {:e} (lambda = {})",
        start.diag.residual,
        start.lambda
    );
    newton(op, rho, sign, start, iterations, opts)
}

fn newton(
    op: &DiscreteOperator,
    rho: f64,
    sign: Sign,
    start: Iterate,
    prior_iterations: usize,
    opts: &SolveOptions,
) -> Result<EigenPair> {
    let n = op.n();
    let functional = op.spec.functional();
    let mut lambda = start.lambda;
    let mut u = start.u.clone();
    let mut best = start;
    let mut switches = 0;
    let mut active_node: Option<usize> = None;

    // Residual (R, C), nodal f, Tu, H[u] and the active peak.
    type Evaluation = (Vec<f64>, Vec<f64>, Vec<f64>, f64, Peak);
    let evaluate = |lambda: f64, u: &[f64]| -> Result<Evaluation> {
        let (f, h) = op.nonlinear_values(u)?;
        let tu = op.mul(&f);
        let peak = op.image_sup(&f, &tu)?;
        let mut r: Vec<f64> = u.iter().zip(&tu).map(|(ui, ti)| ui - lambda * ti).collect();
        r.push((lambda * peak.value).abs() - rho);
        Ok((r, f, tu, h, peak))
    };
    let merit = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    for k in 1..=opts.newton_max_iter {
        let (r, f, tu, h, peak) = evaluate(lambda, &u)?;
        match active_node {
            Some(prev) if prev != peak.node => {
                switches += 1;
                if switches > opts.max_index_switches {
                    return Err(no_convergence(
                        "active point relocated too often",
                        &best,
                        prior_iterations + k,
                    ));
                }
            }
            _ => {}
        }
        active_node = Some(peak.node);

        let sigma = (lambda * peak.value).signum();
        let w_star = op.weights_at(peak.t)?;
        let grad_h = functional.gradient(&op.weights, &u);
        let (fu, fv): (Vec<f64>, Vec<f64>) = op
            .nodes
            .iter()
            .zip(&u)
            .map(|(&s, &uj)| op.spec.eval_f_partials(s, uj, h))
            .unzip();
        let w = &op.operator_matrix;
        let w_fv: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| w[(i, j)] * fv[j]).sum())
            .collect();
        let star_fv: f64 = w_star.iter().zip(&fv).map(|(a, b)| a * b).sum();
        let star_f: f64 = w_star.iter().zip(&f).map(|(a, b)| a * b).sum();

        let mut jac = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = -lambda * (w[(i, j)] * fu[j] + w_fv[i] * grad_h[j]);
            }
            jac[(i, i)] += 1.0;
            jac[(i, n)] = -tu[i];
        }
        for j in 0..n {
            jac[(n, j)] = sigma * lambda * (w_star[j] * fu[j] + star_fv * grad_h[j]);
        }
        jac[(n, n)] = sigma * star_f;

        let rhs = -DVector::from_column_slice(&r);
        let Some(step) = jac.lu().solve(&rhs) else {
            return Err(no_convergence(
                "singular Newton system",
                &best,
                prior_iterations + k,
            ));
        };

        let m0 = merit(&r);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial_u: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + alpha * d)
                .collect();
            let trial_l = lambda + alpha * step[n];
            if let Ok((rt, ..)) = evaluate(trial_l, &trial_u) {
                if merit(&rt) < (1.0 - 1e-4 * alpha) * m0 {
                    accepted = Some((trial_l, trial_u));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((l_new, u_new)) = accepted else {
            return Err(no_convergence(
                "line search failed",
                &best,
                prior_iterations + k,
            ));
        };
        lambda = l_new;
        u = u_new;

        let diag = op.diagnostics(lambda, &u, rho)?;
        if diag.residual < best.diag.residual {
            best = Iterate {
                lambda,
                u: u.clone(),
                diag,
            };
        }
        if diag.residual <= opts.tol && diag.norm_defect <= opts.tol {
            if !sign.matches(lambda) {
                return Err(no_convergence(
                    format!("converged to the opposite branch (lambda = {lambda})"),
                    &best,
                    prior_iterations + k,
                ));
            }
            return Ok(EigenPair {
                lambda,
                u,
                nodes: op.nodes.clone(),
                rho,
                residual: diag.residual,
                norm_defect: diag.norm_defect,
                peak_t: diag.peak_t,
                iterations: prior_iterations + k,
                method: SolveMethod::Newton,
            });
        }
    }
    Err(no_convergence(
        "Newton iteration limit reached",
        &best,
        prior_iterations + opts.newton_max_iter,
    ))
}

/// Independent re-check of a solved pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub refined_n: usize,
    /// Residual of the interpolated pair on the grid with `2n` nodes.
    pub residual_refined: f64,
    pub norm_defect_refined: f64,
    pub sign_consistent: bool,
    pub a_rho: Option<f64>,
    /// `a(ρ) − |λ|`; negative means the localization bound is violated.
    pub containment_margin: Option<f64>,
    pub passed: bool,
}

/// Slack allowed on `|λ| ≤ a(ρ)`.
pub const CONTAINMENT_SLACK: f64 = 1e-8;

/// Recomputes the residual on a grid of `2n` nodes, checks `|λ| ≤ a(ρ)` when
/// the report provides `a(ρ)`, and checks the sign of `λ` against the sign of
/// the branch encoded in `expected`.
pub fn verify_pair(
    pair: &EigenPair,
    op: &DiscreteOperator,
    report: &ConditionReport,
    expected: Sign,
    tol: f64,
) -> Result<Verification> {
    if report.rho != pair.rho {
        return Err(Error::Invalid(format!(
            "report is for rho = {} but the pair has rho = {}",
            report.rho, pair.rho
        )));
    }
    let refined = DiscreteOperator::new(&op.spec, 2 * op.n())?;
    let u2 = op.interpolate_pair(pair.lambda, &pair.u, &refined.nodes)?;
    let diag = refined.diagnostics(pair.lambda, &u2, pair.rho)?;
    let sign_consistent = expected.matches(pair.lambda);
    let a_rho = report.a_rho;
    let containment_margin = a_rho.map(|a| a - pair.lambda.abs());
    let contained = containment_margin.is_none_or(|m| m >= -CONTAINMENT_SLACK);
    let passed = diag.residual <= 10.0 * tol
        && diag.norm_defect <= 10.0 * tol
        && sign_consistent
        && contained;
    Ok(Verification {
        refined_n: refined.n(),
        residual_refined: diag.residual,
        norm_defect_refined: diag.norm_defect,
        sign_consistent,
        a_rho,
        containment_margin,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub solve_pairs: bool,
    /// Warm-start each row from the previous row's pairs (forces a
    /// sequential sweep).
    pub continuation: bool,
    pub solve: SolveOptions,
    pub quadrature: QuadratureConfig,
    pub scan: ScanSettings,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solve_pairs: true,
            continuation: true,
            solve: SolveOptions::default(),
            quadrature: QuadratureConfig::default(),
            scan: ScanSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub rho: f64,
    pub report: Option<ConditionReport>,
    pub plus: Option<EigenPair>,
    pub minus: Option<EigenPair>,
    pub errors: Vec<String>,
}

impl SweepRow {
    pub fn a_rho(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.a_rho)
    }

    pub fn pair(&self, sign: Sign) -> Option<&EigenPair> {
        match sign {
            Sign::Plus => self.plus.as_ref(),
            Sign::Minus => self.minus.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Condition reports (and optionally both eigenpairs) for each `ρ`. Row
/// failures are recorded in the row and never abort the sweep.
pub fn sweep_rho(
    spec: &ProblemSpec,
    rho_values: &[f64],
    n: usize,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if rho_values.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Invalid("rho values must be positive".into()));
    }
    if rho_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(
            "rho values must be strictly ascending".into(),
        ));
    }
    if rho_values.is_empty() {
        return Ok(SweepResult::default());
    }
    let op = if opts.solve_pairs {
        Some(DiscreteOperator::new(spec, n)?)
    } else {
        None
    };

    let report_row = |rho: f64| -> (Option<ConditionReport>, Vec<String>) {
        match build_bounds(spec, rho, &opts.quadrature)
            .and_then(|b| check_conditions_with(&b, (0.0, 1.0), &opts.scan))
        {
            Ok(r) => (Some(r), Vec::new()),
            Err(e) => (None, vec![format!("conditions: {e}")]),
        }
    };
    let solve_row = |op: &DiscreteOperator,
                     rho: f64,
                     sign: Sign,
                     init: Option<&[f64]>,
                     errors: &mut Vec<String>| {
        match solve_pair(op, rho, sign, init, &opts.solve) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("{}: {e}", sign.label()));
                None
            }
        }
    };

    let rows = if opts.continuation && opts.solve_pairs {
        let op = op.as_ref().expect("operator built");
        let mut rows: Vec<SweepRow> = Vec::with_capacity(rho_values.len());
        for &rho in rho_values {
            let (report, mut errors) = report_row(rho);
            let warm = |prev: Option<&EigenPair>| {
                prev.map(|p| p.u.iter().map(|v| v * rho / p.rho).collect::<Vec<f64>>())
            };
            let last = rows.last();
            let init_plus = warm(last.and_then(|r| r.plus.as_ref()));
            let init_minus = warm(last.and_then(|r| r.minus.as_ref()));
            let plus = solve_row(op, rho, Sign::Plus, init_plus.as_deref(), &mut errors);
            let minus = solve_row(op, rho, Sign::Minus, init_minus.as_deref(), &mut errors);
            rows.push(SweepRow {
                rho,
                report,
                plus,
                minus,
                errors,
            });
        }
        rows
    } else {
        rho_values
            .par_iter()
            .map(|&rho| {
                let (report, mut errors) = report_row(rho);
                let (plus, minus) = match &op {
                    Some(op) => (
                        solve_row(op, rho, Sign::Plus, None, &mut errors),
                        solve_row(op, rho, Sign::Minus, None, &mut errors),
                    ),
                    None => (None, None),
                };
                SweepRow {
                    rho,
                    report,
                    plus,
                    minus,
                    errors,
                }
            })
            .collect()
    };
    Ok(SweepResult { rows })
}
