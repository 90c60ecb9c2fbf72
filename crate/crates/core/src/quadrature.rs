//! One-dimensional adaptive quadrature.
//!
//! Globally adaptive 7/15-point Gauss–Kronrod: the interval is first cut at
//! every declared breakpoint, then the panel with the largest error estimate
//! is bisected until the summed estimate falls below an absolute tolerance.
//! Panels never straddle a breakpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{check_unit, Error, Result};
use crate::kernels::Kernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute tolerance on the summed error estimate. Relative tolerances
    /// are useless here because the bound functions cross zero.
    pub abs_tol: f64,
    /// Maximum number of bisections.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            max_subdivisions: 1 << 15,
        }
    }
}

impl QuadratureConfig {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadratureConfig {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.abs_tol.is_nan() || self.abs_tol <= 0.0 {
            return Err(Error::Invalid(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Invalid("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Kronrod abscissae on `[-1, 1]` (non-negative half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

/// Gauss weights for the odd-indexed Kronrod abscissae (XGK[1], [3], [5], [7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; ties broken by creation order so runs are
    // bit-reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        finite &= s.is_finite();
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    if !finite {
        return Err(Error::NonFinite("quadrature integrand"));
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// `∫_a^b φ` to absolute tolerance `cfg.abs_tol`, splitting at `breakpoints`.
pub fn integrate<F>(
    phi: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_with_estimate(phi, a, b, breakpoints, cfg).map(|r| r.value)
}

pub fn integrate_with_estimate<F>(
    phi: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::Invalid(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if let Some(p) = breakpoints.iter().find(|&&p| !(a..=b).contains(&p)) {
        return Err(Error::Invalid(format!("breakpoint {p} outside [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_bound: 0.0,
            evaluations: 0,
        });
    }

    let mut cuts = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(a);
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::with_capacity(cuts.len() + 64);
    let mut seq = 0;
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        let (value, error) = gk15(&phi, w[0], w[1])?;
        evaluations += 15;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
            seq,
        });
        seq += 1;
    }

    let mut error_sum: f64 = heap.iter().map(|p| p.error).sum();
    let mut subdivisions = 0;
    while error_sum > cfg.abs_tol {
        // Incremental sums drift; confirm before giving up or stopping.
        error_sum = heap.iter().map(|p| p.error).sum();
        if error_sum <= cfg.abs_tol {
            break;
        }
        let worst = *heap.peek().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= cfg.max_subdivisions || !(worst.a < mid && mid < worst.b) {
            let value = heap.iter().map(|p| p.value).sum();
            return Err(Error::ToleranceNotReached {
                estimate: value,
                error_bound: error_sum,
            });
        }
        heap.pop();
        let (lv, le) = gk15(&phi, worst.a, mid)?;
        let (rv, re) = gk15(&phi, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        error_sum += le + re - worst.error;
        for (pa, pb, value, error) in [(worst.a, mid, lv, le), (mid, worst.b, rv, re)] {
            heap.push(Panel {
                a: pa,
                b: pb,
                value,
                error,
                seq,
            });
            seq += 1;
        }
    }

    // Sum in left-to-right order for reproducibility.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error_bound = panels.iter().map(|p| p.error).sum();
    Ok(Integral {
        value,
        error_bound,
        evaluations,
    })
}

/// `∫₀¹ k(t,s) φ(s) ds`; the diagonal `s = t` is added as a breakpoint when
/// the kernel has a kink there.
pub fn kernel_apply<F>(kernel: &Kernel, phi: F, t: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    kernel_apply_with_breaks(kernel, phi, t, &[], cfg)
}

pub fn kernel_apply_with_breaks<F>(
    kernel: &Kernel,
    phi: F,
    t: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_unit("t", t)?;
    let mut breaks = breakpoints.to_vec();
    if kernel.kink_on_diagonal() {
        breaks.push(t);
    }
    integrate(
        |s| kernel.eval_unchecked(t, s) * phi(s),
        0.0,
        1.0,
        &breaks,
        cfg,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = weight;
        w[m - 1 - i] = weight;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
