//! Derivative-free one-dimensional maximization.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// A located maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub t: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of `f` on `[a, b]`, stopping when
/// the bracket is shorter than `tol`. The endpoints are evaluated too, so a
/// monotone function returns its boundary maximum exactly.
pub fn golden_section_max<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a, b);
    let mut best = Maximum { t: a, value: f(a)? };
    let fb = f(b)?;
    if fb > best.value {
        best = Maximum { t: b, value: fb };
    }
    if hi - lo <= tol {
        return Ok(best);
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    for (t, value) in [(c, fc), (d, fd)] {
        if value > best.value {
            best = Maximum { t, value };
        }
    }
    Ok(best)
}

/// Scans `points` equispaced samples of `f` on `[a, b]`, then refines the
/// best sample by golden-section search on its two neighbouring cells.
///
/// The returned value is always an actual evaluation `f(t)`.
pub fn grid_then_golden_max<F>(mut f: F, a: f64, b: f64, points: usize, tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if points < 2 || a == b {
        return Ok(Maximum { t: a, value: f(a)? });
    }
    let node = |i: usize| {
        if i == points - 1 {
            b
        } else {
            a + (b - a) * i as f64 / (points - 1) as f64
        }
    };
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..points {
        let v = f(node(i))?;
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = node(best_i.saturating_sub(1));
    let hi = node((best_i + 1).min(points - 1));
    let refined = golden_section_max(&mut f, lo, hi, tol)?;
    if refined.value >= best_v {
        Ok(refined)
    } else {
        Ok(Maximum {
            t: node(best_i),
            value: best_v,
        })
    }
}
