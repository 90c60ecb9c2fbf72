//! Sign conditions on the bound functions and eigenvalue localization.
//!
//! Existence of a positive and a negative eigenvalue on the sphere
//! `‖u‖∞ = ρ` is certified by either
//!
//! - `F_up(t_ρ) < 0` for some `t_ρ` (reported as `holds_5a`), or
//! - `F_low(t_ρ) > 0` for some `t_ρ` (reported as `holds_5b`),
//!
//! and every eigenvalue with an eigenfunction of norm `ρ` then satisfies
//! `|λ| ≤ −ρ / F_up(t_ρ)` or `|λ| ≤ ρ / F_low(t_ρ)` respectively. The best
//! `t_ρ` is the extremizer, located by a grid scan refined with golden-section
//! search.

use std::fmt;

use crate::bounds::{build_bounds, BoundPair, ProblemSpec};
use crate::error::{check_unit, Error, Result};
use crate::optimize::grid_then_golden_max;
use crate::quadrature::QuadratureConfig;

/// Which of the two sign conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    /// `F_up` is negative somewhere.
    UpperNegative,
    /// `F_low` is positive somewhere.
    LowerPositive,
}

impl Which {
    pub fn label(self) -> &'static str {
        match self {
            Which::UpperNegative => "upper_negative",
            Which::LowerPositive => "lower_positive",
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    /// Coarse scan resolution over the interval.
    pub grid_points: usize,
    /// Golden-section bracket length at which refinement stops.
    pub t_tol: f64,
    /// Extrema with `|value| ≤ zero_tol` count as failing the strict
    /// inequality.
    pub zero_tol: f64,
    /// Bisection stopping width for threshold scans in `ρ`.
    pub rho_tol: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            grid_points: 2001,
            t_tol: 1e-10,
            zero_tol: 1e-12,
            rho_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub rho: f64,
    /// The `t`-interval the extrema were taken over.
    pub interval: (f64, f64),
    pub holds_5a: bool,
    pub holds_5b: bool,
    pub t_rho_5a: Option<f64>,
    pub t_rho_5b: Option<f64>,
    pub f_up_min: f64,
    pub t_up_min: f64,
    pub f_low_max: f64,
    pub t_low_max: f64,
    pub a_rho: Option<f64>,
    /// Condition that produced `a_rho` (the tighter one when both hold).
    pub source: Option<Which>,
}

impl ConditionReport {
    pub fn holds(&self, which: Which) -> bool {
        match which {
            Which::UpperNegative => self.holds_5a,
            Which::LowerPositive => self.holds_5b,
        }
    }

    pub fn any_holds(&self) -> bool {
        self.holds_5a || self.holds_5b
    }
}

pub fn check_conditions(bounds: &BoundPair) -> Result<ConditionReport> {
    check_conditions_with(bounds, (0.0, 1.0), &ScanSettings::default())
}

/// Extrema of `F_low` and `F_up` over `interval ⊂ [0,1]`.
pub fn check_conditions_with(
    bounds: &BoundPair,
    interval: (f64, f64),
    settings: &ScanSettings,
) -> Result<ConditionReport> {
    let (a, b) = interval;
    check_unit("interval start", a)?;
    check_unit("interval end", b)?;
    if a > b {
        return Err(Error::Invalid(format!("empty interval [{a}, {b}]")));
    }
    let low = grid_then_golden_max(
        |t| bounds.f_low(t),
        a,
        b,
        settings.grid_points,
        settings.t_tol,
    )?;
    let up = grid_then_golden_max(
        |t| bounds.f_up(t).map(|v| -v),
        a,
        b,
        settings.grid_points,
        settings.t_tol,
    )?;
    let f_low_max = low.value;
    let f_up_min = -up.value;
    let holds_5b = f_low_max > settings.zero_tol;
    let holds_5a = f_up_min < -settings.zero_tol;
    let rho = bounds.rho();

    let mut a_rho = None;
    let mut source = None;
    if holds_5b {
        a_rho = Some(rho / f_low_max);
        source = Some(Which::LowerPositive);
    }
    if holds_5a {
        let bound = -rho / f_up_min;
        if a_rho.is_none_or(|cur| bound < cur) {
            a_rho = Some(bound);
            source = Some(Which::UpperNegative);
        }
    }
    Ok(ConditionReport {
        rho,
        interval,
        holds_5a,
        holds_5b,
        t_rho_5a: holds_5a.then_some(up.t),
        t_rho_5b: holds_5b.then_some(low.t),
        f_up_min,
        t_up_min: up.t,
        f_low_max,
        t_low_max: low.t,
        a_rho,
        source,
    })
}

/// Localization half-width `a(ρ)`: `|λ| ≤ a(ρ)` for every eigenvalue whose
/// eigenfunction has sup-norm `ρ`.
pub fn localization(report: &ConditionReport) -> Result<f64> {
    let mut best: Option<f64> = None;
    if report.holds_5b {
        best = Some(report.rho / report.f_low_max);
    }
    if report.holds_5a {
        let b = -report.rho / report.f_up_min;
        best = Some(best.map_or(b, |x| x.min(b)));
    }
    best.ok_or(Error::NoConditionHolds { rho: report.rho })
}

/// Whether `which` holds at `rho` with extrema taken over `interval`.
pub fn condition_holds(
    spec: &ProblemSpec,
    rho: f64,
    which: Which,
    interval: (f64, f64),
    cfg: &QuadratureConfig,
    settings: &ScanSettings,
) -> Result<bool> {
    let bounds = build_bounds(spec, rho, cfg)?;
    Ok(check_conditions_with(&bounds, interval, settings)?.holds(which))
}

/// The `ρ` in `(rho_lo, rho_hi)` where `which` flips, by bisection on the
/// indicator. Assumes a single flip; `None` when the endpoints agree.
pub fn threshold_scan(
    spec: &ProblemSpec,
    rho_lo: f64,
    rho_hi: f64,
    which: Which,
    cfg: &QuadratureConfig,
) -> Result<Option<f64>> {
    interval_threshold_scan(
        spec,
        rho_lo,
        rho_hi,
        which,
        (0.0, 1.0),
        cfg,
        &ScanSettings::default(),
    )
}

/// [`threshold_scan`] with the extremum restricted to a `t`-subinterval.
pub fn interval_threshold_scan(
    spec: &ProblemSpec,
    rho_lo: f64,
    rho_hi: f64,
    which: Which,
    interval: (f64, f64),
    cfg: &QuadratureConfig,
    settings: &ScanSettings,
) -> Result<Option<f64>> {
    if rho_lo.is_nan() || rho_hi.is_nan() || rho_lo >= rho_hi || rho_lo <= 0.0 {
        return Err(Error::Invalid(format!(
            "bad rho range ({rho_lo}, {rho_hi})"
        )));
    }
    let holds = |rho| condition_holds(spec, rho, which, interval, cfg, settings);
    let (mut lo, mut hi) = (rho_lo, rho_hi);
    let at_lo = holds(lo)?;
    if at_lo == holds(hi)? {
        return Ok(None);
    }
    while hi - lo > settings.rho_tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Indicator of `which` on each `ρ` of a grid. Used to warn when the flip is
/// not unique.
pub fn indicator_profile(
    spec: &ProblemSpec,
    rhos: &[f64],
    which: Which,
    interval: (f64, f64),
    cfg: &QuadratureConfig,
    settings: &ScanSettings,
) -> Result<Vec<bool>> {
    rhos.iter()
        .map(|&rho| condition_holds(spec, rho, which, interval, cfg, settings))
        .collect()
}

/// Number of verdict changes along a profile.
pub fn flip_count(profile: &[bool]) -> usize {
    profile.windows(2).filter(|w| w[0] != w[1]).count()
}
