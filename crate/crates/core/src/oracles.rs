//! Closed forms for the two built-in worked problems
//!
//! ```text
//! -u'' = λ sin(3πt/2) e^{u(t)} / ∫₀¹ e^{u}
//! ```
//!
//! with `u(0) = u'(1) = 0` ([`ExampleId::Example1Mixed`]) and
//! `u(0) = u(1) = 0` ([`ExampleId::Example2Dirichlet`]).
//!
//! Everything here is written out from the displayed piecewise formulas and
//! shares no code with the numerical pipeline, so it can serve as an
//! independent reference in tests.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_unit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    Example1Mixed,
    Example2Dirichlet,
}

impl ExampleId {
    pub const ALL: [ExampleId; 2] = [ExampleId::Example1Mixed, ExampleId::Example2Dirichlet];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Example1Mixed => "example1_mixed",
            ExampleId::Example2Dirichlet => "example2_dirichlet",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1_mixed" | "example1" => Ok(ExampleId::Example1Mixed),
            "example2_dirichlet" | "example2" => Ok(ExampleId::Example2Dirichlet),
            other => Err(Error::Invalid(format!(
                "unknown built-in problem `{other}`"
            ))),
        }
    }
}

/// Which part of `[0,1]` a threshold refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// Positive maximum anywhere in `[0,1]`.
    Global,
    /// Positive maximum on `[0, 2/3]`.
    IntervalHead,
    /// Positive maximum on `[2/3, 1]`.
    IntervalTail,
}

const TWO_THIRDS: f64 = 2.0 / 3.0;

fn omega() -> f64 {
    1.5 * PI
}

/// `∫₀^{2/3} k(t,s) sin(3πs/2) ds` and `∫_{2/3}^1 k(t,s) sin(3πs/2) ds`.
fn weight_sections(ex: ExampleId, t: f64) -> (f64, f64) {
    let sin = (omega() * t).sin();
    let c = 4.0 / (9.0 * PI * PI);
    match ex {
        ExampleId::Example1Mixed => {
            if t <= TWO_THIRDS {
                (c * sin + 2.0 * t / (3.0 * PI), -2.0 * t / (3.0 * PI))
            } else {
                (4.0 / (9.0 * PI), c * sin - 4.0 / (9.0 * PI))
            }
        }
        ExampleId::Example2Dirichlet => {
            if t <= TWO_THIRDS {
                (
                    c * sin + 2.0 * t / (9.0 * PI),
                    4.0 * t / (9.0 * PI * PI) - 2.0 * t / (9.0 * PI),
                )
            } else {
                (
                    4.0 / (9.0 * PI) * (1.0 - t),
                    c * sin + 4.0 / (9.0 * PI) * (t - 1.0) + 4.0 * t / (9.0 * PI * PI),
                )
            }
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "rho must be a nonnegative finite number, got {rho}"
        )))
    }
}

pub fn oracle_f_low(ex: ExampleId, rho: f64, t: f64) -> Result<f64> {
    check_unit("t", t)?;
    check_rho(rho)?;
    let (head, tail) = weight_sections(ex, t);
    Ok((-2.0 * rho).exp() * head + (2.0 * rho).exp() * tail)
}

pub fn oracle_f_up(ex: ExampleId, rho: f64, t: f64) -> Result<f64> {
    check_unit("t", t)?;
    check_rho(rho)?;
    let (head, tail) = weight_sections(ex, t);
    Ok((2.0 * rho).exp() * head + (-2.0 * rho).exp() * tail)
}

pub fn oracle_threshold(ex: ExampleId, which: ThresholdKind) -> Result<f64> {
    match (ex, which) {
        (ExampleId::Example1Mixed, ThresholdKind::Global | ThresholdKind::IntervalHead) => {
            Ok(2f64.ln() / 4.0)
        }
        (ExampleId::Example1Mixed, ThresholdKind::IntervalTail) => Err(Error::Invalid(
            "the mixed problem has no positive maximum on [2/3, 1] for any rho > 0".into(),
        )),
        (ExampleId::Example2Dirichlet, ThresholdKind::IntervalTail) => {
            Ok((PI / (PI - 2.0)).ln() / 4.0)
        }
        (ExampleId::Example2Dirichlet, ThresholdKind::Global | ThresholdKind::IntervalHead) => {
            Ok((4.0 * PI / (PI - 2.0)).ln() / 4.0)
        }
    }
}

/// Maximizer of `F_low` on `[0,1]`; zero once no positive maximum exists.
pub fn oracle_t_rho(ex: ExampleId, rho: f64) -> f64 {
    let threshold = oracle_threshold(ex, ThresholdKind::Global).expect("global threshold exists");
    if rho >= threshold {
        return 0.0;
    }
    let arg = match ex {
        ExampleId::Example1Mixed => (4.0 * rho).exp() - 1.0,
        ExampleId::Example2Dirichlet => (4.0 * rho).exp() * (PI - 2.0) / (3.0 * PI) - 1.0 / 3.0,
    };
    2.0 / (3.0 * PI) * arg.acos()
}

/// Localization half-width `ρ / F_low(t_ρ)` inside the band, `None` outside.
pub fn oracle_a_rho(ex: ExampleId, rho: f64) -> Option<f64> {
    let threshold = oracle_threshold(ex, ThresholdKind::Global).ok()?;
    if !(rho > 0.0 && rho < threshold) {
        return None;
    }
    let peak = oracle_f_low(ex, rho, oracle_t_rho(ex, rho)).ok()?;
    (peak > 0.0).then(|| rho / peak)
}
