//! Closed-form maximal Lyapunov exponent of `X' = X (u A + (1-u) B)`.
//!
//! With `a = tr A^2 >= b = tr B^2` and `c = tr AB` the optimal strategy is one
//! of three, read off from `(a, b, c)`:
//!
//! | region                                  | strategy          | exponent                                         |
//! |-----------------------------------------|-------------------|--------------------------------------------------|
//! | `a >= 0, c > a` or `a < 0, c >= √(ab)`  | constant `u*`     | `½ √((c² - ab) / (c - (a+b)/2))`                 |
//! | `a >= 0, c <= a`                        | constant `u = 1`  | `√(a/2)`                                         |
//! | `a < 0, c <= -√(ab)`                    | two-phase periodic| `(2/π) arcosh(-c/√(ab)) / (√(-2/a) + 3√(-2/b))`  |
//!
//! When `A`, `B`, `[A,B]` fail to span, the generated algebra is solvable and
//! the exponent is the larger of the two constant-control exponents.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::singular_control;
use crate::sl2::{independence_test, Sl2Matrix, TraceInvariants, INDEPENDENCE_TOL};

/// Default relative width of the case boundaries.
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    SingularOptimal,
    ConstantOptimal,
    PeriodicOptimal,
    SolvableFallback,
}

impl CaseTag {
    pub fn name(self) -> &'static str {
        match self {
            CaseTag::SingularOptimal => "SingularOptimal",
            CaseTag::ConstantOptimal => "ConstantOptimal",
            CaseTag::PeriodicOptimal => "PeriodicOptimal",
            CaseTag::SolvableFallback => "SolvableFallback",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub tag: CaseTag,
    /// `A` and `B` were exchanged internally to get `tr A^2 >= tr B^2`.
    pub swapped: bool,
}

/// Optimal strategy, expressed in the caller's order of `A` and `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Constant control; `u` is the weight on `A`.
    Singular { u_star: f64 },
    /// Constant bang control, `u = 1` (all `A`) or `u = 0` (all `B`).
    Constant { u: f64 },
    /// Alternate `time_a` on `A` with `time_b` on `B`.
    Periodic { time_a: f64, time_b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub value: f64,
    pub case: CaseLabel,
    /// Invariants in the caller's order.
    pub invariants: TraceInvariants,
    pub strategy: Option<Strategy>,
}

/// Growth rate of the constant control `M`: `√(tr(M²)/2)` when positive, else 0.
pub fn constant_control_exponent(m: &Sl2Matrix) -> f64 {
    let q = m.trace_sq();
    if q > 0.0 {
        (0.5 * q).sqrt()
    } else {
        0.0
    }
}

/// Which branch applies. Requires `a >= b`.
pub fn classify(inv: &TraceInvariants, tol: f64) -> Result<CaseTag> {
    let TraceInvariants { a, b, c } = *inv;
    if a < b {
        return Err(Error::InvalidArgument(format!(
            "classify expects tr(A^2) >= tr(B^2), got a={a}, b={b}"
        )));
    }
    let eps = tol * inv.scale();
    if a >= -eps {
        return Ok(if c > a + eps {
            CaseTag::SingularOptimal
        } else {
            CaseTag::ConstantOptimal
        });
    }
    let r = (a * b).sqrt();
    if c >= r - eps {
        Ok(CaseTag::SingularOptimal)
    } else if c <= -r + eps {
        Ok(CaseTag::PeriodicOptimal)
    } else {
        Err(Error::Unclassifiable { a, b, c })
    }
}

/// `½ √((c² - ab) / (c - (a+b)/2))`, clamped to 0 when the radicand is negative.
pub fn singular_case_exponent(inv: &TraceInvariants) -> f64 {
    let TraceInvariants { a, b, c } = *inv;
    let r = (c * c - a * b) / (c - 0.5 * (a + b));
    if r > 0.0 {
        0.5 * r.sqrt()
    } else {
        0.0
    }
}

/// Exponent of the two-phase periodic strategy for two elliptic generators.
///
/// For `c < 0` this is the optimal value; for `c > 0` it is the
/// alternative with coefficient `√(-2/a) + √(-2/b)`, which never beats the
/// singular control and is only reported as a diagnostic.
pub fn case3_exponent(inv: &TraceInvariants) -> Result<f64> {
    let TraceInvariants { a, b, c } = *inv;
    if !(a < 0.0 && b < 0.0) {
        return Err(Error::Domain(format!(
            "periodic formula needs tr(A^2), tr(B^2) < 0, got a={a}, b={b}"
        )));
    }
    let root = (a * b).sqrt();
    let arg = c.abs() / root;
    if arg < 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "arcosh argument |c|/sqrt(ab) = {arg} is below 1"
        )));
    }
    let growth = arg.max(1.0).acosh();
    let pa = (-2.0 / a).sqrt();
    let pb = (-2.0 / b).sqrt();
    let denom = if c < 0.0 { pa + 3.0 * pb } else { pa + pb };
    Ok(2.0 / (PI * denom) * growth)
}

/// Evaluates the case formula for normalized invariants (`a >= b`).
pub fn exponent_from_invariants(inv: &TraceInvariants, tag: CaseTag) -> Result<f64> {
    match tag {
        CaseTag::SingularOptimal => Ok(singular_case_exponent(inv)),
        CaseTag::ConstantOptimal => Ok((0.5 * inv.a.max(0.0)).sqrt()),
        CaseTag::PeriodicOptimal => case3_exponent(inv),
        CaseTag::SolvableFallback => Err(Error::InvalidArgument(
            "the solvable fallback depends on the matrices, not only on (a, b, c)".into(),
        )),
    }
}

pub fn lyapunov_exponent(a: &Sl2Matrix, b: &Sl2Matrix) -> Result<ExponentReport> {
    lyapunov_exponent_with_tol(a, b, CLASSIFY_TOL)
}

pub fn lyapunov_exponent_with_tol(
    a: &Sl2Matrix,
    b: &Sl2Matrix,
    tol: f64,
) -> Result<ExponentReport> {
    let invariants = TraceInvariants::of(a, b);

    if !independence_test(a, b, INDEPENDENCE_TOL) {
        let ea = constant_control_exponent(a);
        let eb = constant_control_exponent(b);
        let (value, u) = if ea >= eb { (ea, 1.0) } else { (eb, 0.0) };
        return Ok(ExponentReport {
            value,
            case: CaseLabel {
                tag: CaseTag::SolvableFallback,
                swapped: false,
            },
            invariants,
            strategy: Some(Strategy::Constant { u }),
        });
    }

    let swapped = invariants.a < invariants.b;
    let norm = if swapped {
        invariants.swapped()
    } else {
        invariants
    };
    let tag = classify(&norm, tol)?;
    let value = exponent_from_invariants(&norm, tag)?;

    // Strategies are computed for the normalized order, then mapped back.
    let strategy = match tag {
        CaseTag::SingularOptimal => singular_control(&norm).map(|u| Strategy::Singular {
            u_star: if swapped { 1.0 - u } else { u },
        }),
        CaseTag::ConstantOptimal => Some(Strategy::Constant {
            u: if swapped { 0.0 } else { 1.0 },
        }),
        CaseTag::PeriodicOptimal => {
            let lambda = (-0.5 * norm.a).sqrt();
            let mu = (-0.5 * norm.b).sqrt();
            let t = PI / (2.0 * lambda);
            let s = 3.0 * PI / (2.0 * mu);
            Some(if swapped {
                Strategy::Periodic {
                    time_a: s,
                    time_b: t,
                }
            } else {
                Strategy::Periodic {
                    time_a: t,
                    time_b: s,
                }
            })
        }
        CaseTag::SolvableFallback => None,
    };

    Ok(ExponentReport {
        value,
        case: CaseLabel { tag, swapped },
        invariants,
        strategy,
    })
}
