//! Two-phase periodic controls: `t` on `A`, then `s` on `B`, repeated.
//!
//! The monodromy `X = e^{tA} e^{sB}` has trace
//! `Φ(t,s) = 2 C_A(t) C_B(s) + tr(AB) S_A(t) S_B(s)` with `(C, S)` the
//! exponential coefficients of [`crate::sl2::exp_coefficients`], and the
//! growth rate of the repeated schedule is `arcosh(|Φ|/2) / (t + s)`.
//! Consecutive switching times of a periodic extremal solve
//! `∂Φ/∂t = ∂Φ/∂s`, i.e. `tr(XA) = tr(XB)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::singular_data;
use crate::sl2::{
    eigen_parameter, exp_coefficients, expm, EigenKind, EigenParameter, ExpCoefficients, Mat2,
    Sl2Matrix, TraceInvariants, NILPOTENT_TOL,
};

/// Largest `|alpha t|` accepted before reporting overflow.
pub const OVERFLOW_GUARD: f64 = 700.0;
const BISECTION_TOL: f64 = 1e-12;

/// Dwell times of a two-phase schedule: `t` on `A` (u = 1), then `s` on `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodPair {
    pub t: f64,
    pub s: f64,
}

impl PeriodPair {
    /// Both times must be finite and non-negative; a zero phase is allowed so
    /// that the degenerate schedules at the boundary stay expressible.
    pub fn new(t: f64, s: f64) -> Result<Self> {
        if !(t.is_finite() && s.is_finite() && t >= 0.0 && s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "period pair needs finite non-negative times, got ({t}, {s})"
            )));
        }
        Ok(PeriodPair { t, s })
    }

    pub fn period(&self) -> f64 {
        self.t + self.s
    }

    pub fn halved(&self) -> PeriodPair {
        PeriodPair {
            t: 0.5 * self.t,
            s: 0.5 * self.s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchBranch {
    /// Time past which the switching equation has no solution, when finite.
    pub t_bar: Option<f64>,
    /// `(c - a) / (c - b)`, the limit of `s(t) / t` as `t -> 0`.
    pub slope0: f64,
}

struct Phases {
    inv: TraceInvariants,
    ka: ExpCoefficients,
    kb: ExpCoefficients,
}

fn guarded(m: &Sl2Matrix, time: f64) -> Result<(EigenParameter, ExpCoefficients)> {
    let eig = eigen_parameter(m, NILPOTENT_TOL);
    if eig.kind == EigenKind::Real && (eig.alpha * time).abs() > OVERFLOW_GUARD {
        return Err(Error::Overflow {
            argument: (eig.alpha * time).abs(),
            limit: OVERFLOW_GUARD,
        });
    }
    Ok((eig, exp_coefficients(eig, time)?))
}

impl Phases {
    fn new(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<Self> {
        Ok(Phases {
            inv: TraceInvariants::of(a, b),
            ka: guarded(a, p.t)?.1,
            kb: guarded(b, p.s)?.1,
        })
    }

    fn phi(&self) -> f64 {
        2.0 * self.ka.even * self.kb.even + self.inv.c * self.ka.odd * self.kb.odd
    }

    /// `Φ/2 - 1` without cancellation near the identity.
    fn half_phi_minus_one(&self) -> f64 {
        let (ea, eb) = (self.ka.even_minus_one, self.kb.even_minus_one);
        ea * eb + ea + eb + 0.5 * self.inv.c * self.ka.odd * self.kb.odd
    }
}

/// `e^{tA} e^{sB}`.
pub fn monodromy(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<Mat2> {
    guarded(a, p.t)?;
    guarded(b, p.s)?;
    Ok(expm(a, p.t)? * expm(b, p.s)?)
}

/// `Φ(t, s) = tr(e^{tA} e^{sB})`, from the matrix product.
pub fn phi(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<f64> {
    Ok(monodromy(a, b, p)?.trace())
}

/// `Φ(t, s)` from the scalar closed form `2 C_A C_B + c S_A S_B`.
pub fn phi_closed_form(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<f64> {
    Ok(Phases::new(a, b, p)?.phi())
}

/// `(∂Φ/∂t, ∂Φ/∂s)` in closed form.
pub fn phi_partials(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<(f64, f64)> {
    let ph = Phases::new(a, b, p)?;
    let TraceInvariants { a: ta, b: tb, c } = ph.inv;
    let (ka, kb) = (ph.ka, ph.kb);
    Ok((
        ta * ka.odd * kb.even + c * ka.even * kb.odd,
        tb * ka.even * kb.odd + c * ka.odd * kb.even,
    ))
}

/// `tr(X A) - tr(X B)` with `X = e^{tA} e^{sB}`.
pub fn switching_residual(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<f64> {
    let x = monodromy(a, b, p)?;
    Ok((x * a.to_mat2()).trace() - (x * b.to_mat2()).trace())
}

pub fn switch_branch(a: &Sl2Matrix, b: &Sl2Matrix) -> SwitchBranch {
    let inv = TraceInvariants::of(a, b);
    let slope0 = (inv.c - inv.a) / (inv.c - inv.b);
    let ea = eigen_parameter(a, NILPOTENT_TOL);
    let eb = eigen_parameter(b, NILPOTENT_TOL);
    let mut t_bar = None;
    if ea.kind == EigenKind::Real && eb.kind == EigenKind::Real {
        let kappa = eb.alpha / ea.alpha * slope0;
        if kappa > 1.0 {
            t_bar = Some((1.0 / kappa).atanh() / ea.alpha);
        }
    }
    SwitchBranch { t_bar, slope0 }
}

/// Smallest `s > 0` with `switching_residual(t, s) = 0`.
pub fn solve_switch_time(a: &Sl2Matrix, b: &Sl2Matrix, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "switch time needs t > 0, got {t}"
        )));
    }
    let inv = TraceInvariants::of(a, b);
    let (_, ka) = guarded(a, t)?;
    let eb = eigen_parameter(b, NILPOTENT_TOL);
    let scale = inv.scale();

    // Residual = S_A C_B (a - c) + C_A S_B (c - b); dividing by C_A C_B (c - b)
    // leaves S_B / C_B = slope0 * S_A / C_A. Where that division is unsafe
    // fall back to bracketing the residual directly.
    if (inv.c - inv.b).abs() <= 1e-12 * scale || ka.even.abs() <= 1e-12 * ka.odd.abs().max(1.0) {
        return bisect_switch_time(a, b, t, eb);
    }
    let ratio = (inv.c - inv.a) / (inv.c - inv.b) * ka.odd / ka.even;
    let s = match eb.kind {
        EigenKind::Real => {
            let arg = eb.alpha * ratio;
            if arg >= 1.0 {
                return Err(Error::NoSolution(format!(
                    "t = {t} is at or beyond the blow-up time of s(t)"
                )));
            }
            if arg <= 0.0 {
                return Err(Error::NoSolution(format!(
                    "switching slope has the wrong sign (tanh argument {arg})"
                )));
            }
            arg.atanh() / eb.alpha
        }
        EigenKind::Imaginary => {
            let beta = eb.alpha;
            let base = (beta * ratio).atan();
            if ratio > 0.0 {
                base / beta
            } else {
                (PI + base) / beta
            }
        }
        EigenKind::Nilpotent => {
            if ratio <= 0.0 {
                return Err(Error::NoSolution(format!(
                    "switching slope has the wrong sign (ratio {ratio})"
                )));
            }
            ratio
        }
    };
    guarded(b, s)?;
    Ok(s)
}

fn bisect_switch_time(a: &Sl2Matrix, b: &Sl2Matrix, t: f64, eb: EigenParameter) -> Result<f64> {
    let f = |s: f64| switching_residual(a, b, PeriodPair { t, s });
    let rate = if eb.kind == EigenKind::Nilpotent {
        0.0
    } else {
        eb.alpha
    };
    let mut s_max = 10.0 * (1.0f64).max(if rate > 0.0 { 1.0 / rate } else { 1.0 });
    const SCAN: usize = 1000;
    for _ in 0..8 {
        let step = s_max / SCAN as f64;
        let mut lo = step;
        let mut f_lo = f(lo)?;
        if f_lo == 0.0 {
            return Ok(lo);
        }
        for i in 2..=SCAN {
            let hi = step * i as f64;
            let f_hi = f(hi)?;
            if f_hi == 0.0 {
                return Ok(hi);
            }
            if f_lo.signum() != f_hi.signum() {
                let (mut l, mut h, mut fl) = (lo, hi, f_lo);
                while h - l > BISECTION_TOL * h.max(1.0) {
                    let mid = 0.5 * (l + h);
                    let fm = f(mid)?;
                    if fm == 0.0 {
                        return Ok(mid);
                    }
                    if fm.signum() == fl.signum() {
                        l = mid;
                        fl = fm;
                    } else {
                        h = mid;
                    }
                }
                return Ok(0.5 * (l + h));
            }
            lo = hi;
            f_lo = f_hi;
        }
        if rate * 2.0 * s_max > OVERFLOW_GUARD {
            break;
        }
        s_max *= 2.0;
    }
    Err(Error::NoSolution(format!(
        "no sign change of the switching residual for t = {t}"
    )))
}

/// Growth rate `arcosh(|Φ|/2) / (t + s)` of the repeated schedule; zero when
/// `|Φ| < 2` (the monodromy is elliptic and the flow stays bounded).
pub fn periodic_exponent(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<f64> {
    let period = p.period();
    if period <= 0.0 {
        return Err(Error::InvalidArgument(
            "periodic exponent needs t + s > 0".into(),
        ));
    }
    let ph = Phases::new(a, b, p)?;
    let x = ph.half_phi_minus_one();
    let growth = if x >= 0.0 {
        (x + (x * (x + 2.0)).sqrt()).ln_1p()
    } else {
        let half = -0.5 * ph.phi();
        if half > 1.0 {
            half.acosh()
        } else {
            0.0
        }
    };
    Ok(growth / period)
}

/// `tr(X(t/2, s/2)^2) - tr(X(t, s))`, from the matrices.
pub fn doubling_gap(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<f64> {
    let half = monodromy(a, b, p.halved())?;
    let full = monodromy(a, b, p)?;
    Ok((half * half).trace() - full.trace())
}

/// `S_A(t/2)^2 S_B(s/2)^2 tr([A,B]^2) / 2`, the closed form of [`doubling_gap`].
pub fn doubling_gap_closed_form(a: &Sl2Matrix, b: &Sl2Matrix, p: PeriodPair) -> Result<f64> {
    let ph = Phases::new(a, b, p.halved())?;
    let (sa, sb) = (ph.ka.odd, ph.kb.odd);
    Ok(0.5 * sa * sa * sb * sb * ph.inv.commutator_trace_sq())
}

/// For two elliptic generators, the pairs where `cos(λt) = cos(μs) = 0`:
/// `(π/2λ, 3π/2μ)`, `(π/2λ, π/2μ)` and `(3π/2λ, π/2μ)`.
pub fn imaginary_special_points(a: &Sl2Matrix, b: &Sl2Matrix) -> Result<[PeriodPair; 3]> {
    let ea = eigen_parameter(a, NILPOTENT_TOL);
    let eb = eigen_parameter(b, NILPOTENT_TOL);
    if ea.kind != EigenKind::Imaginary || eb.kind != EigenKind::Imaginary {
        return Err(Error::Domain(
            "special points need both generators with imaginary eigenvalues".into(),
        ));
    }
    let (l, m) = (ea.alpha, eb.alpha);
    Ok([
        PeriodPair {
            t: PI / (2.0 * l),
            s: 3.0 * PI / (2.0 * m),
        },
        PeriodPair {
            t: PI / (2.0 * l),
            s: PI / (2.0 * m),
        },
        PeriodPair {
            t: 3.0 * PI / (2.0 * l),
            s: PI / (2.0 * m),
        },
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    /// The singular exponent, the supremum over the switching family.
    pub value: f64,
    /// `(t, s(t), exponent)` for `t = 2^-3, ..., 2^-20`.
    pub sequence: Vec<(f64, f64, f64)>,
}

/// Tolerance on the final approach of the switching family to its limit.
pub const LIMIT_TOL: f64 = 1e-5;

/// Exponent of the singular control, checked as the limit of the switching
/// family `ℓ(t, s(t))` as `t -> 0`.
pub fn limit_exponent(a: &Sl2Matrix, b: &Sl2Matrix) -> Result<LimitReport> {
    limit_exponent_with(a, b, Execution::default())
}

pub fn limit_exponent_with(a: &Sl2Matrix, b: &Sl2Matrix, exec: Execution) -> Result<LimitReport> {
    let inv = TraceInvariants::of(a, b);
    let k = inv.commutator_trace_sq();
    if k <= 0.0 {
        return Err(Error::Domain(format!(
            "tr([A,B]^2) = {k} <= 0: controls with switches are not optimal"
        )));
    }
    let sing = singular_data(a, b)?;
    if !sing.admissible {
        return Err(Error::Domain(format!(
            "singular control u* = {} is not admissible",
            sing.u_star
        )));
    }
    let value = sing.exponent;

    let points = exec.map_indexed(18, |i| -> Result<(f64, f64, f64)> {
        let t = 2f64.powi(-(i as i32 + 3));
        let s = solve_switch_time(a, b, t)?;
        let ell = periodic_exponent(a, b, PeriodPair { t, s })?;
        Ok((t, s, ell))
    });
    let sequence = points.into_iter().collect::<Result<Vec<_>>>()?;

    let slack = 1e-12 * value.max(1.0);
    for w in sequence.windows(2) {
        if w[1].2 < w[0].2 - slack {
            return Err(Error::LimitCheck(format!(
                "exponent decreased from {} (t={}) to {} (t={})",
                w[0].2, w[0].0, w[1].2, w[1].0
            )));
        }
    }
    if let Some(&(t, _, ell)) = sequence.iter().find(|p| p.2 > value + slack) {
        return Err(Error::LimitCheck(format!(
            "exponent {ell} at t={t} exceeds the singular value {value}"
        )));
    }
    let last = sequence.last().map(|p| p.2).unwrap_or(0.0);
    if (value - last).abs() > LIMIT_TOL {
        return Err(Error::LimitCheck(format!(
            "final exponent {last} is {} away from {value}",
            (value - last).abs()
        )));
    }
    Ok(LimitReport { value, sequence })
}
