//! Geometry of Pontryagin extremals on sl2(R).
//!
//! The adjoint covector is identified with a traceless matrix `eta` through
//! the trace form. Along any control it evolves by conjugation,
//! `eta(t) = X(t)^{-1} eta_0 X(t)`, so `tr(eta^2)` is a first integral and the
//! motion is confined to a hyperboloid. The sign of the switching function
//! `tr(eta (A - B))` selects the control; the points where it vanishes form the
//! switching plane, and its intersection with the unit hyperboloid is a conic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sl2::{
    bracket, independence_test, trace_product, BasisCoords, Mat2, Sl2Matrix, TraceInvariants,
    INDEPENDENCE_TOL,
};

/// Relative width of the tangency band `discriminant = 0`.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Relative margin by which `(2c - a - b) tr([A,B]^2)` must be positive.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Default tolerance of both transversality tests.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;

/// An adjoint covector on the unit sheet `tr(eta^2) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointState {
    eta: Sl2Matrix,
}

impl AdjointState {
    /// Rescales `eta` onto `tr(eta^2) = 1`.
    pub fn normalized(eta: Sl2Matrix) -> Result<Self> {
        let q = eta.trace_sq();
        if q <= 0.0 || !q.is_finite() {
            return Err(Error::Domain(format!(
                "tr(eta^2) = {q} cannot be normalized to 1"
            )));
        }
        Ok(AdjointState {
            eta: (1.0 / q.sqrt()) * eta,
        })
    }

    pub fn eta(&self) -> Sl2Matrix {
        self.eta
    }

    pub fn propagate(&self, x: &Mat2) -> Result<AdjointState> {
        Ok(AdjointState {
            eta: adjoint_propagate(&self.eta, x)?,
        })
    }
}

/// `X^{-1} eta_0 X`.
pub fn adjoint_propagate(eta0: &Sl2Matrix, x: &Mat2) -> Result<Sl2Matrix> {
    let inv = x.inverse()?;
    Ok((inv * eta0.to_mat2() * *x).traceless_part())
}

/// Right-hand side of the adjoint equation, `[eta, u A + (1-u) B]`.
pub fn adjoint_velocity(eta: &Sl2Matrix, u: f64, a: &Sl2Matrix, b: &Sl2Matrix) -> Sl2Matrix {
    bracket(eta, &(u * *a + (1.0 - u) * *b))
}

/// Switching function `tr(eta (A - B))`; positive selects `u = 1`.
pub fn switching_value(eta: &Sl2Matrix, a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    trace_product(eta, &(*a - *b))
}

/// Time derivative of the switching function along the adjoint flow, for any
/// control: `tr([eta, M](A - B)) = tr(eta [M, A - B]) = -tr(eta [A,B])`.
pub fn switching_rate(eta: &Sl2Matrix, a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    -trace_product(eta, &bracket(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conic {
    Ellipse,
    Hyperbola,
    /// Both coefficients negative: the plane misses the unit hyperboloid.
    Empty,
    Degenerate,
}

/// The switching curve `coeff_alpha * alpha^2 + coeff_gamma * gamma^2 = 1`
/// in the plane coordinates `(alpha, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingCurveClass {
    pub conic: Conic,
    pub coeff_alpha: f64,
    pub coeff_gamma: f64,
}

pub fn classify_switching_curve(inv: &TraceInvariants, tol: f64) -> Result<SwitchingCurveClass> {
    let TraceInvariants { a, b, c } = *inv;
    let scale = inv.scale();
    if (c - b).abs() <= tol * scale {
        return Err(Error::Degenerate { gap: c - b });
    }
    let k = inv.commutator_trace_sq();
    let coeff_alpha = (2.0 * c - a - b) * k / ((c - b) * (c - b));
    let coeff_gamma = k;
    let conic = if coeff_alpha.abs() <= tol * scale || coeff_gamma.abs() <= tol * scale * scale {
        Conic::Degenerate
    } else {
        match (coeff_alpha > 0.0, coeff_gamma > 0.0) {
            (true, true) => Conic::Ellipse,
            (false, false) => Conic::Empty,
            _ => Conic::Hyperbola,
        }
    };
    Ok(SwitchingCurveClass {
        conic,
        coeff_alpha,
        coeff_gamma,
    })
}

/// Discriminant `2(a + b - 2c) c0^2 + tr([A,B]^2)` of the intersection of the
/// line `tr(eta A) = tr(eta B) = c0` with the unit hyperboloid.
pub fn intersection_discriminant(inv: &TraceInvariants, c0: f64) -> f64 {
    let TraceInvariants { a, b, c } = *inv;
    2.0 * (a + b - 2.0 * c) * c0 * c0 + inv.commutator_trace_sq()
}

/// Points `eta_0 = alpha A + beta B + gamma [A,B]` with `tr(eta_0^2) = 1`
/// and `tr(eta_0 A) = tr(eta_0 B) = c0`.
///
/// Returns no point when the discriminant is negative, one when the line is
/// tangent to the hyperboloid and two otherwise.
pub fn switching_intersections(inv: &TraceInvariants, c0: f64) -> Result<Vec<BasisCoords>> {
    let TraceInvariants { a, b, c } = *inv;
    let k = inv.commutator_trace_sq();
    let scale = inv.scale();
    if k.abs() <= INDEPENDENCE_TOL * scale * scale {
        return Err(Error::DegenerateBasis {
            gram_det: -0.5 * k * k,
        });
    }
    let alpha = 2.0 * (c - b) * c0 / k;
    let beta = 2.0 * (c - a) * c0 / k;
    let disc = intersection_discriminant(inv, c0);
    if disc.abs() <= TANGENCY_TOL * scale * scale {
        return Ok(vec![BasisCoords {
            alpha,
            beta,
            gamma: 0.0,
        }]);
    }
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    let gamma = disc.sqrt() / k.abs();
    Ok(vec![
        BasisCoords { alpha, beta, gamma },
        BasisCoords {
            alpha,
            beta,
            gamma: -gamma,
        },
    ])
}

/// `u* = (c - b) / (2c - a - b)`, or `None` when `2c = a + b`.
pub fn singular_control(inv: &TraceInvariants) -> Option<f64> {
    let TraceInvariants { a, b, c } = *inv;
    let den = 2.0 * c - a - b;
    if den == 0.0 {
        None
    } else {
        Some((c - b) / den)
    }
}

/// Growth rate of the constant singular control,
/// `1/2 sqrt(tr([A,B]^2) / (2c - a - b))`; zero when the radicand is not positive.
pub fn singular_exponent(inv: &TraceInvariants) -> f64 {
    let TraceInvariants { a, b, c } = *inv;
    let r = inv.commutator_trace_sq() / (2.0 * c - a - b);
    if r > 0.0 {
        0.5 * r.sqrt()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularData {
    pub u_star: f64,
    /// The two equilibria `±eta*` on the unit hyperboloid.
    pub eta_star: [Sl2Matrix; 2],
    /// `u* ∈ [0, 1]`.
    pub admissible: bool,
    pub exponent: f64,
    /// The singular velocity has non-real eigenvalues, so the flow stays bounded.
    pub bounded: bool,
}

impl SingularData {
    pub fn velocity(&self, a: &Sl2Matrix, b: &Sl2Matrix) -> Sl2Matrix {
        self.u_star * *a + (1.0 - self.u_star) * *b
    }
}

pub fn singular_data(a: &Sl2Matrix, b: &Sl2Matrix) -> Result<SingularData> {
    if !independence_test(a, b, INDEPENDENCE_TOL) {
        return Err(Error::DegenerateBasis {
            gram_det: crate::sl2::gram_determinant(a, b),
        });
    }
    let inv = TraceInvariants::of(a, b);
    let TraceInvariants {
        a: ta,
        b: tb,
        c: tc,
    } = inv;
    let product = (2.0 * tc - ta - tb) * inv.commutator_trace_sq();
    if product <= SINGULAR_TOL * inv.scale().powi(3) {
        return Err(Error::NoSingular { product });
    }
    let u_star = singular_control(&inv).ok_or(Error::NoSingular { product })?;
    // Direction (c-b) A + (c-a) B solves tr(eta (A-B)) = 0 with gamma = 0.
    let direction = (tc - tb) * *a + (tc - ta) * *b;
    let eta = AdjointState::normalized(direction)?.eta();
    let velocity = u_star * *a + (1.0 - u_star) * *b;
    let slack = 1e-12;
    Ok(SingularData {
        u_star,
        eta_star: [eta, -eta],
        admissible: (-slack..=1.0 + slack).contains(&u_star),
        exponent: singular_exponent(&inv),
        bounded: velocity.trace_sq() <= 0.0,
    })
}

/// The terminal covector `X(T) - tr(X(T))/2 Id` demanded by transversality.
/// Under the Killing-form identification the covector is a quarter of this;
/// the factor is irrelevant to both tests below.
pub fn transversality_covector(x_t: &Mat2) -> Sl2Matrix {
    x_t.traceless_part()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransversalityCheck {
    /// `X^{-1} eta_0 X = eta_0` within tolerance.
    pub periodic: bool,
    /// The traceless part of `X` is parallel to `eta_0` within tolerance.
    pub proportional: bool,
    pub periodic_residual: f64,
    pub proportional_residual: f64,
}

impl TransversalityCheck {
    pub fn agree(&self) -> bool {
        self.periodic == self.proportional
    }

    pub fn holds(&self) -> bool {
        self.periodic && self.proportional
    }
}

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn norm3(v: [f64; 3]) -> f64 {
    v[0].hypot(v[1]).hypot(v[2])
}

/// Evaluates both characterizations of transversality: periodicity of the
/// adjoint (`X^{-1} eta_0 X = eta_0`) and proportionality of `eta_0` to the
/// traceless part of `X`. They are equivalent, since the centralizer of a
/// nonzero `eta_0` is `span(Id, eta_0)`.
pub fn transversality_check(x_t: &Mat2, eta0: &Sl2Matrix, tol: f64) -> Result<TransversalityCheck> {
    let inv = x_t.inverse()?;
    let eta_norm = eta0.norm();
    if eta_norm == 0.0 {
        return Ok(TransversalityCheck {
            periodic: true,
            proportional: true,
            periodic_residual: 0.0,
            proportional_residual: 0.0,
        });
    }
    let conj = inv * eta0.to_mat2() * *x_t;
    let periodic_residual =
        conj.sub(&eta0.to_mat2()).frobenius() / (eta_norm * x_t.frobenius() * inv.frobenius());

    let v = x_t.traceless_part().coords();
    let w = eta0.coords();
    let nv = norm3(v);
    let proportional_residual = if nv == 0.0 {
        0.0
    } else {
        norm3(cross(v, w)) / (nv * norm3(w))
    };
    Ok(TransversalityCheck {
        periodic: periodic_residual <= tol,
        proportional: proportional_residual <= tol,
        periodic_residual,
        proportional_residual,
    })
}
