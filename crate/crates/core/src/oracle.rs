//! Reference computations that share no code with the closed forms they check.
//!
//! Used by the property tests and by the `verify` command.

use crate::sl2::{Mat2, Sl2Matrix};

/// Terms kept in the Taylor series after scaling.
pub const TAYLOR_TERMS: usize = 20;

/// `e^{tM}` by scaling and squaring: `‖tM / 2^k‖ <= 1/2`, a 20-term Taylor
/// series, then `k` squarings.
pub fn expm_taylor(m: &Mat2, t: f64) -> Mat2 {
    let tm = m.scale(t);
    let norm = tm.frobenius();
    let mut k = 0i32;
    if norm > 0.5 {
        k = (norm / 0.5).log2().ceil() as i32;
    }
    let z = tm.scale(2f64.powi(-k));
    let mut sum = Mat2::IDENTITY;
    let mut term = Mat2::IDENTITY;
    for n in 1..=TAYLOR_TERMS {
        term = (term * z).scale(1.0 / n as f64);
        sum = sum.add(&term);
    }
    for _ in 0..k {
        sum = sum * sum;
    }
    sum
}

/// `tr([A,B]^2)` from the explicit commutator product.
pub fn commutator_trace_sq_direct(a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    let (am, bm) = (a.to_mat2(), b.to_mat2());
    let comm = (am * bm).sub(&(bm * am));
    (comm * comm).trace()
}

/// Relative Frobenius distance `‖x - y‖ / max(‖y‖, 1)`.
pub fn relative_error(x: &Mat2, y: &Mat2) -> f64 {
    x.sub(y).frobenius() / y.frobenius().max(1.0)
}

/// Main-theorem value re-evaluated from `(a, b, c)` with `a >= b`, written
/// independently of the exponent module. `None` where no branch applies.
pub fn case_value(a: f64, b: f64, c: f64) -> Option<f64> {
    if a >= 0.0 {
        if c > a {
            Some(0.5 * ((c * c - a * b) / (c - 0.5 * (a + b))).sqrt())
        } else {
            Some((a / 2.0).sqrt())
        }
    } else {
        let g = (a * b).sqrt();
        if c >= g {
            Some(0.5 * ((c * c - a * b) / (c - 0.5 * (a + b))).sqrt())
        } else if c <= -g {
            let arg = (-c / g).max(1.0);
            let denom = (-2.0 / a).sqrt() + 3.0 * (-2.0 / b).sqrt();
            Some(2.0 / std::f64::consts::PI * arg.acosh() / denom)
        } else {
            None
        }
    }
}
