//! Exact 2x2 linear algebra and the trace-form identities of sl2(R).
//!
//! Every traceless 2x2 matrix `M` satisfies `M^2 = (tr(M^2)/2) Id`, so the
//! exponential has the closed form `e^{tM} = C(t) Id + S(t) M` where the pair
//! `(C, S)` is `(cosh, sinh/alpha)`, `(cos, sin/alpha)` or `(1, t)` depending on
//! the sign of `tr(M^2)`. Everything downstream is built on that identity.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff on `tr(M^2)` below which `M` is treated as nilpotent.
pub const NILPOTENT_TOL: f64 = 1e-12;
/// Relative tolerance of the Gram-determinant independence test.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

const SERIES_CUTOFF: f64 = 1e-4;
/// Just below ln(f64::MAX); cosh overflows past this.
const COSH_LIMIT: f64 = 709.78;

/// A general real 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn scale(&self, k: f64) -> Self {
        Mat2::new(k * self.m11, k * self.m12, k * self.m21, k * self.m22)
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    pub fn frobenius(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let s = self.scale(1.0 / m);
        m * (s.m11 * s.m11 + s.m12 * s.m12 + s.m21 * s.m21 + s.m22 * s.m22).sqrt()
    }

    /// Largest singular value, from the closed form
    /// `(|(a+d, c-b)| + |(a-d, b+c)|) / 2`.
    pub fn operator_norm(&self) -> f64 {
        let p = (self.m11 + self.m22).hypot(self.m21 - self.m12);
        let q = (self.m11 - self.m22).hypot(self.m12 + self.m21);
        0.5 * (p + q)
    }

    /// Natural log of the spectral radius, computed on a rescaled copy so that
    /// entries near the renormalization threshold do not overflow.
    pub fn ln_spectral_radius(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = self.scale(1.0 / m);
        let half_tr = 0.5 * s.trace();
        let det = s.det();
        let disc = half_tr * half_tr - det;
        let rho = if disc >= 0.0 {
            half_tr.abs() + disc.sqrt()
        } else {
            det.sqrt()
        };
        m.ln() + rho.ln()
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det.abs() < 1e-12 {
            return Err(Error::SingularMatrix { det });
        }
        let inv = 1.0 / det;
        Ok(Mat2::new(
            self.m22 * inv,
            -self.m12 * inv,
            -self.m21 * inv,
            self.m11 * inv,
        ))
    }

    /// Projection onto sl2: `X - (tr X / 2) Id`.
    pub fn traceless_part(&self) -> Sl2Matrix {
        let h = 0.5 * (self.m11 - self.m22);
        Sl2Matrix::new(h, self.m12, self.m21)
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.m11 - other.m11,
            self.m12 - other.m12,
            self.m21 - other.m21,
            self.m22 - other.m22,
        )
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.m11 + other.m11,
            self.m12 + other.m12,
            self.m21 + other.m21,
            self.m22 + other.m22,
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * r.m11 + self.m12 * r.m21,
            self.m11 * r.m12 + self.m12 * r.m22,
            self.m21 * r.m11 + self.m22 * r.m21,
            self.m21 * r.m12 + self.m22 * r.m22,
        )
    }
}

/// A traceless 2x2 matrix `((m11, m12), (m21, -m11))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sl2Matrix {
    m11: f64,
    m12: f64,
    m21: f64,
}

impl Sl2Matrix {
    pub const ZERO: Sl2Matrix = Sl2Matrix::new(0.0, 0.0, 0.0);

    pub const fn new(m11: f64, m12: f64, m21: f64) -> Self {
        Sl2Matrix { m11, m12, m21 }
    }

    pub fn m11(&self) -> f64 {
        self.m11
    }

    pub fn m12(&self) -> f64 {
        self.m12
    }

    pub fn m21(&self) -> f64 {
        self.m21
    }

    /// Coordinates in the basis `diag(1,-1)`, `E12`, `E21`.
    pub fn coords(&self) -> [f64; 3] {
        [self.m11, self.m12, self.m21]
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(self.m11, self.m12, self.m21, -self.m11)
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.to_mat2().rows()
    }

    /// `tr(M^2) = 2 (m11^2 + m12 m21)`.
    pub fn trace_sq(&self) -> f64 {
        2.0 * (self.m11 * self.m11 + self.m12 * self.m21)
    }

    /// Frobenius norm of the full 2x2 matrix.
    pub fn norm(&self) -> f64 {
        self.to_mat2().frobenius()
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite()
    }
}

impl Add for Sl2Matrix {
    type Output = Sl2Matrix;

    fn add(self, r: Sl2Matrix) -> Sl2Matrix {
        Sl2Matrix::new(self.m11 + r.m11, self.m12 + r.m12, self.m21 + r.m21)
    }
}

impl Sub for Sl2Matrix {
    type Output = Sl2Matrix;

    fn sub(self, r: Sl2Matrix) -> Sl2Matrix {
        Sl2Matrix::new(self.m11 - r.m11, self.m12 - r.m12, self.m21 - r.m21)
    }
}

impl Neg for Sl2Matrix {
    type Output = Sl2Matrix;

    fn neg(self) -> Sl2Matrix {
        Sl2Matrix::new(-self.m11, -self.m12, -self.m21)
    }
}

impl Mul<Sl2Matrix> for f64 {
    type Output = Sl2Matrix;

    fn mul(self, m: Sl2Matrix) -> Sl2Matrix {
        Sl2Matrix::new(self * m.m11, self * m.m12, self * m.m21)
    }
}

/// The triple `(tr A^2, tr B^2, tr AB)` on which every exponent formula depends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceInvariants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TraceInvariants {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        TraceInvariants { a, b, c }
    }

    pub fn of(a: &Sl2Matrix, b: &Sl2Matrix) -> Self {
        TraceInvariants {
            a: a.trace_sq(),
            b: b.trace_sq(),
            c: trace_product(a, b),
        }
    }

    /// `tr([A,B]^2) = 2c^2 - 2ab`.
    pub fn commutator_trace_sq(&self) -> f64 {
        2.0 * self.c * self.c - 2.0 * self.a * self.b
    }

    /// Magnitude used to make tolerances relative.
    pub fn scale(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(1.0)
    }

    /// The same invariants with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        TraceInvariants::new(self.b, self.a, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EigenKind {
    Real,
    Imaginary,
    Nilpotent,
}

/// Eigenvalues `±alpha` (real), `±i alpha` (imaginary) or `0` (nilpotent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenParameter {
    pub kind: EigenKind,
    pub alpha: f64,
}

/// Coefficients of `e^{tM} = even * Id + odd * M`.
///
/// `even_minus_one` carries `even - 1` without cancellation; it feeds the
/// arcosh evaluations near trace 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpCoefficients {
    pub even: f64,
    pub odd: f64,
    pub even_minus_one: f64,
}

pub fn bracket(a: &Sl2Matrix, b: &Sl2Matrix) -> Sl2Matrix {
    // [A,B] for traceless A, B, written out on the three free entries.
    let m11 = a.m12 * b.m21 - a.m21 * b.m12;
    let m12 = 2.0 * (a.m11 * b.m12 - a.m12 * b.m11);
    let m21 = 2.0 * (a.m21 * b.m11 - a.m11 * b.m21);
    Sl2Matrix::new(m11, m12, m21)
}

pub fn trace_product(m: &Sl2Matrix, n: &Sl2Matrix) -> f64 {
    2.0 * m.m11 * n.m11 + m.m12 * n.m21 + m.m21 * n.m12
}

/// `tr([A,B]^2)` through the invariants, `2 tr(AB)^2 - 2 tr(A^2) tr(B^2)`.
pub fn commutator_trace_sq(a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    TraceInvariants::of(a, b).commutator_trace_sq()
}

pub fn eigen_parameter(m: &Sl2Matrix, tol: f64) -> EigenParameter {
    let tr2 = m.trace_sq();
    let norm_sq = m.norm().powi(2);
    let cutoff = tol * norm_sq.max(1.0);
    if tr2.abs() <= cutoff {
        EigenParameter {
            kind: EigenKind::Nilpotent,
            alpha: 0.0,
        }
    } else {
        EigenParameter {
            kind: if tr2 > 0.0 {
                EigenKind::Real
            } else {
                EigenKind::Imaginary
            },
            alpha: (0.5 * tr2.abs()).sqrt(),
        }
    }
}

/// `(even, odd)` coefficients of `e^{tM}` for an eigen parameter.
pub fn exp_coefficients(eig: EigenParameter, t: f64) -> Result<ExpCoefficients> {
    let x = eig.alpha * t;
    match eig.kind {
        EigenKind::Nilpotent => Ok(ExpCoefficients {
            even: 1.0,
            odd: t,
            even_minus_one: 0.0,
        }),
        EigenKind::Real => {
            if x.abs() > COSH_LIMIT {
                return Err(Error::Overflow {
                    argument: x.abs(),
                    limit: COSH_LIMIT,
                });
            }
            let odd = if x.abs() < SERIES_CUTOFF {
                let x2 = x * x;
                t * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0))
            } else {
                x.sinh() / eig.alpha
            };
            let h = (0.5 * x).sinh();
            Ok(ExpCoefficients {
                even: x.cosh(),
                odd,
                even_minus_one: 2.0 * h * h,
            })
        }
        EigenKind::Imaginary => {
            let odd = if x.abs() < SERIES_CUTOFF {
                let x2 = x * x;
                t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
            } else {
                x.sin() / eig.alpha
            };
            let h = (0.5 * x).sin();
            Ok(ExpCoefficients {
                even: x.cos(),
                odd,
                even_minus_one: -2.0 * h * h,
            })
        }
    }
}

/// Closed-form `e^{tM}`.
pub fn expm(m: &Sl2Matrix, t: f64) -> Result<Mat2> {
    let eig = eigen_parameter(m, NILPOTENT_TOL);
    let k = exp_coefficients(eig, t)?;
    Ok(Mat2::new(
        k.even + k.odd * m.m11,
        k.odd * m.m12,
        k.odd * m.m21,
        k.even - k.odd * m.m11,
    ))
}

/// Coordinates `(alpha, beta, gamma)` of `M = alpha A + beta B + gamma [A,B]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisCoords {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BasisCoords {
    pub fn compose(&self, a: &Sl2Matrix, b: &Sl2Matrix) -> Sl2Matrix {
        self.alpha * *a + self.beta * *b + self.gamma * bracket(a, b)
    }
}

fn gram(a: &Sl2Matrix, b: &Sl2Matrix) -> ([Sl2Matrix; 3], [[f64; 3]; 3]) {
    let basis = [*a, *b, bracket(a, b)];
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = trace_product(&basis[i], &basis[j]);
        }
    }
    (basis, g)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant of the trace-form Gram matrix of `{A, B, [A,B]}`.
pub fn gram_determinant(a: &Sl2Matrix, b: &Sl2Matrix) -> f64 {
    det3(&gram(a, b).1)
}

pub fn independence_test(a: &Sl2Matrix, b: &Sl2Matrix, tol: f64) -> bool {
    let scale = TraceInvariants::of(a, b).scale();
    gram_determinant(a, b).abs() > tol * scale.powi(3)
}

pub fn basis_coordinates(m: &Sl2Matrix, a: &Sl2Matrix, b: &Sl2Matrix) -> Result<BasisCoords> {
    let (basis, g) = gram(a, b);
    let det = det3(&g);
    let scale = TraceInvariants::of(a, b).scale();
    if det.abs() <= INDEPENDENCE_TOL * scale.powi(3) {
        return Err(Error::DegenerateBasis { gram_det: det });
    }
    let rhs = [
        trace_product(m, &basis[0]),
        trace_product(m, &basis[1]),
        trace_product(m, &basis[2]),
    ];
    // Cramer's rule on the symmetric Gram system.
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = g;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *xk = det3(&mk) / det;
    }
    Ok(BasisCoords {
        alpha: x[0],
        beta: x[1],
        gamma: x[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, FRAC_PI_2};

    fn h() -> Sl2Matrix {
        Sl2Matrix::new(1.0, 0.0, 0.0)
    }

    fn x() -> Sl2Matrix {
        Sl2Matrix::new(0.0, 1.0, 1.0)
    }

    fn rot() -> Sl2Matrix {
        Sl2Matrix::new(0.0, -1.0, 1.0)
    }

    fn full(m: &Sl2Matrix) -> Mat2 {
        m.to_mat2()
    }

    #[test]
    fn bracket_matches_direct_product() {
        let c = bracket(&h(), &x());
        assert_eq!(c, Sl2Matrix::new(0.0, 2.0, -2.0));
        let direct = (full(&h()) * full(&x())).sub(&(full(&x()) * full(&h())));
        assert_eq!(direct, c.to_mat2());
        assert_eq!(bracket(&h(), &h()), Sl2Matrix::ZERO);
    }

    #[test]
    fn trace_products() {
        assert_eq!(trace_product(&h(), &h()), 2.0);
        assert_eq!(trace_product(&h(), &x()), 0.0);
        let n = Sl2Matrix::new(1.0, -2.0, 1.0);
        assert_eq!(trace_product(&rot(), &n), -3.0);
        assert_eq!((full(&rot()) * full(&n)).trace(), -3.0);
    }

    #[test]
    fn commutator_trace_examples() {
        assert_eq!(commutator_trace_sq(&h(), &x()), -8.0);
        let c = bracket(&h(), &x());
        assert_eq!(trace_product(&c, &c), -8.0);
        assert_eq!(commutator_trace_sq(&h(), &h()), 0.0);
        let b = Sl2Matrix::new(3.0, -2.0, 4.0);
        assert_eq!(commutator_trace_sq(&h(), &b), 64.0);
    }

    #[test]
    fn eigen_parameter_kinds() {
        let e = eigen_parameter(&h(), NILPOTENT_TOL);
        assert_eq!((e.kind, e.alpha), (EigenKind::Real, 1.0));
        let e = eigen_parameter(&rot(), NILPOTENT_TOL);
        assert_eq!((e.kind, e.alpha), (EigenKind::Imaginary, 1.0));
        let e = eigen_parameter(&Sl2Matrix::new(0.0, 1.0, 0.0), NILPOTENT_TOL);
        assert_eq!((e.kind, e.alpha), (EigenKind::Nilpotent, 0.0));
    }

    #[test]
    fn expm_examples() {
        let e = expm(&h(), 1.0).unwrap();
        assert_relative_eq!(e.m11, E, max_relative = 1e-15);
        assert_relative_eq!(e.m22, 1.0 / E, max_relative = 1e-15);
        assert_eq!((e.m12, e.m21), (0.0, 0.0));

        let r = expm(&rot(), FRAC_PI_2).unwrap();
        assert!(r.m11.abs() < 1e-15 && r.m22.abs() < 1e-15);
        assert_relative_eq!(r.m12, -1.0, max_relative = 1e-15);
        assert_relative_eq!(r.m21, 1.0, max_relative = 1e-15);

        let n = expm(&Sl2Matrix::new(0.0, 1.0, 0.0), 3.0).unwrap();
        assert_eq!(n, Mat2::new(1.0, 3.0, 0.0, 1.0));
    }

    #[test]
    fn expm_overflow_is_reported() {
        assert!(matches!(expm(&h(), 800.0), Err(Error::Overflow { .. })));
        assert!(expm(&h(), 700.0).is_ok());
        // imaginary branch never overflows
        assert!(expm(&rot(), 1e6).is_ok());
    }

    #[test]
    fn small_argument_series_is_continuous() {
        let m = Sl2Matrix::new(1.0, 0.0, 0.0);
        let below = expm(&m, 0.99e-4).unwrap();
        let above = expm(&m, 1.01e-4).unwrap();
        assert!((below.m11 - (0.99e-4f64).exp()).abs() < 1e-16);
        assert!((above.m11 - (1.01e-4f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn basis_coordinate_examples() {
        let a = h();
        let b = x();
        let c = basis_coordinates(&a, &a, &b).unwrap();
        assert_relative_eq!(c.alpha, 1.0, epsilon = 1e-15);
        assert!(c.beta.abs() < 1e-15 && c.gamma.abs() < 1e-15);
        let c = basis_coordinates(&bracket(&a, &b), &a, &b).unwrap();
        assert_relative_eq!(c.gamma, 1.0, epsilon = 1e-15);
        let m = Sl2Matrix::new(1.0, 3.0, -1.0);
        let c = basis_coordinates(&m, &a, &b).unwrap();
        assert_relative_eq!(c.alpha, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.beta, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.gamma, 1.0, epsilon = 1e-14);
        assert!((c.compose(&a, &b) - m).norm() < 1e-14);
    }

    #[test]
    fn basis_rejects_dependent_pair() {
        let a = h();
        let b = 2.0 * h();
        assert!(matches!(
            basis_coordinates(&x(), &a, &b),
            Err(Error::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn independence_examples() {
        assert!(independence_test(&h(), &x(), INDEPENDENCE_TOL));
        // det Gram = (ab - c^2) tr([A,B]^2) = 4 * (-8)
        assert_eq!(gram_determinant(&h(), &x()), -32.0);
        assert!(!independence_test(&h(), &(2.0 * h()), INDEPENDENCE_TOL));
        let nil = Sl2Matrix::new(0.0, 1.0, 0.0);
        assert!(!independence_test(&h(), &nil, INDEPENDENCE_TOL));
    }

    #[test]
    fn operator_norm_and_spectral_radius() {
        let m = Mat2::new(2.0, 0.0, 0.0, -3.0);
        assert_relative_eq!(m.operator_norm(), 3.0, max_relative = 1e-15);
        assert_relative_eq!(m.ln_spectral_radius(), 3.0f64.ln(), max_relative = 1e-15);
        // rotation: unit spectral radius, complex pair
        let r = expm(&rot(), 0.3).unwrap();
        assert!(r.ln_spectral_radius().abs() < 1e-15);
        let shear = Mat2::new(1.0, 1.0, 0.0, 1.0);
        assert_relative_eq!(
            shear.operator_norm(),
            (1.0 + 5f64.sqrt()) / 2.0,
            max_relative = 1e-15
        );
        let huge = Mat2::new(1e200, 0.0, 0.0, 1e-200);
        assert_relative_eq!(
            huge.ln_spectral_radius(),
            200.0 * 10f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn inverse_and_traceless_part() {
        let x = Mat2::new(2.0, 1.0, 3.0, 2.0);
        let p = x * x.inverse().unwrap();
        assert!(p.sub(&Mat2::IDENTITY).max_abs() < 1e-15);
        assert!(matches!(
            Mat2::new(1.0, 2.0, 2.0, 4.0).inverse(),
            Err(Error::SingularMatrix { .. })
        ));
        assert_eq!(x.traceless_part(), Sl2Matrix::new(0.0, 1.0, 3.0));
    }
}
