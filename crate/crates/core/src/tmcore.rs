//! 2×2 transfer-matrix algebra, Chebyshev polynomials of the second kind and
//! amplitude extraction.
//!
//! A transfer matrix `M` maps the plane-wave amplitudes to the right of a
//! scatterer onto those to its left:
//!
//! ```text
//! (A, B)ᵀ = M (C, D)ᵀ,   ψ = A e^{ikx} + B e^{-ikx}  (left),  ψ = C e^{ikx} + D e^{-ikx}  (right)
//! ```
//!
//! Scatterers placed left to right compose by ordinary matrix product, leftmost first.

use std::f64::consts::{LN_10, LN_2, PI, TAU};
use std::ops::Mul;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        m11: ONE,
        m12: ZERO,
        m21: ZERO,
        m22: ONE,
    };

    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        TransferMatrix { m11, m12, m21, m22 }
    }

    /// Builds the matrix of a Hermitian scatterer from its second row, using
    /// `m11 = conj(m22)` and `m12 = conj(m21)`.
    pub fn from_hermitian(m21: Complex64, m22: Complex64) -> Self {
        TransferMatrix {
            m11: m22.conj(),
            m12: m21.conj(),
            m21,
            m22,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `| |m11|² − |m12|² − 1 |`. For the Hermitian symmetry class this is
    /// the same as `|det M − 1|`.
    pub fn unimodularity_defect(&self) -> f64 {
        (self.m11.norm_sqr() - self.m12.norm_sqr() - 1.0).abs()
    }

    /// Largest componentwise deviation from `m11 = conj(m22)`, `m12 = conj(m21)`.
    pub fn symmetry_defect(&self) -> f64 {
        let a = self.m11 - self.m22.conj();
        let b = self.m12 - self.m21.conj();
        a.re.abs().max(a.im.abs()).max(b.re.abs()).max(b.im.abs())
    }

    pub fn is_finite(&self) -> bool {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    /// Matrix of the same scatterer moved right by `x0`.
    pub fn translate(&self, x0: f64, k: f64) -> TransferMatrix {
        if x0 == 0.0 {
            return *self;
        }
        let phase = (2.0 * k * x0).rem_euclid(TAU);
        let shift = Complex64::from_polar(1.0, phase);
        TransferMatrix {
            m11: self.m11,
            m12: self.m12 * shift.conj(),
            m21: self.m21 * shift,
            m22: self.m22,
        }
    }

    pub fn polar_m22(&self) -> PolarM22 {
        PolarM22 {
            magnitude: self.m22.norm(),
            alpha: principal_arg(self.m22),
        }
    }

    /// Transmission and reflection amplitudes read off the matrix elements.
    pub fn amplitudes(&self) -> Result<ScatteringResult> {
        let mag = self.m22.norm();
        if mag == 0.0 || !mag.is_finite() {
            return Err(Error::DegenerateMatrix);
        }
        let t = self.m22.inv();
        let transmission = 1.0 / (mag * mag);
        Ok(ScatteringResult {
            transmission,
            reflection: 1.0 - transmission,
            t,
            r_left: self.m21 / self.m22,
            r_right: self.m12 / self.m22,
            log10_t: -2.0 * mag.log10(),
        })
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        self.matmul(&rhs)
    }
}

/// Polar form of `m22`: `m22 = magnitude · e^{iα}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarM22 {
    pub magnitude: f64,
    /// Argument in `(−π, π]`.
    pub alpha: f64,
}

/// `arg z` mapped onto `(−π, π]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringResult {
    /// Transmission probability `T = |t|²`.
    pub transmission: f64,
    /// Reflection probability `R = 1 − T`.
    pub reflection: f64,
    #[serde(skip)]
    pub t: Complex64,
    #[serde(skip)]
    pub r_left: Complex64,
    #[serde(skip)]
    pub r_right: Complex64,
    /// `log10 T`, finite even when `transmission` underflows to zero.
    pub log10_t: f64,
}

impl ScatteringResult {
    /// Assembles the result from `ln|m12|` of a unimodular matrix together with
    /// the element phases, so that `T = 1/(1 + |m12|²)` stays representable in
    /// log space however large `|m12|` becomes.
    pub fn from_log_offdiag(ln_abs_m12: f64, arg_m22: f64, arg_m12: f64, arg_m21: f64) -> Self {
        let (transmission, reflection, ln_abs_m22) = if ln_abs_m12 < 0.0 {
            let x2 = (2.0 * ln_abs_m12).exp();
            (1.0 / (1.0 + x2), x2 / (1.0 + x2), 0.5 * x2.ln_1p())
        } else {
            let y = (-2.0 * ln_abs_m12).exp();
            (y / (1.0 + y), 1.0 / (1.0 + y), ln_abs_m12 + 0.5 * y.ln_1p())
        };
        let t = Complex64::from_polar((-ln_abs_m22).exp(), -arg_m22);
        let r_mag = (ln_abs_m12 - ln_abs_m22).exp();
        ScatteringResult {
            transmission,
            reflection,
            t,
            r_left: Complex64::from_polar(r_mag, arg_m21 - arg_m22),
            r_right: Complex64::from_polar(r_mag, arg_m12 - arg_m22),
            log10_t: -2.0 * ln_abs_m22 / LN_10,
        }
    }
}

/// Chebyshev polynomial of the second kind `U_n(xi)` for `n ≥ −1`
/// (`U_{−1} ≡ 0`; lower orders follow `U_{−m} = −U_{m−2}`).
///
/// Evaluated from `sin((n+1)γ)/sin γ` for `|xi| ≤ 1` and from
/// `sinh((n+1)θ)/sinh θ` beyond, so large `n` stays stable.
pub fn cheb_u(n: i64, xi: f64) -> f64 {
    match n {
        -1 => return 0.0,
        0 => return 1.0,
        _ if n < -1 => return -cheb_u(-n - 2, xi),
        _ => {}
    }
    if xi.is_nan() {
        return f64::NAN;
    }
    if xi < 0.0 {
        let v = cheb_u(n, -xi);
        return if n % 2 == 0 { v } else { -v };
    }
    let np1 = (n + 1) as f64;
    if xi == 1.0 {
        return np1;
    }
    if xi < 1.0 {
        let s = ((1.0 - xi) * (1.0 + xi)).sqrt();
        let gamma = s.atan2(xi);
        if s < 1e-8 && np1 * gamma < 1e-4 {
            let nf = n as f64;
            return np1 * (1.0 - nf * (nf + 2.0) * gamma * gamma / 6.0);
        }
        (np1 * gamma).sin() / s
    } else {
        let theta = acosh_above_one(xi);
        if theta < 1e-8 && np1 * theta < 1e-4 {
            let nf = n as f64;
            return np1 * (1.0 + nf * (nf + 2.0) * theta * theta / 6.0);
        }
        (np1 * theta).sinh() / theta.sinh()
    }
}

/// `(ln|U_n(xi)|, sign U_n(xi))`, finite where `U_n` itself overflows.
/// A root of `U_n` returns `(−∞, 0)`.
pub fn ln_abs_cheb_u(n: i64, xi: f64) -> (f64, f64) {
    if n >= 1 && xi.abs() > 1.0 {
        let np1 = (n + 1) as f64;
        let theta = acosh_above_one(xi.abs());
        let arg = np1 * theta;
        let sign = if xi < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        if arg > 20.0 {
            let ln_num = arg - LN_2 + (-(-2.0 * arg).exp()).ln_1p();
            return (ln_num - ln_sinh(theta), sign);
        }
    }
    let u = cheb_u(n, xi);
    if u == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (u.abs().ln(), u.signum())
    }
}

/// `U_n(xi)` from the three-term recurrence `U_{k+1} = 2ξU_k − U_{k−1}`.
/// Only meant for cross-checks at modest `n`.
pub fn cheb_u_recurrence(n: i64, xi: f64) -> f64 {
    if n < -1 {
        return -cheb_u_recurrence(-n - 2, xi);
    }
    if n == -1 {
        return 0.0;
    }
    let (mut prev, mut cur) = (1.0, 2.0 * xi);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * xi * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn acosh_above_one(x: f64) -> f64 {
    let d = x - 1.0;
    (d + (d * (2.0 + d)).sqrt()).ln_1p()
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}
