//! Minimal arbitrary-precision complex arithmetic on top of MPFR floats.
//!
//! Only the operations the root-finding pipeline needs; everything keeps the
//! precision of its operands and uses assign forms to avoid temporaries in
//! hot loops.

use num_complex::Complex64;
use rug::float::Round;
use rug::ops::{AssignRound, NegAssign};
use rug::{Assign, Float};

#[derive(Debug, Clone, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

impl BigComplex {
    pub fn new(prec: u32) -> Self {
        BigComplex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn with_val(prec: u32, re: f64, im: f64) -> Self {
        BigComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        Self::with_val(prec, z.re, z.im)
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// Round (or extend) to a new precision.
    pub fn to_prec(&self, prec: u32) -> Self {
        let mut re = Float::new(prec);
        let mut im = Float::new(prec);
        re.assign_round(&self.re, Round::Nearest);
        im.assign_round(&self.im, Round::Nearest);
        BigComplex { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn assign_c(&mut self, other: &BigComplex) {
        self.re.assign(&other.re);
        self.im.assign(&other.im);
    }

    pub fn abs(&self) -> Float {
        let mut t = self.re.clone();
        t.hypot_mut(&self.im);
        t
    }

    /// `|z|` as an f64; saturates instead of overflowing for huge exponents.
    pub fn abs_f64(&self) -> f64 {
        let a = self.abs();
        let v = a.to_f64();
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    }

    /// log2(|z|), or None for zero. Cheap: uses exponents plus an f64 mantissa.
    pub fn abs_log2(&self) -> Option<f64> {
        let e_re = self.re.get_exp();
        let e_im = self.im.get_exp();
        let e = match (e_re, e_im) {
            (None, None) => return None,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.max(b),
        };
        let re = scaled_to_f64(&self.re, e);
        let im = scaled_to_f64(&self.im, e);
        Some(e as f64 + re.hypot(im).log2())
    }

    /// Exponent-safe conversion: `z = c * 2^e` with `c` near unit magnitude.
    pub fn to_c64_exp(&self) -> (Complex64, i64) {
        match (self.re.get_exp(), self.im.get_exp()) {
            (None, None) => (Complex64::new(0.0, 0.0), 0),
            (a, b) => {
                let e = a.unwrap_or(i32::MIN).max(b.unwrap_or(i32::MIN));
                (
                    Complex64::new(scaled_to_f64(&self.re, e), scaled_to_f64(&self.im, e)),
                    e as i64,
                )
            }
        }
    }

    /// Plain f64 conversion; may overflow to infinity for huge values.
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn neg_assign(&mut self) {
        self.re.neg_assign();
        self.im.neg_assign();
    }
}

fn scaled_to_f64(f: &Float, e: i32) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let mut t = f.clone();
    t >>= e;
    t.to_f64()
}

/// Scratch space for the in-place complex kernels.
#[derive(Debug)]
pub struct ComplexScratch {
    t1: Float,
    t2: Float,
    t3: Float,
}

impl ComplexScratch {
    pub fn new(prec: u32) -> Self {
        ComplexScratch {
            t1: Float::new(prec),
            t2: Float::new(prec),
            t3: Float::new(prec),
        }
    }

    /// `acc <- acc * z + c` (one Horner stage).
    pub fn fused_mul_add(&mut self, acc: &mut BigComplex, z: &BigComplex, c: &BigComplex) {
        self.t1.assign(&acc.re * &z.re);
        self.t1 -= &acc.im * &z.im;
        self.t1 += &c.re;
        self.t2.assign(&acc.re * &z.im);
        self.t2 += &acc.im * &z.re;
        self.t2 += &c.im;
        std::mem::swap(&mut acc.re, &mut self.t1);
        std::mem::swap(&mut acc.im, &mut self.t2);
    }

    /// `out <- a * b`.
    pub fn mul(&mut self, out: &mut BigComplex, a: &BigComplex, b: &BigComplex) {
        self.t1.assign(&a.re * &b.re);
        self.t1 -= &a.im * &b.im;
        self.t2.assign(&a.re * &b.im);
        self.t2 += &a.im * &b.re;
        std::mem::swap(&mut out.re, &mut self.t1);
        std::mem::swap(&mut out.im, &mut self.t2);
    }

    /// `out <- a / b`.
    pub fn div(&mut self, out: &mut BigComplex, a: &BigComplex, b: &BigComplex) {
        self.t3.assign(&b.re * &b.re);
        self.t3 += &b.im * &b.im;
        self.t1.assign(&a.re * &b.re);
        self.t1 += &a.im * &b.im;
        self.t1 /= &self.t3;
        self.t2.assign(&a.im * &b.re);
        self.t2 -= &a.re * &b.im;
        self.t2 /= &self.t3;
        std::mem::swap(&mut out.re, &mut self.t1);
        std::mem::swap(&mut out.im, &mut self.t2);
    }

    /// `out <- out - a`.
    pub fn sub_assign(&mut self, out: &mut BigComplex, a: &BigComplex) {
        out.re -= &a.re;
        out.im -= &a.im;
    }
}

/// Evaluate `p` and its derivative at `z` by a dual Horner pass.
/// `coeffs` is ascending (constant term first).
pub fn horner_with_derivative(
    coeffs: &[BigComplex],
    z: &BigComplex,
    scratch: &mut ComplexScratch,
    value: &mut BigComplex,
    derivative: &mut BigComplex,
) {
    let n = coeffs.len();
    debug_assert!(n > 0);
    value.assign_c(&coeffs[n - 1]);
    derivative.re.assign(0.0);
    derivative.im.assign(0.0);
    for k in (0..n - 1).rev() {
        // derivative <- derivative * z + value
        scratch.fused_mul_add(derivative, z, value);
        // value <- value * z + coeffs[k]
        scratch.fused_mul_add(value, z, &coeffs[k]);
    }
}
