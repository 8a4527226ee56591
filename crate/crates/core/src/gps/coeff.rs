//! Coefficient backends for generalized power series.
//!
//! Two backends implement [`Coefficient`]: exact [`GaussianRational`] and
//! [`BigComplex`], a multiprecision complex float that tracks the magnitude
//! of everything that was summed into it so that cancellations can be
//! recognised as zeros.

use std::fmt;

use rug::float::Round;
use rug::ops::CompleteRound;
use rug::{Complex, Float};
use serde_json::{json, Value};

use super::scalar::GaussianRational;

/// Significant decimal digits used when printing float coefficients.
pub const FLOAT_PRINT_DIGITS: usize = 24;

/// Precision of the magnitude bookkeeping attached to float coefficients.
const MAGNITUDE_BITS: u32 = 24;

/// Field operations needed by the series and solver code.
pub trait Coefficient: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Runtime parameters shared by all values of a computation.
    type Context: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn context(&self) -> Self::Context;
    fn from_exact(x: &GaussianRational, ctx: &Self::Context) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `None` when `rhs` is zero.
    fn div(&self, rhs: &Self) -> Option<Self>;
    fn to_complex(&self, prec: u32) -> Complex;
    /// `{"re": ..., "im": ...}` with string components.
    fn to_json(&self) -> Value;
    /// Exact equality for the exact backend, relative agreement for floats.
    fn approx_eq(&self, other: &Self) -> bool;

    fn zero(ctx: &Self::Context) -> Self {
        Self::from_exact(&GaussianRational::zero(), ctx)
    }

    fn one(ctx: &Self::Context) -> Self {
        Self::from_exact(&GaussianRational::one(), ctx)
    }

    fn mul_exact(&self, x: &GaussianRational) -> Self {
        self.mul(&Self::from_exact(x, &self.context()))
    }
}

impl Coefficient for GaussianRational {
    type Context = ();

    fn context(&self) {}

    fn from_exact(x: &GaussianRational, _ctx: &()) -> Self {
        x.clone()
    }

    fn is_zero(&self) -> bool {
        GaussianRational::is_zero(self)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn div(&self, rhs: &Self) -> Option<Self> {
        self.checked_div(rhs)
    }

    fn to_complex(&self, prec: u32) -> Complex {
        Complex::with_val(prec, (self.re(), self.im()))
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("gaussian rational serializes")
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn mul_exact(&self, x: &GaussianRational) -> Self {
        self * x
    }
}

/// Precision context of the float backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FloatContext {
    pub prec: u32,
}

impl FloatContext {
    pub fn new(prec: u32) -> Self {
        FloatContext { prec }
    }

    /// Bits of cancellation after which a sum is declared zero.
    fn negligible_bits(&self) -> i32 {
        (self.prec - self.prec / 8).saturating_sub(8) as i32
    }
}

/// Multiprecision complex coefficient.
///
/// `scale` bounds the magnitude of the terms that produced `value`; a value
/// below `scale · 2^-b` (with `b` slightly less than the working precision)
/// is indistinguishable from rounding noise and counts as zero.
#[derive(Clone, Debug)]
pub struct BigComplex {
    value: Complex,
    scale: Float,
    ctx: FloatContext,
}

impl BigComplex {
    pub fn new(value: Complex, ctx: FloatContext) -> Self {
        let scale = Float::with_val(MAGNITUDE_BITS, value.abs_ref());
        BigComplex { value, scale, ctx }
    }

    pub fn value(&self) -> &Complex {
        &self.value
    }

    pub fn scale(&self) -> &Float {
        &self.scale
    }

    fn with_scale(value: Complex, scale: Float, ctx: FloatContext) -> Self {
        // the bound never drops below the value itself
        let abs = Float::with_val(MAGNITUDE_BITS, value.abs_ref());
        let scale = if abs > scale { abs } else { scale };
        BigComplex { value, scale, ctx }
    }

    fn abs_low(&self) -> Float {
        Float::with_val(MAGNITUDE_BITS, self.value.abs_ref())
    }
}

impl PartialEq for BigComplex {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl Coefficient for BigComplex {
    type Context = FloatContext;

    fn context(&self) -> FloatContext {
        self.ctx
    }

    fn from_exact(x: &GaussianRational, ctx: &FloatContext) -> Self {
        BigComplex::new(x.to_complex(ctx.prec), *ctx)
    }

    fn is_zero(&self) -> bool {
        if self.value.is_zero() {
            return true;
        }
        let threshold = Float::with_val(MAGNITUDE_BITS, &self.scale >> self.ctx.negligible_bits());
        self.abs_low() <= threshold
    }

    fn add(&self, rhs: &Self) -> Self {
        let v = Complex::with_val(self.ctx.prec, &self.value + &rhs.value);
        let s = Float::with_val(MAGNITUDE_BITS, &self.scale + &rhs.scale);
        BigComplex::with_scale(v, s, self.ctx)
    }

    fn sub(&self, rhs: &Self) -> Self {
        let v = Complex::with_val(self.ctx.prec, &self.value - &rhs.value);
        let s = Float::with_val(MAGNITUDE_BITS, &self.scale + &rhs.scale);
        BigComplex::with_scale(v, s, self.ctx)
    }

    fn mul(&self, rhs: &Self) -> Self {
        let v = Complex::with_val(self.ctx.prec, &self.value * &rhs.value);
        let s = Float::with_val(MAGNITUDE_BITS, &self.scale * &rhs.scale);
        BigComplex::with_scale(v, s, self.ctx)
    }

    fn neg(&self) -> Self {
        BigComplex {
            value: Complex::with_val(self.ctx.prec, -&self.value),
            scale: self.scale.clone(),
            ctx: self.ctx,
        }
    }

    fn div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        let v = Complex::with_val(self.ctx.prec, &self.value / &rhs.value);
        let d = rhs.abs_low();
        // relative condition of the divisor enters as scale/|rhs|
        let s = (&self.scale / &d).complete(MAGNITUDE_BITS) * (&rhs.scale / &d).complete(MAGNITUDE_BITS);
        Some(BigComplex::with_scale(v, s, self.ctx))
    }

    fn to_complex(&self, prec: u32) -> Complex {
        Complex::with_val(prec, &self.value)
    }

    fn to_json(&self) -> Value {
        json!({
            "re": format_float(self.value.real()),
            "im": format_float(self.value.imag()),
        })
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let diff = Complex::with_val(self.ctx.prec, &self.value - &other.value);
        let d = Float::with_val(MAGNITUDE_BITS, diff.abs_ref());
        let bound = if self.scale > other.scale { &self.scale } else { &other.scale };
        let tol = Float::with_val(MAGNITUDE_BITS, bound >> (self.ctx.negligible_bits() - 8));
        d <= tol
    }
}

/// Fixed-width decimal rendering of a multiprecision float.
pub fn format_float(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let rounded = Float::with_val_round(x.prec(), x, Round::Nearest).0;
    rounded.to_string_radix(10, Some(FLOAT_PRINT_DIGITS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(re: i64, im: i64, ctx: FloatContext) -> BigComplex {
        BigComplex::from_exact(&GaussianRational::from_ints(re, im), &ctx)
    }

    #[test]
    fn cancellation_is_zero() {
        let ctx = FloatContext::new(128);
        let third = BigComplex::from_exact(&GaussianRational::from_fracs((1, 3), (0, 1)), &ctx);
        let three = f(3, 0, ctx);
        let one = f(1, 0, ctx);
        let r = third.mul(&three).sub(&one);
        assert!(r.is_zero());
        assert!(!third.is_zero());
    }

    #[test]
    fn large_cancellation_relative_to_scale() {
        let ctx = FloatContext::new(128);
        let big = BigComplex::from_exact(&GaussianRational::from_fracs((1, 7), (0, 1)), &ctx)
            .mul(&f(1_000_000_000_000, 0, ctx));
        let small = f(1, 0, ctx);
        // (big + small) - big leaves exactly `small` which is not noise
        let r = big.add(&small).sub(&big);
        assert!(!r.is_zero());
        assert!(r.approx_eq(&small));
    }

    #[test]
    fn exact_backend_roundtrip() {
        let x = GaussianRational::from_fracs((1, 2), (-2, 3));
        assert_eq!(<GaussianRational as Coefficient>::from_exact(&x, &()), x);
        assert_eq!(x.to_json(), json!({"re": "1/2", "im": "-2/3"}));
        assert!(x.div(&GaussianRational::zero()).is_none());
    }

    #[test]
    fn float_json_is_fixed_width() {
        let ctx = FloatContext::new(256);
        let v = f(-6, 0, ctx).to_json();
        assert_eq!(v["im"], "0");
        assert!(v["re"].as_str().unwrap().starts_with("-6.0000"));
    }
}
