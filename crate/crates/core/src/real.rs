//! Arbitrary-precision reals and the precision context shared by every
//! numerical routine.
//!
//! [`Real`] is a thin newtype over an MPFR float. Binary operations between
//! two `Real`s are carried out at the larger of the two precisions; operations
//! with `f64`/`i32` keep the precision of the `Real` operand.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(Float);

impl Real {
    pub fn from_f64(prec: u32, x: f64) -> Self {
        Real(Float::with_val(prec, x))
    }

    pub fn from_int(prec: u32, n: i64) -> Self {
        Real(Float::with_val(prec, n))
    }

    pub fn zero(prec: u32) -> Self {
        Real(Float::new(prec))
    }

    pub fn one(prec: u32) -> Self {
        Real::from_f64(prec, 1.0)
    }

    pub fn pi(prec: u32) -> Self {
        Real(Float::with_val(prec, Constant::Pi))
    }

    /// Parses a decimal literal, rounding to `prec` bits.
    pub fn parse(prec: u32, text: &str) -> Result<Self> {
        let parsed = Float::parse(text.trim())
            .map_err(|e| Error::InvalidArgument(format!("cannot parse {text:?} as a real: {e}")))?;
        Ok(Real(Float::with_val(prec, parsed)))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    /// The same value rounded (or padded) to `prec` bits.
    pub fn to_prec(&self, prec: u32) -> Self {
        Real(Float::with_val(prec, &self.0))
    }

    pub fn from_float(f: Float) -> Self {
        Real(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    pub fn abs(&self) -> Self {
        Real(self.0.clone().abs())
    }

    pub fn sqrt(&self) -> Self {
        Real(self.0.clone().sqrt())
    }

    pub fn cbrt(&self) -> Self {
        Real(self.0.clone().cbrt())
    }

    pub fn square(&self) -> Self {
        Real(self.0.clone().square())
    }

    pub fn recip(&self) -> Self {
        Real(self.0.clone().recip())
    }

    pub fn sin(&self) -> Self {
        Real(self.0.clone().sin())
    }

    pub fn cos(&self) -> Self {
        Real(self.0.clone().cos())
    }

    pub fn tan(&self) -> Self {
        Real(self.0.clone().tan())
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = self.0.clone();
        let mut c = Float::new(self.prec());
        s.sin_cos_mut(&mut c);
        (Real(s), Real(c))
    }

    pub fn asin(&self) -> Self {
        Real(self.0.clone().asin())
    }

    pub fn atan(&self) -> Self {
        Real(self.0.clone().atan())
    }

    /// Angle of the vector `(x, self)`, in `(-π, π]`.
    pub fn atan2(&self, x: &Real) -> Self {
        let prec = self.prec().max(x.prec());
        Real(Float::with_val(prec, &self.0).atan2(&x.0))
    }

    pub fn exp(&self) -> Self {
        Real(self.0.clone().exp())
    }

    pub fn ln(&self) -> Self {
        Real(self.0.clone().ln())
    }

    pub fn log10(&self) -> Self {
        Real(self.0.clone().log10())
    }

    pub fn powf(&self, e: &Real) -> Self {
        let prec = self.prec().max(e.prec());
        Real(Float::with_val(prec, &self.0).pow(&e.0))
    }

    pub fn powi(&self, n: i32) -> Self {
        Real(self.0.clone().pow(n))
    }

    pub fn floor(&self) -> Self {
        Real(self.0.clone().floor())
    }

    pub fn round(&self) -> Self {
        Real(self.0.clone().round())
    }

    pub fn max(self, other: Real) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Real) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `self` reduced into `[0, period)`.
    pub fn rem_euclid(&self, period: &Real) -> Self {
        let k = (self / period).floor();
        let r = self - &(k * period);
        if r < 0.0 {
            r + period
        } else if &r >= period {
            r - period
        } else {
            r
        }
    }

    /// Binary exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        self.0.get_exp()
    }

    /// Scientific decimal representation with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        self.0.to_string_radix(10, Some(digits.max(2)))
    }

    /// Number of decimal digits that represent this precision without loss.
    pub fn full_digits(&self) -> usize {
        decimal_digits(self.prec())
    }
}

/// Decimal digits needed to round-trip a `bits`-bit mantissa.
pub fn decimal_digits(bits: u32) -> usize {
    (f64::from(bits) * std::f64::consts::LOG10_2).ceil() as usize + 2
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{}", self.to_decimal(p)),
            None => write!(f, "{}", self.to_decimal(self.full_digits())),
        }
    }
}

impl PartialEq<f64> for Real {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for Real {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

macro_rules! real_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                let prec = self.prec().max(rhs.prec());
                Real(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let prec = self.prec().max(rhs.prec());
                Real(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                let prec = self.prec().max(rhs.prec());
                Real(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let prec = self.prec().max(rhs.prec());
                Real(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl $tr<f64> for Real {
            type Output = Real;
            fn $method(self, rhs: f64) -> Real {
                Real(self.0 $op rhs)
            }
        }
        impl $tr<f64> for &Real {
            type Output = Real;
            fn $method(self, rhs: f64) -> Real {
                Real(Float::with_val(self.prec(), &self.0 $op rhs))
            }
        }
        impl $tr<Real> for f64 {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                Real(Float::with_val(rhs.prec(), self $op &rhs.0))
            }
        }
        impl $tr<&Real> for f64 {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real(Float::with_val(rhs.prec(), self $op &rhs.0))
            }
        }
    };
}

real_binop!(Add, add, +);
real_binop!(Sub, sub, -);
real_binop!(Mul, mul, *);
real_binop!(Div, div, /);

macro_rules! real_assign {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<Real> for Real {
            fn $method(&mut self, rhs: Real) {
                if rhs.prec() > self.prec() {
                    self.0.set_prec(rhs.prec());
                }
                self.0 $op rhs.0;
            }
        }
        impl $tr<&Real> for Real {
            fn $method(&mut self, rhs: &Real) {
                if rhs.prec() > self.prec() {
                    self.0.set_prec(rhs.prec());
                }
                self.0 $op &rhs.0;
            }
        }
        impl $tr<f64> for Real {
            fn $method(&mut self, rhs: f64) {
                self.0 $op rhs;
            }
        }
    };
}

real_assign!(AddAssign, add_assign, +=);
real_assign!(SubAssign, sub_assign, -=);
real_assign!(MulAssign, mul_assign, *=);
real_assign!(DivAssign, div_assign, /=);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(Float::with_val(self.prec(), -&self.0))
    }
}

/// Complex number with [`Real`] parts. Only the handful of operations the
/// series algebra needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Complex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Complex::new(Real::zero(prec), Real::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        Complex::new(Real::one(prec), Real::zero(prec))
    }

    pub fn from_real(re: Real) -> Self {
        let prec = re.prec();
        Complex::new(re, Real::zero(prec))
    }

    /// `e^{iθ}`.
    pub fn cis(theta: &Real) -> Self {
        let (s, c) = theta.sin_cos();
        Complex::new(c, s)
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn to_prec(&self, prec: u32) -> Self {
        Complex::new(self.re.to_prec(prec), self.im.to_prec(prec))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> Real {
        self.re.square() + self.im.square()
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: &Real) -> Self {
        Complex::new(&self.re * k, &self.im * k)
    }

    pub fn scale_f64(&self, k: f64) -> Self {
        Complex::new(&self.re * k, &self.im * k)
    }

    pub fn div_f64(&self, k: f64) -> Self {
        Complex::new(&self.re / k, &self.im / k)
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        Complex::new(-&self.im, self.re.clone())
    }

    pub fn add(&self, o: &Complex) -> Self {
        Complex::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Complex) -> Self {
        Complex::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &Complex) -> Self {
        Complex::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn div(&self, o: &Complex) -> Self {
        let d = o.norm_sqr();
        Complex::new(
            (&self.re * &o.re + &self.im * &o.im) / &d,
            (&self.im * &o.re - &self.re * &o.im) / &d,
        )
    }

    pub fn neg(&self) -> Self {
        Complex::new(-&self.re, -&self.im)
    }

    /// `self += a * b`, fused and without temporaries.
    pub fn add_mul(&mut self, a: &Complex, b: &Complex) {
        self.re.0 += &a.re.0 * &b.re.0;
        self.re.0 -= &a.im.0 * &b.im.0;
        self.im.0 += &a.re.0 * &b.im.0;
        self.im.0 += &a.im.0 * &b.re.0;
    }

    /// `self -= a * b`.
    pub fn sub_mul(&mut self, a: &Complex, b: &Complex) {
        self.re.0 -= &a.re.0 * &b.re.0;
        self.re.0 += &a.im.0 * &b.im.0;
        self.im.0 -= &a.re.0 * &b.im.0;
        self.im.0 -= &a.im.0 * &b.re.0;
    }

    /// `self += a * k` for a real factor.
    pub fn add_mul_real(&mut self, a: &Complex, k: &Real) {
        self.re.0 += &a.re.0 * &k.0;
        self.im.0 += &a.im.0 * &k.0;
    }

    pub fn sub_assign(&mut self, o: &Complex) {
        self.re -= &o.re;
        self.im -= &o.im;
    }

    pub fn add_assign(&mut self, o: &Complex) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

/// Working precision and the tolerances derived from it.
#[derive(Clone, Debug)]
pub struct RealContext {
    bits: u32,
    eps: Real,
    solver_tol: Real,
    pi: Real,
}

impl RealContext {
    pub const MIN_BITS: u32 = 64;

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::InvalidArgument(format!(
                "mantissa_bits must be at least {}, got {bits}",
                Self::MIN_BITS
            )));
        }
        let eps = pow2(bits, -(bits as i64));
        let solver_tol = pow2(bits, -((bits / 2) as i64));
        Ok(RealContext {
            bits,
            eps,
            solver_tol,
            pi: Real::pi(bits),
        })
    }

    /// Overrides the derived solver tolerance; it must stay within `(eps, 1)`.
    pub fn with_solver_tol(mut self, tol: f64) -> Result<Self> {
        let tol = Real::from_f64(self.bits, tol);
        if tol <= self.eps || tol >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance {tol:?} must lie in (eps, 1)"
            )));
        }
        self.solver_tol = tol;
        Ok(self)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn eps(&self) -> &Real {
        &self.eps
    }

    pub fn solver_tol(&self) -> &Real {
        &self.solver_tol
    }

    pub fn pi(&self) -> Real {
        self.pi.clone()
    }

    pub fn two_pi(&self) -> Real {
        &self.pi * 2.0
    }

    pub fn real(&self, x: f64) -> Real {
        Real::from_f64(self.bits, x)
    }

    pub fn int(&self, n: i64) -> Real {
        Real::from_int(self.bits, n)
    }

    pub fn zero(&self) -> Real {
        Real::zero(self.bits)
    }

    pub fn one(&self) -> Real {
        Real::one(self.bits)
    }

    pub fn parse(&self, text: &str) -> Result<Real> {
        Real::parse(self.bits, text)
    }

    /// Rational `num / den` at working precision.
    pub fn ratio(&self, num: i64, den: i64) -> Real {
        self.int(num) / self.int(den)
    }

    /// Doubles the precision, keeping an overridden solver tolerance relative.
    pub fn doubled(&self) -> Self {
        RealContext::new(self.bits * 2).expect("doubling keeps bits above the minimum")
    }
}

/// `2^e` at precision `prec`.
pub fn pow2(prec: u32, e: i64) -> Real {
    let mut x = Float::with_val(prec, 1);
    if e >= 0 {
        x <<= e as u32;
    } else {
        x >>= (-e) as u32;
    }
    Real(x)
}
