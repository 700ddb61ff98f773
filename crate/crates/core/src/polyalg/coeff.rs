//! Coefficient fields for [`Poly`](super::Poly): double-precision complex and
//! exact complex rationals.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::special::ln_factorial;

/// Exact complex rational.
pub type Exact = Complex<BigRational>;

pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn conj(&self) -> Self;
    fn from_u64(v: u64) -> Self;
    /// The real rational `num / den`.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// `v` must be exactly representable; exact mode converts the binary value.
    fn from_f64(v: f64) -> Result<Self>;
    fn from_complex64(v: Complex64) -> Result<Self>;
    fn to_complex64(&self) -> Complex64;
    /// `∫ |z|^{2a} dμ_n = a! / n^{a+1}`.
    fn gaussian_moment(a: u32, n: u32) -> Result<Self>;
    /// `n^{-k}` as a coefficient.
    fn inv_pow(n: u32, k: u32) -> Result<Self>;
    /// Multiplicative inverse of a nonzero value.
    fn recip(&self) -> Self;
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn from_u64(v: u64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }

    fn from_f64(v: f64) -> Result<Self> {
        Ok(Complex64::new(v, 0.0))
    }

    fn from_complex64(v: Complex64) -> Result<Self> {
        Ok(v)
    }

    fn to_complex64(&self) -> Complex64 {
        *self
    }

    fn gaussian_moment(a: u32, n: u32) -> Result<Self> {
        // log-space: a! and n^{a+1} overflow separately long before the ratio does
        let ln = ln_factorial(a) - (a as f64 + 1.0) * (n as f64).ln();
        let v = ln.exp();
        if !v.is_finite() || v == 0.0 {
            return Err(Error::Capacity(format!(
                "gaussian moment {a}!/{n}^{} not representable",
                a + 1
            )));
        }
        Ok(Complex64::new(v, 0.0))
    }

    fn inv_pow(n: u32, k: u32) -> Result<Self> {
        let v = (n as f64).powi(-(k as i32));
        if v == 0.0 || !v.is_finite() {
            return Err(Error::Capacity(format!("{n}^-{k} underflows")));
        }
        Ok(Complex64::new(v, 0.0))
    }

    fn recip(&self) -> Self {
        Complex::inv(self)
    }
}

impl Coeff for Exact {
    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }

    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn from_u64(v: u64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    fn from_f64(v: f64) -> Result<Self> {
        let re = BigRational::from_float(v)
            .ok_or_else(|| Error::InvalidArgument(format!("{v} has no rational value")))?;
        Ok(Complex::new(re, BigRational::zero()))
    }

    fn from_complex64(v: Complex64) -> Result<Self> {
        let re = BigRational::from_float(v.re);
        let im = BigRational::from_float(v.im);
        match (re, im) {
            (Some(re), Some(im)) => Ok(Complex::new(re, im)),
            _ => Err(Error::InvalidArgument(format!("{v} has no rational value"))),
        }
    }

    fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn gaussian_moment(a: u32, n: u32) -> Result<Self> {
        let mut num = BigInt::one();
        for k in 2..=a {
            num *= k;
        }
        let den = BigInt::from(n).pow(a + 1);
        Ok(Complex::new(BigRational::new(num, den), BigRational::zero()))
    }

    fn inv_pow(n: u32, k: u32) -> Result<Self> {
        Ok(Complex::new(
            BigRational::new(BigInt::one(), BigInt::from(n).pow(k)),
            BigRational::zero(),
        ))
    }

    fn recip(&self) -> Self {
        let d = self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone();
        Complex::new(self.re.clone() / d.clone(), -self.im.clone() / d)
    }
}

/// Binomial coefficient as an exact integer-valued coefficient.
pub fn binomial<C: Coeff>(n: u32, k: u32) -> C {
    if k > n {
        return C::zero();
    }
    let k = k.min(n - k);
    // running product stays integral: C(n, i+1) = C(n, i) (n-i) / (i+1)
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    C::from_u64(acc as u64)
}

/// Falling factorial `(r)_j = r (r-1) ... (r-j+1)`.
pub fn falling<C: Coeff>(r: u32, j: u32) -> C {
    let mut acc = C::one();
    for i in 0..j {
        if i >= r {
            return C::zero();
        }
        acc = acc * C::from_u64((r - i) as u64);
    }
    acc
}

pub fn pow_u<C: Coeff>(n: u32, k: u32) -> C {
    let mut acc = C::one();
    let base = C::from_u64(n as u64);
    for _ in 0..k {
        acc = acc * base.clone();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_agree_between_fields() {
        for a in 0..12 {
            for n in 1..6 {
                let f = Complex64::gaussian_moment(a, n).unwrap();
                let e = Exact::gaussian_moment(a, n).unwrap().to_complex64();
                assert!((f - e).norm() <= 1e-14 * e.norm());
            }
        }
    }

    #[test]
    fn float_moment_reports_capacity() {
        assert!(Complex64::gaussian_moment(4000, 1).is_err());
        assert!(Complex64::gaussian_moment(500, 400).is_ok());
    }

    #[test]
    fn binomial_and_falling() {
        assert_eq!(binomial::<Complex64>(5, 2).re, 10.0);
        assert_eq!(binomial::<Complex64>(3, 5).re, 0.0);
        assert_eq!(falling::<Complex64>(5, 3).re, 60.0);
        assert_eq!(falling::<Complex64>(2, 3).re, 0.0);
        assert_eq!(falling::<Complex64>(4, 0).re, 1.0);
    }
}
