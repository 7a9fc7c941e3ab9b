//! Gaussian rationals: the field Q(i) represented as exact pairs of
//! arbitrary-precision rationals.
//!
//! This is the coefficient field of every series in the crate. Conjugation
//! is a first-class operation because defining equations and maps are
//! conjugated coefficientwise throughout the geometry layer.

use alloc::string::{String, ToString};
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// An element a + b·i of Q(i), with `a`, `b` kept in reduced form by the
/// underlying rational type.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    re: BigRational,
    im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        GaussianRational { re: BigRational::one(), im: BigRational::zero() }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussianRational { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn from_integer(n: i64) -> Self {
        GaussianRational { re: BigRational::from_integer(BigInt::from(n)), im: BigRational::zero() }
    }

    /// num/den as a real rational; `den` must be nonzero.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        GaussianRational {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    /// num/den · i; `den` must be nonzero.
    pub fn from_ratio_imag(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::new(BigInt::from(num), BigInt::from(den)),
        }
    }

    /// Parses the real and imaginary parts from strings of the form "a" or
    /// "a/b" (signs allowed).
    pub fn parse_parts(re: &str, im: &str) -> Result<Self> {
        let parse = |s: &str| -> Result<BigRational> {
            s.trim()
                .parse::<BigRational>()
                .map_err(|_| Error::InvalidScalarLiteral { text: s.to_string() })
        };
        Ok(GaussianRational { re: parse(re)?, im: parse(im)? })
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational { re: self.re.clone(), im: -self.im.clone() }
    }

    /// |z|² = z·z̄ as a real rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm_sqr();
        Ok(GaussianRational { re: &self.re / &n, im: -&self.im / &n })
    }

    /// Renders "a/b" for the real part alone; panics if the value is not
    /// real. Used where a context demands a real scalar.
    pub fn expect_real(&self) -> Result<BigRational> {
        if self.is_real() {
            Ok(self.re.clone())
        } else {
            Err(Error::HypothesisNotMet {
                context: "real scalar expected",
                detail: self.to_string(),
            })
        }
    }
}

impl Default for GaussianRational {
    fn default() -> Self {
        GaussianRational::zero()
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Div for &GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        let inv = rhs.inv().expect("division by zero");
        self * &inv
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re.clone(), im: -self.im.clone() }
    }
}

macro_rules! forward_value_ops {
    ($($trait:ident :: $method:ident),*) => {$(
        impl $trait for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: GaussianRational) -> GaussianRational {
                $trait::$method(&self, &rhs)
            }
        }
    )*};
}
forward_value_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, rhs: &GaussianRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussianRational> for GaussianRational {
    fn sub_assign(&mut self, rhs: &GaussianRational) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&GaussianRational> for GaussianRational {
    fn mul_assign(&mut self, rhs: &GaussianRational) {
        *self = &*self * rhs;
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn imag_part(im: &BigRational) -> String {
            if im.is_one() {
                "i".to_string()
            } else if (-im).is_one() {
                "-i".to_string()
            } else {
                let mut s = im.to_string();
                s.push('i');
                s
            }
        }
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}", imag_part(&self.im))
        } else if self.im.is_negative() {
            write!(f, "{}{}", self.re, imag_part(&self.im))
        } else {
            write!(f, "{}+{}", self.re, imag_part(&self.im))
        }
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_arithmetic() {
        let a = GaussianRational::parse_parts("1/2", "3").unwrap();
        let b = GaussianRational::parse_parts("-2", "1/3").unwrap();
        let sum = &a + &b;
        assert_eq!(sum, GaussianRational::parse_parts("-3/2", "10/3").unwrap());
        let prod = &a * &b;
        // (1/2 + 3i)(-2 + i/3) = -1 - i - 6i + i²·... compute: re = -1 - 1 = -2, im = 1/6 - 6
        assert_eq!(prod, GaussianRational::parse_parts("-2", "-35/6").unwrap());
        let inv = a.inv().unwrap();
        assert!((&a * &inv).is_one());
    }

    #[test]
    fn conjugation_and_norm() {
        let z = GaussianRational::parse_parts("3/5", "-4/5").unwrap();
        assert_eq!(&z * &z.conj(), GaussianRational::one());
        assert!(z.norm_sqr().is_one());
        assert_eq!(z.conj().conj(), z);
    }

    #[test]
    fn zero_inverse_rejected() {
        assert_eq!(GaussianRational::zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn display_forms() {
        assert_eq!(GaussianRational::zero().to_string(), "0");
        assert_eq!(GaussianRational::from_ratio(3, 2).to_string(), "3/2");
        assert_eq!(GaussianRational::i().to_string(), "i");
        assert_eq!(GaussianRational::from_ratio_imag(-2, 1).to_string(), "-2i");
        assert_eq!(GaussianRational::parse_parts("1/2", "-1").unwrap().to_string(), "1/2-i");
        assert_eq!(GaussianRational::parse_parts("1", "2/7").unwrap().to_string(), "1+2/7i");
    }
}
