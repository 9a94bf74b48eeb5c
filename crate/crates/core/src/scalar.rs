//! Exact complex scalars: rational real and imaginary parts.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Binary64 complex number, used by the float backend.
pub type ComplexDouble = Complex64;

/// A complex number with exact rational real and imaginary parts.
///
/// This is the coefficient field for every polynomial in the crate. All
/// arithmetic is exact; there is no rounding anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussianRational {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    /// Exact rational `num/den`. Panics if `den == 0`.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        GaussianRational {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    /// `(a + b*i)/den` from machine integers.
    pub fn from_parts(a: i64, b: i64, den: i64) -> Self {
        GaussianRational {
            re: BigRational::new(BigInt::from(a), BigInt::from(den)),
            im: BigRational::new(BigInt::from(b), BigInt::from(den)),
        }
    }

    pub fn real(r: BigRational) -> Self {
        GaussianRational {
            re: r,
            im: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Squared modulus, exact.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        assert!(!n.is_zero(), "division by zero GaussianRational");
        GaussianRational {
            re: &self.re / &n,
            im: -&self.im / &n,
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = GaussianRational::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Nearest binary64 value; safe for rationals of any height.
    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    /// Modulus as f64 (for deviation reports).
    pub fn modulus_f64(&self) -> f64 {
        self.to_complex64().norm()
    }

    /// Exact rational square root when one exists.
    pub fn sqrt_exact(&self) -> Option<GaussianRational> {
        if !self.is_real() || self.re.is_negative() {
            return None;
        }
        let num = self.re.numer().sqrt();
        let den = self.re.denom().sqrt();
        if &num * &num == *self.re.numer() && &den * &den == *self.re.denom() {
            Some(GaussianRational::real(BigRational::new(num, den)))
        } else {
            None
        }
    }
}

/// Nearest f64 for a big rational, robust against numerator/denominator
/// overflowing the double range (plain num/den would give inf/inf = NaN).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num_bits = r.numer().bits() as i64;
    let den_bits = r.denom().bits() as i64;
    // Keep both parts comfortably inside f64 range by a common power of two.
    let shift = (num_bits.max(den_bits) - 512).max(0) as u64;
    let num = r.numer() >> shift;
    let den = r.denom() >> shift;
    let nf = num.to_f64().unwrap_or(f64::NAN);
    let df = den.to_f64().unwrap_or(f64::NAN);
    if df == 0.0 {
        // Denominator underflowed the shift; the value is astronomically large.
        return if nf >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    nf / df
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
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
        self * &rhs.inv()
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GaussianRational {
    /// Canonical form accepted back by the expression parser:
    /// `3`, `-3/5`, `i`, `-1/2*i`, `3/5+4/5*i`, `3/5-4/5*i`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", fmt_rational(&self.re));
        }
        let im_part = |im: &BigRational| -> String {
            if im.is_one() {
                "i".to_string()
            } else if (-im).is_one() {
                "-i".to_string()
            } else {
                format!("{}*i", fmt_rational(im))
            }
        };
        if self.re.is_zero() {
            return write!(f, "{}", im_part(&self.im));
        }
        if self.im.is_negative() {
            let pos = -self.im.clone();
            let tail = if pos.is_one() {
                "i".to_string()
            } else {
                format!("{}*i", fmt_rational(&pos))
            };
            write!(f, "{}-{}", fmt_rational(&self.re), tail)
        } else {
            write!(f, "{}+{}", fmt_rational(&self.re), im_part(&self.im))
        }
    }
}
