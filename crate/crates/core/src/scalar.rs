//! Exact Gaussian-rational scalars.
//!
//! Every coefficient in the engine is a complex number with rational real and
//! imaginary parts. Arithmetic never rounds; conversion to `f64` happens only
//! at the numeric boundary (spectrum evaluation and the matrix oracle).

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Complex number over the rationals.
pub type GaussianRational = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn real(r: BigRational) -> GaussianRational {
    Complex::new(r, BigRational::zero())
}

pub fn gr(n: i64, d: i64) -> GaussianRational {
    real(rat(n, d))
}

pub fn int(n: i64) -> GaussianRational {
    gr(n, 1)
}

/// The imaginary unit.
pub fn imag_unit() -> GaussianRational {
    Complex::new(BigRational::zero(), BigRational::one())
}

pub fn is_real(c: &GaussianRational) -> bool {
    c.im.is_zero()
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn to_c64(c: &GaussianRational) -> Complex64 {
    Complex64::new(rational_to_f64(&c.re), rational_to_f64(&c.im))
}

/// `i^n` for non-negative `n`.
pub fn i_pow(n: usize) -> GaussianRational {
    match n % 4 {
        0 => int(1),
        1 => imag_unit(),
        2 => int(-1),
        _ => -imag_unit(),
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `e (e-1) ... (e-k+1)`, zero when `k > e`.
pub fn falling_factorial(e: u32, k: u32) -> BigInt {
    if k > e {
        return BigInt::zero();
    }
    ((e - k + 1)..=e).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    falling_factorial(n, k) / factorial(k)
}

/// Parses `"p"` or `"p/q"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse {
        offset: 0,
        message: format!("invalid rational literal {s:?}"),
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse {
                    offset: 0,
                    message: format!("zero denominator in {s:?}"),
                });
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// Canonical `p/q` text (`p` alone when the denominator is one).
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Human-readable Gaussian rational, e.g. `3/2`, `-i/4`, `(1+2i)`.
pub fn format_gaussian(c: &GaussianRational) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => format_rational(&c.re),
        (true, false) => {
            if c.im.is_one() {
                "i".to_string()
            } else if (-c.im.clone()).is_one() {
                "-i".to_string()
            } else {
                format!("{}i", format_rational(&c.im))
            }
        }
        (false, false) => {
            let sign = if c.im.is_negative() { '-' } else { '+' };
            format!(
                "({}{}{}i)",
                format_rational(&c.re),
                sign,
                format_rational(&c.im.abs())
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trip() {
        for s in ["0", "7", "-3/4", "12/5"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(format_rational(&parse_rational("6/4").unwrap()), "3/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }

    #[test]
    fn exact_field_operations() {
        let a = Complex::new(rat(1, 3), rat(-2, 5));
        let b = Complex::new(rat(7, 2), rat(1, 1));
        let q = &a / &b;
        assert_eq!(&q * &b, a);
        assert_eq!(i_pow(2), int(-1));
        assert_eq!(i_pow(7), -imag_unit());
    }

    #[test]
    fn combinatorics() {
        assert_eq!(falling_factorial(5, 2), BigInt::from(20));
        assert_eq!(falling_factorial(2, 3), BigInt::zero());
        assert_eq!(binomial(6, 3), BigInt::from(20));
        assert_eq!(factorial(0), BigInt::one());
    }

    #[test]
    fn gaussian_formatting() {
        assert_eq!(format_gaussian(&gr(3, 2)), "3/2");
        assert_eq!(format_gaussian(&-imag_unit()), "-i");
        assert_eq!(
            format_gaussian(&Complex::new(rat(1, 1), rat(-2, 1))),
            "(1-2i)"
        );
    }
}
