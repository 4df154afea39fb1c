//! Exact scalars and the exact-or-approximate [`Real`] used for norm values.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^-k`.
pub fn dyadic(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.contains('.') || t.contains('e') || t.contains('E') {
        return Err(Error::Input(format!(
            "expected a rational string like \"3/2\", got {s:?}"
        )));
    }
    Rational::from_str(t).map_err(|_| Error::Input(format!("cannot parse rational {s:?}")))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // ratio of huge integers; scale both down
        let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
        let n = (q.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
        let d = (q.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact conversion of a finite `f64`.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Input(format!("non-finite value {x}")))
}

/// Decimal rendering with `sig` significant digits, rounding half to even.
pub fn format_decimal(q: &Rational, sig: u32) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let neg = q.is_negative();
    let a = q.abs();
    let ten = BigInt::from(10);
    // exponent e with 10^e <= a < 10^(e+1)
    let mut e: i64 = (a.numer().bits() as i64 - a.denom().bits() as i64) * 3 / 10;
    let pow10 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), k as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(ten.clone(), (-k) as usize))
        }
    };
    while pow10(e) > a {
        e -= 1;
    }
    while pow10(e + 1) <= a {
        e += 1;
    }
    let scaled = &a * pow10(sig as i64 - 1 - e);
    let floor = scaled.floor().to_integer();
    let frac = &scaled - Rational::from_integer(floor.clone());
    let half = ratio(1, 2);
    let mut digits = match frac.cmp(&half) {
        Ordering::Less => floor,
        Ordering::Greater => floor + 1,
        Ordering::Equal => {
            if !floor.bit(0) {
                floor
            } else {
                floor + 1
            }
        }
    };
    if digits == num_traits::pow(ten.clone(), sig as usize) {
        digits /= &ten;
        e += 1;
    }
    let mut ds = digits.to_str_radix(10);
    debug_assert_eq!(ds.len(), sig as usize);
    let sign = if neg { "-" } else { "" };
    if (-6..sig as i64).contains(&e) {
        let s = if e >= 0 {
            let int_len = e as usize + 1;
            let (i, f) = ds.split_at(int_len);
            format!("{i}.{f}")
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), ds)
        };
        let s = s.trim_end_matches('0').trim_end_matches('.');
        format!("{sign}{s}")
    } else {
        let rest = ds.split_off(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{sign}{ds}e{e}")
        } else {
            format!("{sign}{ds}.{rest}e{e}")
        }
    }
}

/// A nonnegative real produced by a norm or gauge: exact when the
/// computation stayed in rational arithmetic, otherwise a float.
#[derive(Debug, Clone, PartialEq)]
pub enum Real {
    Exact(Rational),
    Approx(f64),
}

impl Real {
    pub fn zero() -> Self {
        Real::Exact(Rational::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Real::Exact(q) => Some(q),
            Real::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => to_f64(q),
            Real::Approx(x) => *x,
        }
    }

    pub fn add(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a + b),
            _ => Real::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn scale(&self, c: &Rational) -> Real {
        match self {
            Real::Exact(a) => Real::Exact(a * c),
            Real::Approx(x) => Real::Approx(x * to_f64(c)),
        }
    }

    /// `self >= bound - tol`; exact comparison when both sides are exact.
    pub fn at_least(&self, bound: &Rational, tol: f64) -> bool {
        match self {
            Real::Exact(a) if tol == 0.0 => a >= bound,
            Real::Exact(a) if a >= bound => true,
            _ => self.to_f64() >= to_f64(bound) - tol,
        }
    }

    /// `self <= bound + tol`.
    pub fn at_most(&self, bound: &Rational, tol: f64) -> bool {
        match self {
            Real::Exact(a) if tol == 0.0 => a <= bound,
            Real::Exact(a) if a <= bound => true,
            _ => self.to_f64() <= to_f64(bound) + tol,
        }
    }

    /// Exact order when both sides are exact, float order otherwise.
    pub fn total_cmp(&self, other: &Real) -> Ordering {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }

    /// `|self - value| <= tol`.
    pub fn close_to(&self, value: &Rational, tol: f64) -> bool {
        self.at_least(value, tol) && self.at_most(value, tol)
    }

    /// Serialized form: rational string when exact, float literal otherwise.
    /// The float form always contains `.`, `e`, `inf` or `NaN`, so the two
    /// cannot be confused on the way back in.
    pub fn to_string_repr(&self) -> String {
        match self {
            Real::Exact(q) => q.to_string(),
            Real::Approx(x) => format!("{x:?}"),
        }
    }

    pub fn parse(s: &str) -> Result<Real> {
        let t = s.trim();
        if t.contains('.') || t.contains('e') || t.contains("inf") || t.contains("NaN") {
            t.parse::<f64>()
                .map(Real::Approx)
                .map_err(|_| Error::Input(format!("cannot parse real {s:?}")))
        } else {
            parse_rational(t).map(Real::Exact)
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => write!(f, "{q}"),
            Real::Approx(x) => write!(f, "{x}"),
        }
    }
}
