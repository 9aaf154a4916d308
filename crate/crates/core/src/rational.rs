//! Exact rational helpers shared by the engines.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: impl Into<BigInt>) -> Rational {
    Rational::from_integer(v.into())
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Parses `"7"`, `"-3"`, `"0.647"` or `"num/den"`.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::validation(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        None => match s.split_once('.') {
            None => s.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad()),
            Some((whole, frac)) => {
                if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
                Ok(Rational::new(digits, num_traits::pow(BigInt::from(10), frac.len())))
            }
        },
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::validation(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Canonical `"num/den"` form (always with a denominator, reduced).
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Human-facing form: integers bare, fractions with a decimal hint.
pub fn short(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{} (~{:.3})", format(r), to_f64(r))
    }
}

/// Largest integer `n` with `n <= r`, clamped into `u64` (negative values map to 0).
pub fn floor_u64(r: &Rational) -> u64 {
    let f = r.floor().to_integer();
    if f.is_negative() {
        0
    } else {
        f.to_u64().unwrap_or(u64::MAX)
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Serializes a rational as its `"num/den"` string.
pub mod serde_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::{self, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        rational::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse(" 3 ").unwrap(), int(3));
        assert_eq!(parse("0.647").unwrap(), ratio(647, 1000));
        assert_eq!(parse("1.5").unwrap(), ratio(3, 2));
        assert!(parse("1.").is_err());
        assert_eq!(format(&int(1)), "1/1");
        assert_eq!(format(&ratio(6, 4)), "3/2");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn floor_clamps() {
        assert_eq!(floor_u64(&ratio(7, 2)), 3);
        assert_eq!(floor_u64(&ratio(-1, 2)), 0);
        assert_eq!(floor_u64(&int(4)), 4);
    }

    #[test]
    fn float_conversion_is_exact() {
        assert_eq!(from_f64(0.375), ratio(3, 8));
        assert_eq!(lcm_of_denominators(&[ratio(1, 4), ratio(1, 6)]), BigInt::from(12));
    }
}
