//! Exact rational helpers shared by reports and the schedule arithmetic.

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{Integer, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

/// Small exact rationals: defects, distances and rates all have denominators
/// bounded by `n * |E|`.
pub type Rational = Ratio<i64>;

pub fn fmt_ratio<T: std::fmt::Display + Clone + Integer>(r: &Ratio<T>) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_big_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Argument(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(p, q))
    } else if let Some((ip, fp)) = s.split_once('.') {
        // finite decimal literal
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches('-');
        let digits = format!("{ip}{fp}");
        let p: BigInt = digits.parse().map_err(|_| bad())?;
        let q = num::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(p, q);
        Ok(if neg { -r } else { r })
    } else {
        let p: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(p))
    }
}

pub fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// `floor(c * t)` as an i64, or an error when it does not fit.
pub fn floor_mul(c: &BigRational, t: i64) -> Result<i64> {
    let v = (c * BigRational::from_integer(BigInt::from(t))).floor();
    v.to_integer().to_i64().ok_or(Error::Overflow("radius"))
}

pub fn ceil_i64(c: &BigRational) -> Result<i64> {
    c.ceil().to_integer().to_i64().ok_or(Error::Overflow("ceil"))
}

pub fn to_f64(c: &BigRational) -> f64 {
    let n = c.numer().to_f64().unwrap_or(f64::INFINITY);
    let d = c.denom().to_f64().unwrap_or(f64::INFINITY);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // crude but sufficient for display of huge schedule values
        let bits = c.numer().bits() as i64 - c.denom().bits() as i64;
        let sign = if c.is_negative() { -1.0 } else { 1.0 };
        sign * 2f64.powi(bits.clamp(-1000, 1000) as i32)
    }
}

pub mod serde_ratio {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_ratio(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        let r = parse_big_rational(&s).map_err(serde::de::Error::custom)?;
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(p), Some(q)) => Ok(Rational::new(p, q)),
            _ => Err(serde::de::Error::custom("rational out of range")),
        }
    }
}

pub mod serde_big_ratio {
    use super::*;
    use serde::de::Error as _;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_ratio(r))
    }

    /// Accepts either a JSON string (`"3/2"`, `"7"`, `"0.5"`) or a JSON number.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let s = match v {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(D::Error::custom(format!("expected rational, got {other}"))),
        };
        parse_big_rational(&s).map_err(D::Error::custom)
    }
}

pub mod serde_opt_big_ratio {
    use super::*;

    pub fn serialize<S: Serializer>(
        r: &Option<BigRational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&fmt_ratio(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BigRational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "serde_big_ratio")] BigRational);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse_big_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_big_rational("-0.25").unwrap(), BigRational::new((-1).into(), 4.into()));
        assert_eq!(parse_big_rational("12").unwrap(), BigRational::from_integer(12.into()));
        assert!(parse_big_rational("1/0").is_err());
        assert!(parse_big_rational("x").is_err());
    }

    #[test]
    fn floor_mul_rounds_down() {
        let c = parse_big_rational("5/2").unwrap();
        assert_eq!(floor_mul(&c, 3).unwrap(), 7);
        assert_eq!(fmt_ratio(&Rational::new(6, 4)), "3/2");
    }
}
