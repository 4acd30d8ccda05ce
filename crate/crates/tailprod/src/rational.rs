//! Exact rational helpers: parsing, formatting, serde adapters and
//! rational powers with integer root extraction.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Parses `"p/q"` or a plain integer string into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, RationalParseError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let p = BigInt::from_str(num).map_err(|_| RationalParseError(s.to_string()))?;
    let q = match den {
        Some(d) => BigInt::from_str(d).map_err(|_| RationalParseError(s.to_string()))?,
        None => BigInt::one(),
    };
    if q.is_zero() {
        return Err(RationalParseError(s.to_string()));
    }
    Ok(BigRational::new(p, q))
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid rational literal: {0:?} (expected integer or \"p/q\")")]
pub struct RationalParseError(pub String);

/// Canonical string form: `"p/q"` for non-integers, plain integer otherwise.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering used in reports.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders `p/q (≈ decimal)` with six significant digits for human output.
pub fn human_rational(r: &BigRational) -> String {
    let d = rational_to_f64(r);
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{} (≈ {:.6})", format_rational(r), d)
    }
}

/// Exact `base^exp` for rational exponent, when the result is rational.
///
/// Returns `None` when the q-th roots of numerator/denominator are not
/// integers (result irrational). `base` must be positive.
pub fn rational_pow(base: &BigRational, exp: &BigRational) -> Option<BigRational> {
    assert!(base.is_positive(), "rational_pow requires a positive base");
    if exp.is_zero() || base.is_one() {
        return Some(BigRational::one());
    }
    let (exp, invert) = if exp.is_negative() {
        (-exp.clone(), true)
    } else {
        (exp.clone(), false)
    };
    let p = exp.numer().to_u32()?;
    let q = exp.denom().to_u32()?;
    let root_num = exact_nth_root(base.numer(), q)?;
    let root_den = exact_nth_root(base.denom(), q)?;
    let r = BigRational::new(root_num.pow(p), root_den.pow(p));
    Some(if invert { r.recip() } else { r })
}

fn exact_nth_root(v: &BigInt, q: u32) -> Option<BigInt> {
    if q == 1 {
        return Some(v.clone());
    }
    let r = v.nth_root(q);
    if &r.pow(q) == v {
        Some(r)
    } else {
        None
    }
}

/// Serde adapter: rational as `"p/q"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<BigRational>`.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = v.iter().map(format_rational).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

/// An exact rational together with its decimal rendering, for report JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalField(pub BigRational);

impl Serialize for RationalField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalField", 2)?;
        st.serialize_field("exact", &format_rational(&self.0))?;
        st.serialize_field("decimal", &rational_to_f64(&self.0))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RationalField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            exact: String,
        }
        let repr = Repr::deserialize(d)?;
        Ok(RationalField(
            parse_rational(&repr.exact).map_err(D::Error::custom)?,
        ))
    }
}

impl fmt::Display for RationalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.0))
    }
}

/// Extended non-negative value: exact rational, floating approximation, or +∞.
///
/// Moments and limit constants live here; `analyze` distinguishes an infinite
/// constant (a legal outcome) from a failed certification.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
    Infinite,
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational_to_f64(r),
            Value::Approx(v) => *v,
            Value::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, Value::Infinite)
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Infinite, _) | (_, Value::Infinite) => Value::Infinite,
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Approx(self.to_f64() * other.to_f64()),
        }
    }

    pub fn human(&self) -> String {
        match self {
            Value::Exact(r) => human_rational(r),
            Value::Approx(v) => format!("≈ {:.6e} (floating, rel. precision 1e-12)", v),
            Value::Infinite => "+inf".to_string(),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            Value::Exact(r) => {
                let mut st = s.serialize_struct("Value", 3)?;
                st.serialize_field("kind", "exact")?;
                st.serialize_field("exact", &format_rational(r))?;
                st.serialize_field("decimal", &rational_to_f64(r))?;
                st.end()
            }
            Value::Approx(v) => {
                let mut st = s.serialize_struct("Value", 2)?;
                st.serialize_field("kind", "approx")?;
                st.serialize_field("decimal", v)?;
                st.end()
            }
            Value::Infinite => {
                let mut st = s.serialize_struct("Value", 1)?;
                st.serialize_field("kind", "infinite")?;
                st.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            kind: String,
            exact: Option<String>,
            decimal: Option<f64>,
        }
        let repr = Repr::deserialize(d)?;
        match repr.kind.as_str() {
            "exact" => {
                let s = repr
                    .exact
                    .ok_or_else(|| D::Error::custom("missing exact field"))?;
                Ok(Value::Exact(parse_rational(&s).map_err(D::Error::custom)?))
            }
            "approx" => Ok(Value::Approx(
                repr.decimal
                    .ok_or_else(|| D::Error::custom("missing decimal field"))?,
            )),
            "infinite" => Ok(Value::Infinite),
            other => Err(D::Error::custom(format!("unknown value kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["-17/4", "3", "0", "21/16", "-7/8"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn rational_pow_exact_roots() {
        // 16^(3/4) = 8
        assert_eq!(
            rational_pow(&rat(16, 1), &rat(3, 4)).unwrap(),
            rat(8, 1)
        );
        // 2^(1/2) is irrational
        assert!(rational_pow(&rat(2, 1), &rat(1, 2)).is_none());
        // negative exponent inverts
        assert_eq!(
            rational_pow(&rat(4, 9), &rat(-1, 2)).unwrap(),
            rat(3, 2)
        );
        assert_eq!(
            rational_pow(&rat(5, 7), &BigRational::from_i64(0).unwrap()).unwrap(),
            rat(1, 1)
        );
    }
}
