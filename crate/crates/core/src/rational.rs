//! Exact scalars: arbitrary-precision rationals and rational multiples of
//! powers of π (circle circumferences, fiber and subtorus integrals).

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"` or `"p"`; whitespace around the parts is ignored.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|e| format!("`{text}`: {e}"))?;
            let q = BigInt::from_str(q.trim()).map_err(|e| format!("`{text}`: {e}"))?;
            if q.is_zero() {
                return Err(format!("`{text}`: zero denominator"));
            }
            Rational::new(p, q)
        }
        None => Rational::from_integer(
            BigInt::from_str(text).map_err(|e| format!("`{text}`: {e}"))?,
        ),
    };
    Ok(parsed)
}

/// Always renders as `p/q`, including integers (`3/1`).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter for `Vec<Rational>` as a list of `"p/q"` strings.
pub mod serde_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = values.iter().map(format_rational).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|s| parse_rational(s).map_err(de::Error::custom))
            .collect()
    }
}

/// `coeff · π^pi_power`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiMultiple {
    pub coeff: Rational,
    pub pi_power: u32,
}

impl PiMultiple {
    pub fn rational(coeff: Rational) -> Self {
        PiMultiple { coeff, pi_power: 0 }
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn two_pi() -> Self {
        PiMultiple {
            coeff: int(2),
            pi_power: 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.coeff.is_positive()
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        let coeff = &self.coeff * factor;
        // zero carries no π power so that all zeros compare equal
        let pi_power = if coeff.is_zero() { 0 } else { self.pi_power };
        PiMultiple { coeff, pi_power }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.coeff) * std::f64::consts::PI.powi(self.pi_power as i32)
    }
}

impl Mul for &PiMultiple {
    type Output = PiMultiple;

    fn mul(self, rhs: &PiMultiple) -> PiMultiple {
        let coeff = &self.coeff * &rhs.coeff;
        let pi_power = if coeff.is_zero() {
            0
        } else {
            self.pi_power + rhs.pi_power
        };
        PiMultiple { coeff, pi_power }
    }
}

impl fmt::Display for PiMultiple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = format_rational(&self.coeff);
        match self.pi_power {
            0 => write!(f, "{c}"),
            1 => write!(f, "{c}*pi"),
            p => write!(f, "{c}*pi^{p}"),
        }
    }
}

impl FromStr for PiMultiple {
    type Err = String;

    /// Accepts `"3/2"`, `"pi"`, `"2pi"`, `"2*pi"`, `"1/2*pi^2"`.
    fn from_str(text: &str) -> Result<Self, String> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(pos) = compact.find("pi") else {
            return parse_rational(&compact).map(PiMultiple::rational);
        };
        let head = compact[..pos].trim_end_matches('*');
        let tail = &compact[pos + 2..];
        let coeff = if head.is_empty() {
            Rational::one()
        } else {
            parse_rational(head)?
        };
        let pi_power = if tail.is_empty() {
            1
        } else {
            tail.strip_prefix('^')
                .and_then(|p| p.parse::<u32>().ok())
                .ok_or_else(|| format!("`{text}`: malformed power of pi"))?
        };
        Ok(PiMultiple { coeff, pi_power }.scale(&Rational::one()))
    }
}

impl Serialize for PiMultiple {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PiMultiple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" -2 ").unwrap(), int(-2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn renders_integers_with_denominator() {
        assert_eq!(format_rational(&int(3)), "3/1");
        assert_eq!(format_rational(&rat(-4, 6)), "-2/3");
    }

    #[test]
    fn pi_multiples_round_trip() {
        for text in ["2/1*pi", "1/1", "1/2*pi^2", "-3/4*pi"] {
            let parsed: PiMultiple = text.parse().unwrap();
            assert_eq!(parsed.to_string(), text);
        }
        assert_eq!("2pi".parse::<PiMultiple>().unwrap(), PiMultiple::two_pi());
        assert_eq!("pi".parse::<PiMultiple>().unwrap().coeff, int(1));
        assert!("2pi^x".parse::<PiMultiple>().is_err());
    }

    #[test]
    fn products_of_two_pi_give_four_pi_squared() {
        let area = &PiMultiple::two_pi() * &PiMultiple::two_pi();
        assert_eq!(area.to_string(), "4/1*pi^2");
        assert!((area.to_f64() - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        let zero = area.scale(&int(0));
        assert_eq!(zero, PiMultiple::rational(int(0)));
    }
}
