//! Backend-tagged real numbers.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::enclosure::{FloatEnclosure, TriOrdering};
use crate::error::{Error, Result};

/// Arithmetic used for a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Exact rational arithmetic.
    Rational,
    /// Outward-rounded enclosures at `prec` bits.
    Float { prec: u32 },
}

impl Backend {
    pub fn float() -> Self {
        Backend::Float { prec: FloatEnclosure::DEFAULT_PRECISION }
    }
}

/// Three-valued truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }

    pub fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        }
    }

    pub fn is_true(self) -> bool {
        self == Tri::True
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Float(FloatEnclosure),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Scalar::int(0)
    }

    pub fn one() -> Self {
        Scalar::int(1)
    }

    pub fn zero_in(backend: Backend) -> Self {
        Scalar::int(0).to_backend(backend)
    }

    pub fn one_in(backend: Backend) -> Self {
        Scalar::int(1).to_backend(backend)
    }

    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Rational(_) => Backend::Rational,
            Scalar::Float(e) => Backend::Float { prec: e.precision() },
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn enclosure(&self, prec: u32) -> FloatEnclosure {
        match self {
            Scalar::Rational(r) => FloatEnclosure::from_ratio(r, prec),
            Scalar::Float(e) => e.clone(),
        }
    }

    /// Convert to a backend. Float to rational is not possible.
    pub fn to_backend(&self, backend: Backend) -> Scalar {
        match (self, backend) {
            (Scalar::Rational(_), Backend::Rational) => self.clone(),
            (Scalar::Rational(r), Backend::Float { prec }) => {
                Scalar::Float(FloatEnclosure::from_ratio(r, prec))
            }
            (Scalar::Float(_), _) => self.clone(),
        }
    }

    fn promote(a: &Scalar, b: &Scalar) -> (FloatEnclosure, FloatEnclosure) {
        let p = match (a, b) {
            (Scalar::Float(x), Scalar::Float(y)) => x.precision().max(y.precision()),
            (Scalar::Float(x), _) | (_, Scalar::Float(x)) => x.precision(),
            _ => FloatEnclosure::DEFAULT_PRECISION,
        };
        (a.enclosure(p), b.enclosure(p))
    }

    pub fn add(&self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            _ => {
                let (a, b) = Scalar::promote(self, o);
                Scalar::Float(a.add(&b))
            }
        }
    }

    pub fn sub(&self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a - b),
            _ => {
                let (a, b) = Scalar::promote(self, o);
                Scalar::Float(a.sub(&b))
            }
        }
    }

    pub fn mul(&self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            _ => {
                let (a, b) = Scalar::promote(self, o);
                Scalar::Float(a.mul(&b))
            }
        }
    }

    pub fn div(&self, o: &Scalar) -> Result<Scalar> {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => {
                if b.is_zero() {
                    Err(Error::InvalidArgument("division by zero".into()))
                } else {
                    Ok(Scalar::Rational(a / b))
                }
            }
            _ => {
                let (a, b) = Scalar::promote(self, o);
                Ok(Scalar::Float(a.div(&b)?))
            }
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(-a),
            Scalar::Float(e) => Scalar::Float(e.neg()),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(a.abs()),
            Scalar::Float(e) => {
                if e.lo().signum() >= 0 {
                    self.clone()
                } else if e.hi().signum() <= 0 {
                    Scalar::Float(e.neg())
                } else {
                    let m = e.neg().max(e);
                    let z = FloatEnclosure::from_i64(0, e.precision());
                    Scalar::Float(z.hull(&m))
                }
            }
        }
    }

    pub fn cmp3(&self, o: &Scalar) -> TriOrdering {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => match a.cmp(b) {
                std::cmp::Ordering::Less => TriOrdering::Less,
                std::cmp::Ordering::Equal => TriOrdering::Equal,
                std::cmp::Ordering::Greater => TriOrdering::Greater,
            },
            _ => {
                let (a, b) = Scalar::promote(self, o);
                a.cmp3(&b)
            }
        }
    }

    pub fn lt(&self, o: &Scalar) -> Tri {
        match self.cmp3(o) {
            TriOrdering::Less => Tri::True,
            TriOrdering::Equal | TriOrdering::Greater => Tri::False,
            TriOrdering::Unknown => Tri::Unknown,
        }
    }

    pub fn le(&self, o: &Scalar) -> Tri {
        match self.cmp3(o) {
            TriOrdering::Less | TriOrdering::Equal => Tri::True,
            TriOrdering::Greater => Tri::False,
            TriOrdering::Unknown => Tri::Unknown,
        }
    }

    pub fn eq3(&self, o: &Scalar) -> Tri {
        match self.cmp3(o) {
            TriOrdering::Equal => Tri::True,
            TriOrdering::Less | TriOrdering::Greater => Tri::False,
            TriOrdering::Unknown => Tri::Unknown,
        }
    }

    /// Minimum; for enclosures the hull of possible minima.
    pub fn min(&self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a.min(b).clone()),
            _ => {
                let (a, b) = Scalar::promote(self, o);
                Scalar::Float(a.min(&b))
            }
        }
    }

    pub fn max(&self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a.max(b).clone()),
            _ => {
                let (a, b) = Scalar::promote(self, o);
                Scalar::Float(a.max(&b))
            }
        }
    }

    /// Approximate value (midpoint for enclosures).
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => super::frac::Frac::from_ratio(r).to_f64(),
            Scalar::Float(e) => e.mid(),
        }
    }

    /// Natural logarithm of a positive value as an enclosure.
    pub fn ln(&self) -> Result<Scalar> {
        match self {
            Scalar::Rational(r) => {
                if !r.is_positive() {
                    return Err(Error::InvalidArgument("logarithm of a non-positive value".into()));
                }
                if r.is_one() {
                    return Ok(Scalar::zero());
                }
                let v = super::frac::ln_ratio(r.numer(), r.denom());
                let pad = v.abs() * 1e-13 + 1e-300;
                let lo = FloatEnclosure::from_f64(v - pad, 53).expect("finite");
                let hi = FloatEnclosure::from_f64(v + pad, 53).expect("finite");
                Ok(Scalar::Float(lo.hull(&hi)))
            }
            Scalar::Float(e) => Ok(Scalar::Float(e.ln()?)),
        }
    }

    pub fn is_zero(&self) -> Tri {
        self.eq3(&Scalar::zero())
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Rational(r)
    }
}

impl From<FloatEnclosure> for Scalar {
    fn from(e: FloatEnclosure) -> Self {
        Scalar::Float(e)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Float(e) => write!(f, "{e}"),
        }
    }
}

/// Parse `"p/q"`, an integer, or a finite decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let mut n: BigInt = digits.parse().ok()?;
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), fp.len());
        return Some(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("7").unwrap(), BigRational::from_integer(7.into()));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
    }

    #[test]
    fn mixed_arithmetic_promotes_to_float() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::Float(FloatEnclosure::from_i64(1, 53));
        let c = a.add(&b);
        assert!(matches!(c, Scalar::Float(_)));
        assert!(c.enclosure(53).contains_ratio(&BigRational::new(4.into(), 3.into())));
    }

    #[test]
    fn tri_logic() {
        assert_eq!(Tri::True.and(Tri::Unknown), Tri::Unknown);
        assert_eq!(Tri::False.and(Tri::Unknown), Tri::False);
        assert_eq!(Tri::Unknown.not(), Tri::Unknown);
    }
}
