//! Outward-rounded interval enclosures with dyadic endpoints.
//!
//! Each endpoint is `mant * 2^exp` with an arbitrary-size mantissa, rounded
//! to `prec` significant bits in the outward direction after every
//! operation, so the exact value is always enclosed.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Round {
    Down,
    Up,
}

/// Exact binary floating value `mant * 2^exp`.
#[derive(Clone, Debug)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.trim();
        d
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn from_int(v: &BigInt) -> Self {
        Dyadic::new(v.clone(), 0)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, exp) = if e == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), e - 1075)
        };
        Some(Dyadic::new(BigInt::from(m) * sign, exp))
    }

    fn trim(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        if let Some(tz) = self.mant.trailing_zeros() {
            if tz > 0 {
                self.mant >>= tz as usize;
                self.exp += tz as i64;
            }
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    fn neg(&self) -> Self {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }

    /// Round to at most `prec` significant bits.
    pub(crate) fn round(&self, prec: u32, dir: Round) -> Self {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let shift = (bits - prec as u64) as usize;
        // BigInt >> rounds toward negative infinity.
        let m = match dir {
            Round::Down => &self.mant >> shift,
            Round::Up => -((-&self.mant) >> shift),
        };
        Dyadic::new(m, self.exp + shift as i64)
    }

    fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = a.exp.min(b.exp);
        let am = &a.mant << ((a.exp - e) as usize);
        let bm = &b.mant << ((b.exp - e) as usize);
        (am, bm, e)
    }

    pub(crate) fn add_exact(a: &Dyadic, b: &Dyadic) -> Dyadic {
        let (am, bm, e) = Dyadic::aligned(a, b);
        Dyadic::new(am + bm, e)
    }

    pub(crate) fn mul_exact(a: &Dyadic, b: &Dyadic) -> Dyadic {
        Dyadic::new(&a.mant * &b.mant, a.exp + b.exp)
    }

    pub fn to_ratio(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << (self.exp as usize))
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << ((-self.exp) as usize))
        }
    }

    /// Floor as an integer.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << (self.exp as usize)
        } else {
            &self.mant >> ((-self.exp) as usize)
        }
    }

    /// Directed conversion to `f64`.
    pub(crate) fn to_f64_dir(&self, dir: Round) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let r = self.round(53, dir);
        let m = r.mant.to_i64().expect("53-bit mantissa fits i64") as f64;
        let top = r.exp + r.mant.bits() as i64;
        if top < -1000 {
            return match (dir, r.signum() > 0) {
                (Round::Down, true) => 0.0,
                (Round::Up, true) => 2f64.powi(-1000),
                (Round::Down, false) => -(2f64.powi(-1000)),
                (Round::Up, false) => -0.0,
            };
        }
        if top > 1000 {
            return if r.signum() > 0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        let mut v = m;
        let mut e = r.exp;
        while e > 0 {
            let s = e.min(500);
            v *= 2f64.powi(s as i32);
            e -= s;
        }
        while e < 0 {
            let s = (-e).min(500);
            v /= 2f64.powi(s as i32);
            e += s;
        }
        v
    }

    pub fn to_f64(&self) -> f64 {
        self.to_f64_dir(Round::Down)
    }

    /// Natural log for a positive value, accurate to about 1e-15 relative.
    fn ln_approx(&self) -> f64 {
        debug_assert!(self.signum() > 0);
        let bits = self.mant.bits() as i64;
        let (top, shift) = if bits > 64 {
            (&self.mant >> ((bits - 64) as usize), bits - 64)
        } else {
            (self.mant.clone(), 0)
        };
        let t = top.to_u64().expect("positive 64-bit") as f64;
        t.ln() + (shift + self.exp) as f64 * LN2
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::aligned(self, other);
        a.cmp(&b)
    }
}

/// `n/d * 2^e` rounded to `prec` bits; returns the lower and upper bound.
pub(crate) fn round_ratio(n: &BigInt, d: &BigInt, e: i64, prec: u32) -> (Dyadic, Dyadic) {
    assert!(!d.is_zero(), "division by zero in round_ratio");
    let (n, d) = if d.is_negative() { (-n, -d) } else { (n.clone(), d.clone()) };
    if n.is_zero() {
        return (Dyadic::zero(), Dyadic::zero());
    }
    let k = prec as i64 + d.bits() as i64 - n.bits() as i64 + 1;
    let (num, den) = if k >= 0 {
        (n << (k as usize), d)
    } else {
        (n, d << ((-k) as usize))
    };
    let (q, r) = num.div_mod_floor(&den);
    let lo = Dyadic::new(q.clone(), e - k);
    let hi = if r.is_zero() { lo.clone() } else { Dyadic::new(q + 1, e - k) };
    (lo.round(prec, Round::Down), hi.round(prec, Round::Up))
}

/// Closed interval `[lo, hi]` of dyadic rationals enclosing an unknown real.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatEnclosure {
    lo: Dyadic,
    hi: Dyadic,
    prec: u32,
}

/// Three-way comparison outcome between enclosures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriOrdering {
    Less,
    Equal,
    Greater,
    Unknown,
}

impl FloatEnclosure {
    pub const DEFAULT_PRECISION: u32 = 53;

    pub fn from_bounds(lo: Dyadic, hi: Dyadic, prec: u32) -> Self {
        assert!(lo <= hi, "enclosure bounds out of order");
        FloatEnclosure {
            lo: lo.round(prec, Round::Down),
            hi: hi.round(prec, Round::Up),
            prec,
        }
    }

    pub fn point(d: Dyadic, prec: u32) -> Self {
        FloatEnclosure::from_bounds(d.clone(), d, prec)
    }

    pub fn from_int(v: &BigInt, prec: u32) -> Self {
        FloatEnclosure::point(Dyadic::from_int(v), prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        FloatEnclosure::from_int(&BigInt::from(v), prec)
    }

    pub fn from_f64(v: f64, prec: u32) -> Option<Self> {
        Dyadic::from_f64(v).map(|d| FloatEnclosure::point(d, prec))
    }

    pub fn from_ratio(r: &BigRational, prec: u32) -> Self {
        FloatEnclosure::from_parts(r.numer(), r.denom(), prec)
    }

    pub fn from_parts(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        let (lo, hi) = round_ratio(num, den, 0, prec);
        FloatEnclosure { lo, hi, prec }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        FloatEnclosure::from_bounds(self.lo.clone(), self.hi.clone(), prec)
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    /// Lower bound rounded down to `f64`.
    pub fn lo64(&self) -> f64 {
        self.lo.to_f64_dir(Round::Down)
    }

    /// Upper bound rounded up to `f64`.
    pub fn hi64(&self) -> f64 {
        self.hi.to_f64_dir(Round::Up)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> f64 {
        Dyadic::add_exact(&self.hi, &self.lo.neg()).to_f64_dir(Round::Up)
    }

    pub fn mid(&self) -> f64 {
        let s = Dyadic::add_exact(&self.hi, &self.lo);
        Dyadic::new(s.mant, s.exp - 1).to_f64()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.signum() <= 0 && self.hi.signum() >= 0
    }

    pub fn contains_ratio(&self, r: &BigRational) -> bool {
        let lo = self.lo.to_ratio();
        let hi = self.hi.to_ratio();
        &lo <= r && r <= &hi
    }

    pub fn encloses(&self, other: &FloatEnclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn cmp3(&self, other: &FloatEnclosure) -> TriOrdering {
        if self.hi < other.lo {
            TriOrdering::Less
        } else if self.lo > other.hi {
            TriOrdering::Greater
        } else if self.is_point() && other.is_point() {
            TriOrdering::Equal
        } else {
            TriOrdering::Unknown
        }
    }

    fn prec_with(&self, other: &FloatEnclosure) -> u32 {
        self.prec.max(other.prec)
    }

    pub fn neg(&self) -> Self {
        FloatEnclosure { lo: self.hi.neg(), hi: self.lo.neg(), prec: self.prec }
    }

    pub fn add(&self, other: &FloatEnclosure) -> Self {
        let p = self.prec_with(other);
        FloatEnclosure::from_bounds(
            Dyadic::add_exact(&self.lo, &other.lo),
            Dyadic::add_exact(&self.hi, &other.hi),
            p,
        )
    }

    pub fn sub(&self, other: &FloatEnclosure) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FloatEnclosure) -> Self {
        let p = self.prec_with(other);
        let c = [
            Dyadic::mul_exact(&self.lo, &other.lo),
            Dyadic::mul_exact(&self.lo, &other.hi),
            Dyadic::mul_exact(&self.hi, &other.lo),
            Dyadic::mul_exact(&self.hi, &other.hi),
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        FloatEnclosure::from_bounds(lo, hi, p)
    }

    pub fn div(&self, other: &FloatEnclosure) -> Result<Self> {
        if other.contains_zero() {
            return Err(Error::Ambiguous { prec: other.prec });
        }
        let p = self.prec_with(other);
        let mut los = Vec::with_capacity(4);
        let mut his = Vec::with_capacity(4);
        for a in [&self.lo, &self.hi] {
            for b in [&other.lo, &other.hi] {
                let (l, h) = round_ratio(&a.mant, &b.mant, a.exp - b.exp, p);
                los.push(l);
                his.push(h);
            }
        }
        Ok(FloatEnclosure {
            lo: los.into_iter().min().unwrap(),
            hi: his.into_iter().max().unwrap(),
            prec: p,
        })
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        self.mul(&FloatEnclosure::from_int(k, self.prec))
    }

    pub fn add_int(&self, k: &BigInt) -> Self {
        self.add(&FloatEnclosure::from_int(k, self.prec))
    }

    /// Hull of `min` over both enclosures.
    pub fn min(&self, other: &FloatEnclosure) -> Self {
        FloatEnclosure {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().min(other.hi.clone()),
            prec: self.prec_with(other),
        }
    }

    pub fn max(&self, other: &FloatEnclosure) -> Self {
        FloatEnclosure {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.prec_with(other),
        }
    }

    /// Smallest enclosure containing both.
    pub fn hull(&self, other: &FloatEnclosure) -> Self {
        FloatEnclosure {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.prec_with(other),
        }
    }

    /// Floor, if it is the same integer across the enclosure.
    pub fn floor_exact(&self) -> Option<BigInt> {
        let a = self.lo.floor();
        let b = self.hi.floor();
        if a == b {
            Some(a)
        } else {
            None
        }
    }

    /// Natural logarithm; requires a strictly positive enclosure.
    pub fn ln(&self) -> Result<Self> {
        if self.lo.signum() <= 0 {
            return Err(Error::InvalidArgument("logarithm of a non-positive enclosure".into()));
        }
        let a = self.lo.ln_approx();
        let b = self.hi.ln_approx();
        let pad = |v: f64| v.abs() * 1e-14 + 1e-300;
        let lo = Dyadic::from_f64(a - pad(a)).expect("finite");
        let hi = Dyadic::from_f64(b + pad(b)).expect("finite");
        Ok(FloatEnclosure::from_bounds(lo, hi, self.prec.max(53)))
    }
}

impl fmt::Display for FloatEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo64(), self.hi64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn third_is_enclosed_and_tight() {
        let e = FloatEnclosure::from_ratio(&ratio(1, 3), 53);
        assert!(e.contains_ratio(&ratio(1, 3)));
        assert!(!e.is_point());
        assert!(e.width() < 1e-15);
    }

    #[test]
    fn exact_dyadics_stay_points() {
        let e = FloatEnclosure::from_ratio(&ratio(3, 8), 53);
        assert!(e.is_point());
        assert_eq!(e.lo64(), 0.375);
    }

    #[test]
    fn division_straddling_zero_is_rejected() {
        let one = FloatEnclosure::from_i64(1, 53);
        let z = FloatEnclosure::from_ratio(&ratio(1, 3), 53).sub(&FloatEnclosure::from_ratio(&ratio(1, 3), 53));
        assert!(one.div(&z).is_err());
    }

    #[test]
    fn directed_f64_bounds_bracket_tiny_values() {
        let tiny = FloatEnclosure::point(Dyadic::new(BigInt::from(3), -5000), 53);
        assert_eq!(tiny.lo64(), 0.0);
        assert!(tiny.hi64() > 0.0);
    }

    #[test]
    fn ln_encloses_log_of_ten() {
        let e = FloatEnclosure::from_i64(10, 53).ln().unwrap();
        assert!(e.lo64() <= 10f64.ln() && 10f64.ln() <= e.hi64());
    }

    proptest! {
        #[test]
        fn arithmetic_encloses_exact_result(
            a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000, p in 8u32..80
        ) {
            let x = ratio(a, b);
            let y = ratio(c, d);
            let ex = FloatEnclosure::from_ratio(&x, p);
            let ey = FloatEnclosure::from_ratio(&y, p);
            prop_assert!(ex.add(&ey).contains_ratio(&(&x + &y)));
            prop_assert!(ex.sub(&ey).contains_ratio(&(&x - &y)));
            prop_assert!(ex.mul(&ey).contains_ratio(&(&x * &y)));
            if !ey.contains_zero() {
                prop_assert!(ex.div(&ey).unwrap().contains_ratio(&(&x / &y)));
            }
        }

        #[test]
        fn cmp3_never_contradicts_exact_order(a in -500i64..500, b in 1i64..500, c in -500i64..500, d in 1i64..500) {
            let x = ratio(a, b);
            let y = ratio(c, d);
            let t = FloatEnclosure::from_ratio(&x, 20).cmp3(&FloatEnclosure::from_ratio(&y, 20));
            match t {
                TriOrdering::Less => prop_assert!(x < y),
                TriOrdering::Greater => prop_assert!(x > y),
                TriOrdering::Equal => prop_assert!(x == y),
                TriOrdering::Unknown => {}
            }
        }
    }
}
