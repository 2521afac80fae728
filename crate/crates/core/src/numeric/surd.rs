//! Exact quadratic surds `(a + b*sqrt(c)) / d`.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::enclosure::{Dyadic, FloatEnclosure};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

impl QuadSurd {
    /// `c` must be a positive non-square; `d` non-zero.
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidArgument("radicand must be positive".into()));
        }
        let r = c.sqrt();
        if &r * &r == c {
            return Err(Error::InvalidArgument("radicand is a perfect square".into()));
        }
        if d.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let mut s = QuadSurd { a, b, c, d };
        s.normalize();
        Ok(s)
    }

    pub fn golden() -> Self {
        QuadSurd::new(1.into(), 1.into(), 5.into(), 2.into()).expect("valid")
    }

    fn normalize(&mut self) {
        if self.d.is_negative() {
            self.a = -&self.a;
            self.b = -&self.b;
            self.d = -&self.d;
        }
        let g = self.a.gcd(&self.b).gcd(&self.d);
        if !g.is_zero() && !g.is_one() {
            self.a /= &g;
            self.b /= &g;
            self.d /= &g;
        }
    }

    pub fn parts(&self) -> (&BigInt, &BigInt, &BigInt, &BigInt) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    fn sqrt_c(&self, prec: u32) -> FloatEnclosure {
        let k = prec as usize + 2;
        let scaled: BigInt = &self.c << (2 * k);
        let r = scaled.sqrt();
        let lo = Dyadic::new(r.clone(), -(k as i64));
        let hi = Dyadic::new(r + 1, -(k as i64));
        FloatEnclosure::from_bounds(lo, hi, prec)
    }

    pub fn enclose(&self, prec: u32) -> FloatEnclosure {
        let s = self.sqrt_c(prec + 8);
        let p = prec + 8;
        let num = FloatEnclosure::from_int(&self.a, p).add(&s.mul_int(&self.b));
        num.div(&FloatEnclosure::from_int(&self.d, p))
            .expect("d is non-zero")
            .with_precision(prec)
    }

    pub fn to_f64(&self) -> f64 {
        self.enclose(64).mid()
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.div_floor(&self.d);
        }
        // Irrational, so the floor is decided at some finite precision.
        let mut prec = 64;
        loop {
            if let Some(f) = self.enclose(prec).floor_exact() {
                return f;
            }
            prec *= 2;
        }
    }

    pub fn ceil(&self) -> BigInt {
        if self.b.is_zero() {
            return -((-&self.a).div_floor(&self.d));
        }
        self.floor() + 1
    }

    fn mul(&self, o: &QuadSurd) -> QuadSurd {
        debug_assert_eq!(self.c, o.c);
        let mut r = QuadSurd {
            a: &self.a * &o.a + &self.b * &o.b * &self.c,
            b: &self.a * &o.b + &self.b * &o.a,
            c: self.c.clone(),
            d: &self.d * &o.d,
        };
        r.normalize();
        r
    }

    fn sub_int(&self, k: &BigInt) -> QuadSurd {
        let mut r = QuadSurd { a: &self.a - k * &self.d, b: self.b.clone(), c: self.c.clone(), d: self.d.clone() };
        r.normalize();
        r
    }

    /// True when the orbit of `beta - 1` under `x -> beta x mod 1` is finite,
    /// checked for at most `max_steps` steps. `None` when undecided.
    pub fn is_parry(&self, max_steps: usize) -> Option<bool> {
        let mut x = self.sub_int(&BigInt::one());
        let mut seen = HashSet::new();
        for _ in 0..max_steps {
            if !seen.insert(x.clone()) {
                return Some(true);
            }
            let y = self.mul(&x);
            x = y.sub_int(&y.floor());
        }
        None
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+{}*sqrt({}))/{}", self.a, self.b, self.c, self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_value_and_floor() {
        let g = QuadSurd::golden();
        assert!((g.to_f64() - 1.618033988749895).abs() < 1e-15);
        assert_eq!(g.floor(), BigInt::from(1));
        assert_eq!(g.ceil(), BigInt::from(2));
        assert_eq!(g.is_parry(100), Some(true));
    }

    #[test]
    fn sqrt_two_is_not_a_short_parry_orbit() {
        // sqrt(2) is not a Parry number, so no cycle is ever found.
        let s = QuadSurd::new(0.into(), 1.into(), 2.into(), 1.into()).unwrap();
        assert_eq!(s.is_parry(200), None);
    }

    #[test]
    fn enclosure_is_sound() {
        let g = QuadSurd::golden();
        let e = g.enclose(200);
        // phi^2 = phi + 1
        let sq = e.mul(&e);
        let rhs = e.add_int(&BigInt::one());
        assert!(sq.lo() <= rhs.hi() && rhs.lo() <= sq.hi());
        assert!(e.width() < 1e-55);
    }

    #[test]
    fn perfect_square_radicand_rejected() {
        assert!(QuadSurd::new(1.into(), 1.into(), 4.into(), 2.into()).is_err());
    }
}
