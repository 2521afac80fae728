//! Unreduced fractions for hot loops.
//!
//! Reduction by gcd dominates the cost of long orbits, so points and
//! cylinder endpoints are carried as `num/den` with `den > 0` and compared
//! by cross multiplication. Conversion to a reduced `BigRational` happens
//! only at API boundaries.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::enclosure::FloatEnclosure;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Debug)]
pub struct Frac {
    num: BigInt,
    den: BigInt,
}

impl Frac {
    /// Panics when `den` is zero.
    pub fn new(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if den.is_negative() {
            Frac { num: -num, den: -den }
        } else {
            Frac { num, den }
        }
    }

    pub fn from_int(v: BigInt) -> Self {
        Frac { num: v, den: BigInt::one() }
    }

    pub fn from_i64(n: i64, d: i64) -> Self {
        Frac::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn zero() -> Self {
        Frac::from_int(BigInt::zero())
    }

    pub fn one() -> Self {
        Frac::from_int(BigInt::one())
    }

    pub fn from_ratio(r: &BigRational) -> Self {
        Frac { num: r.numer().clone(), den: r.denom().clone() }
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn into_parts(self) -> (BigInt, BigInt) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn floor(&self) -> BigInt {
        self.num.div_floor(&self.den)
    }

    pub fn add(&self, o: &Frac) -> Frac {
        if self.den == o.den {
            return Frac { num: &self.num + &o.num, den: self.den.clone() };
        }
        Frac { num: &self.num * &o.den + &o.num * &self.den, den: &self.den * &o.den }
    }

    pub fn sub(&self, o: &Frac) -> Frac {
        if self.den == o.den {
            return Frac { num: &self.num - &o.num, den: self.den.clone() };
        }
        Frac { num: &self.num * &o.den - &o.num * &self.den, den: &self.den * &o.den }
    }

    pub fn mul(&self, o: &Frac) -> Frac {
        Frac { num: &self.num * &o.num, den: &self.den * &o.den }
    }

    /// Panics when `o` is zero.
    pub fn div(&self, o: &Frac) -> Frac {
        Frac::new(&self.num * &o.den, &self.den * &o.num)
    }

    pub fn abs(&self) -> Frac {
        Frac { num: self.num.abs(), den: self.den.clone() }
    }

    /// Divide out the part of the common factor that divides `small`.
    /// When the fraction was reduced before one step of an affine map
    /// whose coefficients divide `small`, the result is reduced again,
    /// and only remainders modulo small numbers are needed.
    pub fn reduce_by(&mut self, small: &BigInt) {
        if small.is_zero() || self.num.is_zero() {
            return;
        }
        let small = small.abs();
        let mut g = small.gcd(&self.num.mod_floor(&small));
        if g.is_one() {
            return;
        }
        g = g.gcd(&self.den.mod_floor(&g));
        if !g.is_one() {
            self.num /= &g;
            self.den /= &g;
        }
    }

    /// Natural logarithm of `|self|`, absolute error around 1e-14.
    pub fn ln_abs(&self) -> f64 {
        ln_ratio(&self.num.abs(), &self.den)
    }

    pub fn to_f64(&self) -> f64 {
        if self.num.is_zero() {
            return 0.0;
        }
        let s = if self.num.is_negative() { -1.0 } else { 1.0 };
        s * self.ln_abs().exp()
    }

    pub fn enclose(&self, prec: u32) -> FloatEnclosure {
        FloatEnclosure::from_parts(&self.num, &self.den, prec)
    }
}

/// Top 64 bits of a positive integer together with the discarded bit count.
fn top_bits(v: &BigInt) -> (f64, i64) {
    let bits = v.bits() as i64;
    if bits > 64 {
        let t = (v >> ((bits - 64) as usize)).to_u64().expect("64 bits");
        (t as f64, bits - 64)
    } else {
        (v.to_u64().expect("64 bits") as f64, 0)
    }
}

/// `ln(a/b)` for positive integers without forming the quotient.
pub fn ln_ratio(a: &BigInt, b: &BigInt) -> f64 {
    assert!(a.is_positive() && b.is_positive(), "ln of non-positive ratio");
    let (ta, sa) = top_bits(a);
    let (tb, sb) = top_bits(b);
    (ta / tb).ln() + (sa - sb) as f64 * LN2
}

/// `ln(v)` for a positive integer.
pub fn ln_int(v: &BigInt) -> f64 {
    ln_ratio(v, &BigInt::one())
}

impl PartialEq for Frac {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.den == other.den {
            return self.num.cmp(&other.num);
        }
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ln_of_large_ratio_is_accurate() {
        let a = BigInt::from(10).pow(3000u32);
        let b = &a * 3 + 1;
        let v = ln_ratio(&b, &a);
        assert!((v - 3f64.ln()).abs() < 1e-13);
        assert!((ln_int(&a) - 3000.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn unreduced_fractions_compare_by_value() {
        assert_eq!(Frac::from_i64(2, 4), Frac::from_i64(1, 2));
        assert!(Frac::from_i64(1, 3) < Frac::from_i64(2, 5));
        assert_eq!(Frac::from_i64(3, -6), Frac::from_i64(-1, 2));
    }

    proptest! {
        #[test]
        fn frac_ops_match_rationals(a in -300i64..300, b in 1i64..300, c in -300i64..300, d in 1i64..300) {
            let x = Frac::from_i64(a, b);
            let y = Frac::from_i64(c, d);
            let rx = x.to_ratio();
            let ry = y.to_ratio();
            prop_assert_eq!(x.add(&y).to_ratio(), &rx + &ry);
            prop_assert_eq!(x.sub(&y).to_ratio(), &rx - &ry);
            prop_assert_eq!(x.mul(&y).to_ratio(), &rx * &ry);
            prop_assert_eq!(x.cmp(&y), rx.cmp(&ry));
            prop_assert_eq!(x.floor(), rx.floor().to_integer());
        }
    }
}
