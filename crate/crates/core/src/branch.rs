//! Inverse branches as projective matrices.
//!
//! A branch `(p, q; r, s)` maps `y` to `(p y + q) / (r y + s)`. Affine
//! branches have `r = 0`. Composition is the matrix product; exact
//! matrices are divided by the gcd of their entries unless the
//! determinant is known to be a unit, in which case the content is 1.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::{FracInterval, Interval};
use crate::numeric::{Backend, FloatEnclosure, Frac, Scalar, Tri};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    Affine,
    Mobius,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    pub fn compose(self, o: Orientation) -> Orientation {
        if self == o {
            Orientation::Increasing
        } else {
            Orientation::Decreasing
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coeffs {
    Exact([BigInt; 4]),
    Enclosed([FloatEnclosure; 4]),
}

#[derive(Clone, Debug)]
pub struct InverseBranch {
    kind: BranchKind,
    coeffs: Coeffs,
    orientation: Orientation,
    domain: Interval,
    unimodular: bool,
    // Determinant carried alongside enclosed coefficients; recomputing it
    // from large entries would cancel catastrophically.
    det: Option<FloatEnclosure>,
}

fn reduce_content(m: &mut [BigInt; 4]) {
    // Start from the smallest non-zero entry so that common cases stop early.
    let mut idx: Vec<usize> = (0..4).filter(|&i| !m[i].is_zero()).collect();
    idx.sort_by_key(|&i| m[i].bits());
    let mut g = match idx.first() {
        Some(&i) => m[i].abs(),
        None => return,
    };
    for &i in &idx[1..] {
        if g.is_one() {
            return;
        }
        g = g.gcd(&m[i]);
    }
    if !g.is_one() {
        for e in m.iter_mut() {
            *e /= &g;
        }
    }
}

fn mat_mul_exact(a: &[BigInt; 4], b: &[BigInt; 4]) -> [BigInt; 4] {
    if a[2].is_zero() && b[2].is_zero() {
        return [&a[0] * &b[0], &a[0] * &b[1] + &a[1] * &b[3], BigInt::zero(), &a[3] * &b[3]];
    }
    [
        &a[0] * &b[0] + &a[1] * &b[2],
        &a[0] * &b[1] + &a[1] * &b[3],
        &a[2] * &b[0] + &a[3] * &b[2],
        &a[2] * &b[1] + &a[3] * &b[3],
    ]
}

fn mat_mul_enclosed(a: &[FloatEnclosure; 4], b: &[FloatEnclosure; 4]) -> [FloatEnclosure; 4] {
    [
        a[0].mul(&b[0]).add(&a[1].mul(&b[2])),
        a[0].mul(&b[1]).add(&a[1].mul(&b[3])),
        a[2].mul(&b[0]).add(&a[3].mul(&b[2])),
        a[2].mul(&b[1]).add(&a[3].mul(&b[3])),
    ]
}

fn enclose_all(m: &[BigInt; 4], prec: u32) -> [FloatEnclosure; 4] {
    [
        FloatEnclosure::from_int(&m[0], prec),
        FloatEnclosure::from_int(&m[1], prec),
        FloatEnclosure::from_int(&m[2], prec),
        FloatEnclosure::from_int(&m[3], prec),
    ]
}

/// `(p x + q) / (r x + s)` on exact fractions.
fn mobius_frac(m: &[BigInt; 4], x: &Frac) -> Option<Frac> {
    let (u, v) = (x.numer(), x.denom());
    let den = &m[2] * u + &m[3] * v;
    if den.is_zero() {
        return None;
    }
    Some(Frac::new(&m[0] * u + &m[1] * v, den))
}

fn mobius_enclosed(m: &[FloatEnclosure; 4], x: &FloatEnclosure) -> Result<FloatEnclosure> {
    let num = m[0].mul(x).add(&m[1]);
    let den = m[2].mul(x).add(&m[3]);
    num.div(&den)
}

impl InverseBranch {
    /// Identity on `domain`.
    pub fn identity(domain: Interval) -> Self {
        InverseBranch {
            kind: BranchKind::Affine,
            coeffs: Coeffs::Exact([BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one()]),
            orientation: Orientation::Increasing,
            domain,
            unimodular: true,
            det: None,
        }
    }

    /// `y -> a y + b`.
    pub fn affine(a: &BigRational, b: &BigRational, domain: Interval) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidArgument("affine slope is zero".into()));
        }
        let p = a.numer() * b.denom();
        let q = b.numer() * a.denom();
        let s = a.denom() * b.denom();
        InverseBranch::mobius(p, q, BigInt::zero(), s, domain)
    }

    /// `y -> (p y + q) / (r y + s)`.
    pub fn mobius(p: BigInt, q: BigInt, r: BigInt, s: BigInt, domain: Interval) -> Result<Self> {
        let det = &p * &s - &q * &r;
        if det.is_zero() {
            return Err(Error::InvalidArgument("singular branch matrix".into()));
        }
        let mut m = [p, q, r, s];
        let unimodular = det.abs().is_one();
        if !unimodular {
            reduce_content(&mut m);
        }
        Ok(InverseBranch {
            kind: if m[2].is_zero() { BranchKind::Affine } else { BranchKind::Mobius },
            coeffs: Coeffs::Exact(m),
            orientation: if det.is_positive() { Orientation::Increasing } else { Orientation::Decreasing },
            domain,
            unimodular,
            det: None,
        })
    }

    /// Branch with enclosed coefficients; the orientation must be supplied
    /// because the determinant sign may not be decidable from enclosures.
    pub fn enclosed(m: [FloatEnclosure; 4], orientation: Orientation, domain: Interval) -> Self {
        let kind = if m[2].is_point() && m[2].lo().is_zero() { BranchKind::Affine } else { BranchKind::Mobius };
        let det = m[0].mul(&m[3]).sub(&m[1].mul(&m[2]));
        InverseBranch { kind, coeffs: Coeffs::Enclosed(m), orientation, domain, unimodular: false, det: Some(det) }
    }

    pub fn kind(&self) -> BranchKind {
        self.kind
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn backend(&self) -> Backend {
        match &self.coeffs {
            Coeffs::Exact(_) => Backend::Rational,
            Coeffs::Enclosed(m) => Backend::Float { prec: m[0].precision() },
        }
    }

    /// Slope of an affine branch.
    pub fn a(&self) -> Option<Scalar> {
        if self.kind != BranchKind::Affine {
            return None;
        }
        Some(match &self.coeffs {
            Coeffs::Exact(m) => Scalar::Rational(BigRational::new(m[0].clone(), m[3].clone())),
            Coeffs::Enclosed(m) => Scalar::Float(m[0].div(&m[3]).ok()?),
        })
    }

    /// Offset of an affine branch.
    pub fn b(&self) -> Option<Scalar> {
        if self.kind != BranchKind::Affine {
            return None;
        }
        Some(match &self.coeffs {
            Coeffs::Exact(m) => Scalar::Rational(BigRational::new(m[1].clone(), m[3].clone())),
            Coeffs::Enclosed(m) => Scalar::Float(m[1].div(&m[3]).ok()?),
        })
    }

    /// Entries `(p, q, r, s)` of an exact branch.
    pub fn matrix(&self) -> Option<&[BigInt; 4]> {
        match &self.coeffs {
            Coeffs::Exact(m) => Some(m),
            Coeffs::Enclosed(_) => None,
        }
    }

    pub fn to_enclosed(&self, prec: u32) -> InverseBranch {
        match &self.coeffs {
            Coeffs::Exact(m) => InverseBranch {
                coeffs: Coeffs::Enclosed(enclose_all(m, prec)),
                domain: self.domain.enclose(prec),
                unimodular: false,
                det: Some(FloatEnclosure::from_int(&(&m[0] * &m[3] - &m[1] * &m[2]), prec)),
                ..self.clone()
            },
            Coeffs::Enclosed(_) => self.clone(),
        }
    }

    pub fn eval(&self, x: &Scalar) -> Result<Scalar> {
        match (&self.coeffs, x) {
            (Coeffs::Exact(m), Scalar::Rational(r)) => {
                let f = mobius_frac(m, &Frac::from_ratio(r)).ok_or(Error::DomainViolation)?;
                Ok(Scalar::Rational(f.to_ratio()))
            }
            (Coeffs::Exact(m), Scalar::Float(e)) => {
                Ok(Scalar::Float(mobius_enclosed(&enclose_all(m, e.precision()), e)?))
            }
            (Coeffs::Enclosed(m), _) => {
                let e = x.enclosure(m[0].precision());
                Ok(Scalar::Float(mobius_enclosed(m, &e)?))
            }
        }
    }

    /// Evaluation on an unreduced fraction; exact branches only.
    pub fn eval_frac(&self, x: &Frac) -> Option<Frac> {
        match &self.coeffs {
            Coeffs::Exact(m) => mobius_frac(m, x),
            Coeffs::Enclosed(_) => None,
        }
    }

    fn forward_matrix(&self) -> Coeffs {
        match &self.coeffs {
            Coeffs::Exact(m) => Coeffs::Exact([m[3].clone(), -&m[1], -&m[2], m[0].clone()]),
            Coeffs::Enclosed(m) => Coeffs::Enclosed([m[3].clone(), m[1].neg(), m[2].neg(), m[0].clone()]),
        }
    }

    fn image_with(coeffs: &Coeffs, orientation: Orientation, iv: &Interval) -> Result<Interval> {
        if iv.is_empty() {
            return Ok(Interval::empty());
        }
        let f = |x: &Scalar| -> Result<Scalar> {
            match (coeffs, x) {
                (Coeffs::Exact(m), Scalar::Rational(r)) => Ok(Scalar::Rational(
                    mobius_frac(m, &Frac::from_ratio(r)).ok_or(Error::DomainViolation)?.to_ratio(),
                )),
                (Coeffs::Exact(m), Scalar::Float(e)) => {
                    Ok(Scalar::Float(mobius_enclosed(&enclose_all(m, e.precision()), e)?))
                }
                (Coeffs::Enclosed(m), _) => Ok(Scalar::Float(mobius_enclosed(m, &x.enclosure(m[0].precision()))?)),
            }
        };
        let a = f(iv.lo())?;
        let b = f(iv.hi())?;
        match orientation {
            Orientation::Increasing => Interval::new(a, b, iv.lo_open(), iv.hi_open()),
            Orientation::Decreasing => Interval::new(b, a, iv.hi_open(), iv.lo_open()),
        }
    }

    /// Image of an interval lying in the domain.
    pub fn apply(&self, iv: &Interval) -> Result<Interval> {
        if self.domain.contains(iv) == Tri::False {
            return Err(Error::DomainViolation);
        }
        InverseBranch::image_with(&self.coeffs, self.orientation, iv)
    }

    /// Image of the domain.
    pub fn range(&self) -> Result<Interval> {
        InverseBranch::image_with(&self.coeffs, self.orientation, &self.domain)
    }

    /// Image under the inverse of this branch (the forward map) of an
    /// interval lying in its range.
    pub fn forward_apply(&self, iv: &Interval) -> Result<Interval> {
        InverseBranch::image_with(&self.forward_matrix(), self.orientation, iv)
    }

    /// Exact image of the domain over unreduced fractions.
    pub fn range_frac(&self) -> Option<FracInterval> {
        let m = match &self.coeffs {
            Coeffs::Exact(m) => m,
            Coeffs::Enclosed(_) => return None,
        };
        let d = FracInterval::from_interval(&self.domain)?;
        let a = mobius_frac(m, &d.lo)?;
        let b = mobius_frac(m, &d.hi)?;
        Some(match self.orientation {
            Orientation::Increasing => FracInterval { lo: a, hi: b, lo_open: d.lo_open, hi_open: d.hi_open },
            Orientation::Decreasing => FracInterval { lo: b, hi: a, lo_open: d.hi_open, hi_open: d.lo_open },
        })
    }

    /// `outer ∘ inner`, defined on the points of `inner`'s domain that
    /// `inner` maps into `outer`'s domain.
    pub fn compose(outer: &InverseBranch, inner: &InverseBranch) -> Result<InverseBranch> {
        let coeffs = match (&outer.coeffs, &inner.coeffs) {
            (Coeffs::Exact(a), Coeffs::Exact(b)) => {
                let mut m = mat_mul_exact(a, b);
                if !(outer.unimodular && inner.unimodular) {
                    reduce_content(&mut m);
                }
                Coeffs::Exact(m)
            }
            (Coeffs::Enclosed(a), Coeffs::Enclosed(b)) => Coeffs::Enclosed(mat_mul_enclosed(a, b)),
            (Coeffs::Exact(a), Coeffs::Enclosed(b)) => {
                Coeffs::Enclosed(mat_mul_enclosed(&enclose_all(a, b[0].precision()), b))
            }
            (Coeffs::Enclosed(a), Coeffs::Exact(b)) => {
                Coeffs::Enclosed(mat_mul_enclosed(a, &enclose_all(b, a[0].precision())))
            }
        };
        let through = outer.domain.intersect(&inner.range()?);
        let domain = inner.forward_apply(&through)?.intersect(&inner.domain);
        let kind = match &coeffs {
            Coeffs::Exact(m) if m[2].is_zero() => BranchKind::Affine,
            Coeffs::Enclosed(m) if m[2].is_point() && m[2].lo().is_zero() => BranchKind::Affine,
            _ => BranchKind::Mobius,
        };
        let det = match (&outer.det, &inner.det) {
            (Some(a), Some(b)) => Some(a.mul(b)),
            (Some(a), None) => Some(a.mul(&FloatEnclosure::from_int(&inner.exact_det(), a.precision()))),
            (None, Some(b)) => Some(b.mul(&FloatEnclosure::from_int(&outer.exact_det(), b.precision()))),
            (None, None) => None,
        };
        Ok(InverseBranch {
            kind,
            coeffs,
            orientation: outer.orientation.compose(inner.orientation),
            domain,
            unimodular: outer.unimodular && inner.unimodular,
            det,
        })
    }

    fn exact_det(&self) -> BigInt {
        match &self.coeffs {
            Coeffs::Exact(m) => &m[0] * &m[3] - &m[1] * &m[2],
            Coeffs::Enclosed(_) => unreachable!("enclosed branches carry their determinant"),
        }
    }

    /// Lebesgue measure of the image of the domain. For enclosed branches
    /// this uses `|det| (v - u) / |(r u + s)(r v + s)|`, which keeps full
    /// relative accuracy even when the image is far below the endpoint error.
    pub fn range_measure(&self) -> Result<Scalar> {
        if self.domain.is_empty() {
            return Ok(Scalar::zero());
        }
        match &self.coeffs {
            Coeffs::Exact(_) => {
                let r = self.range_frac().ok_or(Error::DomainViolation)?;
                Ok(Scalar::Rational(r.measure().to_ratio()))
            }
            Coeffs::Enclosed(m) => {
                let p = m[0].precision();
                let u = self.domain.lo().enclosure(p);
                let v = self.domain.hi().enclosure(p);
                let du = m[2].mul(&u).add(&m[3]);
                let dv = m[2].mul(&v).add(&m[3]);
                let det = self.det.clone().expect("enclosed branches carry their determinant");
                let num = Scalar::Float(det).abs().enclosure(p).mul(&v.sub(&u));
                let den = du.mul(&dv);
                let q = num.div(&den)?;
                Ok(Scalar::Float(q).abs())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn mat(m: [i64; 4]) -> InverseBranch {
        InverseBranch::mobius(m[0].into(), m[1].into(), m[2].into(), m[3].into(), Interval::unit()).unwrap()
    }

    #[test]
    fn gauss_branch_squared() {
        let g = mat([0, 1, 1, 2]);
        let c = InverseBranch::compose(&g, &g).unwrap();
        let expect: [BigInt; 4] = [1.into(), 2.into(), 2.into(), 5.into()];
        assert_eq!(c.matrix().unwrap(), &expect);
        assert_eq!(c.orientation(), Orientation::Increasing);
        assert_eq!(c.kind(), BranchKind::Mobius);
    }

    #[test]
    fn affine_composition_of_decimal_branches() {
        let outer = InverseBranch::affine(&r(1, 10), &r(3, 10), Interval::unit()).unwrap();
        let inner = InverseBranch::affine(&r(1, 10), &r(1, 10), Interval::unit()).unwrap();
        let c = InverseBranch::compose(&outer, &inner).unwrap();
        assert_eq!(c.kind(), BranchKind::Affine);
        assert_eq!(c.a().unwrap(), Scalar::Rational(r(1, 100)));
        assert_eq!(c.b().unwrap(), Scalar::Rational(r(31, 100)));
    }

    #[test]
    fn decreasing_branch_swaps_openness() {
        let g = mat([0, 1, 1, 1]);
        let img = g.apply(&Interval::unit()).unwrap();
        assert_eq!(img, Interval::new(Scalar::ratio(1, 2), Scalar::one(), true, false).unwrap());
    }

    #[test]
    fn apply_outside_domain_is_rejected() {
        let dom = Interval::half_open(Scalar::zero(), Scalar::ratio(1, 2)).unwrap();
        let b = InverseBranch::affine(&r(1, 2), &r(0, 1), dom).unwrap();
        assert_eq!(b.apply(&Interval::unit()), Err(Error::DomainViolation));
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(InverseBranch::mobius(1.into(), 2.into(), 2.into(), 4.into(), Interval::unit()).is_err());
    }

    #[test]
    fn composed_domain_restricts_to_preimage() {
        // outer defined on [0, 1/2); inner maps [0,1) onto [0,1) by identity-like slope 1
        let outer =
            InverseBranch::affine(&r(1, 3), &r(0, 1), Interval::half_open(Scalar::zero(), Scalar::ratio(1, 2)).unwrap())
                .unwrap();
        let inner = InverseBranch::affine(&r(1, 2), &r(0, 1), Interval::unit()).unwrap();
        let c = InverseBranch::compose(&outer, &inner).unwrap();
        assert_eq!(c.domain(), &Interval::unit());
        let inner2 = InverseBranch::affine(&r(1, 1), &r(0, 1), Interval::unit()).unwrap();
        let c2 = InverseBranch::compose(&outer, &inner2).unwrap();
        assert_eq!(c2.domain(), &Interval::half_open(Scalar::zero(), Scalar::ratio(1, 2)).unwrap());
    }

    proptest! {
        #[test]
        fn composition_is_associative(
            a in prop::array::uniform4(-5i64..6), b in prop::array::uniform4(-5i64..6), c in prop::array::uniform4(-5i64..6)
        ) {
            let det = |m: [i64; 4]| m[0] * m[3] - m[1] * m[2];
            prop_assume!(det(a) != 0 && det(b) != 0 && det(c) != 0);
            let (ma, mb, mc) = (
                [a[0].into(), a[1].into(), a[2].into(), a[3].into()],
                [b[0].into(), b[1].into(), b[2].into(), b[3].into()],
                [c[0].into(), c[1].into(), c[2].into(), c[3].into()],
            );
            let mut left = mat_mul_exact(&mat_mul_exact(&ma, &mb), &mc);
            let mut right = mat_mul_exact(&ma, &mat_mul_exact(&mb, &mc));
            reduce_content(&mut left);
            reduce_content(&mut right);
            prop_assert_eq!(left, right);
        }

        #[test]
        fn enclosed_evaluation_encloses_exact(
            j in 0i64..20, k in 0i64..20, num in 0i64..100
        ) {
            let g1 = mat([0, 1, 1, j + 1]);
            let g2 = mat([0, 1, 1, k + 1]);
            let c = InverseBranch::compose(&g1, &g2).unwrap();
            let x = Scalar::ratio(num, 100);
            let exact = c.eval(&x).unwrap();
            let float = c.to_enclosed(30).eval(&x).unwrap();
            prop_assert!(float.enclosure(30).contains_ratio(exact.as_rational().unwrap()));
        }
    }
}
