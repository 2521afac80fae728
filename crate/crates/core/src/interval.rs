//! Intervals with per-endpoint openness over either backend.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{Scalar, Tri, TriOrdering};

#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    lo: Scalar,
    hi: Scalar,
    lo_open: bool,
    hi_open: bool,
    empty: bool,
}

impl Interval {
    /// Rejects `lo > hi`. Equal endpoints with an open side give the empty set.
    pub fn new(lo: Scalar, hi: Scalar, lo_open: bool, hi_open: bool) -> Result<Self> {
        match lo.cmp3(&hi) {
            TriOrdering::Greater => Err(Error::InvalidInterval(format!("lower endpoint {lo} above upper {hi}"))),
            TriOrdering::Equal if lo_open || hi_open => Ok(Interval::empty()),
            _ => Ok(Interval { lo, hi, lo_open, hi_open, empty: false }),
        }
    }

    pub fn empty() -> Self {
        Interval { lo: Scalar::zero(), hi: Scalar::zero(), lo_open: false, hi_open: false, empty: true }
    }

    /// `[0, 1)`.
    pub fn unit() -> Self {
        Interval::half_open(Scalar::zero(), Scalar::one()).expect("valid")
    }

    /// `[lo, hi)`.
    pub fn half_open(lo: Scalar, hi: Scalar) -> Result<Self> {
        Interval::new(lo, hi, false, true)
    }

    pub fn closed(lo: Scalar, hi: Scalar) -> Result<Self> {
        Interval::new(lo, hi, false, false)
    }

    pub fn point(x: Scalar) -> Self {
        Interval { lo: x.clone(), hi: x, lo_open: false, hi_open: false, empty: false }
    }

    pub fn lo(&self) -> &Scalar {
        &self.lo
    }

    pub fn hi(&self) -> &Scalar {
        &self.hi
    }

    pub fn lo_open(&self) -> bool {
        self.lo_open
    }

    pub fn hi_open(&self) -> bool {
        self.hi_open
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> Scalar {
        if self.empty {
            return Scalar::zero();
        }
        self.hi.sub(&self.lo)
    }

    pub fn contains_point(&self, x: &Scalar) -> Tri {
        if self.empty {
            return Tri::False;
        }
        let left = if self.lo_open { self.lo.lt(x) } else { self.lo.le(x) };
        let right = if self.hi_open { x.lt(&self.hi) } else { x.le(&self.hi) };
        left.and(right)
    }

    /// Whether `inner` is a subset of `self`.
    pub fn contains(&self, inner: &Interval) -> Tri {
        if inner.empty {
            return Tri::True;
        }
        if self.empty {
            return Tri::False;
        }
        let left = match self.lo.cmp3(&inner.lo) {
            TriOrdering::Less => Tri::True,
            TriOrdering::Greater => Tri::False,
            TriOrdering::Equal => Tri::from_bool(!self.lo_open || inner.lo_open),
            TriOrdering::Unknown => Tri::Unknown,
        };
        let right = match self.hi.cmp3(&inner.hi) {
            TriOrdering::Greater => Tri::True,
            TriOrdering::Less => Tri::False,
            TriOrdering::Equal => Tri::from_bool(!self.hi_open || inner.hi_open),
            TriOrdering::Unknown => Tri::Unknown,
        };
        left.and(right)
    }

    /// Intersection. For enclosure endpoints an undecidable order yields
    /// the hull of the candidate endpoints.
    pub fn intersect(&self, o: &Interval) -> Interval {
        if self.empty || o.empty {
            return Interval::empty();
        }
        let (lo, lo_open) = match self.lo.cmp3(&o.lo) {
            TriOrdering::Greater => (self.lo.clone(), self.lo_open),
            TriOrdering::Less => (o.lo.clone(), o.lo_open),
            TriOrdering::Equal => (self.lo.clone(), self.lo_open || o.lo_open),
            TriOrdering::Unknown => (self.lo.max(&o.lo), self.lo_open || o.lo_open),
        };
        let (hi, hi_open) = match self.hi.cmp3(&o.hi) {
            TriOrdering::Less => (self.hi.clone(), self.hi_open),
            TriOrdering::Greater => (o.hi.clone(), o.hi_open),
            TriOrdering::Equal => (self.hi.clone(), self.hi_open || o.hi_open),
            TriOrdering::Unknown => (self.hi.min(&o.hi), self.hi_open || o.hi_open),
        };
        match lo.cmp3(&hi) {
            TriOrdering::Greater => Interval::empty(),
            TriOrdering::Equal if lo_open || hi_open => Interval::empty(),
            _ => Interval { lo, hi, lo_open, hi_open, empty: false },
        }
    }

    /// Outer enclosure with float endpoints.
    pub fn enclose(&self, prec: u32) -> Interval {
        if self.empty {
            return Interval::empty();
        }
        Interval {
            lo: Scalar::Float(self.lo.enclosure(prec)),
            hi: Scalar::Float(self.hi.enclosure(prec)),
            ..self.clone()
        }
    }

    /// Whether a float interval surely encloses an exact one: its lower
    /// endpoint enclosure lies at or below the exact lower endpoint and so on.
    pub fn encloses_exact(&self, exact: &Interval) -> bool {
        if exact.empty {
            return true;
        }
        if self.empty {
            return false;
        }
        let (Some(lo), Some(hi)) = (exact.lo.as_rational(), exact.hi.as_rational()) else {
            return false;
        };
        let lo_e = self.lo.enclosure(53);
        let hi_e = self.hi.enclosure(53);
        lo_e.lo().to_ratio() <= *lo && *hi <= hi_e.hi().to_ratio()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "{{}}");
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Exact interval over unreduced fractions, used on hot paths.
#[derive(Clone, Debug)]
pub struct FracInterval {
    pub lo: crate::numeric::Frac,
    pub hi: crate::numeric::Frac,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl FracInterval {
    pub fn from_interval(iv: &Interval) -> Option<Self> {
        if iv.is_empty() {
            return None;
        }
        Some(FracInterval {
            lo: crate::numeric::Frac::from_ratio(iv.lo().as_rational()?),
            hi: crate::numeric::Frac::from_ratio(iv.hi().as_rational()?),
            lo_open: iv.lo_open(),
            hi_open: iv.hi_open(),
        })
    }

    pub fn to_interval(&self) -> Interval {
        Interval::new(
            Scalar::Rational(self.lo.to_ratio()),
            Scalar::Rational(self.hi.to_ratio()),
            self.lo_open,
            self.hi_open,
        )
        .expect("ordered endpoints")
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => self.lo_open || self.hi_open,
            std::cmp::Ordering::Less => false,
        }
    }

    pub fn measure(&self) -> crate::numeric::Frac {
        self.hi.sub(&self.lo)
    }

    pub fn contains(&self, inner: &FracInterval) -> bool {
        if inner.is_empty() {
            return true;
        }
        let left = match self.lo.cmp(&inner.lo) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => !self.lo_open || inner.lo_open,
            std::cmp::Ordering::Greater => false,
        };
        left && match self.hi.cmp(&inner.hi) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => !self.hi_open || inner.hi_open,
            std::cmp::Ordering::Less => false,
        }
    }

    pub fn contains_point(&self, x: &crate::numeric::Frac) -> bool {
        let left = if self.lo_open { &self.lo < x } else { &self.lo <= x };
        left && if self.hi_open { x < &self.hi } else { x <= &self.hi }
    }
}
