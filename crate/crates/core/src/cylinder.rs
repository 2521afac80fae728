//! Incremental tracking of random cylinders along an orbit.
//!
//! After `n` steps the tracker holds the orbit point `T^n x`, the digits,
//! and the composed inverse branch `Φ_n` whose domain is `J_n`; the
//! cylinder is `C_n = Φ_n(J_n)`. Each step composes one more branch on the
//! right and restricts the domain, so no cylinder is ever rebuilt.

use serde::Serialize;

use crate::branch::InverseBranch;
use crate::error::{Error, Result};
use crate::interval::{FracInterval, Interval};
use crate::numeric::{Backend, FloatEnclosure, Frac, Scalar, Tri};
use crate::systems::{Digit, FiberedMapFamily, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrackerStatus {
    Active,
    FiniteExpansion,
    AmbiguousDigit,
}

#[derive(Clone, Debug)]
enum Point {
    Exact(Frac),
    Float(FloatEnclosure),
}

#[derive(Clone, Debug)]
pub struct CylinderTracker<'a> {
    system: &'a FiberedMapFamily,
    backend: Backend,
    point: Point,
    phi: InverseBranch,
    status: TrackerStatus,
    digits: Vec<Digit>,
    symbols: Vec<Symbol>,
}

impl<'a> CylinderTracker<'a> {
    /// Tracker at level 0 for a point of `[0,1)`.
    pub fn start(system: &'a FiberedMapFamily, x: &Scalar, backend: Backend) -> Result<Self> {
        if Interval::unit().contains_point(x) == Tri::False {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        let (point, phi) = match (backend, x) {
            (Backend::Rational, Scalar::Rational(r)) => {
                if !system.supports_exact() {
                    return Err(Error::Unsupported("system needs the float backend".into()));
                }
                (Point::Exact(Frac::from_ratio(r)), InverseBranch::identity(Interval::unit()))
            }
            (Backend::Rational, Scalar::Float(_)) => {
                return Err(Error::InvalidArgument("exact backend needs a rational point".into()))
            }
            (Backend::Float { prec }, _) => (
                Point::Float(x.enclosure(prec).with_precision(prec)),
                InverseBranch::identity(Interval::unit()).to_enclosed(prec),
            ),
        };
        Ok(CylinderTracker {
            system,
            backend,
            point,
            phi,
            status: TrackerStatus::Active,
            digits: Vec::new(),
            symbols: Vec::new(),
        })
    }

    pub fn system(&self) -> &'a FiberedMapFamily {
        self.system
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn n(&self) -> usize {
        self.digits.len()
    }

    pub fn status(&self) -> TrackerStatus {
        self.status
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Current orbit point `T^n x`.
    pub fn point(&self) -> Scalar {
        match &self.point {
            Point::Exact(f) => Scalar::Rational(f.to_ratio()),
            Point::Float(e) => Scalar::Float(e.clone()),
        }
    }

    /// `T^n x` as an unreduced fraction (exact backend only).
    pub fn point_frac(&self) -> Option<&Frac> {
        match &self.point {
            Point::Exact(f) => Some(f),
            Point::Float(_) => None,
        }
    }

    /// `J_n`.
    pub fn image(&self) -> &Interval {
        self.phi.domain()
    }

    /// `Φ_n`.
    pub fn branch(&self) -> &InverseBranch {
        &self.phi
    }

    /// Digit of the current point under map `s`, without moving.
    pub fn peek_digit(&self, s: Symbol) -> Result<Digit> {
        match &self.point {
            Point::Exact(f) => self.system.digit_frac(s, f),
            Point::Float(e) => self.system.digit_enc(s, e),
        }
    }

    /// `log |T_s'|` at the current point, as a float.
    pub fn log_deriv_here(&self, s: Symbol) -> Result<f64> {
        match &self.point {
            Point::Exact(f) => {
                let j = self.system.digit_frac(s, f)?;
                self.system.log_deriv_frac(s, j, f)
            }
            Point::Float(e) => self.system.log_deriv_enc(s, e),
        }
    }

    /// Advance by one symbol and return the digit.
    pub fn step(&mut self, s: Symbol) -> Result<Digit> {
        if self.status != TrackerStatus::Active {
            return Err(Error::NotActive);
        }
        let r = self.step_inner(s);
        match &r {
            Err(Error::TerminalPoint) => self.status = TrackerStatus::FiniteExpansion,
            Err(Error::Ambiguous { .. }) => self.status = TrackerStatus::AmbiguousDigit,
            _ => {}
        }
        r
    }

    fn step_inner(&mut self, s: Symbol) -> Result<Digit> {
        let (j, next) = match &self.point {
            Point::Exact(f) => {
                let j = self.system.digit_frac(s, f)?;
                (j, Point::Exact(self.system.apply_frac(s, j, f)?))
            }
            Point::Float(e) => {
                let j = self.system.digit_enc(s, e)?;
                (j, Point::Float(self.system.apply_enc(s, j, e)?))
            }
        };
        let leaf = self.system.inverse_branch(s, j, self.backend)?;
        self.phi = InverseBranch::compose(&self.phi, &leaf)?;
        self.point = next;
        self.digits.push(j);
        self.symbols.push(s);
        Ok(j)
    }

    /// Apply several steps.
    pub fn advance(&mut self, symbols: &[Symbol]) -> Result<()> {
        for &s in symbols {
            self.step(s)?;
        }
        Ok(())
    }

    /// `C_n` with reduced endpoints.
    pub fn cylinder(&self) -> Result<Interval> {
        self.phi.range()
    }

    /// `C_n` over unreduced fractions (exact backend only).
    pub fn cylinder_frac(&self) -> Option<FracInterval> {
        self.phi.range_frac()
    }

    /// `λ(C_n)`.
    pub fn measure(&self) -> Result<Scalar> {
        self.phi.range_measure()
    }

    /// `λ(C_n)` as an unreduced fraction (exact backend only).
    pub fn measure_frac(&self) -> Option<Frac> {
        self.cylinder_frac().map(|c| c.measure())
    }

    /// `ln λ(C_n)`.
    pub fn ln_measure(&self) -> Result<f64> {
        match self.backend {
            Backend::Rational => {
                let m = self.measure_frac().ok_or(Error::DomainViolation)?;
                if m.is_zero() {
                    return Err(Error::DegenerateCylinder);
                }
                Ok(m.ln_abs())
            }
            Backend::Float { .. } => {
                let m = self.measure()?.enclosure(53);
                if m.lo().signum() <= 0 {
                    return Err(Error::DegenerateCylinder);
                }
                Ok(m.ln()?.mid())
            }
        }
    }

    /// `-ln λ(C_n) / n`.
    pub fn neg_log_measure_rate(&self) -> Result<f64> {
        if self.n() == 0 {
            return Err(Error::InvalidArgument("rate needs at least one step".into()));
        }
        Ok(-self.ln_measure()? / self.n() as f64)
    }
}

/// One row of a trajectory dump.
#[derive(Clone, Debug)]
pub struct TrajectoryRow {
    pub n: usize,
    pub symbol: Symbol,
    pub digit: Digit,
    pub cylinder: Interval,
    pub measure: Scalar,
    pub neg_log_rate: f64,
}

/// Run a tracker over a symbol prefix and collect every level.
pub fn trajectory(
    system: &FiberedMapFamily,
    x: &Scalar,
    symbols: &[Symbol],
    backend: Backend,
) -> Result<Vec<TrajectoryRow>> {
    let mut t = CylinderTracker::start(system, x, backend)?;
    let mut rows = Vec::with_capacity(symbols.len());
    for &s in symbols {
        let d = t.step(s)?;
        rows.push(TrajectoryRow {
            n: t.n(),
            symbol: s,
            digit: d,
            cylinder: t.cylinder()?,
            measure: t.measure()?,
            neg_log_rate: t.neg_log_measure_rate()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::BetaValue;
    use proptest::prelude::*;

    #[test]
    fn gauss_two_fifths_two_steps() {
        let g = FiberedMapFamily::gauss();
        let mut t = CylinderTracker::start(&g, &Scalar::ratio(2, 5), Backend::Rational).unwrap();
        t.advance(&[Symbol(0), Symbol(0)]).unwrap();
        assert_eq!(t.digits(), &[Digit(1), Digit(1)]);
        let c = t.cylinder().unwrap();
        assert_eq!(c.lo(), &Scalar::ratio(2, 5));
        assert_eq!(c.hi(), &Scalar::ratio(3, 7));
        assert_eq!(t.measure().unwrap(), Scalar::ratio(1, 35));
    }

    #[test]
    fn decimal_cylinder() {
        let s = FiberedMapFamily::integer_base(&[10]).unwrap();
        let mut t = CylinderTracker::start(&s, &Scalar::ratio(314159, 1_000_000), Backend::Rational).unwrap();
        t.advance(&[Symbol(10); 3]).unwrap();
        assert_eq!(t.cylinder().unwrap(), Interval::half_open(Scalar::ratio(314, 1000), Scalar::ratio(315, 1000)).unwrap());
        assert!((t.neg_log_measure_rate().unwrap() - 10f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gauss_hits_terminal_point() {
        let g = FiberedMapFamily::gauss();
        let mut t = CylinderTracker::start(&g, &Scalar::ratio(1, 2), Backend::Rational).unwrap();
        assert_eq!(t.step(Symbol(0)).unwrap(), Digit(1));
        assert_eq!(t.step(Symbol(0)), Err(Error::TerminalPoint));
        assert_eq!(t.status(), TrackerStatus::FiniteExpansion);
        assert_eq!(t.step(Symbol(0)), Err(Error::NotActive));
    }

    #[test]
    fn golden_beta_image_alternates() {
        let sys = FiberedMapFamily::beta(BetaValue::parse("golden").unwrap()).unwrap();
        let x = Scalar::ratio(7, 10);
        let mut t = CylinderTracker::start(&sys, &x, Backend::float()).unwrap();
        t.step(Symbol(0)).unwrap();
        // digit 1 leaves J_1 = [0, phi - 1)
        let hi = t.image().hi().to_f64();
        assert!((hi - 0.6180339887498949).abs() < 1e-12);
        assert_eq!(t.cylinder().unwrap().contains_point(&x), Tri::True);
    }

    #[test]
    fn exact_backend_rejects_irrational_beta() {
        let sys = FiberedMapFamily::beta(BetaValue::parse("golden").unwrap()).unwrap();
        assert!(CylinderTracker::start(&sys, &Scalar::ratio(1, 3), Backend::Rational).is_err());
    }

    proptest! {
        #[test]
        fn cylinders_nest_and_contain_the_point(
            num in 1i64..9_999_991, word in prop::collection::vec(0u32..2, 1..25)
        ) {
            let sys = FiberedMapFamily::gauss_renyi();
            let x = Scalar::ratio(num, 9_999_991);
            let mut t = CylinderTracker::start(&sys, &x, Backend::Rational).unwrap();
            let mut prev = Interval::unit();
            for s in word {
                match t.step(Symbol(s)) {
                    Ok(_) => {}
                    Err(Error::TerminalPoint) => break,
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
                let c = t.cylinder().unwrap();
                prop_assert_eq!(c.contains_point(&x), Tri::True);
                prop_assert_eq!(prev.contains(&c), Tri::True);
                prop_assert_eq!(t.measure().unwrap(), c.measure());
                prop_assert_eq!(t.image().measure(), Scalar::one());
                prev = c;
            }
        }

        #[test]
        fn float_cylinders_enclose_exact_ones(num in 1i64..99_991, word in prop::collection::vec(0usize..2, 1..30)) {
            let sys = FiberedMapFamily::integer_base(&[2, 3]).unwrap();
            let syms = [Symbol(2), Symbol(3)];
            let x = Scalar::ratio(num, 99_991);
            let mut te = CylinderTracker::start(&sys, &x, Backend::Rational).unwrap();
            let mut tf = CylinderTracker::start(&sys, &x, Backend::float()).unwrap();
            for i in word {
                let de = te.step(syms[i]).unwrap();
                match tf.step(syms[i]) {
                    Ok(df) => prop_assert_eq!(df, de),
                    Err(Error::Ambiguous { .. }) => break,
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
                prop_assert!(tf.cylinder().unwrap().encloses_exact(&te.cylinder().unwrap()));
                let me = te.measure().unwrap();
                prop_assert!(tf.measure().unwrap().enclosure(53).contains_ratio(me.as_rational().unwrap()));
            }
        }
    }
}
