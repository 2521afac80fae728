//! Brute-force ground truth at small depth.
//!
//! Cylinders are built by pulling cells back one level at a time through
//! local inverse formulas and intersecting, folding the word from the right.
//! Nothing here goes through composed inverse branches or the tracker.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{BetaValue, Digit, FiberedMapFamily, Symbol, SystemKind};

/// Largest number of words `enumerate_cylinders` will build.
pub const WORD_GUARD: u128 = 10_000_000;

/// Exact interval with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RatInterval {
    #[serde(serialize_with = "ser_ratio")]
    pub lo: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub hi: BigRational,
    pub lo_open: bool,
    pub hi_open: bool,
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl RatInterval {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    pub fn measure(&self) -> BigRational {
        if self.is_empty() {
            BigRational::zero()
        } else {
            &self.hi - &self.lo
        }
    }

    pub fn intersect(&self, o: &RatInterval) -> RatInterval {
        let (lo, lo_open) = if self.lo > o.lo {
            (self.lo.clone(), self.lo_open)
        } else if o.lo > self.lo {
            (o.lo.clone(), o.lo_open)
        } else {
            (self.lo.clone(), self.lo_open || o.lo_open)
        };
        let (hi, hi_open) = if self.hi < o.hi {
            (self.hi.clone(), self.hi_open)
        } else if o.hi < self.hi {
            (o.hi.clone(), o.hi_open)
        } else {
            (self.hi.clone(), self.hi_open || o.hi_open)
        };
        RatInterval { lo, hi, lo_open, hi_open }
    }

    pub fn contains_point(&self, x: &BigRational) -> bool {
        (if self.lo_open { &self.lo < x } else { &self.lo <= x }) && (if self.hi_open { x < &self.hi } else { x <= &self.hi })
    }

    pub fn contains(&self, inner: &RatInterval) -> bool {
        if inner.is_empty() {
            return true;
        }
        let left = self.lo < inner.lo || (self.lo == inner.lo && (!self.lo_open || inner.lo_open));
        let right = self.hi > inner.hi || (self.hi == inner.hi && (!self.hi_open || inner.hi_open));
        left && right
    }

    /// Same set, compared endpoint by endpoint with openness.
    pub fn same_set(&self, iv: &crate::interval::Interval) -> bool {
        if self.is_empty() || iv.is_empty() {
            return self.is_empty() && iv.is_empty();
        }
        match (iv.lo().as_rational(), iv.hi().as_rational()) {
            (Some(lo), Some(hi)) => {
                lo == &self.lo && hi == &self.hi && iv.lo_open() == self.lo_open && iv.hi_open() == self.hi_open
            }
            _ => false,
        }
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
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

/// Local inverse of one branch, `y -> (p y + q) / (r y + s)`.
#[derive(Clone, Debug)]
struct Local {
    p: BigRational,
    q: BigRational,
    r: BigRational,
    s: BigRational,
}

impl Local {
    fn affine(a: BigRational, b: BigRational) -> Local {
        Local { p: a, q: b, r: BigRational::zero(), s: BigRational::one() }
    }

    fn int(p: i64, q: i64, r: i64, s: i64) -> Local {
        let f = |v: i64| BigRational::from_integer(BigInt::from(v));
        Local { p: f(p), q: f(q), r: f(r), s: f(s) }
    }

    fn eval(&self, y: &BigRational) -> BigRational {
        (&self.p * y + &self.q) / (&self.r * y + &self.s)
    }

    /// The forward map on the cell: `x -> (s x - q) / (p - r x)`.
    fn forward(&self, x: &BigRational) -> BigRational {
        (&self.s * x - &self.q) / (&self.p - &self.r * x)
    }

    fn increasing(&self) -> bool {
        (&self.p * &self.s - &self.q * &self.r).is_positive()
    }

    /// Image of an interval of `[0, 1]`, where the map has no pole.
    fn image(&self, iv: &RatInterval) -> RatInterval {
        let (a, b) = (self.eval(&iv.lo), self.eval(&iv.hi));
        if self.increasing() {
            RatInterval { lo: a, hi: b, lo_open: iv.lo_open, hi_open: iv.hi_open }
        } else {
            RatInterval { lo: b, hi: a, lo_open: iv.hi_open, hi_open: iv.lo_open }
        }
    }
}

#[derive(Clone, Debug)]
struct MapCells {
    cells: Vec<(Digit, RatInterval)>,
    residual: BigRational,
}

/// Exhaustive cylinder machinery for one system.
#[derive(Clone, Debug)]
pub struct Oracle<'a> {
    sys: &'a FiberedMapFamily,
    cap: Option<u64>,
    cells: BTreeMap<Symbol, MapCells>,
}

fn rat(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl<'a> Oracle<'a> {
    /// `cap` truncates infinite partitions at that digit.
    pub fn new(sys: &'a FiberedMapFamily, cap: Option<u64>) -> Result<Self> {
        if !sys.supports_exact() {
            return Err(Error::Unsupported("the oracle is exact only".into()));
        }
        let mut cells = BTreeMap::new();
        for &s in sys.symbols() {
            let list = sys.cells(s, cap)?;
            let cs = list
                .cells
                .iter()
                .map(|(d, iv)| {
                    let lo = iv.lo().as_rational().expect("exact").clone();
                    let hi = iv.hi().as_rational().expect("exact").clone();
                    (*d, RatInterval { lo, hi, lo_open: iv.lo_open(), hi_open: iv.hi_open() })
                })
                .collect();
            let residual = list.residual.as_rational().expect("exact").clone();
            cells.insert(s, MapCells { cells: cs, residual });
        }
        Ok(Oracle { sys, cap, cells })
    }

    pub fn cap(&self) -> Option<u64> {
        self.cap
    }

    fn map_cells(&self, s: Symbol) -> Result<&MapCells> {
        self.cells.get(&s).ok_or(Error::UnknownSymbol(s.0))
    }

    fn local(&self, s: Symbol, j: Digit) -> Result<Local> {
        let jj = j.0 as i64;
        Ok(match self.sys.kind() {
            SystemKind::IntegerBase { .. } => {
                let b = rat(s.0 as u64);
                Local::affine(b.recip(), rat(j.0) / b)
            }
            SystemKind::Gls { maps } => {
                let m = maps.get(s.0 as usize).ok_or(Error::UnknownSymbol(s.0))?;
                let k = j.0 as usize;
                let qk = m.q[k].clone();
                let start: BigRational = m.q[..k].iter().sum();
                if m.decreasing[k] {
                    Local::affine(-qk.clone(), start + qk)
                } else {
                    Local::affine(qk, start)
                }
            }
            SystemKind::Beta { beta } => beta_local(beta, j)?,
            SystemKind::BetaFamily { betas, .. } => {
                beta_local(betas.get(s.0 as usize).ok_or(Error::UnknownSymbol(s.0))?, j)?
            }
            SystemKind::Gauss => Local::int(0, 1, 1, jj + 1),
            SystemKind::Renyi => Local::int(1, jj, 1, jj + 1),
            SystemKind::GaussRenyi => {
                if s.0 == 0 {
                    Local::int(0, 1, 1, jj + 1)
                } else {
                    Local::int(1, jj, 1, jj + 1)
                }
            }
        })
    }

    /// `cell_j ∩ T_s^{-1}(iv)`.
    fn pullback(&self, s: Symbol, j: Digit, cell: &RatInterval, iv: &RatInterval) -> Result<RatInterval> {
        Ok(cell.intersect(&self.local(s, j)?.image(iv)))
    }

    /// The cylinder of a digit word along `omega`, folded from the right.
    pub fn cylinder_of_word(&self, omega: &[Symbol], word: &[Digit]) -> Result<RatInterval> {
        if omega.len() < word.len() {
            return Err(Error::PrefixExhausted { needed: word.len() });
        }
        let mut acc: Option<RatInterval> = None;
        for (k, &j) in word.iter().enumerate().rev() {
            let s = omega[k];
            let cell = self
                .map_cells(s)?
                .cells
                .iter()
                .find(|(d, _)| *d == j)
                .map(|c| c.1.clone())
                .ok_or(Error::EmptyCell { symbol: s.0, digit: j.0 })?;
            // The innermost set is the cell itself, not a pullback of [0,1):
            // decreasing branches send the left endpoint of a cell to 1.
            acc = Some(match acc {
                None => cell,
                Some(a) => self.pullback(s, j, &cell, &a)?,
            });
        }
        Ok(acc.unwrap_or(RatInterval { lo: BigRational::zero(), hi: BigRational::one(), lo_open: false, hi_open: true }))
    }

    /// Digits of `x` by scanning cells and applying the forward formula.
    pub fn digits_of(&self, omega: &[Symbol], x: &BigRational, n: usize) -> Result<Vec<Digit>> {
        let mut y = x.clone();
        let mut out = Vec::with_capacity(n);
        for &s in &omega[..n.min(omega.len())] {
            let (j, _) = self
                .map_cells(s)?
                .cells
                .iter()
                .find(|(_, c)| c.contains_point(&y))
                .ok_or_else(|| Error::OutOfDomain(format!("{y} is in no listed cell")))?;
            y = self.local(s, *j)?.forward(&y);
            out.push(*j);
        }
        if out.len() < n {
            return Err(Error::PrefixExhausted { needed: n });
        }
        Ok(out)
    }

    /// The level-`n` cylinder containing `x`, by path descent.
    pub fn cylinder_of_point(&self, omega: &[Symbol], x: &BigRational, n: usize) -> Result<(Vec<Digit>, RatInterval)> {
        let word = self.digits_of(omega, x, n)?;
        let c = self.cylinder_of_word(omega, &word)?;
        debug_assert!(c.contains_point(x));
        Ok((word, c))
    }

    /// Number of words an exhaustive enumeration would visit, saturating.
    pub fn word_count(&self, omega: &[Symbol], n: usize) -> Result<u128> {
        let mut total: u128 = 1;
        for &s in &omega[..n] {
            total = total.saturating_mul(self.map_cells(s)?.cells.len() as u128);
        }
        Ok(total)
    }

    /// Every non-empty level-`n` cylinder along `omega`, sorted by position.
    pub fn enumerate_cylinders(&self, omega: &[Symbol], n: usize) -> Result<CylinderTable> {
        if omega.len() < n {
            return Err(Error::PrefixExhausted { needed: n });
        }
        let count = self.word_count(omega, n)?;
        if count > WORD_GUARD {
            return Err(Error::GuardExceeded(count));
        }
        let unit = RatInterval { lo: BigRational::zero(), hi: BigRational::one(), lo_open: false, hi_open: true };
        // Suffixes (reversed word, interval) built from the last level back.
        let mut layer: Vec<(Vec<Digit>, RatInterval)> = if n == 0 {
            vec![(Vec::new(), unit)]
        } else {
            self.map_cells(omega[n - 1])?.cells.iter().map(|(j, c)| (vec![*j], c.clone())).collect()
        };
        for k in (0..n.saturating_sub(1)).rev() {
            let s = omega[k];
            let mc = self.map_cells(s)?;
            let mut next = Vec::with_capacity(layer.len() * mc.cells.len());
            for (suffix, iv) in &layer {
                for (j, cell) in &mc.cells {
                    let c = self.pullback(s, *j, cell, iv)?;
                    if !c.is_empty() {
                        let mut w = suffix.clone();
                        w.push(*j);
                        next.push((w, c));
                    }
                }
            }
            layer = next;
        }
        let mut entries: Vec<(Vec<Digit>, RatInterval)> = layer
            .into_iter()
            .map(|(mut w, c)| {
                w.reverse();
                (w, c)
            })
            .collect();
        entries.sort_by(|a, b| a.1.lo.cmp(&b.1.lo).then(a.1.lo_open.cmp(&b.1.lo_open)));
        let mut residual = BigRational::zero();
        if n >= 1 {
            residual = self.map_cells(omega[0])?.residual.clone();
        }
        Ok(CylinderTable { n, omega: omega[..n].to_vec(), entries, first_level_residual: residual })
    }
}

fn beta_local(beta: &BetaValue, j: Digit) -> Result<Local> {
    let b = beta.as_rational().ok_or_else(|| Error::Unsupported("the oracle needs a rational beta".into()))?;
    Ok(Local::affine(b.recip(), rat(j.0) / b))
}

/// All level-`n` cylinders along one symbol prefix.
#[derive(Clone, Debug, Serialize)]
pub struct CylinderTable {
    pub n: usize,
    pub omega: Vec<Symbol>,
    pub entries: Vec<(Vec<Digit>, RatInterval)>,
    /// Uncovered mass of the first map's truncated partition.
    #[serde(serialize_with = "ser_ratio")]
    pub first_level_residual: BigRational,
}

impl CylinderTable {
    /// Entry containing `x`, by binary search on the sorted left endpoints.
    pub fn lookup(&self, x: &BigRational) -> Option<&(Vec<Digit>, RatInterval)> {
        let i = self.entries.partition_point(|(_, c)| &c.lo <= x);
        // Touching neighbours may share an endpoint; check both sides.
        [i.checked_sub(1), i.checked_sub(2)]
            .into_iter()
            .flatten()
            .map(|k| &self.entries[k])
            .find(|(_, c)| c.contains_point(x))
    }

    /// `(word, lo, hi, lambda)` rows with `p/q` values.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        let r = |q: &BigRational| format!("{}/{}", q.numer(), q.denom());
        self.entries
            .iter()
            .map(|(w, c)| {
                let word = w.iter().map(|d| d.0.to_string()).collect::<Vec<_>>().join(".");
                [word, r(&c.lo), r(&c.hi), r(&c.measure())]
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub count: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub total: BigRational,
    /// `1 - total`.
    #[serde(serialize_with = "ser_ratio")]
    pub residual: BigRational,
    pub disjoint: bool,
    /// Total is exactly 1 with no residual allowed, or the residual is
    /// explained by truncation.
    pub ok: bool,
}

/// Pairwise disjointness and exact total mass of a table.
pub fn check_partition(table: &CylinderTable, capped: bool) -> PartitionReport {
    let total: BigRational = table.entries.iter().map(|(_, c)| c.measure()).sum();
    let residual = BigRational::one() - &total;
    let disjoint = table.entries.windows(2).all(|w| {
        let (a, b) = (&w[0].1, &w[1].1);
        a.hi < b.lo || (a.hi == b.lo && (a.hi_open || b.lo_open))
    });
    let ok = disjoint && if capped { !residual.is_negative() } else { residual.is_zero() };
    PartitionReport { count: table.entries.len(), total, residual, disjoint, ok }
}

/// Largest `m <= m_cap` whose `S`-cylinder of `x` contains `t_cyl`, found
/// level by level. Containment at `m_cap` is an error.
pub fn brute_force_m(
    t_cyl: &RatInterval,
    oracle_s: &Oracle,
    omega_s: &[Symbol],
    x: &BigRational,
    m_cap: usize,
) -> Result<usize> {
    if omega_s.len() < m_cap {
        return Err(Error::PrefixExhausted { needed: m_cap });
    }
    let word = oracle_s.digits_of(omega_s, x, m_cap)?;
    let mut best = 0;
    for m in 1..=m_cap {
        let c = oracle_s.cylinder_of_word(omega_s, &word[..m])?;
        if !c.contains(t_cyl) {
            return Ok(best);
        }
        best = m;
    }
    Err(Error::DepthCapExceeded(m_cap))
}
