//! Shift-invariant symbol processes and seeded sampling.
//!
//! Every random draw comes from a ChaCha stream keyed by the master seed
//! and a purpose tag, with the trial index as the stream number, so the
//! values of a trial do not depend on how trials are scheduled.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::systems::{FiberedMapFamily, Symbol};

/// Stream purpose tags.
pub mod purpose {
    pub const OMEGA_T: u64 = 1;
    pub const OMEGA_S: u64 = 2;
    pub const POINT: u64 = 3;
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseKind {
    Singleton(Symbol),
    /// i.i.d. symbols with positive weights summing to 1.
    Bernoulli { symbols: Vec<Symbol>, weights: Vec<BigRational> },
    /// Cyclic word started at a uniformly random phase.
    Periodic { word: Vec<Symbol> },
}

#[derive(Clone, Debug)]
pub struct BaseProcess {
    kind: BaseKind,
    seed: u64,
    purpose: u64,
    // Cumulative weights scaled to 2^64; the last one is 2^64.
    thresholds: Vec<u128>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for `(seed, purpose, trial)`.
pub fn trial_rng(seed: u64, purpose: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose)));
    rng.set_stream(trial);
    rng
}

impl BaseProcess {
    pub fn new(kind: BaseKind, seed: u64) -> Result<Self> {
        let mut thresholds = Vec::new();
        match &kind {
            BaseKind::Singleton(_) => {}
            BaseKind::Bernoulli { symbols, weights } => {
                if symbols.is_empty() || symbols.len() != weights.len() {
                    return Err(Error::InvalidBase("symbols and weights must be non-empty and match".into()));
                }
                let mut sorted = symbols.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != symbols.len() {
                    return Err(Error::InvalidBase("duplicate symbol".into()));
                }
                if weights.iter().any(|w| !w.is_positive()) {
                    return Err(Error::InvalidBase("weights must be positive".into()));
                }
                let total: BigRational = weights.iter().sum();
                if !total.is_one() {
                    return Err(Error::InvalidBase(format!("weights sum to {total}, not 1")));
                }
                let scale = BigInt::one() << 64usize;
                let mut acc = BigRational::zero();
                for w in weights {
                    acc += w;
                    let t = (&acc * BigRational::from_integer(scale.clone())).floor().to_integer();
                    thresholds.push(t.to_u128().expect("at most 2^64"));
                }
            }
            BaseKind::Periodic { word } => {
                if word.is_empty() {
                    return Err(Error::InvalidBase("empty periodic word".into()));
                }
            }
        }
        Ok(BaseProcess { kind, seed, purpose: purpose::OMEGA_T, thresholds })
    }

    pub fn singleton(s: Symbol) -> Self {
        BaseProcess::new(BaseKind::Singleton(s), 0).expect("valid")
    }

    pub fn bernoulli(symbols: Vec<Symbol>, weights: Vec<BigRational>, seed: u64) -> Result<Self> {
        BaseProcess::new(BaseKind::Bernoulli { symbols, weights }, seed)
    }

    pub fn periodic(word: Vec<Symbol>, seed: u64) -> Result<Self> {
        BaseProcess::new(BaseKind::Periodic { word }, seed)
    }

    /// Same process drawing from another seed and purpose.
    pub fn reseeded(&self, seed: u64, purpose: u64) -> Self {
        BaseProcess { seed, purpose, ..self.clone() }
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn purpose(&self) -> u64 {
        self.purpose
    }

    /// Symbols with positive probability.
    pub fn support(&self) -> Vec<Symbol> {
        match &self.kind {
            BaseKind::Singleton(s) => vec![*s],
            BaseKind::Bernoulli { symbols, .. } => symbols.clone(),
            BaseKind::Periodic { word } => {
                let mut w = word.clone();
                w.sort();
                w.dedup();
                w
            }
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, BaseKind::Singleton(_))
    }

    /// Check every symbol of the support against a system.
    pub fn validate_for(&self, sys: &FiberedMapFamily) -> Result<()> {
        for s in self.support() {
            if !sys.symbols().contains(&s) {
                return Err(Error::InvalidBase(format!("symbol {s} is not part of the system")));
            }
        }
        Ok(())
    }

    /// Probability of a symbol in the one-dimensional marginal.
    pub fn weight_of(&self, s: Symbol) -> Option<BigRational> {
        match &self.kind {
            BaseKind::Singleton(t) => Some(if *t == s { BigRational::one() } else { BigRational::zero() }),
            BaseKind::Bernoulli { symbols, weights } => {
                Some(symbols.iter().position(|t| *t == s).map_or_else(BigRational::zero, |i| weights[i].clone()))
            }
            BaseKind::Periodic { word } => {
                let c = word.iter().filter(|t| **t == s).count();
                Some(BigRational::new(BigInt::from(c), BigInt::from(word.len())))
            }
        }
    }

    /// Lazy symbol stream of one trial.
    pub fn stream(&self, trial: u64) -> SymbolStream {
        let mut rng = trial_rng(self.seed, self.purpose, trial);
        let pos = match &self.kind {
            BaseKind::Periodic { word } => rng.random_range(0..word.len()),
            _ => 0,
        };
        SymbolStream { process: self.clone(), rng, pos }
    }

    /// Stream of a periodic process started at a given phase.
    pub fn stream_with_phase(&self, phase: usize) -> Result<SymbolStream> {
        match &self.kind {
            BaseKind::Periodic { word } => Ok(SymbolStream {
                process: self.clone(),
                rng: trial_rng(self.seed, self.purpose, 0),
                pos: phase % word.len(),
            }),
            _ => Err(Error::InvalidBase("phase only applies to periodic processes".into())),
        }
    }

    /// First `n` symbols of trial `trial`.
    pub fn sample_prefix(&self, trial: u64, n: usize) -> Vec<Symbol> {
        let mut s = self.stream(trial);
        (0..n).map(|_| s.next_symbol()).collect()
    }
}

/// Position-deterministic generator of symbols.
#[derive(Clone, Debug)]
pub struct SymbolStream {
    process: BaseProcess,
    rng: ChaCha8Rng,
    pos: usize,
}

impl SymbolStream {
    pub fn next_symbol(&mut self) -> Symbol {
        match &self.process.kind {
            BaseKind::Singleton(s) => *s,
            BaseKind::Bernoulli { symbols, .. } => {
                let u = self.rng.next_u64() as u128;
                let i = self.process.thresholds.partition_point(|&t| t <= u);
                symbols[i.min(symbols.len() - 1)]
            }
            BaseKind::Periodic { word } => {
                let s = word[self.pos % word.len()];
                self.pos += 1;
                s
            }
        }
    }
}

impl Iterator for SymbolStream {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        Some(self.next_symbol())
    }
}

/// Uniform point of the grid `{k / 10^digits : 0 <= k < 10^digits}`.
pub fn sample_point(seed: u64, trial: u64, digits: u32) -> Result<BigRational> {
    if digits == 0 {
        return Err(Error::InvalidArgument("precision_digits must be positive".into()));
    }
    let mut rng = trial_rng(seed, purpose::POINT, trial);
    let modulus = num_traits::pow(BigUint::from(10u32), digits as usize);
    let bits = (&modulus - 1u32).bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask: u32 = if bits % 32 == 0 { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut limbs: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
        if let Some(last) = limbs.last_mut() {
            *last &= top_mask;
        }
        let k = BigUint::new(limbs);
        if k < modulus {
            return Ok(BigRational::new(BigInt::from_biguint(Sign::Plus, k), BigInt::from_biguint(Sign::Plus, modulus)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    #[test]
    fn bernoulli_frequencies_are_close() {
        let bp = BaseProcess::bernoulli(
            vec![Symbol(2), Symbol(3)],
            vec![BigRational::new(1.into(), 4.into()), BigRational::new(3.into(), 4.into())],
            7,
        )
        .unwrap();
        let w = bp.sample_prefix(0, 40_000);
        let twos = w.iter().filter(|s| **s == Symbol(2)).count() as f64 / 40_000.0;
        assert!((twos - 0.25).abs() < 0.01, "{twos}");
    }

    #[test]
    fn periodic_with_phase() {
        let bp = BaseProcess::periodic(vec![Symbol(0), Symbol(1)], 1).unwrap();
        let mut s = bp.stream_with_phase(1).unwrap();
        let w: Vec<_> = (0..4).map(|_| s.next_symbol()).collect();
        assert_eq!(w, vec![Symbol(1), Symbol(0), Symbol(1), Symbol(0)]);
    }

    #[test]
    fn invalid_bases_rejected() {
        assert!(BaseProcess::bernoulli(vec![Symbol(2), Symbol(2)], vec![half(), half()], 0).is_err());
        assert!(BaseProcess::bernoulli(vec![Symbol(2)], vec![half()], 0).is_err());
        assert!(BaseProcess::periodic(vec![], 0).is_err());
        let bp = BaseProcess::bernoulli(vec![Symbol(2), Symbol(5)], vec![half(), half()], 0).unwrap();
        let sys = FiberedMapFamily::integer_base(&[2, 3]).unwrap();
        assert!(bp.validate_for(&sys).is_err());
    }

    #[test]
    fn sample_point_is_on_grid() {
        let x = sample_point(3, 9, 50).unwrap();
        let d = num_traits::pow(BigInt::from(10), 50);
        assert!((&x * BigRational::from_integer(d.clone())).is_integer());
        assert!(x >= BigRational::zero() && x < BigRational::one());
        assert_eq!(x, sample_point(3, 9, 50).unwrap());
        assert_ne!(x, sample_point(3, 10, 50).unwrap());
    }

    proptest! {
        #[test]
        fn prefixes_are_position_deterministic(seed in any::<u64>(), trial in 0u64..1000, n in 1usize..50) {
            let bp = BaseProcess::bernoulli(vec![Symbol(2), Symbol(3)], vec![half(), half()], seed).unwrap();
            let long = bp.sample_prefix(trial, n + 10);
            let short = bp.sample_prefix(trial, n);
            prop_assert_eq!(&long[..n], &short[..]);
        }
    }
}
