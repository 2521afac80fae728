//! Lochs-type comparison of two systems: `m(n)` is the largest `m` with
//! `C^S_m(x) ⊇ C^T_n(x)`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;

use crate::base_process::{purpose, sample_point, BaseProcess, SymbolStream};
use crate::cylinder::CylinderTracker;
use crate::entropy::{closed_form_entropy, entropy_upper_bound};
use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, with_escalation, AmbiguityPolicy, RunConfig};
use crate::numeric::{Backend, Scalar, Tri};
use crate::stats::{mean_stderr, MeanStderr};
use crate::systems::{FiberedMapFamily, Symbol};

/// Symbols for the `S` side, whose needed length is not known in advance.
#[derive(Clone, Debug)]
pub enum SymbolSource<'a> {
    /// A fixed prefix; running past it is `PrefixExhausted`.
    Slice(&'a [Symbol]),
    Stream(SymbolStream),
}

impl SymbolSource<'_> {
    fn take(&mut self, i: usize) -> Result<Symbol> {
        match self {
            SymbolSource::Slice(s) => s.get(i).copied().ok_or(Error::PrefixExhausted { needed: i + 1 }),
            SymbolSource::Stream(st) => Ok(st.next_symbol()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LochsOptions {
    pub backend: Backend,
    pub policy: AmbiguityPolicy,
    /// Largest `S` depth explored before giving up.
    pub depth_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LochsSeries {
    /// `m[k] = m(k)` for `k = 0..=n`.
    pub m: Vec<usize>,
    /// `ln λ(C^T_k)` for `k = 0..=n`.
    pub ln_lambda_t: Vec<f64>,
    /// `ln λ(C^S_j)` for `j = 0..=m(n)`.
    pub ln_lambda_s: Vec<f64>,
    /// Deepest `S` level built (always `m(n) + 1`).
    pub s_depth: usize,
    /// Float precision that succeeded, if the float backend was used.
    pub prec_bits: Option<u32>,
}

impl LochsSeries {
    pub fn n(&self) -> usize {
        self.m.len() - 1
    }

    pub fn m_n(&self) -> usize {
        *self.m.last().expect("m(0) is always present")
    }
}

fn contains(outer: &CylinderTracker, inner: &CylinderTracker) -> Result<bool> {
    if let (Some(o), Some(i)) = (outer.cylinder_frac(), inner.cylinder_frac()) {
        return Ok(o.contains(&i));
    }
    match outer.cylinder()?.contains(&inner.cylinder()?) {
        Tri::True => Ok(true),
        Tri::False => Ok(false),
        Tri::Unknown => Err(Error::UnknownContainment {
            prec: match outer.backend() {
                Backend::Float { prec } => prec,
                Backend::Rational => 0,
            },
        }),
    }
}

fn series_at(
    sys_t: &FiberedMapFamily,
    omega_t: &[Symbol],
    sys_s: &FiberedMapFamily,
    mut omega_s: SymbolSource,
    x: &Scalar,
    backend: Backend,
    depth_cap: usize,
) -> Result<LochsSeries> {
    let n = omega_t.len();
    let mut t = CylinderTracker::start(sys_t, x, backend)?;
    let mut s = CylinderTracker::start(sys_s, x, backend)?;
    s.step(omega_s.take(0)?)?;
    let mut m = 0usize;
    let mut ms = Vec::with_capacity(n + 1);
    let mut ln_t = Vec::with_capacity(n + 1);
    let mut ln_s = vec![0.0];
    ms.push(0);
    ln_t.push(0.0);
    for &sym in omega_t {
        t.step(sym)?;
        while contains(&s, &t)? {
            m += 1;
            ln_s.push(s.ln_measure()?);
            if m + 1 > depth_cap {
                return Err(Error::DepthCapExceeded(depth_cap));
            }
            s.step(omega_s.take(m)?)?;
        }
        ms.push(m);
        ln_t.push(t.ln_measure()?);
    }
    let prec_bits = match backend {
        Backend::Float { prec } => Some(prec),
        Backend::Rational => None,
    };
    Ok(LochsSeries { m: ms, ln_lambda_t: ln_t, ln_lambda_s: ln_s, s_depth: m + 1, prec_bits })
}

/// `m(k)` for `k = 1..=omega_t.len()` along the point `x`.
pub fn lochs_series(
    sys_t: &FiberedMapFamily,
    omega_t: &[Symbol],
    sys_s: &FiberedMapFamily,
    omega_s: SymbolSource,
    x: &Scalar,
    opts: &LochsOptions,
) -> Result<LochsSeries> {
    with_escalation(opts.backend, opts.policy, |b| {
        series_at(sys_t, omega_t, sys_s, omega_s.clone(), x, b, opts.depth_cap)
    })
}

/// Checks `C^S_m ⊇ C^T_n` and `C^S_{m+1} ⊉ C^T_n` from fresh trackers.
pub fn verify_witness(
    sys_t: &FiberedMapFamily,
    omega_t: &[Symbol],
    sys_s: &FiberedMapFamily,
    omega_s: &[Symbol],
    x: &BigRational,
    m: usize,
) -> Result<bool> {
    if omega_s.len() < m + 1 {
        return Err(Error::PrefixExhausted { needed: m + 1 });
    }
    let xs = Scalar::Rational(x.clone());
    let mut t = CylinderTracker::start(sys_t, &xs, Backend::Rational)?;
    t.advance(omega_t)?;
    let mut s = CylinderTracker::start(sys_s, &xs, Backend::Rational)?;
    s.advance(&omega_s[..m])?;
    let holds = contains(&s, &t)?;
    s.step(omega_s[m])?;
    Ok(holds && !contains(&s, &t)?)
}

/// Default `S` depth cap: four times the expected depth when both
/// entropies are known in closed form, `64 n + 64` otherwise.
pub fn default_depth_cap(
    n: usize,
    sys_t: &FiberedMapFamily,
    base_t: &BaseProcess,
    sys_s: &FiberedMapFamily,
    base_s: &BaseProcess,
) -> usize {
    match (closed_form_entropy(sys_t, base_t), closed_form_entropy(sys_s, base_s)) {
        (Some(ht), Some(hs)) if hs > 0.0 => (n as f64 * ht / hs * 4.0).ceil() as usize + 64,
        _ => 64 * n + 64,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LochsTrial {
    pub trial: u64,
    pub n: usize,
    pub m: usize,
    pub ln_lambda_t: f64,
    pub ln_lambda_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathPoint {
    pub n: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LochsReport {
    pub trials: Vec<LochsTrial>,
    pub excluded: usize,
    pub exclusion_reasons: BTreeMap<&'static str, usize>,
    /// Statistics of `m(n) / n` over the kept trials.
    pub ratio: MeanStderr,
    /// Mean of `m(k) / k` at the checkpoints.
    pub path: Vec<PathPoint>,
    pub precision_digits: u32,
    pub depth_cap: usize,
}

/// Monte Carlo estimate of `m(n) / n` over random points and fibers.
pub struct LochsExperiment<'a> {
    sys_t: &'a FiberedMapFamily,
    base_t: &'a BaseProcess,
    sys_s: &'a FiberedMapFamily,
    base_s: &'a BaseProcess,
    cfg: RunConfig,
    checkpoints: Vec<usize>,
    depth_cap: Option<usize>,
}

impl<'a> LochsExperiment<'a> {
    pub fn new(
        sys_t: &'a FiberedMapFamily,
        base_t: &'a BaseProcess,
        sys_s: &'a FiberedMapFamily,
        base_s: &'a BaseProcess,
        cfg: RunConfig,
    ) -> Self {
        LochsExperiment { sys_t, base_t, sys_s, base_s, cfg, checkpoints: Vec::new(), depth_cap: None }
    }

    /// Levels at which path means are reported; `n` is always included.
    pub fn with_checkpoints(mut self, c: Vec<usize>) -> Self {
        self.checkpoints = c;
        self
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = Some(cap);
        self
    }

    pub fn run(&self) -> Result<LochsReport> {
        let cfg = &self.cfg;
        cfg.validate()?;
        self.base_t.validate_for(self.sys_t)?;
        self.base_s.validate_for(self.sys_s)?;
        let exact = self.sys_t.supports_exact() && self.sys_s.supports_exact();
        let digits = cfg.digits_for(cfg.n, entropy_upper_bound(self.sys_t, self.base_t));
        let (backend, policy) = match cfg.backend_for(exact)? {
            Backend::Rational => (Backend::Rational, cfg.policy),
            Backend::Float { prec } => {
                // Cylinders at depth n are about e^{-n h} wide; start there.
                let need = (digits as f64 * std::f64::consts::LN_10 / std::f64::consts::LN_2).ceil() as u32 + 64;
                let start = prec.max(need);
                let policy = match cfg.policy {
                    AmbiguityPolicy::Escalate { max_prec } => AmbiguityPolicy::Escalate { max_prec: max_prec.max(4 * start) },
                    p => p,
                };
                (Backend::Float { prec: start }, policy)
            }
        };
        let depth_cap = self
            .depth_cap
            .unwrap_or_else(|| default_depth_cap(cfg.n, self.sys_t, self.base_t, self.sys_s, self.base_s));
        let opts = LochsOptions { backend, policy, depth_cap };
        let bt = self.base_t.reseeded(cfg.seed, purpose::OMEGA_T);
        let bs = self.base_s.reseeded(cfg.seed, purpose::OMEGA_S);
        let set = run_trials(cfg.trials, |trial| {
            let x = Scalar::Rational(sample_point(cfg.seed, trial, digits)?);
            let omega_t = bt.sample_prefix(trial, cfg.n);
            lochs_series(self.sys_t, &omega_t, self.sys_s, SymbolSource::Stream(bs.stream(trial)), &x, &opts)
        })?;

        let mut checkpoints: Vec<usize> = self.checkpoints.iter().copied().filter(|&k| k >= 1 && k <= cfg.n).collect();
        checkpoints.push(cfg.n);
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let path = checkpoints
            .iter()
            .map(|&k| {
                let r: Vec<f64> = set.values.iter().map(|(_, s)| s.m[k] as f64 / k as f64).collect();
                let ms = mean_stderr(&r).expect("non-empty");
                PathPoint { n: k, mean_ratio: ms.mean, stderr: ms.stderr }
            })
            .collect();
        let trials: Vec<LochsTrial> = set
            .values
            .iter()
            .map(|(i, s)| LochsTrial {
                trial: *i,
                n: cfg.n,
                m: s.m_n(),
                ln_lambda_t: s.ln_lambda_t[cfg.n],
                ln_lambda_s: s.ln_lambda_s[s.m_n()],
            })
            .collect();
        let ratios: Vec<f64> = trials.iter().map(|t| t.m as f64 / cfg.n as f64).collect();
        Ok(LochsReport {
            ratio: mean_stderr(&ratios).expect("non-empty"),
            excluded: set.excluded_count(),
            exclusion_reasons: set.reason_counts(),
            trials,
            path,
            precision_digits: digits,
            depth_cap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn opts() -> LochsOptions {
        LochsOptions { backend: Backend::Rational, policy: AmbiguityPolicy::Error, depth_cap: 1000 }
    }

    #[test]
    fn decimal_against_itself_is_identity() {
        let dec = FiberedMapFamily::integer_base(&[10]).unwrap();
        // S runs one level ahead, so it needs n + 1 symbols.
        let w = vec![Symbol(10); 31];
        let s = lochs_series(&dec, &w[..30], &dec, SymbolSource::Slice(&w), &Scalar::ratio(12345, 99991), &opts()).unwrap();
        assert_eq!(s.m, (0..=30).collect::<Vec<_>>());
    }

    #[test]
    fn binary_inside_decimal() {
        // C^T_n for base 2 has length 2^-n; a decimal cylinder of length
        // 10^-m holds it only when it is aligned, so m(n) <= floor(n log10 2).
        let bin = FiberedMapFamily::integer_base(&[2]).unwrap();
        let dec = FiberedMapFamily::integer_base(&[10]).unwrap();
        let wt = vec![Symbol(2); 60];
        let ws = vec![Symbol(10); 40];
        let x = r(314159, 1000000);
        let s = lochs_series(&bin, &wt, &dec, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts()).unwrap();
        for (n, &m) in s.m.iter().enumerate() {
            assert!(m as f64 <= n as f64 * 2f64.log10() + 1e-12);
            assert!(verify_witness(&bin, &wt[..n], &dec, &ws, &x, m).unwrap());
        }
    }

    #[test]
    fn exhausted_prefix_and_cap() {
        let dec = FiberedMapFamily::integer_base(&[10]).unwrap();
        let w = vec![Symbol(10); 10];
        let short = vec![Symbol(10); 3];
        let x = Scalar::ratio(1, 7);
        let e = lochs_series(&dec, &w, &dec, SymbolSource::Slice(&short), &x, &opts()).unwrap_err();
        assert_eq!(e, Error::PrefixExhausted { needed: 4 });
        let o = LochsOptions { depth_cap: 5, ..opts() };
        let e = lochs_series(&dec, &w, &dec, SymbolSource::Slice(&w), &x, &o).unwrap_err();
        assert_eq!(e, Error::DepthCapExceeded(5));
    }

    #[test]
    fn float_backend_matches_exact() {
        let g = FiberedMapFamily::gauss();
        let dec = FiberedMapFamily::integer_base(&[10]).unwrap();
        let wt = vec![Symbol(10); 40];
        let ws = vec![Symbol(0); 200];
        let num: BigInt = "27182818284590452353602874713526624977572470936999595749669676277".parse().unwrap();
        let x = Scalar::Rational(BigRational::new(num, BigInt::from(10).pow(65)));
        let ex = lochs_series(&dec, &wt, &g, SymbolSource::Slice(&ws), &x, &opts()).unwrap();
        let fo = LochsOptions {
            backend: Backend::Float { prec: 64 },
            policy: AmbiguityPolicy::Escalate { max_prec: 2048 },
            depth_cap: 1000,
        };
        let fl = lochs_series(&dec, &wt, &g, SymbolSource::Slice(&ws), &x, &fo).unwrap();
        assert_eq!(ex.m, fl.m);
    }

    #[test]
    fn experiment_is_deterministic() {
        let t = FiberedMapFamily::integer_base(&[2, 3]).unwrap();
        let bt = BaseProcess::bernoulli(vec![Symbol(2), Symbol(3)], vec![r(1, 2), r(1, 2)], 0).unwrap();
        let s = FiberedMapFamily::integer_base(&[10]).unwrap();
        let bs = BaseProcess::singleton(Symbol(10));
        let cfg = RunConfig::new(50, 6, 11);
        let a = LochsExperiment::new(&t, &bt, &s, &bs, cfg.clone()).with_checkpoints(vec![10, 25]).run().unwrap();
        let b = LochsExperiment::new(&t, &bt, &s, &bs, cfg).run().unwrap();
        assert_eq!(a.trials.iter().map(|x| x.m).collect::<Vec<_>>(), b.trials.iter().map(|x| x.m).collect::<Vec<_>>());
        assert_eq!(a.path.len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn m_is_monotone_and_witnessed(k in 1u64..999_999, bits in prop::collection::vec(any::<bool>(), 25)) {
            let t = FiberedMapFamily::integer_base(&[2, 3]).unwrap();
            let s = FiberedMapFamily::integer_base(&[10]).unwrap();
            let wt: Vec<Symbol> = bits.iter().map(|b| Symbol(if *b { 3 } else { 2 })).collect();
            let ws = vec![Symbol(10); 40];
            let x = r(k as i64, 1_000_000);
            let ser = lochs_series(&t, &wt, &s, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts()).unwrap();
            prop_assert!(ser.m.windows(2).all(|w| w[0] <= w[1]));
            let n = wt.len();
            prop_assert!(verify_witness(&t, &wt, &s, &ws, &x, ser.m[n]).unwrap());
        }
    }
}
