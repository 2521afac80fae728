//! Fiber entropy: closed forms, three Monte Carlo estimators, the
//! integer-base variance, the zero-property series and CLT checks.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::base_process::{purpose, sample_point, BaseKind, BaseProcess};
use crate::cylinder::CylinderTracker;
use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, with_escalation, RunConfig, TrialSet};
use crate::numeric::{ln_ratio, Backend, Frac, Scalar};
use crate::stats::{ks_distance, mean_stderr, KsResult};
use crate::systems::{FiberedMapFamily, Symbol, SystemKind};

/// Entropy of the Gauss map, `π² / (6 ln 2)`.
pub const GAUSS_ENTROPY: f64 = std::f64::consts::PI * std::f64::consts::PI / (6.0 * std::f64::consts::LN_2);

/// `6 ln 2 ln 10 / π²`, the decimal-to-continued-fraction digit ratio.
pub fn lochs_constant() -> f64 {
    std::f64::consts::LN_10 / GAUSS_ENTROPY
}

fn ln_q(q: &BigRational) -> f64 {
    ln_ratio(q.numer(), q.denom())
}

fn weights_f64(base: &BaseProcess) -> Vec<(Symbol, f64)> {
    match base.kind() {
        BaseKind::Singleton(s) => vec![(*s, 1.0)],
        BaseKind::Bernoulli { symbols, weights } => symbols
            .iter()
            .zip(weights)
            .map(|(s, w)| (*s, w.to_f64().expect("finite weight")))
            .collect(),
        BaseKind::Periodic { word } => {
            let m = word.len() as f64;
            base.support()
                .into_iter()
                .map(|s| (s, word.iter().filter(|t| **t == s).count() as f64 / m))
                .collect()
        }
    }
}

/// Expected value of a per-symbol quantity under the base's marginal.
fn base_average(base: &BaseProcess, mut f: impl FnMut(Symbol) -> Option<f64>) -> Option<f64> {
    let mut acc = 0.0;
    for (s, p) in weights_f64(base) {
        acc += p * f(s)?;
    }
    Some(acc)
}

/// Fiber entropy in closed form when one is known.
///
/// Constant-slope maps give `E[ln β]`, GLS maps `E[-Σ q ln q]`, and the
/// deterministic Gauss map `π²/(6 ln 2)`.
pub fn closed_form_entropy(sys: &FiberedMapFamily, base: &BaseProcess) -> Option<f64> {
    match sys.kind() {
        SystemKind::IntegerBase { .. } | SystemKind::Beta { .. } | SystemKind::BetaFamily { .. } => {
            base_average(base, |s| Some(sys.beta_value(s).ok()??.to_f64().ln()))
        }
        SystemKind::Gls { maps } => base_average(base, |s| {
            let m = maps.get(s.0 as usize)?;
            Some(m.q.iter().map(|q| -q.to_f64().unwrap() * ln_q(q)).sum())
        }),
        SystemKind::Gauss => Some(GAUSS_ENTROPY),
        SystemKind::GaussRenyi => match base.kind() {
            BaseKind::Singleton(Symbol(0)) => Some(GAUSS_ENTROPY),
            _ => None,
        },
        SystemKind::Renyi => None,
    }
}

/// Upper bound on the per-step cylinder shrinking rate, used to size grids.
pub fn entropy_upper_bound(sys: &FiberedMapFamily, base: &BaseProcess) -> f64 {
    let per = |s: Symbol| -> f64 {
        match sys.kind() {
            SystemKind::IntegerBase { .. } | SystemKind::Beta { .. } | SystemKind::BetaFamily { .. } => {
                sys.beta_value(s).ok().flatten().map(|b| b.ceil().to_f64().unwrap().ln()).unwrap_or(1.0)
            }
            SystemKind::Gls { maps } => maps[s.0 as usize]
                .q
                .iter()
                .map(|q| -ln_q(q))
                .fold(0.0, f64::max),
            _ => 3.0,
        }
    };
    base.support().into_iter().map(per).fold(0.0, f64::max).max(0.5)
}

/// `sqrt(Σ p ln² b - (Σ p ln b)²)` for i.i.d. integer bases.
pub fn sigma_integer_base(bases: &[u32], weights: &[f64]) -> Result<f64> {
    if bases.len() != weights.len() || bases.is_empty() {
        return Err(Error::InvalidArgument("bases and weights must match".into()));
    }
    let mut distinct: Vec<u32> = bases.iter().zip(weights).filter(|(_, p)| **p > 0.0).map(|(b, _)| *b).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("variance is zero for a single base".into()));
    }
    let m1: f64 = bases.iter().zip(weights).map(|(b, p)| p * (*b as f64).ln()).sum();
    let m2: f64 = bases.iter().zip(weights).map(|(b, p)| p * (*b as f64).ln().powi(2)).sum();
    Ok((m2 - m1 * m1).sqrt())
}

/// `σ` for an integer-base system with a Bernoulli base.
pub fn sigma_for(sys: &FiberedMapFamily, base: &BaseProcess) -> Result<f64> {
    if !matches!(sys.kind(), SystemKind::IntegerBase { .. }) {
        return Err(Error::Unsupported("closed-form variance needs an integer-base system".into()));
    }
    let w = weights_f64(base);
    if !matches!(base.kind(), BaseKind::Bernoulli { .. } | BaseKind::Singleton(_)) {
        return Err(Error::Unsupported("closed-form variance needs an i.i.d. base".into()));
    }
    let bases: Vec<u32> = w.iter().map(|(s, _)| s.0).collect();
    let ps: Vec<f64> = w.iter().map(|(_, p)| *p).collect();
    sigma_integer_base(&bases, &ps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    Smb,
    Rokhlin,
    PluginAr,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub method: EntropyMethod,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub trials: usize,
    pub excluded: usize,
    pub seed: u64,
    pub precision_digits: u32,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl EntropyEstimate {
    fn from_set(method: EntropyMethod, cfg: &RunConfig, digits: u32, set: TrialSet<f64>) -> Self {
        let samples: Vec<f64> = set.values.iter().map(|v| v.1).collect();
        let ms = mean_stderr(&samples).expect("at least one sample");
        EntropyEstimate {
            method,
            value: ms.mean,
            stderr: ms.stderr,
            n: cfg.n,
            trials: cfg.trials,
            excluded: set.excluded_count(),
            seed: cfg.seed,
            precision_digits: digits,
            samples,
        }
    }

    /// `|a - b| <= k (se_a + se_b)`.
    pub fn agrees_with(&self, other: &EntropyEstimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * (self.stderr + other.stderr)
    }

    /// Within `k` standard errors of a closed form, plus a floor of
    /// `1e-12 max(1, |h|)` for estimators whose samples are all equal.
    pub fn agrees_with_value(&self, h: f64, k: f64) -> bool {
        (self.value - h).abs() <= k * self.stderr + 1e-12 * h.abs().max(1.0)
    }
}

fn prepare(sys: &FiberedMapFamily, base: &BaseProcess, cfg: &RunConfig) -> Result<(Backend, u32, BaseProcess)> {
    cfg.validate()?;
    base.validate_for(sys)?;
    let backend = cfg.backend_for(sys.supports_exact())?;
    let digits = cfg.digits_for(cfg.n, entropy_upper_bound(sys, base));
    Ok((backend, digits, base.reseeded(cfg.seed, purpose::OMEGA_T)))
}

/// `(ln λ(C_n), ω_1..ω_n)` for one trial.
fn trial_cylinder(
    sys: &FiberedMapFamily,
    omega: &[Symbol],
    x: &BigRational,
    backend: Backend,
    cfg: &RunConfig,
) -> Result<f64> {
    with_escalation(backend, cfg.policy, |b| {
        let mut t = CylinderTracker::start(sys, &Scalar::Rational(x.clone()), b)?;
        t.advance(omega)?;
        t.ln_measure()
    })
}

/// Shannon–McMillan–Breiman estimate: mean of `-ln λ(C_n) / n`.
pub fn smb_estimate(sys: &FiberedMapFamily, base: &BaseProcess, cfg: &RunConfig) -> Result<EntropyEstimate> {
    let (backend, digits, base) = prepare(sys, base, cfg)?;
    let set = run_trials(cfg.trials, |trial| {
        let x = sample_point(cfg.seed, trial, digits)?;
        let omega = base.sample_prefix(trial, cfg.n);
        let ln_l = trial_cylinder(sys, &omega, &x, backend, cfg)?;
        Ok(-ln_l / cfg.n as f64)
    })?;
    Ok(EntropyEstimate::from_set(EntropyMethod::Smb, cfg, digits, set))
}

/// Birkhoff sum of `ln |T'|` along one orbit.
fn orbit_log_deriv_sum(sys: &FiberedMapFamily, omega: &[Symbol], x: &BigRational, backend: Backend) -> Result<f64> {
    let mut acc = 0.0;
    match backend {
        Backend::Rational => {
            let mut p = Frac::from_ratio(x);
            for &s in omega {
                let j = sys.digit_frac(s, &p)?;
                acc += sys.log_deriv_frac(s, j, &p)?;
                p = sys.apply_frac(s, j, &p)?;
            }
        }
        Backend::Float { prec } => {
            let mut p = crate::numeric::FloatEnclosure::from_ratio(x, prec);
            for &s in omega {
                let j = sys.digit_enc(s, &p)?;
                acc += sys.log_deriv_enc(s, &p)?;
                p = sys.apply_enc(s, j, &p)?;
            }
        }
    }
    Ok(acc)
}

/// Rokhlin-formula estimate: mean of `(1/n) Σ ln |T'_{ω_{k+1}}(x_k)|`.
pub fn rokhlin_estimate(sys: &FiberedMapFamily, base: &BaseProcess, cfg: &RunConfig) -> Result<EntropyEstimate> {
    let (backend, digits, base) = prepare(sys, base, cfg)?;
    let set = run_trials(cfg.trials, |trial| {
        let x = sample_point(cfg.seed, trial, digits)?;
        let omega = base.sample_prefix(trial, cfg.n);
        let sum = with_escalation(backend, cfg.policy, |b| orbit_log_deriv_sum(sys, &omega, &x, b))?;
        Ok(sum / cfg.n as f64)
    })?;
    Ok(EntropyEstimate::from_set(EntropyMethod::Rokhlin, cfg, digits, set))
}

/// Plug-in Abramov–Rokhlin estimate
/// `-(1/n) ln(Π p_{ω_k} λ(C_n)) - H(p)` for product measures `P × λ`.
pub fn plugin_ar_estimate(sys: &FiberedMapFamily, base: &BaseProcess, cfg: &RunConfig) -> Result<EntropyEstimate> {
    if !matches!(sys.kind(), SystemKind::IntegerBase { .. } | SystemKind::Gls { .. }) {
        return Err(Error::Unsupported("plug-in estimate needs Lebesgue-preserving maps".into()));
    }
    let w: Vec<(Symbol, BigRational)> = match base.kind() {
        BaseKind::Singleton(s) => vec![(*s, BigRational::one())],
        BaseKind::Bernoulli { symbols, weights } => symbols.iter().cloned().zip(weights.iter().cloned()).collect(),
        BaseKind::Periodic { .. } => {
            return Err(Error::Unsupported("plug-in estimate needs a Bernoulli base".into()))
        }
    };
    let ln_p = |s: Symbol| -> f64 {
        let q = &w.iter().find(|(t, _)| *t == s).expect("symbol in support").1;
        if q.is_one() {
            0.0
        } else {
            ln_q(q)
        }
    };
    let h_nu: f64 = w.iter().map(|(s, q)| -q.to_f64().unwrap() * ln_p(*s)).sum::<f64>() + 0.0;
    let (backend, digits, base) = prepare(sys, base, cfg)?;
    let set = run_trials(cfg.trials, |trial| {
        let x = sample_point(cfg.seed, trial, digits)?;
        let omega = base.sample_prefix(trial, cfg.n);
        let ln_l = trial_cylinder(sys, &omega, &x, backend, cfg)?;
        let sum_ln_p: f64 = omega.iter().map(|s| ln_p(*s)).sum();
        Ok(-(sum_ln_p + ln_l) / cfg.n as f64 - h_nu)
    })?;
    Ok(EntropyEstimate::from_set(EntropyMethod::PluginAr, cfg, digits, set))
}

/// Reference value subtracted in the zero-property series.
#[derive(Clone, Debug, PartialEq)]
pub enum EntropyConstant {
    /// `ln M` for a rational slope `M`; enables the exact test `λ M^n = 1`.
    LogOf(BigRational),
    Value(f64),
}

impl EntropyConstant {
    pub fn value(&self) -> f64 {
        match self {
            EntropyConstant::LogOf(m) => ln_q(m),
            EntropyConstant::Value(v) => *v,
        }
    }
}

/// `(-ln λ(E_n) - n h) / sqrt(n)` for `n = 1..=n_max`, where `E_n` is the
/// cylinder of `x` under the deterministic map `symbol` of `sys`.
/// With `LogOf(M)` a level where `λ(E_n) M^n = 1` holds exactly yields 0.
pub fn zero_property_series(
    sys: &FiberedMapFamily,
    symbol: Symbol,
    x: &Scalar,
    n_max: usize,
    h: &EntropyConstant,
) -> Result<Vec<f64>> {
    let backend = if sys.supports_exact() && x.as_rational().is_some() { Backend::Rational } else { Backend::float() };
    let mut t = CylinderTracker::start(sys, x, backend)?;
    let mut out = Vec::with_capacity(n_max);
    let mut power = Frac::one();
    let hv = h.value();
    for n in 1..=n_max {
        t.step(symbol)?;
        if let EntropyConstant::LogOf(m) = h {
            power = power.mul(&Frac::from_ratio(m));
            if let Some(l) = t.measure_frac() {
                if l.mul(&power) == Frac::one() {
                    out.push(0.0);
                    continue;
                }
            }
        }
        let ln_l = t.ln_measure()?;
        out.push((-ln_l - n as f64 * hv) / (n as f64).sqrt());
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CltReport {
    pub z: Vec<f64>,
    pub ks: KsResult,
    pub n: usize,
    pub trials: usize,
    pub excluded: usize,
    /// `σ` or `κ`.
    pub scale: f64,
    /// `h` or `h_T / h_S`.
    pub center: f64,
    pub center_source: &'static str,
    pub flags: Vec<&'static str>,
}

impl CltReport {
    fn build(z: Vec<f64>, cfg: &RunConfig, excluded: usize, scale: f64, center: f64, src: &'static str) -> Self {
        let ks = ks_distance(&z).expect("non-empty");
        let mut flags = Vec::new();
        if ks.degenerate {
            flags.push("DEGENERATE_INPUT");
        }
        CltReport { z, ks, n: cfg.n, trials: cfg.trials, excluded, scale, center, center_source: src, flags }
    }
}

/// Centering entropy: the closed form, or an SMB estimate at `4n` with
/// four times the trials on an independent seed.
fn centering(sys: &FiberedMapFamily, base: &BaseProcess, cfg: &RunConfig) -> Result<(f64, &'static str)> {
    if let Some(h) = closed_form_entropy(sys, base) {
        return Ok((h, "closed_form"));
    }
    let mut c = cfg.clone();
    c.n = cfg.n * 4;
    c.trials = cfg.trials * 4;
    c.seed = cfg.seed ^ 0x5eed_5eed_5eed_5eed;
    c.precision_digits = None;
    Ok((smb_estimate(sys, base, &c)?.value, "estimated"))
}

/// Samples of `(-ln λ(C_n) - n h) / (σ sqrt(n))` and their KS distance to `Φ`.
pub fn clt_property_check(
    sys: &FiberedMapFamily,
    base: &BaseProcess,
    sigma: f64,
    cfg: &RunConfig,
) -> Result<CltReport> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Degenerate(format!("sigma must be positive, got {sigma}")));
    }
    let (h, src) = centering(sys, base, cfg)?;
    let (backend, digits, b) = prepare(sys, base, cfg)?;
    let scale = sigma * (cfg.n as f64).sqrt();
    let set = run_trials(cfg.trials, |trial| {
        let x = sample_point(cfg.seed, trial, digits)?;
        let omega = b.sample_prefix(trial, cfg.n);
        let ln_l = trial_cylinder(sys, &omega, &x, backend, cfg)?;
        Ok((-ln_l - cfg.n as f64 * h) / scale)
    })?;
    let excluded = set.excluded_count();
    let z = set.values.into_iter().map(|v| v.1).collect();
    Ok(CltReport::build(z, cfg, excluded, sigma, h, src))
}

/// Samples of `(m_n - n h_T/h_S) / (κ sqrt(n))` for a random system `T`
/// against a deterministic `S` with the zero-property.
pub fn lochs_clt_check(
    sys_t: &FiberedMapFamily,
    base_t: &BaseProcess,
    sys_s: &FiberedMapFamily,
    base_s: &BaseProcess,
    kappa: Option<f64>,
    cfg: &RunConfig,
) -> Result<CltReport> {
    if base_t.is_deterministic() {
        return Err(Error::Degenerate("deterministic T has no fluctuation scale".into()));
    }
    if !matches!(base_s.kind(), BaseKind::Singleton(_)) {
        return Err(Error::Unsupported("S must be a single deterministic map".into()));
    }
    let zero_prop = match sys_s.kind() {
        SystemKind::IntegerBase { .. } => true,
        SystemKind::Beta { beta } => beta.is_parry(),
        _ => false,
    };
    if !zero_prop {
        return Err(Error::Unsupported("S must be an integer base or a Parry beta map".into()));
    }
    let h_t = closed_form_entropy(sys_t, base_t);
    let h_s = closed_form_entropy(sys_s, base_s).expect("constant slope");
    let kappa = match kappa {
        Some(k) => k,
        None => sigma_for(sys_t, base_t)? / h_s,
    };
    if !(kappa > 0.0) {
        return Err(Error::Degenerate("kappa must be positive".into()));
    }
    let (h_t, src) = match h_t {
        Some(h) => (h, "closed_form"),
        None => centering(sys_t, base_t, cfg)?,
    };
    let ratio = h_t / h_s;
    let exp = crate::lochs::LochsExperiment::new(sys_t, base_t, sys_s, base_s, cfg.clone());
    let report = exp.run()?;
    let scale = kappa * (cfg.n as f64).sqrt();
    let z = report.trials.iter().map(|t| (t.m as f64 - cfg.n as f64 * ratio) / scale).collect();
    Ok(CltReport::build(z, cfg, report.excluded, kappa, ratio, src))
}
