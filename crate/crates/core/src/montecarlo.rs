//! Parallel trial execution with a deterministic, index-ordered result.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Whether an error removes a single trial instead of aborting the run.
pub fn is_exclusion(e: &Error) -> bool {
    matches!(
        e,
        Error::TerminalPoint
            | Error::Ambiguous { .. }
            | Error::UnknownContainment { .. }
            | Error::PrecisionCap(_)
            | Error::DigitOverflow
            | Error::DegenerateCylinder
    )
}

/// Reason label used in reports.
pub fn exclusion_label(e: &Error) -> &'static str {
    match e {
        Error::TerminalPoint => "FINITE_EXPANSION",
        Error::Ambiguous { .. } => "AMBIGUOUS_DIGIT",
        Error::UnknownContainment { .. } => "UNKNOWN_CONTAINMENT",
        Error::PrecisionCap(_) => "PRECISION_CAP",
        Error::DigitOverflow => "DIGIT_OVERFLOW",
        Error::DegenerateCylinder => "DEGENERATE_CYLINDER",
        _ => "ERROR",
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialSet<T> {
    /// `(trial, value)` in increasing trial order.
    pub values: Vec<(u64, T)>,
    /// `(trial, reason)` for excluded trials.
    pub excluded: Vec<(u64, &'static str)>,
}

impl<T> TrialSet<T> {
    pub fn excluded_count(&self) -> usize {
        self.excluded.len()
    }

    pub fn reason_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for (_, r) in &self.excluded {
            *m.entry(*r).or_insert(0) += 1;
        }
        m
    }
}

/// Run `f(trial)` for `trial` in `0..trials` on the rayon pool.
/// Exclusion errors are collected; any other error aborts the run, the
/// lowest failing trial index winning and named in the error. All trials
/// excluded is an error.
pub fn run_trials<T, F>(trials: usize, f: F) -> Result<TrialSet<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let outcomes: Vec<Result<T>> = (0..trials as u64).into_par_iter().map(&f).collect();
    let mut values = Vec::with_capacity(trials);
    let mut excluded = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => values.push((i as u64, v)),
            Err(e) if is_exclusion(&e) => excluded.push((i as u64, exclusion_label(&e))),
            Err(e) => return Err(Error::InTrial { trial: i as u64, inner: Box::new(e) }),
        }
    }
    if values.is_empty() {
        return Err(Error::AllTrialsExcluded(trials));
    }
    Ok(TrialSet { values, excluded })
}

/// What to do when an enclosure cannot decide a digit or a containment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbiguityPolicy {
    /// Exclude the trial.
    Error,
    /// Redo the trial at doubled precision, up to `max_prec` bits.
    Escalate { max_prec: u32 },
}

/// Shared settings of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Digits of the random grid points; chosen from `n` when absent.
    pub precision_digits: Option<u32>,
    /// Exact when absent and the systems allow it, else 53-bit enclosures.
    pub backend: Option<crate::numeric::Backend>,
    pub policy: AmbiguityPolicy,
}

impl RunConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        RunConfig { n, trials, seed, precision_digits: None, backend: None, policy: AmbiguityPolicy::Escalate { max_prec: 4096 } }
    }

    pub fn with_precision_digits(mut self, p: u32) -> Self {
        self.precision_digits = Some(p);
        self
    }

    pub fn with_backend(mut self, b: crate::numeric::Backend) -> Self {
        self.backend = Some(b);
        self
    }

    pub fn with_policy(mut self, p: AmbiguityPolicy) -> Self {
        self.policy = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        if self.precision_digits == Some(0) {
            return Err(Error::InvalidArgument("precision_digits must be positive".into()));
        }
        Ok(())
    }

    /// Backend for the given systems.
    pub fn backend_for(&self, exact_ok: bool) -> Result<crate::numeric::Backend> {
        use crate::numeric::Backend;
        match self.backend {
            Some(Backend::Rational) if !exact_ok => {
                Err(Error::Unsupported("exact backend requested for an irrational system".into()))
            }
            Some(b) => Ok(b),
            None if exact_ok => Ok(Backend::Rational),
            None => Ok(Backend::float()),
        }
    }

    /// Grid digits: explicit, or enough that `n` steps at entropy up to
    /// `h_bound` stay well inside the resolution of the grid.
    pub fn digits_for(&self, n_effective: usize, h_bound: f64) -> u32 {
        self.precision_digits
            .unwrap_or_else(|| (1.3 * n_effective as f64 * h_bound / std::f64::consts::LN_10).ceil() as u32 + 64)
    }
}

/// Run `f` on `backend`, doubling the float precision on undecidable
/// comparisons when the policy allows it.
pub fn with_escalation<T>(
    backend: crate::numeric::Backend,
    policy: AmbiguityPolicy,
    mut f: impl FnMut(crate::numeric::Backend) -> Result<T>,
) -> Result<T> {
    use crate::numeric::Backend;
    let mut prec = match backend {
        Backend::Rational => return f(backend),
        Backend::Float { prec } => prec,
    };
    loop {
        match f(Backend::Float { prec }) {
            Err(Error::Ambiguous { .. }) | Err(Error::UnknownContainment { .. }) => match policy {
                AmbiguityPolicy::Error => return Err(Error::Ambiguous { prec }),
                AmbiguityPolicy::Escalate { max_prec } => {
                    if prec >= max_prec {
                        return Err(Error::PrecisionCap(max_prec));
                    }
                    prec = (prec * 2).min(max_prec);
                }
            },
            r => return r,
        }
    }
}
