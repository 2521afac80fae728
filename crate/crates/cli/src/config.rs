//! Experiment configuration: TOML tables `[system_t]`, `[system_s]`,
//! `[base_t]`, `[base_s]`, `[run]`, `[output]`.

use num_bigint::BigInt;
use num_rational::BigRational;
use randlochs::base_process::BaseProcess;
use randlochs::montecarlo::{AmbiguityPolicy, RunConfig};
use randlochs::numeric::{parse_rational, Backend};
use randlochs::systems::{BetaValue, FiberedMapFamily, GlsMap, Symbol, SystemKind};
use serde::{Deserialize, Serialize};
use toml::Spanned;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Read { path: String, msg: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error at line {line}: {msg}")]
    Semantic { line: usize, msg: String },
    #[error("config error: {0}")]
    Missing(String),
}

/// A number written as an integer, a float or an exact string such as "3/7".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Num::Int(v) => Some(BigRational::from_integer(BigInt::from(*v))),
            // The shortest round-trip decimal is what the user typed.
            Num::Float(f) => parse_rational(&format!("{f}")),
            Num::Text(s) => parse_rational(s.trim()),
        }
    }

    fn as_text(&self) -> String {
        match self {
            Num::Int(v) => v.to_string(),
            Num::Float(f) => format!("{f}"),
            Num::Text(s) => s.clone(),
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        let r = self.to_rational()?;
        if !r.is_integer() {
            return None;
        }
        u64::try_from(r.to_integer()).ok()
    }

    pub fn to_f64(&self) -> Option<f64> {
        use num_traits::ToPrimitive;
        self.to_rational()?.to_f64()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlsMapSpec {
    pub q: Vec<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decreasing: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    IntegerBase { bases: Vec<u32> },
    Gls { maps: Vec<GlsMapSpec> },
    Beta { beta: Num },
    Gauss,
    Renyi,
    GaussRenyi,
    BetaFamily { eta: Num, delta: Num, betas: Vec<Num> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Singleton { symbol: u32 },
    Bernoulli { symbols: Vec<u32>, weights: Vec<Num> },
    Periodic { word: Vec<u32> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    Rational,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Error,
    Escalate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CltMode {
    Property,
    Lochs,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub n: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<Num>,
    pub seed: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_digits: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendName>,
    /// Starting precision of the float backend, in bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float_bits: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bits: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_cap: Option<Num>,
    /// Point for `digits` and `cylinder`; a grid point is drawn when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltMode>,
    /// Digit cap for infinite partitions in `check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digit_cap: Option<Num>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// The file as written, with spans for error messages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system_t: Spanned<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_s: Option<Spanned<SystemSpec>>,
    pub base_t: Spanned<BaseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_s: Option<Spanned<BaseSpec>>,
    pub run: Spanned<RunSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// Validated objects built from a config.
pub struct Resolved {
    pub sys_t: FiberedMapFamily,
    pub base_t: BaseProcess,
    pub sys_s: Option<FiberedMapFamily>,
    pub base_s: Option<BaseProcess>,
    pub run: RunConfig,
    pub depth_cap: Option<usize>,
    pub point: Option<BigRational>,
    pub checkpoints: Vec<usize>,
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    pub clt: CltMode,
    pub digit_cap: Option<u64>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, table: &str, msg: impl std::fmt::Display) -> Result<T, ConfigError> {
        Err(ConfigError::Semantic { line: line_of(self.src, span.start), msg: format!("[{table}] {msg}") })
    }
}

fn rational(ctx: &Ctx, span: std::ops::Range<usize>, table: &str, key: &str, v: &Num) -> Result<BigRational, ConfigError> {
    match v.to_rational() {
        Some(r) => Ok(r),
        None => ctx.err(span, table, format!("{key} = {:?} is not a number or p/q", v.as_text())),
    }
}

fn count(ctx: &Ctx, span: std::ops::Range<usize>, key: &str, v: &Num) -> Result<u64, ConfigError> {
    match v.to_u64() {
        Some(k) => Ok(k),
        None => ctx.err(span, "run", format!("{key} must be a non-negative integer, got {}", v.as_text())),
    }
}

fn build_system(ctx: &Ctx, spec: &Spanned<SystemSpec>, table: &str) -> Result<FiberedMapFamily, ConfigError> {
    let span = spec.span();
    let beta = |v: &Num| -> Result<BetaValue, ConfigError> {
        if let Num::Text(s) = v {
            if let Ok(b) = BetaValue::parse(s) {
                return Ok(b);
            }
        }
        Ok(BetaValue::Rational(rational(ctx, span.clone(), table, "beta", v)?))
    };
    let kind = match spec.get_ref() {
        SystemSpec::IntegerBase { bases } => SystemKind::IntegerBase { bases: bases.clone() },
        SystemSpec::Gls { maps } => {
            let mut out = Vec::new();
            for m in maps {
                let q = m
                    .q
                    .iter()
                    .map(|v| rational(ctx, span.clone(), table, "q", v))
                    .collect::<Result<Vec<_>, _>>()?;
                let decreasing = m.decreasing.clone().unwrap_or_else(|| vec![false; q.len()]);
                out.push(GlsMap { q, decreasing });
            }
            SystemKind::Gls { maps: out }
        }
        SystemSpec::Beta { beta: b } => SystemKind::Beta { beta: beta(b)? },
        SystemSpec::Gauss => SystemKind::Gauss,
        SystemSpec::Renyi => SystemKind::Renyi,
        SystemSpec::GaussRenyi => SystemKind::GaussRenyi,
        SystemSpec::BetaFamily { eta, delta, betas } => SystemKind::BetaFamily {
            eta: rational(ctx, span.clone(), table, "eta", eta)?,
            delta: rational(ctx, span.clone(), table, "delta", delta)?,
            betas: betas.iter().map(beta).collect::<Result<Vec<_>, _>>()?,
        },
    };
    match FiberedMapFamily::new(kind) {
        Ok(s) => Ok(s),
        Err(e) => ctx.err(span, table, e),
    }
}

fn build_base(
    ctx: &Ctx,
    spec: &Spanned<BaseSpec>,
    table: &str,
    sys: &FiberedMapFamily,
    seed: u64,
) -> Result<BaseProcess, ConfigError> {
    let span = spec.span();
    let b = match spec.get_ref() {
        BaseSpec::Singleton { symbol } => Ok(BaseProcess::singleton(Symbol(*symbol))),
        BaseSpec::Bernoulli { symbols, weights } => {
            let w = weights
                .iter()
                .map(|v| rational(ctx, span.clone(), table, "weights", v))
                .collect::<Result<Vec<_>, _>>()?;
            BaseProcess::bernoulli(symbols.iter().map(|s| Symbol(*s)).collect(), w, seed)
        }
        BaseSpec::Periodic { word } => BaseProcess::periodic(word.iter().map(|s| Symbol(*s)).collect(), seed),
    };
    let b = match b {
        Ok(b) => b,
        Err(e) => return ctx.err(span, table, e),
    };
    if let Err(e) = b.validate_for(sys) {
        return ctx.err(span, table, e);
    }
    Ok(b)
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &str) -> Result<(Self, String), ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.into(), msg: e.to_string() })?;
        Ok((Self::parse(&src)?, src))
    }

    /// TOML text that parses back to an equal config.
    pub fn echo_toml(&self) -> String {
        toml::to_string(self).expect("serializable")
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn set_seed(&mut self, seed: u64) {
        let span = self.run.span();
        let mut run = self.run.get_ref().clone();
        run.seed = Num::Int(seed as i64);
        self.run = Spanned::new(span, run);
    }

    pub fn format(&self) -> Option<Format> {
        self.output.as_ref().and_then(|o| o.format)
    }

    pub fn out_dir(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.dir.as_deref())
    }

    /// Validate against the engine's constructors. `src` is the original
    /// text, used for line numbers.
    pub fn resolve(&self, src: &str) -> Result<Resolved, ConfigError> {
        let ctx = Ctx { src };
        let rs = self.run.span();
        let run = self.run.get_ref();
        let seed = match &run.seed {
            Num::Int(v) => *v as u64,
            other => count(&ctx, rs.clone(), "seed", other)?,
        };
        let n = count(&ctx, rs.clone(), "n", &run.n)? as usize;
        if n == 0 {
            return ctx.err(rs, "run", "n must be positive");
        }
        let trials = match &run.trials {
            Some(t) => count(&ctx, rs.clone(), "trials", t)? as usize,
            None => 1,
        };
        if trials == 0 {
            return ctx.err(rs, "run", "trials must be positive");
        }
        let sys_t = build_system(&ctx, &self.system_t, "system_t")?;
        let base_t = build_base(&ctx, &self.base_t, "base_t", &sys_t, seed)?;
        let (sys_s, base_s) = match (&self.system_s, &self.base_s) {
            (Some(s), Some(b)) => {
                let sys = build_system(&ctx, s, "system_s")?;
                let base = build_base(&ctx, b, "base_s", &sys, seed)?;
                (Some(sys), Some(base))
            }
            (None, None) => (None, None),
            (Some(s), None) => return ctx.err(s.span(), "system_s", "needs a matching [base_s] table"),
            (None, Some(b)) => return ctx.err(b.span(), "base_s", "needs a matching [system_s] table"),
        };
        let float_bits = match &run.float_bits {
            Some(v) => count(&ctx, rs.clone(), "float_bits", v)? as u32,
            None => 53,
        };
        let max_bits = match &run.max_bits {
            Some(v) => count(&ctx, rs.clone(), "max_bits", v)? as u32,
            None => 4096,
        };
        let mut rc = RunConfig::new(n, trials, seed).with_policy(match run.policy {
            Some(PolicyName::Error) => AmbiguityPolicy::Error,
            _ => AmbiguityPolicy::Escalate { max_prec: max_bits },
        });
        if let Some(p) = &run.precision_digits {
            let p = count(&ctx, rs.clone(), "precision_digits", p)?;
            if p == 0 {
                return ctx.err(rs, "run", "precision_digits must be positive");
            }
            rc = rc.with_precision_digits(p as u32);
        }
        match run.backend {
            Some(BackendName::Rational) => {
                let exact = sys_t.supports_exact() && sys_s.as_ref().is_none_or(|s| s.supports_exact());
                if !exact {
                    return ctx.err(rs, "run", "backend = \"rational\" needs systems with rational parameters");
                }
                rc = rc.with_backend(Backend::Rational);
            }
            Some(BackendName::Float) => rc = rc.with_backend(Backend::Float { prec: float_bits }),
            None => {}
        }
        let depth_cap = match &run.depth_cap {
            Some(v) => Some(count(&ctx, rs.clone(), "depth_cap", v)? as usize),
            None => None,
        };
        let point = match &run.point {
            Some(v) => {
                let p = rational(&ctx, rs.clone(), "run", "point", v)?;
                if p < BigRational::from_integer(0.into()) || p >= BigRational::from_integer(1.into()) {
                    return ctx.err(rs, "run", format!("point {} is outside [0,1)", v.as_text()));
                }
                Some(p)
            }
            None => None,
        };
        let positive = |key: &str, v: &Option<Num>| -> Result<Option<f64>, ConfigError> {
            match v {
                None => Ok(None),
                Some(v) => match v.to_f64() {
                    Some(f) if f > 0.0 => Ok(Some(f)),
                    _ => ctx.err(rs.clone(), "run", format!("{key} must be a positive number")),
                },
            }
        };
        let digit_cap = match &run.digit_cap {
            Some(v) => Some(count(&ctx, rs.clone(), "digit_cap", v)?),
            None => None,
        };
        Ok(Resolved {
            sigma: positive("sigma", &run.sigma)?,
            kappa: positive("kappa", &run.kappa)?,
            sys_t,
            base_t,
            sys_s,
            base_s,
            run: rc,
            depth_cap,
            point,
            checkpoints: run.checkpoints.clone().unwrap_or_default().into_iter().map(|c| c as usize).collect(),
            clt: run.clt.unwrap_or(CltMode::Property),
            digit_cap,
        })
    }
}

impl Resolved {
    pub fn require_s(&self) -> Result<(&FiberedMapFamily, &BaseProcess), ConfigError> {
        match (&self.sys_s, &self.base_s) {
            (Some(s), Some(b)) => Ok((s, b)),
            _ => Err(ConfigError::Missing("this command needs [system_s] and [base_s]".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[system_t]
kind = "integer_base"
bases = [2, 3]

[base_t]
kind = "bernoulli"
symbols = [2, 3]
weights = ["1/2", 0.5]

[system_s]
kind = "integer_base"
bases = [10]

[base_s]
kind = "singleton"
symbol = 10

[run]
n = 100
trials = 4
seed = 7
"#;

    #[test]
    fn parses_and_resolves() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let r = c.resolve(SAMPLE).unwrap();
        assert_eq!(r.run.n, 100);
        assert!(r.sys_s.is_some());
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&c.echo_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn semantic_error_has_line() {
        let bad = SAMPLE.replace("weights = [\"1/2\", 0.5]", "weights = [\"1/2\", \"1/3\"]");
        let c = ExperimentConfig::parse(&bad).unwrap();
        match c.resolve(&bad) {
            Err(ConfigError::Semantic { line, msg }) => {
                assert_eq!(line, 6, "{msg}");
                assert!(msg.contains("base_t"));
            }
            other => panic!("{:?}", other.err()),
        }
    }

    #[test]
    fn zero_trials_rejected() {
        let bad = SAMPLE.replace("trials = 4", "trials = 0");
        let c = ExperimentConfig::parse(&bad).unwrap();
        assert!(matches!(c.resolve(&bad), Err(ConfigError::Semantic { .. })));
    }

    #[test]
    fn exact_strings() {
        assert_eq!(Num::Text("3/7".into()).to_rational().unwrap(), BigRational::new(3.into(), 7.into()));
        assert_eq!(Num::Float(0.1).to_rational().unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(Num::Text("12".into()).to_u64(), Some(12));
        assert_eq!(Num::Text("1/2".into()).to_u64(), None);
    }
}
