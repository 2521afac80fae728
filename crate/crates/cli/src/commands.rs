//! Subcommand bodies. Each returns the artifacts it produced; writing them
//! out is left to the caller.

use num_rational::BigRational;
use randlochs::base_process::{purpose, sample_point};
use randlochs::cylinder::{trajectory, CylinderTracker, TrackerStatus};
use randlochs::entropy::{
    closed_form_entropy, clt_property_check, entropy_upper_bound, lochs_clt_check, lochs_constant, plugin_ar_estimate,
    rokhlin_estimate, sigma_for, smb_estimate, CltReport, EntropyEstimate, GAUSS_ENTROPY,
};
use randlochs::lochs::{lochs_series, LochsExperiment, LochsOptions, SymbolSource};
use randlochs::montecarlo::with_escalation;
use randlochs::numeric::{Backend, Scalar};
use randlochs::oracle::{brute_force_m, check_partition, Oracle};
use randlochs::report;
use randlochs::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CltMode, Format, Resolved};

/// One output file.
pub struct Artifact {
    pub name: String,
    pub body: String,
}

fn art(name: &str, body: String) -> Artifact {
    Artifact { name: name.into(), body }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Lines for the terminal.
    pub console: Vec<String>,
    /// `check` found a mismatch.
    pub check_failed: bool,
}

impl Outcome {
    fn new(artifacts: Vec<Artifact>, console: Vec<String>) -> Self {
        Outcome { artifacts, console, check_failed: false }
    }
}

fn with_echo<T: Serialize>(v: &T, echo: &Value, seed: u64) -> String {
    let mut obj = serde_json::to_value(v).expect("serializable");
    if let Value::Object(m) = &mut obj {
        m.insert("seed".into(), json!(seed));
        m.insert("config_echo".into(), echo.clone());
    }
    report::to_json(&obj)
}

fn ratio_text(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Point from the config, or the trial-0 grid point.
fn start_point(res: &Resolved) -> Result<BigRational, Error> {
    match &res.point {
        Some(p) => Ok(p.clone()),
        None => {
            let digits = res.run.digits_for(res.run.n, entropy_upper_bound(&res.sys_t, &res.base_t));
            sample_point(res.run.seed, 0, digits)
        }
    }
}

/// Backend for single-trajectory commands; floats start wide enough for `n` steps.
fn single_backend(res: &Resolved) -> Result<Backend, Error> {
    match res.run.backend_for(res.sys_t.supports_exact())? {
        Backend::Rational => Ok(Backend::Rational),
        Backend::Float { prec } => {
            let need = (res.run.n as f64 * entropy_upper_bound(&res.sys_t, &res.base_t) / std::f64::consts::LN_2 * 1.3)
                .ceil() as u32
                + 64;
            Ok(Backend::Float { prec: prec.max(need) })
        }
    }
}

pub fn digits(res: &Resolved, echo: &Value, format: Format) -> Result<Outcome, Error> {
    let x = start_point(res)?;
    let omega = res.base_t.reseeded(res.run.seed, purpose::OMEGA_T).sample_prefix(0, res.run.n);
    let backend = single_backend(res)?;
    let (rows, status) = with_escalation(backend, res.run.policy, |b| {
        let mut t = CylinderTracker::start(&res.sys_t, &Scalar::Rational(x.clone()), b)?;
        let mut rows = Vec::new();
        for &s in &omega {
            match t.step(s) {
                Ok(d) => rows.push((t.n(), s.0, d.0, t.point().to_string())),
                Err(e @ Error::Ambiguous { .. }) => return Err(e),
                Err(Error::TerminalPoint) => break,
                Err(e) => return Err(e),
            }
        }
        Ok((rows, t.status()))
    })?;
    let status = match status {
        TrackerStatus::Active => "ACTIVE",
        TrackerStatus::FiniteExpansion => "FINITE_EXPANSION",
        TrackerStatus::AmbiguousDigit => "AMBIGUOUS_DIGIT",
    };
    let summary = json!({ "point": ratio_text(&x), "steps": rows.len(), "status": status });
    let console = vec![format!(
        "digits: {}",
        rows.iter().map(|r| r.2.to_string()).collect::<Vec<_>>().join(" ")
    )];
    let artifacts = match format {
        Format::Csv => {
            let mut csv = String::from("n,symbol,digit,orbit\n");
            for (n, s, d, p) in &rows {
                csv.push_str(&format!("{n},{s},{d},{p}\n"));
            }
            vec![art("digits.csv", csv), art("digits_summary.json", with_echo(&summary, echo, res.run.seed))]
        }
        Format::Json => {
            let rows: Vec<Value> =
                rows.iter().map(|(n, s, d, p)| json!({"n": n, "symbol": s, "digit": d, "orbit": p})).collect();
            vec![art("digits.json", with_echo(&json!({"summary": summary, "rows": rows}), echo, res.run.seed))]
        }
    };
    Ok(Outcome::new(artifacts, console))
}

pub fn cylinder(res: &Resolved, echo: &Value, format: Format) -> Result<Outcome, Error> {
    let x = start_point(res)?;
    let omega = res.base_t.reseeded(res.run.seed, purpose::OMEGA_T).sample_prefix(0, res.run.n);
    let backend = single_backend(res)?;
    let rows = with_escalation(backend, res.run.policy, |b| {
        trajectory(&res.sys_t, &Scalar::Rational(x.clone()), &omega, b)
    })?;
    let last = rows.last().map(|r| r.neg_log_rate).unwrap_or(f64::NAN);
    let console = vec![format!("levels: {}, -ln(lambda)/n at the last level: {last}", rows.len())];
    let artifacts = match format {
        Format::Csv => vec![
            art("trajectory.csv", report::trajectory_csv(&rows)),
            art("trajectory_summary.json", with_echo(&json!({"point": ratio_text(&x), "levels": rows.len()}), echo, res.run.seed)),
        ],
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n, "symbol": r.symbol.0, "digit": r.digit.0,
                        "cyl_lo": r.cylinder.lo().to_string(), "cyl_hi": r.cylinder.hi().to_string(),
                        "lambda": r.measure.to_string(), "neg_log_rate": r.neg_log_rate,
                    })
                })
                .collect();
            vec![art("trajectory.json", with_echo(&json!({"point": ratio_text(&x), "rows": rows}), echo, res.run.seed))]
        }
    };
    Ok(Outcome::new(artifacts, console))
}

pub fn lochs(res: &Resolved, echo: &Value, format: Format) -> Result<Outcome, Error> {
    let (sys_s, base_s) = res.require_s().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut exp = LochsExperiment::new(&res.sys_t, &res.base_t, sys_s, base_s, res.run.clone())
        .with_checkpoints(res.checkpoints.clone());
    if let Some(c) = res.depth_cap {
        exp = exp.with_depth_cap(c);
    }
    let rep = exp.run()?;
    let console = vec![format!(
        "mean m/n = {:.6} (stderr {:.6}), kept {}, excluded {}",
        rep.ratio.mean,
        rep.ratio.stderr,
        rep.trials.len(),
        rep.excluded
    )];
    let artifacts = match format {
        Format::Csv => vec![
            art("lochs_trials.csv", report::lochs_trials_csv(&rep)),
            art("lochs_path.csv", report::lochs_path_csv(&rep)),
            art("lochs_summary.json", with_seed(report::lochs_summary_json(&rep, echo), res.run.seed)),
        ],
        Format::Json => vec![art("lochs.json", with_echo(&rep, echo, res.run.seed))],
    };
    Ok(Outcome::new(artifacts, console))
}

fn with_seed(text: String, seed: u64) -> String {
    let mut v: Value = serde_json::from_str(&text).expect("own output");
    if let Value::Object(m) = &mut v {
        m.insert("seed".into(), json!(seed));
    }
    report::to_json(&v)
}

pub fn entropy(res: &Resolved, echo: &Value, format: Format) -> Result<Outcome, Error> {
    let mut ests: Vec<EntropyEstimate> = vec![
        smb_estimate(&res.sys_t, &res.base_t, &res.run)?,
        rokhlin_estimate(&res.sys_t, &res.base_t, &res.run)?,
    ];
    match plugin_ar_estimate(&res.sys_t, &res.base_t, &res.run) {
        Ok(p) => ests.push(p),
        Err(Error::Unsupported(_)) => {}
        Err(e) => return Err(e),
    }
    let cf = closed_form_entropy(&res.sys_t, &res.base_t);
    let mut console: Vec<String> = ests
        .iter()
        .map(|e| format!("{:?}: {:.6} (stderr {:.6}, excluded {})", e.method, e.value, e.stderr, e.excluded))
        .collect();
    if let Some(h) = cf {
        console.push(format!("closed form: {h:.6}"));
    }
    let artifacts = match format {
        Format::Csv => {
            let mut csv = String::from("method,value,stderr,n,trials,excluded,seed\n");
            for e in &ests {
                let m = serde_json::to_value(e.method).expect("enum");
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    m.as_str().unwrap_or(""),
                    e.value,
                    e.stderr,
                    e.n,
                    e.trials,
                    e.excluded,
                    e.seed
                ));
            }
            vec![art("entropy.csv", csv), art("entropy.json", with_seed(report::entropy_json(&ests, cf, echo), res.run.seed))]
        }
        Format::Json => vec![art("entropy.json", with_seed(report::entropy_json(&ests, cf, echo), res.run.seed))],
    };
    Ok(Outcome::new(artifacts, console))
}

fn clt_artifacts(prefix: &str, rep: &CltReport, echo: &Value, seed: u64, format: Format) -> Vec<Artifact> {
    match format {
        Format::Csv => vec![
            art(&format!("{prefix}_z.csv"), report::clt_z_csv(rep)),
            art(&format!("{prefix}_ecdf.csv"), report::ecdf_csv(&rep.z)),
            art(&format!("{prefix}_summary.json"), with_seed(report::clt_summary_json(rep, echo), seed)),
        ],
        Format::Json => vec![art(&format!("{prefix}.json"), with_echo(rep, echo, seed))],
    }
}

pub fn clt(res: &Resolved, echo: &Value, format: Format) -> Result<Outcome, Error> {
    let mut artifacts = Vec::new();
    let mut console = Vec::new();
    if matches!(res.clt, CltMode::Property | CltMode::Both) {
        let sigma = match res.sigma {
            Some(s) => s,
            None => sigma_for(&res.sys_t, &res.base_t)?,
        };
        let rep = clt_property_check(&res.sys_t, &res.base_t, sigma, &res.run)?;
        console.push(format!("CLT-property: KS = {:.4} (sigma {sigma:.6}, {} samples)", rep.ks.distance, rep.ks.count));
        artifacts.extend(clt_artifacts("clt_property", &rep, echo, res.run.seed, format));
    }
    if matches!(res.clt, CltMode::Lochs | CltMode::Both) {
        let (s, b) = res.require_s().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let rep = lochs_clt_check(&res.sys_t, &res.base_t, s, b, res.kappa, &res.run)?;
        console.push(format!("Lochs CLT: KS = {:.4} (kappa {:.6}, {} samples)", rep.ks.distance, rep.scale, rep.ks.count));
        artifacts.extend(clt_artifacts("clt_lochs", &rep, echo, res.run.seed, format));
    }
    Ok(Outcome::new(artifacts, console))
}

#[derive(Serialize, Default)]
struct CheckReport {
    depth: usize,
    points: usize,
    partitions_checked: usize,
    partition_failures: Vec<String>,
    cylinders_checked: usize,
    cylinder_mismatches: Vec<String>,
    m_checked: usize,
    m_mismatches: Vec<String>,
    skipped: Vec<String>,
    passed: bool,
}

/// Oracle suite: partitions, cylinder equivalence and, with an `S`
/// system, `m(n)` against the brute-force search.
pub fn check(res: &Resolved, echo: &Value, _format: Format) -> Result<Outcome, Error> {
    let n = res.run.n;
    if n > 12 {
        return Err(Error::InvalidArgument("check supports n <= 12".into()));
    }
    let points = res.run.trials;
    let seed = res.run.seed;
    let mut rep = CheckReport { depth: n, points, ..Default::default() };
    let o = Oracle::new(&res.sys_t, res.digit_cap)?;
    let capped = !res.sys_t.is_finite() || res.digit_cap.is_some();
    let bt = res.base_t.reseeded(seed, purpose::OMEGA_T);
    // Partitions along the first few fibers.
    for trial in 0..points.min(3) as u64 {
        let omega = bt.sample_prefix(trial, n);
        for k in 1..=n {
            match o.enumerate_cylinders(&omega, k) {
                Ok(t) => {
                    rep.partitions_checked += 1;
                    let p = check_partition(&t, capped);
                    if !p.ok {
                        rep.partition_failures.push(format!("trial {trial} level {k}: total {}", ratio_text(&p.total)));
                    }
                }
                Err(Error::GuardExceeded(c)) => {
                    rep.skipped.push(format!("partition trial {trial} level {k}: {c} words"));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    if res.sys_t.is_finite() {
        let digits = res.run.precision_digits.unwrap_or(12);
        for trial in 0..points as u64 {
            let omega = bt.sample_prefix(trial, n);
            let x = sample_point(seed, trial, digits)?;
            let mut t = CylinderTracker::start(&res.sys_t, &Scalar::Rational(x.clone()), Backend::Rational)?;
            for k in 1..=n {
                if t.step(omega[k - 1]).is_err() {
                    break;
                }
                rep.cylinders_checked += 1;
                let c = t.cylinder()?;
                match o.cylinder_of_point(&omega, &x, k) {
                    Ok((_, oc)) if oc.same_set(&c) => {}
                    other => rep.cylinder_mismatches.push(format!(
                        "trial {trial} level {k}: tracker {c}, oracle {}",
                        other.map(|v| v.1.to_string()).unwrap_or_else(|e| e.to_string())
                    )),
                }
            }
        }
        if let (Some(ss), Some(bs)) = (&res.sys_s, &res.base_s) {
            if ss.is_finite() {
                let os = Oracle::new(ss, None)?;
                let bs = bs.reseeded(seed, purpose::OMEGA_S);
                let opts = LochsOptions {
                    backend: Backend::Rational,
                    policy: res.run.policy,
                    depth_cap: 64,
                };
                for trial in 0..points as u64 {
                    let wt = bt.sample_prefix(trial, n);
                    let ws = bs.sample_prefix(trial, 13);
                    let x = sample_point(seed, trial, digits)?;
                    let ser = match lochs_series(&res.sys_t, &wt, ss, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts) {
                        Ok(s) => s,
                        Err(e) => {
                            rep.skipped.push(format!("m trial {trial}: {e}"));
                            continue;
                        }
                    };
                    for k in 1..=n {
                        let (_, tc) = o.cylinder_of_point(&wt, &x, k)?;
                        rep.m_checked += 1;
                        match brute_force_m(&tc, &os, &ws, &x, 12) {
                            Ok(m) if m == ser.m[k] => {}
                            Err(Error::DepthCapExceeded(_)) => {
                                rep.m_checked -= 1;
                                rep.skipped.push(format!("m trial {trial} level {k}: beyond 12 S-levels"));
                            }
                            other => rep.m_mismatches.push(format!("trial {trial} level {k}: lochs {}, oracle {other:?}", ser.m[k])),
                        }
                    }
                }
            } else {
                rep.skipped.push("m check needs a finite S system".into());
            }
        }
    } else {
        rep.skipped.push("cylinder equivalence needs a finite T system".into());
    }
    rep.passed = rep.partition_failures.is_empty() && rep.cylinder_mismatches.is_empty() && rep.m_mismatches.is_empty();
    let console = vec![format!(
        "check {}: {} partitions, {} cylinders, {} m values, {} mismatches",
        if rep.passed { "passed" } else { "FAILED" },
        rep.partitions_checked,
        rep.cylinders_checked,
        rep.m_checked,
        rep.partition_failures.len() + rep.cylinder_mismatches.len() + rep.m_mismatches.len()
    )];
    let failed = !rep.passed;
    Ok(Outcome { artifacts: vec![art("check.json", with_echo(&rep, echo, seed))], console, check_failed: failed })
}

#[derive(Serialize)]
struct Constants {
    lochs_constant: f64,
    gauss_entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
}

pub fn constants(res: Option<&Resolved>, echo: Option<&Value>) -> Result<Outcome, Error> {
    let mut c = Constants {
        lochs_constant: lochs_constant(),
        gauss_entropy: GAUSS_ENTROPY,
        h_t: None,
        h_s: None,
        ratio: None,
        sigma: None,
        kappa: None,
    };
    if let Some(res) = res {
        c.h_t = closed_form_entropy(&res.sys_t, &res.base_t);
        if let (Some(s), Some(b)) = (&res.sys_s, &res.base_s) {
            c.h_s = closed_form_entropy(s, b);
        }
        if let (Some(t), Some(s)) = (c.h_t, c.h_s) {
            c.ratio = Some(t / s);
        }
        c.sigma = sigma_for(&res.sys_t, &res.base_t).ok();
        if let (Some(sg), Some(hs)) = (c.sigma, c.h_s) {
            c.kappa = Some(sg / hs);
        }
    }
    let mut console = vec![
        format!("lochs_constant = {:.9}", c.lochs_constant),
        format!("gauss_entropy = {:.9}", c.gauss_entropy),
    ];
    for (k, v) in [("h_T", c.h_t), ("h_S", c.h_s), ("ratio", c.ratio), ("sigma", c.sigma), ("kappa", c.kappa)] {
        if let Some(v) = v {
            console.push(format!("{k} = {v:.9}"));
        }
    }
    let body = match (res, echo) {
        (Some(r), Some(e)) => with_echo(&c, e, r.run.seed),
        _ => report::to_json(&c),
    };
    Ok(Outcome::new(vec![art("constants.json", body)], console))
}
