//! CSV and JSON renderings of run results. Everything is formatted from
//! values alone, so equal inputs give byte-identical text.

use std::fmt::Write;

use serde::Serialize;

use crate::cylinder::TrajectoryRow;
use crate::entropy::{CltReport, EntropyEstimate};
use crate::lochs::LochsReport;
use crate::oracle::CylinderTable;
use crate::stats::ecdf_rows;

/// `exp(ln_v)` in scientific notation, valid far below `f64` range.
pub fn sci_from_ln(ln_v: f64) -> String {
    if !ln_v.is_finite() {
        return if ln_v == f64::NEG_INFINITY { "0".into() } else { "nan".into() };
    }
    let l10 = ln_v / std::f64::consts::LN_10;
    let mut e = l10.floor();
    let mut m = 10f64.powf(l10 - e);
    if m >= 9.9999995 {
        m /= 10.0;
        e += 1.0;
    }
    format!("{m:.6}e{}", e as i64)
}

fn push_csv(out: &mut String, header: &str, rows: impl IntoIterator<Item = Vec<String>>) {
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
}

/// `n,symbol,digit,cyl_lo,cyl_hi,lambda,neg_log_rate`.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::new();
    push_csv(
        &mut out,
        "n,symbol,digit,cyl_lo,cyl_hi,lambda,neg_log_rate",
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.symbol.0.to_string(),
                r.digit.0.to_string(),
                r.cylinder.lo().to_string(),
                r.cylinder.hi().to_string(),
                r.measure.to_string(),
                r.neg_log_rate.to_string(),
            ]
        }),
    );
    out
}

/// `trial,n,m,lambda_T,lambda_S_at_m`.
pub fn lochs_trials_csv(r: &LochsReport) -> String {
    let mut out = String::new();
    push_csv(
        &mut out,
        "trial,n,m,lambda_T,lambda_S_at_m",
        r.trials.iter().map(|t| {
            vec![t.trial.to_string(), t.n.to_string(), t.m.to_string(), sci_from_ln(t.ln_lambda_t), sci_from_ln(t.ln_lambda_s)]
        }),
    );
    out
}

/// `n,mean_ratio,stderr` plot data.
pub fn lochs_path_csv(r: &LochsReport) -> String {
    let mut out = String::new();
    push_csv(
        &mut out,
        "n,mean_ratio,stderr",
        r.path.iter().map(|p| vec![p.n.to_string(), p.mean_ratio.to_string(), p.stderr.to_string()]),
    );
    out
}

#[derive(Serialize)]
struct Summary<'a, E: Serialize> {
    mean: f64,
    stderr: f64,
    trials_kept: usize,
    excluded_count: usize,
    exclusion_reasons: &'a std::collections::BTreeMap<&'static str, usize>,
    precision_digits: u32,
    depth_cap: usize,
    config_echo: &'a E,
}

pub fn lochs_summary_json<E: Serialize>(r: &LochsReport, echo: &E) -> String {
    to_json(&Summary {
        mean: r.ratio.mean,
        stderr: r.ratio.stderr,
        trials_kept: r.trials.len(),
        excluded_count: r.excluded,
        exclusion_reasons: &r.exclusion_reasons,
        precision_digits: r.precision_digits,
        depth_cap: r.depth_cap,
        config_echo: echo,
    })
}

#[derive(Serialize)]
struct EntropyJson<'a, E: Serialize> {
    estimates: &'a [EntropyEstimate],
    closed_form: Option<f64>,
    config_echo: &'a E,
}

pub fn entropy_json<E: Serialize>(estimates: &[EntropyEstimate], closed_form: Option<f64>, echo: &E) -> String {
    to_json(&EntropyJson { estimates, closed_form, config_echo: echo })
}

/// `trial_index,z`.
pub fn clt_z_csv(r: &CltReport) -> String {
    let mut out = String::new();
    push_csv(&mut out, "index,z", r.z.iter().enumerate().map(|(i, z)| vec![i.to_string(), z.to_string()]));
    out
}

/// `z,ecdf,phi` plot data.
pub fn ecdf_csv(z: &[f64]) -> String {
    let mut out = String::new();
    push_csv(
        &mut out,
        "z,ecdf,phi",
        ecdf_rows(z).into_iter().map(|(a, b, c)| vec![a.to_string(), b.to_string(), c.to_string()]),
    );
    out
}

#[derive(Serialize)]
struct CltJson<'a, E: Serialize> {
    ks_distance: f64,
    n: usize,
    trials: usize,
    excluded: usize,
    scale: f64,
    center: f64,
    center_source: &'a str,
    flags: &'a [&'static str],
    config_echo: &'a E,
}

pub fn clt_summary_json<E: Serialize>(r: &CltReport, echo: &E) -> String {
    to_json(&CltJson {
        ks_distance: r.ks.distance,
        n: r.n,
        trials: r.trials,
        excluded: r.excluded,
        scale: r.scale,
        center: r.center,
        center_source: r.center_source,
        flags: &r.flags,
        config_echo: echo,
    })
}

/// `word,lo,hi,lambda`.
pub fn cylinder_table_csv(t: &CylinderTable) -> String {
    let mut out = String::new();
    push_csv(&mut out, "word,lo,hi,lambda", t.csv_rows().into_iter().map(|r| r.to_vec()));
    out
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Minimal `key,value` CSV for flat summaries.
pub fn kv_csv(pairs: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}
