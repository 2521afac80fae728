//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test -p randlochs --test acceptance -- 3 7`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use randlochs::base_process::{sample_point, BaseProcess};
use randlochs::cylinder::CylinderTracker;
use randlochs::entropy::{
    clt_property_check, lochs_clt_check, plugin_ar_estimate, rokhlin_estimate, smb_estimate, zero_property_series,
    EntropyConstant,
};
use randlochs::interval::FracInterval;
use randlochs::lochs::{lochs_series, LochsExperiment, LochsOptions, SymbolSource};
use randlochs::montecarlo::{AmbiguityPolicy, RunConfig};
use randlochs::numeric::{Backend, Scalar, Tri};
use randlochs::oracle::{brute_force_m, check_partition, Oracle};
use randlochs::systems::{BetaValue, FiberedMapFamily, GlsMap, Symbol, SystemKind};

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn half_half() -> (FiberedMapFamily, BaseProcess) {
    (
        FiberedMapFamily::integer_base(&[2, 3]).unwrap(),
        BaseProcess::bernoulli(vec![Symbol(2), Symbol(3)], vec![r(1, 2), r(1, 2)], 0).unwrap(),
    )
}

fn decimal() -> (FiberedMapFamily, BaseProcess) {
    (FiberedMapFamily::integer_base(&[10]).unwrap(), BaseProcess::singleton(Symbol(10)))
}

/// `ln sqrt 6`, the fiber entropy of the fair {2,3} system.
fn h_two_three() -> f64 {
    0.5 * 6f64.ln()
}

/// `sqrt(mean ln^2 b - (mean ln b)^2)` for the fair {2,3} system.
fn sigma_two_three() -> f64 {
    let (a, b) = (2f64.ln(), 3f64.ln());
    ((a * a + b * b) / 2.0 - ((a + b) / 2.0).powi(2)).sqrt()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn c1() -> Outcome {
    let (t, bt) = decimal();
    let s = FiberedMapFamily::gauss();
    let bs = BaseProcess::singleton(Symbol(0));
    let cfg = RunConfig::new(1000, 50, 1).with_precision_digits(2000).with_backend(Backend::Rational);
    let rep = LochsExperiment::new(&t, &bt, &s, &bs, cfg).run().unwrap();
    let target = 6.0 * 2f64.ln() * 10f64.ln() / (std::f64::consts::PI.powi(2));
    let err = (rep.ratio.mean - target).abs();
    Outcome {
        pass: err < 0.01 && (target - 0.970270).abs() < 1e-6,
        detail: format!(
            "mean m/n = {:.6} (se {:.6}), target {:.6}, |diff| {:.6}, excluded {}",
            rep.ratio.mean, rep.ratio.stderr, target, err, rep.excluded
        ),
    }
}

fn c2() -> Outcome {
    let (t, bt) = half_half();
    let (s, bs) = decimal();
    let cfg = RunConfig::new(2000, 200, 2).with_backend(Backend::Rational);
    let rep = LochsExperiment::new(&t, &bt, &s, &bs, cfg).run().unwrap();
    let target = h_two_three() / 10f64.ln();
    let err = (rep.ratio.mean - target).abs();
    Outcome {
        pass: err < 0.01 && (target - 0.389075).abs() < 1e-6,
        detail: format!(
            "mean m/n = {:.6} (se {:.6}), target {:.6}, |diff| {:.6}, P = {}, excluded {}",
            rep.ratio.mean, rep.ratio.stderr, target, err, rep.precision_digits, rep.excluded
        ),
    }
}

fn c3() -> Outcome {
    let h = h_two_three();
    let mut pass = (h - 0.895880).abs() < 1e-6;
    let mut parts = Vec::new();
    let (sys, bern) = half_half();
    let alt = BaseProcess::periodic(vec![Symbol(3), Symbol(2)], 0).unwrap();
    let cfg = RunConfig::new(5000, 100, 3);
    for (name, base) in [("bernoulli", &bern), ("alternate", &alt)] {
        let mut ests = vec![smb_estimate(&sys, base, &cfg).unwrap(), rokhlin_estimate(&sys, base, &cfg).unwrap()];
        if let Ok(p) = plugin_ar_estimate(&sys, base, &cfg) {
            ests.push(p);
        }
        for e in ests {
            let ok = e.agrees_with_value(h, 2.0);
            pass &= ok;
            parts.push(format!("{name}/{:?}={:.6}±{:.6}{}", e.method, e.value, e.stderr, if ok { "" } else { "!" }));
        }
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn c4() -> Outcome {
    let sys = FiberedMapFamily::gauss_renyi();
    let base = BaseProcess::bernoulli(vec![Symbol(0), Symbol(1)], vec![r(1, 2), r(1, 2)], 0).unwrap();
    let smb = smb_estimate(&sys, &base, &RunConfig::new(5000, 200, 41)).unwrap();
    let rok = rokhlin_estimate(&sys, &base, &RunConfig::new(5000, 200, 42)).unwrap();
    let d = (smb.value - rok.value).abs();
    let bound = 2.0 * (smb.stderr + rok.stderr);
    Outcome {
        pass: d <= bound,
        detail: format!(
            "smb {:.6}±{:.6}, rokhlin {:.6}±{:.6}, |diff| {:.6} vs bound {:.6}, excluded {}+{}",
            smb.value, smb.stderr, rok.value, rok.stderr, d, bound, smb.excluded, rok.excluded
        ),
    }
}

fn c5() -> Outcome {
    let (sys, base) = half_half();
    let sigma = sigma_two_three();
    let rep = clt_property_check(&sys, &base, sigma, &RunConfig::new(2000, 2000, 5)).unwrap();
    Outcome {
        pass: rep.ks.distance < 0.05 && (sigma - 0.202733).abs() < 1e-6,
        detail: format!("KS = {:.4} (sigma {:.6}, {} samples)", rep.ks.distance, sigma, rep.ks.count),
    }
}

fn c6() -> Outcome {
    let (t, bt) = half_half();
    let (s, bs) = decimal();
    let kappa = sigma_two_three() / 10f64.ln();
    let rep = lochs_clt_check(&t, &bt, &s, &bs, Some(kappa), &RunConfig::new(2000, 1000, 6)).unwrap();
    let mean_z = rep.z.iter().sum::<f64>() / rep.z.len() as f64;
    Outcome {
        pass: rep.ks.distance < 0.08 && (kappa - 0.088046).abs() < 1e-6,
        detail: format!(
            "KS = {:.4} (kappa {:.6}, mean z {:.4}, {} samples)",
            rep.ks.distance, kappa, mean_z, rep.ks.count
        ),
    }
}

fn c7() -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    for b in 2u32..=10 {
        let sys = FiberedMapFamily::integer_base(&[b]).unwrap();
        let x = Scalar::Rational(sample_point(7, b as u64, 40).unwrap());
        let z = zero_property_series(&sys, Symbol(b), &x, 10_000, &EntropyConstant::LogOf(r(b as i64, 1))).unwrap();
        for v in &z {
            worst = worst.max(v.abs());
            pass &= v.to_bits() == 0f64.to_bits();
        }
    }
    Outcome { pass, detail: format!("bases 2..=10, n = 1..=10000, max |series| = {worst:e}") }
}

fn finite_systems() -> Vec<(&'static str, FiberedMapFamily, BaseProcess)> {
    let gls = FiberedMapFamily::new(SystemKind::Gls {
        maps: vec![
            GlsMap { q: vec![r(1, 3), r(2, 3)], decreasing: vec![false, true] },
            GlsMap { q: vec![r(1, 2), r(1, 4), r(1, 4)], decreasing: vec![true, false, true] },
        ],
    })
    .unwrap();
    let fam = FiberedMapFamily::new(SystemKind::BetaFamily {
        eta: r(3, 2),
        delta: r(5, 2),
        betas: vec![BetaValue::Rational(r(8, 5)), BetaValue::Rational(r(5, 2))],
    })
    .unwrap();
    let bern = |syms: Vec<Symbol>| {
        let k = syms.len() as i64;
        BaseProcess::bernoulli(syms.clone(), vec![r(1, k); syms.len()], 8).unwrap()
    };
    vec![
        ("decimal", decimal().0, decimal().1),
        ("binary", FiberedMapFamily::integer_base(&[2]).unwrap(), BaseProcess::singleton(Symbol(2))),
        ("{2,3}", half_half().0, bern(vec![Symbol(2), Symbol(3)])),
        ("gls", gls, bern(vec![Symbol(0), Symbol(1)])),
        ("beta 8/5", FiberedMapFamily::beta(BetaValue::Rational(r(8, 5))).unwrap(), BaseProcess::singleton(Symbol(0))),
        ("beta 3", FiberedMapFamily::beta(BetaValue::Rational(r(3, 1))).unwrap(), BaseProcess::singleton(Symbol(0))),
        ("beta family", fam, bern(vec![Symbol(0), Symbol(1)])),
    ]
}

fn c8() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let systems = finite_systems();
    // Cylinders against the enumeration, and partition masses.
    for (name, sys, base) in &systems {
        let o = Oracle::new(sys, None).unwrap();
        let mut tables = std::collections::HashMap::new();
        for trial in 0..200u64 {
            let omega = base.reseeded(8, 1).sample_prefix(trial, 8);
            let x = sample_point(8, trial, 12).unwrap();
            let mut t = CylinderTracker::start(sys, &Scalar::Rational(x.clone()), Backend::Rational).unwrap();
            for n in 1..=8 {
                if t.step(omega[n - 1]).is_err() {
                    break;
                }
                let c = t.cylinder().unwrap();
                let oc = if o.word_count(&omega, n).unwrap() <= 100_000 {
                    let table = tables.entry(omega[..n].to_vec()).or_insert_with(|| {
                        let t = o.enumerate_cylinders(&omega, n).unwrap();
                        if !check_partition(&t, false).ok {
                            failures.push(format!("{name}: partition n={n}"));
                        }
                        t
                    });
                    table.lookup(&x).map(|e| e.1.clone())
                } else {
                    o.cylinder_of_point(&omega, &x, n).ok().map(|e| e.1)
                };
                checked += 1;
                match oc {
                    Some(oc) if oc.same_set(&c) => {}
                    _ => failures.push(format!("{name}: trial {trial} n={n}")),
                }
            }
        }
    }
    // Capped Gauss partition.
    let g = FiberedMapFamily::gauss();
    let og = Oracle::new(&g, Some(9)).unwrap();
    let rep = check_partition(&og.enumerate_cylinders(&[Symbol(0)], 1).unwrap(), true);
    if !(rep.ok && rep.residual == r(1, 11)) {
        failures.push(format!("gauss cap 9 residual {}", rep.residual));
    }
    let rep2 = check_partition(&og.enumerate_cylinders(&[Symbol(0); 3], 3).unwrap(), true);
    if !rep2.ok {
        failures.push("gauss cap 9 n=3".into());
    }
    // m[n] against the brute-force search.
    let pairs = [(2usize, 0usize), (1, 0), (3, 2), (4, 1), (6, 2), (5, 0), (1, 2)];
    let opts = LochsOptions { backend: Backend::Rational, policy: AmbiguityPolicy::Error, depth_cap: 64 };
    let mut m_checked = 0;
    for (ti, si) in pairs {
        let (tn, ts, tb) = &systems[ti];
        let (sn, ss, sb) = &systems[si];
        let os = Oracle::new(ss, None).unwrap();
        let ot = Oracle::new(ts, None).unwrap();
        for trial in 0..200u64 {
            let wt = tb.reseeded(9, 1).sample_prefix(trial, 8);
            let ws = sb.reseeded(9, 2).sample_prefix(trial, 13);
            let x = sample_point(9, trial, 12).unwrap();
            let ser = match lochs_series(ts, &wt, ss, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{tn}->{sn}: lochs error {e}"));
                    continue;
                }
            };
            for n in 1..=8 {
                let (_, tc) = ot.cylinder_of_point(&wt, &x, n).unwrap();
                match brute_force_m(&tc, &os, &ws, &x, 12) {
                    Ok(m) if m == ser.m[n] => {}
                    other => failures.push(format!("{tn}->{sn}: trial {trial} n={n} lochs {} oracle {other:?}", ser.m[n])),
                }
                m_checked += 1;
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{checked} cylinders, {m_checked} m values, {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    }
}

fn c9() -> Outcome {
    let systems: Vec<(FiberedMapFamily, BaseProcess)> = {
        let mut v: Vec<_> = finite_systems().into_iter().map(|(_, s, b)| (s, b)).collect();
        v.push((FiberedMapFamily::gauss(), BaseProcess::singleton(Symbol(0))));
        v.push((
            FiberedMapFamily::gauss_renyi(),
            BaseProcess::bernoulli(vec![Symbol(0), Symbol(1)], vec![r(1, 2), r(1, 2)], 0).unwrap(),
        ));
        v
    };
    let (dec, _) = decimal();
    let mut bad_enclosure = 0usize;
    let mut contradictions = 0usize;
    let mut levels = 0usize;
    let mut decided = 0usize;
    let prec = 64;
    for trial in 0..1000u64 {
        let (sys, base) = &systems[trial as usize % systems.len()];
        let omega = base.reseeded(10, 1).sample_prefix(trial, 30);
        let x = Scalar::Rational(sample_point(10, trial, 30).unwrap());
        let mut te = CylinderTracker::start(sys, &x, Backend::Rational).unwrap();
        let mut tf = CylinderTracker::start(sys, &x, Backend::Float { prec }).unwrap();
        // Decimal cylinders of the same point, for containment answers.
        let mut de = CylinderTracker::start(&dec, &x, Backend::Rational).unwrap();
        let mut df = CylinderTracker::start(&dec, &x, Backend::Float { prec }).unwrap();
        let mut dec_levels: Vec<(FracInterval, randlochs::interval::Interval)> = Vec::new();
        for _ in 0..12 {
            de.step(Symbol(10)).unwrap();
            df.step(Symbol(10)).unwrap();
            dec_levels.push((de.cylinder_frac().unwrap(), df.cylinder().unwrap()));
        }
        for &s in &omega {
            if te.step(s).is_err() {
                break;
            }
            if tf.step(s).is_err() {
                break;
            }
            levels += 1;
            let ce = te.cylinder().unwrap();
            let cf = tf.cylinder().unwrap();
            if !cf.encloses_exact(&ce) {
                bad_enclosure += 1;
            }
            let fe = te.cylinder_frac().unwrap();
            for (exact_d, float_d) in &dec_levels {
                for (tri, truth) in [
                    (float_d.contains(&cf), exact_d.contains(&fe)),
                    (cf.contains(float_d), fe.contains(exact_d)),
                ] {
                    match tri {
                        Tri::Unknown => {}
                        t => {
                            decided += 1;
                            if (t == Tri::True) != truth {
                                contradictions += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: bad_enclosure == 0 && contradictions == 0 && levels > 10_000,
        detail: format!(
            "{levels} levels, {bad_enclosure} non-enclosing, {decided} decided containments, {contradictions} contradictions"
        ),
    }
}

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let all: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "Lochs constant, decimal vs Gauss", c1),
        (2, "random {2,3} vs decimal ratio", c2),
        (3, "entropy triangulation", c3),
        (4, "Gauss-Renyi SMB vs Rokhlin", c4),
        (5, "CLT-property KS", c5),
        (6, "Lochs CLT KS", c6),
        (7, "zero-property exactness", c7),
        (8, "oracle equivalence", c8),
        (9, "float backend soundness", c9),
    ];
    let mut failed = 0;
    for (k, name, f) in all {
        if !args.is_empty() && !args.contains(&k) {
            continue;
        }
        let t0 = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {k} [{status}] {name}: {} ({:.1}s)", o.detail, t0.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
