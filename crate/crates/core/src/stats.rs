//! Sample statistics: mean and standard error, the standard normal CDF and
//! the Kolmogorov–Smirnov distance to it.

use serde::Serialize;
use libm::erfc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; NaN for one sample.
    pub stderr: f64,
    pub count: usize,
}

/// Mean and standard error, shifted by the first sample so that identical
/// samples give a standard error of exactly zero.
pub fn mean_stderr(values: &[f64]) -> Option<MeanStderr> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let v0 = values[0];
    let shift: f64 = values.iter().map(|v| v - v0).sum::<f64>() / n as f64;
    let mean = v0 + shift;
    let stderr = if n < 2 {
        f64::NAN
    } else {
        let ss: f64 = values.iter().map(|v| (v - v0 - shift).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    };
    Some(MeanStderr { mean, stderr, count: n })
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub distance: f64,
    /// Set when all samples coincide.
    pub degenerate: bool,
    pub count: usize,
}

/// Two-sided KS distance between the empirical CDF and `Φ`.
pub fn ks_distance(samples: &[f64]) -> Option<KsResult> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    let mut z = samples.to_vec();
    z.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &zi) in z.iter().enumerate() {
        let f = normal_cdf(zi);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let degenerate = z.first() == z.last();
    Some(KsResult { distance: d, degenerate, count: n })
}

/// Rows `(z, ecdf(z), Φ(z))` at the sorted sample points.
pub fn ecdf_rows(samples: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut z = samples.to_vec();
    z.sort_by(|a, b| a.total_cmp(b));
    let n = z.len() as f64;
    z.iter().enumerate().map(|(i, &v)| (v, (i + 1) as f64 / n, normal_cdf(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_mass_at_zero() {
        let r = ks_distance(&[0.0; 100]).unwrap();
        assert_eq!(r.distance, 0.5);
        assert!(r.degenerate);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_have_zero_stderr() {
        let v = vec![0.1 + 0.2; 17];
        let m = mean_stderr(&v).unwrap();
        assert_eq!(m.mean, 0.1 + 0.2);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn quantile_grid_is_close_to_normal() {
        // Exact quantiles at (i - 1/2)/n give distance 1/(2n).
        let n = 200;
        let q: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                // invert by bisection
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < p {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let d = ks_distance(&q).unwrap().distance;
        assert!((d - 0.5 / n as f64).abs() < 1e-9, "{d}");
    }

    proptest! {
        #[test]
        fn ks_is_a_distance(v in prop::collection::vec(-5.0f64..5.0, 1..200)) {
            let d = ks_distance(&v).unwrap().distance;
            prop_assert!((0.0..=1.0).contains(&d));
            let mut rev = v.clone();
            rev.reverse();
            prop_assert_eq!(ks_distance(&rev).unwrap().distance, d);
        }

        #[test]
        fn mean_within_range(v in prop::collection::vec(-1e3f64..1e3, 2..100)) {
            let m = mean_stderr(&v).unwrap();
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m.mean >= lo - 1e-9 && m.mean <= hi + 1e-9);
            prop_assert!(m.stderr >= 0.0);
        }
    }
}
