//! Sample statistics and the goodness-of-fit tests used by the checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the unbiased sample variance, from the fourth central
/// moment.
pub fn variance_se(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if n < 4.0 {
        return f64::INFINITY;
    }
    let m = mean(x);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let s2 = variance(x);
    ((m4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n).max(0.0).sqrt()
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1) as f64
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / (variance(x) * variance(y)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn poisson_ln_pmf(k: usize, mean: f64) -> f64 {
    k as f64 * mean.ln() - mean - ln_gamma(k as f64 + 1.0)
}

/// Pearson chi-square of observed counts against Poisson(mean), with bins
/// merged until every expected count is at least 5.
pub fn chi_square_poisson(counts: &[usize], mean: f64) -> TestResult {
    let n = counts.len() as f64;
    let max_obs = counts.iter().copied().max().unwrap_or(0);
    let top = max_obs.max((mean + 10.0 * mean.sqrt() + 10.0) as usize);
    let mut observed = vec![0.0; top + 1];
    for &c in counts {
        observed[c] += 1.0;
    }
    let mut probs: Vec<f64> = (0..=top).map(|k| poisson_ln_pmf(k, mean).exp()).collect();
    let head: f64 = probs[..top].iter().sum();
    probs[top] = (1.0 - head).max(0.0);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=top {
        o += observed[k];
        e += probs[k] * n;
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let stat: f64 = bins.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let df = bins.len().saturating_sub(1);
    let p = if df == 0 { 1.0 } else { ChiSquared::new(df as f64).unwrap().sf(stat) };
    TestResult { statistic: stat, p_value: p }
}

/// Kolmogorov limiting survival function Q(x) = P(K > x).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.18 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against Uniform[0,1].
pub fn ks_uniform(x: &[f64]) -> TestResult {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &u)| ((i + 1) as f64 / n - u).max(u - i as f64 / n))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    TestResult { statistic: d, p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d) }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sn = ne.sqrt();
    TestResult { statistic: d, p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// One-sided p-value for H₀: slope >= 0 against slope < 0.
    pub p_negative: f64,
}

/// Ordinary least squares fit of y on x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2, "need at least two points to fit a line");
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if n == 2 {
        return LinearFit { slope, intercept, slope_se: f64::INFINITY, p_negative: 1.0 };
    }
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let df = (n - 2) as f64;
    let slope_se = (rss / df / sxx).sqrt();
    let p_negative = if slope_se == 0.0 {
        if slope < 0.0 { 0.0 } else { 1.0 }
    } else {
        StudentsT::new(0.0, 1.0, df).unwrap().cdf(slope / slope_se)
    };
    LinearFit { slope, intercept, slope_se, p_negative }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

/// log P[N(0,1) ≥ z], switching to the asymptotic series where the tail
/// itself underflows.
pub fn log_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        return normal_sf(z).ln();
    }
    let z2 = z * z;
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `log(Σ exp(v))` without overflow.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;
    use rand::Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn log_tail_is_continuous_at_the_switch() {
        let below = log_normal_sf(30.0 - 1e-9);
        let above = log_normal_sf(30.0);
        assert!((below - above).abs() < 1e-6 * below.abs());
        assert!(log_normal_sf(200.0).is_finite());
    }

    #[test]
    fn moments() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert!((variance(&x) - 5.0 / 3.0).abs() < 1e-15);
        assert!((correlation(&x, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_square_accepts_poisson_and_rejects_shifted() {
        let mut rng = SeedSpec::new(1).rng();
        let pois = Poisson::new(5.0).unwrap();
        let c: Vec<usize> = (0..10_000).map(|_| pois.sample(&mut rng) as usize).collect();
        assert!(chi_square_poisson(&c, 5.0).p_value > 0.01);
        assert!(chi_square_poisson(&c, 5.5).p_value < 1e-6);
    }

    #[test]
    fn ks_accepts_uniform_rejects_skewed() {
        let mut rng = SeedSpec::new(2).rng();
        let u: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        assert!(ks_uniform(&u).p_value > 0.01);
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        assert!(ks_uniform(&sq).p_value < 1e-6);
        let v: Vec<f64> = (0..4000).map(|_| rng.random()).collect();
        assert!(ks_two_sample(&u, &v).p_value > 0.01);
        assert!(ks_two_sample(&sq, &v).p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_known_value() {
        // Q(1.36) ≈ 0.049
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v + if (*v as i32) % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let f = linear_fit(&x, &y);
        assert!((f.slope + 2.0).abs() < 0.05);
        assert!(f.p_negative < 1e-6);
    }

    #[test]
    fn wilson_contains_truth() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3);
        assert_eq!(wilson_interval(0, 100, 1.96).0, 0.0);
    }

    #[test]
    fn lse() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
