//! Normality and two-sample distribution tests over accuracy distributions.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample has {n} observations; at least {min} are required")]
    TooFewObservations { n: usize, min: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub const MIN_NORMALITY_N: usize = 20;

fn check_finite(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Biased central moments m2, m3, m4.
fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Normal deviate for the sample skewness.
fn skew_z(n: f64, b1: f64) -> f64 {
    let y = b1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    delta * (y / alpha).asinh()
}

/// Normal deviate for the sample kurtosis.
fn kurtosis_z(n: f64, b2: f64) -> f64 {
    let e = 3.0 * (n - 1.0) / (n + 1.0);
    let var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    let x = (b2 - e) / var.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let denom = 1.0 + x * (2.0 / (a - 4.0)).sqrt();
    let term2 = denom.signum() * ((1.0 - 2.0 / a) / denom.abs()).cbrt();
    (term1 - term2) / (2.0 / (9.0 * a)).sqrt()
}

/// D'Agostino-Pearson omnibus test; p from the chi-square(2) upper tail.
pub fn dagostino_pearson(sample: &[f64]) -> Result<TestResult, StatsError> {
    let n = sample.len();
    if n < MIN_NORMALITY_N {
        return Err(StatsError::TooFewObservations {
            n,
            min: MIN_NORMALITY_N,
        });
    }
    check_finite(sample)?;
    let (m2, m3, m4) = central_moments(sample);
    let mean = sample.iter().sum::<f64>() / n as f64;
    // Relative cutoff so constant samples with rounding noise still count as constant.
    if m2 <= (f64::EPSILON * mean.abs()).powi(2) * 16.0 || m2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let nf = n as f64;
    let zs = skew_z(nf, m3 / m2.powf(1.5));
    let zk = kurtosis_z(nf, m4 / (m2 * m2));
    let k2 = zs * zs + zk * zk;
    if !k2.is_finite() {
        return Err(StatsError::NonFinite);
    }
    Ok(TestResult {
        statistic: k2,
        p_value: (-k2 / 2.0).exp().clamp(0.0, 1.0),
    })
}

/// Survival function of the limiting Kolmogorov distribution,
/// `Q(l) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 l^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form converges fast for small arguments.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let c = -pi2 / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20u32 {
            let j = f64::from(2 * k - 1);
            let t = (c * j * j).exp();
            s += t;
            if t < 1e-18 * s {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100u32 {
        let kf = f64::from(k);
        let t = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Largest absolute difference of the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(a)?;
    check_finite(b)?;
    let d = ks_statistic(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let en = n * m / (n + m);
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(en.sqrt() * d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    // Reference values below were produced with scipy 1.15.3
    // (`kstwobign.sf`, `normaltest`, `skewtest`, `kurtosistest`).

    #[test]
    fn kolmogorov_reference_values() {
        let refs = [
            (0.3, 0.9999906941986655),
            (0.5, 0.9639452436648751),
            (0.8, 0.5441424115741981),
            (1.0, 0.26999967167735456),
            (1.18, 0.1234538094297657),
            (1.5, 0.022217962616525127),
            (2.0, 0.0006709252557796953),
            (3.0, 3.045995948942526e-08),
        ];
        for (l, p) in refs {
            let got = kolmogorov_sf(l);
            assert!(((got - p) / p).abs() < 1e-10, "lambda {l}: {got} vs {p}");
        }
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn normality_reference_values() {
        let x = [
            0.0,
            1.1,
            3.0284271247461905,
            5.496152422706632,
            1.4,
            4.680339887498949,
            1.2969384566990692,
            5.220259177452136,
            2.427416997969522,
            6.9,
            4.622776601683793,
            2.5828726939093998,
            7.769219381653056,
            6.172166581031862,
            4.78320341483518,
            3.5947501931112527,
            2.6,
            1.792795635500224,
            8.167532368147139,
            7.719079927272796,
            7.442719099991592,
            7.334089594072642,
            7.389146716115445,
            7.604125036192546,
            7.975507653592553,
            8.5,
            9.1745073534124,
            2.996115413079065,
            3.9620734196170875,
            5.069779406900631,
        ];
        let (m2, m3, m4) = central_moments(&x);
        let n = x.len() as f64;
        assert!((skew_z(n, m3 / m2.powf(1.5)) - -0.37210846227651895).abs() < 1e-10);
        assert!((kurtosis_z(n, m4 / (m2 * m2)) - -2.4108433359682744).abs() < 1e-10);
        let r = dagostino_pearson(&x).unwrap();
        assert!((r.statistic - 5.9506302982804335).abs() < 1e-10);
        assert!((r.p_value - 0.05103134898394098).abs() < 1e-12);

        let y: Vec<f64> = (0..25).map(|i| f64::from(i * 37 % 101) / 10.0).collect();
        let r = dagostino_pearson(&y).unwrap();
        assert!((r.statistic - 4.316420773075079).abs() < 1e-10);
        assert!((r.p_value - 0.11553169321427317).abs() < 1e-12);
    }

    #[test]
    fn normality_errors() {
        assert_eq!(
            dagostino_pearson(&[1.0; 10]),
            Err(StatsError::TooFewObservations { n: 10, min: 20 })
        );
        assert_eq!(dagostino_pearson(&[0.7; 30]), Err(StatsError::ZeroVariance));
        let mut v: Vec<f64> = (0..30).map(f64::from).collect();
        v[3] = f64::NAN;
        assert_eq!(dagostino_pearson(&v), Err(StatsError::NonFinite));
    }

    #[test]
    fn normal_vs_bimodal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let normal: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(dagostino_pearson(&normal).unwrap().p_value > 0.05);
        let bimodal: Vec<f64> = (0..500)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + if i % 2 == 0 { -5.0 } else { 5.0 }
            })
            .collect();
        assert!(dagostino_pearson(&bimodal).unwrap().p_value < 0.01);
    }

    #[test]
    fn ks_examples() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.5);
        assert!((r.p_value - kolmogorov_sf(2f64.sqrt() * 0.5)).abs() < 1e-15);
        let same = [0.3, 0.1, 0.2, 0.2];
        let r = ks_two_sample(&same, &same).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap().statistic, 1.0);
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(StatsError::EmptySample));
        assert_eq!(ks_two_sample(&[1.0], &[f64::INFINITY]), Err(StatsError::NonFinite));
    }

    /// ECDF difference checked at every sample point by direct counting.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((-20i32..20).prop_map(|v| f64::from(v) / 4.0), 1..40)
    }

    proptest! {
        #[test]
        fn ks_symmetric_and_bounded(a in sample(), b in sample()) {
            let ab = ks_two_sample(&a, &b).unwrap();
            let ba = ks_two_sample(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab.statistic));
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            prop_assert!((ab.statistic - ks_brute(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn ks_monotone_invariance(a in sample(), b in sample()) {
            let f = |v: &f64| (v * 0.7).exp() + 3.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(ks_statistic(&a, &b), ks_statistic(&ta, &tb));
        }

        #[test]
        fn k2_nonnegative(v in prop::collection::vec(-100.0f64..100.0, 20..80)) {
            if let Ok(r) = dagostino_pearson(&v) {
                prop_assert!(r.statistic >= 0.0);
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
        }

        #[test]
        fn kolmogorov_sf_monotone(l in 0.0f64..4.0, dl in 1e-3f64..1.0) {
            prop_assert!(kolmogorov_sf(l + dl) <= kolmogorov_sf(l));
        }
    }
}
