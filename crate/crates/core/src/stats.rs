//! Goodness-of-fit tests and moment estimators used by the experiment layers.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Empirical autocovariance at `lag` (divisor n).
pub fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = mean(x);
    (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64
}

pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    autocovariance(x, lag) / autocovariance(x, 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub stat: f64,
    pub df: usize,
    pub p_value: f64,
}

impl TestResult {
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let d = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    d.sf(stat)
}

/// Pools bins with expected count below `min_expected` into one bin; if the
/// pool is still too small it absorbs the smallest remaining bin.
fn pool(bins: Vec<(f64, Vec<f64>)>, min_expected: f64) -> Vec<(f64, Vec<f64>)> {
    let (mut big, small): (Vec<_>, Vec<_>) = bins.into_iter().partition(|(e, _)| *e >= min_expected);
    if small.is_empty() {
        return big;
    }
    let width = small[0].1.len();
    let mut acc = (0.0, vec![0.0; width]);
    for (e, o) in small {
        acc.0 += e;
        for (a, b) in acc.1.iter_mut().zip(o) {
            *a += b;
        }
    }
    while acc.0 < min_expected && !big.is_empty() {
        let (idx, _) = big
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .expect("nonempty");
        let (e, o) = big.swap_remove(idx);
        acc.0 += e;
        for (a, b) in acc.1.iter_mut().zip(o) {
            *a += b;
        }
    }
    big.push(acc);
    big
}

/// Pearson goodness of fit of `observed` against category probabilities.
/// Probability mass missing from `probs` is treated as one extra tail bin.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> TestResult {
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut bins: Vec<(f64, Vec<f64>)> =
        probs.iter().zip(observed).map(|(p, &o)| (p * n, vec![o as f64])).collect();
    let covered: f64 = probs.iter().sum();
    let tail_obs: u64 = observed.iter().skip(probs.len()).sum();
    if covered < 1.0 - 1e-15 || tail_obs > 0 {
        bins.push(((1.0 - covered).max(0.0) * n, vec![tail_obs as f64]));
    }
    let bins = pool(bins, 5.0);
    let stat = bins
        .iter()
        .map(|(e, o)| if *e > 0.0 { (o[0] - e).powi(2) / e } else if o[0] > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let df = bins.len().saturating_sub(1);
    TestResult { stat, df, p_value: chi2_sf(stat, df) }
}

/// Two-sample homogeneity test on categorical counts (2 x m contingency table).
pub fn chi_square_two_sample<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> TestResult {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let n = (na + nb) as f64;
    let fa = na as f64 / n;
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().filter(|k| !a.contains_key(*k)).cloned());
    let bins: Vec<(f64, Vec<f64>)> = keys
        .iter()
        .map(|k| {
            let x = *a.get(k).unwrap_or(&0) as f64;
            let y = *b.get(k).unwrap_or(&0) as f64;
            // pooling criterion uses the smaller expected cell of the column
            ((x + y) * fa.min(1.0 - fa), vec![x, y])
        })
        .collect();
    let bins = pool(bins, 5.0);
    let mut stat = 0.0;
    for (_, o) in &bins {
        let col = o[0] + o[1];
        let ea = col * fa;
        let eb = col * (1.0 - fa);
        stat += (o[0] - ea).powi(2) / ea + (o[1] - eb).powi(2) / eb;
    }
    let df = bins.len().saturating_sub(1);
    TestResult { stat, df, p_value: chi2_sf(stat, df) }
}

/// Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.27 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        s += if (k as i64) % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS test against a continuous CDF (asymptotic p-value with the
/// Stephens small-sample correction).
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    TestResult { stat: d, df: 0, p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d) }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
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
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    TestResult { stat: d, df: 0, p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d) }
}

/// Counts of length-`len` blocks of `x` taken every `stride` sites.
pub fn block_counts<T: Ord + Clone>(x: &[T], len: usize, stride: usize) -> BTreeMap<Vec<T>, u64> {
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i + len <= x.len() {
        *out.entry(x[i..i + len].to_vec()).or_insert(0) += 1;
        i += stride;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ~ 0.0495, Q(1.63) ~ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn gof_exact_counts_accept() {
        let r = chi_square_gof(&[500, 300, 200], &[0.5, 0.3, 0.2]);
        assert!(r.stat.abs() < 1e-12);
        assert_eq!(r.df, 2);
    }

    #[test]
    fn gof_pools_sparse_tail() {
        let r = chi_square_gof(&[90, 8, 1, 1], &[0.9, 0.08, 0.01, 0.01]);
        assert_eq!(r.df, 1);
        assert!(r.accepts(0.01));
    }

    #[test]
    fn two_sample_detects_difference() {
        let a: BTreeMap<u8, u64> = [(0, 500), (1, 500)].into();
        let b: BTreeMap<u8, u64> = [(0, 700), (1, 300)].into();
        assert!(!chi_square_two_sample(&a, &b).accepts(0.01));
        assert!(chi_square_two_sample(&a, &a).accepts(0.01));
    }

    #[test]
    fn ks_uniform_grid_accepts() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_one_sample(&x, |v| v.clamp(0.0, 1.0)).accepts(0.01));
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert!(!ks_two_sample(&x, &y).accepts(0.01));
    }

    #[test]
    fn blocks_counted_with_stride() {
        let c = block_counts(&[0u8, 1, 1, 0, 1], 2, 2);
        assert_eq!(c.get(&vec![0, 1]), Some(&1));
        assert_eq!(c.get(&vec![1, 0]), Some(&1));
    }
}
