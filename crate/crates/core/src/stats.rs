//! Small numeric helpers shared by the statistics and metrics code.

/// Gauss error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64, mean: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "normal cdf needs a positive width");
    0.5 * (1.0 + erf((x - mean) / (sigma * std::f64::consts::SQRT_2)))
}

/// Population mean and variance (divisor n).
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "moments of an empty sample");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Kolmogorov-Smirnov statistic of a sample against a reference CDF,
/// D = sup |F_n - F|.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((f - below).abs()).max((above - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov-Smirnov acceptance threshold at significance
/// alpha = 0.01 for sample size n.
pub fn ks_threshold_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Empirical percentile with linear interpolation between order statistics
/// (the h = (n-1)p convention). `p` is in [0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    assert!((0.0..=100.0).contains(&p), "percentile rank outside [0, 100]");
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}
