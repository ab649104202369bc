//! Small statistical helpers shared by the diagnostics and experiments.

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sample style KS statistic of a sorted sample against a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Batch-means estimate of (mean, 95% half-width) for a correlated series.
/// Splits into `batches` equal batches (remainder dropped from the front).
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    assert!(batches >= 2 && series.len() >= 2 * batches);
    let m = series.len() / batches;
    let data = &series[series.len() - m * batches..];
    let means: Vec<f64> = data.chunks(m).map(|c| c.iter().sum::<f64>() / m as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|&x| (x - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    // t quantile for common batch counts, fallback ~2
    let t = match batches {
        2..=9 => 2.306,
        10..=19 => 2.262,
        20..=39 => 2.093,
        _ => 2.0,
    };
    (grand, t * (var / batches as f64).sqrt())
}

/// Empirical quantile by linear interpolation on the sorted input.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
