//! Confidence intervals used by the reports: exact Clopper-Pearson bounds for
//! success fractions and order-statistic intervals for medians.

use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

/// Two-sided Clopper-Pearson interval at `confidence` (e.g. 0.99).
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(successes <= trials, "more successes than trials");
    if trials == 0 {
        return (0.0, 1.0);
    }
    let tail = 0.5 * (1.0 - confidence);
    let lower = if successes == 0 {
        0.0
    } else {
        beta_quantile(successes as f64, (trials - successes + 1) as f64, tail)
    };
    let upper = clopper_pearson_upper(successes, trials, tail);
    (lower, upper)
}

/// One-sided upper Clopper-Pearson bound with tail probability `alpha`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, alpha: f64) -> f64 {
    assert!(successes <= trials, "more successes than trials");
    if successes == trials {
        return 1.0;
    }
    beta_quantile((successes + 1) as f64, (trials - successes) as f64, 1.0 - alpha)
}

fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    Beta::new(a, b)
        .expect("positive beta shape parameters")
        .inverse_cdf(p)
}

/// Median of a sample; `None` when empty. Infinite entries are allowed.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    })
}

/// Distribution-free interval for the median from order statistics, at
/// coverage at least `confidence`. `None` when the sample is too small for
/// that coverage.
pub fn median_interval(values: &[f64], confidence: f64) -> Option<(f64, f64)> {
    let n = values.len() as u64;
    if n == 0 {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - confidence);
    let bin = Binomial::new(0.5, n).expect("valid binomial");
    // largest k >= 1 with P(B <= k - 1) <= tail; interval is [x_(k), x_(n-k+1)]
    let mut k = 0u64;
    while k < n / 2 && bin.cdf(k) <= tail {
        k += 1;
    }
    if k == 0 {
        return None;
    }
    Some((v[(k - 1) as usize], v[(n - k) as usize]))
}
