//! Small numeric helpers: exact binomial tails and sample summaries.

/// `P[Bin(n, p) < r]`, summed term by term with the stable recurrence
/// `t_{i+1} = t_i * (n-i)/(i+1) * p/(1-p)` started from `(1-p)^n` in log space.
pub fn binomial_tail_below(n: u64, p: f64, r: u64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range");
    if r == 0 {
        return 0.0;
    }
    if r > n {
        return 1.0;
    }
    if p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0;
    }
    let n_f = n as f64;
    let ratio = p / (1.0 - p);
    let mut term = (n_f * (1.0 - p).ln()).exp();
    let mut acc = term;
    for i in 0..(r - 1) {
        term *= (n_f - i as f64) / (i as f64 + 1.0) * ratio;
        acc += term;
    }
    acc.min(1.0)
}

/// Sample mean and standard deviation (unbiased).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: direct evaluation with exact binomial coefficients.
    fn direct_tail(n: u64, p: f64, r: u64) -> f64 {
        let mut acc = 0.0;
        for i in 0..r.min(n + 1) {
            let mut c = 0.0f64; // log C(n, i)
            for j in 0..i {
                c += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
            }
            acc += (c + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp();
        }
        acc
    }

    #[test]
    fn matches_direct_summation() {
        for &(n, p, r) in &[(20u64, 0.3f64, 5u64), (100, 0.01, 3), (1000, 0.002, 10)] {
            let a = binomial_tail_below(n, p, r);
            let b = direct_tail(n, p, r);
            assert!((a - b).abs() < 1e-12, "({n},{p},{r}): {a} vs {b}");
        }
    }

    #[test]
    fn edge_cases() {
        assert_eq!(binomial_tail_below(10, 0.5, 0), 0.0);
        assert_eq!(binomial_tail_below(10, 0.5, 11), 1.0);
        assert_eq!(binomial_tail_below(10, 0.0, 1), 1.0);
        assert_eq!(binomial_tail_below(10, 1.0, 10), 0.0);
        assert!((binomial_tail_below(1, 0.25, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
