//! Small statistics helpers: moment accumulation, Welch tests, a normal CDF,
//! and least-squares exponential-rate fitting.

/// Running mean/variance accumulator (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Deterministic mean/SE over a slice (fixed summation order, so parallel
/// producers that collect in replication order reproduce bit-identical
/// estimates).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Complementary error function, Numerical-Recipes rational approximation
/// (absolute error below 1.2e-7, ample for Monte Carlo p-values).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Welch two-sample comparison of means from summary statistics.
/// With the replication counts used here (10^4 and up) the t reference
/// distribution is indistinguishable from normal, so the p-value uses the
/// normal tail.
#[derive(Debug, Clone, Copy)]
pub struct WelchResult {
    pub diff: f64,
    pub pooled_se: f64,
    pub z: f64,
    pub p_value: f64,
}

pub fn welch_test(mean_a: f64, se_a: f64, mean_b: f64, se_b: f64) -> WelchResult {
    let diff = mean_a - mean_b;
    let pooled_se = (se_a * se_a + se_b * se_b).sqrt();
    let z = if pooled_se > 0.0 { diff / pooled_se } else { 0.0 };
    WelchResult {
        diff,
        pooled_se,
        z,
        p_value: erfc(z.abs() / std::f64::consts::SQRT_2),
    }
}

/// Least-squares slope of `ln y` against `t`: the decay rate of an
/// exponential tail. Points with `y <= 0` are rejected.
pub fn fit_exp_rate(t: &[f64], y: &[f64]) -> Option<f64> {
    if t.len() != y.len() || t.len() < 2 || y.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let n = t.len() as f64;
    let mean_t = t.iter().sum::<f64>() / n;
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mean_l = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (ti, li) in t.iter().zip(&logs) {
        num += (ti - mean_t) * (li - mean_l);
        den += (ti - mean_t) * (ti - mean_t);
    }
    if den == 0.0 {
        return None;
    }
    Some(-(num / den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_direct() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let mut m = Moments::new();
        for &x in &xs {
            m.push(x);
        }
        let (mean, se) = mean_se(&xs);
        assert!((m.mean() - mean).abs() < 1e-12);
        assert!((m.std_error() - se).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_points() {
        // The rational erfc approximation is good to ~1.2e-7.
        assert!((normal_cdf(0.0) - 0.5).abs() < 2e-7);
        assert!((normal_cdf(1.959963985) - 0.975).abs() < 2e-6);
        assert!((normal_cdf(-3.0) - 0.00134989803163).abs() < 1e-6);
    }

    #[test]
    fn welch_detects_separation() {
        let r = welch_test(10.0, 0.1, 9.0, 0.1);
        assert!(r.p_value < 1e-6);
        let same = welch_test(10.0, 0.1, 10.05, 0.1);
        assert!(same.p_value > 0.5);
    }

    #[test]
    fn exp_rate_recovers_slope() {
        let rate = 0.25;
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|&ti| 3.0 * (-rate * ti).exp()).collect();
        let fit = fit_exp_rate(&t, &y).unwrap();
        assert!((fit - rate).abs() < 1e-10);
    }
}
