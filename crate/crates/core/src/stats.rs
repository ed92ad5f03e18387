//! Binomial summaries and log-log regression.

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::{Error, Result};

/// Observed success count with its exact two-sided interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Proportion {
    /// 95% Clopper-Pearson summary.
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = clopper_pearson(successes, trials, 0.95);
        Self {
            successes,
            trials,
            p_hat: successes as f64 / trials as f64,
            ci_lo,
            ci_hi,
        }
    }

    pub fn standard_error(&self) -> f64 {
        binomial_se(self.p_hat, self.trials)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

/// Exact binomial interval at confidence `level`.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n, n > 0");
    let alpha = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0)
            .expect("positive shape parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf)
            .expect("positive shape parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Standard error of the difference of two independent proportions.
pub fn pooled_se(a: &Proportion, b: &Proportion) -> f64 {
    (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Natural log of the prefactor.
    pub log_prefactor: f64,
    pub r2: f64,
    pub points: usize,
}

impl PowerLawFit {
    /// Placeholder for a fit that could not be made.
    pub const UNFIT: Self = Self {
        exponent: f64::NAN,
        log_prefactor: f64::NAN,
        r2: f64::NAN,
        points: 0,
    };
}

/// Weighted least squares of `ln y` on `ln x`: `y ≈ e^b · x^k`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], weights: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() || xs.len() != weights.len() {
        return Err(Error::Dimension("fit inputs differ in length".into()));
    }
    let pts: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(ys)
        .zip(weights)
        .filter(|((x, y), w)| **x > 0.0 && **y > 0.0 && **w > 0.0)
        .map(|((x, y), w)| (x.ln(), y.ln(), *w))
        .collect();
    if pts.len() < 2 {
        return Err(Error::param(
            "points",
            format!("{} usable points, need at least 2", pts.len()),
        ));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("xs", "all abscissae coincide"));
    }
    let k = sxy / sxx;
    let b = my - k * mx;
    let sse: f64 = pts.iter().map(|p| p.2 * (p.1 - b - k * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerLawFit {
        exponent: k,
        log_prefactor: b,
        r2,
        points: pts.len(),
    })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn clopper_pearson_edges() {
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        // Zero successes: hi = 1 - (alpha/2)^(1/n).
        assert_relative_eq!(hi, 1.0 - 0.025f64.powf(0.1), max_relative = 1e-9);
        let (lo, hi) = clopper_pearson(10, 10, 0.95);
        assert_relative_eq!(lo, 0.025f64.powf(0.1), max_relative = 1e-9);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn clopper_pearson_reference_value() {
        // 5 of 20: reference interval (0.0866, 0.4910).
        let (lo, hi) = clopper_pearson(5, 20, 0.95);
        assert!((lo - 0.0866).abs() < 5e-4, "{lo}");
        assert!((hi - 0.4910).abs() < 5e-4, "{hi}");
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let xs = log_space(1e-3, 1e-1, 25);
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = fit_power_law(&xs, &ys, &vec![1.0; xs.len()]).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-9);
        assert!(fit.log_prefactor.abs() < 1e-6);
    }

    #[test]
    fn fit_skips_nonpositive_and_rejects_too_few() {
        let fit = fit_power_law(&[1.0, 2.0, 4.0], &[0.0, 2.0, 4.0], &[1.0; 3]).unwrap();
        assert_eq!(fit.points, 2);
        assert_relative_eq!(fit.exponent, 1.0, max_relative = 1e-12);
        assert!(fit_power_law(&[1.0, 2.0], &[0.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn interval_brackets_estimate(n in 1u64..2000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as u64;
            let p = Proportion::new(k, n);
            prop_assert!(p.ci_lo <= p.p_hat + 1e-12 && p.p_hat <= p.ci_hi + 1e-12);
            prop_assert!(0.0 <= p.ci_lo && p.ci_hi <= 1.0);
        }
    }
}
