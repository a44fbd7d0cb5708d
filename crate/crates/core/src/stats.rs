//! Small numerical helpers shared by the estimators: moments, quantiles,
//! reference distributions and significance codes.

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Population standard deviation (`n` denominator).
pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile of already sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Two-sided p-value of `t` under Student-t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Two-sided p-value of `z` under the standard normal.
pub fn normal_two_sided(z: f64) -> f64 {
    let dist = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * dist.cdf(-z.abs())).min(1.0)
}

/// Upper tail probability of a chi-square statistic.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("df > 0").sf(x)
}

/// Upper tail probability of an F statistic.
pub fn f_sf(f: f64, df1: f64, df2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    FisherSnedecor::new(df1, df2).expect("df > 0").sf(f)
}

/// Exact (Clopper-Pearson) two-sided `1 - gamma` interval for a binomial
/// proportion with `successes` out of `trials`.
pub fn clopper_pearson(successes: usize, trials: usize, gamma: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let d = successes as f64;
    let m = trials as f64;
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(d, m - d + 1.0).unwrap().inverse_cdf(gamma / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(d + 1.0, m - d).unwrap().inverse_cdf(1.0 - gamma / 2.0)
    };
    (lower, upper)
}

/// Significance code: `***` at 1%, `**` at 5%, `*` at 10%.
pub fn stars(p: f64) -> &'static str {
    if p <= 0.01 {
        "***"
    } else if p <= 0.05 {
        "**"
    } else if p <= 0.10 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 100.0];
        assert_abs_diff_eq!(quantile_sorted(&v, 0.25), 1.75, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.5), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.75), 27.25, epsilon = 1e-12);
    }

    #[test]
    fn reference_distributions() {
        // 1.96 is the two-sided 5% normal critical value.
        assert_abs_diff_eq!(normal_two_sided(1.959963984540054), 0.05, epsilon = 1e-9);
        assert_abs_diff_eq!(student_t_two_sided(1.96, 1e6), 0.05, epsilon = 1e-4);
        assert_abs_diff_eq!(student_t_two_sided(0.0, 5.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chi_square_sf(3.841458820694124, 1.0), 0.05, epsilon = 1e-9);
    }

    #[test]
    fn clopper_pearson_edges() {
        let (lo, hi) = clopper_pearson(0, 72, 0.05);
        assert_eq!(lo, 0.0);
        // closed form for d = 0: 1 - (gamma/2)^(1/m)
        assert_abs_diff_eq!(hi, 1.0 - 0.025f64.powf(1.0 / 72.0), epsilon = 1e-9);
        let (lo, hi) = clopper_pearson(5, 5, 0.05);
        assert_abs_diff_eq!(lo, 0.025f64.powf(1.0 / 5.0), epsilon = 1e-9);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn star_boundaries() {
        assert_eq!(stars(0.004), "***");
        assert_eq!(stars(0.01), "***");
        assert_eq!(stars(0.05), "**");
        assert_eq!(stars(0.051), "*");
        assert_eq!(stars(0.10), "*");
        assert_eq!(stars(0.5), "");
    }
}
