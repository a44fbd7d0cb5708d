//! Coefficient-level tests shared by the linear and GMM estimators.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::stats;

/// Reference distribution for coefficient tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    StudentT { df: f64 },
    Normal,
}

/// Test of a single coefficient. `se`, `statistic` and `p_value` are `None`
/// when the standard error is zero or not finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefTest {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: &'static str,
}

impl CoefTest {
    pub fn compute(name: &str, estimate: f64, variance: f64, reference: Reference) -> Self {
        let se = variance.max(0.0).sqrt();
        if !(se > 0.0 && se.is_finite()) {
            return CoefTest {
                name: name.to_owned(),
                estimate,
                se: None,
                statistic: None,
                p_value: None,
                stars: "",
            };
        }
        let t = estimate / se;
        let p = match reference {
            Reference::StudentT { df } => stats::student_t_two_sided(t, df),
            Reference::Normal => stats::normal_two_sided(t),
        };
        CoefTest {
            name: name.to_owned(),
            estimate,
            se: Some(se),
            statistic: Some(t),
            p_value: Some(p),
            stars: stats::stars(p),
        }
    }
}

pub(crate) fn coef_tests(
    names: &[String],
    b: &DVector<f64>,
    v: &DMatrix<f64>,
    reference: Reference,
) -> Vec<CoefTest> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| CoefTest::compute(n, b[i], v[(i, i)], reference))
        .collect()
}

/// Chi-square test of joint nullity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// `W = b' V^-1 b` over the named subset of coefficients.
pub(crate) fn wald<S: AsRef<str>>(
    names: &[String],
    b: &DVector<f64>,
    v: &DMatrix<f64>,
    subset: &[S],
) -> Result<WaldTest> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("Wald subset is empty".into()));
    }
    let idx = subset
        .iter()
        .map(|s| {
            names
                .iter()
                .position(|n| n == s.as_ref())
                .ok_or_else(|| Error::UnknownVariable(s.as_ref().to_owned()))
        })
        .collect::<Result<Vec<_>>>()?;
    let bs = linalg::select(b, &idx);
    let vs = linalg::select_block(v, &idx);
    let inv = linalg::spd_inverse(&vs).ok_or_else(|| {
        Error::Singular(format!(
            "covariance block of {} is not invertible",
            subset.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(", ")
        ))
    })?;
    let statistic = (bs.transpose() * inv * &bs)[(0, 0)];
    Ok(WaldTest {
        statistic,
        df: idx.len(),
        p_value: stats::chi_square_sf(statistic, idx.len() as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_estimate_and_zero_se() {
        let t = CoefTest::compute("b", 0.0, 4.0, Reference::StudentT { df: 10.0 });
        assert_eq!(t.statistic, Some(0.0));
        assert_abs_diff_eq!(t.p_value.unwrap(), 1.0, epsilon = 1e-12);
        let t = CoefTest::compute("b", 1.0, 0.0, Reference::Normal);
        assert_eq!((t.se, t.statistic, t.p_value, t.stars), (None, None, None, ""));
    }

    #[test]
    fn singular_block_is_error() {
        let names = vec!["a".to_owned(), "b".to_owned()];
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(wald(&names, &b, &v, &["a", "b"]), Err(Error::Singular(_))));
        assert!(matches!(wald(&names, &b, &v, &["z"]), Err(Error::UnknownVariable(_))));
    }
}
