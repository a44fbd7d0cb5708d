//! Static panel regressions: pooled OLS, fixed effects (within estimator) and
//! Swamy-Arora random effects, with Arellano cluster-robust covariance,
//! coefficient tests, Wald joint tests and the Hausman test.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::inference::{self, CoefTest, Reference, WaldTest};
use crate::linalg;
use crate::stats;

pub const CONST_NAME: &str = "const";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effects {
    Pooled,
    Fixed,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    #[serde(default)]
    pub controls: Vec<String>,
    #[serde(default)]
    pub include_time_dummies: bool,
    pub effects: Effects,
}

impl ModelSpec {
    pub fn new<S: Into<String>>(dependent: S, regressors: &[&str], effects: Effects) -> Self {
        ModelSpec {
            dependent: dependent.into(),
            regressors: regressors.iter().map(|s| (*s).to_owned()).collect(),
            controls: Vec::new(),
            include_time_dummies: false,
            effects,
        }
    }

    pub fn with_controls(mut self, controls: &[&str]) -> Self {
        self.controls = controls.iter().map(|s| (*s).to_owned()).collect();
        self
    }

    pub fn with_time_dummies(mut self, on: bool) -> Self {
        self.include_time_dummies = on;
        self
    }

    pub fn with_effects(&self, effects: Effects) -> Self {
        ModelSpec {
            effects,
            ..self.clone()
        }
    }

    fn explanatory(&self) -> Vec<String> {
        self.regressors.iter().chain(&self.controls).cloned().collect()
    }

    /// Collects every violation of the spec invariants against `ds`.
    pub fn violations(&self, ds: &PanelDataset) -> Vec<String> {
        let mut out = Vec::new();
        let all: Vec<&String> = std::iter::once(&self.dependent)
            .chain(&self.regressors)
            .chain(&self.controls)
            .collect();
        for name in &all {
            if !ds.has_column(name) {
                out.push(format!("unknown column `{name}`"));
            }
        }
        if self.explanatory().contains(&self.dependent) {
            out.push(format!(
                "dependent `{}` also listed as a regressor or control",
                self.dependent
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for name in self.explanatory() {
            if !seen.insert(name.clone()) {
                out.push(format!("duplicate column `{name}`"));
            }
        }
        if self.regressors.is_empty() && self.controls.is_empty() {
            out.push("model has no regressors".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMethod {
    Classical,
    ArellanoCluster,
}

/// Finite-sample scaling applied to the cluster sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterCorrection {
    /// Plain sandwich (HC0 when every cluster has one observation).
    None,
    /// `G/(G-1) * (n-1)/(n-k)`.
    #[default]
    SmallSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub entity: String,
    pub year: i32,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitMetrics {
    pub r_squared: Option<f64>,
    pub adj_r_squared: Option<f64>,
    pub f_statistic: Option<f64>,
    pub f_pvalue: Option<f64>,
    pub rss: f64,
    pub tss: f64,
}

impl FitMetrics {
    /// R-squared family from sums of squares, `k` slope parameters.
    pub fn from_sums(rss: f64, tss: f64, n: usize, k: usize) -> Self {
        let r2 = (tss > 0.0).then(|| 1.0 - rss / tss);
        let resid_df = n as f64 - k as f64 - 1.0;
        let adj = r2.filter(|_| resid_df > 0.0).map(|r2| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / resid_df);
        let f = r2
            .filter(|r2| resid_df > 0.0 && k > 0 && *r2 < 1.0)
            .map(|r2| (r2 / k as f64) / ((1.0 - r2) / resid_df));
        FitMetrics {
            r_squared: r2,
            adj_r_squared: adj,
            f_statistic: f,
            f_pvalue: f.map(|f| stats::f_sf(f, k as f64, resid_df)),
            rss,
            tss,
        }
    }
}

/// Random-effects variance components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceComponents {
    pub sigma2_idiosyncratic: f64,
    pub sigma2_entity: f64,
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub covariance_method: CovarianceMethod,
    pub n_obs: usize,
    pub n_entities: usize,
    pub df_residual: usize,
    pub residuals: Vec<Residual>,
    pub metrics: FitMetrics,
    pub variance_components: Option<VarianceComponents>,
    classical_covariance: DMatrix<f64>,
    design: DMatrix<f64>,
    resid: DVector<f64>,
    clusters: Vec<usize>,
}

impl LinearFit {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    /// Homoskedastic covariance, kept even after switching to robust.
    pub fn classical_covariance(&self) -> &DMatrix<f64> {
        &self.classical_covariance
    }

    /// Slope names excluding the intercept and time dummies.
    pub fn slope_names(&self) -> Vec<&str> {
        self.names
            .iter()
            .filter(|n| *n != CONST_NAME && !n.starts_with("year_"))
            .map(String::as_str)
            .collect()
    }

    /// Returns a copy whose covariance is the entity-clustered sandwich
    /// `(X'X)^-1 (sum_g X_g' u_g u_g' X_g) (X'X)^-1`.
    pub fn cluster_robust(&self, correction: ClusterCorrection) -> Result<LinearFit> {
        let g = self.clusters.iter().max().map_or(0, |m| m + 1);
        let n_clusters = {
            let mut c = self.clusters.clone();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        if n_clusters < 2 {
            return Err(Error::InsufficientData(
                "cluster-robust covariance needs at least two entities".into(),
            ));
        }
        let k = self.design.ncols();
        let xtx_inv = linalg::spd_inverse(&(self.design.transpose() * &self.design))
            .ok_or_else(|| Error::Singular("X'X".into()))?;
        let mut scores = vec![DVector::<f64>::zeros(k); g];
        for (r, &c) in self.clusters.iter().enumerate() {
            scores[c] += self.design.row(r).transpose() * self.resid[r];
        }
        let mut meat = DMatrix::<f64>::zeros(k, k);
        for s in &scores {
            meat += s * s.transpose();
        }
        let mut v = &xtx_inv * meat * &xtx_inv;
        if correction == ClusterCorrection::SmallSample {
            let (gf, n) = (n_clusters as f64, self.design.nrows() as f64);
            v *= gf / (gf - 1.0) * (n - 1.0) / (n - k as f64);
        }
        let mut out = self.clone();
        out.covariance = (&v + v.transpose()) * 0.5;
        out.covariance_method = CovarianceMethod::ArellanoCluster;
        Ok(out)
    }

    /// Student-t tests with `df_residual` degrees of freedom.
    pub fn t_tests(&self) -> Vec<CoefTest> {
        inference::coef_tests(
            &self.names,
            &self.coefficients,
            &self.covariance,
            Reference::StudentT {
                df: self.df_residual as f64,
            },
        )
    }

    pub fn wald_joint<S: AsRef<str>>(&self, subset: &[S]) -> Result<WaldTest> {
        inference::wald(&self.names, &self.coefficients, &self.covariance, subset)
    }

    pub fn fit_metrics(&self) -> FitMetrics {
        self.metrics
    }

    /// Predictions on the transformed estimation sample, used in tests.
    pub fn transformed_fitted(&self) -> DVector<f64> {
        &self.design * &self.coefficients
    }
}

/// Rows of the estimation sample after listwise deletion.
struct Sample {
    y: DVector<f64>,
    x: DMatrix<f64>,
    names: Vec<String>,
    entity: Vec<usize>,
    rows: Vec<usize>,
    n_entities: usize,
}

fn build_sample(spec: &ModelSpec, ds: &PanelDataset) -> Result<Sample> {
    let unknown = std::iter::once(&spec.dependent)
        .chain(&spec.regressors)
        .chain(&spec.controls)
        .find(|c| !ds.has_column(c));
    if let Some(name) = unknown {
        return Err(Error::UnknownVariable(name.clone()));
    }
    let problems = spec.violations(ds);
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems.join("; ")));
    }
    let explanatory = spec.explanatory();
    let mut needed = vec![spec.dependent.clone()];
    needed.extend(explanatory.iter().cloned());
    let rows = ds.complete_rows(&needed)?;
    let n = rows.len();

    let mut names = explanatory.clone();
    let mut cols: Vec<Vec<f64>> = explanatory
        .iter()
        .map(|c| {
            let v = ds.values(c).expect("validated");
            rows.iter().map(|&r| v[r].expect("complete")).collect()
        })
        .collect();
    if spec.include_time_dummies {
        let mut years: Vec<i32> = rows.iter().map(|&r| ds.year(r)).collect();
        years.sort_unstable();
        years.dedup();
        for &yr in years.iter().skip(1) {
            names.push(format!("year_{yr}"));
            cols.push(rows.iter().map(|&r| f64::from(u8::from(ds.year(r) == yr))).collect());
        }
    }
    let yv = ds.values(&spec.dependent)?;
    let y = DVector::from_iterator(n, rows.iter().map(|&r| yv[r].expect("complete")));
    let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);

    // Re-index entities compactly over the sample.
    let mut map = BTreeMap::new();
    let entity: Vec<usize> = rows
        .iter()
        .map(|&r| {
            let next = map.len();
            *map.entry(ds.entity_index(r)).or_insert(next)
        })
        .collect();
    Ok(Sample {
        y,
        x,
        names,
        entity,
        rows,
        n_entities: map.len(),
    })
}

fn group_means(values: &DMatrix<f64>, entity: &[usize], g: usize) -> (DMatrix<f64>, Vec<usize>) {
    let mut sums = DMatrix::zeros(g, values.ncols());
    let mut counts = vec![0usize; g];
    for (r, &e) in entity.iter().enumerate() {
        counts[e] += 1;
        for j in 0..values.ncols() {
            sums[(e, j)] += values[(r, j)];
        }
    }
    for e in 0..g {
        for j in 0..values.ncols() {
            sums[(e, j)] /= counts[e] as f64;
        }
    }
    (sums, counts)
}

fn quasi_demean(values: &DMatrix<f64>, entity: &[usize], g: usize, theta: &[f64]) -> DMatrix<f64> {
    let (means, _) = group_means(values, entity, g);
    DMatrix::from_fn(values.nrows(), values.ncols(), |r, j| {
        values[(r, j)] - theta[entity[r]] * means[(entity[r], j)]
    })
}

struct Ols {
    b: DVector<f64>,
    resid: DVector<f64>,
    xtx_inv: DMatrix<f64>,
    rss: f64,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<Ols> {
    if let Some(set) = linalg::collinear_set(x, names) {
        return Err(Error::RankDeficient(set));
    }
    let xtx_inv = linalg::spd_inverse(&(x.transpose() * x))
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let b = &xtx_inv * (x.transpose() * y);
    let resid = y - x * &b;
    let rss = resid.norm_squared();
    Ok(Ols {
        b,
        resid,
        xtx_inv,
        rss,
    })
}

fn centered_tss(y: &DVector<f64>) -> f64 {
    let m = y.mean();
    y.iter().map(|v| (v - m).powi(2)).sum()
}

fn with_const(x: &DMatrix<f64>, names: &[String], value: impl Fn(usize) -> f64) -> (DMatrix<f64>, Vec<String>) {
    let mut x = x.clone().insert_column(x.ncols(), 0.0);
    let last = x.ncols() - 1;
    for r in 0..x.nrows() {
        x[(r, last)] = value(r);
    }
    let mut names = names.to_vec();
    names.push(CONST_NAME.to_owned());
    (x, names)
}

/// Fits a static panel regression under listwise deletion.
///
/// ```
/// use panelkit::dataset::PanelDataset;
/// use panelkit::linear::{fit, Effects, ModelSpec};
///
/// // y = 2x + entity effect, no noise
/// let mut b = PanelDataset::builder(["y", "x"]);
/// for (e, alpha) in [("A", 1.0), ("B", -3.0), ("C", 0.5)] {
///     for t in 0..4 {
///         let x = (t * t) as f64 + alpha;
///         b = b.row(e, 2000 + t, [2.0 * x + alpha, x]);
///     }
/// }
/// let ds = b.build().unwrap();
/// let fe = fit(&ModelSpec::new("y", &["x"], Effects::Fixed), &ds).unwrap();
/// assert!((fe.coefficient("x").unwrap() - 2.0).abs() < 1e-10);
/// ```
pub fn fit(spec: &ModelSpec, ds: &PanelDataset) -> Result<LinearFit> {
    let s = build_sample(spec, ds)?;
    let n = s.y.len();
    let g = s.n_entities;
    let k_expl = s.x.ncols();

    let (design, names, yt, ols_fit, df_residual, k_slopes, components) = match spec.effects {
        Effects::Pooled => {
            let (x, names) = with_const(&s.x, &s.names, |_| 1.0);
            let params = x.ncols();
            ensure_obs(n, params)?;
            let o = ols(&x, &s.y, &names)?;
            (x, names, s.y.clone(), o, n - params, k_expl, None)
        }
        Effects::Fixed => {
            let theta = vec![1.0; g];
            let xw = quasi_demean(&s.x, &s.entity, g, &theta);
            let ym = DMatrix::from_column_slice(n, 1, s.y.as_slice());
            let yw = quasi_demean(&ym, &s.entity, g, &theta).column(0).into_owned();
            ensure_obs(n, g + k_expl)?;
            let o = ols(&xw, &yw, &s.names)?;
            (xw, s.names.clone(), yw, o, n - g - k_expl, k_expl, None)
        }
        Effects::Random => {
            let (x, names, yt, o, comps) = random_effects(&s)?;
            let params = x.ncols();
            (x, names, yt, o, n - params, k_expl, Some(comps))
        }
    };

    let s2 = ols_fit.rss / df_residual as f64;
    let classical = &ols_fit.xtx_inv * s2;
    let metrics = FitMetrics::from_sums(ols_fit.rss, centered_tss(&yt), n, k_slopes);
    let residuals = s
        .rows
        .iter()
        .zip(ols_fit.resid.iter())
        .map(|(&r, &u)| Residual {
            entity: ds.entity(r).to_owned(),
            year: ds.year(r),
            value: u,
        })
        .collect();

    Ok(LinearFit {
        spec: spec.clone(),
        names,
        coefficients: ols_fit.b,
        covariance: classical.clone(),
        covariance_method: CovarianceMethod::Classical,
        n_obs: n,
        n_entities: g,
        df_residual,
        residuals,
        metrics,
        variance_components: components,
        classical_covariance: classical,
        design,
        resid: ols_fit.resid,
        clusters: s.entity,
    })
}

fn ensure_obs(n: usize, params: usize) -> Result<()> {
    if n <= params {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {params} parameters"
        )));
    }
    Ok(())
}

/// Swamy-Arora feasible GLS.
fn random_effects(
    s: &Sample,
) -> Result<(DMatrix<f64>, Vec<String>, DVector<f64>, Ols, VarianceComponents)> {
    let n = s.y.len();
    let g = s.n_entities;
    let k = s.x.ncols();
    ensure_obs(n, g + k)?;

    // Within regression for the idiosyncratic variance.
    let ones = vec![1.0; g];
    let xw = quasi_demean(&s.x, &s.entity, g, &ones);
    let ym = DMatrix::from_column_slice(n, 1, s.y.as_slice());
    let yw = quasi_demean(&ym, &s.entity, g, &ones).column(0).into_owned();
    let within = ols(&xw, &yw, &s.names)?;
    let sigma2_e = within.rss / (n - g - k) as f64;

    // Between regression on entity means (time dummies excluded: their means
    // are constant in balanced panels).
    let (xbar, counts) = group_means(&s.x, &s.entity, g);
    let (ybar, _) = group_means(&ym, &s.entity, g);
    let between_cols: Vec<usize> = (0..k).filter(|&j| !s.names[j].starts_with("year_")).collect();
    let xb = xbar.select_columns(&between_cols);
    let xb = xb.clone().insert_column(xb.ncols(), 1.0);
    let kb = xb.ncols();
    if g <= kb {
        return Err(Error::InsufficientData(format!(
            "random effects need more than {kb} entities, found {g}"
        )));
    }
    let yb = ybar.column(0).into_owned();
    let coef = linalg::least_squares(&xb, &yb)
        .ok_or_else(|| Error::Singular("between regression".into()))?;
    let rss_b = (&yb - &xb * coef).norm_squared();
    let sigma2_b = rss_b / (g - kb) as f64;
    let t_harmonic = g as f64 / counts.iter().map(|&c| 1.0 / c as f64).sum::<f64>();
    let sigma2_u = (sigma2_b - sigma2_e / t_harmonic).max(0.0);

    let theta: Vec<f64> = counts
        .iter()
        .map(|&t| 1.0 - (sigma2_e / (t as f64 * sigma2_u + sigma2_e)).sqrt())
        .collect();
    let xq = quasi_demean(&s.x, &s.entity, g, &theta);
    let yq = quasi_demean(&ym, &s.entity, g, &theta).column(0).into_owned();
    let (xq, names) = with_const(&xq, &s.names, |r| 1.0 - theta[s.entity[r]]);
    let o = ols(&xq, &yq, &names)?;
    Ok((
        xq,
        names,
        yq,
        o,
        VarianceComponents {
            sigma2_idiosyncratic: sigma2_e,
            sigma2_entity: sigma2_u,
        },
    ))
}

/// Hausman specification test of fixed against random effects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausmanTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub preferred: Effects,
    /// The covariance difference had negative eigenvalues; a pseudo-inverse
    /// was used.
    pub nonpsd: bool,
}

/// `H = d' (V_FE - V_RE)^+ d` over common slopes, using classical covariances.
pub fn hausman(fe: &LinearFit, re: &LinearFit) -> Result<HausmanTest> {
    let common: Vec<&str> = fe
        .slope_names()
        .into_iter()
        .filter(|n| re.index(n).is_some())
        .collect();
    if common.is_empty() {
        return Err(Error::InvalidConfig("no common slope coefficients".into()));
    }
    let fi: Vec<usize> = common.iter().map(|n| fe.index(n).unwrap()).collect();
    let ri: Vec<usize> = common.iter().map(|n| re.index(n).unwrap()).collect();
    let d = linalg::select(&fe.coefficients, &fi) - linalg::select(&re.coefficients, &ri);
    let vd = linalg::select_block(&fe.classical_covariance, &fi)
        - linalg::select_block(&re.classical_covariance, &ri);
    let (pinv, rank, nonpsd) = linalg::symmetric_pinv(&vd);
    let statistic = if d.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        (d.transpose() * pinv * &d)[(0, 0)]
    };
    let df = rank.max(1);
    let p_value = stats::chi_square_sf(statistic, df as f64);
    Ok(HausmanTest {
        statistic,
        df,
        p_value,
        preferred: if p_value < 0.05 {
            Effects::Fixed
        } else {
            Effects::Random
        },
        nonpsd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy() -> PanelDataset {
        let mut b = PanelDataset::builder(["y", "x", "z"]);
        let data = [
            ("A", [(1.0, 0.5, 2.0), (2.5, 1.0, 1.0), (2.0, 1.5, 3.0), (4.0, 2.5, 0.0)]),
            ("B", [(0.0, -1.0, 1.0), (1.5, 0.0, 2.0), (1.0, 0.5, 2.5), (3.0, 1.0, 1.5)]),
            ("C", [(5.0, 2.0, 0.5), (4.5, 2.5, 1.0), (6.5, 3.0, 2.0), (7.0, 4.0, 1.0)]),
        ];
        for (e, rows) in data {
            for (t, (y, x, z)) in rows.into_iter().enumerate() {
                b = b.row(e, 2000 + t as i32, [y, x, z]);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn fixed_effects_equals_dummy_lsdv() {
        let ds = toy();
        let fe = fit(&ModelSpec::new("y", &["x", "z"], Effects::Fixed), &ds).unwrap();
        // LSDV oracle: OLS on [x, z, D_A, D_B, D_C].
        let n = ds.n_rows();
        let x = DMatrix::from_fn(n, 5, |r, j| match j {
            0 => ds.values("x").unwrap()[r].unwrap(),
            1 => ds.values("z").unwrap()[r].unwrap(),
            e => f64::from(u8::from(ds.entity_index(r) == e - 2)),
        });
        let y = DVector::from_iterator(n, ds.values("y").unwrap().iter().map(|v| v.unwrap()));
        let b = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y;
        assert_abs_diff_eq!(fe.coefficient("x").unwrap(), b[0], epsilon = 1e-10);
        assert_abs_diff_eq!(fe.coefficient("z").unwrap(), b[1], epsilon = 1e-10);
        assert_eq!(fe.df_residual, n - 3 - 2);
        // Same residual variance as LSDV, so the same classical SEs.
        let resid = &y - &x * &b;
        let s2 = resid.norm_squared() / (n - 5) as f64;
        let v = (x.transpose() * &x).try_inverse().unwrap() * s2;
        assert_abs_diff_eq!(fe.std_error("x").unwrap(), v[(0, 0)].sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let mut b = PanelDataset::builder(["y", "x", "w"]);
        for t in 0..5 {
            let x = t as f64;
            b = b.row("A", 2000 + t, [x + 1.0, x, 2.0 * x]);
            b = b.row("B", 2000 + t, [x * x, x + 1.0, 2.0 * x + 2.0]);
        }
        let ds = b.build().unwrap();
        let err = fit(&ModelSpec::new("y", &["x", "w"], Effects::Pooled), &ds).unwrap_err();
        match err {
            Error::RankDeficient(cols) => assert_eq!(cols, ["w", "x"]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn too_few_observations() {
        let ds = PanelDataset::builder(["y", "x"])
            .row("A", 1, [1.0, 2.0])
            .row("A", 2, [2.0, 1.0])
            .build()
            .unwrap();
        let err = fit(&ModelSpec::new("y", &["x"], Effects::Pooled), &ds).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn spec_violations_are_collected() {
        let ds = toy();
        let mut spec = ModelSpec::new("y", &["y", "q", "x", "x"], Effects::Pooled);
        spec.controls.push("r".into());
        let v = spec.violations(&ds);
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn time_dummies_omit_first_year() {
        let ds = toy();
        let spec = ModelSpec::new("y", &["x"], Effects::Fixed).with_time_dummies(true);
        let fe = fit(&spec, &ds).unwrap();
        assert_eq!(fe.names, ["x", "year_2001", "year_2002", "year_2003"]);
    }

    #[test]
    fn metrics_formulae() {
        // y = [1,2,3], yhat = [1,2,2]: RSS = 1, TSS = 2
        let m = FitMetrics::from_sums(1.0, 2.0, 3, 1);
        assert_eq!(m.r_squared, Some(0.5));
        assert_eq!(m.adj_r_squared, Some(0.0));
        let perfect = FitMetrics::from_sums(0.0, 2.0, 10, 2);
        assert_eq!(perfect.r_squared, Some(1.0));
        assert_eq!(FitMetrics::from_sums(0.0, 0.0, 10, 2).r_squared, None);
        // R2 = 0.5, n = 102, k = 1 -> F = 0.5 / (0.5 / 100) = 100
        let m = FitMetrics::from_sums(50.0, 100.0, 102, 1);
        assert_abs_diff_eq!(m.f_statistic.unwrap(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn single_observation_clusters_give_hc0() {
        let mut b = PanelDataset::builder(["y", "x"]);
        for i in 0..12 {
            let x = (i as f64 * 0.7).sin() * 3.0;
            b = b.row(&format!("E{i:02}"), 2000, [1.0 + 0.5 * x + (i % 3) as f64 * x * 0.2, x]);
        }
        let ds = b.build().unwrap();
        let f = fit(&ModelSpec::new("y", &["x"], Effects::Pooled), &ds).unwrap();
        let rob = f.cluster_robust(ClusterCorrection::None).unwrap();
        // White HC0 oracle.
        let x = &f.design;
        let xtx_inv = (x.transpose() * x).try_inverse().unwrap();
        let mut meat = DMatrix::zeros(2, 2);
        for r in 0..x.nrows() {
            let xi = x.row(r).transpose();
            meat += &xi * xi.transpose() * f.resid[r].powi(2);
        }
        let hc0 = &xtx_inv * meat * &xtx_inv;
        assert!((&rob.covariance - &hc0).amax() < 1e-12);
        let corrected = f.cluster_robust(ClusterCorrection::SmallSample).unwrap();
        let factor = 12.0 / 11.0 * 11.0 / 10.0;
        assert!((&corrected.covariance - hc0 * factor).amax() < 1e-12);
    }

    #[test]
    fn single_entity_cannot_cluster() {
        let mut b = PanelDataset::builder(["y", "x"]);
        for t in 0..6 {
            b = b.row("A", 2000 + t, [t as f64 * 1.5 + (t % 2) as f64, t as f64]);
        }
        let f = fit(&ModelSpec::new("y", &["x"], Effects::Pooled), &b.build().unwrap()).unwrap();
        assert!(f.cluster_robust(ClusterCorrection::SmallSample).is_err());
    }

    #[test]
    fn hausman_identical_fits() {
        let ds = toy();
        let fe = fit(&ModelSpec::new("y", &["x", "z"], Effects::Fixed), &ds).unwrap();
        let h = hausman(&fe, &fe).unwrap();
        assert_eq!(h.statistic, 0.0);
        assert_eq!(h.p_value, 1.0);
        assert_eq!(h.preferred, Effects::Random);
    }

    #[test]
    fn random_effects_runs() {
        let ds = toy();
        let re = fit(&ModelSpec::new("y", &["x"], Effects::Random), &ds).unwrap();
        assert_eq!(re.names, ["x", "const"]);
        let comps = re.variance_components.unwrap();
        assert!(comps.sigma2_idiosyncratic > 0.0 && comps.sigma2_entity >= 0.0);
    }
}
