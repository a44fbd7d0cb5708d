//! One-step System GMM for dynamic panels.
//!
//! Each entity contributes a block of first-differenced equations,
//! instrumented by lagged levels, stacked on a block of level equations,
//! instrumented by lagged first differences. The one-step weight is
//! `(sum_i Z_i' H Z_i)^-1`, where `H` has 2 on the diagonal and -1 between
//! adjacent years in the differenced block and is the identity in the level
//! block.
//!
//! Exogenous regressors, time dummies and the constant instrument
//! themselves.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::inference::{self, CoefTest, Reference, WaldTest};
use crate::linalg;
use crate::linear::CONST_NAME;
use crate::stats;

/// Inclusive range of instrument lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagRange {
    pub min_lag: u32,
    pub max_lag: u32,
}

impl Default for LagRange {
    fn default() -> Self {
        LagRange {
            min_lag: 2,
            max_lag: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Treatment {
    /// Strictly exogenous: the regressor instruments itself.
    Exogenous,
    /// Instrumented GMM-style like the lagged dependent variable.
    Endogenous { lags: LagRange },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmRegressor {
    pub name: String,
    pub treatment: Treatment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub dependent: String,
    pub regressors: Vec<GmmRegressor>,
    /// Lags of the dependent variable used as instruments in the
    /// differenced equations.
    #[serde(default)]
    pub dependent_lags: LagRange,
    #[serde(default)]
    pub include_time_dummies: bool,
    /// One instrument column per lag distance instead of per lag and period.
    #[serde(default = "yes")]
    pub collapse: bool,
    /// Drops the level equations (Arellano-Bond difference GMM). Only used
    /// to cross-check the system estimator.
    #[doc(hidden)]
    #[serde(skip)]
    pub difference_only: bool,
}

fn yes() -> bool {
    true
}

impl GmmSpec {
    /// All regressors exogenous, default lags, collapsed instruments.
    pub fn new<S: Into<String>>(dependent: S, exogenous: &[&str]) -> Self {
        GmmSpec {
            dependent: dependent.into(),
            regressors: exogenous
                .iter()
                .map(|n| GmmRegressor {
                    name: (*n).to_owned(),
                    treatment: Treatment::Exogenous,
                })
                .collect(),
            dependent_lags: LagRange::default(),
            include_time_dummies: false,
            collapse: true,
            difference_only: false,
        }
    }

    pub fn lagged_dependent_name(&self) -> String {
        crate::dataset::lag_name(&self.dependent, 1)
    }

    pub fn violations(&self, ds: &PanelDataset) -> Vec<String> {
        let mut out = Vec::new();
        for name in std::iter::once(&self.dependent).chain(self.regressors.iter().map(|r| &r.name)) {
            if !ds.has_column(name) {
                out.push(format!("unknown column `{name}`"));
            }
        }
        let check = |out: &mut Vec<String>, what: &str, l: &LagRange| {
            if l.min_lag < 2 {
                out.push(format!("{what}: min_lag must be at least 2"));
            }
            if l.max_lag < l.min_lag {
                out.push(format!("{what}: max_lag below min_lag"));
            }
        };
        check(&mut out, &self.dependent, &self.dependent_lags);
        for r in &self.regressors {
            if let Treatment::Endogenous { lags } = &r.treatment {
                check(&mut out, &r.name, lags);
            }
            if r.name == self.dependent {
                out.push(format!("`{}` is both dependent and regressor", r.name));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Differenced,
    Level,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmResidual {
    pub entity: String,
    pub year: i32,
    pub equation: Equation,
    pub value: f64,
}

/// Test of over-identifying restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverIdTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Arellano-Bond test for serial correlation of the differenced residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArTest {
    pub order: usize,
    pub z: f64,
    pub p_value: f64,
}

/// Equations an entity contributed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityUsage {
    pub entity: String,
    pub differenced: usize,
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub spec: GmmSpec,
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    /// Robust one-step sandwich covariance.
    pub covariance: DMatrix<f64>,
    pub instrument_names: Vec<String>,
    pub instrument_count: usize,
    pub parameter_count: usize,
    pub n_obs: usize,
    pub n_entities: usize,
    pub residuals: Vec<GmmResidual>,
    /// `None` when the model is just identified.
    pub sargan: Option<OverIdTest>,
    /// Robust (Hansen J) counterpart of the Sargan statistic.
    pub hansen: Option<OverIdTest>,
    pub ar_tests: BTreeMap<usize, Option<ArTest>>,
    /// Joint test of the slope coefficients (not the constant or year
    /// dummies); `None` when their covariance block is singular.
    pub wald: Option<WaldTest>,
    /// `|rho| >= 1` for the lagged dependent variable.
    pub unstable: bool,
    pub usage: Vec<EntityUsage>,
    pub excluded_entities: Vec<String>,
    pub warnings: Vec<String>,
    blocks: Vec<EntityBlock>,
    bread: DMatrix<f64>,
}

impl GmmFit {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    /// Coefficient on the lagged dependent variable.
    pub fn persistence(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn z_tests(&self) -> Vec<CoefTest> {
        inference::coef_tests(&self.names, &self.coefficients, &self.covariance, Reference::Normal)
    }

    pub fn wald_joint<S: AsRef<str>>(&self, subset: &[S]) -> Result<WaldTest> {
        inference::wald(&self.names, &self.coefficients, &self.covariance, subset)
    }

    /// Sargan statistic, or `None` (inapplicable) when just identified.
    pub fn sargan_test(&self) -> Option<OverIdTest> {
        self.sargan
    }

    /// Arellano-Bond AR(`order`) test; `None` when no residual pairs overlap.
    pub fn ar_test(&self, order: usize) -> Option<ArTest> {
        if let Some(t) = self.ar_tests.get(&order) {
            return *t;
        }
        ar_statistic(self, order)
    }
}

/// Equations and instruments of one entity.
#[derive(Debug, Clone)]
struct EntityBlock {
    entity: String,
    /// Years of the differenced rows, then of the level rows.
    years: Vec<i32>,
    n_diff: usize,
    x: DMatrix<f64>,
    y: DVector<f64>,
    z: DMatrix<f64>,
    h: DMatrix<f64>,
    resid: DVector<f64>,
}

/// Instrument column identity. Ordering fixes column order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum InstrumentKey {
    /// GMM-style instrument: variable slot, equation, lag, optional period.
    Gmm(usize, u8, u32, Option<i32>),
    /// Regressor column instrumenting itself.
    Own(usize),
}

struct Series<'a> {
    values: &'a [Option<f64>],
}

/// Fits one-step System GMM.
pub fn fit_system_gmm(spec: &GmmSpec, ds: &PanelDataset) -> Result<GmmFit> {
    let problems = spec.violations(ds);
    if !problems.is_empty() {
        if let Some(p) = problems.iter().find(|p| p.starts_with("unknown column")) {
            let name = p.trim_start_matches("unknown column `").trim_end_matches('`');
            return Err(Error::UnknownVariable(name.to_owned()));
        }
        return Err(Error::InvalidConfig(problems.join("; ")));
    }

    let y_series = Series {
        values: ds.values(&spec.dependent)?,
    };
    let x_series: Vec<Series> = spec
        .regressors
        .iter()
        .map(|r| ds.values(&r.name).map(|values| Series { values }))
        .collect::<Result<_>>()?;
    let value = |s: &Series, entity: usize, year: i32| -> Option<f64> {
        ds.row_of(&ds.entities()[entity], year).and_then(|r| s.values[r])
    };

    // Pass 1: which equations exist per entity.
    struct RawEntity {
        entity: usize,
        diff_years: Vec<i32>,
        level_years: Vec<i32>,
    }
    let mut raw = Vec::new();
    let mut usage = Vec::new();
    let mut excluded = Vec::new();
    for e in 0..ds.entities().len() {
        let years: Vec<i32> = (0..ds.n_rows())
            .filter(|&r| ds.entity_index(r) == e)
            .map(|r| ds.year(r))
            .collect();
        let complete = |t: i32| {
            value(&y_series, e, t).is_some() && x_series.iter().all(|s| value(s, e, t).is_some())
        };
        let level_years: Vec<i32> = years
            .iter()
            .copied()
            .filter(|&t| complete(t) && value(&y_series, e, t - 1).is_some())
            .collect();
        let diff_years: Vec<i32> = level_years
            .iter()
            .copied()
            .filter(|&t| complete(t - 1) && value(&y_series, e, t - 2).is_some())
            .collect();
        let level_years = if spec.difference_only {
            Vec::new()
        } else {
            level_years
        };
        usage.push(EntityUsage {
            entity: ds.entities()[e].clone(),
            differenced: diff_years.len(),
            level: level_years.len(),
        });
        if diff_years.is_empty() {
            excluded.push(ds.entities()[e].clone());
            continue;
        }
        raw.push(RawEntity {
            entity: e,
            diff_years,
            level_years,
        });
    }
    if raw.len() < 2 {
        let detail: Vec<String> = usage
            .iter()
            .map(|u| format!("{}: {} differenced, {} level", u.entity, u.differenced, u.level))
            .collect();
        return Err(Error::InsufficientData(format!(
            "System GMM needs at least two entities with three consecutive usable periods ({})",
            detail.join("; ")
        )));
    }

    // Regressor layout.
    let dummy_years: Vec<i32> = if spec.include_time_dummies {
        let mut ys: Vec<i32> = raw
            .iter()
            .flat_map(|r| r.level_years.iter().chain(&r.diff_years).copied())
            .collect();
        ys.sort_unstable();
        ys.dedup();
        ys.into_iter().skip(1).collect()
    } else {
        Vec::new()
    };
    let mut names = vec![spec.lagged_dependent_name()];
    names.extend(spec.regressors.iter().map(|r| r.name.clone()));
    names.extend(dummy_years.iter().map(|y| format!("year_{y}")));
    if !spec.difference_only {
        names.push(CONST_NAME.to_owned());
    }
    let k = names.len();
    let n_x = spec.regressors.len();
    let dummy_col = |j: usize| 1 + n_x + j;
    let has_const = !spec.difference_only;

    // Per-entity regressor rows (level values; differenced rows derived).
    let regressor_row = |e: usize, t: i32| -> DVector<f64> {
        let mut v = DVector::zeros(k);
        v[0] = value(&y_series, e, t - 1).unwrap();
        for (j, s) in x_series.iter().enumerate() {
            v[1 + j] = value(s, e, t).unwrap();
        }
        for (j, dy) in dummy_years.iter().enumerate() {
            v[dummy_col(j)] = f64::from(u8::from(*dy == t));
        }
        if has_const {
            v[k - 1] = 1.0;
        }
        v
    };

    // Instrument slots: 0 = dependent, 1 + j = endogenous regressor j.
    let mut gmm_vars: Vec<(usize, &Series, LagRange)> = vec![(0, &y_series, spec.dependent_lags)];
    for (j, r) in spec.regressors.iter().enumerate() {
        if let Treatment::Endogenous { lags } = r.treatment {
            gmm_vars.push((1 + j, &x_series[j], lags));
        }
    }
    let own_cols: Vec<usize> = (0..k)
        .filter(|&c| {
            if c == 0 {
                return false;
            }
            if (1..=n_x).contains(&c) {
                return spec.regressors[c - 1].treatment == Treatment::Exogenous;
            }
            true
        })
        .collect();

    // Pass 2: instrument entries per entity as sparse (row, key, value).
    struct Built {
        entity: usize,
        years: Vec<i32>,
        n_diff: usize,
        x: DMatrix<f64>,
        y: DVector<f64>,
        entries: Vec<(usize, InstrumentKey, f64)>,
    }
    let mut built = Vec::with_capacity(raw.len());
    let mut keys = std::collections::BTreeSet::new();
    for r in &raw {
        let e = r.entity;
        let n_d = r.diff_years.len();
        let n_rows = n_d + r.level_years.len();
        let mut x = DMatrix::zeros(n_rows, k);
        let mut y = DVector::zeros(n_rows);
        let mut entries = Vec::new();
        let mut push = |row: usize, key: InstrumentKey, v: f64| {
            if v != 0.0 {
                keys.insert(key.clone());
                entries.push((row, key, v));
            }
        };
        for (i, &t) in r.diff_years.iter().enumerate() {
            let dx = regressor_row(e, t) - regressor_row(e, t - 1);
            x.set_row(i, &dx.transpose());
            y[i] = value(&y_series, e, t).unwrap() - value(&y_series, e, t - 1).unwrap();
            for &(slot, s, lags) in &gmm_vars {
                for l in lags.min_lag..=lags.max_lag {
                    if let Some(v) = value(s, e, t - l as i32) {
                        let period = (!spec.collapse).then_some(t);
                        push(i, InstrumentKey::Gmm(slot, 0, l, period), v);
                    }
                }
            }
            for &c in &own_cols {
                push(i, InstrumentKey::Own(c), dx[c]);
            }
        }
        for (i, &t) in r.level_years.iter().enumerate() {
            let row = n_d + i;
            let lv = regressor_row(e, t);
            x.set_row(row, &lv.transpose());
            y[row] = value(&y_series, e, t).unwrap();
            for &(slot, s, lags) in &gmm_vars {
                let l = lags.min_lag - 1;
                let a = value(s, e, t - l as i32);
                let b = value(s, e, t - l as i32 - 1);
                if let (Some(a), Some(b)) = (a, b) {
                    let period = (!spec.collapse).then_some(t);
                    push(row, InstrumentKey::Gmm(slot, 1, l, period), a - b);
                }
            }
            for &c in &own_cols {
                push(row, InstrumentKey::Own(c), lv[c]);
            }
        }
        let mut years = r.diff_years.clone();
        years.extend(&r.level_years);
        built.push(Built {
            entity: e,
            years,
            n_diff: n_d,
            x,
            y,
            entries,
        });
    }
    let keys: Vec<InstrumentKey> = keys.into_iter().collect();
    let col_of: BTreeMap<&InstrumentKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let slot_name = |slot: usize| -> String {
        if slot == 0 {
            spec.dependent.clone()
        } else {
            spec.regressors[slot - 1].name.clone()
        }
    };
    let instrument_names: Vec<String> = keys
        .iter()
        .map(|key| match key {
            InstrumentKey::Gmm(slot, 0, l, p) => format!(
                "L{l}.{}{}",
                slot_name(*slot),
                p.map(|p| format!("@{p}")).unwrap_or_default()
            ),
            InstrumentKey::Gmm(slot, _, l, p) => format!(
                "D.L{}.{}{}",
                l,
                slot_name(*slot),
                p.map(|p| format!("@{p}")).unwrap_or_default()
            ),
            InstrumentKey::Own(c) => names[*c].clone(),
        })
        .collect();
    let n_inst = keys.len();
    if n_inst < k {
        return Err(Error::InsufficientData(format!(
            "{n_inst} instruments for {k} parameters (under-identified)"
        )));
    }

    let mut blocks: Vec<EntityBlock> = built
        .into_iter()
        .map(|b| {
            let mut z = DMatrix::zeros(b.years.len(), n_inst);
            for (row, key, v) in &b.entries {
                z[(*row, col_of[key])] = *v;
            }
            let n = b.years.len();
            let h = DMatrix::from_fn(n, n, |i, j| {
                if i < b.n_diff && j < b.n_diff {
                    if i == j {
                        2.0
                    } else if (b.years[i] - b.years[j]).abs() == 1 {
                        -1.0
                    } else {
                        0.0
                    }
                } else if i == j {
                    1.0
                } else {
                    0.0
                }
            });
            EntityBlock {
                entity: ds.entities()[b.entity].clone(),
                years: b.years,
                n_diff: b.n_diff,
                x: b.x,
                y: b.y,
                z,
                h,
                resid: DVector::zeros(0),
            }
        })
        .collect();

    let mut zhz = DMatrix::<f64>::zeros(n_inst, n_inst);
    let mut zx = DMatrix::<f64>::zeros(n_inst, k);
    let mut zy = DVector::<f64>::zeros(n_inst);
    for b in &blocks {
        let zt = b.z.transpose();
        zhz += &zt * &b.h * &b.z;
        zx += &zt * &b.x;
        zy += &zt * &b.y;
    }
    let weight = linalg::spd_inverse(&zhz).ok_or_else(|| {
        let deficient = deficient_instruments(&zhz, &instrument_names);
        Error::Singular(format!(
            "instrument moment matrix is singular; deficient instruments: {}",
            deficient.join(", ")
        ))
    })?;
    let m = zx.transpose() * &weight * &zx;
    let m_inv = linalg::spd_inverse(&m).ok_or_else(|| {
        Error::RankDeficient(linalg::collinear_set(&zx, &names).unwrap_or_else(|| names.clone()))
    })?;
    let bread = &m_inv * zx.transpose() * &weight;
    let beta = &bread * &zy;

    let mut score_sum = DVector::<f64>::zeros(n_inst);
    let mut meat = DMatrix::<f64>::zeros(n_inst, n_inst);
    let mut diff_ss = 0.0;
    let mut n_diff_rows = 0;
    for b in &mut blocks {
        b.resid = &b.y - &b.x * &beta;
        let g = b.z.transpose() * &b.resid;
        score_sum += &g;
        meat += &g * g.transpose();
        diff_ss += b.resid.rows(0, b.n_diff).norm_squared();
        n_diff_rows += b.n_diff;
    }
    let covariance = &bread * &meat * bread.transpose();
    let covariance = (&covariance + covariance.transpose()) * 0.5;

    let df = n_inst - k;
    let (sargan, hansen) = if df == 0 {
        (None, None)
    } else {
        let sigma2 = diff_ss / (2.0 * n_diff_rows as f64);
        let s = (score_sum.transpose() * &weight * &score_sum)[(0, 0)] / sigma2;
        let (meat_pinv, _, _) = linalg::symmetric_pinv(&meat);
        let j = (score_sum.transpose() * meat_pinv * &score_sum)[(0, 0)];
        let test = |stat: f64| OverIdTest {
            statistic: stat,
            df,
            p_value: stats::chi_square_sf(stat, df as f64),
        };
        (Some(test(s)), Some(test(j)))
    };

    let residuals = blocks
        .iter()
        .flat_map(|b| {
            b.years.iter().enumerate().map(move |(i, &year)| GmmResidual {
                entity: b.entity.clone(),
                year,
                equation: if i < b.n_diff {
                    Equation::Differenced
                } else {
                    Equation::Level
                },
                value: b.resid[i],
            })
        })
        .collect();

    let mut warnings = Vec::new();
    let n_entities = blocks.len();
    if n_inst >= n_entities {
        warnings.push(format!(
            "instrument proliferation: {n_inst} instruments for {n_entities} entities"
        ));
    }
    let n_obs = if spec.difference_only {
        n_diff_rows
    } else {
        blocks.iter().map(|b| b.years.len() - b.n_diff).sum()
    };
    let mut fit = GmmFit {
        spec: spec.clone(),
        names,
        coefficients: beta,
        covariance,
        instrument_names,
        instrument_count: n_inst,
        parameter_count: k,
        n_obs,
        n_entities,
        residuals,
        sargan,
        hansen,
        ar_tests: BTreeMap::new(),
        wald: None,
        unstable: false,
        usage,
        excluded_entities: excluded,
        warnings,
        blocks,
        bread,
    };
    fit.unstable = fit.persistence().abs() >= 1.0;
    // With many year dummies the cluster-robust covariance of all
    // coefficients is singular whenever parameters outnumber entities.
    let slopes: Vec<String> = std::iter::once(fit.spec.lagged_dependent_name())
        .chain(fit.spec.regressors.iter().map(|r| r.name.clone()))
        .collect();
    fit.wald = fit.wald_joint(&slopes).ok();
    for order in [1, 2] {
        let t = ar_statistic(&fit, order);
        fit.ar_tests.insert(order, t);
    }
    Ok(fit)
}

/// Instruments spanning the null space of a singular moment matrix.
fn deficient_instruments(zhz: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let eig = nalgebra::SymmetricEigen::new(zhz.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = std::collections::BTreeSet::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= scale * 1e-12 {
            let v = eig.eigenvectors.column(i);
            let vmax = v.amax();
            for (j, c) in v.iter().enumerate() {
                if c.abs() > 0.1 * vmax {
                    out.insert(names[j].clone());
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Arellano-Bond m-statistic with the robust one-step variance.
fn ar_statistic(fit: &GmmFit, order: usize) -> Option<ArTest> {
    let k = fit.parameter_count;
    let mut num = 0.0;
    let mut w2 = 0.0;
    let mut lag_x = DVector::<f64>::zeros(k);
    let mut zuw = DVector::<f64>::zeros(fit.instrument_count);
    let mut pairs = 0usize;
    for b in &fit.blocks {
        let mut w = 0.0;
        for i in 0..b.n_diff {
            let t = b.years[i];
            let Some(j) = (0..b.n_diff).find(|&j| b.years[j] == t - order as i32) else {
                continue;
            };
            pairs += 1;
            w += b.resid[j] * b.resid[i];
            lag_x += b.x.row(i).transpose() * b.resid[j];
        }
        num += w;
        w2 += w * w;
        zuw += b.z.transpose() * &b.resid * w;
    }
    if pairs == 0 {
        return None;
    }
    let cross = (lag_x.transpose() * &fit.bread * &zuw)[(0, 0)];
    let quad = (lag_x.transpose() * &fit.covariance * &lag_x)[(0, 0)];
    let var = w2 - 2.0 * cross + quad;
    if var.is_nan() || var <= 0.0 {
        return None;
    }
    let z = num / var.sqrt();
    Some(ArTest {
        order,
        z,
        p_value: stats::normal_two_sided(z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::DynamicPanel;
    use approx::assert_abs_diff_eq;

    fn exact_panel() -> PanelDataset {
        // y_t = 0.5 y_{t-1} + 0.3 x_t + 1, no error term at all.
        let mut b = PanelDataset::builder(["y", "x"]);
        for i in 0..30 {
            let mut y = ((i * 7) % 11) as f64 / 2.0 - 1.0;
            for t in 0..8 {
                let x = ((i * 13 + t * 5) % 17) as f64 / 4.0 - 2.0;
                y = 0.5 * y + 0.3 * x + 1.0;
                b = b.row(&format!("E{i:02}"), 2000 + t, [y, x]);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn exact_dgp_recovered() {
        let fit = fit_system_gmm(&GmmSpec::new("y", &["x"]), &exact_panel()).unwrap();
        assert_abs_diff_eq!(fit.coefficient("y(t-1)").unwrap(), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.coefficient("x").unwrap(), 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.coefficient("const").unwrap(), 1.0, epsilon = 1e-6);
        assert!(!fit.unstable);
    }

    #[test]
    fn instrument_accounting() {
        let ds = DynamicPanel {
            n_entities: 40,
            ..Default::default()
        }
        .generate(5);
        let fit = fit_system_gmm(&GmmSpec::new("y", &["x"]), &ds).unwrap();
        // y lags 2..4 (3) + level D.L1.y (1) + x + const
        assert_eq!(fit.instrument_count, 6);
        assert_eq!(fit.instrument_names.len(), fit.instrument_count);
        assert_eq!(fit.parameter_count, 3);
        assert_eq!(fit.sargan.unwrap().df, 3);
        assert_eq!(fit.n_obs, 40 * 9);

        let mut full = GmmSpec::new("y", &["x"]);
        full.collapse = false;
        let fit = fit_system_gmm(&full, &ds).unwrap();
        assert_eq!(fit.instrument_names.len(), fit.instrument_count);
        assert_eq!(fit.sargan.unwrap().df, fit.instrument_count - fit.parameter_count);
        assert!(fit.instrument_count > 6);
    }

    #[test]
    fn just_identified_sargan_inapplicable() {
        let ds = DynamicPanel {
            n_entities: 40,
            ..Default::default()
        }
        .generate(8);
        // The system estimator always over-identifies (two moments per
        // GMM-style variable), so use the differenced equations alone:
        // L2.y and D.x for rho and beta.
        let mut spec = GmmSpec::new("y", &["x"]);
        spec.dependent_lags = LagRange { min_lag: 2, max_lag: 2 };
        spec.difference_only = true;
        let fit = fit_system_gmm(&spec, &ds).unwrap();
        assert_eq!(fit.instrument_count, 2);
        assert_eq!(fit.parameter_count, 2);
        assert!(fit.sargan_test().is_none());
        assert!(fit.hansen.is_none());
    }

    #[test]
    fn singleton_wald_is_z_squared() {
        let ds = DynamicPanel {
            n_entities: 60,
            ..Default::default()
        }
        .generate(2);
        let fit = fit_system_gmm(&GmmSpec::new("y", &["x"]), &ds).unwrap();
        let z = fit.z_tests()[1].statistic.unwrap();
        let w = fit.wald_joint(&["x"]).unwrap();
        assert_abs_diff_eq!(w.statistic, z * z, epsilon = 1e-9);
        assert_eq!(w.df, 1);
    }

    #[test]
    fn too_few_periods() {
        let ds = PanelDataset::builder(["y", "x"])
            .row("A", 2000, [1.0, 0.0])
            .row("A", 2001, [2.0, 1.0])
            .row("B", 2000, [1.0, 0.0])
            .build()
            .unwrap();
        let err = fit_system_gmm(&GmmSpec::new("y", &["x"]), &ds).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("A: 0 differenced, 1 level"), "{msg}");
    }

    #[test]
    fn invalid_lag_range_rejected() {
        let ds = exact_panel();
        let mut spec = GmmSpec::new("y", &["x"]);
        spec.dependent_lags = LagRange { min_lag: 1, max_lag: 0 };
        let v = spec.violations(&ds);
        assert_eq!(v.len(), 2);
        assert!(fit_system_gmm(&spec, &ds).is_err());
    }

    #[test]
    fn gaps_break_differences() {
        // Entity with a gap year contributes no equation spanning it.
        let mut b = PanelDataset::builder(["y", "x"]);
        let full: Vec<i32> = (0..8).collect();
        let panels = [("A", vec![0, 1, 2, 3, 5, 6, 7]), ("B", full.clone()), ("C", full.clone()), ("D", full)];
        for (i, (e, years)) in panels.into_iter().enumerate() {
            for t in years {
                let u = f64::from(t) * 1.3 + i as f64 * 2.1;
                b = b.row(e, 2000 + t, [u.sin() * 2.0 + u.cos(), (u * 0.7).cos()]);
            }
        }
        let fit = fit_system_gmm(&GmmSpec::new("y", &["x"]), &b.build().unwrap()).unwrap();
        let a = fit.usage.iter().find(|u| u.entity == "A").unwrap();
        // level years: 2001-2003, 2006, 2007; differenced: 2002, 2003, 2007
        assert_eq!((a.level, a.differenced), (5, 3));
    }
}
