//! Permutation importance and sequential permutation tests of importance.
//!
//! The test statistic for a variable is its permutation importance (VIMP) in
//! a forest grown on the original data. Under the null the variable carries
//! no information, so the statistic should look like the VIMP obtained after
//! shuffling the variable and regrowing the forest. The permutation p-value
//! is `(d + 1) / (m + 1)`, with `d` the number of the `m` null forests whose
//! VIMP reaches the observed one. Sequential rules stop drawing null forests
//! once the decision is settled.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit_forest, r2_score, Features, Forest, ForestConfig};
use crate::rng;
use crate::stats;

/// Rows on which permutation importance is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSet {
    #[default]
    Training,
    /// Each row is scored only by trees that did not see it.
    OutOfBag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableImportance {
    pub name: String,
    /// Mean drop in R-squared over repeats.
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
    pub repeats: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermImportanceResult {
    pub metric: &'static str,
    pub baseline: f64,
    pub n_repeats: usize,
    pub eval: EvalSet,
    pub variables: Vec<VariableImportance>,
}

impl PermImportanceResult {
    pub fn get(&self, name: &str) -> Option<&VariableImportance> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Variables sorted by decreasing mean importance.
    pub fn ranked(&self) -> Vec<&VariableImportance> {
        let mut v: Vec<_> = self.variables.iter().collect();
        v.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.name.cmp(&b.name)));
        v
    }
}

fn score(forest: &Forest, x: &Features, y: &[f64], eval: EvalSet) -> Result<f64> {
    let r2 = match eval {
        EvalSet::Training => r2_score(y, &forest.predict(x)?),
        EvalSet::OutOfBag => {
            let (t, p): (Vec<f64>, Vec<f64>) = forest
                .oob_predictions(x)?
                .into_iter()
                .zip(y)
                .filter_map(|(p, &t)| p.map(|p| (t, p)))
                .unzip();
            r2_score(&t, &p)
        }
    };
    r2.ok_or_else(|| Error::InsufficientData("R-squared undefined: target has no variance".into()))
}

/// A row permutation: global, or within the groups given.
fn permutation(n: usize, groups: Option<&[usize]>, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    match groups {
        None => perm.shuffle(&mut r),
        Some(g) => {
            let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &k) in g.iter().enumerate() {
                members.entry(k).or_default().push(i);
            }
            for rows in members.values() {
                let mut shuffled = rows.clone();
                shuffled.shuffle(&mut r);
                for (&to, &from) in rows.iter().zip(&shuffled) {
                    perm[to] = from;
                }
            }
        }
    }
    perm
}

fn permuted(x: &Features, j: usize, perm: &[usize]) -> Features {
    let col = x.column(j);
    x.with_column(j, perm.iter().map(|&i| col[i]).collect())
}

fn repeats_for(
    forest: &Forest,
    x: &Features,
    y: &[f64],
    j: usize,
    baseline: f64,
    n_repeats: usize,
    eval: EvalSet,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..n_repeats)
        .map(|r| {
            let perm = permutation(x.n_rows(), None, rng::derive(seed, r as u64));
            Ok(baseline - score(forest, &permuted(x, j, &perm), y, eval)?)
        })
        .collect()
}

/// Drop in R-squared when one column at a time is shuffled, averaged over
/// `n_repeats` shuffles. Shuffles of a variable depend only on `seed` and the
/// variable's name.
pub fn permutation_importance(
    forest: &Forest,
    x: &Features,
    y: &[f64],
    n_repeats: usize,
    eval: EvalSet,
    seed: u64,
) -> Result<PermImportanceResult> {
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be at least 1".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Dimension(format!("{} feature rows, {} targets", x.n_rows(), y.len())));
    }
    let baseline = score(forest, x, y, eval)?;
    let variables = x
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let reps = repeats_for(forest, x, y, j, baseline, n_repeats, eval, rng::derive(seed, rng::name_tag(name)))?;
            Ok(VariableImportance {
                name: name.clone(),
                mean: stats::mean(&reps),
                std: stats::population_std(&reps),
                repeats: reps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PermImportanceResult {
        metric: "r2",
        baseline,
        n_repeats,
        eval,
        variables,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqMethod {
    Sprt,
    Sapt,
    Pval,
    Certain,
    Complete,
}

impl SeqMethod {
    pub const ALL: [SeqMethod; 5] = [
        SeqMethod::Sprt,
        SeqMethod::Sapt,
        SeqMethod::Pval,
        SeqMethod::Certain,
        SeqMethod::Complete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeqMethod::Sprt => "sprt",
            SeqMethod::Sapt => "sapt",
            SeqMethod::Pval => "pval",
            SeqMethod::Certain => "certain",
            SeqMethod::Complete => "complete",
        }
    }
}

impl fmt::Display for SeqMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SeqMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SeqMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown test method {s:?}")))
    }
}

/// How the tested column is shuffled under the null.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMode {
    #[default]
    Global,
    WithinEntity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeqTestConfig {
    pub method: SeqMethod,
    pub m_max: usize,
    pub p0: f64,
    pub p1: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Two-sided error level of the Clopper-Pearson interval (`pval`).
    pub gamma: f64,
    /// Log-likelihood-ratio boundaries for `sapt`; `None` gives
    /// `ln(beta / (1 - alpha))` and its negation.
    pub sapt_lower: Option<f64>,
    pub sapt_upper: Option<f64>,
    /// Trees per forest, observed and permuted alike.
    pub ntree: usize,
    /// Shuffles averaged into each VIMP value.
    pub nperm: usize,
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub eval: EvalSet,
    pub null: NullMode,
    /// At `m_max` without a boundary crossing, decide by `p <= alpha`
    /// instead of reporting `undecided`.
    pub fallback: bool,
}

impl Default for SeqTestConfig {
    fn default() -> Self {
        SeqTestConfig {
            method: SeqMethod::Sprt,
            m_max: 500,
            p0: 0.06,
            p1: 0.04,
            alpha: 0.05,
            beta: 0.2,
            gamma: 0.05,
            sapt_lower: None,
            sapt_upper: None,
            ntree: 100,
            nperm: 1,
            mtry: None,
            min_leaf: 5,
            max_depth: None,
            eval: EvalSet::Training,
            null: NullMode::Global,
            fallback: true,
        }
    }
}

impl SeqTestConfig {
    pub fn with_method(mut self, method: SeqMethod) -> Self {
        self.method = method;
        self
    }

    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        if !(open01(self.alpha) && open01(self.beta)) {
            out.push(format!("alpha and beta must lie in (0, 1), got {} and {}", self.alpha, self.beta));
        }
        if !(0.0 < self.p1 && self.p1 < self.alpha && self.alpha < self.p0 && self.p0 < 1.0) {
            out.push(format!(
                "need 0 < p1 < alpha < p0 < 1, got p1 = {}, alpha = {}, p0 = {}",
                self.p1, self.alpha, self.p0
            ));
        }
        if !open01(self.gamma) {
            out.push(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        let min_m = if self.method == SeqMethod::Complete { 1 } else { 10 };
        if self.m_max < min_m {
            out.push(format!("m_max must be at least {min_m} for {}, got {}", self.method, self.m_max));
        }
        let (lo, hi) = self.sapt_bounds();
        if !(lo < 0.0 && hi > 0.0) {
            out.push(format!("sapt bounds must straddle zero, got ({lo}, {hi})"));
        }
        if self.ntree == 0 {
            out.push("ntree must be at least 1".into());
        }
        if self.nperm == 0 {
            out.push("nperm must be at least 1".into());
        }
        if self.min_leaf == 0 {
            out.push("min_leaf must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }

    pub fn sapt_bounds(&self) -> (f64, f64) {
        let a = (self.beta / (1.0 - self.alpha)).ln();
        (self.sapt_lower.unwrap_or(a), self.sapt_upper.unwrap_or(-a))
    }

    pub fn sprt_bounds(&self) -> (f64, f64) {
        ((self.beta / (1.0 - self.alpha)).ln(), ((1.0 - self.beta) / self.alpha).ln())
    }

    fn forest_config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: self.ntree,
            mtry: self.mtry,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
            seed,
        }
    }

    /// Log-likelihood ratio of `p1` against `p0` after `d` exceedances in
    /// `m` draws.
    pub fn llr(&self, d: usize, m: usize) -> f64 {
        d as f64 * (self.p1 / self.p0).ln() + (m - d) as f64 * ((1.0 - self.p1) / (1.0 - self.p0)).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Significant,
    NotSignificant,
    Undecided,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Significant => "significant",
            Decision::NotSignificant => "not_significant",
            Decision::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingReason {
    /// `complete` ran all permutations.
    Exhausted,
    UpperBoundary,
    LowerBoundary,
    /// `certain`: the full-length outcome can no longer change.
    OutcomeForced,
    IntervalBelowAlpha,
    IntervalAboveAlpha,
    MmaxFallback,
    MmaxUndecided,
}

impl StoppingReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StoppingReason::Exhausted => "exhausted",
            StoppingReason::UpperBoundary => "upper_boundary",
            StoppingReason::LowerBoundary => "lower_boundary",
            StoppingReason::OutcomeForced => "outcome_forced",
            StoppingReason::IntervalBelowAlpha => "interval_below_alpha",
            StoppingReason::IntervalAboveAlpha => "interval_above_alpha",
            StoppingReason::MmaxFallback => "mmax_fallback",
            StoppingReason::MmaxUndecided => "mmax_undecided",
        }
    }
}

/// Result of a stopping rule applied to an exceedance stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeqOutcome {
    pub decision: Decision,
    /// Permutations consumed.
    pub m: usize,
    /// Exceedances among them.
    pub d: usize,
    pub p_estimate: f64,
    pub stopping_reason: StoppingReason,
}

/// Applies `cfg.method` to the exceedance indicators produced by `next`,
/// which is called with permutation numbers `1, 2, ...`.
///
/// ```
/// use panelkit::vimp::{run_sequential, Decision, SeqTestConfig};
///
/// let out = run_sequential(&SeqTestConfig::default(), |_| Ok(false)).unwrap();
/// assert_eq!((out.decision, out.m), (Decision::Significant, 132));
/// ```
pub fn run_sequential(
    cfg: &SeqTestConfig,
    mut next: impl FnMut(usize) -> Result<bool>,
) -> Result<SeqOutcome> {
    cfg.validate()?;
    let m_max = cfg.m_max;
    let p_of = |d: usize, m: usize| (d + 1) as f64 / (m + 1) as f64;
    let certain_c = (cfg.alpha * (m_max + 1) as f64).floor() as usize;
    let (sprt_lo, sprt_hi) = cfg.sprt_bounds();
    let (sapt_lo, sapt_hi) = cfg.sapt_bounds();
    let done = |decision, d, m, reason| SeqOutcome {
        decision,
        m,
        d,
        p_estimate: p_of(d, m),
        stopping_reason: reason,
    };
    let mut d = 0;
    for m in 1..=m_max {
        if next(m)? {
            d += 1;
        }
        let stop = match cfg.method {
            SeqMethod::Complete => None,
            SeqMethod::Certain => {
                if d >= certain_c {
                    Some((Decision::NotSignificant, StoppingReason::OutcomeForced))
                } else if d + (m_max - m) < certain_c {
                    Some((Decision::Significant, StoppingReason::OutcomeForced))
                } else {
                    None
                }
            }
            SeqMethod::Sprt | SeqMethod::Sapt => {
                let (lo, hi) = if cfg.method == SeqMethod::Sprt {
                    (sprt_lo, sprt_hi)
                } else {
                    (sapt_lo, sapt_hi)
                };
                let l = cfg.llr(d, m);
                if l >= hi {
                    Some((Decision::Significant, StoppingReason::UpperBoundary))
                } else if l <= lo {
                    Some((Decision::NotSignificant, StoppingReason::LowerBoundary))
                } else {
                    None
                }
            }
            SeqMethod::Pval => {
                let (lo, hi) = stats::clopper_pearson(d, m, cfg.gamma);
                if hi < cfg.alpha {
                    Some((Decision::Significant, StoppingReason::IntervalBelowAlpha))
                } else if lo > cfg.alpha {
                    Some((Decision::NotSignificant, StoppingReason::IntervalAboveAlpha))
                } else {
                    None
                }
            }
        };
        if let Some((decision, reason)) = stop {
            return Ok(done(decision, d, m, reason));
        }
    }
    let by_p = if p_of(d, m_max) <= cfg.alpha {
        Decision::Significant
    } else {
        Decision::NotSignificant
    };
    Ok(match cfg.method {
        SeqMethod::Complete => done(by_p, d, m_max, StoppingReason::Exhausted),
        _ if cfg.fallback => done(by_p, d, m_max, StoppingReason::MmaxFallback),
        _ => done(Decision::Undecided, d, m_max, StoppingReason::MmaxUndecided),
    })
}

/// Data handed to the permutation tests.
#[derive(Debug, Clone, Copy)]
pub struct TestData<'a> {
    pub x: &'a Features,
    pub y: &'a [f64],
    /// Entity of each row; required for [`NullMode::WithinEntity`].
    pub groups: Option<&'a [usize]>,
}

impl<'a> TestData<'a> {
    pub fn new(x: &'a Features, y: &'a [f64]) -> Self {
        TestData { x, y, groups: None }
    }

    pub fn with_groups(mut self, groups: &'a [usize]) -> Self {
        self.groups = Some(groups);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeqTestDecision {
    pub variable: String,
    pub method: SeqMethod,
    pub decision: Decision,
    pub p_estimate: f64,
    pub m: usize,
    pub d: usize,
    pub stopping_reason: StoppingReason,
    pub observed_vimp: f64,
    /// Spread of the observed VIMP over its `nperm` shuffles.
    pub observed_std: f64,
}

impl SeqTestDecision {
    pub fn stars(&self) -> &'static str {
        stats::stars(self.p_estimate)
    }
}

const TAG_OBSERVED: u64 = 0;
const TAG_PERMUTATIONS: u64 = 1;

/// One variable's test: the data, the column under test and its seed.
struct Tester<'a> {
    data: TestData<'a>,
    j: usize,
    cfg: &'a SeqTestConfig,
    seed: u64,
}

impl<'a> Tester<'a> {
    fn new(data: TestData<'a>, variable: &str, cfg: &'a SeqTestConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let j = data
            .x
            .index_of(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_owned()))?;
        if data.y.len() != data.x.n_rows() {
            return Err(Error::Dimension(format!(
                "{} feature rows, {} targets",
                data.x.n_rows(),
                data.y.len()
            )));
        }
        if cfg.null == NullMode::WithinEntity {
            match data.groups {
                Some(g) if g.len() == data.y.len() => {}
                _ => {
                    return Err(Error::InvalidConfig(
                        "within-entity permutation needs one entity index per row".into(),
                    ))
                }
            }
        }
        Ok(Tester { data, j, cfg, seed })
    }

    fn vimp(&self, x: &Features, seed: u64) -> Result<Vec<f64>> {
        let forest = fit_forest(x, self.data.y, &self.cfg.forest_config(rng::derive(seed, 0)))?;
        let baseline = score(&forest, x, self.data.y, self.cfg.eval)?;
        repeats_for(
            &forest,
            x,
            self.data.y,
            self.j,
            baseline,
            self.cfg.nperm,
            self.cfg.eval,
            rng::derive(seed, 1),
        )
    }

    fn observed(&self) -> Result<Vec<f64>> {
        self.vimp(self.data.x, rng::derive(self.seed, TAG_OBSERVED))
    }

    /// Null VIMP of permutation `k`; depends on `k` alone, not on which
    /// other permutations were drawn.
    fn null(&self, k: usize) -> Result<f64> {
        let seed = rng::derive(rng::derive(self.seed, TAG_PERMUTATIONS), k as u64);
        let groups = match self.cfg.null {
            NullMode::Global => None,
            NullMode::WithinEntity => self.data.groups,
        };
        let perm = permutation(self.data.y.len(), groups, rng::derive(seed, 2));
        let x = permuted(self.data.x, self.j, &perm);
        Ok(stats::mean(&self.vimp(&x, seed)?))
    }
}

/// Observed VIMP of `variable`: one value per shuffle (`cfg.nperm`).
pub fn observed_vimp(data: TestData<'_>, variable: &str, cfg: &SeqTestConfig, seed: u64) -> Result<Vec<f64>> {
    Tester::new(data, variable, cfg, seed)?.observed()
}

/// VIMP of `variable` in the forest regrown after null permutation `k`
/// (1-based) of that variable.
pub fn null_vimp(data: TestData<'_>, variable: &str, cfg: &SeqTestConfig, seed: u64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("permutations are numbered from 1".into()));
    }
    Tester::new(data, variable, cfg, seed)?.null(k)
}

/// Exceedance indicators computed on demand and cached so that several
/// stopping rules can share the same permutations.
struct ExceedanceStream<'a> {
    tester: Tester<'a>,
    observed: f64,
    cache: Vec<bool>,
}

impl ExceedanceStream<'_> {
    fn exceeds(&mut self, k: usize) -> Result<bool> {
        while self.cache.len() < k {
            let v = self.tester.null(self.cache.len() + 1)?;
            self.cache.push(v >= self.observed);
        }
        Ok(self.cache[k - 1])
    }
}

/// Runs several stopping rules for one variable over a single shared sequence
/// of null permutations. Each rule sees exactly what it would have seen if
/// run alone with the same seed.
pub fn rfvimptest_methods(
    data: TestData<'_>,
    variable: &str,
    cfg: &SeqTestConfig,
    methods: &[SeqMethod],
    seed: u64,
) -> Result<Vec<SeqTestDecision>> {
    let tester = Tester::new(data, variable, cfg, seed)?;
    let reps = tester.observed()?;
    let observed_std = stats::population_std(&reps);
    let mut stream = ExceedanceStream {
        tester,
        observed: stats::mean(&reps),
        cache: Vec::new(),
    };
    methods
        .iter()
        .map(|&method| {
            let c = cfg.with_method(method);
            let out = run_sequential(&c, |k| stream.exceeds(k))?;
            Ok(SeqTestDecision {
                variable: variable.to_owned(),
                method,
                decision: out.decision,
                p_estimate: out.p_estimate,
                m: out.m,
                d: out.d,
                stopping_reason: out.stopping_reason,
                observed_vimp: stream.observed,
                observed_std,
            })
        })
        .collect()
}

/// Sequential permutation test of one variable's importance.
pub fn rfvimptest(data: TestData<'_>, variable: &str, cfg: &SeqTestConfig, seed: u64) -> Result<SeqTestDecision> {
    Ok(rfvimptest_methods(data, variable, cfg, &[cfg.method], seed)?.remove(0))
}

/// Seed of `variable`'s stream under `master_seed`.
pub fn variable_seed(master_seed: u64, variable: &str) -> u64 {
    rng::derive(master_seed, rng::name_tag(variable))
}

/// Tests every variable on a pool of `workers` threads. The result does not
/// depend on `workers`; a failing variable reports its own error.
pub fn rfvimptest_all<S: AsRef<str> + Sync>(
    data: TestData<'_>,
    variables: &[S],
    cfg: &SeqTestConfig,
    master_seed: u64,
    workers: usize,
) -> Result<BTreeMap<String, Result<SeqTestDecision>>> {
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<(String, Result<SeqTestDecision>)> = pool.install(|| {
        variables
            .par_iter()
            .map(|v| {
                let v = v.as_ref();
                (v.to_owned(), rfvimptest(data, v, cfg, variable_seed(master_seed, v)))
            })
            .collect()
    });
    Ok(results.into_iter().collect())
}

/// Significance stars from each decision's p-value.
pub fn significance_codes(decisions: &BTreeMap<String, SeqTestDecision>) -> BTreeMap<String, &'static str> {
    decisions.iter().map(|(k, d)| (k.clone(), d.stars())).collect()
}

/// Decision map as CSV, one row per variable in name order. Failed
/// variables appear with `error` as the decision and the message as reason.
pub fn decisions_to_csv(decisions: &BTreeMap<String, Result<SeqTestDecision>>) -> String {
    let mut out = String::from("variable,importance,std,p_estimate,decision,m_used,stopping_reason,stars\n");
    for (name, r) in decisions {
        match r {
            Ok(d) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                csv_field(name),
                d.observed_vimp,
                d.observed_std,
                d.p_estimate,
                d.decision.as_str(),
                d.m,
                d.stopping_reason.as_str(),
                d.stars()
            )),
            Err(e) => out.push_str(&format!("{},,,,error,,{},\n", csv_field(name), csv_field(&e.to_string()))),
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: SeqMethod) -> SeqTestConfig {
        SeqTestConfig::default().with_method(method)
    }

    #[test]
    fn sprt_boundary_crossing_without_exceedances() {
        let out = run_sequential(&cfg(SeqMethod::Sprt), |_| Ok(false)).unwrap();
        let expect = (16f64.ln() / (0.96f64 / 0.94).ln()).ceil() as usize;
        assert_eq!(expect, 132);
        assert_eq!((out.m, out.d, out.decision), (132, 0, Decision::Significant));
        assert_eq!(out.stopping_reason, StoppingReason::UpperBoundary);
    }

    #[test]
    fn sprt_always_exceeding_stops_low() {
        let out = run_sequential(&cfg(SeqMethod::Sprt), |_| Ok(true)).unwrap();
        // each exceedance moves the ratio by ln(2/3)
        let expect = ((0.2f64 / 0.95).ln() / (2.0f64 / 3.0).ln()).ceil() as usize;
        assert_eq!((out.m, out.decision), (expect, Decision::NotSignificant));
    }

    #[test]
    fn certain_stops_at_threshold() {
        let out = run_sequential(&cfg(SeqMethod::Certain), |_| Ok(true)).unwrap();
        assert_eq!((out.m, out.d, out.decision), (25, 25, Decision::NotSignificant));
        // with no exceedances the outcome is forced once fewer than 25
        // permutations remain: d + (500 - m) < 25 at m = 476
        let out = run_sequential(&cfg(SeqMethod::Certain), |_| Ok(false)).unwrap();
        assert_eq!((out.m, out.decision), (476, Decision::Significant));
    }

    #[test]
    fn complete_counts() {
        let c = SeqTestConfig { m_max: 499, ..cfg(SeqMethod::Complete) };
        let out = run_sequential(&c, |k| Ok(k <= 10)).unwrap();
        assert_eq!((out.m, out.d), (499, 10));
        assert!((out.p_estimate - 0.022).abs() < 1e-15);
        assert_eq!(out.decision, Decision::Significant);
        let one = SeqTestConfig { m_max: 1, ..cfg(SeqMethod::Complete) };
        assert_eq!(run_sequential(&one, |_| Ok(true)).unwrap().p_estimate, 1.0);
        assert_eq!(run_sequential(&one, |_| Ok(false)).unwrap().p_estimate, 0.5);
    }

    #[test]
    fn certain_agrees_with_complete_on_every_count() {
        let m_max = 60;
        for d_total in 0..=m_max {
            // exceedances placed last, the slowest case for "certain"
            let stream = |k: usize| Ok(k > m_max - d_total);
            let full = run_sequential(&SeqTestConfig { m_max, ..cfg(SeqMethod::Complete) }, stream).unwrap();
            let fast = run_sequential(&SeqTestConfig { m_max, ..cfg(SeqMethod::Certain) }, stream).unwrap();
            assert_eq!(full.decision, fast.decision, "d = {d_total}");
        }
    }

    #[test]
    fn pval_interval_rule() {
        let out = run_sequential(&cfg(SeqMethod::Pval), |_| Ok(false)).unwrap();
        let (_, hi) = stats::clopper_pearson(0, out.m, 0.05);
        let (_, hi_prev) = stats::clopper_pearson(0, out.m - 1, 0.05);
        assert!(hi < 0.05 && hi_prev >= 0.05);
        assert_eq!(out.stopping_reason, StoppingReason::IntervalBelowAlpha);
    }

    #[test]
    fn fallback_and_undecided() {
        // sparse exceedances so the ratio drifts slowly and never crosses in 10 draws
        let c = SeqTestConfig { m_max: 10, ..cfg(SeqMethod::Sprt) };
        let out = run_sequential(&c, |k| Ok(k % 3 == 0)).unwrap();
        assert_eq!(out.stopping_reason, StoppingReason::MmaxFallback);
        assert_eq!(out.decision, Decision::NotSignificant);
        let c = SeqTestConfig { fallback: false, ..c };
        assert_eq!(run_sequential(&c, |k| Ok(k % 3 == 0)).unwrap().decision, Decision::Undecided);
    }

    #[test]
    fn sapt_default_bounds_symmetric() {
        let (lo, hi) = cfg(SeqMethod::Sapt).sapt_bounds();
        assert_eq!(lo, -hi);
        assert!((lo - (0.2f64 / 0.95).ln()).abs() < 1e-15);
        let out = run_sequential(&cfg(SeqMethod::Sapt), |_| Ok(false)).unwrap();
        assert_eq!(out.m, (hi / (0.96f64 / 0.94).ln()).ceil() as usize);
    }

    #[test]
    fn config_violations_are_listed() {
        let bad = SeqTestConfig {
            p0: 0.01,
            m_max: 5,
            ntree: 0,
            ..SeqTestConfig::default()
        };
        assert_eq!(bad.violations().len(), 3);
        assert!(SeqTestConfig { m_max: 1, ..cfg(SeqMethod::Complete) }.validate().is_ok());
    }

    #[test]
    fn method_names_round_trip() {
        for m in SeqMethod::ALL {
            assert_eq!(m.as_str().parse::<SeqMethod>().unwrap(), m);
        }
        assert!("wald".parse::<SeqMethod>().is_err());
    }

    #[test]
    fn within_entity_permutation_keeps_groups() {
        let groups = [0, 0, 0, 1, 1, 2, 2, 2, 2];
        let perm = permutation(9, Some(&groups), 5);
        for (to, &from) in perm.iter().enumerate() {
            assert_eq!(groups[to], groups[from]);
        }
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn stars_follow_p() {
        let d = |p| SeqTestDecision {
            variable: "x".into(),
            method: SeqMethod::Complete,
            decision: Decision::Significant,
            p_estimate: p,
            m: 1,
            d: 0,
            stopping_reason: StoppingReason::Exhausted,
            observed_vimp: 0.0,
            observed_std: 0.0,
        };
        assert_eq!(d(0.004).stars(), "***");
        assert_eq!(d(0.051).stars(), "*");
        assert_eq!(d(0.5).stars(), "");
    }
}
