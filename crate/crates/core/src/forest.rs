//! Regression random forest: bootstrap-bagged CART trees with random feature
//! subsets at each node, mean aggregation, out-of-bag scoring and
//! mean-decrease-in-impurity importance.
//!
//! Tree `t` draws all its randomness from the stream derived from
//! `(seed, t)`, so a forest is identical whether its trees are grown serially
//! or in parallel.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::rng;

/// Column-major feature matrix with names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Features {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Dimension(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Dimension("feature columns differ in length".into()));
            }
        }
        Ok(Features { names, columns })
    }

    /// Builds features from rows of equal length.
    pub fn from_rows<S: AsRef<str>>(names: &[S], rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Dimension(format!("row {i} has {} values, expected {p}", r.len())));
            }
            for (c, v) in columns.iter_mut().zip(r) {
                c.push(*v);
            }
        }
        Features::new(names.iter().map(|s| s.as_ref().to_owned()).collect(), columns)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn get(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    /// Copy with column `j` replaced.
    pub fn with_column(&self, j: usize, values: Vec<f64>) -> Self {
        let mut out = self.clone();
        out.columns[j] = values;
        out
    }
}

/// Listwise-complete design drawn from a panel.
#[derive(Debug, Clone)]
pub struct PanelDesign {
    pub features: Features,
    pub target: Vec<f64>,
    /// Entity index per row, for within-entity permutation.
    pub groups: Vec<usize>,
    /// Dataset rows used.
    pub rows: Vec<usize>,
}

/// Extracts `target ~ features` after listwise deletion.
pub fn design_from_panel<S: AsRef<str>>(
    ds: &PanelDataset,
    target: &str,
    features: &[S],
) -> Result<PanelDesign> {
    let mut needed = vec![target.to_owned()];
    needed.extend(features.iter().map(|f| f.as_ref().to_owned()));
    let rows = ds.complete_rows(&needed)?;
    let pick = |name: &str| -> Result<Vec<f64>> {
        let v = ds.values(name)?;
        Ok(rows.iter().map(|&r| v[r].expect("complete")).collect())
    };
    let columns = features.iter().map(|f| pick(f.as_ref())).collect::<Result<Vec<_>>>()?;
    Ok(PanelDesign {
        features: Features::new(features.iter().map(|f| f.as_ref().to_owned()).collect(), columns)?,
        target: pick(target)?,
        groups: rows.iter().map(|&r| ds.entity_index(r)).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| p.div_ceil(3)).clamp(1, p.max(1))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_trees == 0 {
            problems.push("n_trees must be at least 1".to_owned());
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > p {
                problems.push(format!("mtry must lie in 1..={p}, got {m}"));
            }
        }
        if self.min_leaf == 0 {
            problems.push("min_leaf must be at least 1".to_owned());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity_decrease: f64,
        n_samples: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

/// A fitted regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Prediction for row `row` of `x`.
    pub fn predict_row(&self, x: &Features, row: usize) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x.get(row, *feature) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value, n_samples } => Some((*value, *n_samples)),
            _ => None,
        })
    }
}

struct Grower<'a> {
    x: &'a Features,
    y: &'a [f64],
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize, r: &mut rng::StreamRng) -> usize {
        let m = idx.len();
        let (sum, lo, hi) = idx.iter().fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, lo, hi), &i| {
            let v = self.y[i];
            (s + v, lo.min(v), hi.max(v))
        });
        let slot = self.nodes.len();
        let leaf = Node::Leaf {
            value: (sum / m as f64).clamp(lo, hi),
            n_samples: m,
        };
        self.nodes.push(leaf.clone());
        if m < 2 * self.min_leaf || depth >= self.max_depth || lo == hi {
            return slot;
        }
        let Some(best) = self.best_split(idx, sum, r) else {
            return slot;
        };
        // Partition in place: left = x <= threshold.
        let mut split = 0;
        for k in 0..m {
            if self.x.get(idx[k], best.feature) <= best.threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, rgt) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1, r);
        let right = self.grow(rgt, depth + 1, r);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            impurity_decrease: best.gain,
            n_samples: m,
        };
        slot
    }

    /// Exact search over midpoints of sorted distinct values. Ties keep the
    /// lowest feature index, then the lowest threshold.
    fn best_split(&mut self, idx: &[usize], sum: f64, r: &mut rng::StreamRng) -> Option<BestSplit> {
        let m = idx.len();
        let p = self.x.n_features();
        let mut feats: Vec<usize> = index::sample(r, p, self.mtry).into_vec();
        feats.sort_unstable();
        let parent = sum * sum / m as f64;
        let sse_parent: f64 = {
            let mean = sum / m as f64;
            idx.iter().map(|&i| (self.y[i] - mean).powi(2)).sum()
        };
        let mut best: Option<BestSplit> = None;
        for f in feats {
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 0..m - 1 {
                left_sum += self.scratch[k].1;
                let nl = k + 1;
                let nr = m - nl;
                if nl < self.min_leaf {
                    continue;
                }
                if nr < self.min_leaf {
                    break;
                }
                let (a, b) = (self.scratch[k].0, self.scratch[k + 1].0);
                if a == b {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - parent;
                if best.as_ref().is_none_or(|bs| gain > bs.gain) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12 * sse_parent.max(f64::MIN_POSITIVE))
    }
}

fn grow_tree(x: &Features, y: &[f64], cfg: &ForestConfig, tree: usize) -> (Tree, Vec<u32>) {
    let n = y.len();
    let mut r = rng::stream(rng::derive(cfg.seed, tree as u64));
    let mut counts = vec![0u32; n];
    let mut idx: Vec<usize> = (0..n)
        .map(|_| {
            let i = r.random_range(0..n);
            counts[i] += 1;
            i
        })
        .collect();
    let mut g = Grower {
        x,
        y,
        mtry: cfg.resolved_mtry(x.n_features()),
        min_leaf: cfg.min_leaf,
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        nodes: Vec::new(),
        scratch: Vec::with_capacity(n),
    };
    g.grow(&mut idx, 0, &mut r);
    (Tree { nodes: g.nodes }, counts)
}

const FORMAT_NAME: &str = "panelkit-forest";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    format: String,
    version: u32,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    /// Bootstrap multiplicity of every training row, per tree.
    pub in_bag: Vec<Vec<u32>>,
    pub trees: Vec<Tree>,
    pub target_min: f64,
    pub target_max: f64,
}

/// Grows a forest on `x`, `y`.
///
/// ```
/// use panelkit::forest::{fit_forest, Features, ForestConfig};
///
/// let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
/// let y: Vec<f64> = (0..40).map(|i| if i < 20 { 1.0 } else { 5.0 }).collect();
/// let x = Features::from_rows(&["x"], &rows).unwrap();
/// let cfg = ForestConfig { n_trees: 50, seed: 7, ..Default::default() };
/// let forest = fit_forest(&x, &y, &cfg).unwrap();
/// let pred = forest.predict(&x).unwrap();
/// assert!((pred[0] - 1.0).abs() < 0.5 && (pred[39] - 5.0).abs() < 0.5);
/// ```
pub fn fit_forest(x: &Features, y: &[f64], cfg: &ForestConfig) -> Result<Forest> {
    let n = y.len();
    if x.n_rows() != n {
        return Err(Error::Dimension(format!("{} feature rows, {n} targets", x.n_rows())));
    }
    if x.n_features() == 0 {
        return Err(Error::Dimension("no features".into()));
    }
    cfg.validate(x.n_features())?;
    if n < 2 * cfg.min_leaf || n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} rows; need at least {} for min_leaf = {}",
            (2 * cfg.min_leaf).max(2),
            cfg.min_leaf
        )));
    }
    if y.iter().chain(x.columns.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite values in training data".into()));
    }
    let grown: Vec<(Tree, Vec<u32>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(x, y, cfg, t))
        .collect();
    let (trees, in_bag) = grown.into_iter().unzip();
    Ok(Forest {
        format: FORMAT_NAME.to_owned(),
        version: FORMAT_VERSION,
        config: *cfg,
        feature_names: x.names.clone(),
        in_bag,
        trees,
        target_min: y.iter().copied().fold(f64::INFINITY, f64::min),
        target_max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Out-of-bag fit quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OobScore {
    pub oob_r2: Option<f64>,
    pub oob_mse: f64,
    /// Share of rows that were out of bag for at least one tree.
    pub coverage_fraction: f64,
}

/// In-sample metrics of a fitted forest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForestMetrics {
    pub r2: Option<f64>,
    pub adj_r2: Option<f64>,
    pub mse: f64,
    /// `(R2/k) / ((1-R2)/(n-k-1))`, the R-squared analogue of an F test.
    pub pseudo_f: Option<f64>,
    pub n_obs: usize,
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    fn check(&self, x: &Features) -> Result<()> {
        if x.names != self.feature_names {
            return Err(Error::Dimension(format!(
                "features {:?} do not match training features {:?}",
                x.names, self.feature_names
            )));
        }
        Ok(())
    }

    /// Mean of the tree predictions.
    pub fn predict(&self, x: &Features) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok((0..x.n_rows())
            .map(|i| mean_clamped(self.trees.iter().map(|t| t.predict_row(x, i))))
            .collect())
    }

    /// Per-row average over trees for which the row was out of bag; `None`
    /// when the row was in bag everywhere. Rows of `x` must be the training
    /// rows.
    pub fn oob_predictions(&self, x: &Features) -> Result<Vec<Option<f64>>> {
        self.check(x)?;
        let n = self.in_bag.first().map_or(0, Vec::len);
        if x.n_rows() != n {
            return Err(Error::Dimension(format!(
                "OOB scoring needs the {n} training rows, got {}",
                x.n_rows()
            )));
        }
        Ok((0..n)
            .map(|i| {
                let mut preds = self
                    .trees
                    .iter()
                    .zip(&self.in_bag)
                    .filter(|(_, bag)| bag[i] == 0)
                    .map(|(t, _)| t.predict_row(x, i))
                    .peekable();
                preds.peek()?;
                Some(mean_clamped(preds))
            })
            .collect())
    }

    pub fn oob_score(&self, x: &Features, y: &[f64]) -> Result<OobScore> {
        let preds = self.oob_predictions(x)?;
        let (yt, yp): (Vec<f64>, Vec<f64>) = preds
            .iter()
            .zip(y)
            .filter_map(|(p, &t)| p.map(|p| (t, p)))
            .unzip();
        if yt.is_empty() {
            return Err(Error::InsufficientData("no row is out of bag for any tree".into()));
        }
        Ok(OobScore {
            oob_r2: r2_score(&yt, &yp),
            oob_mse: mse(&yt, &yp),
            coverage_fraction: yt.len() as f64 / y.len() as f64,
        })
    }

    /// Share of distinct training rows in tree `t`'s bootstrap sample.
    pub fn unique_in_bag_fraction(&self, t: usize) -> f64 {
        let bag = &self.in_bag[t];
        bag.iter().filter(|&&c| c > 0).count() as f64 / bag.len() as f64
    }

    /// Mean decrease in impurity: weighted impurity decreases summed per
    /// feature, averaged over trees, normalised to sum to one. Returns
    /// `None` when no tree has a split.
    pub fn mdi_importance(&self) -> Option<Vec<(String, f64)>> {
        let p = self.feature_names.len();
        let mut total = vec![0.0; p];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split {
                    feature,
                    impurity_decrease,
                    ..
                } = n
                {
                    total[*feature] += impurity_decrease / self.trees.len() as f64;
                }
            }
        }
        let s: f64 = total.iter().sum();
        if s <= 0.0 {
            return None;
        }
        Some(self.feature_names.iter().cloned().zip(total.into_iter().map(|v| v / s)).collect())
    }

    /// R2, adjusted R2, MSE and pseudo-F of in-sample predictions with `k`
    /// counted features.
    pub fn metrics(&self, x: &Features, y: &[f64], k: usize) -> Result<ForestMetrics> {
        let pred = self.predict(x)?;
        Ok(forest_metrics_from(y, &pred, k))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Forest = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("forest file: {e}")))?;
        if f.format != FORMAT_NAME || f.version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported forest format {} v{}",
                f.format, f.version
            )));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Forest::from_json(&text)
    }
}

fn mean_clamped(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        s += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (s / n as f64).clamp(lo, hi)
}

pub(crate) fn mse(y: &[f64], pred: &[f64]) -> f64 {
    y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
}

/// `1 - RSS/TSS`; `None` for fewer than two observations or zero TSS.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Option<f64> {
    if y_true.len() < 2 || y_true.len() != y_pred.len() {
        return None;
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let tss: f64 = y_true.iter().map(|v| (v - mean).powi(2)).sum();
    if tss == 0.0 {
        return None;
    }
    let rss: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    Some(1.0 - rss / tss)
}

pub fn forest_metrics_from(y: &[f64], pred: &[f64], k: usize) -> ForestMetrics {
    let n = y.len();
    let r2 = r2_score(y, pred);
    let resid_df = n as f64 - k as f64 - 1.0;
    let ok = resid_df > 0.0;
    ForestMetrics {
        r2,
        adj_r2: r2.filter(|_| ok).map(|r2| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / resid_df),
        mse: mse(y, pred),
        pseudo_f: r2
            .filter(|r2| ok && k > 0 && *r2 < 1.0)
            .map(|r2| (r2 / k as f64) / ((1.0 - r2) / resid_df)),
        n_obs: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Features {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![i as f64, ((i * 37) % n) as f64, ((i * 11) % 7) as f64])
            .collect();
        Features::from_rows(&["a", "b", "c"], &rows).unwrap()
    }

    #[test]
    fn constant_target_predicts_exactly() {
        let x = grid(30);
        let y = vec![7.0; 30];
        let f = fit_forest(&x, &y, &ForestConfig { n_trees: 20, ..Default::default() }).unwrap();
        assert!(f.predict(&x).unwrap().iter().all(|&p| p == 7.0));
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
        assert!(f.mdi_importance().is_none());
    }

    #[test]
    fn single_tree_prediction_is_leaf_value() {
        let x = grid(40);
        let y: Vec<f64> = (0..40).map(|i| (i as f64).sqrt()).collect();
        let f = fit_forest(&x, &y, &ForestConfig { n_trees: 1, seed: 3, ..Default::default() }).unwrap();
        let p = f.predict(&x).unwrap();
        for i in 0..40 {
            assert_eq!(p[i], f.trees[0].predict_row(&x, i));
        }
    }

    #[test]
    fn prediction_is_mean_of_trees() {
        let x = grid(30);
        let y: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64).collect();
        let mut f = fit_forest(&x, &y, &ForestConfig { n_trees: 2, ..Default::default() }).unwrap();
        f.trees[0] = Tree { nodes: vec![Node::Leaf { value: 1.0, n_samples: 30 }] };
        f.trees[1] = Tree { nodes: vec![Node::Leaf { value: 3.0, n_samples: 30 }] };
        assert!(f.predict(&x).unwrap().iter().all(|&p| p == 2.0));
    }

    #[test]
    fn leaf_counts_sum_to_bootstrap_size() {
        let x = grid(50);
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let f = fit_forest(&x, &y, &ForestConfig { n_trees: 10, min_leaf: 2, ..Default::default() }).unwrap();
        for (t, bag) in f.trees.iter().zip(&f.in_bag) {
            assert_eq!(t.leaves().map(|(_, n)| n).sum::<usize>(), 50);
            assert_eq!(bag.iter().sum::<u32>(), 50);
            assert!(t.leaves().all(|(_, n)| n >= 2));
        }
    }

    #[test]
    fn mdi_normalised_and_unused_feature_zero() {
        let x = grid(60);
        // Only feature "a" carries signal; "c" is constant so never split.
        let x = x.with_column(2, vec![1.0; 60]);
        let y: Vec<f64> = (0..60).map(|i| if i < 30 { 0.0 } else { 1.0 }).collect();
        let f = fit_forest(&x, &y, &ForestConfig { n_trees: 30, ..Default::default() }).unwrap();
        let mdi = f.mdi_importance().unwrap();
        assert_abs_diff_eq!(mdi.iter().map(|(_, v)| v).sum::<f64>(), 1.0, epsilon = 1e-9);
        assert_eq!(mdi[2].1, 0.0);
    }

    #[test]
    fn validation_errors() {
        let x = grid(10);
        let y = vec![0.0; 10];
        assert!(fit_forest(&x, &y[..5], &ForestConfig::default()).is_err());
        assert!(matches!(
            fit_forest(&x, &y, &ForestConfig { min_leaf: 6, ..Default::default() }),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_forest(&x, &y, &ForestConfig { mtry: Some(4), ..Default::default() }).is_err());
        assert!(fit_forest(&x, &y, &ForestConfig { n_trees: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn predict_rejects_other_features() {
        let x = grid(20);
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        let f = fit_forest(&x, &y, &ForestConfig { n_trees: 3, ..Default::default() }).unwrap();
        let other = Features::from_rows(&["a", "b"], &[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(f.predict(&other), Err(Error::Dimension(_))));
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(1.0));
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]), Some(0.0));
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]), Some(0.5));
        assert_eq!(r2_score(&[4.0, 4.0], &[4.0, 4.0]), None);
        assert_eq!(r2_score(&[4.0], &[4.0]), None);
    }

    #[test]
    fn pseudo_f_by_hand() {
        // R2 = 0.5 with n = 102, k = 1 -> F = 100
        let y: Vec<f64> = (0..102).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let pred: Vec<f64> = y.iter().map(|v| v * (1.0 - 0.5f64.sqrt())).collect();
        let m = forest_metrics_from(&y, &pred, 1);
        assert_abs_diff_eq!(m.r2.unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.pseudo_f.unwrap(), 100.0, epsilon = 1e-9);
        let perfect = forest_metrics_from(&y, &y, 1);
        assert_eq!((perfect.r2, perfect.mse, perfect.pseudo_f), (Some(1.0), 0.0, None));
        assert_eq!(forest_metrics_from(&y[..2], &y[..2], 1).adj_r2, None);
    }

    #[test]
    fn json_round_trip() {
        let x = grid(25);
        let y: Vec<f64> = (0..25).map(|i| (i as f64 / 3.0).cos()).collect();
        let f = fit_forest(&x, &y, &ForestConfig { n_trees: 4, seed: 11, ..Default::default() }).unwrap();
        let back = Forest::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(Forest::from_json("{\"format\":\"x\"}").is_err());
    }
}
