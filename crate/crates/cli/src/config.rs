//! Run configuration: TOML file, demo preset and command-line overrides.
//!
//! Precedence, lowest first: built-in defaults, the `--demo` preset, the
//! config file, `PANELKIT_WORKERS`, `--set key=value`, and finally the
//! `--seed`, `--workers` and `--out` flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use panelkit::dataset::OutlierRule;
use panelkit::forest::ForestConfig;
use panelkit::synth::DEMO_GROUPS;
use panelkit::vimp::{EvalSet, SeqTestConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required; there is no clock-based default.
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub groups: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub linear: LinearConfig,
    #[serde(default)]
    pub gmm: GmmConfig,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub importance: SeqTestConfig,
}

fn one() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("panelkit-out")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub input: Option<PathBuf>,
    /// Use the bundled synthetic panel instead of `input`.
    #[serde(default)]
    pub demo: bool,
    #[serde(default = "entity_column")]
    pub entity_column: String,
    #[serde(default = "year_column")]
    pub year_column: String,
    pub dependent: String,
    pub regressors: Vec<String>,
    /// Replaced by their natural logs (`LN_` prefix) before fitting.
    #[serde(default)]
    pub log: Vec<String>,
    #[serde(default)]
    pub outliers: OutlierRule,
}

fn entity_column() -> String {
    "Code".into()
}

fn year_column() -> String {
    "Year".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectsChoice {
    /// Fit both fixed and random effects and keep the one Hausman prefers.
    Hausman,
    Fixed,
    Random,
    Pooled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    #[serde(default = "hausman")]
    pub effects: EffectsChoice,
    #[serde(default = "yes")]
    pub time_dummies: bool,
    /// Entity-clustered standard errors.
    #[serde(default = "yes")]
    pub cluster: bool,
    #[serde(default = "yes")]
    pub small_sample: bool,
}

fn hausman() -> EffectsChoice {
    EffectsChoice::Hausman
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            effects: EffectsChoice::Hausman,
            time_dummies: true,
            cluster: true,
            small_sample: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmConfig {
    #[serde(default = "two")]
    pub min_lag: u32,
    #[serde(default = "four")]
    pub max_lag: u32,
    #[serde(default = "yes")]
    pub time_dummies: bool,
    #[serde(default = "yes")]
    pub collapse: bool,
    /// Regressors instrumented like the lagged dependent variable.
    #[serde(default)]
    pub endogenous: Vec<String>,
}

fn two() -> u32 {
    2
}

fn four() -> u32 {
    4
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            min_lag: 2,
            max_lag: 4,
            time_dummies: true,
            collapse: true,
            endogenous: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    #[serde(default = "trees")]
    pub n_trees: usize,
    #[serde(default)]
    pub mtry: Option<usize>,
    #[serde(default = "five")]
    pub min_leaf: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    /// Shuffles per variable for permutation importance.
    #[serde(default = "ten")]
    pub n_repeats: usize,
    #[serde(default)]
    pub eval: EvalSet,
}

fn trees() -> usize {
    500
}

fn five() -> usize {
    5
}

fn ten() -> usize {
    10
}

impl Default for ForestSection {
    fn default() -> Self {
        ForestSection {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
            max_depth: None,
            n_repeats: 10,
            eval: EvalSet::Training,
        }
    }
}

impl ForestSection {
    pub fn forest_config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            mtry: self.mtry,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
            seed,
        }
    }
}

/// Preset used by `--demo`: the synthetic 32-country panel with smaller
/// forests so the whole pipeline finishes in minutes on one core.
pub fn demo_preset() -> Value {
    let mut groups = toml::Table::new();
    for (name, members) in DEMO_GROUPS {
        groups.insert(name.into(), Value::from(members.to_vec()));
    }
    let text = r#"
        [data]
        demo = true
        dependent = "GFCF_Ratio"
        regressors = ["GDP_Growth", "UnEmpl_Rate", "TAX", "CPI", "EPU_Index", "Gini_Index", "FDI", "HDI"]
        outliers = { rule = "none" }

        [forest]
        n_trees = 200

        [importance]
        ntree = 30
        m_max = 200
    "#;
    let mut v: Value = toml::from_str(text).expect("valid preset");
    v.as_table_mut().expect("table").insert("groups".into(), Value::Table(groups));
    v
}

/// Merges `over` into `base`, table by table.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// literal when possible and as a bare string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override `{assignment}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("override `{assignment}` has an empty key"));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("override `{key}`: `{part}` is not a table"))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| format!("override `{key}`: parent is not a table"))?
        .insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_value(v: Value) -> Result<Self, String> {
        v.try_into().map_err(|e: toml::de::Error| e.message().to_owned())
    }

    /// Problems that need no data to detect.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.seed.is_none() {
            out.push("seed is required (set `seed` or pass --seed)".into());
        }
        if self.workers == 0 {
            out.push("workers must be at least 1".into());
        }
        if self.data.input.is_none() && !self.data.demo {
            out.push("data.input is required unless data.demo = true".into());
        }
        if self.data.regressors.is_empty() {
            out.push("data.regressors is empty".into());
        }
        if self.groups.is_empty() {
            out.push("no groups defined".into());
        }
        for (name, members) in &self.groups {
            if members.is_empty() {
                out.push(format!("group `{name}` has no members"));
            }
        }
        for v in &self.data.log {
            if *v != self.data.dependent && !self.data.regressors.contains(v) {
                out.push(format!("data.log names `{v}`, which is not a model variable"));
            }
        }
        for v in &self.gmm.endogenous {
            if !self.data.regressors.contains(v) {
                out.push(format!("gmm.endogenous names `{v}`, which is not a regressor"));
            }
        }
        if self.gmm.min_lag < 2 || self.gmm.max_lag < self.gmm.min_lag {
            out.push(format!(
                "gmm lags need 2 <= min_lag <= max_lag, got {}..{}",
                self.gmm.min_lag, self.gmm.max_lag
            ));
        }
        if self.forest.n_repeats == 0 {
            out.push("forest.n_repeats must be at least 1".into());
        }
        if let Err(e) = self.forest.forest_config(0).validate(self.data.regressors.len() + 1) {
            out.push(format!("forest: {e}"));
        }
        out.extend(self.importance.violations().into_iter().map(|v| format!("importance: {v}")));
        out
    }

    /// SHA-256 of the settings that affect results (not `workers`/`out`).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 1;
        c.out = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
