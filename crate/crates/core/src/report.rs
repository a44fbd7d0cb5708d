//! Side-by-side comparison of linear, GMM and forest results.
//!
//! A [`ComparisonReport`] is a grid of `group x setting x model` cells. Each
//! filled cell is a [`Block`] built from one fit; unfilled cells are kept and
//! rendered as `absent`. Tables print four decimals; `results_full.csv`
//! keeps every number at full precision.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forest::{ForestMetrics, OobScore};
use crate::gmm::GmmFit;
use crate::linear::{Effects, LinearFit, CONST_NAME};
use crate::stats;
use crate::vimp::{PermImportanceResult, SeqTestDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// No lagged dependent variable among the regressors.
    Static,
    /// Lagged dependent variable included.
    Dynamic,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::Static, Setting::Dynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Static => "static",
            Setting::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Gmm,
    Rf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Linear, ModelKind::Gmm, ModelKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Gmm => "gmm",
            ModelKind::Rf => "rf",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the paired dispersion row holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// Standard error, printed in parentheses.
    StdError,
    /// Standard deviation over permutation repeats, printed in brackets.
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableRow {
    pub name: String,
    /// Coefficient or importance.
    pub value: f64,
    pub dispersion: Option<f64>,
    pub p_value: Option<f64>,
}

impl VariableRow {
    pub fn stars(&self) -> &'static str {
        self.p_value.map_or("", stats::stars)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BlockMetrics {
    pub r2: Option<f64>,
    pub adj_r2: Option<f64>,
    pub mse: Option<f64>,
    pub f_stat: Option<f64>,
    pub n_obs: usize,
}

/// Results of one fit, ready for tabulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub group: String,
    pub setting: Setting,
    pub model: ModelKind,
    /// Estimator description, e.g. `fixed effects`.
    pub source: String,
    /// Fingerprint of the dataset the fit came from.
    pub fingerprint: String,
    pub dispersion: Dispersion,
    pub rows: Vec<VariableRow>,
    pub metrics: BlockMetrics,
    /// Model-specific diagnostics printed below the standard metrics.
    pub extras: Vec<(String, Option<f64>)>,
}

fn is_year_dummy(name: &str) -> bool {
    name.starts_with("year_")
}

impl Block {
    /// Coefficient rows of a linear fit; year dummies are left out.
    pub fn from_linear(group: &str, setting: Setting, fingerprint: &str, fit: &LinearFit) -> Self {
        let rows = fit
            .t_tests()
            .into_iter()
            .filter(|t| !is_year_dummy(&t.name))
            .map(|t| VariableRow {
                name: t.name,
                value: t.estimate,
                dispersion: t.se,
                p_value: t.p_value,
            })
            .collect();
        let m = fit.fit_metrics();
        Block {
            group: group.to_owned(),
            setting,
            model: ModelKind::Linear,
            source: match fit.spec.effects {
                Effects::Pooled => "pooled OLS",
                Effects::Fixed => "fixed effects",
                Effects::Random => "random effects",
            }
            .to_owned(),
            fingerprint: fingerprint.to_owned(),
            dispersion: Dispersion::StdError,
            rows,
            metrics: BlockMetrics {
                r2: m.r_squared,
                adj_r2: m.adj_r_squared,
                mse: Some(m.rss / fit.n_obs as f64),
                f_stat: m.f_statistic,
                n_obs: fit.n_obs,
            },
            extras: vec![("F p-value".into(), m.f_pvalue)],
        }
    }

    /// Coefficient rows of a System GMM fit; always the dynamic setting.
    pub fn from_gmm(group: &str, fingerprint: &str, fit: &GmmFit) -> Self {
        let rows = fit
            .z_tests()
            .into_iter()
            .filter(|t| !is_year_dummy(&t.name))
            .map(|t| VariableRow {
                name: t.name,
                value: t.estimate,
                dispersion: t.se,
                p_value: t.p_value,
            })
            .collect();
        let ar = |k| fit.ar_test(k).map(|t| t.p_value);
        Block {
            group: group.to_owned(),
            setting: Setting::Dynamic,
            model: ModelKind::Gmm,
            source: "one-step system GMM".to_owned(),
            fingerprint: fingerprint.to_owned(),
            dispersion: Dispersion::StdError,
            rows,
            metrics: BlockMetrics {
                n_obs: fit.n_obs,
                ..Default::default()
            },
            extras: vec![
                ("Wald chi2".into(), fit.wald.map(|w| w.statistic)),
                ("Wald p-value".into(), fit.wald.map(|w| w.p_value)),
                ("AR(1) p-value".into(), ar(1)),
                ("AR(2) p-value".into(), ar(2)),
                ("Sargan p-value".into(), fit.sargan.map(|s| s.p_value)),
                ("Hansen p-value".into(), fit.hansen.map(|s| s.p_value)),
                ("Instruments".into(), Some(fit.instrument_count as f64)),
                ("Entities".into(), Some(fit.n_entities as f64)),
            ],
        }
    }

    /// Importance rows of a forest. P-values come from `decisions` where a
    /// variable was tested.
    pub fn from_forest(
        group: &str,
        setting: Setting,
        fingerprint: &str,
        metrics: &ForestMetrics,
        oob: Option<&OobScore>,
        importance: &PermImportanceResult,
        decisions: Option<&BTreeMap<String, SeqTestDecision>>,
    ) -> Self {
        let rows = importance
            .variables
            .iter()
            .map(|v| VariableRow {
                name: v.name.clone(),
                value: v.mean,
                dispersion: Some(v.std),
                p_value: decisions.and_then(|d| d.get(&v.name)).map(|d| d.p_estimate),
            })
            .collect();
        Block {
            group: group.to_owned(),
            setting,
            model: ModelKind::Rf,
            source: "random forest".to_owned(),
            fingerprint: fingerprint.to_owned(),
            dispersion: Dispersion::StdDev,
            rows,
            metrics: BlockMetrics {
                r2: metrics.r2,
                adj_r2: metrics.adj_r2,
                mse: Some(metrics.mse),
                f_stat: metrics.pseudo_f,
                n_obs: metrics.n_obs,
            },
            extras: vec![
                ("OOB R2".into(), oob.and_then(|o| o.oob_r2)),
                ("OOB MSE".into(), oob.map(|o| o.oob_mse)),
            ],
        }
    }

    pub fn row(&self, name: &str) -> Option<&VariableRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Run-level facts stamped on every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub dataset_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub groups: Vec<String>,
    pub provenance: Provenance,
    cells: BTreeMap<(usize, Setting, ModelKind), Block>,
}

/// Assembles blocks into the comparison grid. Groups keep first-seen order.
/// Every block must carry the provenance fingerprint.
pub fn build_report(blocks: Vec<Block>, provenance: Provenance) -> Result<ComparisonReport> {
    let mut groups: Vec<String> = Vec::new();
    let mut cells = BTreeMap::new();
    for b in blocks {
        if b.fingerprint != provenance.dataset_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: provenance.dataset_fingerprint.clone(),
                found: b.fingerprint,
            });
        }
        let g = match groups.iter().position(|g| *g == b.group) {
            Some(g) => g,
            None => {
                groups.push(b.group.clone());
                groups.len() - 1
            }
        };
        let key = (g, b.setting, b.model);
        if cells.contains_key(&key) {
            return Err(Error::InvalidConfig(format!(
                "two {} {} results for group {}",
                b.setting, b.model, b.group
            )));
        }
        cells.insert(key, b);
    }
    Ok(ComparisonReport {
        groups,
        provenance,
        cells,
    })
}

impl ComparisonReport {
    pub fn cell(&self, group: &str, setting: Setting, model: ModelKind) -> Option<&Block> {
        let g = self.groups.iter().position(|x| x == group)?;
        self.cells.get(&(g, setting, model))
    }

    /// Every grid cell in group, setting, model order; `None` marks absent.
    pub fn grid(&self) -> Vec<(&str, Setting, ModelKind, Option<&Block>)> {
        let mut out = Vec::new();
        for (g, name) in self.groups.iter().enumerate() {
            for s in Setting::ALL {
                for m in ModelKind::ALL {
                    out.push((name.as_str(), s, m, self.cells.get(&(g, s, m))));
                }
            }
        }
        out
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.cells.values()
    }
}

/// Four-decimal fixed point without negative zero.
pub fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), fmt4)
}

/// Extras that hold counts and print without decimals.
const COUNT_EXTRAS: [&str; 2] = ["Instruments", "Entities"];

const ABSENT: &str = "absent";
const MISSING: &str = "NA";

fn table_records(report: &ComparisonReport, setting: Setting, model: ModelKind) -> Vec<Vec<String>> {
    let blocks: Vec<Option<&Block>> = report.groups.iter().map(|g| report.cell(g, setting, model)).collect();
    let mut header = vec!["variable".to_owned()];
    header.extend(report.groups.iter().cloned());
    let mut out = vec![header];
    if report.groups.is_empty() {
        return out;
    }

    let mut names: Vec<&str> = Vec::new();
    let mut extras: Vec<&str> = Vec::new();
    for b in blocks.iter().flatten() {
        for r in &b.rows {
            if !names.contains(&r.name.as_str()) {
                names.push(&r.name);
            }
        }
        for (e, _) in &b.extras {
            if !extras.contains(&e.as_str()) {
                extras.push(e);
            }
        }
    }
    // the constant goes last, as in published tables
    if let Some(i) = names.iter().position(|n| *n == CONST_NAME) {
        let c = names.remove(i);
        names.push(c);
    }
    for name in names {
        let mut value = vec![name.to_owned()];
        let mut disp = vec![String::new()];
        for b in &blocks {
            match b {
                None => {
                    value.push(ABSENT.into());
                    disp.push(String::new());
                }
                Some(b) => match b.row(name) {
                    None => {
                        value.push(MISSING.into());
                        disp.push(String::new());
                    }
                    Some(r) => {
                        value.push(format!("{}{}", fmt4(r.value), r.stars()));
                        disp.push(match (r.dispersion, b.dispersion) {
                            (None, _) => MISSING.into(),
                            (Some(s), Dispersion::StdError) => format!("({})", fmt4(s)),
                            (Some(s), Dispersion::StdDev) => format!("[{}]", fmt4(s)),
                        });
                    }
                },
            }
        }
        out.push(value);
        out.push(disp);
    }
    let footer: [(&str, fn(&Block) -> String); 5] = [
        ("R2", |b| fmt_opt(b.metrics.r2)),
        ("Adj_R2", |b| fmt_opt(b.metrics.adj_r2)),
        ("MSE", |b| fmt_opt(b.metrics.mse)),
        ("F", |b| fmt_opt(b.metrics.f_stat)),
        ("N", |b| b.metrics.n_obs.to_string()),
    ];
    for (label, f) in footer {
        let mut row = vec![label.to_owned()];
        row.extend(blocks.iter().map(|b| b.map_or_else(|| ABSENT.into(), f)));
        out.push(row);
    }
    for e in extras {
        let mut row = vec![e.to_owned()];
        row.extend(blocks.iter().map(|b| match b {
            None => ABSENT.into(),
            Some(b) => {
                let v = b.extras.iter().find(|(k, _)| k == e).and_then(|(_, v)| *v);
                match v {
                    Some(n) if COUNT_EXTRAS.contains(&e) => format!("{n:.0}"),
                    _ => fmt_opt(v),
                }
            }
        }));
        out.push(row);
    }
    out
}

fn write_records(path: &Path, records: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in records {
        w.write_record(r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{}: {other:?}", path.display())),
    }
}

/// Tables written by [`emit_tables`], as `(file name, setting, model)`.
pub const TABLES: [(&str, Setting, ModelKind); 5] = [
    ("table_static_linear.csv", Setting::Static, ModelKind::Linear),
    ("table_dynamic_linear.csv", Setting::Dynamic, ModelKind::Linear),
    ("table_dynamic_gmm.csv", Setting::Dynamic, ModelKind::Gmm),
    ("rf_importance_static.csv", Setting::Static, ModelKind::Rf),
    ("rf_importance_dynamic.csv", Setting::Dynamic, ModelKind::Rf),
];

/// Writes the coefficient and importance tables, the model comparison and
/// the full-precision companion under `dir/tables`. Returns the paths.
pub fn emit_tables(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let tables = dir.join("tables");
    std::fs::create_dir_all(&tables).map_err(|e| Error::io(&tables, e))?;
    let mut written = Vec::new();
    for (file, setting, model) in TABLES {
        let path = tables.join(file);
        write_records(&path, &table_records(report, setting, model))?;
        written.push(path);
    }

    let mut cmp = vec![["group", "setting", "model", "source", "r2", "adj_r2", "mse", "f_stat", "n_obs"]
        .map(String::from)
        .to_vec()];
    for (g, s, m, b) in report.grid() {
        let mut row = vec![g.to_owned(), s.to_string(), m.to_string()];
        match b {
            None => row.extend(std::iter::repeat_n(ABSENT.to_owned(), 6)),
            Some(b) => row.extend([
                b.source.clone(),
                fmt_opt(b.metrics.r2),
                fmt_opt(b.metrics.adj_r2),
                fmt_opt(b.metrics.mse),
                fmt_opt(b.metrics.f_stat),
                b.metrics.n_obs.to_string(),
            ]),
        }
        cmp.push(row);
    }
    let path = tables.join("model_comparison.csv");
    write_records(&path, &cmp)?;
    written.push(path);

    let full = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let mut rows = vec![["group", "setting", "model", "kind", "name", "value", "dispersion", "p_value"]
        .map(String::from)
        .to_vec()];
    for b in report.blocks() {
        let key = [b.group.clone(), b.setting.to_string(), b.model.to_string()];
        for r in &b.rows {
            let mut row = key.to_vec();
            row.extend(["variable".into(), r.name.clone(), r.value.to_string(), full(r.dispersion), full(r.p_value)]);
            rows.push(row);
        }
        let m = &b.metrics;
        let metrics = [
            ("r2", m.r2),
            ("adj_r2", m.adj_r2),
            ("mse", m.mse),
            ("f_stat", m.f_stat),
            ("n_obs", Some(m.n_obs as f64)),
        ];
        for (name, v) in metrics.into_iter().chain(b.extras.iter().map(|(k, v)| (k.as_str(), *v))) {
            let mut row = key.to_vec();
            row.extend(["metric".into(), name.to_owned(), full(v), String::new(), String::new()]);
            rows.push(row);
        }
    }
    let path = tables.join("results_full.csv");
    write_records(&path, &rows)?;
    written.push(path);
    Ok(written)
}

/// One cell of a parsed table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value { value: f64, stars: String },
    StdError(f64),
    StdDev(f64),
    Count(usize),
    Missing,
    Absent,
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub groups: Vec<String>,
    /// Row label (empty for dispersion rows) and cells.
    pub rows: Vec<(String, Vec<Cell>)>,
}

impl ParsedTable {
    /// Value cell and its dispersion cell for `variable` in column `group`.
    pub fn lookup(&self, variable: &str, group: &str) -> Option<(&Cell, &Cell)> {
        let g = self.groups.iter().position(|x| x == group)?;
        let i = self.rows.iter().position(|(l, _)| l == variable)?;
        let disp = self.rows.get(i + 1).map(|(_, c)| &c[g]).unwrap_or(&Cell::Empty);
        Some((&self.rows[i].1[g], disp))
    }
}

fn parse_cell(s: &str) -> Result<Cell> {
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::Schema(format!("unreadable table cell {s:?}")))
    };
    Ok(match s {
        "" => Cell::Empty,
        ABSENT => Cell::Absent,
        MISSING => Cell::Missing,
        _ if s.starts_with('(') && s.ends_with(')') => Cell::StdError(num(&s[1..s.len() - 1])?),
        _ if s.starts_with('[') && s.ends_with(']') => Cell::StdDev(num(&s[1..s.len() - 1])?),
        _ if !s.contains('.') && s.parse::<usize>().is_ok() => Cell::Count(s.parse().expect("checked")),
        _ => {
            let body = s.trim_end_matches('*');
            Cell::Value {
                value: num(body)?,
                stars: s[body.len()..].to_owned(),
            }
        }
    })
}

/// Reads back a table written by [`emit_tables`].
pub fn parse_table(text: &str) -> Result<ParsedTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Schema("empty table".into()))??;
    let groups: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let label = rec.get(0).unwrap_or_default().to_owned();
        let cells = rec.iter().skip(1).map(parse_cell).collect::<Result<Vec<_>>>()?;
        rows.push((label, cells));
    }
    Ok(ParsedTable { groups, rows })
}

/// One bar of an importance figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub name: String,
    pub score: f64,
    pub std: f64,
    pub p_value: f64,
}

impl Bar {
    /// Bars at or below this p-value are drawn in colour.
    pub const THRESHOLD: f64 = 0.05;

    pub fn significant(&self) -> bool {
        self.p_value <= Self::THRESHOLD
    }
}

/// Pairs importance scores with test decisions; both must name the same
/// variables.
pub fn importance_bars(
    scores: &PermImportanceResult,
    decisions: &BTreeMap<String, SeqTestDecision>,
) -> Result<Vec<Bar>> {
    if scores.variables.len() != decisions.len() {
        return Err(Error::Dimension(format!(
            "{} scored variables but {} decisions",
            scores.variables.len(),
            decisions.len()
        )));
    }
    scores
        .variables
        .iter()
        .map(|v| {
            let d = decisions
                .get(&v.name)
                .ok_or_else(|| Error::UnknownVariable(v.name.clone()))?;
            Ok(Bar {
                name: v.name.clone(),
                score: v.mean,
                std: v.std,
                p_value: d.p_estimate,
            })
        })
        .collect()
}

pub const COLOR_SIGNIFICANT: &str = "#2b6cb0";
pub const COLOR_GRAY: &str = "#a0a0a0";

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bar chart, largest score on top, gray when `p > 0.05`, with
/// whiskers of one standard deviation.
pub fn render_importance_svg(bars: &[Bar], title: &str) -> Result<String> {
    if bars.is_empty() {
        return Err(Error::InsufficientData("no variables to plot".into()));
    }
    let mut sorted: Vec<&Bar> = bars.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));

    let (label_w, plot_w, row_h, top, bottom) = (160.0, 420.0, 26.0, 40.0, 30.0);
    let lo = sorted.iter().map(|b| (b.score - b.std).min(0.0)).fold(0.0, f64::min);
    let hi = sorted.iter().map(|b| b.score + b.std).fold(0.0, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |v: f64| label_w + (v - lo) / span * plot_w;
    let width = label_w + plot_w + 40.0;
    let height = top + row_h * sorted.len() as f64 + bottom;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" font-size="14">{}</text>"#, label_w, xml_escape(title));
    let zero = x(0.0);
    let _ = writeln!(
        s,
        r#"<line x1="{zero:.2}" y1="{top:.2}" x2="{zero:.2}" y2="{:.2}" stroke="black"/>"#,
        height - bottom
    );
    for (i, b) in sorted.iter().enumerate() {
        let y = top + row_h * i as f64;
        let (x0, x1) = (x(b.score.min(0.0)), x(b.score.max(0.0)));
        let fill = if b.significant() { COLOR_SIGNIFICANT } else { COLOR_GRAY };
        let name = xml_escape(&b.name);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{name}</text>"#,
            label_w - 6.0,
            y + row_h * 0.65
        );
        let _ = writeln!(
            s,
            r#"<rect class="bar" data-variable="{name}" data-p="{}" x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            b.p_value,
            y + 4.0,
            x1 - x0,
            row_h - 8.0
        );
        let cy = y + row_h / 2.0;
        let _ = writeln!(
            s,
            r#"<line class="whisker" x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}" stroke="black"/>"#,
            x(b.score - b.std),
            x(b.score + b.std)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" fill="{COLOR_GRAY}">gray: p &gt; 0.05</text>"#,
        label_w,
        height - 8.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_importance_figure(bars: &[Bar], title: &str, path: &Path) -> Result<()> {
    let svg = render_importance_svg(bars, title)?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Writes `figures/importance_{group}_{setting}.svg` for each forest block
/// whose variables all carry a p-value.
pub fn emit_figures(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for b in report.blocks().filter(|b| b.model == ModelKind::Rf) {
        let bars: Option<Vec<Bar>> = b
            .rows
            .iter()
            .map(|r| {
                Some(Bar {
                    name: r.name.clone(),
                    score: r.value,
                    std: r.dispersion.unwrap_or(0.0),
                    p_value: r.p_value?,
                })
            })
            .collect();
        let Some(bars) = bars.filter(|b| !b.is_empty()) else {
            continue;
        };
        let path = dir
            .join("figures")
            .join(format!("importance_{}_{}.svg", b.group, b.setting));
        emit_importance_figure(&bars, &format!("{} ({})", b.group, b.setting), &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Contents of `provenance.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub provenance: Provenance,
    /// SHA-256 of every artifact, keyed by path relative to the output dir.
    pub artifacts: BTreeMap<String, String>,
    /// SHA-256 over the artifact list; stable across identical runs.
    pub artifact_hash: String,
    /// Seconds since the Unix epoch. The only run-dependent field.
    pub created_unix: u64,
}

pub const MANIFEST_FILE: &str = "provenance.json";

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path != root.join(MANIFEST_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

/// Hashes every file under `dir` and writes the manifest.
pub fn write_manifest(dir: &Path, provenance: &Provenance) -> Result<Manifest> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    let mut artifacts = BTreeMap::new();
    for f in files {
        let bytes = std::fs::read(&f).map_err(|e| Error::io(&f, e))?;
        let rel = f
            .strip_prefix(dir)
            .expect("under dir")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        artifacts.insert(rel, hex::encode(Sha256::digest(&bytes)));
    }
    let mut h = Sha256::new();
    for (k, v) in &artifacts {
        h.update(k.as_bytes());
        h.update([0]);
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    let manifest = Manifest {
        tool: "panelkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        provenance: provenance.clone(),
        artifacts,
        artifact_hash: hex::encode(h.finalize()),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
