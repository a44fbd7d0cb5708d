//! Entity-by-year panel storage, derived variables and descriptive statistics.
//!
//! A [`PanelDataset`] is immutable: every transformation returns a new
//! dataset. Rows are kept sorted by entity code and then year, and missing
//! cells are stored explicitly as `None`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stats;

/// Analytical role of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Dependent,
    Regressor,
    Control,
    Instrument,
    Derived,
}

/// How a derived column was produced from its parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Derivation {
    Lag { parent: String, k: u32 },
    Log { parent: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: Option<Role>,
    pub derivation: Option<Derivation>,
    values: Vec<Option<f64>>,
}

impl Column {
    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }
}

/// A cell that was present in the input but could not be parsed as a number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub entity: String,
    pub year: i32,
    pub column: String,
    pub raw: String,
}

/// Names of the identifier columns in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub entity_column: String,
    pub year_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            entity_column: "Code".to_owned(),
            year_column: "Year".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PanelDataset {
    entities: Vec<String>,
    entity_of: Vec<usize>,
    year_of: Vec<i32>,
    columns: Vec<Column>,
    index: HashMap<(usize, i32), usize>,
    warnings: Vec<ParseWarning>,
}

/// Row-wise construction of a dataset.
///
/// ```
/// use panelkit::dataset::PanelDataset;
///
/// let ds = PanelDataset::builder(["x"])
///     .row("USA", 2000, [1.0])
///     .row("USA", 2001, [2.0])
///     .row("CAN", 2000, [3.0])
///     .build()
///     .unwrap();
/// assert_eq!(ds.entities(), ["CAN", "USA"]);
/// assert_eq!(ds.years(), vec![2000, 2001]);
/// ```
#[derive(Debug, Clone, Default)]
pub struct PanelBuilder {
    names: Vec<String>,
    codes: Vec<String>,
    years: Vec<i32>,
    rows: Vec<Vec<Option<f64>>>,
}

impl PanelBuilder {
    pub fn row<I>(self, entity: &str, year: i32, values: I) -> Self
    where
        I: IntoIterator<Item = f64>,
    {
        self.row_opt(entity, year, values.into_iter().map(Some))
    }

    /// Adds a row whose cells may be missing.
    pub fn row_opt<I>(mut self, entity: &str, year: i32, values: I) -> Self
    where
        I: IntoIterator<Item = Option<f64>>,
    {
        self.codes.push(entity.to_owned());
        self.years.push(year);
        self.rows.push(values.into_iter().collect());
        self
    }

    pub fn build(self) -> Result<PanelDataset> {
        let p = self.names.len();
        let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(self.rows.len()); p];
        for (i, row) in self.rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::Dimension(format!(
                    "row {i} has {} values, expected {p}",
                    row.len()
                )));
            }
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        PanelDataset::from_columns(
            self.codes,
            self.years,
            self.names.into_iter().zip(columns).collect(),
        )
    }
}

impl PanelDataset {
    pub fn builder<I, S>(names: I) -> PanelBuilder
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PanelBuilder {
            names: names.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    /// Builds a dataset from parallel identifier vectors and named columns.
    /// Rows may arrive in any order; they are sorted by (entity, year).
    pub fn from_columns(
        codes: Vec<String>,
        years: Vec<i32>,
        columns: Vec<(String, Vec<Option<f64>>)>,
    ) -> Result<Self> {
        let n = codes.len();
        if years.len() != n {
            return Err(Error::Dimension(format!(
                "{n} entity codes but {} years",
                years.len()
            )));
        }
        for (name, values) in &columns {
            if values.len() != n {
                return Err(Error::Dimension(format!(
                    "column `{name}` has {} values, expected {n}",
                    values.len()
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| codes[a].cmp(&codes[b]).then(years[a].cmp(&years[b])));
        for w in order.windows(2) {
            if codes[w[0]] == codes[w[1]] && years[w[0]] == years[w[1]] {
                return Err(Error::DuplicateObservation {
                    entity: codes[w[0]].clone(),
                    year: years[w[0]],
                });
            }
        }

        let mut entities: Vec<String> = codes.clone();
        entities.sort();
        entities.dedup();
        let entity_of: Vec<usize> = order
            .iter()
            .map(|&r| entities.binary_search(&codes[r]).expect("code present"))
            .collect();
        let year_of: Vec<i32> = order.iter().map(|&r| years[r]).collect();
        let columns = columns
            .into_iter()
            .map(|(name, values)| Column {
                name,
                role: None,
                derivation: None,
                values: order.iter().map(|&r| values[r]).collect(),
            })
            .collect();
        Ok(Self::assemble(entities, entity_of, year_of, columns, Vec::new()))
    }

    fn assemble(
        entities: Vec<String>,
        entity_of: Vec<usize>,
        year_of: Vec<i32>,
        columns: Vec<Column>,
        warnings: Vec<ParseWarning>,
    ) -> Self {
        let index = entity_of
            .iter()
            .zip(&year_of)
            .enumerate()
            .map(|(r, (&e, &y))| ((e, y), r))
            .collect();
        PanelDataset {
            entities,
            entity_of,
            year_of,
            columns,
            index,
            warnings,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.year_of.len()
    }

    /// Sorted entity codes.
    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    /// Sorted distinct calendar years.
    pub fn years(&self) -> Vec<i32> {
        let mut ys = self.year_of.clone();
        ys.sort_unstable();
        ys.dedup();
        ys
    }

    /// Entity index (into [`entities`](Self::entities)) of a row.
    pub fn entity_index(&self, row: usize) -> usize {
        self.entity_of[row]
    }

    pub fn entity(&self, row: usize) -> &str {
        &self.entities[self.entity_of[row]]
    }

    pub fn year(&self, row: usize) -> i32 {
        self.year_of[row]
    }

    /// Row holding `(entity, year)`, if observed.
    pub fn row_of(&self, entity: &str, year: i32) -> Option<usize> {
        let e = self.entities.binary_search_by(|c| c.as_str().cmp(entity)).ok()?;
        self.index.get(&(e, year)).copied()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    pub fn values(&self, name: &str) -> Result<&[Option<f64>]> {
        self.column(name).map(|c| c.values.as_slice())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    /// Cells that could not be parsed when the data was loaded.
    pub fn parse_warnings(&self) -> &[ParseWarning] {
        &self.warnings
    }

    /// Returns a copy with the given roles attached to columns.
    pub fn with_roles(&self, roles: &BTreeMap<String, Role>) -> Result<Self> {
        let mut out = self.clone();
        for (name, role) in roles {
            let col = out
                .columns
                .iter_mut()
                .find(|c| &c.name == name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            col.role = Some(*role);
        }
        Ok(out)
    }

    /// Rows with a value in every listed column (listwise deletion).
    pub fn complete_rows<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let cols = names
            .iter()
            .map(|n| self.values(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.n_rows())
            .filter(|&r| cols.iter().all(|c| c[r].is_some()))
            .collect())
    }

    /// Keeps only the listed entities. Unknown codes are ignored.
    pub fn select_entities<S: AsRef<str>>(&self, codes: &[S]) -> Self {
        let keep: std::collections::HashSet<&str> = codes.iter().map(AsRef::as_ref).collect();
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&r| keep.contains(self.entity(r)))
            .collect();
        self.take_rows(&rows)
    }

    fn take_rows(&self, rows: &[usize]) -> Self {
        let mut entities: Vec<String> = rows.iter().map(|&r| self.entity(r).to_owned()).collect();
        entities.dedup();
        let entity_of = rows
            .iter()
            .map(|&r| entities.binary_search_by(|c| c.as_str().cmp(self.entity(r))).unwrap())
            .collect();
        let year_of = rows.iter().map(|&r| self.year_of[r]).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                values: rows.iter().map(|&r| c.values[r]).collect(),
                ..c.clone()
            })
            .collect();
        Self::assemble(entities, entity_of, year_of, columns, self.warnings.clone())
    }

    fn with_column(&self, column: Column) -> Self {
        let mut out = self.clone();
        match out.columns.iter_mut().find(|c| c.name == column.name) {
            Some(slot) => *slot = column,
            None => out.columns.push(column),
        }
        out
    }

    /// Adds `<name>(t-k)` for each variable. The lag is keyed by calendar
    /// year within an entity, so gaps yield missing values and shifting never
    /// crosses entity boundaries.
    pub fn add_lags<S: AsRef<str>>(&self, vars: &[S], k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("lag order must be at least 1".into()));
        }
        let mut out = self.clone();
        for var in vars {
            let var = var.as_ref();
            let src = self.values(var)?;
            let values = (0..self.n_rows())
                .map(|r| {
                    let key = (self.entity_of[r], self.year_of[r] - k as i32);
                    self.index.get(&key).and_then(|&lr| src[lr])
                })
                .collect();
            out = out.with_column(Column {
                name: lag_name(var, k),
                role: Some(Role::Derived),
                derivation: Some(Derivation::Lag {
                    parent: var.to_owned(),
                    k,
                }),
                values,
            });
        }
        Ok(out)
    }

    /// Adds `LN_<name>` holding the natural logarithm of each variable.
    pub fn log_transform<S: AsRef<str>>(&self, vars: &[S]) -> Result<Self> {
        let mut out = self.clone();
        for var in vars {
            let var = var.as_ref();
            let src = self.values(var)?;
            let mut values = Vec::with_capacity(src.len());
            for (r, v) in src.iter().enumerate() {
                values.push(match *v {
                    Some(x) if x > 0.0 => Some(x.ln()),
                    Some(x) => {
                        return Err(Error::NonPositive {
                            variable: var.to_owned(),
                            entity: self.entity(r).to_owned(),
                            year: self.year(r),
                            value: x,
                        })
                    }
                    None => None,
                });
            }
            out = out.with_column(Column {
                name: log_name(var),
                role: Some(Role::Derived),
                derivation: Some(Derivation::Log {
                    parent: var.to_owned(),
                }),
                values,
            });
        }
        Ok(out)
    }

    /// Drops every observation where one of `vars` falls outside the bounds
    /// given by `rule`. Bounds are computed per variable over all non-missing
    /// cells. The log holds one entry per dropped row, naming the first
    /// offending variable in `vars` order.
    pub fn remove_outliers<S: AsRef<str>>(
        &self,
        vars: &[S],
        rule: OutlierRule,
    ) -> Result<(Self, Vec<OutlierRemoval>)> {
        let mut bounds = Vec::with_capacity(vars.len());
        for var in vars {
            let var = var.as_ref();
            let present: Vec<f64> = self.values(var)?.iter().flatten().copied().collect();
            bounds.push((var, rule.bounds(&present)));
        }
        let mut keep = Vec::with_capacity(self.n_rows());
        let mut log = Vec::new();
        for r in 0..self.n_rows() {
            let hit = bounds.iter().find_map(|(var, b)| {
                let (lower, upper) = (*b)?;
                let v = self.values(var).ok()?[r]?;
                (v < lower || v > upper).then(|| OutlierRemoval {
                    entity: self.entity(r).to_owned(),
                    year: self.year(r),
                    variable: (*var).to_owned(),
                    value: v,
                    lower,
                    upper,
                })
            });
            match hit {
                Some(entry) => log.push(entry),
                None => keep.push(r),
            }
        }
        Ok((self.take_rows(&keep), log))
    }

    /// Descriptive statistics for every column.
    pub fn describe(&self) -> DescriptiveStats {
        let names: Vec<&str> = self.column_names();
        self.describe_columns(&names).expect("own columns")
    }

    pub fn describe_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<DescriptiveStats> {
        let columns = names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                let xs: Vec<f64> = self.values(n)?.iter().flatten().copied().collect();
                Ok(ColumnStats::compute(n, &xs))
            })
            .collect::<Result<_>>()?;
        Ok(DescriptiveStats { columns })
    }

    /// Pearson correlations on pairwise-complete observations.
    pub fn correlation_matrix<S: AsRef<str>>(&self, vars: &[S]) -> Result<CorrelationMatrix> {
        let cols = vars
            .iter()
            .map(|v| self.values(v.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let k = cols.len();
        let mut values = vec![vec![None; k]; k];
        for i in 0..k {
            values[i][i] = Some(1.0);
            for j in 0..i {
                let pairs: Vec<(f64, f64)> = cols[i]
                    .iter()
                    .zip(cols[j])
                    .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                    .collect();
                let r = pearson(&pairs);
                values[i][j] = r;
                values[j][i] = r;
            }
        }
        Ok(CorrelationMatrix {
            names: vars.iter().map(|v| v.as_ref().to_owned()).collect(),
            values,
        })
    }

    /// SHA-256 over the canonical content (identifiers, names, exact bits).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update([0u8]);
        }
        for r in 0..self.n_rows() {
            h.update(self.entity(r).as_bytes());
            h.update(self.year(r).to_le_bytes());
            for c in &self.columns {
                match c.values[r] {
                    Some(v) => h.update(v.to_bits().to_le_bytes()),
                    None => h.update([0xff; 9]),
                }
            }
        }
        hex::encode(h.finalize())
    }

    /// Writes the dataset back to CSV with `Code`/`Year` identifiers.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["Code".to_owned(), "Year".to_owned()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = vec![self.entity(r).to_owned(), self.year(r).to_string()];
            rec.extend(self.columns.iter().map(|c| match c.values[r] {
                Some(v) => format!("{v}"),
                None => String::new(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn lag_name(var: &str, k: u32) -> String {
    format!("{var}(t-{k})")
}

pub fn log_name(var: &str) -> String {
    format!("LN_{var}")
}

/// Loads a panel from a CSV file with `Code` and `Year` identifier columns.
pub fn load_csv(path: impl AsRef<Path>, roles: &BTreeMap<String, Role>) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &CsvSchema::default(), roles)
}

pub fn read_csv<R: Read>(
    reader: R,
    schema: &CsvSchema,
    roles: &BTreeMap<String, Role>,
) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing identifier column `{name}`")))
    };
    let entity_col = find(&schema.entity_column)?;
    let year_col = find(&schema.year_column)?;
    let data_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != entity_col && i != year_col)
        .collect();

    let mut codes = Vec::new();
    let mut years = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); data_cols.len()];
    let mut warnings = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let code = rec.get(entity_col).unwrap_or("").to_owned();
        if code.is_empty() {
            return Err(Error::Schema(format!("line {line}: empty entity code")));
        }
        let raw_year = rec.get(year_col).unwrap_or("");
        let year: i32 = raw_year
            .parse()
            .map_err(|_| Error::Schema(format!("line {line}: invalid year `{raw_year}`")))?;
        for (slot, &c) in columns.iter_mut().zip(&data_cols) {
            let raw = rec.get(c).unwrap_or("");
            let value = match raw {
                "" | "NA" | "NaN" | "nan" | "." => None,
                s => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => {
                        warnings.push(ParseWarning {
                            line,
                            entity: code.clone(),
                            year,
                            column: header[c].clone(),
                            raw: s.to_owned(),
                        });
                        None
                    }
                },
            };
            slot.push(value);
        }
        codes.push(code);
        years.push(year);
    }
    let named = data_cols.iter().map(|&c| header[c].clone()).zip(columns).collect();
    let mut ds = PanelDataset::from_columns(codes, years, named)?.with_roles(roles)?;
    ds.warnings = warnings;
    Ok(ds)
}

/// Rule deciding which observations count as outliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum OutlierRule {
    None,
    /// Outside `[Q1 - k*IQR, Q3 + k*IQR]`.
    Iqr { k: f64 },
    /// More than `k` sample standard deviations from the mean.
    Zscore { k: f64 },
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::Iqr { k: 1.5 }
    }
}

impl OutlierRule {
    fn bounds(&self, xs: &[f64]) -> Option<(f64, f64)> {
        if xs.is_empty() {
            return None;
        }
        match *self {
            OutlierRule::None => None,
            OutlierRule::Iqr { k } => {
                let mut s = xs.to_vec();
                s.sort_by(f64::total_cmp);
                let q1 = stats::quantile_sorted(&s, 0.25);
                let q3 = stats::quantile_sorted(&s, 0.75);
                let iqr = q3 - q1;
                Some((q1 - k * iqr, q3 + k * iqr))
            }
            OutlierRule::Zscore { k } => {
                if xs.len() < 2 {
                    return None;
                }
                let m = stats::mean(xs);
                let sd = stats::sample_variance(xs).sqrt();
                Some((m - k * sd, m + k * sd))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierRemoval {
    pub entity: String,
    pub year: i32,
    pub variable: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Writes a removal log as `entity,year,variable,value,lower,upper`.
pub fn write_removal_log(path: &Path, log: &[OutlierRemoval]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["entity", "year", "variable", "value", "lower", "upper"])?;
    for e in log {
        w.serialize(e)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Summary of one column. Fields are `None` when undefined (fewer than two
/// values, or a kurtosis of a constant column).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub name: String,
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub std_dev: Option<f64>,
    pub skewness: Option<f64>,
    /// Excess (Fisher) kurtosis.
    pub kurtosis: Option<f64>,
}

impl ColumnStats {
    fn compute(name: &str, xs: &[f64]) -> Self {
        let n = xs.len();
        if n < 2 {
            return ColumnStats {
                name: name.to_owned(),
                count: n,
                mean: None,
                median: None,
                min: None,
                max: None,
                std_dev: None,
                skewness: None,
                kurtosis: None,
            };
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = stats::mean(xs);
        let central = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n as f64;
        let (m2, m3, m4) = (central(2), central(3), central(4));
        let (skewness, kurtosis) = if m2 > 0.0 {
            (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
        } else {
            (Some(0.0), None)
        };
        ColumnStats {
            name: name.to_owned(),
            count: n,
            mean: Some(mean),
            median: Some(stats::quantile_sorted(&sorted, 0.5)),
            min: Some(sorted[0]),
            max: Some(sorted[n - 1]),
            std_dev: Some(if m2 > 0.0 { stats::sample_variance(xs).sqrt() } else { 0.0 }),
            skewness,
            kurtosis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub columns: Vec<ColumnStats>,
}

impl DescriptiveStats {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Table-1 style CSV with values at 4 decimals; undefined cells empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("variable,mean,median,min,max,std_dev,skewness,kurtosis,count\n");
        for c in &self.columns {
            let _ = write!(s, "{}", c.name);
            for v in [c.mean, c.median, c.min, c.max, c.std_dev, c.skewness, c.kurtosis] {
                let _ = write!(s, ",{}", fmt4(v));
            }
            let _ = writeln!(s, ",{}", c.count);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("variable");
        for n in &self.names {
            let _ = write!(s, ",{n}");
        }
        s.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            s.push_str(name);
            for v in row {
                let _ = write!(s, ",{}", fmt4(*v));
            }
            s.push('\n');
        }
        s
    }
}

fn fmt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
