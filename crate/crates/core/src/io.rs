//! Plain-text artifacts: point clouds, cost matrices, plans, potentials and
//! experiment records.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly. Files are UTF-8 with `\n` line endings.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::DenseAffinity;
use crate::cost::CostMatrix;
use crate::datasets::{CloudParams, LabeledCloud};
use crate::error::{Error, Result};
use crate::plan::{DualPotential, SparsePlan};
use crate::spectral::Labels;

/// Round-trip float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(parse_err(path, 1, "file is empty"));
    }
    Ok(text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Numeric rows of a comma-separated file, skipping one non-numeric header
/// line if present. Returns `(first data line number, rows)`.
fn read_numeric_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, idx + 1, e.to_string()))?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push((line, values)),
            Err(e) if rows.is_empty() && idx == 0 => {
                // header line
                let _ = e;
            }
            Err(e) => return Err(parse_err(path, line, format!("not a number: {e}"))),
        }
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let width = rows[0].1.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(parse_err(
            path,
            *line,
            format!("expected {width} columns, found {}", r.len()),
        ));
    }
    for (line, r) in &rows {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(path, *line, "non-finite value"));
        }
    }
    Ok(rows)
}

/// One point per row; a non-numeric first line is treated as a header.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<LabeledCloud> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let points = rows.into_iter().map(|(_, r)| r).collect();
    LabeledCloud::new(
        points,
        None,
        CloudParams {
            generator: format!("csv:{}", path.display()),
            ..CloudParams::default()
        },
    )
}

/// Writes a header `x0,x1,...` and one point per row.
pub fn write_points_csv(path: impl AsRef<Path>, cloud: &LabeledCloud) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..cloud.dim()).map(|k| format!("x{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in &cloud.points {
        let row: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

/// JSON sidecar for a points file: generator parameters, seed, labels and
/// curve parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSidecar {
    pub params: CloudParams,
    pub labels: Option<Labels>,
    pub parameter: Option<Vec<f64>>,
}

/// `points.csv` → `points.json`
pub fn sidecar_path(points_path: &Path) -> PathBuf {
    points_path.with_extension("json")
}

/// Writes the points CSV and its JSON sidecar.
pub fn write_cloud(path: impl AsRef<Path>, cloud: &LabeledCloud) -> Result<()> {
    let path = path.as_ref();
    write_points_csv(path, cloud)?;
    let side = CloudSidecar {
        params: cloud.params.clone(),
        labels: cloud.labels.clone(),
        parameter: cloud.parameter.clone(),
    };
    write_text(
        &sidecar_path(path),
        &(serde_json::to_string_pretty(&side)? + "\n"),
    )
}

/// Reads a points CSV and, when present, its JSON sidecar.
pub fn read_cloud(path: impl AsRef<Path>) -> Result<LabeledCloud> {
    let path = path.as_ref();
    let mut cloud = read_points_csv(path)?;
    let side_path = sidecar_path(path);
    if side_path.exists() {
        let side: CloudSidecar = serde_json::from_str(&fs::read_to_string(&side_path)?)?;
        let mut merged = LabeledCloud::new(cloud.points, side.labels, side.params)?;
        if let Some(t) = &side.parameter {
            if t.len() != merged.len() {
                return Err(Error::DimensionMismatch {
                    expected: merged.len(),
                    found: t.len(),
                });
            }
        }
        merged.parameter = side.parameter;
        cloud = merged;
    }
    Ok(cloud)
}

/// Labels as a single-column CSV.
pub fn write_labels_csv(path: impl AsRef<Path>, labels: &Labels) -> Result<()> {
    let mut out = String::new();
    for l in labels.as_slice() {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Labels> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let mut labels = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if r.len() != 1 || r[0] < 0.0 || r[0].fract() != 0.0 {
            return Err(parse_err(
                path,
                line,
                "expected one nonnegative integer label",
            ));
        }
        labels.push(r[0] as usize);
    }
    Ok(Labels(labels))
}

/// Dense cost matrix, one row per line.
pub fn read_cost_csv(path: impl AsRef<Path>, half_factor: bool) -> Result<CostMatrix> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let n = rows.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != n) {
        return Err(parse_err(
            path,
            *line,
            format!("cost matrix row has {} entries, expected {n}", r.len()),
        ));
    }
    let entries = rows.into_iter().flat_map(|(_, r)| r).collect();
    CostMatrix::from_dense(n, entries, half_factor)
}

pub fn write_cost_csv(path: impl AsRef<Path>, c: &CostMatrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..c.n() {
        let row: Vec<String> = c.row(i).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

/// Dense symmetric nonnegative affinity, one row per line. The matrix is
/// flagged hollow when its diagonal is zero.
pub fn read_affinity_csv(path: impl AsRef<Path>) -> Result<DenseAffinity> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let n = rows.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != n) {
        return Err(parse_err(
            path,
            *line,
            format!("affinity row has {} entries, expected {n}", r.len()),
        ));
    }
    let entries: Vec<f64> = rows.into_iter().flat_map(|(_, r)| r).collect();
    let hollow = (0..n).all(|i| entries[i * n + i] == 0.0);
    DenseAffinity::new(n, entries, hollow)
}

pub fn write_affinity_csv(path: impl AsRef<Path>, a: &DenseAffinity) -> Result<()> {
    let mut out = String::new();
    for i in 0..a.n() {
        let row: Vec<String> = a.row(i).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

/// Header information of a plan file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanHeader {
    pub n: usize,
    pub epsilon: Option<f64>,
}

/// `# n=<N> eps=<ε> symmetric hollow`, then `i,j,value` with `i < j`, sorted.
pub fn write_plan_coo(
    path: impl AsRef<Path>,
    plan: &SparsePlan,
    epsilon: Option<f64>,
) -> Result<()> {
    let mut out = String::with_capacity(48 * (plan.nnz() + 1));
    let eps = epsilon.map_or_else(|| "none".to_string(), fmt_f64);
    out.push_str(&format!("# n={} eps={} symmetric hollow\n", plan.n(), eps));
    for &(i, j, v) in plan.triplets() {
        out.push_str(&format!("{i},{j},{}\n", fmt_f64(v)));
    }
    write_text(path.as_ref(), &out)
}

/// Writes a dense affinity in the plan format; fails if the diagonal is not
/// zero, since the format stores `i < j` only.
pub fn write_affinity_coo(
    path: impl AsRef<Path>,
    a: &DenseAffinity,
    epsilon: Option<f64>,
) -> Result<()> {
    if let Some(i) = (0..a.n()).find(|&i| a.get(i, i) != 0.0) {
        return Err(Error::invalid(format!(
            "affinity has a nonzero diagonal at {i}; the COO format is hollow"
        )));
    }
    write_plan_coo(path, &a.to_sparse(), epsilon)
}

fn parse_plan_header(path: &Path, line: &str) -> Result<PlanHeader> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "missing `# n=<N> ...` header"))?;
    let mut n = None;
    let mut epsilon = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = Some(
                v.parse::<usize>()
                    .map_err(|e| parse_err(path, 1, format!("bad n: {e}")))?,
            );
        } else if let Some(v) = tok.strip_prefix("eps=") {
            if v != "none" {
                epsilon = Some(
                    v.parse::<f64>()
                        .map_err(|e| parse_err(path, 1, format!("bad eps: {e}")))?,
                );
            }
        }
    }
    let n = n.ok_or_else(|| parse_err(path, 1, "header lacks n=<N>"))?;
    Ok(PlanHeader { n, epsilon })
}

/// Reads a plan written by [`write_plan_coo`]. Rows with `j ≤ i`, indices
/// beyond `n`, duplicates and nonpositive values are errors naming the line.
pub fn read_plan_coo(path: impl AsRef<Path>) -> Result<(SparsePlan, PlanHeader)> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header = parse_plan_header(path, lines.next().unwrap_or_default())?;
    let rest_start = text.find('\n').map_or(text.len(), |p| p + 1);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[rest_start..]);
    let mut triplets = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        let line = record.position().map_or(line, |p| p.line() as usize + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 3 {
            return Err(parse_err(
                path,
                line,
                format!("expected `i,j,value`, found {} fields", record.len()),
            ));
        }
        let i: usize = record[0]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad row index: {e}")))?;
        let j: usize = record[1]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad column index: {e}")))?;
        let v: f64 = record[2]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad value: {e}")))?;
        if j <= i {
            return Err(parse_err(
                path,
                line,
                format!("entry ({i}, {j}) must have i < j"),
            ));
        }
        if j >= header.n {
            return Err(parse_err(
                path,
                line,
                format!("index {j} out of range for n = {}", header.n),
            ));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(parse_err(
                path,
                line,
                format!("value {v} must be positive and finite"),
            ));
        }
        if let Some(p) = prev {
            if (i, j) <= p {
                return Err(parse_err(
                    path,
                    line,
                    format!("entry ({i}, {j}) out of order or duplicated"),
                ));
            }
        }
        prev = Some((i, j));
        triplets.push((i, j, v));
    }
    Ok((SparsePlan::from_triplets(header.n, triplets)?, header))
}

/// One value per line.
pub fn write_potential_csv(path: impl AsRef<Path>, u: &DualPotential) -> Result<()> {
    let mut out = String::new();
    for v in u.values() {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

pub fn read_potential_csv(path: impl AsRef<Path>) -> Result<DualPotential> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    if let Some((line, _)) = rows.iter().find(|(_, r)| r.len() != 1) {
        return Err(parse_err(
            path,
            *line,
            "potential file must have one column",
        ));
    }
    DualPotential::new(rows.into_iter().map(|(_, r)| r[0]).collect())
}

/// `n × ℓ` coordinates or any other numeric table with a header row.
pub fn write_matrix_csv(
    path: impl AsRef<Path>,
    header: &[String],
    m: &nalgebra::DMatrix<f64>,
) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_f64(m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

/// A cell in an output table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Writes a header and rows through the `csv` writer (quoting as needed).
pub fn write_table_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                found: row.len(),
            });
        }
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub metrics: BTreeMap<String, f64>,
    pub seed: u64,
    pub runtime_ms: f64,
    pub artifact_paths: Vec<String>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            metrics: BTreeMap::new(),
            seed,
            runtime_ms: 0.0,
            artifact_paths: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(Error::invalid("experiment name must be nonempty"));
        }
        if let Some((k, v)) = self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("metric {k} is not finite ({v})")));
        }
        if !self.runtime_ms.is_finite() || self.runtime_ms < 0.0 {
            return Err(Error::invalid("runtime must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// One pretty-printed JSON object per file.
pub fn write_record_json(path: impl AsRef<Path>, record: &ExperimentRecord) -> Result<()> {
    record.validate()?;
    write_text(
        path.as_ref(),
        &(serde_json::to_string_pretty(record)? + "\n"),
    )
}

pub fn read_record_json(path: impl AsRef<Path>) -> Result<ExperimentRecord> {
    let rec: ExperimentRecord = serde_json::from_str(&fs::read_to_string(path.as_ref())?)?;
    rec.validate()?;
    Ok(rec)
}

/// Any serialisable value as pretty JSON (diagnostics, configs).
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_text(
        path.as_ref(),
        &(serde_json::to_string_pretty(value)? + "\n"),
    )
}
