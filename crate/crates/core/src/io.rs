//! Point-cloud input and JSON output.
//!
//! Two input formats are accepted:
//!
//! * CSV, one point per row. An optional header row is detected when its
//!   fields are not all numeric; a header column named `weight` or `w`
//!   holds point masses. Without weights every point gets `1/n`.
//! * JSON `{"points": [[...], ...], "weights": [...]}` with `weights`
//!   optional.
//!
//! Files ending in `.json` are read as JSON, everything else as CSV.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{PgwError, Result};
use crate::plan::TransportPlan;
use crate::solver::{SolveReport, StopCriterion, Termination};
use crate::space::{build_mm_space, MmSpace};

/// Largest plan written densely; bigger plans are written as triples.
pub const DENSE_PLAN_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Array2<f64>,
    pub weights: Array1<f64>,
}

impl PointCloud {
    pub fn into_space(self, exponent: f64) -> Result<MmSpace> {
        build_mm_space(self.points, self.weights, exponent)
    }
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> PgwError {
    PgwError::Parse { path: path.display().to_string(), line, column, message: message.into() }
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| PgwError::Io { path: path.display().to_string(), source: e })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_json_cloud(&text, path)
    } else {
        parse_csv_cloud(&text, path)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonCloud {
    points: Vec<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

pub fn parse_json_cloud(text: &str, path: &Path) -> Result<PointCloud> {
    let raw: JsonCloud =
        serde_json::from_str(text).map_err(|e| parse_err(path, e.line(), e.column(), e.to_string()))?;
    let rows: Vec<(usize, Vec<f64>)> = raw.points.into_iter().map(|r| (0, r)).collect();
    assemble(rows, raw.weights, path)
}

pub fn parse_csv_cloud(text: &str, path: &Path) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut weight_col = None;
    let mut rows = Vec::new();
    let mut weights = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                weight_col = record.iter().position(|f| f.eq_ignore_ascii_case("weight") || f.eq_ignore_ascii_case("w"));
                continue;
            }
        }
        let mut coords = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, c + 1, format!("expected a number, found {field:?}")))?;
            if Some(c) == weight_col {
                weights.push(v);
            } else {
                coords.push(v);
            }
        }
        rows.push((line, coords));
    }
    let weights = weight_col.map(|_| weights);
    assemble(rows, weights, path)
}

fn assemble(rows: Vec<(usize, Vec<f64>)>, weights: Option<Vec<f64>>, path: &Path) -> Result<PointCloud> {
    let Some((_, first)) = rows.first() else {
        return Err(parse_err(path, 1, 1, "no points found"));
    };
    let dim = first.len();
    if dim == 0 {
        return Err(parse_err(path, rows[0].0.max(1), 1, "point has no coordinates"));
    }
    for (k, (line, r)) in rows.iter().enumerate() {
        if r.len() != dim {
            let line = if *line == 0 { k + 1 } else { *line };
            return Err(parse_err(path, line, 1, format!("expected {dim} coordinates, found {}", r.len())));
        }
    }
    let n = rows.len();
    let weights = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(parse_err(path, 1, 1, format!("{} weights for {n} points", w.len())));
            }
            Array1::from(w)
        }
        None => Array1::from_elem(n, 1.0 / n as f64),
    };
    let flat: Vec<f64> = rows.into_iter().flat_map(|(_, r)| r).collect();
    Ok(PointCloud { points: Array2::from_shape_vec((n, dim), flat).expect("rectangular rows"), weights })
}

/// JSON form of a plan: dense rows up to [`DENSE_PLAN_CAP`] per side,
/// `(i, j, mass)` triples above that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlanJson {
    Dense { rows: Vec<Vec<f64>> },
    Sparse { shape: (usize, usize), threshold: f64, triples: Vec<(usize, usize, f64)> },
}

impl PlanJson {
    pub fn from_plan(plan: &TransportPlan, sparse_threshold: f64) -> Self {
        let (n, m) = plan.shape();
        if n <= DENSE_PLAN_CAP && m <= DENSE_PLAN_CAP {
            PlanJson::Dense { rows: plan.matrix().rows().into_iter().map(|r| r.to_vec()).collect() }
        } else {
            PlanJson::Sparse { shape: (n, m), threshold: sparse_threshold, triples: plan.triples_above(sparse_threshold) }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub pgw_value: f64,
    pub transported_mass: f64,
    pub iterations: usize,
    pub termination: String,
    pub variant: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub alpha_trace: Vec<f64>,
    pub plan: PlanJson,
}

pub fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Converged(StopCriterion::ObjectiveChange) => "converged (objective change)".into(),
        Termination::Converged(StopCriterion::FrankWolfeGap) => "converged (frank-wolfe gap)".into(),
        Termination::Converged(StopCriterion::Stationary) => "converged (zero step)".into(),
        Termination::IterationLimit => "iteration-limit".into(),
        Termination::LpFailure(msg) => format!("lp-failure: {msg}"),
    }
}

impl ReportJson {
    pub fn new(report: &SolveReport, seed: u64) -> Self {
        Self {
            pgw_value: report.pgw_value,
            transported_mass: report.transported_mass,
            iterations: report.iterations,
            termination: termination_label(&report.termination),
            variant: format!("{:?}", report.variant).to_lowercase(),
            seed,
            wall_time_seconds: report.wall_time.as_secs_f64(),
            objective_trace: report.objective_trace.clone(),
            gap_trace: report.gap_trace.clone(),
            alpha_trace: report.alpha_trace.clone(),
            plan: PlanJson::from_plan(&report.plan, 1e-12),
        }
    }
}

/// Correspondence file `{"pairs": [[i, j, mass], ...], "pgw_value": v, "seed": s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceJson {
    pub pairs: Vec<(usize, usize, f64)>,
    pub pgw_value: f64,
    pub seed: u64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    fs::write(path, text + "\n").map_err(|e| PgwError::Io { path: path.display().to_string(), source: e })
}
