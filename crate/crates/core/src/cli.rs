//! The commands behind the `gradlocus` binary, as library functions.
//!
//! Every command returns plain data; the binary only parses arguments, writes
//! files and maps errors to exit codes. Reports are JSON, point clouds are CSV
//! with the header `x1,…,xn,phi_norm,gamma_value,gamma_scale,chart_mask,certified`.
//! Floats are written in shortest round-trip form so equal runs give equal bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::fields::FieldError;
use crate::integrability::{equivalence_probe, report_at, Condition, IntegrabilityError, ProbeReport, Side};
use crate::locus::{
    box_counting_dimension, build_phi, chart_mask, charts_from_mask, classify_point, sample_locus, verify_cover,
    CoverReport, DimensionEstimate, LocusError, LocusSample, SampleOptions, MIN_POINTS,
};
use crate::scenario::{Scenario, ScenarioError, ScenarioTolerances};

pub const DEFAULT_CHECK_POINTS: usize = 200;
pub const THREADS_ENV: &str = "GRADLOCUS_THREADS";

/// Printed with every dimension estimate.
pub const DIMENSION_CAVEAT: &str = "box-counting slope of the certified samples; \
    an empirical surrogate for the Hausdorff dimension bound m, not a proof of it";

/// Exit status when the locus has obstructed points outside every chart.
pub const EXIT_COVER_FAILED: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Locus(#[from] LocusError),
    #[error(transparent)]
    Integrability(#[from] IntegrabilityError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Csv { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Scenario(ScenarioError::Json(_)) => "parse",
            CliError::Scenario(_) => "validation",
            CliError::Locus(_) | CliError::Integrability(_) => "numerical",
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::Usage(_) => "usage",
        }
    }

    /// One-line machine-readable form for stderr.
    pub fn to_json_line(&self) -> String {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Scenario(e) = self {
            if let Some(field) = e.field() {
                v["field"] = json!(field);
            }
        }
        v.to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Command-line values that replace scenario settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub tol_residual: Option<f64>,
    pub tol_gamma: Option<f64>,
    pub tol_rank: Option<f64>,
}

impl Overrides {
    /// `points` replaces the seed count; the result is revalidated.
    pub fn apply(&self, mut s: Scenario) -> Result<Scenario, CliError> {
        if let Some(p) = self.points {
            s.n_seeds = p;
        }
        if let Some(seed) = self.seed {
            s.rng_seed = seed;
        }
        let t = &mut s.tolerances;
        t.residual = self.tol_residual.unwrap_or(t.residual);
        t.gamma = self.tol_gamma.unwrap_or(t.gamma);
        t.rank = self.tol_rank.unwrap_or(t.rank);
        s.validate()?;
        Ok(s)
    }
}

/// Reads `GRADLOCUS_THREADS`; unset or empty means no cap.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(Scenario::from_json(&text)?)
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionStats {
    pub condition: Condition,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub max_scaled_residual: f64,
    pub mean_scaled_residual: f64,
    /// Points whose scaled residual is within `tolerances.integrable`.
    pub integrable_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaStats {
    pub side: Side,
    pub max_abs_value: f64,
    pub mean_abs_value: f64,
    /// Points where `|Γ(C DF)^m| > tol_gamma · scale`.
    pub nonzero_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub dim: usize,
    pub side: Side,
    pub n_points: usize,
    /// Points where an expression left its domain.
    pub skipped_points: usize,
    pub conditions: Vec<ConditionStats>,
    /// Absent in odd dimension.
    pub gamma: Option<GammaStats>,
    pub probe: ProbeReport,
    pub verdict: String,
    pub tolerances: ScenarioTolerances,
    pub rng_seed: u64,
    pub timestamp: u64,
}

fn side_condition(side: Side) -> Condition {
    match side {
        Side::Left => Condition::Left,
        Side::Right => Condition::Right,
    }
}

fn is_domain(e: &IntegrabilityError) -> bool {
    matches!(e, IntegrabilityError::Field(FieldError::Domain { .. }))
}

/// Residual statistics for every applicable condition at `n_points`
/// low-discrepancy points of the scenario box, plus the equivalence probe.
pub fn cmd_check(s: &Scenario, n_points: usize) -> Result<CheckReport, CliError> {
    if n_points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let r = s.resolve()?;
    let tol = s.tolerances;
    let points = r.domain.low_discrepancy_points(n_points, s.rng_seed);

    let mut usable = Vec::with_capacity(points.len());
    for x in &points {
        match r.field.jacobian(x).and_then(|_| r.field.eval(x)) {
            Ok(_) => usable.push(x.clone()),
            Err(FieldError::Domain { .. }) => {}
            Err(e) => return Err(CliError::Integrability(e.into())),
        }
    }
    let skipped = points.len() - usable.len();

    let main = side_condition(s.side);
    let mut conditions = Vec::new();
    let mut gamma = None;
    let mut main_verdicts = (0, 0);
    for condition in Condition::applicable(&r.pair) {
        let mut stats = ConditionStats {
            condition,
            max_residual: 0.0,
            mean_residual: 0.0,
            max_scaled_residual: 0.0,
            mean_scaled_residual: 0.0,
            integrable_points: 0,
        };
        let mut g = GammaStats { side: s.side, max_abs_value: 0.0, mean_abs_value: 0.0, nonzero_points: 0 };
        let mut nonintegrable = 0;
        for x in &usable {
            let rep = match report_at(&r.pair, &r.field, x, condition, tol.integrable, tol.gamma) {
                Ok(rep) => rep,
                Err(e) if is_domain(&e) => continue,
                Err(e) => return Err(e.into()),
            };
            stats.max_residual = stats.max_residual.max(rep.residual);
            stats.mean_residual += rep.residual;
            stats.max_scaled_residual = stats.max_scaled_residual.max(rep.scaled_residual);
            stats.mean_scaled_residual += rep.scaled_residual;
            stats.integrable_points += rep.verdict_integrable as usize;
            nonintegrable += rep.verdict_nonintegrable as usize;
            if let (Some(v), Some(sc)) = (rep.gamma_value, rep.gamma_scale) {
                g.max_abs_value = g.max_abs_value.max(v.abs());
                g.mean_abs_value += v.abs();
                g.nonzero_points += (v.abs() > tol.gamma * sc) as usize;
            }
        }
        let count = usable.len().max(1) as f64;
        stats.mean_residual /= count;
        stats.mean_scaled_residual /= count;
        if condition == main {
            main_verdicts = (stats.integrable_points, nonintegrable);
            if s.dim.is_multiple_of(2) {
                g.mean_abs_value /= count;
                gamma = Some(g);
            }
        }
        conditions.push(stats);
    }

    let probe = equivalence_probe(&r.pair, &r.field, &usable, s.side, tol.integrable)?;
    let n = usable.len();
    let verdict = match main_verdicts {
        (ok, _) if ok == n => "integrable everywhere sampled".to_string(),
        (_, bad) if bad > 0 => format!("non-integrable at {bad} of {n} sampled points"),
        (ok, _) => format!("inconclusive at {} of {n} sampled points", n - ok),
    };
    Ok(CheckReport {
        scenario: s.name.clone(),
        dim: s.dim,
        side: s.side,
        n_points,
        skipped_points: skipped,
        conditions,
        gamma,
        probe,
        verdict,
        tolerances: tol,
        rng_seed: s.rng_seed,
        timestamp: timestamp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusSummary {
    pub scenario: String,
    pub dim: usize,
    pub m: usize,
    pub side: Side,
    pub n_seeds: usize,
    pub sample_count: usize,
    pub certified_count: usize,
    pub uncovered_count: usize,
    pub charts_used: usize,
    pub chart_bound: usize,
    pub per_chart_counts: std::collections::BTreeMap<String, usize>,
    pub dimension_estimate: Option<f64>,
    pub fit_r2: Option<f64>,
    pub dimension_caveat: String,
    pub passed: bool,
    pub tolerances: ScenarioTolerances,
    pub rng_seed: u64,
    pub timestamp: u64,
}

#[derive(Debug, Clone)]
pub struct LocusOutcome {
    pub samples: Vec<LocusSample>,
    pub cover: CoverReport,
    pub dimension: Option<DimensionEstimate>,
    pub summary: LocusSummary,
}

impl LocusOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            EXIT_COVER_FAILED
        }
    }

    pub fn csv(&self) -> String {
        samples_csv(&self.samples, self.summary.dim)
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }

    /// Writes `points.csv` and `summary.json` into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv = dir.join("points.csv");
        let json = dir.join("summary.json");
        fs::write(&csv, self.csv()).map_err(io_err(&csv))?;
        fs::write(&json, self.summary_json()).map_err(io_err(&json))?;
        Ok((csv, json))
    }
}

fn dimension_of(samples: &[LocusSample]) -> Result<Option<DimensionEstimate>, CliError> {
    let points: Vec<Vec<f64>> = samples.iter().filter(|s| s.certified).map(|s| s.x.iter().copied().collect()).collect();
    if points.len() < MIN_POINTS {
        return Ok(None);
    }
    Ok(Some(box_counting_dimension(&points, None)?))
}

/// Samples and certifies the locus of a scenario.
pub fn cmd_locus(s: &Scenario, threads: Option<usize>) -> Result<LocusOutcome, CliError> {
    if s.dim % 2 == 1 {
        return Err(ScenarioError::Invalid {
            field: "dim".into(),
            message: format!("locus commands need an even dimension, got {}", s.dim),
        }
        .into());
    }
    let r = s.resolve()?;
    let phi = build_phi(&r.pair, &r.f, &r.field, s.side)?;
    let opts = SampleOptions {
        tolerances: s.tolerances.locus(),
        rng_seed: s.rng_seed,
        threads,
        solve: crate::locus::SolveOptions { tol_residual: s.tolerances.residual, ..Default::default() },
        ..Default::default()
    };
    let samples = sample_locus(&phi, &r.domain, s.n_seeds, &opts)?;
    let m = s.dim / 2;
    let cover = verify_cover(&samples, m);
    let dimension = dimension_of(&samples)?;
    let summary = LocusSummary {
        scenario: s.name.clone(),
        dim: s.dim,
        m,
        side: s.side,
        n_seeds: s.n_seeds,
        sample_count: cover.sample_count,
        certified_count: cover.certified_count,
        uncovered_count: cover.uncovered_count,
        charts_used: cover.charts_used,
        chart_bound: cover.chart_bound,
        per_chart_counts: cover.per_chart_counts.clone(),
        dimension_estimate: dimension.as_ref().map(|d| d.estimate),
        fit_r2: dimension.as_ref().map(|d| d.fit_r2),
        dimension_caveat: DIMENSION_CAVEAT.to_string(),
        passed: cover.passed,
        tolerances: s.tolerances,
        rng_seed: s.rng_seed,
        timestamp: timestamp(),
    };
    Ok(LocusOutcome { samples, cover, dimension, summary })
}

pub fn cmd_demo(name: &str, overrides: &Overrides, threads: Option<usize>) -> Result<LocusOutcome, CliError> {
    let s = overrides.apply(Scenario::demo(name)?)?;
    cmd_locus(&s, threads)
}

pub fn csv_header(dim: usize) -> String {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    h.extend(["phi_norm", "gamma_value", "gamma_scale", "chart_mask", "certified"].map(String::from));
    h.join(",")
}

/// The point-cloud CSV. `chart_mask` is empty when the chart enumeration
/// exceeds 128 entries (m ≥ 5).
pub fn samples_csv(samples: &[LocusSample], dim: usize) -> String {
    let m = dim / 2;
    let mut out = csv_header(dim);
    out.push('\n');
    for s in samples {
        for v in s.x.iter() {
            write!(out, "{v},").unwrap();
        }
        let mask = chart_mask(&s.charts, m).map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", s.phi_norm, s.gamma_value, s.gamma_scale, mask, s.certified).unwrap();
    }
    out
}

/// One parsed line of a point-cloud CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub x: Vec<f64>,
    pub chart_mask: Option<u128>,
    pub certified: bool,
}

pub fn read_samples_csv(path: &Path) -> Result<(usize, Vec<CsvRow>), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_samples_csv(&text).map_err(|(line, message)| CliError::Csv { path: path.to_path_buf(), line, message })
}

/// Parses CSV text as written by [`samples_csv`]; returns the dimension and rows.
pub fn parse_samples_csv(text: &str) -> Result<(usize, Vec<CsvRow>), (usize, String)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or((1, "missing header".to_string()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = cols.iter().take_while(|c| c.starts_with('x')).count();
    if dim == 0 || cols != csv_header(dim).split(',').collect::<Vec<_>>() {
        return Err((1, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 5 {
            return Err((k + 1, format!("expected {} fields, got {}", dim + 5, fields.len())));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|_| (k + 1, format!("not a number: {t:?}")));
        let x = fields[..dim].iter().map(|t| num(t)).collect::<Result<Vec<_>, _>>()?;
        let mask = match fields[dim + 3] {
            "" => None,
            t => Some(t.parse::<u128>().map_err(|_| (k + 1, format!("bad chart_mask {t:?}")))?),
        };
        let certified = match fields[dim + 4] {
            "true" => true,
            "false" => false,
            t => return Err((k + 1, format!("bad certified flag {t:?}"))),
        };
        rows.push(CsvRow { x, chart_mask: mask, certified });
    }
    Ok((dim, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub points_used: usize,
    pub certified_only: bool,
    pub estimate: f64,
    pub fit_r2: f64,
    pub per_scale_counts: Vec<(f64, usize)>,
    pub scales_used: usize,
    pub caveat: String,
}

/// Box-counts the certified rows of a point-cloud CSV (all rows when
/// `certified_only` is false).
pub fn cmd_dimension(rows: &[CsvRow], certified_only: bool) -> Result<DimensionReport, CliError> {
    let points: Vec<Vec<f64>> = rows.iter().filter(|r| r.certified || !certified_only).map(|r| r.x.clone()).collect();
    let d = box_counting_dimension(&points, None)?;
    Ok(DimensionReport {
        points_used: points.len(),
        certified_only,
        estimate: d.estimate,
        fit_r2: d.fit_r2,
        per_scale_counts: d.per_scale_counts,
        scales_used: d.scales_used,
        caveat: DIMENSION_CAVEAT.to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct ChartsOutcome {
    pub samples: Vec<LocusSample>,
    pub cover: CoverReport,
    /// Rows whose stored chart mask differs from the recomputed one.
    pub changed_rows: usize,
}

/// Recomputes `Φ`, the obstruction and chart memberships for existing points
/// under the scenario's current tolerances.
pub fn cmd_charts(s: &Scenario, dim: usize, rows: &[CsvRow]) -> Result<ChartsOutcome, CliError> {
    if dim != s.dim {
        return Err(CliError::Usage(format!("CSV has {dim} coordinates, scenario has dim {}", s.dim)));
    }
    if s.dim % 2 == 1 {
        return Err(ScenarioError::Invalid { field: "dim".into(), message: format!("odd dimension {}", s.dim) }.into());
    }
    let r = s.resolve()?;
    let phi = build_phi(&r.pair, &r.f, &r.field, s.side)?;
    let m = s.dim / 2;
    let tol = s.tolerances.locus();
    let mut samples = Vec::with_capacity(rows.len());
    let mut changed = 0;
    for row in rows {
        let sample = classify_point(&phi, DVector::from_row_slice(&row.x), &tol)?;
        let before = row.chart_mask.map(|mask| charts_from_mask(mask, m));
        if before.as_ref() != Some(&sample.charts) {
            changed += 1;
        }
        samples.push(sample);
    }
    let cover = verify_cover(&samples, m);
    Ok(ChartsOutcome { samples, cover, changed_rows: changed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let out = cmd_demo("circle-m1", &Overrides { points: Some(60), ..Default::default() }, Some(1)).unwrap();
        let text = out.csv();
        assert!(text.starts_with("x1,x2,phi_norm,gamma_value,gamma_scale,chart_mask,certified\n"));
        let (dim, rows) = parse_samples_csv(&text).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(rows.len(), out.samples.len());
        for (row, s) in rows.iter().zip(&out.samples) {
            assert_eq!(row.x, s.x.iter().copied().collect::<Vec<_>>());
            assert_eq!(row.certified, s.certified);
        }
    }

    #[test]
    fn csv_errors_carry_lines() {
        assert_eq!(parse_samples_csv("").unwrap_err().0, 1);
        let bad = "x1,x2,phi_norm,gamma_value,gamma_scale,chart_mask,certified\n1,2,0,0,1,1,maybe\n";
        assert_eq!(parse_samples_csv(bad).unwrap_err().0, 2);
        assert!(parse_samples_csv("a,b\n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides { points: Some(7), seed: Some(3), tol_rank: Some(1e-4), ..Default::default() };
        let s = o.apply(Scenario::demo("plane-m2").unwrap()).unwrap();
        assert_eq!((s.n_seeds, s.rng_seed, s.tolerances.rank), (7, 3, 1e-4));
        let bad = Overrides { tol_gamma: Some(-1.0), ..Default::default() };
        assert!(bad.apply(Scenario::demo("plane-m2").unwrap()).is_err());
    }

    #[test]
    fn threads_env_parsing() {
        assert_eq!(threads_from_env(None).unwrap(), None);
        assert_eq!(threads_from_env(Some("4")).unwrap(), Some(4));
        assert!(threads_from_env(Some("0")).is_err());
        assert!(threads_from_env(Some("many")).is_err());
    }

    #[test]
    fn error_lines_are_single_line_json() {
        let e = CliError::from(
            Scenario::from_json(r#"{"name":"t","dim":2,"structure":{"kind":"euclidean"},"f":"y","F":["x1","x2"]}"#)
                .unwrap_err(),
        );
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "validation");
        assert_eq!(v["field"], "f");
    }

    #[test]
    fn odd_dimension_locus_is_a_validation_error() {
        let s = Scenario::from_json(
            r#"{"name":"t","dim":3,"structure":{"kind":"euclidean"},"f":"x1","F":["x1","x2","x3"]}"#,
        )
        .unwrap();
        let e = cmd_locus(&s, None).unwrap_err();
        assert_eq!(e.kind(), "validation");
        assert!(cmd_check(&s, 10).unwrap().gamma.is_none());
    }
}
