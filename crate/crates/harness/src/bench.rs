use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use vi_core::geometry::DEFAULT_SAMPLING_RADIUS;
use vi_core::{solve, Method, RunReport, Vector};

use crate::config::{NamedProblem, RunConfig};
use crate::plot::{render_residual_plot, Series};
use crate::HarnessError;

pub const TRACE_HEADER: [&str; 9] = [
    "k", "lambda", "rule", "armijo_m", "shrinks", "res", "wy_norm", "step_norm", "elapsed_ns",
];
pub const SUMMARY_HEADER: [&str; 9] = [
    "method", "problem", "start_id", "iterations", "final_res", "op_evals", "projections", "wall_ns", "stop_reason",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub jobs: usize,
    pub timings: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { jobs: 1, timings: false }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub problem: usize,
    pub method: Method,
    pub start_id: usize,
    pub start: Vector,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<RunReport, String>,
}

impl CellResult {
    pub fn stop_reason(&self) -> String {
        match &self.outcome {
            Ok(r) => r.stop_reason.as_str().to_string(),
            Err(e) => format!("error: {e}"),
        }
    }
}

#[derive(Debug)]
pub struct BenchmarkOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub results: Vec<CellResult>,
}

/// Seed for random start `index` of `problem`, independent of the method list.
pub fn start_seed(seed: u64, problem: &str, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(problem.as_bytes());
    h.update([0]);
    h.update((index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// A point drawn uniformly from the bounding box of `C` (or `[−10, 10]ⁿ`), then projected.
pub fn random_start(np: &NamedProblem, seed: u64, index: usize) -> Result<Vector, HarnessError> {
    let dim = np.problem.dim();
    let (lo, hi) = np.problem.set().bounding_box(dim).unwrap_or_else(|| {
        (
            Vector::filled(dim, -DEFAULT_SAMPLING_RADIUS),
            Vector::filled(dim, DEFAULT_SAMPLING_RADIUS),
        )
    });
    let mut rng = ChaCha8Rng::seed_from_u64(start_seed(seed, &np.name, index));
    let raw: Vec<f64> = lo
        .iter()
        .zip(hi.iter())
        .map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l })
        .collect();
    let v = Vector::new(raw).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    np.problem.project(&v).map_err(|e| HarnessError::Runtime(e.to_string()))
}

/// Every (problem, method, start) cell in output order.
pub fn cells(config: &RunConfig) -> Result<Vec<Cell>, HarnessError> {
    let mut out = Vec::new();
    for (pi, np) in config.problems.iter().enumerate() {
        let dim = np.problem.dim();
        let mut starts: Vec<Vector> = config
            .start_points
            .iter()
            .filter(|p| p.len() == dim)
            .map(|p| Vector::new(p.clone()).map_err(|e| HarnessError::Runtime(e.to_string())))
            .collect::<Result<_, _>>()?;
        for r in 0..config.random_starts {
            starts.push(random_start(np, config.seed, r)?);
        }
        for &method in &config.methods {
            for (start_id, start) in starts.iter().enumerate() {
                out.push(Cell {
                    problem: pi,
                    method,
                    start_id,
                    start: start.clone(),
                });
            }
        }
    }
    Ok(out)
}

pub fn run_cells(config: &RunConfig, cells: Vec<Cell>, jobs: usize) -> Result<Vec<CellResult>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .into_par_iter()
            .map(|cell| {
                let np = &config.problems[cell.problem];
                let outcome = solve(&np.problem, cell.method, &config.params_for(cell.method), &config.stopping, &cell.start)
                    .map_err(|e| e.to_string());
                CellResult { cell, outcome }
            })
            .collect()
    }))
}

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

fn cell_stem(config: &RunConfig, cell: &Cell) -> String {
    format!(
        "{}__{}__s{}",
        sanitize(&config.problems[cell.problem].name),
        cell.method.name(),
        cell.start_id
    )
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
}

fn trace_rows(report: Option<&RunReport>, timings: bool) -> Vec<Vec<String>> {
    report.map_or_else(Vec::new, |r| {
        r.records
            .iter()
            .map(|rec| {
                vec![
                    rec.k.to_string(),
                    fmt_f(rec.lambda),
                    rec.rule.as_str().to_string(),
                    rec.armijo_m.map_or_else(String::new, |m| m.to_string()),
                    rec.shrinks.to_string(),
                    fmt_f(rec.res),
                    fmt_f(rec.wy_norm),
                    fmt_f(rec.step_norm),
                    if timings { rec.elapsed_ns.to_string() } else { String::new() },
                ]
            })
            .collect()
    })
}

fn summary_row(config: &RunConfig, res: &CellResult, timings: bool) -> Vec<String> {
    let cell = &res.cell;
    let report = res.outcome.as_ref().ok();
    vec![
        cell.method.name().to_string(),
        config.problems[cell.problem].name.clone(),
        cell.start_id.to_string(),
        report.map_or(0, |r| r.iterations).to_string(),
        report.and_then(|r| r.final_residual()).map_or_else(String::new, fmt_f),
        report.map_or(0, |r| r.operator_evals).to_string(),
        report.map_or(0, |r| r.projections).to_string(),
        match (timings, report) {
            (true, Some(r)) => r.elapsed_ns().to_string(),
            _ => String::new(),
        },
        res.stop_reason(),
    ]
}

/// Files to write, as `(relative path, contents)`, in a fixed order.
pub fn render_outputs(config: &RunConfig, results: &[CellResult], timings: bool) -> Result<Vec<(PathBuf, Vec<u8>)>, HarnessError> {
    let mut files = Vec::new();
    for res in results {
        let stem = cell_stem(config, &res.cell);
        let report = res.outcome.as_ref().ok();
        files.push((
            Path::new("traces").join(format!("{stem}.csv")),
            csv_bytes(&TRACE_HEADER, trace_rows(report, false))?,
        ));
        if timings {
            files.push((
                Path::new("timings").join(format!("{stem}.csv")),
                csv_bytes(&TRACE_HEADER, trace_rows(report, true))?,
            ));
        }
    }
    files.push((
        PathBuf::from("summary.csv"),
        csv_bytes(&SUMMARY_HEADER, results.iter().map(|r| summary_row(config, r, false)))?,
    ));
    if timings {
        files.push((
            Path::new("timings").join("summary.csv"),
            csv_bytes(&SUMMARY_HEADER, results.iter().map(|r| summary_row(config, r, true)))?,
        ));
    }
    for (pi, np) in config.problems.iter().enumerate() {
        let series: Vec<Series> = results
            .iter()
            .filter(|r| r.cell.problem == pi)
            .map(|r| Series {
                method: r.cell.method.name().to_string(),
                start_id: r.cell.start_id,
                residuals: r
                    .outcome
                    .as_ref()
                    .map(|rep| rep.records.iter().map(|rec| rec.res).collect())
                    .unwrap_or_default(),
            })
            .collect();
        files.push((
            Path::new("plots").join(format!("{}.svg", sanitize(&np.name))),
            render_residual_plot(&np.name, &series).into_bytes(),
        ));
    }
    Ok(files)
}

/// Runs every cell and writes traces, the summary and plots under `out`.
pub fn run_benchmark(config: &RunConfig, out: &Path, opts: BenchOptions) -> Result<BenchmarkOutput, HarnessError> {
    let results = run_cells(config, cells(config)?, opts.jobs)?;
    let rendered = render_outputs(config, &results, opts.timings)?;
    let mut files = Vec::with_capacity(rendered.len());
    for (rel, bytes) in rendered {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| HarnessError::Io(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        files.push(path);
    }
    Ok(BenchmarkOutput {
        dir: out.to_path_buf(),
        files,
        results,
    })
}
