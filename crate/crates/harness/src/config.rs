//! TOML run configuration. See the README for the schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use vi_core::problems::{builtin_with_seed, parse_affine_text, HpHardConfig};
use vi_core::solvers::{validate_method_params, InertialParams};
use vi_core::stepsize::StepParams;
use vi_core::{FeasibleSet, Method, SolverParams, StoppingRule, VIProblem};

use crate::HarnessError;

pub const DEFAULT_OUTPUT_DIR: &str = "vitool-out";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problems: Vec<RawProblem>,
    methods: Vec<String>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    method_params: BTreeMap<String, RawParams>,
    #[serde(default)]
    stopping: RawStopping,
    #[serde(default)]
    starts: RawStarts,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawProblem {
    Name(String),
    File(RawMatrixProblem),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrixProblem {
    file: PathBuf,
    name: Option<String>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: Option<f64>,
    beta: Option<f64>,
    mu: Option<f64>,
    gamma: Option<f64>,
    ell: Option<f64>,
    lambda0: Option<f64>,
    m_max: Option<u32>,
    fixed_lambda: Option<f64>,
}

impl RawParams {
    fn over(&self, base: &RawParams) -> RawParams {
        RawParams {
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            mu: self.mu.or(base.mu),
            gamma: self.gamma.or(base.gamma),
            ell: self.ell.or(base.ell),
            lambda0: self.lambda0.or(base.lambda0),
            m_max: self.m_max.or(base.m_max),
            fixed_lambda: self.fixed_lambda.or(base.fixed_lambda),
        }
    }

    fn resolve(&self) -> SolverParams {
        let d = SolverParams::default();
        SolverParams {
            inertia: InertialParams {
                alpha: self.alpha.unwrap_or(d.inertia.alpha),
                beta: self.beta.unwrap_or(d.inertia.beta),
            },
            step: StepParams {
                mu: self.mu.unwrap_or(d.step.mu),
                gamma: self.gamma.unwrap_or(d.step.gamma),
                ell: self.ell.unwrap_or(d.step.ell),
                lambda0: self.lambda0.unwrap_or(d.step.lambda0),
                m_max: self.m_max.unwrap_or(d.step.m_max),
            },
            fixed_lambda: self.fixed_lambda,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStopping {
    tol_wy: Option<f64>,
    tol_res: Option<f64>,
    max_iter: Option<usize>,
    max_time_ms: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStarts {
    #[serde(default)]
    points: Vec<Vec<f64>>,
    random: Option<usize>,
}

/// A problem together with the name used in output files.
#[derive(Debug, Clone)]
pub struct NamedProblem {
    pub name: String,
    pub problem: VIProblem,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problems: Vec<NamedProblem>,
    pub methods: Vec<Method>,
    pub params: BTreeMap<Method, SolverParams>,
    pub stopping: StoppingRule,
    pub start_points: Vec<Vec<f64>>,
    pub random_starts: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn params_for(&self, method: Method) -> SolverParams {
        self.params.get(&method).copied().unwrap_or_default()
    }

    /// Starts applicable to a problem: matching-dimension points, then random draws.
    pub fn start_count(&self, dim: usize) -> usize {
        self.start_points.iter().filter(|p| p.len() == dim).count() + self.random_starts
    }
}

/// Reads and parses a config file; relative matrix paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config_in(&text, path.parent())
}

pub fn parse_config(text: &str) -> Result<RunConfig, HarnessError> {
    parse_config_in(text, None)
}

fn tol_option(name: &str, value: Option<f64>, default: Option<f64>, errors: &mut Vec<String>) -> Option<f64> {
    match value {
        None => default,
        Some(0.0) => None,
        Some(t) if t > 0.0 && t.is_finite() => Some(t),
        Some(t) => {
            errors.push(format!("stopping.{name}: must be >= 0, got {t}"));
            default
        }
    }
}

pub fn parse_config_in(text: &str, base: Option<&Path>) -> Result<RunConfig, HarnessError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let seed = raw.seed.unwrap_or(HpHardConfig::default().seed);
    let mut errors = Vec::new();

    let mut problems = Vec::new();
    for (i, p) in raw.problems.iter().enumerate() {
        match load_problem(p, base, seed) {
            Ok(np) => problems.push(np),
            Err(e) => errors.push(format!("problems[{i}]: {e}")),
        }
    }
    if raw.problems.is_empty() {
        errors.push("problems: at least one problem is required".into());
    }

    let mut methods = Vec::new();
    for (i, name) in raw.methods.iter().enumerate() {
        match name.parse::<Method>() {
            Ok(m) if methods.contains(&m) => errors.push(format!("methods[{i}]: `{m}` listed twice")),
            Ok(m) => methods.push(m),
            Err(e) => errors.push(format!("methods[{i}]: {e}")),
        }
    }
    if raw.methods.is_empty() {
        errors.push("methods: at least one method is required".into());
    }

    let mut params = BTreeMap::new();
    for (name, over) in &raw.method_params {
        match name.parse::<Method>() {
            Ok(m) if methods.contains(&m) => {
                params.insert(m, over.over(&raw.params).resolve());
            }
            Ok(m) => errors.push(format!("method_params.{m}: method is not in `methods`")),
            Err(e) => errors.push(format!("method_params.{name}: {e}")),
        }
    }
    for &m in &methods {
        params.entry(m).or_insert_with(|| raw.params.resolve());
    }
    for (&m, p) in &params {
        for np in &problems {
            if let Err(e) = validate_method_params(&np.problem, m, p) {
                errors.push(format!("{m} on {}: {e}", np.name));
            }
        }
    }

    let defaults = StoppingRule::default();
    let stopping = StoppingRule {
        tol_wy: tol_option("tol_wy", raw.stopping.tol_wy, defaults.tol_wy, &mut errors),
        tol_res: tol_option("tol_res", raw.stopping.tol_res, defaults.tol_res, &mut errors),
        max_iter: raw.stopping.max_iter.unwrap_or(defaults.max_iter),
        max_time: raw.stopping.max_time_ms.map(Duration::from_millis),
    };
    if let Err(e) = stopping.validate() {
        errors.push(format!("stopping: {e}"));
    }

    for (i, pt) in raw.starts.points.iter().enumerate() {
        if pt.is_empty() || pt.iter().any(|c| !c.is_finite()) {
            errors.push(format!("starts.points[{i}]: must be a nonempty list of finite numbers"));
        } else if !problems.iter().any(|p| p.problem.dim() == pt.len()) {
            errors.push(format!("starts.points[{i}]: no problem has dimension {}", pt.len()));
        }
    }
    let random_starts = raw
        .starts
        .random
        .unwrap_or(if raw.starts.points.is_empty() { 1 } else { 0 });
    for np in &problems {
        let n = raw.starts.points.iter().filter(|p| p.len() == np.problem.dim()).count() + random_starts;
        if n == 0 {
            errors.push(format!("starts: no start applies to {}", np.name));
        }
    }

    let mut names: Vec<&str> = problems.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        errors.push(format!("problems: name `{}` used twice", w[0]));
    }

    if !errors.is_empty() {
        return Err(HarnessError::Validation(errors));
    }
    Ok(RunConfig {
        problems,
        methods,
        params,
        stopping,
        start_points: raw.starts.points,
        random_starts,
        seed,
        output_dir: raw.output_dir,
    })
}

fn load_problem(p: &RawProblem, base: Option<&Path>, seed: u64) -> Result<NamedProblem, String> {
    match p {
        RawProblem::Name(name) => builtin_with_seed(name, seed)
            .map(|problem| NamedProblem {
                name: name.clone(),
                problem,
            })
            .map_err(|e| e.to_string()),
        RawProblem::File(m) => {
            let path = match base {
                Some(b) if m.file.is_relative() => b.join(&m.file),
                _ => m.file.clone(),
            };
            let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let name = m.name.clone().unwrap_or_else(|| {
                path.file_stem()
                    .map_or_else(|| "matrix".to_string(), |s| s.to_string_lossy().into_owned())
            });
            let op = parse_affine_text(&text, &name).map_err(|e| e.to_string())?;
            let dim = op.input_dim().unwrap_or(1);
            let set = FeasibleSet::cube(dim, m.lower.unwrap_or(-10.0), m.upper.unwrap_or(10.0)).map_err(|e| e.to_string())?;
            let problem = VIProblem::new(op, set, dim, name.clone()).map_err(|e| e.to_string())?;
            Ok(NamedProblem { name, problem })
        }
    }
}
