//! Operators, variational inequality problems and the built-in catalog.
//!
//! The catalog spans the monotonicity hierarchy: a strongly monotone
//! identity, a monotone (skew) rotation, a quasimonotone scalar square and
//! a family of strongly monotone affine problems with a random seed.
//!
//! Lower semicontinuity of `‖A·‖` along weakly convergent sequences has no
//! finite-dimensional test distinct from continuity, so it is not checked.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ViError};
use crate::geometry::{self, FeasibleSet, Vector, DEFAULT_SAMPLING_RADIUS};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(ViError::Input(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(ViError::Input("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(ViError::Input("ragged matrix rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, xi) in self.data.chunks_exact(self.cols).zip(x) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        out
    }

    /// Largest singular value by power iteration on `MᵀM`.
    pub fn spectral_norm_estimate(&self) -> f64 {
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut sigma_sq = 0.0;
        for _ in 0..10_000 {
            let w = self.transpose_mul_vec(&self.mul_vec(&v));
            let norm = w.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let next = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            v = w.into_iter().map(|c| c / norm).collect();
            if (next - sigma_sq).abs() <= 1e-14 * next.abs() {
                sigma_sq = next;
                break;
            }
            sigma_sq = next;
        }
        sigma_sq.max(0.0).sqrt()
    }
}

/// A scalar map applied to one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarMap {
    Identity,
    Negate,
    Square,
    Cube,
    Constant(f64),
    Linear { slope: f64, intercept: f64 },
}

impl ScalarMap {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Negate => -x,
            Self::Square => x * x,
            Self::Cube => x * x * x,
            Self::Constant(c) => c,
            Self::Linear { slope, intercept } => slope * x + intercept,
        }
    }
}

pub type CompositeFn = Arc<dyn Fn(&Vector) -> Vec<f64> + Send + Sync>;

fn composite_registry() -> &'static RwLock<HashMap<String, CompositeFn>> {
    static REGISTRY: OnceLock<RwLock<HashMap<String, CompositeFn>>> = OnceLock::new();
    REGISTRY.get_or_init(Default::default)
}

/// Registers (or replaces) a named evaluation callback for composite operators.
pub fn register_composite(name: impl Into<String>, f: CompositeFn) {
    composite_registry()
        .write()
        .expect("composite registry poisoned")
        .insert(name.into(), f);
}

#[derive(Clone)]
pub enum OperatorKind {
    /// `x ↦ Mx + q`
    Affine { matrix: DenseMatrix, offset: Vector },
    /// One map per component, or a single map broadcast to every component.
    Componentwise(Vec<ScalarMap>),
    /// Callback looked up by name in the composite registry at evaluation time.
    Composite(String),
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Affine { matrix, offset } => f
                .debug_struct("Affine")
                .field("matrix", matrix)
                .field("offset", offset)
                .finish(),
            Self::Componentwise(maps) => f.debug_tuple("Componentwise").field(maps).finish(),
            Self::Composite(name) => f.debug_tuple("Composite").field(name).finish(),
        }
    }
}

/// An evaluable map `A : ℝⁿ → ℝⁿ` with an optional Lipschitz constant.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    kind: OperatorKind,
    lipschitz: Option<f64>,
    label: String,
}

impl OperatorSpec {
    /// Affine operator. A declared Lipschitz constant must dominate the
    /// power-iteration estimate of `‖M‖₂` (relative slack 1e-6).
    pub fn affine(
        matrix: DenseMatrix,
        offset: Vector,
        lipschitz: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(ViError::Input("affine operator needs a square matrix".into()));
        }
        if offset.dim() != matrix.rows() {
            return Err(ViError::DimensionMismatch {
                expected: matrix.rows(),
                got: offset.dim(),
            });
        }
        let lipschitz = check_lipschitz(lipschitz)?;
        if let Some(l) = lipschitz {
            let estimate = matrix.spectral_norm_estimate();
            if l < estimate * (1.0 - 1e-6) {
                return Err(ViError::Input(format!(
                    "declared Lipschitz constant {l} is below the spectral norm estimate {estimate}"
                )));
            }
        }
        Ok(Self {
            kind: OperatorKind::Affine { matrix, offset },
            lipschitz,
            label: label.into(),
        })
    }

    /// Affine operator whose Lipschitz constant is the spectral norm estimate.
    pub fn affine_with_estimated_lipschitz(
        matrix: DenseMatrix,
        offset: Vector,
        label: impl Into<String>,
    ) -> Result<Self> {
        let estimate = matrix.spectral_norm_estimate() * (1.0 + 1e-9);
        let l = (estimate > 0.0).then_some(estimate);
        Self::affine(matrix, offset, l, label)
    }

    pub fn componentwise(
        maps: Vec<ScalarMap>,
        lipschitz: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(ViError::Input("componentwise operator needs at least one map".into()));
        }
        Ok(Self {
            kind: OperatorKind::Componentwise(maps),
            lipschitz: check_lipschitz(lipschitz)?,
            label: label.into(),
        })
    }

    pub fn composite(
        name: impl Into<String>,
        lipschitz: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Ok(Self {
            kind: OperatorKind::Composite(name.into()),
            lipschitz: check_lipschitz(lipschitz)?,
            label: label.into(),
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Input dimension fixed by the operator's data, if any.
    pub fn input_dim(&self) -> Option<usize> {
        match &self.kind {
            OperatorKind::Affine { matrix, .. } => Some(matrix.rows()),
            OperatorKind::Componentwise(maps) if maps.len() > 1 => Some(maps.len()),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: &Vector) -> Result<Vector> {
        if let Some(n) = self.input_dim() {
            if x.dim() != n {
                return Err(ViError::DimensionMismatch {
                    expected: n,
                    got: x.dim(),
                });
            }
        }
        let out = match &self.kind {
            OperatorKind::Affine { matrix, offset } => matrix
                .mul_vec(x.as_slice())
                .into_iter()
                .zip(offset.iter())
                .map(|(a, b)| a + b)
                .collect(),
            OperatorKind::Componentwise(maps) => {
                if maps.len() == 1 {
                    x.iter().map(|&c| maps[0].apply(c)).collect()
                } else {
                    x.iter().zip(maps).map(|(&c, m)| m.apply(c)).collect()
                }
            }
            OperatorKind::Composite(name) => {
                let f = composite_registry()
                    .read()
                    .expect("composite registry poisoned")
                    .get(name)
                    .cloned()
                    .ok_or_else(|| {
                        ViError::Configuration(format!("composite operator `{name}` is not registered"))
                    })?;
                f(x)
            }
        };
        if out.len() != x.dim() {
            return Err(ViError::Evaluation {
                operator: self.label.clone(),
                detail: format!("returned {} components for input of dimension {}", out.len(), x.dim()),
            });
        }
        Vector::new(out).map_err(|e| ViError::Evaluation {
            operator: self.label.clone(),
            detail: e.to_string(),
        })
    }
}

fn check_lipschitz(l: Option<f64>) -> Result<Option<f64>> {
    match l {
        Some(l) if !(l > 0.0 && l.is_finite()) => Err(ViError::Input(format!(
            "Lipschitz constant must be positive, got {l}"
        ))),
        other => Ok(other),
    }
}

/// Residual bound a declared dual solution must satisfy.
pub const KNOWN_SOLUTION_RESIDUAL_TOL: f64 = 1e-8;

/// `VI(C, A)`: find `x* ∈ C` with `⟨A(x*), x − x*⟩ ≥ 0` for all `x ∈ C`.
#[derive(Debug, Clone)]
pub struct VIProblem {
    op: OperatorSpec,
    set: FeasibleSet,
    dim: usize,
    known_solutions: Option<Vec<Vector>>,
    known_dual_solutions: Option<Vec<Vector>>,
    label: String,
}

impl VIProblem {
    pub fn new(op: OperatorSpec, set: FeasibleSet, dim: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(ViError::Input("problem dimension must be positive".into()));
        }
        for fixed in [op.input_dim(), set.ambient_dim()].into_iter().flatten() {
            if fixed != dim {
                return Err(ViError::DimensionMismatch { expected: dim, got: fixed });
            }
        }
        Ok(Self {
            op,
            set,
            dim,
            known_solutions: None,
            known_dual_solutions: None,
            label: label.into(),
        })
    }

    pub fn with_known_solutions(mut self, points: Vec<Vector>) -> Result<Self> {
        for p in &points {
            self.check_solution(p, "solution")?;
        }
        self.known_solutions = Some(points);
        Ok(self)
    }

    pub fn with_known_dual_solutions(mut self, points: Vec<Vector>) -> Result<Self> {
        for p in &points {
            self.check_solution(p, "dual solution")?;
        }
        self.known_dual_solutions = Some(points);
        Ok(self)
    }

    fn check_solution(&self, p: &Vector, what: &str) -> Result<()> {
        if p.dim() != self.dim {
            return Err(ViError::DimensionMismatch { expected: self.dim, got: p.dim() });
        }
        let r = geometry::residual(self, p, 1.0)?;
        if r > KNOWN_SOLUTION_RESIDUAL_TOL {
            return Err(ViError::Input(format!(
                "declared {what} {p} has residual {r:e} for `{}`",
                self.label
            )));
        }
        Ok(())
    }

    pub fn op(&self) -> &OperatorSpec {
        &self.op
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.op.lipschitz()
    }

    pub fn known_solutions(&self) -> Option<&[Vector]> {
        self.known_solutions.as_deref()
    }

    pub fn known_dual_solutions(&self) -> Option<&[Vector]> {
        self.known_dual_solutions.as_deref()
    }

    pub fn evaluate(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim {
            return Err(ViError::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        self.op.evaluate(x)
    }

    pub fn project(&self, v: &Vector) -> Result<Vector> {
        self.set.project(v)
    }

    pub fn residual(&self, x: &Vector, psi: f64) -> Result<f64> {
        geometry::residual(self, x, psi)
    }
}

/// Generator settings for the `affine-hphard-<n>` family.
///
/// `M = NᵀN + B + D` with `N` entries uniform in `±entry_range`, `B`
/// skew-symmetric with the same entry law and `D` diagonal uniform in
/// `diag_range`. Each off-diagonal entry is nonzero with probability
/// `density`. The feasible set is `[-box_half_width, box_half_width]ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpHardConfig {
    pub seed: u64,
    pub density: f64,
    pub entry_range: f64,
    pub diag_range: (f64, f64),
    pub box_half_width: f64,
}

impl Default for HpHardConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            density: 1.0,
            entry_range: 5.0,
            diag_range: (1.0, 2.0),
            box_half_width: 10.0,
        }
    }
}

pub fn hphard(n: usize, cfg: &HpHardConfig) -> Result<VIProblem> {
    if n == 0 {
        return Err(ViError::Input("hphard dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r = cfg.entry_range;
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.gen::<f64>() < cfg.density {
            rng.gen_range(-r..=r)
        } else {
            0.0
        }
    };
    let factor: Vec<f64> = (0..n * n).map(|_| draw(&mut rng)).collect();
    let mut skew = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let b = draw(&mut rng);
            skew[i * n + j] = b;
            skew[j * n + i] = -b;
        }
    }
    let (dlo, dhi) = cfg.diag_range;
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(dlo..=dhi)).collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let gram: f64 = (0..n).map(|k| factor[k * n + i] * factor[k * n + j]).sum();
            m[i * n + j] = gram + skew[i * n + j] + if i == j { diag[i] } else { 0.0 };
        }
    }
    let label = format!("affine-hphard-{n}");
    let op = OperatorSpec::affine_with_estimated_lipschitz(DenseMatrix::new(n, n, m)?, Vector::zeros(n), &label)?;
    let set = FeasibleSet::cube(n, -cfg.box_half_width, cfg.box_half_width)?;
    let zero = vec![Vector::zeros(n)];
    VIProblem::new(op, set, n, label)?
        .with_known_solutions(zero.clone())?
        .with_known_dual_solutions(zero)
}

/// Catalog entries as `(name pattern, description)`.
pub const CATALOG: &[(&str, &str)] = &[
    ("identity-box", "A(x)=x on [-1,1]^2 (also identity-box-<n>); strongly monotone, L=1"),
    ("rotation-ball", "A(x)=[[0,1],[-1,0]]x on the unit disc; monotone, not strongly; L=1"),
    ("quasi-square-1d", "A(x)=x^2 on [-1,1]; quasimonotone, S={-1,0}, S_D={-1}"),
    ("affine-hphard-<n>", "A(x)=(N^T N+B+D)x on [-10,10]^n from seed 42; strongly monotone"),
    ("constant-1d", "A(x)=1 on [-1,1]; S=S_D={-1}"),
    ("square-1d-unbounded", "A(x)=x^2 on the real line; S={0}, S_D empty, diverges from x<0"),
];

pub fn catalog_names() -> Vec<String> {
    CATALOG.iter().map(|(n, _)| (*n).to_string()).collect()
}

/// Builds a catalog problem by name.
pub fn builtin(name: &str) -> Result<VIProblem> {
    builtin_with_seed(name, HpHardConfig::default().seed)
}

/// Like [`builtin`], with an explicit seed for randomly generated entries.
pub fn builtin_with_seed(name: &str, seed: u64) -> Result<VIProblem> {
    let unknown = || ViError::UnknownProblem {
        name: name.to_string(),
        available: catalog_names(),
    };
    let dim_suffix = |prefix: &str| -> Option<Result<usize>> {
        name.strip_prefix(prefix).map(|s| match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(unknown()),
        })
    };
    match name {
        "identity-box" => identity_box(2),
        "rotation-ball" => rotation_ball(),
        "quasi-square-1d" => quasi_square_1d(),
        "constant-1d" => constant_1d(),
        "square-1d-unbounded" => square_unbounded(),
        _ => {
            if let Some(n) = dim_suffix("identity-box-") {
                identity_box(n?)
            } else if let Some(n) = dim_suffix("affine-hphard-") {
                hphard(n?, &HpHardConfig { seed, ..HpHardConfig::default() })
            } else {
                Err(unknown())
            }
        }
    }
}

fn identity_box(n: usize) -> Result<VIProblem> {
    let op = OperatorSpec::affine(DenseMatrix::identity(n), Vector::zeros(n), Some(1.0), "identity")?;
    let label = if n == 2 { "identity-box".to_string() } else { format!("identity-box-{n}") };
    let zero = vec![Vector::zeros(n)];
    VIProblem::new(op, FeasibleSet::cube(n, -1.0, 1.0)?, n, label)?
        .with_known_solutions(zero.clone())?
        .with_known_dual_solutions(zero)
}

fn rotation_ball() -> Result<VIProblem> {
    let m = DenseMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])?;
    let op = OperatorSpec::affine(m, Vector::zeros(2), Some(1.0), "rotation")?;
    let zero = vec![Vector::zeros(2)];
    VIProblem::new(op, FeasibleSet::unit_ball(2), 2, "rotation-ball")?
        .with_known_solutions(zero.clone())?
        .with_known_dual_solutions(zero)
}

fn quasi_square_1d() -> Result<VIProblem> {
    let op = OperatorSpec::componentwise(vec![ScalarMap::Square], None, "square")?;
    VIProblem::new(op, FeasibleSet::cube(1, -1.0, 1.0)?, 1, "quasi-square-1d")?
        .with_known_solutions(vec![Vector::new(vec![-1.0])?, Vector::new(vec![0.0])?])?
        .with_known_dual_solutions(vec![Vector::new(vec![-1.0])?])
}

fn constant_1d() -> Result<VIProblem> {
    let op = OperatorSpec::componentwise(vec![ScalarMap::Constant(1.0)], None, "constant")?;
    let left = vec![Vector::new(vec![-1.0])?];
    VIProblem::new(op, FeasibleSet::cube(1, -1.0, 1.0)?, 1, "constant-1d")?
        .with_known_solutions(left.clone())?
        .with_known_dual_solutions(left)
}

fn square_unbounded() -> Result<VIProblem> {
    let op = OperatorSpec::componentwise(vec![ScalarMap::Square], None, "square")?;
    VIProblem::new(op, FeasibleSet::WholeSpace, 1, "square-1d-unbounded")?
        .with_known_solutions(vec![Vector::new(vec![0.0])?])
}

/// Parses an affine operator from whitespace-separated text: `n`, then the
/// `n²` entries of `M` row by row, then the `n` entries of `q`. Text after
/// `#` on a line is ignored. The Lipschitz constant is the spectral norm
/// estimate of `M`.
pub fn parse_affine_text(text: &str, label: &str) -> Result<OperatorSpec> {
    let tokens: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .collect();
    let bad = |msg: String| ViError::Configuration(format!("{label}: {msg}"));
    let (head, rest) = tokens
        .split_first()
        .ok_or_else(|| bad("empty matrix file".into()))?;
    let n: usize = head
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| bad(format!("header `{head}` is not a positive integer")))?;
    if rest.len() != n * n + n {
        return Err(bad(format!(
            "expected {} numbers after the header, found {}",
            n * n + n,
            rest.len()
        )));
    }
    let values = rest
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("`{t}` is not a number"))))
        .collect::<Result<Vec<f64>>>()?;
    let (m, q) = values.split_at(n * n);
    OperatorSpec::affine_with_estimated_lipschitz(
        DenseMatrix::new(n, n, m.to_vec())?,
        Vector::new(q.to_vec())?,
        label,
    )
}

/// Violation counts from [`classify_sample`]. A class is "not refuted" when
/// its count is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassReport {
    pub pairs: usize,
    pub monotone_violations: usize,
    pub pseudomonotone_violations: usize,
    pub quasimonotone_violations: usize,
}

impl ClassReport {
    pub fn monotone_not_refuted(&self) -> bool {
        self.monotone_violations == 0
    }

    pub fn pseudomonotone_not_refuted(&self) -> bool {
        self.pseudomonotone_violations == 0
    }

    pub fn quasimonotone_not_refuted(&self) -> bool {
        self.quasimonotone_violations == 0
    }
}

/// Samples `pairs` random `(x, y)` in `C` and counts violations of the
/// monotone, pseudomonotone and quasimonotone implications, testing each
/// pair in both orders. Deterministic for a fixed seed.
pub fn classify_sample(op: &OperatorSpec, set: &FeasibleSet, pairs: usize, seed: u64) -> Result<ClassReport> {
    if pairs == 0 {
        return Err(ViError::Input("pairs must be at least 1".into()));
    }
    let dim = op
        .input_dim()
        .or_else(|| set.ambient_dim())
        .ok_or_else(|| ViError::Input("cannot infer the dimension to sample in".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ClassReport {
        pairs,
        monotone_violations: 0,
        pseudomonotone_violations: 0,
        quasimonotone_violations: 0,
    };
    for _ in 0..pairs {
        let x = set.sample(dim, DEFAULT_SAMPLING_RADIUS, &mut rng);
        let y = set.sample(dim, DEFAULT_SAMPLING_RADIUS, &mut rng);
        let (ax, ay) = (op.evaluate(&x)?, op.evaluate(&y)?);
        let diff = &y - &x;
        let slack = 1e-12 * (1.0 + ax.norm() + ay.norm()) * (1.0 + diff.norm());
        if (&ax - &ay).dot(&(&x - &y)) < -slack {
            report.monotone_violations += 1;
        }
        let mut pseudo = false;
        let mut quasi = false;
        for (a_from, a_to, d) in [(&ax, &ay, diff.clone()), (&ay, &ax, -&diff)] {
            let lead = a_from.dot(&d);
            let follow = a_to.dot(&d);
            if lead >= 0.0 && follow < -slack {
                pseudo = true;
            }
            if lead > slack && follow < -slack {
                quasi = true;
            }
        }
        report.pseudomonotone_violations += usize::from(pseudo);
        report.quasimonotone_violations += usize::from(quasi);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn affine_evaluation() {
        let rot = OperatorSpec::affine(
            DenseMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap(),
            Vector::zeros(2),
            None,
            "rot",
        )
        .unwrap();
        assert_eq!(rot.evaluate(&v(&[1.0, 0.0])).unwrap(), v(&[0.0, -1.0]));
        let shifted = OperatorSpec::affine(DenseMatrix::identity(2), v(&[1.0, 1.0]), None, "id+1").unwrap();
        assert_eq!(shifted.evaluate(&v(&[0.0, 0.0])).unwrap(), v(&[1.0, 1.0]));
    }

    #[test]
    fn componentwise_square() {
        let op = OperatorSpec::componentwise(vec![ScalarMap::Square], None, "sq").unwrap();
        assert_eq!(op.evaluate(&v(&[-0.5])).unwrap(), v(&[0.25]));
    }

    #[test]
    fn unregistered_composite_is_configuration_error() {
        let op = OperatorSpec::composite("no-such-callback", None, "c").unwrap();
        assert!(matches!(op.evaluate(&v(&[1.0])), Err(ViError::Configuration(_))));
    }

    #[test]
    fn registered_composite_evaluates_and_non_finite_names_operator() {
        register_composite("double-test", Arc::new(|x: &Vector| x.iter().map(|c| 2.0 * c).collect()));
        let op = OperatorSpec::composite("double-test", Some(2.0), "double").unwrap();
        assert_eq!(op.evaluate(&v(&[1.5])).unwrap(), v(&[3.0]));

        register_composite("blowup-test", Arc::new(|x: &Vector| x.iter().map(|c| c / 0.0).collect()));
        let bad = OperatorSpec::composite("blowup-test", None, "blowup").unwrap();
        match bad.evaluate(&v(&[1.0])) {
            Err(ViError::Evaluation { operator, .. }) => assert_eq!(operator, "blowup"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lipschitz_below_spectral_norm_is_rejected() {
        let m = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(OperatorSpec::affine(m.clone(), Vector::zeros(2), Some(2.9), "m").is_err());
        assert!(OperatorSpec::affine(m, Vector::zeros(2), Some(3.0), "m").is_ok());
    }

    #[test]
    fn spectral_norm_of_known_matrix() {
        // singular values of [[1,2],[3,4]]: sqrt(15 + sqrt(221))
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let expected = (15.0 + 221f64.sqrt()).sqrt();
        assert!((m.spectral_norm_estimate() - expected).abs() < 1e-9);
    }

    #[test]
    fn catalog_problems_build() {
        for name in ["identity-box", "identity-box-5", "rotation-ball", "quasi-square-1d", "constant-1d", "square-1d-unbounded", "affine-hphard-8"] {
            let p = builtin(name).unwrap();
            assert!(p.dim() >= 1, "{name}");
        }
        assert_eq!(builtin("identity-box").unwrap().known_solutions().unwrap(), &[v(&[0.0, 0.0])]);
        assert_eq!(builtin("quasi-square-1d").unwrap().known_dual_solutions().unwrap(), &[v(&[-1.0])]);
    }

    #[test]
    fn unknown_problem_lists_catalog() {
        let err = builtin("nope").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("identity-box") && msg.contains("quasi-square-1d"), "{msg}");
        assert!(builtin("affine-hphard-0").is_err());
        assert!(builtin("identity-box-x").is_err());
    }

    #[test]
    fn hphard_is_seeded_and_zero_solves_it() {
        let a = builtin_with_seed("affine-hphard-8", 42).unwrap();
        let b = builtin_with_seed("affine-hphard-8", 42).unwrap();
        let c = builtin_with_seed("affine-hphard-8", 43).unwrap();
        let x = v(&[0.3; 8]);
        assert_eq!(a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap());
        assert_ne!(a.evaluate(&x).unwrap(), c.evaluate(&x).unwrap());
        assert_eq!(a.residual(&Vector::zeros(8), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hphard_matrix_is_strongly_monotone() {
        let p = builtin("affine-hphard-6").unwrap();
        let OperatorKind::Affine { matrix, .. } = p.op().kind() else { panic!() };
        // x^T M x ≥ min diag ≥ 1 for unit vectors, checked on basis and a few mixes
        for i in 0..6 {
            assert!(matrix.get(i, i) >= 1.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mx = matrix.mul_vec(&x);
            let quad: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
            let nsq: f64 = x.iter().map(|c| c * c).sum();
            assert!(quad >= nsq * (1.0 - 1e-9));
        }
    }

    #[test]
    fn declared_dual_solution_must_have_small_residual() {
        let p = builtin("quasi-square-1d").unwrap();
        let op = p.op().clone();
        let bad = VIProblem::new(op, FeasibleSet::cube(1, -1.0, 1.0).unwrap(), 1, "bad")
            .unwrap()
            .with_known_dual_solutions(vec![v(&[0.5])]);
        assert!(bad.is_err());
    }

    #[test]
    fn affine_text_roundtrip() {
        let text = "# 2x2 example\n2\n1 0\n0 3\n1 -1\n";
        let op = parse_affine_text(text, "file").unwrap();
        assert_eq!(op.evaluate(&v(&[1.0, 1.0])).unwrap(), v(&[2.0, 2.0]));
        assert!((op.lipschitz().unwrap() - 3.0).abs() < 1e-6);
        assert!(parse_affine_text("2\n1 0 0 3\n1", "short").is_err());
        assert!(parse_affine_text("x", "hdr").is_err());
        assert!(parse_affine_text("1\n1 nan?", "num").is_err());
    }

    #[test]
    fn classify_rotation_is_monotone() {
        let p = builtin("rotation-ball").unwrap();
        let r = classify_sample(p.op(), p.set(), 1000, 1).unwrap();
        assert!(r.monotone_not_refuted());
        assert!(r.pseudomonotone_not_refuted());
        assert!(r.quasimonotone_not_refuted());
    }

    #[test]
    fn classify_square_is_quasimonotone_not_monotone() {
        let p = builtin("quasi-square-1d").unwrap();
        let r = classify_sample(p.op(), p.set(), 1000, 1).unwrap();
        assert!(r.quasimonotone_not_refuted());
        assert!(!r.monotone_not_refuted());
    }

    #[test]
    fn classify_negation_is_not_quasimonotone() {
        let op = OperatorSpec::componentwise(vec![ScalarMap::Negate], None, "neg").unwrap();
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let r = classify_sample(&op, &set, 1000, 1).unwrap();
        assert!(!r.quasimonotone_not_refuted());
    }

    #[test]
    fn classify_is_deterministic() {
        let p = builtin("quasi-square-1d").unwrap();
        let a = classify_sample(p.op(), p.set(), 500, 9).unwrap();
        let b = classify_sample(p.op(), p.set(), 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(classify_sample(p.op(), p.set(), 0, 9).is_err());
    }
}
