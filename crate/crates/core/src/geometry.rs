//! Vectors in ℝⁿ, closed convex feasible sets and their metric projections.
//!
//! All closed-form projections are exact up to floating point. The only
//! iterative projection is onto an intersection of halfspaces, which runs
//! Dykstra's alternating scheme until the iterate stops moving.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Result, ViError};
use crate::problems::VIProblem;

/// Default cap on Dykstra sweeps for halfspace intersections.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
/// Default stopping tolerance for Dykstra sweeps.
pub const DEFAULT_SWEEP_TOL: f64 = 1e-12;
/// Half-width of the box used when sampling from an unbounded set.
pub const DEFAULT_SAMPLING_RADIUS: f64 = 10.0;

/// Dense real vector with finite components.
///
/// Constructors reject empty input and NaN/Inf. Arithmetic between finite
/// vectors can still overflow; callers that iterate (the solvers) check
/// [`Vector::is_finite`] on the values they keep.
#[derive(Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(ViError::Input("vector must have at least one component".into()));
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return Err(ViError::Input(format!(
                "component {i} is not finite ({})",
                components[i]
            )));
        }
        Ok(Self(components))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim >= 1 && value.is_finite());
        Self(vec![value; dim])
    }

    /// Wraps raw components produced by arithmetic on already-valid vectors.
    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        debug_assert!(!components.is_empty());
        Self(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(s, o)| s + a * o).collect())
    }

    pub fn scale(&self, a: f64) -> Vector {
        Self(self.0.iter().map(|c| a * c).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Self(self.0.iter().map(|&c| f(c)).collect())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(ViError::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale(self)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = ViError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

/// `{x : lower ≤ x ≤ upper}` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vector,
    upper: Vector,
}

impl BoxSet {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        upper.check_dim(lower.dim())?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(ViError::Input(format!(
                "box lower bound exceeds upper bound in component {i}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]ⁿ`
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Vector::new(vec![lo; dim])?, Vector::new(vec![hi; dim])?)
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }
}

/// `{x : ‖x − center‖ ≤ radius}`
#[derive(Debug, Clone, PartialEq)]
pub struct BallSet {
    center: Vector,
    radius: f64,
}

impl BallSet {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ViError::Input(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// `{x : ⟨normal, x⟩ ≤ offset}`
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Vector,
    offset: f64,
    normal_sq: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let normal_sq = normal.norm_sq();
        if normal_sq == 0.0 {
            return Err(ViError::Input("halfspace normal must be nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(ViError::Input("halfspace offset must be finite".into()));
        }
        Ok(Self {
            normal,
            offset,
            normal_sq,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn project(&self, v: &Vector) -> Vector {
        let excess = self.normal.dot(v) - self.offset;
        if excess <= 0.0 {
            v.clone()
        } else {
            v.axpy(-excess / self.normal_sq, &self.normal)
        }
    }

    fn violation(&self, v: &Vector) -> f64 {
        (self.normal.dot(v) - self.offset).max(0.0) / self.normal_sq.sqrt()
    }
}

/// Intersection of finitely many halfspaces, projected onto by Dykstra sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceIntersection {
    halfspaces: Vec<Halfspace>,
    max_sweeps: usize,
    tol: f64,
}

impl HalfspaceIntersection {
    pub fn new(halfspaces: Vec<Halfspace>) -> Result<Self> {
        Self::with_limits(halfspaces, DEFAULT_MAX_SWEEPS, DEFAULT_SWEEP_TOL)
    }

    pub fn with_limits(halfspaces: Vec<Halfspace>, max_sweeps: usize, tol: f64) -> Result<Self> {
        let Some(first) = halfspaces.first() else {
            return Err(ViError::Input("intersection needs at least one halfspace".into()));
        };
        let dim = first.normal.dim();
        for h in &halfspaces {
            h.normal.check_dim(dim)?;
        }
        if max_sweeps == 0 || !(tol > 0.0) {
            return Err(ViError::Input("sweep cap and tolerance must be positive".into()));
        }
        Ok(Self {
            halfspaces,
            max_sweeps,
            tol,
        })
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    fn dim(&self) -> usize {
        self.halfspaces[0].normal.dim()
    }

    fn project(&self, v: &Vector) -> Result<Vector> {
        if self.halfspaces.len() == 1 {
            return Ok(self.halfspaces[0].project(v));
        }
        let scale = 1.0 + v.norm();
        let mut x = v.clone();
        let mut corrections = vec![Vector::zeros(v.dim()); self.halfspaces.len()];
        let mut change = f64::INFINITY;
        for _ in 0..self.max_sweeps {
            let start = x.clone();
            let mut correction_change: f64 = 0.0;
            for (h, p) in self.halfspaces.iter().zip(corrections.iter_mut()) {
                let shifted = &x + p;
                let next = h.project(&shifted);
                let new_p = &shifted - &next;
                correction_change = correction_change.max(new_p.distance(p));
                *p = new_p;
                x = next;
            }
            change = x.distance(&start).max(correction_change);
            if change <= self.tol * scale {
                return Ok(x);
            }
        }
        Err(ViError::ProjectionNotConverged {
            sweeps: self.max_sweeps,
            change,
            best: x,
        })
    }
}

/// `{x ≥ 0 : Σx = scale}`
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSet {
    scale: f64,
}

impl SimplexSet {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ViError::Input(format!("simplex scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Sort-and-threshold projection.
    fn project(&self, v: &Vector) -> Vector {
        let mut sorted = v.as_slice().to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut cumulative = 0.0;
        let mut theta = 0.0;
        for (j, u) in sorted.iter().enumerate() {
            cumulative += u;
            let candidate = (cumulative - self.scale) / (j + 1) as f64;
            if u - candidate > 0.0 {
                theta = candidate;
            }
        }
        v.map(|c| (c - theta).max(0.0))
    }
}

/// A nonempty closed convex set with an exact (or Dykstra) projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    Box(BoxSet),
    Ball(BallSet),
    Halfspace(Halfspace),
    HalfspaceIntersection(HalfspaceIntersection),
    Simplex(SimplexSet),
}

impl FeasibleSet {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        BoxSet::cube(dim, lo, hi).map(Self::Box)
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::Ball(BallSet {
            center: Vector::zeros(dim),
            radius: 1.0,
        })
    }

    /// Dimension fixed by the set's data, if any.
    pub fn ambient_dim(&self) -> Option<usize> {
        match self {
            Self::WholeSpace | Self::Simplex(_) => None,
            Self::Box(b) => Some(b.lower.dim()),
            Self::Ball(b) => Some(b.center.dim()),
            Self::Halfspace(h) => Some(h.normal.dim()),
            Self::HalfspaceIntersection(h) => Some(h.dim()),
        }
    }

    pub fn check_dim(&self, v: &Vector) -> Result<()> {
        match self.ambient_dim() {
            Some(d) => v.check_dim(d),
            None => Ok(()),
        }
    }

    /// Metric projection `P_C(v)`.
    pub fn project(&self, v: &Vector) -> Result<Vector> {
        self.check_dim(v)?;
        Ok(match self {
            Self::WholeSpace => v.clone(),
            Self::Box(b) => Vector::from_raw(
                v.iter()
                    .zip(b.lower.iter().zip(b.upper.iter()))
                    .map(|(&c, (&lo, &hi))| c.clamp(lo, hi))
                    .collect(),
            ),
            Self::Ball(b) => {
                let offset = v - &b.center;
                let dist = offset.norm();
                if dist <= b.radius {
                    v.clone()
                } else {
                    b.center.axpy(b.radius / dist, &offset)
                }
            }
            Self::Halfspace(h) => h.project(v),
            Self::HalfspaceIntersection(h) => h.project(v)?,
            Self::Simplex(s) => s.project(v),
        })
    }

    /// Membership test with absolute slack `tol`.
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        if self.check_dim(v).is_err() {
            return false;
        }
        match self {
            Self::WholeSpace => true,
            Self::Box(b) => v
                .iter()
                .zip(b.lower.iter().zip(b.upper.iter()))
                .all(|(&c, (&lo, &hi))| c >= lo - tol && c <= hi + tol),
            Self::Ball(b) => v.distance(&b.center) <= b.radius + tol,
            Self::Halfspace(h) => h.violation(v) <= tol,
            Self::HalfspaceIntersection(hs) => hs.halfspaces.iter().all(|h| h.violation(v) <= tol),
            Self::Simplex(s) => {
                v.iter().all(|&c| c >= -tol) && (v.iter().sum::<f64>() - s.scale).abs() <= tol
            }
        }
    }

    /// Smallest axis-aligned box containing the set, when bounded.
    pub fn bounding_box(&self, dim: usize) -> Option<(Vector, Vector)> {
        match self {
            Self::Box(b) => Some((b.lower.clone(), b.upper.clone())),
            Self::Ball(b) => Some((
                b.center.map(|c| c - b.radius),
                b.center.map(|c| c + b.radius),
            )),
            Self::Simplex(s) => Some((Vector::zeros(dim), Vector::filled(dim, s.scale))),
            Self::WholeSpace | Self::Halfspace(_) | Self::HalfspaceIntersection(_) => None,
        }
    }

    /// Draws one point of the set.
    ///
    /// Boxes are sampled directly and simplices through sorted uniform
    /// spacings. Balls and halfspace sets use rejection from a box (the
    /// bounding box, or `[-radius, radius]ⁿ` for unbounded sets); if rejection
    /// keeps failing, the last candidate is projected onto the set.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, radius: f64, rng: &mut R) -> Vector {
        const MAX_REJECTIONS: usize = 10_000;
        let uniform_in = |lo: &Vector, hi: &Vector, rng: &mut R| {
            Vector::from_raw(
                lo.iter()
                    .zip(hi.iter())
                    .map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l })
                    .collect(),
            )
        };
        match self {
            Self::Box(b) => uniform_in(&b.lower, &b.upper, rng),
            Self::Simplex(s) => {
                let mut cuts: Vec<f64> = (0..dim.saturating_sub(1)).map(|_| rng.gen::<f64>()).collect();
                cuts.sort_by(f64::total_cmp);
                cuts.insert(0, 0.0);
                cuts.push(1.0);
                Vector::from_raw(cuts.windows(2).map(|w| s.scale * (w[1] - w[0])).collect())
            }
            Self::WholeSpace => {
                let (lo, hi) = (Vector::filled(dim, -radius), Vector::filled(dim, radius));
                uniform_in(&lo, &hi, rng)
            }
            _ => {
                let (lo, hi) = self
                    .bounding_box(dim)
                    .unwrap_or_else(|| (Vector::filled(dim, -radius), Vector::filled(dim, radius)));
                let mut candidate = uniform_in(&lo, &hi, rng);
                for _ in 0..MAX_REJECTIONS {
                    if self.contains(&candidate, 0.0) {
                        return candidate;
                    }
                    candidate = uniform_in(&lo, &hi, rng);
                }
                self.project(&candidate).unwrap_or(candidate)
            }
        }
    }
}

/// Natural-map residual `‖x − P_C(x − ψ·A(x))‖`; zero exactly at solutions.
pub fn residual(problem: &VIProblem, x: &Vector, psi: f64) -> Result<f64> {
    if !(psi > 0.0) {
        return Err(ViError::Input(format!("psi must be positive, got {psi}")));
    }
    let ax = problem.evaluate(x)?;
    let projected = problem.set().project(&x.axpy(-psi, &ax))?;
    Ok(x.distance(&projected))
}
