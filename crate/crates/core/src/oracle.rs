//! Brute-force solution sets on a grid, for problems of dimension at most 3.
//!
//! A grid point `x ∈ C` is a solution if `⟨A(x), z − x⟩ ≥ −tol` for every grid
//! point `z ∈ C`, and a dual solution if `⟨A(z), z − x⟩ ≥ −tol` for every such
//! `z`. The quantifier only sees the grid, so points within O(step) of the true
//! boundary of a solution set can be admitted. Hits whose grid indices differ
//! by at most 2 in every coordinate are merged and reported as one centroid.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Result, ViError};
use crate::geometry::Vector;
use crate::problems::VIProblem;

pub const MAX_GRID_POINTS: u64 = 10_000_000;
pub const MAX_ORACLE_DIM: usize = 3;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-9;
const MEMBERSHIP_TOL: f64 = 1e-12;

/// Default step: `1e-3` in one dimension, `1e-2` otherwise.
pub fn default_step(dim: usize) -> f64 {
    if dim <= 1 {
        1e-3
    } else {
        1e-2
    }
}

/// A rectangular grid; coordinate `i` of axis `d` is `lo + (hi − lo)·i/N_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lower: Vector,
    upper: Vector,
    step: f64,
    counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vector, upper: Vector, step: f64) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(ViError::DimensionMismatch {
                expected: lower.dim(),
                got: upper.dim(),
            });
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(ViError::Input(format!("grid step must be positive, got {step}")));
        }
        if lower.iter().zip(upper.iter()).any(|(l, h)| l > h) {
            return Err(ViError::Input(format!("grid range is empty: {lower} to {upper}")));
        }
        let counts: Vec<usize> = lower
            .iter()
            .zip(upper.iter())
            .map(|(l, h)| ((h - l) / step).round().max(0.0) as usize)
            .collect();
        let points = counts.iter().map(|&n| n as u128 + 1).product::<u128>();
        if points > MAX_GRID_POINTS as u128 {
            return Err(ViError::GridTooLarge {
                points,
                cap: MAX_GRID_POINTS,
            });
        }
        Ok(Self {
            lower,
            upper,
            step,
            counts,
        })
    }

    /// Grid over the bounding box of the problem's feasible set.
    pub fn for_problem(problem: &VIProblem, step: Option<f64>) -> Result<Self> {
        let (lo, hi) = problem.set().bounding_box(problem.dim()).ok_or_else(|| {
            ViError::Input(format!(
                "feasible set of {} is unbounded; give grid ranges explicitly",
                problem.label()
            ))
        })?;
        Self::new(lo, hi, step.unwrap_or_else(|| default_step(problem.dim())))
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.counts.iter().map(|&n| n + 1).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            let n = self.counts[d] + 1;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    fn coord(&self, d: usize, i: usize) -> f64 {
        let (lo, hi, n) = (self.lower[d], self.upper[d], self.counts[d]);
        if n == 0 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / n as f64
        }
    }

    fn point(&self, idx: &[usize]) -> Vector {
        Vector::from_raw(idx.iter().enumerate().map(|(d, &i)| self.coord(d, i)).collect())
    }
}

struct GridPoint {
    idx: Vec<usize>,
    x: Vector,
}

/// Feasible grid points with their operator values, stored flat.
struct Feasible {
    dim: usize,
    points: Vec<GridPoint>,
    xs: Vec<f64>,
    axs: Vec<f64>,
}

impl Feasible {
    fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    fn ax(&self, i: usize) -> &[f64] {
        &self.axs[i * self.dim..(i + 1) * self.dim]
    }
}

fn feasible_points(problem: &VIProblem, grid: &GridSpec) -> Result<Feasible> {
    if problem.dim() > MAX_ORACLE_DIM {
        return Err(ViError::Input(format!(
            "oracle supports dimension <= {MAX_ORACLE_DIM}, got {}",
            problem.dim()
        )));
    }
    if grid.dim() != problem.dim() {
        return Err(ViError::DimensionMismatch {
            expected: problem.dim(),
            got: grid.dim(),
        });
    }
    let found: Vec<Option<(GridPoint, Vector)>> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let idx = grid.index(flat);
            let x = grid.point(&idx);
            if !problem.set().contains(&x, MEMBERSHIP_TOL) {
                return Ok(None);
            }
            let ax = problem.evaluate(&x)?;
            Ok(Some((GridPoint { idx, x }, ax)))
        })
        .collect::<Result<_>>()?;
    let dim = grid.dim();
    let mut out = Feasible {
        dim,
        points: Vec::new(),
        xs: Vec::new(),
        axs: Vec::new(),
    };
    for (p, ax) in found.into_iter().flatten() {
        out.xs.extend(p.x.iter());
        out.axs.extend(ax.iter());
        out.points.push(p);
    }
    Ok(out)
}

/// `⟨a, z − x⟩`
fn gap(a: &[f64], z: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(z).zip(x).map(|((a, z), x)| a * (z - x)).sum()
}

/// Grid solutions of the primal inequality, clustered.
pub fn brute_solutions(problem: &VIProblem, grid: &GridSpec, tol: f64) -> Result<Vec<Vector>> {
    search(problem, grid, tol, |f, c, z| gap(f.ax(c), f.x(z), f.x(c)))
}

/// Grid solutions of the dual inequality, clustered.
pub fn brute_dual_solutions(problem: &VIProblem, grid: &GridSpec, tol: f64) -> Result<Vec<Vector>> {
    search(problem, grid, tol, |f, c, z| gap(f.ax(z), f.x(z), f.x(c)))
}

const CHUNK: usize = 256;
const WITNESS_CACHE: usize = 16;

fn search<F>(problem: &VIProblem, grid: &GridSpec, tol: f64, gap: F) -> Result<Vec<Vector>>
where
    F: Fn(&Feasible, usize, usize) -> f64 + Sync,
{
    if !(tol >= 0.0) {
        return Err(ViError::Input(format!("oracle tolerance must be nonnegative, got {tol}")));
    }
    let f = feasible_points(problem, grid)?;
    let n = f.points.len();
    // Each chunk keeps recent violating z and tries them first; a candidate
    // without a cached witness is checked against every z, starting from its
    // own grid position.
    let hits: Vec<usize> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut witnesses: Vec<usize> = Vec::with_capacity(WITNESS_CACHE);
            let mut hits = Vec::new();
            for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(n) {
                let violated = |z: usize| gap(&f, c, z) < -tol;
                if let Some(pos) = witnesses.iter().position(|&z| violated(z)) {
                    let z = witnesses.remove(pos);
                    witnesses.insert(0, z);
                } else if let Some(z) = (c..n).chain(0..c).find(|&z| violated(z)) {
                    if witnesses.len() == WITNESS_CACHE {
                        witnesses.pop();
                    }
                    witnesses.insert(0, z);
                } else {
                    hits.push(c);
                }
            }
            hits
        })
        .collect();
    Ok(cluster(&hits.iter().map(|&i| &f.points[i]).collect::<Vec<_>>()))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn neighbour_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|o| {
                (-2..=2).map(move |d| {
                    let mut o = o.clone();
                    o.push(d);
                    o
                })
            })
            .collect();
    }
    out
}

fn cluster(hits: &[&GridPoint]) -> Vec<Vector> {
    if hits.is_empty() {
        return Vec::new();
    }
    let dim = hits[0].idx.len();
    let lookup: HashMap<&[usize], usize> = hits.iter().enumerate().map(|(i, p)| (p.idx.as_slice(), i)).collect();
    let mut parent: Vec<usize> = (0..hits.len()).collect();
    let offsets = neighbour_offsets(dim);
    for (i, p) in hits.iter().enumerate() {
        for off in &offsets {
            let neighbour: Option<Vec<usize>> = p
                .idx
                .iter()
                .zip(off)
                .map(|(&c, &o)| usize::try_from(c as i64 + o).ok())
                .collect();
            if let Some(&j) = neighbour.as_deref().and_then(|n| lookup.get(n)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: HashMap<usize, (Vec<f64>, usize)> = HashMap::new();
    for (i, p) in hits.iter().enumerate() {
        let root = find(&mut parent, i);
        let entry = groups.entry(root).or_insert_with(|| (vec![0.0; dim], 0));
        for (s, c) in entry.0.iter_mut().zip(p.x.iter()) {
            *s += c;
        }
        entry.1 += 1;
    }
    let mut centroids: Vec<Vector> = groups
        .into_values()
        .map(|(sum, n)| Vector::from_raw(sum.into_iter().map(|s| s / n as f64).collect()))
        .collect();
    centroids.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    centroids
}

/// Whether every point of `inner` lies within `radius` of some point of `outer`.
pub fn within(inner: &[Vector], outer: &[Vector], radius: f64) -> bool {
    inner.iter().all(|p| outer.iter().any(|q| p.distance(q) <= radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;

    fn scalars(v: &[Vector]) -> Vec<f64> {
        v.iter().map(|p| p[0]).collect()
    }

    #[test]
    fn quasi_square_sets() {
        let p = builtin("quasi-square-1d").unwrap();
        let g = GridSpec::for_problem(&p, None).unwrap();
        assert_eq!(g.len(), 2001);
        let s = brute_solutions(&p, &g, DEFAULT_ORACLE_TOL).unwrap();
        let sd = brute_dual_solutions(&p, &g, DEFAULT_ORACLE_TOL).unwrap();
        assert_eq!(scalars(&s), vec![-1.0, 0.0]);
        assert_eq!(scalars(&sd), vec![-1.0]);
    }

    #[test]
    fn identity_box_and_rotation_ball() {
        for name in ["identity-box", "rotation-ball"] {
            let p = builtin(name).unwrap();
            let g = GridSpec::for_problem(&p, Some(0.05)).unwrap();
            let zero = vec![Vector::zeros(2)];
            assert_eq!(brute_solutions(&p, &g, DEFAULT_ORACLE_TOL).unwrap(), zero, "{name}");
            assert_eq!(brute_dual_solutions(&p, &g, DEFAULT_ORACLE_TOL).unwrap(), zero, "{name}");
        }
    }

    #[test]
    fn constant_left_endpoint() {
        let p = builtin("constant-1d").unwrap();
        let g = GridSpec::for_problem(&p, None).unwrap();
        assert_eq!(scalars(&brute_solutions(&p, &g, DEFAULT_ORACLE_TOL).unwrap()), vec![-1.0]);
        assert_eq!(scalars(&brute_dual_solutions(&p, &g, DEFAULT_ORACLE_TOL).unwrap()), vec![-1.0]);
    }

    #[test]
    fn grid_cap_and_unbounded() {
        let lo = Vector::filled(3, 0.0);
        let hi = Vector::filled(3, 1.0);
        assert!(matches!(
            GridSpec::new(lo, hi, 1e-3),
            Err(ViError::GridTooLarge { .. })
        ));
        assert!(GridSpec::for_problem(&builtin("square-1d-unbounded").unwrap(), None).is_err());
        assert!(GridSpec::new(Vector::zeros(1), Vector::zeros(1), 0.0).is_err());
    }

    #[test]
    fn oracle_rejects_high_dimension() {
        let p = builtin("identity-box-4").unwrap();
        let g = GridSpec::new(Vector::filled(4, -1.0), Vector::filled(4, 1.0), 0.5).unwrap();
        assert!(brute_solutions(&p, &g, DEFAULT_ORACLE_TOL).is_err());
    }

    #[test]
    fn clusters_merge_adjacent_and_sort() {
        let mk = |i: usize, x: f64| GridPoint {
            idx: vec![i],
            x: Vector::from_raw(vec![x]),
        };
        let pts = [mk(10, 1.0), mk(0, 0.0), mk(2, 0.2), mk(4, 0.4)];
        let refs: Vec<&GridPoint> = pts.iter().collect();
        let c = cluster(&refs);
        assert_eq!(c.len(), 2);
        assert!((c[0][0] - 0.2).abs() < 1e-15);
        assert_eq!(c[1][0], 1.0);
    }
}
