use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::hull::{halfspace_vertices, Hull};
use crate::linalg::{dist, dot, max_abs, mat_vec, neg, Point};

/// Origin-symmetric V-polytope. Vertices are stored in pairs `(v, -v)` with
/// the negation computed bitwise, so closure under `x ↦ -x` is exact.
#[derive(Debug, Clone)]
pub struct SymmetricPolytope {
    n: usize,
    vertices: Vec<Point>,
    degenerate: bool,
    det: f64,
    hull: Option<Arc<Hull>>,
}

impl SymmetricPolytope {
    /// Irredundant vertex list of `conv(points ∪ -points)`.
    ///
    /// A lower-dimensional input is not an error: the result keeps every
    /// distinct point pair and carries the degenerate flag.
    pub fn hull_reduce(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(GeomError::Domain("hull_reduce needs at least one point".into()));
        }
        let n = points[0].len();
        if let Some(bad) = points.iter().find(|p| p.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: bad.len() });
        }
        let sym: Vec<Point> = points.iter().flat_map(|p| [p.clone(), neg(p)]).collect();
        let (kept, hull) = match Hull::new(&sym) {
            Ok(h) => {
                let mut keep = vec![false; points.len()];
                for i in h.extreme_indices() {
                    keep[i / 2] = true;
                }
                (keep, true)
            }
            Err(GeomError::Degenerate { .. }) => (points.iter().map(|p| max_abs(p) > 0.0).collect(), false),
            Err(e) => return Err(e),
        };
        let scale = points.iter().map(|p| max_abs(p)).fold(0.0, f64::max);
        // vertices closer than this are one vertex seen twice through rounding;
        // each cluster is replaced by its mean
        let tol = 1e-9 * scale.max(1e-300);
        let mut clusters: Vec<(Point, Point, usize)> = Vec::new();
        for (p, k) in points.iter().zip(kept) {
            if !k {
                continue;
            }
            let np = neg(p);
            if let Some(c) = clusters.iter_mut().find(|c| dist(&c.0, p) <= tol || dist(&c.0, &np) <= tol) {
                let q = if dist(&c.0, p) <= tol { p } else { &np };
                c.1.iter_mut().zip(q).for_each(|(s, x)| *s += x);
                c.2 += 1;
                continue;
            }
            clusters.push((p.clone(), p.clone(), 1));
        }
        let reps: Vec<Point> = clusters
            .into_iter()
            .map(|(first, sum, m)| if m == 1 { first } else { sum.iter().map(|x| x / m as f64).collect() })
            .collect();
        Self::from_pairs(n, reps, !hull)
    }

    /// Builds from one representative per vertex pair, assuming irredundancy.
    pub(crate) fn from_pairs(n: usize, reps: Vec<Point>, degenerate: bool) -> Result<Self> {
        let vertices: Vec<Point> = reps.iter().flat_map(|p| [p.clone(), neg(p)]).collect();
        let hull = if degenerate {
            None
        } else {
            match Hull::new(&vertices) {
                Ok(h) => Some(Arc::new(h)),
                Err(GeomError::Degenerate { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        let degenerate = hull.is_none();
        Ok(Self { n, vertices, degenerate, det: 1.0, hull })
    }

    /// `[-a, a]^n`.
    pub fn cube(n: usize, a: f64) -> Self {
        let reps: Vec<Point> = (0..1usize << (n - 1))
            .map(|m| (0..n).map(|b| if b + 1 < n && (m >> b) & 1 == 1 { -a } else { a }).collect())
            .collect();
        Self::from_pairs(n, reps, false).expect("cube is full-dimensional")
    }

    /// `a · conv{±e_1, …, ±e_n}`.
    pub fn cross_polytope(n: usize, a: f64) -> Self {
        let reps = (0..n).map(|i| (0..n).map(|l| if l == i { a } else { 0.0 }).collect()).collect();
        Self::from_pairs(n, reps, false).expect("cross-polytope is full-dimensional")
    }

    /// Inscribed polytope approximation of `B_p^n` with boundary points on
    /// `count` directions (evenly spaced angles in the plane, a Fibonacci
    /// sphere otherwise). Directions always include the coordinate axes.
    pub fn lp_ball(n: usize, p: f64, count: usize) -> Result<Self> {
        if n == 0 || !(p > 0.0) {
            return Err(GeomError::Domain("lp_ball needs n ≥ 1 and p > 0".into()));
        }
        let dirs: Vec<Point> = match n {
            1 => vec![vec![1.0]],
            2 => {
                let m = (count.max(8) / 4) * 4;
                (0..m / 2)
                    .map(|i| {
                        let t = std::f64::consts::PI * i as f64 / (m / 2) as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect()
            }
            _ => {
                let mut d = fibonacci_sphere(n, count.max(2 * n));
                for i in 0..n {
                    d.push((0..n).map(|l| if l == i { 1.0 } else { 0.0 }).collect());
                }
                d
            }
        };
        let pts: Vec<Point> = dirs
            .into_iter()
            .map(|u| {
                let r = 1.0 / crate::linalg::lp_norm(&u, p);
                u.iter().map(|x| x * r).collect()
            })
            .collect();
        Self::hull_reduce(&pts)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// All vertices, as consecutive pairs `(v, -v)`.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// One vertex of each antipodal pair.
    pub fn half_vertices(&self) -> impl Iterator<Item = &Point> {
        self.vertices.iter().step_by(2)
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Accumulated determinant of the linear maps applied through
    /// [`Self::linear_image`] and [`Self::diagonal_image`].
    pub fn tracked_det(&self) -> f64 {
        self.det
    }

    pub fn hull(&self) -> Result<&Hull> {
        self.hull.as_deref().ok_or(GeomError::Degenerate { rank: crate::hull::affine_rank(&self.vertices), dim: self.n })
    }

    /// `max_{x ∈ P} ⟨x, u⟩`, exact over vertices.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: u.len() });
        }
        if max_abs(u) == 0.0 {
            return Err(GeomError::Domain("support direction must be nonzero".into()));
        }
        Ok(self.vertices.iter().map(|v| dot(v, u)).fold(f64::NEG_INFINITY, f64::max))
    }

    /// A vertex attaining the support value in direction `u` (first in storage order).
    pub fn support_point(&self, u: &[f64]) -> &Point {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, v) in self.vertices.iter().enumerate() {
            let s = dot(v, u);
            if s > best.0 {
                best = (s, i);
            }
        }
        &self.vertices[best.1]
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match &self.hull {
            Some(h) => h.contains(x, tol),
            None => false,
        }
    }

    /// Facet inequalities `⟨a, x⟩ ≤ b` with unit normals.
    pub fn halfspaces(&self) -> Result<HalfspacePolytope> {
        let hs = self.hull()?.halfspaces();
        Ok(HalfspacePolytope { n: self.n, constraints: hs, bounded: Boundedness::Bounded, degenerate: false })
    }

    /// Image under the linear map `x ↦ M x`.
    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: m.nrows() });
        }
        let reps: Vec<Point> = self.half_vertices().map(|v| mat_vec(m, v)).collect();
        let det = m.determinant();
        let mut out = if det.abs() > 0.0 && !self.degenerate {
            Self::from_pairs(self.n, reps, false)?
        } else {
            Self::hull_reduce(&reps)?
        };
        out.det = self.det * det;
        Ok(out)
    }

    /// Image under `x ↦ (d_1 x_1, …, d_n x_n)`, all `d_m > 0`.
    pub fn diagonal_image(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: d.len() });
        }
        if d.iter().any(|x| !(*x > 0.0)) {
            return Err(GeomError::Domain("diagonal entries must be positive".into()));
        }
        self.linear_image(&DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        self.linear_image(&(DMatrix::identity(self.n, self.n) * lambda))
    }

    /// Hausdorff distance between the vertex set and its image under the
    /// coordinate reflection `x_axis ↦ -x_axis` (vertex-to-vertex matching).
    pub fn reflection_defect(&self, axis: usize) -> f64 {
        let flipped = |v: &Point| {
            let mut w = v.clone();
            w[axis] = -w[axis];
            w
        };
        self.vertices
            .iter()
            .map(|v| {
                let fv = flipped(v);
                self.vertices.iter().map(|w| dist(&fv, w)).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Largest reflection defect over all coordinate axes; zero for unconditional bodies.
    pub fn unconditional_defect(&self) -> f64 {
        (0..self.n).map(|a| self.reflection_defect(a)).fold(0.0, f64::max)
    }
}

fn fibonacci_sphere(n: usize, count: usize) -> Vec<Point> {
    // golden-angle spiral on S^2; for n > 3 a deterministic quasi-random fill
    if n == 3 {
        let ga = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let t = ga * i as f64;
                vec![r * t.cos(), r * t.sin(), z]
            })
            .collect();
    }
    let primes = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    (0..count)
        .map(|i| {
            let v: Point = (0..n)
                .map(|c| {
                    let a = (i as f64 + 1.0) * primes[c % primes.len()].sqrt();
                    2.0 * (a - a.floor()) - 1.0
                })
                .collect();
            let nv = crate::linalg::norm2(&v);
            v.iter().map(|x| x / nv).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Boundedness {
    Bounded,
    Unbounded,
    Unknown,
}

/// `{x : ⟨a_i, x⟩ ≤ b_i}`.
#[derive(Debug, Clone)]
pub struct HalfspacePolytope {
    pub(crate) n: usize,
    pub(crate) constraints: Vec<(Point, f64)>,
    pub(crate) bounded: Boundedness,
    /// Set when the origin is not strictly feasible, so no symmetric body with
    /// nonempty interior fits the constraints.
    pub(crate) degenerate: bool,
}

impl HalfspacePolytope {
    pub fn new(n: usize, constraints: Vec<(Point, f64)>) -> Result<Self> {
        if let Some((a, _)) = constraints.iter().find(|(a, _)| a.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: a.len() });
        }
        let degenerate = constraints.iter().any(|(_, b)| !(*b > 0.0));
        Ok(Self { n, constraints, bounded: Boundedness::Unknown, degenerate })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[(Point, f64)] {
        &self.constraints
    }

    pub fn boundedness(&self) -> Boundedness {
        self.bounded
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Decides boundedness and drops redundant constraints.
    pub fn analyzed(mut self) -> Result<Self> {
        if self.degenerate {
            return Ok(self);
        }
        let hv = halfspace_vertices(&self.constraints, self.n)?;
        self.bounded = if hv.bounded { Boundedness::Bounded } else { Boundedness::Unbounded };
        self.constraints = hv.irredundant.iter().map(|&i| self.constraints[i].clone()).collect();
        Ok(self)
    }

    /// Vertex list of a bounded polytope whose origin is strictly feasible.
    pub fn vertices(&self) -> Result<Vec<Point>> {
        if self.degenerate {
            return Err(GeomError::Degenerate { rank: 0, dim: self.n });
        }
        let hv = halfspace_vertices(&self.constraints, self.n)?;
        if !hv.bounded {
            return Err(GeomError::Unbounded);
        }
        Ok(hv.vertices)
    }

    /// Minimum over constraints of `b - ⟨a, x⟩`; negative means `x` is outside.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|(a, b)| b - dot(a, x)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slack(x) >= -tol
    }

    /// Converts to a V-polytope, checking central symmetry of the vertex set.
    pub fn to_symmetric(&self) -> Result<SymmetricPolytope> {
        let verts = self.vertices()?;
        let scale = verts.iter().map(|v| max_abs(v)).fold(0.0, f64::max);
        let tol = 1e-8 * scale.max(1.0);
        let mut used = vec![false; verts.len()];
        let mut reps = Vec::new();
        let mut defect: f64 = 0.0;
        for i in 0..verts.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let nv = neg(&verts[i]);
            let (best, d) = (0..verts.len())
                .filter(|&l| !used[l])
                .map(|l| (l, dist(&verts[l], &nv)))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            defect = defect.max(d);
            if best != usize::MAX && d <= tol {
                used[best] = true;
            }
            reps.push(verts[i].clone());
        }
        if defect > tol {
            return Err(GeomError::NotSymmetric { defect });
        }
        SymmetricPolytope::from_pairs(self.n, reps, false)
    }
}
