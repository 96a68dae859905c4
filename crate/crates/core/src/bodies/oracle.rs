use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::linalg::{dot, lp_norm, mat_vec, max_abs, norm2, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SymmetryClass {
    Symmetric,
    Unconditional,
}

pub type MemberFn = dyn Fn(&[f64]) -> bool + Send + Sync;

#[derive(Clone)]
pub enum OracleKind {
    /// `{x : ‖x‖_p ≤ scale}`.
    LpBall { p: f64, scale: f64 },
    /// `A·K` for an invertible `A`.
    Linear { base: Arc<BodyOracle>, matrix: DMatrix<f64>, inverse: DMatrix<f64> },
    Custom(Arc<MemberFn>),
}

impl fmt::Debug for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleKind::LpBall { p, scale } => write!(f, "LpBall {{ p: {p}, scale: {scale} }}"),
            OracleKind::Linear { base, matrix, .. } => write!(f, "Linear {{ base: {base:?}, matrix: {matrix} }}"),
            OracleKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Membership oracle for a symmetric star body with known inner and outer radii.
#[derive(Debug, Clone)]
pub struct BodyOracle {
    n: usize,
    kind: OracleKind,
    outer: f64,
    inner: f64,
    symmetry: SymmetryClass,
    det: f64,
}

const RADIAL_TOL: f64 = 1e-10;

/// `{x : ‖x‖_p ≤ scale}`.
pub fn make_lp_ball(n: usize, p: f64, scale: f64) -> Result<BodyOracle> {
    if n == 0 || !(p > 0.0) || !(scale > 0.0) {
        return Err(GeomError::Domain(format!("lp ball needs n ≥ 1, p > 0, scale > 0 (got n={n}, p={p}, scale={scale})")));
    }
    let e = if p.is_infinite() { 0.5 } else { 0.5 - 1.0 / p };
    let nf = n as f64;
    Ok(BodyOracle {
        n,
        kind: OracleKind::LpBall { p, scale },
        outer: scale * nf.powf(e.max(0.0)),
        inner: scale * nf.powf(e.min(0.0)),
        symmetry: SymmetryClass::Unconditional,
        det: 1.0,
    })
}

impl BodyOracle {
    /// Wraps an arbitrary membership predicate. The caller vouches for the radii
    /// and the symmetry class.
    pub fn custom(n: usize, member: Arc<MemberFn>, inner: f64, outer: f64, symmetry: SymmetryClass) -> Result<Self> {
        if !(inner > 0.0 && outer >= inner) {
            return Err(GeomError::Domain("custom oracle needs 0 < inner ≤ outer".into()));
        }
        Ok(Self { n, kind: OracleKind::Custom(member), outer, inner, symmetry, det: 1.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    pub fn symmetry_class(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn tracked_det(&self) -> f64 {
        self.det
    }

    /// `‖·‖_p` exponent when this is a plain l_p ball.
    pub fn lp_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            OracleKind::LpBall { p, scale } => Some((p, scale)),
            _ => None,
        }
    }

    /// Whether the body is known to be convex. Balls with `p < 1` are not.
    pub fn is_convex(&self) -> bool {
        match &self.kind {
            OracleKind::LpBall { p, .. } => *p >= 1.0,
            OracleKind::Linear { base, .. } => base.is_convex(),
            OracleKind::Custom(_) => true,
        }
    }

    pub fn member(&self, x: &[f64]) -> bool {
        match &self.kind {
            OracleKind::LpBall { p, scale } => lp_norm(x, *p) <= *scale,
            OracleKind::Linear { base, inverse, .. } => base.member(&mat_vec(inverse, x)),
            OracleKind::Custom(f) => f(x),
        }
    }

    /// Gauge `‖x‖_K = inf{t > 0 : x ∈ tK}`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let r = norm2(x);
        if r == 0.0 {
            return 0.0;
        }
        let u: Point = x.iter().map(|v| v / r).collect();
        r / self.radial(&u)
    }

    /// `sup{t > 0 : t·u ∈ K}` for a unit vector `u`; analytic for balls and
    /// their linear images, bisection otherwise.
    pub fn radial(&self, u: &[f64]) -> f64 {
        match &self.kind {
            OracleKind::LpBall { p, scale } => scale / lp_norm(u, *p),
            OracleKind::Linear { base, inverse, .. } => {
                let w = mat_vec(inverse, u);
                let nw = norm2(&w);
                let wu: Point = w.iter().map(|v| v / nw).collect();
                base.radial(&wu) / nw
            }
            OracleKind::Custom(_) => self.radial_bisect(u),
        }
    }

    /// Radial function by bisection on `[inner, outer]`, tolerance 1e-10 relative.
    pub fn radial_bisect(&self, u: &[f64]) -> f64 {
        let nu = norm2(u);
        let (mut lo, mut hi) = (self.inner / nu, self.outer / nu);
        let at = |t: f64| -> Point { u.iter().map(|v| v * t).collect() };
        if self.member(&at(hi)) {
            return hi;
        }
        if !self.member(&at(lo)) {
            lo = 0.0;
        }
        while hi - lo > RADIAL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if self.member(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `max_{x ∈ K} ⟨x, u⟩`. For non-convex balls this is the support of the
    /// convex hull.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: u.len() });
        }
        if max_abs(u) == 0.0 {
            return Err(GeomError::Domain("support direction must be nonzero".into()));
        }
        let x = self.support_point(u);
        Ok(dot(&x, u))
    }

    /// A point of `K` (or of its convex hull) attaining the support in direction `u`.
    pub fn support_point(&self, u: &[f64]) -> Point {
        match &self.kind {
            OracleKind::LpBall { p, scale } => lp_support_point(u, *p, *scale),
            OracleKind::Linear { base, matrix, .. } => {
                let w = mat_vec(&matrix.transpose(), u);
                mat_vec(matrix, &base.support_point(&w))
            }
            OracleKind::Custom(_) => self.numeric_support_point(u),
        }
    }

    /// Maximizes `⟨ρ(w)w, u⟩` over unit `w` by pattern search.
    fn numeric_support_point(&self, u: &[f64]) -> Point {
        let n = self.n;
        let eval = |w: &[f64]| -> (f64, Point) {
            let nw = norm2(w);
            let wu: Point = w.iter().map(|v| v / nw).collect();
            let r = self.radial(&wu);
            let x: Point = wu.iter().map(|v| v * r).collect();
            (dot(&x, u), x)
        };
        let mut w: Point = u.to_vec();
        let (mut best, mut bx) = eval(&w);
        let mut step = 0.5;
        while step > 1e-11 {
            let mut improved = false;
            for i in 0..n {
                for s in [step, -step] {
                    let mut c = w.clone();
                    c[i] += s * norm2(&w);
                    let (v, x) = eval(&c);
                    if v > best {
                        best = v;
                        bx = x;
                        w = c;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        bx
    }

    /// Image under the invertible linear map `x ↦ M x`.
    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: m.nrows() });
        }
        let inverse = m.clone().try_inverse().ok_or(GeomError::Degenerate { rank: m.rank(1e-12), dim: self.n })?;
        let sv = m.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let diagonal = (0..self.n).all(|i| (0..self.n).all(|l| i == l || m[(i, l)] == 0.0));
        let symmetry = if diagonal { self.symmetry } else { SymmetryClass::Symmetric };
        Ok(Self {
            n: self.n,
            outer: self.outer * smax,
            inner: self.inner * smin,
            symmetry,
            det: self.det * m.determinant(),
            kind: OracleKind::Linear { base: Arc::new(self.clone()), matrix: m.clone(), inverse },
        })
    }

    pub fn diagonal_image(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: d.len() });
        }
        if d.iter().any(|x| !(*x > 0.0)) {
            return Err(GeomError::Domain("diagonal entries must be positive".into()));
        }
        self.linear_image(&DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }
}

fn lp_support_point(u: &[f64], p: f64, scale: f64) -> Point {
    let n = u.len();
    if p <= 1.0 {
        // extreme points of conv(B_p) for p ≤ 1 are ±e_i
        let i = (0..n).fold(0, |b, i| if u[i].abs() > u[b].abs() { i } else { b });
        return (0..n).map(|l| if l == i { scale * u[i].signum() } else { 0.0 }).collect();
    }
    if p.is_infinite() {
        return u.iter().map(|v| if *v == 0.0 { 0.0 } else { scale * v.signum() }).collect();
    }
    let q = p / (p - 1.0);
    let nq = lp_norm(u, q);
    u.iter().map(|v| scale * v.signum() * (v.abs() / nq).powf(q - 1.0)).collect()
}

/// A symmetric body: an exact polytope or a membership oracle.
#[derive(Debug, Clone)]
pub enum Body {
    Polytope(super::SymmetricPolytope),
    Oracle(BodyOracle),
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Polytope(p) => p.dim(),
            Body::Oracle(o) => o.dim(),
        }
    }

    pub fn member(&self, x: &[f64]) -> bool {
        match self {
            Body::Polytope(p) => p.contains(x, 1e-12),
            Body::Oracle(o) => o.member(x),
        }
    }

    pub fn support(&self, u: &[f64]) -> Result<f64> {
        match self {
            Body::Polytope(p) => p.support(u),
            Body::Oracle(o) => o.support(u),
        }
    }

    pub fn support_point(&self, u: &[f64]) -> Point {
        match self {
            Body::Polytope(p) => p.support_point(u).clone(),
            Body::Oracle(o) => o.support_point(u),
        }
    }

    /// Radius of a Euclidean ball containing the body.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Body::Polytope(p) => p.vertices().iter().map(|v| norm2(v)).fold(0.0, f64::max),
            Body::Oracle(o) => o.outer_radius(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Body::Polytope(p) if p.is_degenerate())
    }

    pub fn diagonal_image(&self, d: &[f64]) -> Result<Body> {
        Ok(match self {
            Body::Polytope(p) => Body::Polytope(p.diagonal_image(d)?),
            Body::Oracle(o) => Body::Oracle(o.diagonal_image(d)?),
        })
    }

    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Body> {
        Ok(match self {
            Body::Polytope(p) => Body::Polytope(p.linear_image(m)?),
            Body::Oracle(o) => Body::Oracle(o.linear_image(m)?),
        })
    }
}

impl From<super::SymmetricPolytope> for Body {
    fn from(p: super::SymmetricPolytope) -> Self {
        Body::Polytope(p)
    }
}

impl From<BodyOracle> for Body {
    fn from(o: BodyOracle) -> Self {
        Body::Oracle(o)
    }
}
