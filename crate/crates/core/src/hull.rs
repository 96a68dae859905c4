//! Convex hulls in ℝ^d by outside-set incremental construction.
//!
//! Facets are kept simplicial: a non-simplicial face of the hull appears as
//! several coplanar facets. [`Hull::halfspaces`] merges them back and
//! [`Hull::extreme_indices`] filters points that merely lie on a face.

use std::collections::HashMap;

use crate::error::{GeomError, Result};
use nalgebra::{DMatrix, DVector};

use crate::linalg::{cross, det_rows, dist, dot, factorial, max_abs, norm2, scale, sub, Point};

/// Relative tolerance used for visibility and coplanarity tests.
pub const HULL_EPS: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct Facet {
    pub vertices: Vec<usize>,
    /// Unit outward normal.
    pub normal: Point,
    /// `normal · x ≤ offset` on the hull.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct Hull {
    dim: usize,
    points: Vec<Point>,
    facets: Vec<Facet>,
    interior: Point,
    eps: f64,
}

/// Affine rank of a point set, with tolerance relative to its extent.
pub fn affine_rank(points: &[Point]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let extent = points.iter().map(|p| max_abs(&sub(p, &points[0]))).fold(0.0, f64::max);
    if extent == 0.0 {
        return 0;
    }
    greedy_simplex(points, points[0].len(), 1e-9 * extent).len() - 1
}

/// Picks up to `dim + 1` affinely independent points greedily by distance to
/// the current affine span.
fn greedy_simplex(points: &[Point], dim: usize, tol: f64) -> Vec<usize> {
    let first = (0..points.len())
        .min_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap().then(a.cmp(&b)))
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<Point> = Vec::new();
    let origin = points[first].clone();
    while chosen.len() <= dim {
        let mut best = (0.0, usize::MAX, Vec::new());
        for (i, p) in points.iter().enumerate() {
            let mut r = sub(p, &origin);
            for b in &basis {
                let c = dot(&r, b);
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            let nr = norm2(&r);
            if nr > best.0 {
                best = (nr, i, r);
            }
        }
        if best.0 <= tol {
            break;
        }
        chosen.push(best.1);
        basis.push(scale(&best.2, 1.0 / best.0));
    }
    chosen
}

impl Hull {
    /// Builds the hull of a full-dimensional point set.
    pub fn new(points: &[Point]) -> Result<Hull> {
        if points.is_empty() {
            return Err(GeomError::Domain("hull of an empty point set".into()));
        }
        let dim = points[0].len();
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(GeomError::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let extent = points.iter().map(|p| max_abs(p)).fold(0.0, f64::max).max(
            points.iter().map(|p| max_abs(&sub(p, &points[0]))).fold(0.0, f64::max),
        );
        if extent == 0.0 || !extent.is_finite() {
            return Err(GeomError::Degenerate { rank: 0, dim });
        }
        let simplex = greedy_simplex(points, dim, 1e-9 * extent);
        if simplex.len() <= dim {
            return Err(GeomError::Degenerate { rank: simplex.len() - 1, dim });
        }
        let mut interior = vec![0.0; dim];
        for &i in &simplex {
            for (c, x) in interior.iter_mut().zip(&points[i]) {
                *c += x / (dim + 1) as f64;
            }
        }
        let mut hull = Hull { dim, points: points.to_vec(), facets: Vec::new(), interior, eps: HULL_EPS * extent };
        hull.build(&simplex)?;
        Ok(hull)
    }

    fn make_facet(&self, vertices: Vec<usize>) -> Result<Facet> {
        let base = &self.points[vertices[0]];
        let rows: Vec<Point> = vertices[1..].iter().map(|&v| sub(&self.points[v], base)).collect();
        let mut normal = cross(&rows, self.dim);
        let nn = norm2(&normal);
        if !(nn > 0.0) {
            return Err(GeomError::Degenerate { rank: self.dim - 1, dim: self.dim });
        }
        normal.iter_mut().for_each(|x| *x /= nn);
        let mut offset = dot(&normal, base);
        if dot(&normal, &self.interior) > offset {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        Ok(Facet { vertices, normal, offset })
    }

    fn build(&mut self, simplex: &[usize]) -> Result<()> {
        let mut facets: Vec<Facet> = Vec::new();
        for skip in 0..simplex.len() {
            let verts: Vec<usize> = simplex.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
            facets.push(self.make_facet(verts)?);
        }
        let mut alive = vec![true; facets.len()];
        let mut outside: Vec<Vec<usize>> = vec![Vec::new(); facets.len()];
        let in_simplex: Vec<bool> = {
            let mut m = vec![false; self.points.len()];
            simplex.iter().for_each(|&i| m[i] = true);
            m
        };
        for (i, p) in self.points.iter().enumerate() {
            if in_simplex[i] {
                continue;
            }
            if let Some(f) = facets.iter().position(|f| dot(&f.normal, p) - f.offset > self.eps) {
                outside[f].push(i);
            }
        }
        let mut cursor = 0;
        loop {
            while cursor < facets.len() && (!alive[cursor] || outside[cursor].is_empty()) {
                cursor += 1;
            }
            if cursor >= facets.len() {
                break;
            }
            let f = &facets[cursor];
            let apex = *outside[cursor]
                .iter()
                .max_by(|&&a, &&b| {
                    let da = dot(&f.normal, &self.points[a]);
                    let db = dot(&f.normal, &self.points[b]);
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            let p = self.points[apex].clone();
            let visible: Vec<usize> = (0..facets.len())
                .filter(|&i| alive[i] && dot(&facets[i].normal, &p) - facets[i].offset > self.eps)
                .collect();
            let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut ridge_order: Vec<Vec<usize>> = Vec::new();
            for &v in &visible {
                let verts = &facets[v].vertices;
                for skip in 0..verts.len() {
                    let mut r: Vec<usize> = verts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &x)| x).collect();
                    r.sort_unstable();
                    let c = ridges.entry(r.clone()).or_insert(0);
                    if *c == 0 {
                        ridge_order.push(r);
                    }
                    *c += 1;
                }
            }
            let mut orphans: Vec<usize> = Vec::new();
            for &v in &visible {
                alive[v] = false;
                orphans.append(&mut outside[v]);
            }
            let first_new = facets.len();
            for r in ridge_order {
                if ridges[&r] != 1 {
                    continue;
                }
                let mut verts = r;
                verts.push(apex);
                facets.push(self.make_facet(verts)?);
                alive.push(true);
                outside.push(Vec::new());
            }
            for q in orphans {
                if q == apex {
                    continue;
                }
                let pq = &self.points[q];
                let above = |i: &usize| alive[*i] && dot(&facets[*i].normal, pq) - facets[*i].offset > self.eps;
                if let Some(nf) = (first_new..facets.len()).find(above).or_else(|| (0..first_new).find(above)) {
                    outside[nf].push(q);
                }
            }
            cursor = (0..facets.len()).find(|&i| alive[i] && !outside[i].is_empty()).unwrap_or(facets.len());
        }
        self.facets = facets.into_iter().zip(alive).filter(|(_, a)| *a).map(|(f, _)| f).collect();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Lebesgue measure of the hull.
    pub fn volume(&self) -> f64 {
        let c = &self.interior;
        let norm = factorial(self.dim);
        self.facets
            .iter()
            .map(|f| {
                let rows: Vec<Point> = f.vertices.iter().map(|&v| sub(&self.points[v], c)).collect();
                let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                det_rows(&refs).abs() / norm
            })
            .sum()
    }

    /// Indices of the points that are vertices of the hull (not merely on a face).
    pub fn extreme_indices(&self) -> Vec<usize> {
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for (fi, f) in self.facets.iter().enumerate() {
            for &v in &f.vertices {
                incident.entry(v).or_default().push(fi);
            }
        }
        let mut out: Vec<usize> = incident
            .into_iter()
            .filter(|(_, fs)| {
                let normals: Vec<Point> = fs.iter().map(|&f| self.facets[f].normal.clone()).collect();
                vector_rank(&normals, 1e-9) == self.dim
            })
            .map(|(v, _)| v)
            .collect();
        out.sort_unstable();
        out
    }

    /// Distinct supporting halfspaces `(unit normal, offset)` after merging coplanar facets.
    pub fn halfspaces(&self) -> Vec<(Point, f64)> {
        let mut out: Vec<(Point, f64)> = Vec::new();
        for f in &self.facets {
            let dup = out.iter().any(|(n, b)| dot(n, &f.normal) > 1.0 - 1e-10 && (b - f.offset).abs() <= 10.0 * self.eps);
            if !dup {
                out.push((f.normal.clone(), f.offset));
            }
        }
        out
    }

    /// Cone triangulation from `apex`, which must lie in the hull.
    pub fn simplices_from(&self, apex: &[f64]) -> Vec<Vec<Point>> {
        self.facets
            .iter()
            .map(|f| {
                let mut s = Vec::with_capacity(self.dim + 1);
                s.push(apex.to_vec());
                s.extend(f.vertices.iter().map(|&v| self.points[v].clone()));
                s
            })
            .collect()
    }

    /// Edges of the triangulated boundary; a superset of the true edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.facets {
            for a in 0..f.vertices.len() {
                for b in a + 1..f.vertices.len() {
                    let (x, y) = (f.vertices[a], f.vertices[b]);
                    seen.insert((x.min(y), x.max(y)));
                }
            }
        }
        if self.dim == 1 {
            let v: Vec<usize> = self.facets.iter().map(|f| f.vertices[0]).collect();
            seen.insert((v[0].min(v[1]), v[0].max(v[1])));
        }
        seen.into_iter().collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|f| dot(&f.normal, x) <= f.offset + tol)
    }
}

/// Rank of a set of vectors by Gram-Schmidt with absolute tolerance.
pub fn vector_rank(vectors: &[Point], tol: f64) -> usize {
    let mut basis: Vec<Point> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        for b in &basis {
            let c = dot(&r, b);
            for (x, y) in r.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nr = norm2(&r);
        if nr > tol {
            basis.push(scale(&r, 1.0 / nr));
        }
    }
    basis.len()
}

/// Vertex enumeration for `{x : ⟨a_i, x⟩ ≤ b_i}` with every `b_i > 0`.
#[derive(Debug, Clone)]
pub struct HalfspaceVertices {
    pub bounded: bool,
    /// Vertices when bounded, empty otherwise.
    pub vertices: Vec<Point>,
    /// Indices of constraints that are facet-defining (irredundant).
    pub irredundant: Vec<usize>,
}

/// Vertex enumeration by polar duality: `P = {x : ⟨d_i, x⟩ ≤ 1}` with
/// `d_i = a_i / b_i` is bounded iff the origin is interior to `conv{d_i}`,
/// and its vertices are `w / c` for the facets `⟨w, y⟩ ≤ c` of that hull.
pub fn halfspace_vertices(constraints: &[(Point, f64)], dim: usize) -> Result<HalfspaceVertices> {
    if constraints.iter().any(|(a, _)| a.len() != dim) {
        return Err(GeomError::DimensionMismatch { expected: dim, got: constraints.iter().find(|(a, _)| a.len() != dim).unwrap().0.len() });
    }
    if let Some((_, b)) = constraints.iter().find(|(_, b)| !(*b > 0.0)) {
        return Err(GeomError::Domain(format!("origin must be strictly feasible, found offset {b}")));
    }
    let dual: Vec<Point> = constraints.iter().map(|(a, b)| scale(a, 1.0 / b)).collect();
    let nonzero: Vec<usize> = (0..dual.len()).filter(|&i| max_abs(&dual[i]) > 0.0).collect();
    if nonzero.is_empty() {
        return Ok(HalfspaceVertices { bounded: false, vertices: vec![], irredundant: vec![] });
    }
    let pts: Vec<Point> = nonzero.iter().map(|&i| dual[i].clone()).collect();
    let hull = match Hull::new(&pts) {
        Ok(h) => h,
        Err(GeomError::Degenerate { .. }) => {
            return Ok(HalfspaceVertices { bounded: false, vertices: vec![], irredundant: nonzero });
        }
        Err(e) => return Err(e),
    };
    let min_offset = hull.facets().iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
    if min_offset <= hull.eps() * 10.0 {
        // Unbounded. Irredundant constraints are the vertices of conv({0} ∪ {d_i}).
        let mut with_origin = pts.clone();
        with_origin.push(vec![0.0; dim]);
        let irr = match Hull::new(&with_origin) {
            Ok(h) => h.extreme_indices().into_iter().filter(|&i| i < pts.len()).map(|i| nonzero[i]).collect(),
            Err(_) => nonzero.clone(),
        };
        return Ok(HalfspaceVertices { bounded: false, vertices: vec![], irredundant: irr });
    }
    let irredundant: Vec<usize> = hull.extreme_indices().into_iter().map(|i| nonzero[i]).collect();
    let vertices = hull
        .halfspaces()
        .into_iter()
        .map(|(w, c)| polish_vertex(scale(&w, 1.0 / c), constraints, &irredundant))
        .collect();
    Ok(HalfspaceVertices { bounded: true, vertices, irredundant })
}

/// Least-squares solve of the constraints active at `v`, which removes most
/// of the rounding picked up through the dual hull.
fn polish_vertex(v: Point, constraints: &[(Point, f64)], candidates: &[usize]) -> Point {
    let d = v.len();
    let resid = |x: &[f64], c: &(Point, f64)| (dot(&c.0, x) - c.1).abs() / (1.0 + c.1.abs());
    let active: Vec<&(Point, f64)> =
        candidates.iter().map(|&i| &constraints[i]).filter(|c| resid(&v, c) <= 1e-11).collect();
    if active.len() < d {
        return v;
    }
    let a = DMatrix::from_fn(active.len(), d, |r, c| active[r].0[c]);
    let b = DVector::from_fn(active.len(), |r, _| active[r].1);
    let Ok(x) = a.svd(true, true).solve(&b, 1e-12) else { return v };
    let x = x.as_slice().to_vec();
    let worst = |p: &[f64]| active.iter().map(|c| resid(p, c)).fold(0.0, f64::max);
    if dist(&x, &v) <= 1e-10 * (1.0 + max_abs(&v)) && worst(&x) < worst(&v) {
        x
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube(d: usize) -> Vec<Point> {
        (0..1usize << d).map(|m| (0..d).map(|b| if m >> b & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect()
    }

    #[test]
    fn cube_volumes_and_vertices() {
        for d in 1..=4 {
            let mut pts = cube(d);
            pts.push(vec![0.0; d]);
            pts.push((0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect());
            let h = Hull::new(&pts).unwrap();
            assert!((h.volume() - 2f64.powi(d as i32)).abs() < 1e-12, "d={d}");
            assert_eq!(h.extreme_indices().len(), 1 << d);
            assert_eq!(h.halfspaces().len(), 2 * d);
        }
    }

    #[test]
    fn cross_polytope_volume() {
        for d in 1..=4 {
            let mut pts = Vec::new();
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut p = vec![0.0; d];
                    p[i] = s;
                    pts.push(p);
                }
            }
            let h = Hull::new(&pts).unwrap();
            assert!((h.volume() - 2f64.powi(d as i32) / factorial(d)).abs() < 1e-12);
            assert_eq!(h.halfspaces().len(), 1 << d);
        }
    }

    #[test]
    fn degenerate_is_reported() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(Hull::new(&pts), Err(GeomError::Degenerate { rank: 1, dim: 2 })));
        assert_eq!(affine_rank(&pts), 1);
    }

    #[test]
    fn random_points_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 2..=3 {
            let pts: Vec<Point> = (0..200).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let h = Hull::new(&pts).unwrap();
            for p in &pts {
                assert!(h.contains(p, 1e-9));
            }
            // every non-extreme point lies within the hull of the extreme ones
            let ext: Vec<Point> = h.extreme_indices().iter().map(|&i| pts[i].clone()).collect();
            let h2 = Hull::new(&ext).unwrap();
            assert!((h.volume() - h2.volume()).abs() < 1e-12);
            assert_eq!(h2.extreme_indices().len(), ext.len());
        }
    }

    #[test]
    fn halfspace_vertices_square_and_unbounded() {
        let square = vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0), (vec![0.0, -1.0], 1.0), (vec![1.0, 1.0], 5.0)];
        let hv = halfspace_vertices(&square, 2).unwrap();
        assert!(hv.bounded);
        assert_eq!(hv.vertices.len(), 4);
        assert_eq!(hv.irredundant, vec![0, 1, 2, 3]);
        let strip = vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 1.0)];
        assert!(!halfspace_vertices(&strip, 2).unwrap().bounded);
        let wedge = vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0), (vec![-1.0, -1.0], 1.0), (vec![0.5, 0.5], 2.0)];
        let hv = halfspace_vertices(&wedge, 2).unwrap();
        assert!(hv.bounded);
        assert_eq!(hv.irredundant, vec![0, 1, 2]);
        let open = vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0), (vec![0.5, 0.5], 2.0)];
        let hv = halfspace_vertices(&open, 2).unwrap();
        assert!(!hv.bounded);
        assert_eq!(hv.irredundant, vec![0, 1]);
    }
}
