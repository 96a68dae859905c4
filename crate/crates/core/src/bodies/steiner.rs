use serde::Serialize;

use super::SymmetricPolytope;
use crate::error::{GeomError, Result};
use crate::hull::halfspace_vertices;
use crate::linalg::{dot, max_abs, norm2, Point};

const VERTICAL_TOL: f64 = 1e-12;

/// Steiner symmetral of `p` about the hyperplane `{x_axis = 0}` (0-based axis).
///
/// Fourier–Motzkin on the facet description: every (upper, lower) facet pair
/// bounds the fiber length over the projection, and the symmetral is cut out
/// by `|x_axis| ≤ length/2` for each such pair together with the facets
/// parallel to the axis. The result is exact up to floating point.
pub fn steiner_symmetrize(p: &SymmetricPolytope, axis: usize) -> Result<SymmetricPolytope> {
    let n = p.dim();
    if axis >= n {
        return Err(GeomError::Domain(format!("axis {axis} out of range for dimension {n}")));
    }
    if p.is_degenerate() {
        return Err(GeomError::Degenerate { rank: crate::hull::affine_rank(p.vertices()), dim: n });
    }
    let hs = p.hull()?.halfspaces();
    let scale = p.vertices().iter().map(|v| max_abs(v)).fold(0.0, f64::max);
    // bounding box of each facet's projection; facet pairs whose projections
    // are disjoint cannot bound the fiber length and are skipped
    let boxes: Vec<(Point, Point)> = hs
        .iter()
        .map(|(a, b)| {
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for v in p.vertices().iter().filter(|v| (dot(a, v) - b).abs() <= 1e-9 * scale) {
                for i in 0..n {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
            (lo, hi)
        })
        .collect();
    let overlap = |x: &(Point, Point), y: &(Point, Point)| {
        (0..n).all(|i| i == axis || (x.0[i] <= y.1[i] + 1e-9 * scale && y.0[i] <= x.1[i] + 1e-9 * scale))
    };
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut cons: Vec<(Point, f64)> = Vec::new();
    for ((a, b), bx) in hs.into_iter().zip(&boxes) {
        if a[axis] > VERTICAL_TOL {
            upper.push((a, b, bx));
        } else if a[axis] < -VERTICAL_TOL {
            lower.push((a, b, bx));
        } else {
            let mut a = a;
            a[axis] = 0.0;
            let na = norm2(&a);
            cons.push((a.iter().map(|v| v / na).collect(), b / na));
        }
    }
    for (au, bu, bxu) in &upper {
        for (al, bl, bxl) in &lower {
            if n > 1 && !overlap(bxu, bxl) {
                continue;
            }
            // x_axis ≤ (bu - ã_u·x̃)/au_m and x_axis ≥ (bl - ã_l·x̃)/al_m
            let (su, sl) = (au[axis], al[axis]);
            let mut g: Point = (0..n).map(|i| 0.5 * (au[i] / su - al[i] / sl)).collect();
            let rhs = 0.5 * (bu / su - bl / sl);
            g[axis] = 1.0;
            let ng = norm2(&g);
            let c: Point = g.iter().map(|v| v / ng).collect();
            let mut cneg = c.clone();
            cneg[axis] = -cneg[axis];
            cons.push((c, rhs / ng));
            cons.push((cneg, rhs / ng));
        }
    }
    let hv = halfspace_vertices(&cons, n)?;
    if !hv.bounded {
        return Err(GeomError::Unbounded);
    }
    let scale = hv.vertices.iter().map(|v| max_abs(v)).fold(0.0, f64::max);
    let snap = 1e-13 * scale;
    let mut pts = Vec::with_capacity(2 * hv.vertices.len());
    for mut v in hv.vertices {
        if v[axis].abs() <= snap {
            v[axis] = 0.0;
            pts.push(v);
        } else if v[axis] > 0.0 {
            let mut r = v.clone();
            r[axis] = -r[axis];
            pts.push(v);
            pts.push(r);
        }
    }
    SymmetricPolytope::hull_reduce(&pts)
}

/// Outcome of a symmetrization sweep over all axes. `unconditional` records
/// whether the postcondition held; the polytope is returned either way.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    #[serde(skip)]
    pub polytope: SymmetricPolytope,
    pub sweeps: usize,
    pub defect: f64,
    pub unconditional: bool,
    pub volume_before: f64,
    pub volume_after: f64,
}

impl SweepOutcome {
    pub fn volume_rel_change(&self) -> f64 {
        (self.volume_after - self.volume_before).abs() / self.volume_before
    }
}

pub const UNCONDITIONAL_TOL: f64 = 1e-7;

/// Symmetrizes along axes `n-1, …, 0` once and checks the result is
/// invariant under every coordinate reflection.
pub fn unconditionalize_sweep(p: &SymmetricPolytope) -> Result<SweepOutcome> {
    unconditionalize(p, 1)
}

/// Repeats full sweeps until the unconditionality defect drops below 1e-7 or
/// `max_sweeps` is reached.
pub fn unconditionalize(p: &SymmetricPolytope, max_sweeps: usize) -> Result<SweepOutcome> {
    let volume_before = p.hull()?.volume();
    let mut cur = p.clone();
    let mut sweeps = 0;
    let mut defect = f64::INFINITY;
    while sweeps < max_sweeps.max(1) {
        for axis in (0..cur.dim()).rev() {
            cur = steiner_symmetrize(&cur, axis)?;
        }
        sweeps += 1;
        let scale = cur.vertices().iter().map(|v| norm2(v)).fold(0.0, f64::max);
        defect = cur.unconditional_defect() / scale;
        if defect < UNCONDITIONAL_TOL {
            break;
        }
    }
    let volume_after = cur.hull()?.volume();
    Ok(SweepOutcome {
        polytope: cur,
        sweeps,
        defect,
        unconditional: defect < UNCONDITIONAL_TOL,
        volume_before,
        volume_after,
    })
}
