//! Generalized `j`-polars of polytope tuples and polarity verification for
//! tuples mixing polytopes and oracles.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, HalfspacePolytope, SymmetricPolytope};
use crate::error::{GeomError, Result};
use crate::linalg::{dot, max_abs, norm2, Point};
use crate::symfun::{big_s_raw, check_polarity_on_points, slot_affine, PolarityParams, SymForm};

/// The `k − 1` fixed bodies of a generalized polar, in caller order.
#[derive(Debug, Clone)]
pub struct PolarProblem {
    bodies: Vec<SymmetricPolytope>,
    params: PolarityParams,
}

impl PolarProblem {
    pub fn new(bodies: Vec<SymmetricPolytope>, params: PolarityParams) -> Result<Self> {
        if bodies.len() + 1 != params.k {
            return Err(GeomError::Domain(format!("{} bodies given, a k = {} polar needs k − 1", bodies.len(), params.k)));
        }
        if params.form != SymForm::Signed {
            return Err(GeomError::Unsupported("generalized polars use the signed form".into()));
        }
        let n = bodies[0].dim();
        if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: b.dim() });
        }
        if bodies.iter().any(|b| b.is_degenerate()) {
            return Err(GeomError::Degenerate { rank: 0, dim: n });
        }
        Ok(Self { bodies, params })
    }

    pub fn bodies(&self) -> &[SymmetricPolytope] {
        &self.bodies
    }

    pub fn params(&self) -> &PolarityParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.bodies[0].dim()
    }
}

fn tuple_count(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

fn unrank(mut r: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for s in (0..sizes.len()).rev() {
        idx[s] = r % sizes[s];
        r /= sizes[s];
    }
    idx
}

/// Raw vertex-tuple constraints `⟨a, x⟩ ≤ threshold − c`, in lexicographic
/// tuple order, before symmetrization and pruning.
pub fn polar_constraints(problem: &PolarProblem) -> Vec<(Point, f64)> {
    let sets: Vec<&[Point]> = problem.bodies.iter().map(|b| b.vertices()).collect();
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let j = problem.params.j;
    let thr = problem.params.threshold;
    (0..tuple_count(&sizes))
        .into_par_iter()
        .map(|r| {
            let idx = unrank(r, &sizes);
            let refs: Vec<&[f64]> = idx.iter().zip(&sets).map(|(&i, s)| s[i].as_slice()).collect();
            let (a, c) = slot_affine(&refs, j);
            (a, thr - c)
        })
        .collect()
}

/// `(K_1, …, K_{k−1})°_j`: the largest symmetric body `L` with every tuple
/// from `K_1 × … × K_{k−1} × L` satisfying `S_j ≤ threshold`.
///
/// Vertex tuples suffice by multilinearity. For odd `j` the raw constraint
/// set need not be symmetric; it is intersected with its reflection. An
/// origin that is not strictly feasible yields the degenerate flag; an
/// unbounded result is returned with `Boundedness::Unbounded`.
pub fn j_polar(problem: &PolarProblem) -> Result<HalfspacePolytope> {
    let n = problem.dim();
    let raw = polar_constraints(problem);
    let scale = raw.iter().map(|(a, _)| max_abs(a)).fold(0.0, f64::max).max(1.0);
    let mut cons: Vec<(Point, f64)> = Vec::with_capacity(2 * raw.len());
    let mut degenerate = false;
    for (a, b) in raw {
        if max_abs(&a) <= 1e-14 * scale {
            degenerate |= b < 0.0;
            continue;
        }
        degenerate |= b <= 0.0;
        let na = norm2(&a);
        let (u, c): (Point, f64) = (a.iter().map(|x| x / na).collect(), b / na);
        cons.push((u.iter().map(|x| -x).collect(), c));
        cons.push((u, c));
    }
    cons.sort_by(|x, y| x.partial_cmp(y).expect("finite constraints"));
    cons.dedup();
    let h = HalfspacePolytope::new(n, cons)?;
    if degenerate {
        let mut h = h;
        h.degenerate = true;
        return Ok(h);
    }
    h.analyzed()
}

/// Polar of the bodies, converted to a symmetric V-polytope. Errors when the
/// polar is unbounded or degenerate.
pub fn j_polar_polytope(problem: &PolarProblem) -> Result<SymmetricPolytope> {
    let h = j_polar(problem)?;
    if h.is_degenerate() {
        return Err(GeomError::Degenerate { rank: 0, dim: problem.dim() });
    }
    h.to_symmetric()
}

/// Classical polar `{x : ⟨x, v⟩ ≤ 1 for all v ∈ P}`.
pub fn classical_polar(p: &SymmetricPolytope) -> Result<SymmetricPolytope> {
    j_polar_polytope(&PolarProblem::new(vec![p.clone()], PolarityParams::new(2, 2)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    /// Not checked: a degenerate body or an unsupported configuration.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerCfg {
    pub samples_per_body: usize,
    pub seed: u64,
    pub sweeps: usize,
    pub restarts: usize,
    /// Sampled tuples evaluated when the full product of sample sets is too large.
    pub max_tuples: usize,
}

impl Default for SamplerCfg {
    fn default() -> Self {
        Self { samples_per_body: 1000, seed: 0, sweeps: 5, restarts: 3, max_tuples: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleVerdict {
    pub status: Status,
    /// Largest `S_j / threshold` found.
    pub max_e: f64,
    pub witness: Vec<Point>,
    /// `exact` (vertex enumeration) or `sampled`.
    pub method: String,
    /// Gain of the last coordinate-ascent sweep (sampled method only).
    pub last_improvement: f64,
    pub diagnostic: Option<String>,
}

impl TupleVerdict {
    fn skipped(why: String) -> Self {
        Self {
            status: Status::Skipped,
            max_e: f64::NAN,
            witness: vec![],
            method: "none".into(),
            last_improvement: 0.0,
            diagnostic: Some(why),
        }
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, n: usize) -> Point {
    loop {
        let g: Point = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = norm2(&g);
        if r > 1e-12 {
            return g.iter().map(|x| x / r).collect();
        }
    }
}

/// Polytopes contribute their vertices; oracles `N` seeded boundary points.
fn sample_sets(bodies: &[Body], cfg: &SamplerCfg) -> Vec<Vec<Point>> {
    bodies
        .iter()
        .enumerate()
        .map(|(i, b)| match b {
            Body::Polytope(p) => p.vertices().to_vec(),
            Body::Oracle(o) => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64 + 1);
                (0..cfg.samples_per_body)
                    .map(|_| {
                        let u = unit_gaussian(&mut rng, o.dim());
                        let r = o.radial(&u);
                        u.iter().map(|x| x * r).collect()
                    })
                    .collect()
            }
        })
        .collect()
}

/// Maximizes the signed `S_j` one slot at a time: with the other slots fixed
/// it is affine, so the best point of slot `i` is a support point.
fn coordinate_ascent(bodies: &[Body], start: Vec<Point>, j: usize, sweeps: usize) -> (Vec<Point>, f64, f64) {
    let k = bodies.len();
    let mut x = start;
    let value = |x: &[Point]| {
        let refs: Vec<&[f64]> = x.iter().map(|p| p.as_slice()).collect();
        big_s_raw(&refs, j, SymForm::Signed)
    };
    let mut cur = value(&x);
    let mut last = 0.0;
    for _ in 0..sweeps {
        let before = cur;
        for i in 0..k {
            let others: Vec<&[f64]> = (0..k).filter(|&l| l != i).map(|l| x[l].as_slice()).collect();
            let (a, _) = slot_affine(&others, j);
            if max_abs(&a) == 0.0 {
                continue;
            }
            let cand = bodies[i].support_point(&a);
            if dot(&cand, &a) > dot(&x[i], &a) {
                x[i] = cand;
                cur = value(&x);
            }
        }
        last = cur - before;
    }
    (x, cur, last)
}

/// Checks `E_j`-polarity (or `S ≤ threshold` generally) of a `k`-tuple.
///
/// All-polytope tuples are decided exactly on vertex tuples. Otherwise the
/// product of sample sets is scanned (exhaustively when it has at most
/// `max_tuples` elements, else on that many seeded random tuples) and the
/// worst tuple plus `restarts` random ones are refined by coordinate ascent.
/// The verdict is inconclusive when no violation was seen but the last
/// ascent sweep still gained more than 1e-6.
pub fn verify_tuple_polarity(bodies: &[Body], params: &PolarityParams, cfg: &SamplerCfg, tol: f64) -> Result<TupleVerdict> {
    if bodies.len() != params.k {
        return Err(GeomError::Domain(format!("{} bodies given, parameters expect k = {}", bodies.len(), params.k)));
    }
    let n = bodies[0].dim();
    if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
        return Err(GeomError::DimensionMismatch { expected: n, got: b.dim() });
    }
    if let Some(i) = bodies.iter().position(|b| b.is_degenerate()) {
        return Ok(TupleVerdict::skipped(format!("body {i} is lower-dimensional")));
    }
    let all_polytopes = bodies.iter().all(|b| matches!(b, Body::Polytope(_)));
    let sets = sample_sets(bodies, cfg);
    if all_polytopes {
        let v = check_polarity_on_points(&sets, params, tol)?;
        return Ok(TupleVerdict {
            status: if v.pass { Status::Pass } else { Status::Fail },
            max_e: v.max_value,
            witness: v.witness,
            method: "exact".into(),
            last_improvement: 0.0,
            diagnostic: None,
        });
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let total = sizes.iter().try_fold(1usize, |a, &s| a.checked_mul(s));
    let (mut best_val, mut best) = match total {
        Some(t) if t <= cfg.max_tuples => {
            let v = check_polarity_on_points(&sets, params, tol)?;
            (v.max_value * params.threshold, v.witness)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0);
            let mut best = (f64::NEG_INFINITY, vec![]);
            for _ in 0..cfg.max_tuples {
                let t: Vec<&Point> = sets.iter().map(|s| s.choose(&mut rng).expect("nonempty")).collect();
                let refs: Vec<&[f64]> = t.iter().map(|p| p.as_slice()).collect();
                let v = big_s_raw(&refs, params.j, params.form);
                if v > best.0 {
                    best = (v, t.into_iter().cloned().collect());
                }
            }
            best
        }
    };
    let mut last_improvement = 0.0;
    if params.form == SymForm::Signed {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA5A5);
        let mut starts = vec![best.clone()];
        for _ in 0..cfg.restarts {
            starts.push(sets.iter().map(|s| s.choose(&mut rng).expect("nonempty").clone()).collect());
        }
        for s in starts {
            let (x, v, gain) = coordinate_ascent(bodies, s, params.j, cfg.sweeps);
            last_improvement = f64::max(last_improvement, gain / params.threshold);
            if v > best_val {
                best_val = v;
                best = x;
            }
        }
    }
    let max_e = best_val / params.threshold;
    let status = if max_e > 1.0 + tol {
        Status::Fail
    } else if last_improvement > 1e-6 {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(TupleVerdict { status, max_e, witness: best, method: "sampled".into(), last_improvement, diagnostic: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargestBodyVerdict {
    pub pass: bool,
    /// Smallest constraint slack over the vertices of `K_i`.
    pub min_slack: f64,
    pub worst_vertex: Point,
}

/// Whether `K_i ⊆ (others)°_j`, on vertex membership with slack tolerance 1e-9.
pub fn largest_body_check(bodies: &[SymmetricPolytope], params: &PolarityParams, i: usize) -> Result<LargestBodyVerdict> {
    if i >= bodies.len() {
        return Err(GeomError::Domain(format!("slot {i} out of range")));
    }
    let others: Vec<SymmetricPolytope> = bodies.iter().enumerate().filter(|(l, _)| *l != i).map(|(_, b)| b.clone()).collect();
    let raw = polar_constraints(&PolarProblem::new(others, *params)?);
    let slack_at = |v: &[f64]| raw.iter().map(|(a, b)| b - dot(a, v).abs()).fold(f64::INFINITY, f64::min);
    let (min_slack, worst) = bodies[i]
        .vertices()
        .iter()
        .map(|v| (slack_at(v), v))
        .fold((f64::INFINITY, &bodies[i].vertices()[0]), |a, b| if b.0 < a.0 { b } else { a });
    Ok(LargestBodyVerdict { pass: min_slack >= -1e-9, min_slack, worst_vertex: worst.clone() })
}
