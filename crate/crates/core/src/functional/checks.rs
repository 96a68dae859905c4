use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{EvenFunction, GridFunction, Indicator};
use super::rho::RhoFunction;
use crate::bodies::Body;
use crate::error::{GeomError, Result};
use crate::hull::{affine_rank, Hull};
use crate::linalg::{binomial, Point};
use crate::measure::{bound_constant, lp_ball_moment, lp_ball_volume};
use crate::quadrature::{integrate_breaks, integrate_to_infinity, QuadResult};
use crate::symfun::{big_s_raw, PolarityParams};

/// Default lattice for a set of functions: `L = 4·max radius`,
/// `h = L/64` for `n ≤ 2` and `L/24` for `n = 3` (rounded so `L/h` is whole).
pub fn default_lattice(n: usize, max_radius: f64) -> (f64, f64) {
    let l = 4.0 * max_radius;
    let cells = if n <= 2 { 64.0 } else { 24.0 };
    (l, l / cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionSamplerCfg {
    /// Random tuples when the lattice product is too large to scan.
    pub samples: usize,
    pub seed: u64,
    /// Exhaustive scan limit on the number of tuples.
    pub max_tuples: usize,
    /// Lattice points per axis for functions that are not tabulated.
    pub side: usize,
    /// Number of worst sampled tuples refined by local ascent.
    pub ascent_starts: usize,
    /// Restrict points to the closed positive orthant.
    pub orthant: bool,
}

impl Default for FunctionSamplerCfg {
    fn default() -> Self {
        Self { samples: 200_000, seed: 0, max_tuples: 10_000_000, side: 33, ascent_starts: 16, orthant: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionPolarityVerdict {
    pub pass: bool,
    /// `max Π f_i(x_i) / ρ(S(x))` over the checked tuples.
    pub worst_ratio: f64,
    /// `max Π f_i(x_i) − ρ(S(x))`.
    pub worst_excess: f64,
    pub witness: Vec<Point>,
    pub exhaustive: bool,
    pub tuples: usize,
}

/// Candidate points (with values) of one function: its lattice support, or
/// a lattice of `side` points per axis over its radius, plus its probes.
fn candidates(f: &dyn EvenFunction, cfg: &FunctionSamplerCfg) -> Vec<(Point, f64)> {
    let mut pts: Vec<(Point, f64)> = match f.as_grid() {
        Some(g) => (0..g.len()).filter(|&i| g.values()[i] > 0.0).map(|i| (g.point(i), g.values()[i])).collect(),
        None => {
            let n = f.dim();
            let half = cfg.side.max(3) / 2;
            let h = f.radius() / half as f64;
            let m = 2 * half + 1;
            (0..m.pow(n as u32))
                .map(|mut i| {
                    let mut x = vec![0.0; n];
                    for a in (0..n).rev() {
                        x[a] = ((i % m) as f64 - half as f64) * h;
                        i /= m;
                    }
                    x
                })
                .filter_map(|x| {
                    let v = f.eval(&x);
                    (v > 0.0).then_some((x, v))
                })
                .collect()
        }
    };
    pts.extend(f.probe_points().into_iter().map(|x| {
        let v = f.eval(&x);
        (x, v)
    }));
    if cfg.orthant {
        pts.retain(|(x, _)| x.iter().all(|c| *c >= 0.0));
    }
    pts
}

/// `ρ(S)` with `S` relaxed by `1e-9(1 + |S|)`, so tuples sitting on the
/// boundary of a polar condition are not counted as violations through
/// rounding.
fn rho_relaxed(rho: &RhoFunction, s: f64) -> f64 {
    rho.eval(s - 1e-9 * (1.0 + s.abs()))
}

fn excess_and_ratio(prod: f64, r: f64, tol: f64) -> (f64, f64, bool) {
    let ratio = if prod == 0.0 {
        0.0
    } else if r == 0.0 {
        f64::INFINITY
    } else {
        prod / r
    };
    let excess = if r.is_infinite() { f64::NEG_INFINITY } else { prod - r };
    (excess, ratio, excess <= tol)
}

/// Checks `Π f_i(x_i) ≤ ρ(S(x_1, …, x_k)) + tol`.
///
/// Points come from [`candidates`]. Tuples with a zero factor are trivially
/// fine and skipped. All tuples are scanned when there are at most
/// `max_tuples` of them; otherwise `samples` seeded random tuples are drawn
/// and the worst `ascent_starts` of them refined by coordinate moves.
pub fn check_function_polarity(
    fs: &[&dyn EvenFunction],
    rho: &RhoFunction,
    params: &PolarityParams,
    cfg: &FunctionSamplerCfg,
    tol: f64,
) -> Result<FunctionPolarityVerdict> {
    if fs.len() != params.k {
        return Err(GeomError::Domain(format!("{} functions given, parameters expect k = {}", fs.len(), params.k)));
    }
    let n = fs[0].dim();
    if let Some(f) = fs.iter().find(|f| f.dim() != n) {
        return Err(GeomError::DimensionMismatch { expected: n, got: f.dim() });
    }
    let sets: Vec<Vec<(Point, f64)>> = fs.iter().map(|f| candidates(*f, cfg)).collect();
    if sets.iter().any(|s| s.is_empty()) {
        return Ok(FunctionPolarityVerdict {
            pass: true,
            worst_ratio: 0.0,
            worst_excess: f64::NEG_INFINITY,
            witness: vec![],
            exhaustive: true,
            tuples: 0,
        });
    }
    let (j, form) = (params.j, params.form);
    let eval_tuple = |idx: &[usize]| -> (f64, f64, bool) {
        let prod: f64 = idx.iter().zip(&sets).map(|(&i, s)| s[i].1).product();
        let refs: Vec<&[f64]> = idx.iter().zip(&sets).map(|(&i, s)| s[i].0.as_slice()).collect();
        excess_and_ratio(prod, rho_relaxed(rho, big_s_raw(&refs, j, form)), tol)
    };
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let total = sizes.iter().try_fold(1usize, |a, &s| a.checked_mul(s)).filter(|t| *t <= cfg.max_tuples);
    let unrank = |mut r: usize| -> Vec<usize> {
        let mut idx = vec![0; sizes.len()];
        for a in (0..sizes.len()).rev() {
            idx[a] = r % sizes[a];
            r /= sizes[a];
        }
        idx
    };
    #[derive(Clone, Copy)]
    struct Best {
        excess: f64,
        ratio: f64,
        rank: usize,
        pass: bool,
    }
    let merge = |a: Best, b: Best| Best {
        excess: if b.excess > a.excess { b.excess } else { a.excess },
        rank: if b.excess > a.excess { b.rank } else { a.rank },
        ratio: a.ratio.max(b.ratio),
        pass: a.pass && b.pass,
    };
    let init = Best { excess: f64::NEG_INFINITY, ratio: 0.0, rank: 0, pass: true };
    if let Some(total) = total {
        const CHUNK: usize = 1 << 14;
        let chunks: Vec<Best> = (0..total.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut b = init;
                for r in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    let (excess, ratio, pass) = eval_tuple(&unrank(r));
                    b = merge(b, Best { excess, ratio, rank: r, pass });
                }
                b
            })
            .collect();
        let best = chunks.into_iter().fold(init, merge);
        let witness = unrank(best.rank).iter().zip(&sets).map(|(&i, s)| s[i].0.clone()).collect();
        return Ok(FunctionPolarityVerdict {
            pass: best.pass,
            worst_ratio: best.ratio,
            worst_excess: best.excess,
            witness,
            exhaustive: true,
            tuples: total,
        });
    }
    // seeded random tuples, one RNG stream per block of 4096
    const BLOCK: usize = 4096;
    let mut scored: Vec<(f64, f64, bool, Vec<usize>)> = (0..cfg.samples.div_ceil(BLOCK))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64 + 1);
            let count = BLOCK.min(cfg.samples - b * BLOCK);
            let sizes = &sizes;
            let eval_tuple = &eval_tuple;
            (0..count)
                .map(move |_| {
                    let idx: Vec<usize> = sizes.iter().map(|&s| rng.random_range(0..s)).collect();
                    let (e, r, p) = eval_tuple(&idx);
                    (e, r, p, idx)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut pass = scored.iter().all(|s| s.2);
    let mut worst_ratio = scored.iter().map(|s| s.1).fold(0.0, f64::max);
    let tuple_points = |idx: &[usize]| -> Vec<Point> { idx.iter().zip(&sets).map(|(&i, s)| s[i].0.clone()).collect() };
    let mut worst_excess = scored.first().map(|s| s.0).unwrap_or(f64::NEG_INFINITY);
    let mut witness = scored.first().map(|s| tuple_points(&s.3)).unwrap_or_default();
    let step = fs.iter().map(|f| f.as_grid().map(|g| g.spacing()).unwrap_or(f.radius() / (cfg.side / 2).max(1) as f64)).fold(f64::INFINITY, f64::min);
    let refined: Vec<(f64, f64, bool, Vec<Point>)> = scored
        .iter()
        .take(cfg.ascent_starts)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|s| local_ascent(fs, rho, params, tuple_points(&s.3), step, tol))
        .collect();
    for (e, r, p, x) in refined {
        pass &= p;
        worst_ratio = worst_ratio.max(r);
        if e > worst_excess {
            worst_excess = e;
            witness = x;
        }
    }
    Ok(FunctionPolarityVerdict { pass, worst_ratio, worst_excess, witness, exhaustive: false, tuples: cfg.samples })
}

/// Coordinate moves of size `step` that increase `Π f_i − ρ(S)`. When every
/// input is tabulated the moves stay on the lattice (interpolated values
/// between lattice points are not the function); otherwise the step is
/// halved when stuck, down to `step/64`.
fn local_ascent(
    fs: &[&dyn EvenFunction],
    rho: &RhoFunction,
    params: &PolarityParams,
    mut x: Vec<Point>,
    step: f64,
    tol: f64,
) -> (f64, f64, bool, Vec<Point>) {
    let score = |x: &[Point]| {
        let prod: f64 = fs.iter().zip(x).map(|(f, p)| f.eval(p)).product();
        let refs: Vec<&[f64]> = x.iter().map(|p| p.as_slice()).collect();
        excess_and_ratio(prod, rho_relaxed(rho, big_s_raw(&refs, params.j, params.form)), tol)
    };
    let mut cur = score(&x);
    let mut h = step;
    let mut worst_ratio = cur.1;
    let mut pass = cur.2;
    let on_lattice = fs.iter().all(|f| f.as_grid().is_some_and(|g| g.spacing() == step));
    let min_step = if on_lattice { step } else { step / 64.0 };
    while h >= min_step {
        let mut improved = false;
        for i in 0..x.len() {
            for a in 0..x[i].len() {
                for s in [h, -h] {
                    let mut y = x.clone();
                    y[i][a] += s;
                    if on_lattice {
                        y[i][a] = (y[i][a] / step).round() * step;
                    }
                    let v = score(&y);
                    worst_ratio = worst_ratio.max(v.1);
                    pass &= v.2;
                    if v.0 > cur.0 {
                        x = y;
                        cur = v;
                        improved = true;
                    }
                }
            }
        }
        // the same move in every slot
        for a in 0..x[0].len() {
            for s in [h, -h] {
                let mut y = x.clone();
                for p in y.iter_mut() {
                    p[a] += s;
                    if on_lattice {
                        p[a] = (p[a] / step).round() * step;
                    }
                }
                let v = score(&y);
                worst_ratio = worst_ratio.max(v.1);
                pass &= v.2;
                if v.0 > cur.0 {
                    x = y;
                    cur = v;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (cur.0, worst_ratio, pass, x)
}

/// Break points of `t ↦ ρ^{-1}(t^k)` and the point beyond which it is `≤ 0`.
fn inverse_breaks(rho: &RhoFunction, k: usize) -> (Vec<f64>, Option<f64>) {
    let kth = |s: f64| s.powf(1.0 / k as f64);
    let mut breaks = vec![];
    let r0 = rho.eval(0.0);
    match rho {
        RhoFunction::Table { v, .. } => breaks.extend(v.iter().filter(|x| **x > 0.0).map(|x| kth(*x))),
        RhoFunction::Indicator { scale, .. } => breaks.push(kth(*scale)),
        _ => {}
    }
    let end = r0.is_finite().then(|| kth(r0));
    (breaks, end)
}

/// `∫_0^∞ ρ^{-1}(t^k)_+^{a}` with divergence detection at `0` and `∞`.
fn inverse_power_integral(rho: &RhoFunction, k: usize, a: f64, tol: f64) -> Result<QuadResult> {
    let g = |t: f64| {
        let v = rho.inverse(t.powi(k as i32));
        if v > 0.0 {
            v.powf(a)
        } else {
            0.0
        }
    };
    let (mut breaks, end) = inverse_breaks(rho, k);
    let top = end.unwrap_or(1.0);
    // near 0: g ~ t^{−γ}; γ ≥ 1 diverges
    let (t1, t2) = (1e-10 * top, 1e-8 * top);
    let (g1, g2) = (g(t1), g(t2));
    if g1.is_infinite() || (g1 > 0.0 && g2 > 0.0 && (g1 / g2).ln() / (t2 / t1).ln() >= 1.0 - 1e-3) {
        return Err(GeomError::Divergence("ρ^{-1}(t^k)^{n/j} is not integrable at t = 0".into()));
    }
    breaks.push(0.0);
    breaks.push(top);
    breaks.retain(|b| *b >= 0.0 && *b <= top);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let head = integrate_breaks(g, &breaks, tol).map_err(|e| GeomError::Divergence(format!("head integral: {e}")))?;
    if end.is_some() {
        return Ok(head);
    }
    let (g3, g4) = (g(1e8 * top), g(1e10 * top));
    if g3.is_infinite() || (g3 > 0.0 && g4 > 0.0 && (g3 / g4).ln() / 100f64.ln() <= 1.0 + 1e-3) {
        return Err(GeomError::Divergence("ρ^{-1}(t^k)^{n/j} is not integrable at infinity".into()));
    }
    let tail = integrate_to_infinity(g, top, tol).map_err(|e| GeomError::Divergence(format!("tail integral: {e}")))?;
    Ok(QuadResult { value: head.value + tail.value, error: head.error + tail.error, intervals: head.intervals + tail.intervals })
}

/// `(∫ ρ(C(k,j)‖u‖_j^j)^{1/k} du)^k` through the layer cake
/// `[C(k,j)^{−n/j} |B_j^n| ∫_0^∞ ρ^{-1}(t^k)^{n/j} dt]^k`.
pub fn conjectured_rhs(rho: &RhoFunction, n: usize, j: usize, k: usize) -> Result<QuadResult> {
    if j == 0 || k < 2 || j > k || n == 0 {
        return Err(GeomError::Domain(format!("conjectured RHS needs n ≥ 1 and 1 ≤ j ≤ k, k ≥ 2 (got n={n}, j={j}, k={k})")));
    }
    let a = n as f64 / j as f64;
    let q = inverse_power_integral(rho, k, a, 1e-13)?;
    let base = binomial(k, j).powf(-a) * lp_ball_volume(n, j as f64) * q.value;
    let value = base.powi(k as i32);
    Ok(QuadResult { value, error: value * k as f64 * q.error / q.value.abs().max(f64::MIN_POSITIVE), intervals: q.intervals })
}

/// `∫_0^∞ s^{d−1} ρ(C s^r)^{1/k} ds`, split at the jump of an indicator ρ.
fn radial_rho_integral(rho: &RhoFunction, c: f64, r: f64, k: usize, d: f64) -> Result<QuadResult> {
    let phi = |s: f64| {
        let v = rho.eval(c * s.powf(r));
        if v == 0.0 {
            0.0
        } else {
            s.powf(d - 1.0) * v.powf(1.0 / k as f64)
        }
    };
    if let RhoFunction::Indicator { c: th, .. } = rho {
        // zero beyond the jump
        return integrate_breaks(phi, &[0.0, (th / c).powf(1.0 / r)], 1e-13);
    }
    let mut breaks = vec![0.0, 1.0];
    if let RhoFunction::Table { t, .. } = rho {
        breaks.extend(t.iter().filter(|x| **x > 0.0).map(|x| (x / c).powf(1.0 / r)));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    let top = *breaks.last().expect("nonempty");
    let head = integrate_breaks(phi, &breaks, 1e-13)?;
    let tail = integrate_to_infinity(phi, top, 1e-13)?;
    if !(tail.value.is_finite()) {
        return Err(GeomError::Divergence("radial ρ integral diverges".into()));
    }
    Ok(QuadResult { value: head.value + tail.value, error: head.error + tail.error, intervals: head.intervals + tail.intervals })
}

/// `∫_{ℝ^n_+} |u_1|^q ρ(C(k,j) ‖u‖_{jp}^{jp})^{1/k} du`, by the radial
/// formula `M_+ (n+q) ∫_0^∞ s^{n+q−1} ρ(C s^{jp})^{1/k} ds` with
/// `M_+ = 2^{−n} ∫_{B_{jp}^n} |u_1|^q du`.
pub fn orthant_rhs_integral(rho: &RhoFunction, n: usize, j: usize, k: usize, p: f64, q: f64) -> Result<QuadResult> {
    let r = j as f64 * p;
    let d = n as f64 + q;
    let mplus = lp_ball_moment(n, r, q) / 2f64.powi(n as i32);
    let rad = radial_rho_integral(rho, binomial(k, j), r, k, d)?;
    Ok(QuadResult { value: mplus * d * rad.value, error: mplus * d * rad.error, intervals: rad.intervals })
}

/// Indicator lift: `f_i = 1_{K_i}` with the ρ that is `+∞` below 0, 1 on
/// `[0, C(k,j)]` and 0 beyond.
pub fn lift_from_bodies(bodies: Vec<Body>, j: usize) -> Result<(Vec<Indicator>, RhoFunction)> {
    let k = bodies.len();
    if k < 2 || j == 0 || j > k {
        return Err(GeomError::Domain(format!("lift needs k ≥ 2 bodies and 1 ≤ j ≤ k (got k={k}, j={j})")));
    }
    let rho = RhoFunction::indicator(binomial(k, j))?;
    Ok((bodies.into_iter().map(Indicator::new).collect(), rho))
}

/// Lattice points where `f ≥ r`.
pub fn superlevel_polytope(f: &GridFunction, r: f64) -> Result<Vec<Point>> {
    if !(r > 0.0) {
        return Err(GeomError::Domain(format!("superlevel height {r} must be positive")));
    }
    Ok((0..f.len()).filter(|&i| f.values()[i] >= r).map(|i| f.point(i)).collect())
}

/// Superlevel points with a lattice neighbor outside the set, together with
/// the linearly interpolated crossings `f = r` on those lattice edges. The
/// crossings put the hull on the level curve to second order in `h`
/// instead of leaving it up to one cell inside.
fn superlevel_boundary(f: &GridFunction, r: f64) -> Vec<Point> {
    let m = f.side();
    let n = f.dim();
    let h = f.spacing();
    let per_point: Vec<Vec<Point>> = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let fi = f.values()[i];
            if fi < r {
                return vec![];
            }
            let idx = f.multi_index(i);
            let x = f.point(i);
            let mut out = vec![];
            for a in 0..n {
                for d in [-1i64, 1] {
                    let k = idx[a] as i64 + d;
                    if k < 0 || k >= m as i64 {
                        out.push(x.clone());
                        continue;
                    }
                    let mut nb = idx.clone();
                    nb[a] = k as usize;
                    let fo = f.values()[f.flat_index(&nb)];
                    if fo < r {
                        out.push(x.clone());
                        let mut c = x.clone();
                        c[a] += d as f64 * h * (fi - r) / (fi - fo);
                        out.push(c);
                    }
                }
            }
            out
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

/// `|conv{x : f(x) ≥ r}|` from the lattice, with level crossings on lattice
/// edges interpolated linearly; zero when the set is flat.
pub fn superlevel_hull_volume(f: &GridFunction, r: f64) -> Result<f64> {
    let pts = superlevel_boundary(f, r);
    if pts.len() <= f.dim() || affine_rank(&pts) < f.dim() {
        return Ok(0.0);
    }
    Ok(Hull::new(&pts)?.volume())
}

/// Nonnegative table on `0 < t_0 < … < t_last`: `v_0` on `(0, t_0]`, linear
/// in between, zero beyond `t_last`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1D {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl Table1D {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() || t.len() < 2 {
            return Err(GeomError::Domain("table needs at least two (t, v) pairs of equal length".into()));
        }
        if !(t[0] > 0.0) || t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GeomError::Domain("table abscissae must be positive and increasing".into()));
        }
        if v.iter().any(|x| !(*x >= 0.0) || x.is_infinite()) {
            return Err(GeomError::Domain("table values must be finite and nonnegative".into()));
        }
        Ok(Self { t, v })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(t: Vec<f64>, f: F) -> Result<Self> {
        let v = t.iter().map(|x| f(*x)).collect();
        Self::new(t, v)
    }

    /// `count` points `T·i/count`, `i = 1..=count`.
    pub fn uniform<F: Fn(f64) -> f64>(end: f64, count: usize, f: F) -> Result<Self> {
        Self::from_fn((1..=count).map(|i| end * i as f64 / count as f64).collect(), f)
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { t: self.t.clone(), v: self.v.iter().map(|x| x * c).collect() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x > self.t[self.t.len() - 1] {
            return 0.0;
        }
        if x <= self.t[0] {
            return self.v[0];
        }
        let i = self.t.partition_point(|s| *s < x) - 1;
        let w = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.v[i] + w * (self.v[i + 1] - self.v[i])
    }

    /// Exact integral of the interpolant.
    pub fn integral(&self) -> f64 {
        self.v[0] * self.t[0] + self.t.windows(2).zip(self.v.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum::<f64>()
    }

    /// `|I − I_coarse|` with every other knot dropped: a proxy for the
    /// discretization error of the table's integral.
    pub fn integral_error(&self) -> f64 {
        let keep: Vec<usize> = (0..self.t.len()).rev().step_by(2).collect::<Vec<_>>().into_iter().rev().collect();
        if keep.len() < 2 {
            return 0.0;
        }
        let coarse = Self { t: keep.iter().map(|&i| self.t[i]).collect(), v: keep.iter().map(|&i| self.v[i]).collect() };
        (self.integral() - coarse.integral()).abs()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrekopaLeindlerReport {
    pub hypothesis_pass: bool,
    /// `max Π h_i(t_i)^{1/k} − h(Π t_i^{1/k})` over the checked tuples.
    pub worst_violation: f64,
    pub witness: Vec<f64>,
    pub tuples: usize,
    /// `Π (∫ h_i)^{1/k}`.
    pub lhs_integral: f64,
    /// `∫ h`.
    pub rhs_integral: f64,
    pub integral_error: f64,
    pub conclusion_pass: bool,
    /// False only when the hypothesis held and the conclusion did not.
    pub consistent: bool,
}

/// The 1-D multiplicative Prékopa–Leindler inequality on tables: checks
/// `Π h_i(t_i)^{1/k} ≤ h(Π t_i^{1/k})` on knot tuples (all of them up to
/// 10^7, else a strided sub-lattice) and compares `Π(∫h_i)^{1/k}` with `∫h`.
pub fn prekopa_leindler_check(hs: &[Table1D], h: &Table1D, tol: f64) -> Result<PrekopaLeindlerReport> {
    prekopa_leindler_check_fn(hs, |t| h.eval(t), h.integral(), h.integral_error(), tol)
}

/// As [`prekopa_leindler_check`] with `h` given as a function and its
/// integral supplied by the caller.
pub fn prekopa_leindler_check_fn<H: Fn(f64) -> f64 + Sync>(
    hs: &[Table1D],
    h: H,
    h_integral: f64,
    h_error: f64,
    tol: f64,
) -> Result<PrekopaLeindlerReport> {
    let k = hs.len();
    if k < 1 {
        return Err(GeomError::Domain("need at least one table".into()));
    }
    let kf = k as f64;
    let max_len = hs.iter().map(|t| t.t.len()).max().unwrap_or(1);
    let mut stride = 1;
    while (max_len.div_ceil(stride) as f64).powi(k as i32) > 1e7 {
        stride += 1;
    }
    let axes: Vec<Vec<usize>> = hs.iter().map(|t| (0..t.t.len()).step_by(stride).collect()).collect();
    let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: usize = sizes.iter().product();
    let unrank = |mut r: usize| -> Vec<usize> {
        let mut idx = vec![0; k];
        for a in (0..k).rev() {
            idx[a] = axes[a][r % sizes[a]];
            r /= sizes[a];
        }
        idx
    };
    let eval = |idx: &[usize]| -> f64 {
        let lhs: f64 = idx.iter().zip(hs).map(|(&i, t)| t.v[i].powf(1.0 / kf)).product();
        if lhs == 0.0 {
            return f64::NEG_INFINITY;
        }
        let gm: f64 = idx.iter().zip(hs).map(|(&i, t)| t.t[i].ln()).sum::<f64>() / kf;
        lhs - h(gm.exp())
    };
    const CHUNK: usize = 1 << 14;
    let chunks: Vec<(f64, usize)> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut best = (f64::NEG_INFINITY, 0);
            for r in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let v = eval(&unrank(r));
                if v > best.0 {
                    best = (v, r);
                }
            }
            best
        })
        .collect();
    let (worst_violation, rank) = chunks.into_iter().fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let witness = unrank(rank).iter().zip(hs).map(|(&i, t)| t.t[i]).collect();
    let ints: Vec<f64> = hs.iter().map(|t| t.integral()).collect();
    let lhs_integral: f64 = ints.iter().map(|x| x.powf(1.0 / kf)).product();
    // first-order propagation of the tables' errors through the geometric mean
    let rel: f64 = hs.iter().zip(&ints).map(|(t, i)| if *i > 0.0 { t.integral_error() / (kf * i) } else { 0.0 }).sum();
    let integral_error = lhs_integral * rel + h_error;
    let hypothesis_pass = worst_violation <= tol;
    let conclusion_pass = lhs_integral <= h_integral + integral_error + tol;
    Ok(PrekopaLeindlerReport {
        hypothesis_pass,
        worst_violation,
        witness,
        tuples: total,
        lhs_integral,
        rhs_integral: h_integral,
        integral_error,
        conclusion_pass,
        consistent: !hypothesis_pass || conclusion_pass,
    })
}

fn lattice_error<G: Fn(&[f64]) -> f64 + Sync>(f: &GridFunction, orthant: bool, g: G) -> f64 {
    // trapezoid on the lattice vs on every other point
    let fine = f.weighted_sum(orthant, &g);
    match f.coarsened() {
        Some(c) => (fine - c.weighted_sum(orthant, &g)).abs(),
        None => 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthantReport {
    pub polarity: FunctionPolarityVerdict,
    /// `Π_i ∫_{ℝ^n_+} |x_m|^q f_i`.
    pub lhs: f64,
    pub lhs_error: f64,
    /// `(∫_{ℝ^n_+} |u_1|^q ρ(C(k,j)‖u‖_{jp}^{jp})^{1/k} du)^k`.
    pub rhs: f64,
    pub rhs_error: f64,
    /// `None` when polarity failed and the inequality is not claimed.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthantParams {
    pub j: usize,
    pub p: f64,
    pub q: f64,
    /// 0-based coordinate of the moment weight.
    pub m: usize,
}

fn check_orthant_params(fs: &[&GridFunction], op: &OrthantParams) -> Result<usize> {
    let n = fs.first().ok_or_else(|| GeomError::Domain("no functions".into()))?.dim();
    if fs.iter().any(|f| !f.same_lattice(fs[0])) {
        return Err(GeomError::Domain("functions must share one lattice".into()));
    }
    if !(op.q > -1.0) || !(op.p > 0.0) || op.m >= n {
        return Err(GeomError::Domain(format!("need q > −1, p > 0, m < n (got q={}, p={}, m={})", op.q, op.p, op.m)));
    }
    Ok(n)
}

fn moment_weight(m: usize, q: f64) -> impl Fn(&[f64]) -> f64 + Sync + Copy {
    move |x: &[f64]| if q == 0.0 { 1.0 } else { x[m].abs().powf(q) }
}

/// Weighted orthant inequality: checks `S_{j,p}`-polarity on the orthant
/// lattice, then compares `Π_i ∫_{ℝ^n_+} |x_m|^q f_i` (lattice quadrature)
/// with the radial evaluation of the right side.
pub fn weighted_orthant_check(
    fs: &[&GridFunction],
    rho: &RhoFunction,
    op: &OrthantParams,
    cfg: &FunctionSamplerCfg,
    tol: f64,
) -> Result<OrthantReport> {
    let n = check_orthant_params(fs, op)?;
    let k = fs.len();
    let params = PolarityParams::absolute(k, op.j, op.p)?;
    let dyn_fs: Vec<&dyn EvenFunction> = fs.iter().map(|f| *f as &dyn EvenFunction).collect();
    let polarity = check_function_polarity(&dyn_fs, rho, &params, &FunctionSamplerCfg { orthant: true, ..*cfg }, tol)?;
    let w = moment_weight(op.m, op.q);
    let ints: Vec<f64> = fs.iter().map(|f| f.weighted_sum(true, w)).collect();
    let errs: Vec<f64> = fs.iter().map(|f| lattice_error(f, true, w)).collect();
    let lhs: f64 = ints.iter().product();
    let lhs_error = lhs * ints.iter().zip(&errs).map(|(i, e)| if *i > 0.0 { e / i } else { 0.0 }).sum::<f64>();
    let r = orthant_rhs_integral(rho, n, op.j, k, op.p, op.q)?;
    let rhs = r.value.powi(k as i32);
    let rhs_error = rhs * k as f64 * r.error / r.value.max(f64::MIN_POSITIVE);
    let pass = polarity.pass.then_some(lhs <= rhs + lhs_error + rhs_error + tol * rhs);
    Ok(OrthantReport { polarity, lhs, lhs_error, rhs, rhs_error, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct FullSpaceReport {
    pub polarity: FunctionPolarityVerdict,
    /// `I[i][σ] = ∫_{ℝ^n_+} |y_m|^q f_i(σ y) dy` per sign pattern `σ`.
    pub orthant_terms: Vec<Vec<f64>>,
    /// Largest product over orthant combinations, each bounded by `orthant_rhs`.
    pub max_combination: f64,
    pub orthant_rhs: f64,
    /// `Σ_{σ_1…σ_k} Π_i I[i][σ_i] = Π_i Σ_σ I[i][σ]`.
    pub aggregate: f64,
    /// Direct full-space lattice quadrature of `Π_i ∫ |x_m|^q f_i`.
    pub direct: f64,
    /// `2^{nk} · orthant_rhs`.
    pub rhs: f64,
    pub error: f64,
    pub pass: Option<bool>,
}

/// Full-space version by orthant decomposition: each `f_i` is folded to the
/// positive orthant once per sign pattern, every combination is bounded by
/// the orthant inequality, and the terms are re-aggregated. `S_{j,p}` only
/// sees `|x(l)|`, so one polarity check on the full lattice covers all
/// folded combinations.
pub fn full_space_from_orthants(
    fs: &[&GridFunction],
    rho: &RhoFunction,
    op: &OrthantParams,
    cfg: &FunctionSamplerCfg,
    tol: f64,
) -> Result<FullSpaceReport> {
    let n = check_orthant_params(fs, op)?;
    let k = fs.len();
    let params = PolarityParams::absolute(k, op.j, op.p)?;
    let dyn_fs: Vec<&dyn EvenFunction> = fs.iter().map(|f| *f as &dyn EvenFunction).collect();
    let polarity = check_function_polarity(&dyn_fs, rho, &params, &FunctionSamplerCfg { orthant: false, ..*cfg }, tol)?;
    let w = moment_weight(op.m, op.q);
    let orthant_terms: Vec<Vec<f64>> =
        fs.iter().map(|f| (0..1usize << n).map(|mask| f.reflected(mask).weighted_sum(true, w)).collect()).collect();
    let mut max_combination: f64 = 0.0;
    let combos = 1usize << (n * k);
    for c in 0..combos {
        let prod: f64 = (0..k).map(|i| orthant_terms[i][(c >> (i * n)) & ((1 << n) - 1)]).product();
        max_combination = max_combination.max(prod);
    }
    let aggregate: f64 = orthant_terms.iter().map(|t| t.iter().sum::<f64>()).product();
    let direct: f64 = fs.iter().map(|f| f.weighted_sum(false, w)).product();
    let r = orthant_rhs_integral(rho, n, op.j, k, op.p, op.q)?;
    let orthant_rhs = r.value.powi(k as i32);
    let rhs = 2f64.powi((n * k) as i32) * orthant_rhs;
    let ints: Vec<f64> = fs.iter().map(|f| f.weighted_sum(false, w)).collect();
    let error = direct * fs.iter().zip(&ints).map(|(f, i)| if *i > 0.0 { lattice_error(f, false, w) / i } else { 0.0 }).sum::<f64>()
        + rhs * k as f64 * r.error / r.value.max(f64::MIN_POSITIVE);
    let pass = polarity.pass.then_some(aggregate <= rhs + error + tol * rhs && max_combination <= orthant_rhs * (1.0 + tol) + error);
    Ok(FullSpaceReport { polarity, orthant_terms, max_combination, orthant_rhs, aggregate, direct, rhs, error, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerCakeReport {
    /// `Π_i ∫ f_i` by lattice quadrature.
    pub direct_product: f64,
    /// `Π_i ∫_0^∞ |conv{f_i ≥ r}| dr` from superlevel hulls.
    pub layer_cake_product: f64,
    pub rel_gap: f64,
    /// Prékopa–Leindler on `φ_i(r) = |conv{f_i ≥ r}|` against
    /// `h(t) = |B_j^n| C(k,j)^{−n/j} ρ^{-1}(t^k)^{n/j}`.
    pub prekopa_leindler: PrekopaLeindlerReport,
    pub conjectured_rhs: f64,
    pub levels: usize,
    /// Largest change of `φ_i(r)` when the lattice is coarsened to `2h`; used
    /// as the tolerance of the hypothesis check.
    pub phi_error: f64,
}

/// The set-to-function pipeline: superlevel sets of each `f_i`, their hulls,
/// volumes `φ_i(r)`, the λ-rescaled set inequality as the Prékopa–Leindler
/// hypothesis, and the layer-cake identity `∫ f_i = ∫ φ_i`.
pub fn layer_cake_pipeline(fs: &[&GridFunction], rho: &RhoFunction, j: usize, levels: usize) -> Result<LayerCakeReport> {
    let k = fs.len();
    let n = fs.first().ok_or_else(|| GeomError::Domain("no functions".into()))?.dim();
    let params = PolarityParams::new(k, j)?;
    let direct_product: f64 = fs.iter().map(|f| f.weighted_sum(false, |_| 1.0)).product();
    let mut phi_error: f64 = 0.0;
    let mut tables = Vec::with_capacity(k);
    for f in fs {
        let top = f.values().iter().copied().fold(0.0, f64::max);
        let rs: Vec<f64> = (1..=levels).map(|i| top * i as f64 / levels as f64).collect();
        let vols: Vec<f64> = rs.par_iter().map(|r| superlevel_hull_volume(f, *r)).collect::<Result<_>>()?;
        // discretization error of φ: change under coarsening to 2h
        if let Some(c) = f.coarsened() {
            let coarse: Vec<f64> = rs.par_iter().map(|r| superlevel_hull_volume(&c, *r)).collect::<Result<_>>()?;
            phi_error = vols.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(phi_error, f64::max);
        }
        tables.push(Table1D::new(rs, vols)?);
    }
    let layer_cake_product: f64 = tables.iter().map(|t| t.integral()).product();
    let rel_gap = (layer_cake_product - direct_product).abs() / direct_product;
    let a = n as f64 / j as f64;
    let c = params.binom();
    let bj = lp_ball_volume(n, j as f64);
    let h = |t: f64| {
        let v = rho.inverse(t.powi(k as i32));
        if v > 0.0 {
            bj * c.powf(-a) * v.powf(a)
        } else {
            0.0
        }
    };
    let rhs = conjectured_rhs(rho, n, j, k)?;
    let h_int = rhs.value.powf(1.0 / k as f64);
    let prekopa_leindler = prekopa_leindler_check_fn(&tables, h, h_int, h_int * rhs.error / rhs.value / k as f64, phi_error + 1e-9)?;
    Ok(LayerCakeReport { direct_product, layer_cake_product, rel_gap, prekopa_leindler, conjectured_rhs: rhs.value, levels, phi_error })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxedBoundReport {
    pub product: f64,
    pub constant: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `Π ∫ f_i ≤ C(k,j)^{nk/j} · conjectured_rhs` for symmetric, not
/// necessarily unconditional, inputs.
pub fn relaxed_bound_check(fs: &[&dyn EvenFunction], rho: &RhoFunction, j: usize, tol: f64) -> Result<RelaxedBoundReport> {
    let k = fs.len();
    let n = fs.first().ok_or_else(|| GeomError::Domain("no functions".into()))?.dim();
    let product: f64 = fs.iter().map(|f| f.integral().map(|v| v.value)).collect::<Result<Vec<_>>>()?.iter().product();
    let constant = bound_constant(n, j, k)?;
    let bound = constant * conjectured_rhs(rho, n, j, k)?.value;
    Ok(RelaxedBoundReport { product, constant, bound, pass: product <= bound * (1.0 + tol) })
}
