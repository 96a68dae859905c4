//! Ball-type functionals `B_j(K_1, …, K_k, {ε_m}) = Σ_m Π_i ∫_{K_i} |⟨x, ε_m⟩|^j`,
//! their minimum over orthonormal bases, isotropic position and the
//! equal-moments diagonal map.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, SymmetricPolytope};
use crate::error::{GeomError, Result};
use crate::functional::{orthant_rhs_integral, EvenFunction, GridFunction, RhoFunction};
use crate::linalg::{dot, Point};
use crate::measure::{lp_ball_moment, lp_ball_volume, mc_box_integral, moment_along, second_moment_matrix, volume, McConfig, VolumeResult};

/// Orthonormal basis of ℝ^n as a product of Givens rotations
/// `G(0,1,θ_0) G(0,2,θ_1) … G(n−2,n−1,θ_last)`; column `m` is `ε_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    angles: Vec<f64>,
    columns: DMatrix<f64>,
}

impl OrthoBasis {
    pub fn identity(n: usize) -> Self {
        Self { angles: vec![0.0; n * (n - 1) / 2], columns: DMatrix::identity(n, n) }
    }

    pub fn from_angles(n: usize, angles: &[f64]) -> Result<Self> {
        if angles.len() != n * (n - 1) / 2 {
            return Err(GeomError::DimensionMismatch { expected: n * (n - 1) / 2, got: angles.len() });
        }
        let mut q = DMatrix::identity(n, n);
        let mut t = 0;
        for p in 0..n {
            for r in p + 1..n {
                let (s, c) = angles[t].sin_cos();
                // right-multiply by the rotation in the (p, r) plane
                for row in 0..n {
                    let (a, b) = (q[(row, p)], q[(row, r)]);
                    q[(row, p)] = c * a + s * b;
                    q[(row, r)] = -s * a + c * b;
                }
                t += 1;
            }
        }
        Ok(Self { angles: angles.to_vec(), columns: q })
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn axis(&self, m: usize) -> Point {
        self.columns.column(m).iter().copied().collect()
    }

    /// Largest entry of `QᵀQ − I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        (self.columns.transpose() * &self.columns - DMatrix::<f64>::identity(n, n)).abs().max()
    }
}

impl Serialize for OrthoBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let cols: Vec<Point> = (0..self.dim()).map(|m| self.axis(m)).collect();
        let mut st = s.serialize_struct("OrthoBasis", 2)?;
        st.serialize_field("angles", &self.angles)?;
        st.serialize_field("columns", &cols)?;
        st.end()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BallValue {
    pub value: f64,
    /// First-order MC error; zero on the exact polytope path.
    pub stderr: f64,
    pub basis: OrthoBasis,
    pub per_axis_terms: Vec<f64>,
    /// Set for minimized values: the optimizer only certifies an upper bound
    /// on the minimum over bases.
    pub upper_bound: bool,
    /// Final value of each restart, in restart order (minimized values only).
    pub restart_values: Vec<f64>,
}

impl BallValue {
    pub fn restart_spread(&self) -> f64 {
        let lo = self.restart_values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.restart_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.restart_values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// `∫_K |⟨x, u⟩|^j dx`: exact for polytopes, box MC for oracles.
pub fn directional_moment(body: &Body, u: &[f64], j: usize, cfg: &McConfig) -> Result<VolumeResult> {
    match body {
        Body::Polytope(p) => moment_along(p, u, j),
        Body::Oracle(o) => {
            Ok(mc_box_integral(o.dim(), o.outer_radius(), cfg, |x| if o.member(x) { dot(x, u).abs().powi(j as i32) } else { 0.0 }))
        }
    }
}

fn check_bodies(bodies: &[Body]) -> Result<usize> {
    let n = bodies.first().ok_or_else(|| GeomError::Domain("empty tuple".into()))?.dim();
    if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
        return Err(GeomError::DimensionMismatch { expected: n, got: b.dim() });
    }
    Ok(n)
}

/// `Σ_m Π_i ∫_{K_i} |⟨x_i, ε_m⟩|^j dx_i`. Oracle slot `i` uses the MC seed
/// `cfg.reseeded(i + 1)` for every basis, so values at different bases are
/// comparable (common random numbers).
pub fn ball_value_at_basis(bodies: &[Body], j: usize, basis: &OrthoBasis, cfg: &McConfig) -> Result<BallValue> {
    let n = check_bodies(bodies)?;
    if basis.dim() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: basis.dim() });
    }
    let k = bodies.len();
    let moments: Vec<VolumeResult> = (0..n * k)
        .into_par_iter()
        .map(|t| {
            let (m, i) = (t / k, t % k);
            directional_moment(&bodies[i], &basis.axis(m), j, &cfg.reseeded(i as u64 + 1))
        })
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(n);
    let mut var = 0.0;
    for m in 0..n {
        let row = &moments[m * k..(m + 1) * k];
        let term: f64 = row.iter().map(|v| v.value).product();
        let rel2: f64 = row.iter().map(|v| v.rel_stderr().powi(2)).sum();
        var += term * term * rel2;
        terms.push(term);
    }
    Ok(BallValue {
        value: terms.iter().sum(),
        stderr: var.sqrt(),
        basis: basis.clone(),
        per_axis_terms: terms,
        upper_bound: false,
        restart_values: vec![],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallOptimizer {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for BallOptimizer {
    fn default() -> Self {
        Self { restarts: 8, max_iter: 400, tol: 1e-10, seed: 0 }
    }
}

/// Nelder–Mead with standard coefficients. Stops after `max_iter`
/// iterations or when the spread of simplex values falls below
/// `tol·(1 + |f_best|)`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, max_iter: usize, tol: f64) -> (Point, f64, usize) {
    let d = x0.len();
    if d == 0 {
        return (vec![], f(x0), 0);
    }
    let mut simplex: Vec<(Point, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Point { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    let mut it = 0;
    while it < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        if worst - best <= tol * (1.0 + best.abs()) {
            break;
        }
        it += 1;
        let centroid: Point = (0..d).map(|c| simplex[..d].iter().map(|p| p.0[c]).sum::<f64>() / d as f64).collect();
        let xw = simplex[d].0.clone();
        let xr = lerp(&centroid, &xw, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &xw, -2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let x = lerp(&centroid, &xw, -0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = lerp(&centroid, &xw, 0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < worst.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = lerp(&x0, &p.0, 0.5);
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v, it)
}

/// Upper bound on `min_{ε ∈ D(n)} B_j(K_1, …, K_k, ε)` by multi-start
/// Nelder–Mead over Givens angles. Restart 0 starts at the standard basis,
/// the others at seeded uniform angles; the lowest final value wins, ties
/// going to the lower restart index.
pub fn ball_value_min(bodies: &[Body], j: usize, opt: &BallOptimizer, cfg: &McConfig) -> Result<BallValue> {
    let n = check_bodies(bodies)?;
    let dims = n * (n - 1) / 2;
    let eval = |a: &[f64]| -> f64 {
        OrthoBasis::from_angles(n, a)
            .and_then(|b| ball_value_at_basis(bodies, j, &b, cfg))
            .map(|v| v.value)
            .unwrap_or(f64::INFINITY)
    };
    let runs: Vec<(Point, f64)> = (0..opt.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start: Point = if r == 0 {
                vec![0.0; dims]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
                rng.set_stream(r as u64);
                (0..dims).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
            };
            let (x, v, _) = nelder_mead(eval, &start, 0.3, opt.max_iter, opt.tol);
            (x, v)
        })
        .collect();
    let winner = runs.iter().enumerate().fold(0, |b, (i, r)| if r.1 < runs[b].1 { i } else { b });
    let basis = OrthoBasis::from_angles(n, &runs[winner].0)?;
    let mut best = ball_value_at_basis(bodies, j, &basis, cfg)?;
    best.upper_bound = true;
    best.restart_values = runs.iter().map(|r| r.1).collect();
    Ok(best)
}

/// `n (∫_{B_j^n} |x_1|^j dx)^k`, the value of `B_j` at the l_j-ball tuple.
pub fn ball_value_lj_tuple(n: usize, j: usize, k: usize) -> f64 {
    n as f64 * lp_ball_moment(n, j as f64, j as f64).powi(k as i32)
}

/// `T` with `det T = 1` putting `TK` in isotropic position:
/// `T = det(M)^{1/(2n)} M^{−1/2}` for the second-moment matrix `M`.
pub fn isotropic_map(p: &SymmetricPolytope) -> Result<DMatrix<f64>> {
    let m = second_moment_matrix(p)?;
    let n = p.dim();
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
        return Err(GeomError::Degenerate { rank: eig.eigenvalues.iter().filter(|l| **l > 0.0).count(), dim: n });
    }
    let det: f64 = eig.eigenvalues.iter().product();
    let inv_sqrt = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose() * det.powf(1.0 / (2.0 * n as f64)))
}

/// Largest off-diagonal entry and diagonal spread of the second-moment
/// matrix, both relative to `trace/n`.
pub fn isotropy_defect(p: &SymmetricPolytope) -> Result<(f64, f64)> {
    let m = second_moment_matrix(p)?;
    let n = p.dim();
    let mean = m.trace() / n as f64;
    let mut off: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for a in 0..n {
        spread = spread.max((m[(a, a)] - mean).abs());
        for b in 0..n {
            if a != b {
                off = off.max(m[(a, b)].abs());
            }
        }
    }
    Ok((off / mean, spread / mean))
}

/// Classical `B(K) = ∫_K ∫_{K°} ⟨x, y⟩² dx dy = tr(M_K M_{K°})`.
pub fn classical_ball_functional(k: &SymmetricPolytope) -> Result<f64> {
    let polar = crate::polar::classical_polar(k)?;
    Ok((second_moment_matrix(k)? * second_moment_matrix(&polar)?).trace())
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualMoments {
    pub d: Vec<f64>,
    pub iterations: usize,
    /// `max_m / min_m − 1` of the exact moments of the mapped body.
    pub residual: f64,
    pub converged: bool,
}

/// Diagonal `d` with `Π d_m = 1` equalizing `∫_{DQ} |x_m|^j`.
///
/// Since `∫_{DQ} |x_m|^j = d_m^j ∫_Q |x_m|^j` for `det D = 1`, the update
/// `d_m ← d_m (target/current_m)^{1/(j+1)}` toward the geometric mean is run
/// on that law (at most 200 steps), then checked on the mapped polytope.
pub fn equal_moments_map(q: &SymmetricPolytope, j: usize) -> Result<EqualMoments> {
    if j == 0 {
        return Err(GeomError::Domain("equal moments map needs j ≥ 1".into()));
    }
    let n = q.dim();
    let unit = |m: usize| -> Point { (0..n).map(|l| if l == m { 1.0 } else { 0.0 }).collect() };
    let mu: Vec<f64> = (0..n).map(|m| moment_along(q, &unit(m), j).map(|v| v.value)).collect::<Result<_>>()?;
    let mut d = vec![1.0f64; n];
    let mut iterations = 0;
    let ratio = |cur: &[f64]| {
        let hi = cur.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = cur.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    };
    while iterations < 200 {
        let cur: Vec<f64> = (0..n).map(|m| d[m].powi(j as i32) * mu[m]).collect();
        if ratio(&cur) <= 1e-13 {
            break;
        }
        let target = (cur.iter().map(|c| c.ln()).sum::<f64>() / n as f64).exp();
        for m in 0..n {
            d[m] *= (target / cur[m]).powf(1.0 / (j as f64 + 1.0));
        }
        let g = (d.iter().map(|x| x.ln()).sum::<f64>() / n as f64).exp();
        d.iter_mut().for_each(|x| *x /= g);
        iterations += 1;
    }
    let mapped = q.diagonal_image(&d)?;
    let after: Vec<f64> = (0..n).map(|m| moment_along(&mapped, &unit(m), j).map(|v| v.value)).collect::<Result<_>>()?;
    let residual = ratio(&after);
    Ok(EqualMoments { d, iterations, residual, converged: residual <= 1e-8 })
}

/// Both sides of `(Π_m ∫_Q |x_m|^j)^{1/n} ≥ c_{n,j} |Q|^{(n+j)/n}` with
/// `c_{n,j} = (1/n) |B_j^n|^{−(n+j)/n} ∫_{B_j^n} ‖x‖_j^j`; equality at `B_j^n`.
pub fn coordinate_moment_bound(q: &SymmetricPolytope, j: usize) -> Result<(f64, f64)> {
    let n = q.dim();
    let mut logsum = 0.0;
    for m in 0..n {
        let u: Point = (0..n).map(|l| if l == m { 1.0 } else { 0.0 }).collect();
        logsum += moment_along(q, &u, j)?.value.ln();
    }
    let e = (n + j) as f64 / n as f64;
    let bj = lp_ball_volume(n, j as f64);
    // ∫_{B_j^n} ‖x‖_j^j = n ∫_{B_j^n} |x_1|^j
    let c = lp_ball_moment(n, j as f64, j as f64) / bj.powf(e);
    Ok(((logsum / n as f64).exp(), c * q.hull()?.volume().powf(e)))
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentVolumeReport {
    /// `B_j(B_j^n, …, {e_m}) / |B_j^n|^{k(n+j)/n}`.
    pub lhs: f64,
    /// `B_j(K_1, …, K_k) / (Π|K_i|)^{(n+j)/n}` at the best basis found.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub slack: f64,
    pub pass: bool,
    pub ball: BallValue,
    pub volumes: Vec<VolumeResult>,
}

/// Both sides of the moment/volume inequality. The right side may use any
/// basis (the inequality holds at every basis), so the optimizer's upper
/// bound keeps the check valid. Pass means `slack ≥ −3·stderr`.
pub fn moment_volume_check(bodies: &[Body], j: usize, opt: &BallOptimizer, cfg: &McConfig) -> Result<MomentVolumeReport> {
    let n = check_bodies(bodies)?;
    let k = bodies.len();
    let e = (n + j) as f64 / n as f64;
    let lhs = ball_value_lj_tuple(n, j, k) / lp_ball_volume(n, j as f64).powf(k as f64 * e);
    let ball = ball_value_min(bodies, j, opt, cfg)?;
    let volumes: Vec<VolumeResult> =
        bodies.iter().enumerate().map(|(i, b)| volume(b, &cfg.reseeded(1000 + i as u64))).collect::<Result<_>>()?;
    let prod: f64 = volumes.iter().map(|v| v.value).product();
    let rhs = ball.value / prod.powf(e);
    let rel2 = (ball.stderr / ball.value).powi(2) + e * e * volumes.iter().map(|v| v.rel_stderr().powi(2)).sum::<f64>();
    let rhs_stderr = rhs * rel2.sqrt();
    let slack = rhs - lhs;
    let pass = slack >= -3.0 * rhs_stderr - 1e-12 * lhs;
    Ok(MomentVolumeReport { lhs, rhs, rhs_stderr, slack, pass, ball, volumes })
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalBallValue {
    pub value: f64,
    pub per_axis_terms: Vec<f64>,
    /// Change of the value when every lattice input is coarsened to `2h`;
    /// zero when no input is tabulated or coarsening is impossible.
    pub quad_error: f64,
}

/// `Σ_m Π_i ∫ |⟨x_i, ε_m⟩|^j f_i(x_i) dx_i`.
pub fn functional_ball_value(fs: &[&dyn EvenFunction], j: usize, basis: &OrthoBasis) -> Result<FunctionalBallValue> {
    let n = fs.first().ok_or_else(|| GeomError::Domain("empty tuple".into()))?.dim();
    if let Some(f) = fs.iter().find(|f| f.dim() != n) {
        return Err(GeomError::DimensionMismatch { expected: n, got: f.dim() });
    }
    if basis.dim() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: basis.dim() });
    }
    let value_of = |fs: &[&dyn EvenFunction]| -> Result<Vec<f64>> {
        (0..n)
            .map(|m| {
                let u = basis.axis(m);
                fs.iter().map(|f| f.directional_moment(&u, j as f64).map(|v| v.value)).product::<Result<f64>>()
            })
            .collect()
    };
    let terms = value_of(fs)?;
    let value: f64 = terms.iter().sum();
    let coarse: Option<Vec<GridFunction>> = fs.iter().map(|f| f.as_grid().and_then(|g| g.coarsened())).collect();
    let quad_error = match coarse {
        Some(c) if fs.iter().any(|f| f.as_grid().is_some()) => {
            let mixed: Vec<&dyn EvenFunction> =
                fs.iter().zip(&c).map(|(f, g)| if f.as_grid().is_some() { g as &dyn EvenFunction } else { *f }).collect();
            (value_of(&mixed)?.iter().sum::<f64>() - value).abs()
        }
        _ => 0.0,
    };
    Ok(FunctionalBallValue { value, per_axis_terms: terms, quad_error })
}

/// `n^{1−k} (∫ ‖u‖_j^j ρ(C(k,j)‖u‖_j^j)^{1/k} du)^k`, with the inner
/// integral `n |B_j^n| ∫_0^∞ s^{n+j−1} ρ(C s^j)^{1/k} ds`.
pub fn functional_ball_rhs(rho: &RhoFunction, n: usize, j: usize, k: usize) -> Result<f64> {
    if rho.monotonicity_defect(-1.0, 100.0) > 0.0 {
        return Err(GeomError::Domain("the functional Ball bound needs a decreasing ρ".into()));
    }
    // ∫ ‖u‖_j^j φ(‖u‖_j) du = Σ_l ∫ |u_l|^j φ = n · 2^n · orthant integral of |u_1|^j φ
    let inner = 2f64.powi(n as i32) * n as f64 * orthant_rhs_integral(rho, n, j, k, 1.0, j as f64)?.value;
    Ok((n as f64).powi(1 - k as i32) * inner.powi(k as i32))
}
