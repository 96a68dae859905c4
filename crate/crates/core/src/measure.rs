//! Exact volumes and moments of polytopes, Monte Carlo estimates for oracles,
//! closed forms for l_p balls.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bodies::{Body, BodyOracle, SymmetricPolytope};
use crate::error::{GeomError, Result};
use crate::hull::Hull;
use crate::linalg::{binomial, det_rows, dot, factorial, sub, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Samples per batch; batches run in parallel on independent RNG streams.
    pub batch: usize,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        let batch = [100_000, 50_000, 10_000, 5_000, 1_000].into_iter().find(|b| samples.is_multiple_of(*b)).unwrap_or(samples);
        Self::with_batch(samples, seed, batch)
    }

    pub fn with_batch(samples: usize, seed: u64, batch: usize) -> Result<Self> {
        if samples < 1000 {
            return Err(GeomError::Domain(format!("need at least 1000 MC samples, got {samples}")));
        }
        if batch == 0 || !samples.is_multiple_of(batch) {
            return Err(GeomError::Domain(format!("batch {batch} must divide sample count {samples}")));
        }
        Ok(Self { samples, seed, batch })
    }

    /// Same sample budget on an unrelated seed, for independent estimates.
    pub fn reseeded(&self, offset: u64) -> Self {
        Self { seed: self.seed ^ offset.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17), ..*self }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0, batch: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeResult {
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
}

impl VolumeResult {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, method: Method::Exact }
    }

    pub fn rel_stderr(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.stderr / self.value.abs()
        }
    }
}

fn require_full(p: &SymmetricPolytope) -> Result<&Hull> {
    p.hull()
}

/// Exact volume by cone triangulation of the hull.
pub fn volume_polytope(p: &SymmetricPolytope) -> Result<VolumeResult> {
    Ok(VolumeResult::exact(require_full(p)?.volume()))
}

/// Box estimator `(2R)^n · mean(w(x))` over uniform `x ∈ [-R, R]^n`.
/// Batches use stream `b` of a ChaCha8 generator seeded with `cfg.seed`.
pub fn mc_box_integral<F>(n: usize, radius: f64, cfg: &McConfig, weight: F) -> VolumeResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nb = cfg.samples / cfg.batch;
    let sums: Vec<(f64, f64)> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let mut x = vec![0.0; n];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..cfg.batch {
                for c in x.iter_mut() {
                    *c = radius * (2.0 * rng.random::<f64>() - 1.0);
                }
                let w = weight(&x);
                s1 += w;
                s2 += w * w;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nn = cfg.samples as f64;
    let mean = s1 / nn;
    let var = (s2 / nn - mean * mean).max(0.0);
    let boxv = (2.0 * radius).powi(n as i32);
    VolumeResult { value: boxv * mean, stderr: boxv * (var / nn).sqrt(), method: Method::Mc }
}

/// Hit-or-miss volume over `[-R, R]^n`, `R` the outer radius.
pub fn volume_mc(body: &BodyOracle, cfg: &McConfig) -> VolumeResult {
    mc_box_integral(body.dim(), body.outer_radius(), cfg, |x| if body.member(x) { 1.0 } else { 0.0 })
}

/// Hit-or-miss volume for any body (polytopes included, as a cross-check).
pub fn volume_mc_body(body: &Body, cfg: &McConfig) -> VolumeResult {
    mc_box_integral(body.dim(), body.outer_radius(), cfg, |x| if body.member(x) { 1.0 } else { 0.0 })
}

/// Exact for polytopes, Monte Carlo for oracles.
pub fn volume(body: &Body, cfg: &McConfig) -> Result<VolumeResult> {
    match body {
        Body::Polytope(p) => volume_polytope(p),
        Body::Oracle(o) => Ok(volume_mc(o, cfg)),
    }
}

/// `|B_p^n| = 2^n Γ(1+1/p)^n / Γ(1+n/p)`.
pub fn lp_ball_volume(n: usize, p: f64) -> f64 {
    if p.is_infinite() {
        return 2f64.powi(n as i32);
    }
    let nf = n as f64;
    (nf * 2f64.ln() + nf * ln_gamma(1.0 + 1.0 / p) - ln_gamma(1.0 + nf / p)).exp()
}

/// `∫_{B_p^n} |x_1|^q dx = 2^n Γ((q+1)/p) Γ(1/p)^{n-1} / (p^n Γ(1+(q+n)/p))`.
pub fn lp_ball_moment(n: usize, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    (nf * 2f64.ln() + ln_gamma((q + 1.0) / p) + (nf - 1.0) * ln_gamma(1.0 / p)
        - nf * p.ln()
        - ln_gamma(1.0 + (q + nf) / p))
        .exp()
}

/// Complete homogeneous symmetric polynomial `h_j(t_0, …, t_d)`.
fn complete_homogeneous(t: &[f64], j: usize) -> f64 {
    let mut h = vec![0.0; j + 1];
    h[0] = 1.0;
    for &x in t {
        for r in 1..=j {
            h[r] += x * h[r - 1];
        }
    }
    h[j]
}

fn simplex_volume(s: &[Point]) -> f64 {
    let rows: Vec<Point> = s[1..].iter().map(|v| sub(v, &s[0])).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    det_rows(&refs).abs() / factorial(rows.len())
}

/// `∫_Δ ⟨x, u⟩^j dx = |Δ| · j! d! / (j+d)! · h_j(⟨v_0,u⟩, …, ⟨v_d,u⟩)`.
fn simplex_power_integral(s: &[Point], u: &[f64], j: usize) -> f64 {
    let d = s.len() - 1;
    let l: Vec<f64> = s.iter().map(|v| dot(v, u)).collect();
    let c = factorial(j) * factorial(d) / factorial(j + d);
    simplex_volume(s) * c * complete_homogeneous(&l, j)
}

/// `P ∩ {⟨x, u⟩ ≥ 0}` as a hull: nonnegative vertices plus edge crossings.
fn positive_half(h: &Hull, u: &[f64]) -> Result<Hull> {
    let pts = h.points();
    let vals: Vec<f64> = pts.iter().map(|v| dot(v, u)).collect();
    let mut half: Vec<Point> = pts.iter().zip(&vals).filter(|(_, l)| **l >= 0.0).map(|(v, _)| v.clone()).collect();
    for (a, b) in h.edges() {
        let (la, lb) = (vals[a], vals[b]);
        if (la > 0.0 && lb < 0.0) || (la < 0.0 && lb > 0.0) {
            let t = la / (la - lb);
            half.push(pts[a].iter().zip(&pts[b]).map(|(x, y)| x + t * (y - x)).collect());
        }
    }
    Hull::new(&half)
}

/// `∫_P |⟨x, u⟩|^j dx`, exact. The body is cut by `⟨x, u⟩ = 0`, the positive
/// half triangulated and integrated in closed form; symmetry doubles it.
pub fn moment_along(p: &SymmetricPolytope, u: &[f64], j: usize) -> Result<VolumeResult> {
    let h = require_full(p)?;
    if u.len() != p.dim() {
        return Err(GeomError::DimensionMismatch { expected: p.dim(), got: u.len() });
    }
    if j == 0 {
        return Ok(VolumeResult::exact(h.volume()));
    }
    let half = positive_half(h, u)?;
    let apex = half.interior_point().to_vec();
    let total: f64 = half.simplices_from(&apex).iter().map(|s| simplex_power_integral(s, u, j)).sum();
    Ok(VolumeResult::exact(2.0 * total))
}

/// `2·|P ∩ {⟨x, u⟩ ≥ 0}|`: the volume through the half-body triangulation,
/// independent of the full-hull volume.
pub fn volume_by_halves(p: &SymmetricPolytope, u: &[f64]) -> Result<VolumeResult> {
    let h = require_full(p)?;
    let half = positive_half(h, u)?;
    let apex = half.interior_point().to_vec();
    let total: f64 = half.simplices_from(&apex).iter().map(|s| simplex_volume(s)).sum();
    Ok(VolumeResult::exact(2.0 * total))
}

/// `∫_K |x_m|^j dx` (0-based `m`); exact for polytopes, box MC for oracles.
pub fn moment_integral(body: &Body, m: usize, j: usize, cfg: &McConfig) -> Result<VolumeResult> {
    let n = body.dim();
    if m >= n {
        return Err(GeomError::Domain(format!("coordinate {m} out of range for dimension {n}")));
    }
    match body {
        Body::Polytope(p) => {
            let mut e = vec![0.0; n];
            e[m] = 1.0;
            moment_along(p, &e, j)
        }
        Body::Oracle(o) => Ok(moment_mc(o, m, j, cfg)),
    }
}

pub fn moment_mc(body: &BodyOracle, m: usize, j: usize, cfg: &McConfig) -> VolumeResult {
    mc_box_integral(body.dim(), body.outer_radius(), cfg, |x| if body.member(x) { x[m].abs().powi(j as i32) } else { 0.0 })
}

/// `∫_P x xᵀ dx`, exact.
pub fn second_moment_matrix(p: &SymmetricPolytope) -> Result<DMatrix<f64>> {
    let h = require_full(p)?;
    let n = p.dim();
    let origin = vec![0.0; n];
    let mut m = DMatrix::zeros(n, n);
    for s in h.simplices_from(&origin) {
        let vol = simplex_volume(&s);
        let w = vol / ((n + 1) * (n + 2)) as f64;
        let mut sum = vec![0.0; n];
        for v in &s {
            for a in 0..n {
                sum[a] += v[a];
                for b in 0..n {
                    m[(a, b)] += w * v[a] * v[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] += w * sum[a] * sum[b];
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub value: f64,
    pub stderr: f64,
}

/// `Π v_i / |B_j^n|^k`, with first-order (delta-method) error propagation
/// for independent estimates.
pub fn santalo_ratio_from_volumes(volumes: &[VolumeResult], n: usize, j: usize) -> RatioResult {
    let k = volumes.len() as i32;
    let prod: f64 = volumes.iter().map(|v| v.value).product();
    let value = prod / lp_ball_volume(n, j as f64).powi(k);
    let rel = volumes.iter().map(|v| v.rel_stderr().powi(2)).sum::<f64>().sqrt();
    RatioResult { value, stderr: value.abs() * rel }
}

/// Santaló ratio of a tuple; oracle volumes use independent seeds per slot.
pub fn santalo_ratio(bodies: &[Body], j: usize, cfg: &McConfig) -> Result<RatioResult> {
    let n = bodies.first().ok_or_else(|| GeomError::Domain("empty tuple".into()))?.dim();
    if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
        return Err(GeomError::DimensionMismatch { expected: n, got: b.dim() });
    }
    let vols = bodies
        .iter()
        .enumerate()
        .map(|(i, b)| volume(b, &cfg.reseeded(i as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(santalo_ratio_from_volumes(&vols, n, j))
}

/// `C(k, j)^{n k / j}`.
pub fn bound_constant(n: usize, j: usize, k: usize) -> Result<f64> {
    if !(2 <= j && j <= k) {
        return Err(GeomError::Domain(format!("bound constant needs 2 ≤ j ≤ k (got j={j}, k={k})")));
    }
    Ok(binomial(k, j).powf((n * k) as f64 / j as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::make_lp_ball;
    use std::f64::consts::PI;

    #[test]
    fn polytope_volumes() {
        assert_eq!(volume_polytope(&SymmetricPolytope::cube(2, 1.0)).unwrap().value, 4.0);
        let c = volume_polytope(&SymmetricPolytope::cross_polytope(3, 1.0)).unwrap();
        assert!((c.value - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(c.method, Method::Exact);
    }

    #[test]
    fn mc_volumes() {
        let cfg = McConfig::new(1_000_000, 1).unwrap();
        let b2 = volume_mc(&make_lp_ball(2, 2.0, 1.0).unwrap(), &cfg);
        assert!((b2.value - PI).abs() < 3.0 * b2.stderr, "{b2:?}");
        let b1 = volume_mc(&make_lp_ball(2, 1.0, 1.0).unwrap(), &cfg);
        assert!((b1.value - 2.0).abs() < 3.0 * b1.stderr);
        let big = volume_mc(&make_lp_ball(2, 2.0, 2.0).unwrap(), &cfg);
        assert!((big.value - 4.0 * PI).abs() < 3.0 * big.stderr);
        assert_eq!(volume_mc(&make_lp_ball(2, 2.0, 1.0).unwrap(), &cfg), b2);
    }

    #[test]
    fn lp_ball_closed_forms() {
        assert!((lp_ball_volume(2, 2.0) - PI).abs() < 1e-12, "{:e}", lp_ball_volume(2, 2.0) - PI);
        for n in 1..6 {
            assert!((lp_ball_volume(n, 1.0) - 2f64.powi(n as i32) / factorial(n)).abs() < 1e-12);
        }
        let g = statrs::function::gamma::gamma;
        let v23 = 4.0 * g(4.0 / 3.0).powi(2) / g(5.0 / 3.0);
        assert!((lp_ball_volume(2, 3.0) - v23).abs() < 1e-12);
        assert!((v23 - 3.53328).abs() < 1e-5);
        assert!((lp_ball_moment(2, 2.0, 2.0) - PI / 4.0).abs() < 1e-12);
        assert!((lp_ball_moment(3, 1.5, 0.0) - lp_ball_volume(3, 1.5)).abs() < 1e-12);
        let mut last = 0.0;
        for p in [0.5, 1.0, 1.5, 2.0, 3.0, 8.0] {
            let v = lp_ball_volume(3, p);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn moments() {
        let cfg = McConfig::new(1_000_000, 2).unwrap();
        let cube: Body = SymmetricPolytope::cube(2, 1.0).into();
        assert!((moment_integral(&cube, 0, 2, &cfg).unwrap().value - 4.0 / 3.0).abs() < 1e-13);
        let disc: Body = make_lp_ball(2, 2.0, 1.0).unwrap().into();
        let m = moment_integral(&disc, 0, 2, &cfg).unwrap();
        assert!((m.value - PI / 4.0).abs() < 3.0 * m.stderr);
        let m0 = moment_integral(&disc, 0, 0, &cfg).unwrap();
        assert!((m0.value - PI).abs() < 3.0 * m0.stderr);
        // cross-polytope in ℝ³: ∫|x_1|^j = 2∫_0^1 t^j·2(1-t)² dt = 8·j!/(j+3)!
        let cr = SymmetricPolytope::cross_polytope(3, 1.0);
        for j in 0..5 {
            let exact = 8.0 * factorial(j) / factorial(j + 3);
            assert!((moment_along(&cr, &[1.0, 0.0, 0.0], j).unwrap().value - exact).abs() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn second_moments_of_box() {
        let p = SymmetricPolytope::cube(2, 1.0).diagonal_image(&[2.0, 0.5]).unwrap();
        let m = second_moment_matrix(&p).unwrap();
        // ∫ x² over [-2,2]×[-1/2,1/2] = (16/3)·1
        assert!((m[(0, 0)] - 16.0 / 3.0).abs() < 1e-12);
        assert!((m[(1, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!(m[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn ratios_and_constants() {
        let cfg = McConfig::new(1000, 0).unwrap();
        let a = 1.7;
        let iv = |r: f64| -> Body { SymmetricPolytope::cube(1, r).into() };
        let r = santalo_ratio(&[iv(a), iv(a), iv(1.0 / (a * a))], 3, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert_eq!(r.stderr, 0.0);
        let pair = [SymmetricPolytope::cube(2, 1.0).into(), SymmetricPolytope::cross_polytope(2, 1.0).into()];
        let r2 = santalo_ratio(&pair, 2, &cfg).unwrap();
        assert!((r2.value - 8.0 / (PI * PI)).abs() < 1e-14);
        assert_eq!(bound_constant(3, 3, 3).unwrap(), 1.0);
        assert!((bound_constant(1, 2, 3).unwrap() - 27f64.sqrt()).abs() < 1e-12);
        assert!((bound_constant(2, 2, 4).unwrap() - 1296.0).abs() < 1e-9);
        assert!(bound_constant(2, 1, 3).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(999, 0).is_err());
        assert!(McConfig::with_batch(10_000, 0, 3000).is_err());
        assert_eq!(McConfig::new(20_000, 0).unwrap().batch, 10_000);
    }
}
