use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::bodies::Body;
use crate::error::{GeomError, Result};
use crate::linalg::{dot, Point};
use crate::measure::{volume_by_halves, McConfig, VolumeResult};

/// An even nonnegative function with the integrals the checks need.
pub trait EvenFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    /// `∫ f`.
    fn integral(&self) -> Result<VolumeResult>;
    /// `∫ |⟨x, u⟩|^q f(x) dx`.
    fn directional_moment(&self, u: &[f64], q: f64) -> Result<VolumeResult>;
    /// Radius of a ball outside of which `f` is zero or negligible.
    fn radius(&self) -> f64;
    /// Points where polarity violations are most likely (vertices of a
    /// polytope support); sampled in addition to lattice points.
    fn probe_points(&self) -> Vec<Point> {
        vec![]
    }
    /// Values on a lattice, when the function is natively tabulated.
    fn as_grid(&self) -> Option<&GridFunction> {
        None
    }
}

/// Values on the centered lattice `{h·i : i ∈ {−c, …, c}^n}` with `L = c·h`.
/// Coordinates are computed as `(i − c)·h`, so `x` and `−x` are bitwise
/// negatives of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    half: usize,
    h: f64,
    values: Vec<f64>,
    even: bool,
}

impl GridFunction {
    /// `L/h` must be an integer (to 1e-9).
    pub fn new(n: usize, l: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if n == 0 || !(h > 0.0) || !(l > 0.0) {
            return Err(GeomError::Domain(format!("grid needs n ≥ 1, L > 0, h > 0 (got {n}, {l}, {h})")));
        }
        let c = (l / h).round();
        if ((l / h) - c).abs() > 1e-9 * c.max(1.0) {
            return Err(GeomError::Domain(format!("L = {l} is not a multiple of h = {h}")));
        }
        let half = c as usize;
        let m = 2 * half + 1;
        let count = m.checked_pow(n as u32).ok_or_else(|| GeomError::Domain("lattice too large".into()))?;
        if values.len() != count {
            return Err(GeomError::DimensionMismatch { expected: count, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || v.is_infinite()) {
            return Err(GeomError::Domain(format!("grid value {v} is not finite and nonnegative")));
        }
        let even = (0..count).all(|i| values[i] == values[count - 1 - i]);
        Ok(Self { n, half, h, values, even })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(n: usize, l: f64, h: f64, f: F) -> Result<Self> {
        let half = (l / h).round() as usize;
        let m = 2 * half + 1;
        let count = m.pow(n as u32);
        let probe = Self { n, half, h, values: vec![], even: false };
        let values: Vec<f64> = (0..count).into_par_iter().map(|i| f(&probe.point(i))).collect();
        Self::new(n, l, h, values)
    }

    /// Indicator of a body sampled on the lattice.
    pub fn indicator(body: &Body, l: f64, h: f64) -> Result<Self> {
        Self::from_fn(body.dim(), l, h, |x| if body.member(x) { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half as f64 * self.h
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Points per axis.
    pub fn side(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// Row-major multi-index of flat index `i` (last axis fastest).
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let m = self.side();
        let mut idx = vec![0; self.n];
        for a in (0..self.n).rev() {
            idx[a] = i % m;
            i /= m;
        }
        idx
    }

    pub fn point(&self, i: usize) -> Point {
        self.multi_index(i).into_iter().map(|k| (k as f64 - self.half as f64) * self.h).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.side() + k)
    }

    /// Trapezoidal weight of lattice point `i` over the full cube.
    pub fn weight(&self, i: usize) -> f64 {
        let m = self.side();
        self.multi_index(i).iter().map(|&k| if k == 0 || k == m - 1 { 0.5 * self.h } else { self.h }).product()
    }

    /// Trapezoidal weight over `[0, L]^n`; zero off the closed orthant.
    pub fn orthant_weight(&self, i: usize) -> f64 {
        let m = self.side();
        self.multi_index(i)
            .iter()
            .map(|&k| {
                if k < self.half {
                    0.0
                } else if k == self.half || k == m - 1 {
                    0.5 * self.h
                } else {
                    self.h
                }
            })
            .product()
    }

    /// Multilinear interpolation; zero outside `[−L, L]^n`.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let m = self.side();
        let mut base = vec![0usize; self.n];
        let mut frac = vec![0.0; self.n];
        for a in 0..self.n {
            let s = x[a] / self.h + self.half as f64;
            if !(s >= 0.0 && s <= (m - 1) as f64) {
                return 0.0;
            }
            let f = s.floor().min((m - 2) as f64);
            base[a] = f as usize;
            frac[a] = s - f;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << self.n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..self.n {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                total += w * self.values[self.flat_index(&idx)];
            }
        }
        total
    }

    /// Lattice sum `Σ w_i g(x_i) f(x_i)`, summed in index order so the
    /// result does not depend on thread scheduling.
    pub fn weighted_sum<G: Fn(&[f64]) -> f64 + Sync>(&self, orthant: bool, g: G) -> f64 {
        let terms: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                if self.values[i] == 0.0 {
                    return 0.0;
                }
                let w = if orthant { self.orthant_weight(i) } else { self.weight(i) };
                w * g(&self.point(i)) * self.values[i]
            })
            .collect();
        terms.iter().sum()
    }

    /// Largest value on the lattice boundary relative to the maximum; a
    /// proxy for truncation error of the lattice quadrature.
    pub fn boundary_mass(&self) -> f64 {
        let m = self.side();
        let max = self.values.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let edge = (0..self.len())
            .filter(|&i| self.multi_index(i).iter().any(|&k| k == 0 || k == m - 1))
            .map(|i| self.values[i])
            .fold(0.0, f64::max);
        edge / max
    }

    /// `g(|x(1)|, …, |x(n)|)`-style fold: the value at `x` becomes the mean
    /// of `f` over the `2^n` reflections of `x`.
    pub fn unconditional_average(&self) -> Self {
        let m = self.side();
        let values = (0..self.len())
            .map(|i| {
                let idx = self.multi_index(i);
                let mut s = 0.0;
                for mask in 0..(1usize << self.n) {
                    let r: Vec<usize> = idx.iter().enumerate().map(|(a, &k)| if mask >> a & 1 == 1 { m - 1 - k } else { k }).collect();
                    s += self.values[self.flat_index(&r)];
                }
                s / (1usize << self.n) as f64
            })
            .collect();
        Self { values, ..self.clone() }
    }

    /// Every other lattice point with spacing `2h`, when `L/h` is even.
    pub fn coarsened(&self) -> Option<Self> {
        if !self.half.is_multiple_of(2) || self.half == 0 {
            return None;
        }
        let half = self.half / 2;
        let m = 2 * half + 1;
        let values = (0..m.pow(self.n as u32))
            .map(|mut i| {
                let mut idx = vec![0; self.n];
                for a in (0..self.n).rev() {
                    idx[a] = 2 * (i % m);
                    i /= m;
                }
                self.values[self.flat_index(&idx)]
            })
            .collect();
        Some(Self { n: self.n, half, h: 2.0 * self.h, values, even: self.even })
    }

    /// `x ↦ f(σx)` where bit `a` of `mask` flips coordinate `a`.
    pub fn reflected(&self, mask: usize) -> Self {
        let m = self.side();
        let values = (0..self.len())
            .map(|i| {
                let idx: Vec<usize> =
                    self.multi_index(i).into_iter().enumerate().map(|(a, k)| if mask >> a & 1 == 1 { m - 1 - k } else { k }).collect();
                self.values[self.flat_index(&idx)]
            })
            .collect();
        Self { values, ..self.clone() }
    }

    pub fn map_values<F: Fn(&[f64], f64) -> f64 + Sync>(&self, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..self.len()).into_par_iter().map(|i| f(&self.point(i), self.values[i])).collect();
        Self::new(self.n, self.half_width(), self.h, values)
    }

    pub fn same_lattice(&self, other: &GridFunction) -> bool {
        self.n == other.n && self.half == other.half && self.h == other.h
    }
}

impl EvenFunction for GridFunction {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.interpolate(x)
    }

    fn integral(&self) -> Result<VolumeResult> {
        Ok(VolumeResult::exact(self.weighted_sum(false, |_| 1.0)))
    }

    fn directional_moment(&self, u: &[f64], q: f64) -> Result<VolumeResult> {
        Ok(VolumeResult::exact(self.weighted_sum(false, |x| dot(x, u).abs().powf(q))))
    }

    fn radius(&self) -> f64 {
        self.half_width() * (self.n as f64).sqrt()
    }

    fn as_grid(&self) -> Option<&GridFunction> {
        Some(self)
    }
}

/// Plain text: header `n L h`, then the values in row-major lattice order.
pub fn format_grid(g: &GridFunction) -> String {
    let mut s = format!("{} {:e} {:e}\n", g.n, g.half_width(), g.h);
    for row in g.values.chunks(g.side()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_grid(text: &str) -> Result<GridFunction> {
    let mut tokens = text.lines().filter(|l| !l.trim_start().starts_with('#')).flat_map(|l| l.split_whitespace());
    let parse_err = |what: &str| GeomError::Parse(format!("grid header: bad or missing {what}"));
    let n: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("n"))?;
    let l: f64 = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("L"))?;
    let h: f64 = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("h"))?;
    let values: Vec<f64> =
        tokens.map(|t| t.parse::<f64>().map_err(|e| GeomError::Parse(format!("grid value {t:?}: {e}")))).collect::<Result<_>>()?;
    GridFunction::new(n, l, h, values)
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    parse_grid(&std::fs::read_to_string(path)?)
}

pub fn write_grid(path: &Path, g: &GridFunction) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_grid(g).as_bytes())?;
    Ok(())
}

/// `1_K` for a body `K`, with exact integrals on the polytope path.
#[derive(Debug, Clone)]
pub struct Indicator {
    pub body: Body,
    pub cfg: McConfig,
}

impl Indicator {
    pub fn new(body: Body) -> Self {
        Self { body, cfg: McConfig::default() }
    }
}

impl EvenFunction for Indicator {
    fn dim(&self) -> usize {
        self.body.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if self.body.member(x) {
            1.0
        } else {
            0.0
        }
    }

    /// Layer cake of an indicator: `∫ 1_K = |K|`, computed through the
    /// half-body triangulation on polytopes.
    fn integral(&self) -> Result<VolumeResult> {
        match &self.body {
            Body::Polytope(p) => {
                let mut u = vec![0.0; p.dim()];
                u[0] = 1.0;
                volume_by_halves(p, &u)
            }
            other => crate::measure::volume(other, &self.cfg),
        }
    }

    fn directional_moment(&self, u: &[f64], q: f64) -> Result<VolumeResult> {
        if q.fract() != 0.0 || q < 0.0 {
            return Err(GeomError::Unsupported(format!("indicator moments need integer q ≥ 0, got {q}")));
        }
        crate::ball::directional_moment(&self.body, u, q as usize, &self.cfg)
    }

    fn radius(&self) -> f64 {
        self.body.outer_radius()
    }

    fn probe_points(&self) -> Vec<Point> {
        match &self.body {
            Body::Polytope(p) => p.vertices().to_vec(),
            Body::Oracle(_) => vec![],
        }
    }
}

/// `c · exp(−a ‖x‖_p^p)`, unconditional, with closed-form integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpLp {
    pub n: usize,
    pub c: f64,
    pub a: f64,
    pub p: f64,
}

impl ExpLp {
    pub fn new(n: usize, c: f64, a: f64, p: f64) -> Result<Self> {
        if n == 0 || !(c > 0.0 && a > 0.0 && p > 0.0) {
            return Err(GeomError::Domain(format!("exp-lp function needs n ≥ 1 and c, a, p > 0 (got {n}, {c}, {a}, {p})")));
        }
        Ok(Self { n, c, a, p })
    }

    /// `∫_ℝ |t|^q e^{−a|t|^p} dt = 2 Γ((q+1)/p) / (p a^{(q+1)/p})`.
    fn line_moment(&self, q: f64) -> f64 {
        2.0 * (ln_gamma((q + 1.0) / self.p) - self.p.ln() - (q + 1.0) / self.p * self.a.ln()).exp()
    }

    pub fn to_grid(&self, l: f64, h: f64) -> Result<GridFunction> {
        GridFunction::from_fn(self.n, l, h, |x| self.eval(x))
    }
}

impl EvenFunction for ExpLp {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.c * (-self.a * x.iter().map(|v| v.abs().powf(self.p)).sum::<f64>()).exp()
    }

    fn integral(&self) -> Result<VolumeResult> {
        Ok(VolumeResult::exact(self.c * self.line_moment(0.0).powi(self.n as i32)))
    }

    /// Closed form along coordinate axes; other directions are not supported.
    fn directional_moment(&self, u: &[f64], q: f64) -> Result<VolumeResult> {
        let nz: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0).collect();
        if nz.len() != 1 {
            return Err(GeomError::Unsupported("exp-lp moments only along coordinate axes".into()));
        }
        let s = u[nz[0]].abs().powf(q);
        Ok(VolumeResult::exact(self.c * s * self.line_moment(q) * self.line_moment(0.0).powi(self.n as i32 - 1)))
    }

    /// Outside this ball some coordinate has `a|x_l|^p > 39`, so `f < 1e-17·c`.
    fn radius(&self) -> f64 {
        (39.2 / self.a).powf(1.0 / self.p) * (self.n as f64).sqrt()
    }
}
