//! Adaptive Gauss–Kronrod (7/15) quadrature in one dimension.

use serde::Serialize;

use crate::error::{GeomError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of per-interval |K15 − G7| estimates.
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to absolute-or-relative tolerance `tol`, bisecting the interval
/// with the largest error estimate until the total estimate meets it.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], tol)
}

/// Like [`integrate`] over `[p_0, p_last]`, with the points `p` as initial
/// subdivision (kinks and jumps of `f` should be among them).
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> Result<QuadResult> {
    const MAX_INTERVALS: usize = 20_000;
    let mut ivs: Vec<(f64, f64, f64, f64)> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let value: f64 = ivs.iter().map(|i| i.2).sum();
        let error: f64 = ivs.iter().map(|i| i.3).sum();
        if !value.is_finite() {
            return Err(GeomError::Divergence(format!("non-finite integrand sum {value}")));
        }
        if error <= tol.max(tol * value.abs()) || ivs.len() >= MAX_INTERVALS {
            if ivs.len() >= MAX_INTERVALS && error > 1e3 * tol.max(tol * value.abs()) {
                return Err(GeomError::NonConvergence { iterations: ivs.len(), residual: error });
            }
            return Ok(QuadResult { value, error, intervals: ivs.len() });
        }
        let (w, _) = ivs.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, iv)| if iv.3 > b.1 { (i, iv.3) } else { b });
        let (a, b, _, _) = ivs.swap_remove(w);
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            // interval exhausted at machine precision
            return Ok(QuadResult { value, error, intervals: ivs.len() + 1 });
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        ivs.push((a, m, v1, e1));
        ivs.push((m, b, v2, e2));
    }
}

/// `∫_a^∞ f` via `t = a + s/(1−s)` on `[0, 1)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<QuadResult> {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - s;
        let v = f(a + s / d) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}
