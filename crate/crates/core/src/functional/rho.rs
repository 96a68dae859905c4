use serde::Serialize;

use crate::error::{domain, Result};

/// Nonincreasing `ρ: ℝ → [0, ∞]`. `+∞` is the `f64::INFINITY` sentinel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoFunction {
    /// `+∞` for `t < 0`, `scale` on `[0, c]`, `0` beyond: the ρ making
    /// indicators of bodies with `S_j ≤ c` polar.
    Indicator { c: f64, scale: f64 },
    /// `scale · e^{−t}`.
    Exponential { scale: f64 },
    /// `scale · (1 + t)^{−α}` for `t > −1`, `+∞` below.
    Power { alpha: f64, scale: f64 },
    /// Piecewise linear through `(t_i, v_i)`, constant outside the table.
    Table { t: Vec<f64>, v: Vec<f64> },
    /// `ρ(t) e^{−εt} + ε e^{−t−1/ε}`, a strictly decreasing
    /// surrogate of `base`; its inverse is found by bisection.
    Regularized { base: Box<RhoFunction>, eps: f64 },
}

pub const REGULARIZATION_EPS: f64 = 1e-6;

impl RhoFunction {
    /// The ρ of the indicator lift for `S_j ≤ c` (usually `c = C(k,j)`).
    pub fn indicator(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("indicator threshold {c} must be positive"));
        }
        Ok(Self::Indicator { c, scale: 1.0 })
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return domain(format!("scale {scale} must be positive"));
        }
        Ok(Self::Exponential { scale })
    }

    pub fn power(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && scale > 0.0 && scale.is_finite()) {
            return domain(format!("power ρ needs α > 0 and scale > 0, got α = {alpha}, scale = {scale}"));
        }
        Ok(Self::Power { alpha, scale })
    }

    /// Rejects unsorted abscissae, negative values and increasing steps.
    pub fn table(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() || t.len() < 2 {
            return domain("ρ table needs at least two (t, v) pairs of equal length");
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("ρ table abscissae must be strictly increasing");
        }
        if v.iter().any(|x| !(*x >= 0.0) || x.is_infinite()) {
            return domain("ρ table values must be finite and nonnegative");
        }
        if let Some(i) = v.windows(2).position(|w| w[1] > w[0]) {
            return domain(format!("ρ table increases between t = {} and t = {}", t[i], t[i + 1]));
        }
        Ok(Self::Table { t, v })
    }

    pub fn regularized(self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return domain(format!("regularization ε = {eps} outside (0, 1)"));
        }
        Ok(Self::Regularized { base: Box::new(self), eps })
    }

    /// `c · ρ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("scale {c} must be positive"));
        }
        Ok(match self {
            Self::Indicator { c: th, scale } => Self::Indicator { c: *th, scale: scale * c },
            Self::Exponential { scale } => Self::Exponential { scale: scale * c },
            Self::Power { alpha, scale } => Self::Power { alpha: *alpha, scale: scale * c },
            Self::Table { t, v } => Self::Table { t: t.clone(), v: v.iter().map(|x| x * c).collect() },
            Self::Regularized { base, eps } => Self::Regularized { base: Box::new(base.scaled(c)?), eps: *eps },
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Indicator { c, scale } => {
                if t < 0.0 {
                    f64::INFINITY
                } else if t <= *c {
                    *scale
                } else {
                    0.0
                }
            }
            Self::Exponential { scale } => scale * (-t).exp(),
            Self::Power { alpha, scale } => {
                if t <= -1.0 {
                    f64::INFINITY
                } else {
                    scale * (1.0 + t).powf(-alpha)
                }
            }
            Self::Table { t: ts, v } => {
                if t <= ts[0] {
                    return v[0];
                }
                if t >= ts[ts.len() - 1] {
                    return v[v.len() - 1];
                }
                let i = ts.partition_point(|x| *x <= t) - 1;
                let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
                v[i] + w * (v[i + 1] - v[i])
            }
            Self::Regularized { base, eps } => {
                let b = base.eval(t);
                let tail = eps * (-t - 1.0 / eps).exp();
                if b.is_infinite() {
                    b
                } else {
                    b * (-eps * t).exp() + tail
                }
            }
        }
    }

    /// Generalized inverse `sup{t : ρ(t) ≥ s}`; `+∞` when the set is
    /// unbounded above, `−∞` when it is empty.
    pub fn inverse(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::INFINITY;
        }
        match self {
            Self::Indicator { c, scale } => {
                if s <= *scale {
                    *c
                } else {
                    0.0
                }
            }
            Self::Exponential { scale } => (scale / s).ln(),
            Self::Power { alpha, scale } => (scale / s).powf(1.0 / alpha) - 1.0,
            Self::Table { t, v } => {
                let last = v.len() - 1;
                if v[last] >= s {
                    return f64::INFINITY;
                }
                // the last index with v ≥ s; below the table ρ is v[0]
                match v.iter().rposition(|x| *x >= s) {
                    None => f64::NEG_INFINITY,
                    Some(i) => t[i] + (t[i + 1] - t[i]) * (v[i] - s) / (v[i] - v[i + 1]),
                }
            }
            Self::Regularized { .. } => self.inverse_bisect(s),
        }
    }

    fn inverse_bisect(&self, s: f64) -> f64 {
        let ge = |t: f64| self.eval(t) >= s;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        if ge(0.0) {
            hi = 1.0;
            while ge(hi) {
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return f64::INFINITY;
                }
            }
        } else {
            lo = -1.0;
            while !ge(lo) {
                hi = lo;
                lo *= 2.0;
                if lo < -1e300 {
                    return f64::NEG_INFINITY;
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if ge(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Largest increase `ρ(t_{i+1}) − ρ(t_i)` over 1000 points of `[lo, hi]`;
    /// zero for a valid ρ.
    pub fn monotonicity_defect(&self, lo: f64, hi: f64) -> f64 {
        let pts: Vec<f64> = (0..1000).map(|i| lo + (hi - lo) * i as f64 / 999.0).collect();
        pts.windows(2)
            .map(|w| {
                let (a, b) = (self.eval(w[0]), self.eval(w[1]));
                if a.is_infinite() {
                    0.0
                } else {
                    (b - a).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverses_round_trip() {
        let kinds = [
            RhoFunction::exponential(2.0).unwrap(),
            RhoFunction::power(1.5, 1.0).unwrap(),
            RhoFunction::table(vec![0.0, 1.0, 3.0], vec![2.0, 1.0, 0.0]).unwrap(),
            RhoFunction::exponential(1.0).unwrap().regularized(REGULARIZATION_EPS).unwrap(),
        ];
        for rho in &kinds {
            assert_eq!(rho.monotonicity_defect(-0.5, 10.0), 0.0, "{rho:?}");
            for t in [0.1, 0.5, 1.2, 2.5] {
                let back = rho.inverse(rho.eval(t));
                assert!(back >= t - 1e-9, "{rho:?} at {t}: {back}");
                assert!((back - t).abs() < 1e-8, "{rho:?} at {t}: {back}");
            }
        }
    }

    #[test]
    fn indicator_and_degenerate_cases() {
        let rho = RhoFunction::indicator(3.0).unwrap();
        assert_eq!(rho.eval(-1.0), f64::INFINITY);
        assert_eq!((rho.eval(0.0), rho.eval(3.0), rho.eval(3.0001)), (1.0, 1.0, 0.0));
        assert_eq!((rho.inverse(0.5), rho.inverse(1.0), rho.inverse(2.0)), (3.0, 3.0, 0.0));
        assert_eq!(rho.inverse(0.0), f64::INFINITY);
        let t = RhoFunction::table(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        assert_eq!(t.inverse(0.25), f64::INFINITY);
        assert_eq!(t.inverse(2.0), f64::NEG_INFINITY);
    }

    #[test]
    fn non_monotone_tables_are_rejected() {
        assert!(RhoFunction::table(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.6]).is_err());
        assert!(RhoFunction::table(vec![0.0, 0.0], vec![1.0, 0.5]).is_err());
        assert!(RhoFunction::table(vec![0.0, 1.0], vec![1.0, -0.5]).is_err());
    }
}
