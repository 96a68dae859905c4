//! Elementary symmetric polynomials, their coordinate-summed forms `S_j` and
//! `E_j = S_j / C(k,j)`, and polarity predicates on finite point sets.
//!
//! For points `x_1, …, x_k ∈ ℝ^n` the signed form is
//! `S_j(x_1,…,x_k) = Σ_l s_j(x_1(l), …, x_k(l))` and the absolute form of
//! exponent `p` replaces every coordinate by `|x_i(l)|^p` first. The two are
//! never mixed implicitly: the choice lives in [`SymForm`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, GeomError, Result};
use crate::linalg::{binomial, Point};

/// Which coordinate transform is applied before the elementary symmetric sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SymForm {
    /// `s_j(x_1(l), …, x_k(l))`.
    Signed,
    /// `s_j(|x_1(l)|^p, …, |x_k(l)|^p)`.
    Absolute { p: f64 },
}

/// Degree, form and threshold of a polarity condition for `k`-tuples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarityParams {
    pub k: usize,
    pub j: usize,
    pub form: SymForm,
    /// The condition is `S_j ≤ threshold`; defaults to `C(k,j)`, i.e. `E_j ≤ 1`.
    pub threshold: f64,
}

impl PolarityParams {
    /// Signed form with the default threshold `C(k,j)`.
    pub fn new(k: usize, j: usize) -> Result<Self> {
        if k < 2 {
            return domain(format!("k = {k} must be at least 2"));
        }
        if j < 1 || j > k {
            return domain(format!("degree j = {j} outside [1, {k}]"));
        }
        Ok(Self { k, j, form: SymForm::Signed, threshold: binomial(k, j) })
    }

    /// Absolute form `S_{j,p}` with the default threshold.
    pub fn absolute(k: usize, j: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return domain(format!("exponent p = {p} must be positive"));
        }
        Ok(Self { form: SymForm::Absolute { p }, ..Self::new(k, j)? })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return domain("threshold must be positive");
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn binom(&self) -> f64 {
        binomial(self.k, self.j)
    }
}

/// `k ≥ 2` points sharing a dimension `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTuple {
    points: Vec<Point>,
    n: usize,
}

impl PointTuple {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return domain("a point tuple needs at least two points");
        }
        let n = points[0].len();
        if n == 0 {
            return domain("points must have dimension at least 1");
        }
        if let Some(bad) = points.iter().find(|p| p.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: bad.len() });
        }
        Ok(Self { points, n })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Coefficients `e_0, …, e_max` of `Π(1 + r_i t)` truncated at degree `max`.
///
/// `e_d` is the elementary symmetric polynomial of degree `d` in `r`; degrees
/// above `r.len()` are zero.
pub fn elem_sym_coeffs(r: &[f64], max: usize) -> Vec<f64> {
    let mut e = vec![0.0; max + 1];
    e[0] = 1.0;
    for (i, &ri) in r.iter().enumerate() {
        let top = (i + 1).min(max);
        for d in (1..=top).rev() {
            e[d] += ri * e[d - 1];
        }
    }
    e
}

/// Elementary symmetric polynomial `s_j(r_1, …, r_k)`, `1 ≤ j ≤ k`.
pub fn elem_sym(r: &[f64], j: usize) -> Result<f64> {
    if j < 1 || j > r.len() {
        return domain(format!("degree j = {j} outside [1, {}]", r.len()));
    }
    Ok(elem_sym_coeffs(r, j)[j])
}

/// `S_j` (or `S_{j,p}`) on raw slices without validation.
pub(crate) fn big_s_raw(points: &[&[f64]], j: usize, form: SymForm) -> f64 {
    let n = points[0].len();
    let mut r = vec![0.0; points.len()];
    let mut total = 0.0;
    for l in 0..n {
        for (ri, x) in r.iter_mut().zip(points) {
            *ri = match form {
                SymForm::Signed => x[l],
                SymForm::Absolute { p } => x[l].abs().powf(p),
            };
        }
        total += elem_sym_coeffs(&r, j)[j];
    }
    total
}

/// Affine form of `S_j` in one free slot: with the other `k − 1` points
/// fixed, `S_j(others, x) = ⟨a, x⟩ + c` where `a_l = s_{j−1}` and `c` sums
/// `s_j` of the fixed coordinates (zero when `j > k − 1`).
pub fn slot_affine(others: &[&[f64]], j: usize) -> (Point, f64) {
    let n = others[0].len();
    let mut r = vec![0.0; others.len()];
    let mut a = vec![0.0; n];
    let mut c = 0.0;
    for l in 0..n {
        for (ri, x) in r.iter_mut().zip(others) {
            *ri = x[l];
        }
        let e = elem_sym_coeffs(&r, j);
        a[l] = e[j - 1];
        c += e[j];
    }
    (a, c)
}

fn check_tuple(points: &PointTuple, params: &PolarityParams) -> Result<()> {
    if points.k() != params.k {
        return domain(format!("tuple has {} points, parameters expect k = {}", points.k(), params.k));
    }
    Ok(())
}

/// `S_j(x_1, …, x_k)` in the form selected by `params.form`.
pub fn big_s(points: &PointTuple, params: &PolarityParams) -> Result<f64> {
    check_tuple(points, params)?;
    let refs: Vec<&[f64]> = points.points().iter().map(|p| p.as_slice()).collect();
    Ok(big_s_raw(&refs, params.j, params.form))
}

/// `E_j = S_j / C(k,j)`.
pub fn big_e(points: &PointTuple, params: &PolarityParams) -> Result<f64> {
    Ok(big_s(points, params)? / params.binom())
}

/// `E_{j1}(r)^{1/j1} − E_{j2}(r)^{1/j2}` for nonnegative `r`; Maclaurin's
/// inequality says this is nonnegative whenever `j1 ≤ j2`.
pub fn maclaurin_gap(r: &[f64], j1: usize, j2: usize) -> Result<f64> {
    let k = r.len();
    if let Some(x) = r.iter().find(|x| !(**x >= 0.0)) {
        return domain(format!("Maclaurin gap needs nonnegative entries, got {x}"));
    }
    if j1 < 1 || j1 > j2 || j2 > k {
        return domain(format!("need 1 ≤ j1 ≤ j2 ≤ k, got j1 = {j1}, j2 = {j2}, k = {k}"));
    }
    let e = elem_sym_coeffs(r, j2);
    let mean = |j: usize| (e[j] / binomial(k, j)).max(0.0).powf(1.0 / j as f64);
    Ok(mean(j1) - mean(j2))
}

/// Outcome of a polarity check over a Cartesian product of finite sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPolarityVerdict {
    pub pass: bool,
    /// Largest `S_j / threshold` over the product (equals `E_j` at the default threshold).
    pub max_value: f64,
    /// Index of the maximizing element in each set.
    pub argmax: Vec<usize>,
    pub witness: Vec<Point>,
}

/// Checks `S_j / threshold ≤ 1 + tol` over every tuple of the product
/// `A_1 × … × A_k`. By multilinearity of `S_j` a pass certifies the
/// condition for the convex hulls of the sets.
///
/// Ties in the maximum are broken by the lexicographically smallest index
/// tuple, so the result is independent of the parallel split.
pub fn check_polarity_on_points(
    vertex_sets: &[Vec<Point>],
    params: &PolarityParams,
    tol: f64,
) -> Result<PointPolarityVerdict> {
    if vertex_sets.len() != params.k {
        return domain(format!("{} sets given, parameters expect k = {}", vertex_sets.len(), params.k));
    }
    if vertex_sets.iter().any(|s| s.is_empty()) {
        return domain("polarity check on an empty point set");
    }
    let n = vertex_sets[0][0].len();
    for s in vertex_sets {
        if let Some(bad) = s.iter().find(|p| p.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: bad.len() });
        }
    }
    let k = params.k;
    let sizes: Vec<usize> = vertex_sets.iter().map(|s| s.len()).collect();
    let best = (0..sizes[0])
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; k];
            idx[0] = first;
            let mut best_val = f64::NEG_INFINITY;
            let mut best_idx = idx.clone();
            let mut refs: Vec<&[f64]> = vec![&vertex_sets[0][first]; k];
            loop {
                for i in 1..k {
                    refs[i] = &vertex_sets[i][idx[i]];
                }
                let v = big_s_raw(&refs, params.j, params.form);
                if v > best_val {
                    best_val = v;
                    best_idx.clone_from(&idx);
                }
                // mixed-radix increment over slots 1..k, last slot fastest
                let mut slot = k - 1;
                loop {
                    if slot == 0 {
                        return (best_val, best_idx);
                    }
                    idx[slot] += 1;
                    if idx[slot] < sizes[slot] {
                        break;
                    }
                    idx[slot] = 0;
                    slot -= 1;
                }
            }
        })
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .expect("nonempty product");
    let max_value = best.0 / params.threshold;
    let witness = best.1.iter().enumerate().map(|(i, &ix)| vertex_sets[i][ix].clone()).collect();
    Ok(PointPolarityVerdict { pass: max_value <= 1.0 + tol, max_value, argmax: best.1, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Enumerates every strictly increasing index tuple.
    fn brute_elem_sym(r: &[f64], j: usize) -> f64 {
        fn go(r: &[f64], start: usize, left: usize, acc: f64) -> f64 {
            if left == 0 {
                return acc;
            }
            (start..r.len()).map(|i| go(r, i + 1, left - 1, acc * r[i])).sum()
        }
        go(r, 0, j, 1.0)
    }

    #[test]
    fn elem_sym_examples() {
        assert_eq!(elem_sym(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        for k in 2..10 {
            for j in 1..=k {
                assert_eq!(elem_sym(&vec![1.0; k], j).unwrap(), binomial(k, j));
            }
        }
        let r = [0.3, -0.7, 0.2, 0.9];
        let expected = brute_elem_sym(&r, 3);
        assert!((elem_sym(&r, 3).unwrap() - expected).abs() < 1e-15);
        assert!(elem_sym(&r, 0).is_err());
        assert!(elem_sym(&r, 5).is_err());
    }

    #[test]
    fn elem_sym_matches_enumeration_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 2..14 {
            let r: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
            for j in 1..=k {
                let a = elem_sym(&r, j).unwrap();
                let b = brute_elem_sym(&r, j);
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "k={k} j={j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn big_s_examples() {
        let p2 = PolarityParams::new(2, 2).unwrap();
        let t = PointTuple::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(big_s(&t, &p2).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let ip = crate::linalg::dot(&a, &b);
            let t = PointTuple::new(vec![a, b]).unwrap();
            assert!((big_s(&t, &p2).unwrap() - ip).abs() < 1e-12);
        }

        let p3 = PolarityParams::new(3, 3).unwrap();
        let t = PointTuple::new(vec![vec![2.0], vec![-3.0], vec![0.5]]).unwrap();
        assert_eq!(big_s(&t, &p3).unwrap(), -3.0);
    }

    #[test]
    fn big_s_dimension_mismatch() {
        assert!(matches!(
            PointTuple::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(GeomError::DimensionMismatch { .. })
        ));
        let t = PointTuple::new(vec![vec![1.0], vec![1.0]]).unwrap();
        assert!(big_s(&t, &PolarityParams::new(3, 2).unwrap()).is_err());
    }

    #[test]
    fn big_e_examples() {
        for k in 2..6 {
            for j in 1..=k {
                let params = PolarityParams::new(k, j).unwrap();
                let ones = PointTuple::new(vec![vec![1.0, 0.0, 0.0]; k]).unwrap();
                assert!((big_e(&ones, &params).unwrap() - 1.0).abs() < 1e-15);
                let zeros = PointTuple::new(vec![vec![0.0; 3]; k]).unwrap();
                assert_eq!(big_e(&zeros, &params).unwrap(), 0.0);
            }
        }
        // ratio oracle on points of the unit sphere
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PolarityParams::new(3, 2).unwrap();
        for _ in 0..20 {
            let pts: Vec<Point> = (0..3)
                .map(|_| {
                    let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let nv = crate::linalg::norm2(&v);
                    v.iter().map(|x| x / nv).collect()
                })
                .collect();
            let t = PointTuple::new(pts).unwrap();
            let s = big_s(&t, &params).unwrap();
            assert!((big_e(&t, &params).unwrap() - s / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn maclaurin_examples() {
        let g = maclaurin_gap(&[1.0, 2.0, 3.0], 1, 2).unwrap();
        assert!((g - (2.0 - (11.0f64 / 3.0).sqrt())).abs() < 1e-15);
        assert!((g - 0.0851).abs() < 1e-4);
        for k in 2..7 {
            for j1 in 1..k {
                for j2 in j1 + 1..=k {
                    assert!(maclaurin_gap(&vec![0.7; k], j1, j2).unwrap().abs() < 1e-14);
                }
            }
            let mut r = vec![1.0; k];
            r[0] = 0.0;
            let g = maclaurin_gap(&r, 1, k).unwrap();
            assert!((g - (k as f64 - 1.0) / k as f64).abs() < 1e-15);
        }
        assert!(maclaurin_gap(&[1.0, -0.1], 1, 2).is_err());
        assert!(maclaurin_gap(&[1.0, 1.0], 2, 1).is_err());
    }

    #[test]
    fn polarity_on_cube_and_cross() {
        let cube = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let cross = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let params = PolarityParams::new(2, 2).unwrap();
        let v = check_polarity_on_points(&[cube.clone(), cross.clone()], &params, 1e-9).unwrap();
        assert!(v.pass);
        assert_eq!(v.max_value, 1.0);
        // lexicographically first maximizer: cube[0]=(1,1) with cross[0]=(1,0)
        assert_eq!(v.argmax, vec![0, 0]);

        let big: Vec<Point> = cube.iter().map(|p| p.iter().map(|x| 1.1 * x).collect()).collect();
        let v = check_polarity_on_points(&[big, cross], &params, 1e-9).unwrap();
        assert!(!v.pass);
        assert!((v.max_value - 1.1).abs() < 1e-15);
    }

    #[test]
    fn polarity_on_unit_intervals_k_equals_j() {
        for k in 2..6 {
            let params = PolarityParams::new(k, k).unwrap();
            let sets = vec![vec![vec![1.0], vec![-1.0]]; k];
            let v = check_polarity_on_points(&sets, &params, 1e-9).unwrap();
            assert!(v.pass);
            assert_eq!(v.max_value, 1.0);
        }
    }

    #[test]
    fn polarity_rejects_empty() {
        let params = PolarityParams::new(2, 2).unwrap();
        assert!(check_polarity_on_points(&[vec![vec![1.0]], vec![]], &params, 1e-9).is_err());
    }
}
