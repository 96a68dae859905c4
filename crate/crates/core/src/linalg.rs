//! Small dense helpers over `&[f64]` points.

use nalgebra::DMatrix;

pub type Point = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

#[inline]
pub fn neg(a: &[f64]) -> Point {
    a.iter().map(|x| -x).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖x‖_p = (Σ|x_m|^p)^{1/p}`, also for `0 < p < 1` where it is only a quasi-norm.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return max_abs(x);
    }
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Determinant of the square matrix whose rows are `rows`.
pub fn det_rows(rows: &[&[f64]]) -> f64 {
    let d = rows.len();
    match d {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let (a, b, c) = (rows[0], rows[1], rows[2]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0])
        }
        _ => DMatrix::from_fn(d, d, |i, j| rows[i][j]).determinant(),
    }
}

/// A vector orthogonal to the `d-1` row vectors in `rows` (generalized cross
/// product), not normalized. `rows` must have `d-1` entries of length `d`.
pub fn cross(rows: &[Point], d: usize) -> Point {
    debug_assert_eq!(rows.len() + 1, d);
    if d == 1 {
        return vec![1.0];
    }
    if d == 2 {
        return vec![-rows[0][1], rows[0][0]];
    }
    if d == 3 {
        let (a, b) = (&rows[0], &rows[1]);
        return vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    }
    let mut out = vec![0.0; d];
    let mut minor: Vec<Point> = vec![vec![0.0; d - 1]; d - 1];
    for (col, o) in out.iter_mut().enumerate() {
        for (r, row) in rows.iter().enumerate() {
            let mut c2 = 0;
            for (c, v) in row.iter().enumerate() {
                if c != col {
                    minor[r][c2] = *v;
                    c2 += 1;
                }
            }
        }
        let refs: Vec<&[f64]> = minor.iter().map(|r| r.as_slice()).collect();
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * det_rows(&refs);
    }
    out
}

/// Row-major `n×n` matrix applied to a point.
pub fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Point {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_orthogonal_in_4d() {
        let rows = vec![vec![1.0, 2.0, 0.5, -1.0], vec![0.0, 1.0, 3.0, 2.0], vec![-2.0, 0.3, 1.0, 1.0]];
        let c = cross(&rows, 4);
        for r in &rows {
            assert!(dot(r, &c).abs() < 1e-12);
        }
        assert!(norm2(&c) > 1e-3);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 3), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial(32, 16), 601080390.0);
    }
}
