use std::fmt::Write as _;
use std::path::Path;

use super::{HalfspacePolytope, SymmetricPolytope};
use crate::error::{GeomError, Result};
use crate::linalg::Point;

fn parse_rows(text: &str, width: impl Fn(usize) -> usize) -> Result<(usize, Vec<Point>)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| GeomError::Parse("empty file".into()))?;
    let hv: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| GeomError::Parse(format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    let [n, count] = hv[..] else {
        return Err(GeomError::Parse(format!("header must be `n count`, got {header:?}")));
    };
    let w = width(n);
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let row: Point = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| GeomError::Parse(format!("row {}: bad number {t:?}", i + 1))))
            .collect::<Result<_>>()?;
        if row.len() != w {
            return Err(GeomError::Parse(format!("row {}: expected {w} values, got {}", i + 1, row.len())));
        }
        rows.push(row);
    }
    if rows.len() != count {
        return Err(GeomError::Parse(format!("header announces {count} rows, found {}", rows.len())));
    }
    Ok((n, rows))
}

/// Parses `n k` followed by `k` vertex rows; missing negations are added.
pub fn parse_polytope(text: &str) -> Result<SymmetricPolytope> {
    let (_, rows) = parse_rows(text, |n| n)?;
    if rows.is_empty() {
        return Err(GeomError::Parse("polytope has no vertices".into()));
    }
    SymmetricPolytope::hull_reduce(&rows)
}

/// Writes one vertex of each antipodal pair.
pub fn format_polytope(p: &SymmetricPolytope) -> String {
    let reps: Vec<&Point> = p.half_vertices().collect();
    let mut s = format!("{} {}\n", p.dim(), reps.len());
    for v in reps {
        let row: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

/// Parses `n k` followed by `k` rows `a_1 … a_n b`.
pub fn parse_halfspaces(text: &str) -> Result<HalfspacePolytope> {
    let (n, rows) = parse_rows(text, |n| n + 1)?;
    let cons = rows.into_iter().map(|mut r| {
        let b = r.pop().expect("row width n+1");
        (r, b)
    });
    HalfspacePolytope::new(n, cons.collect())
}

pub fn format_halfspaces(h: &HalfspacePolytope) -> String {
    let mut s = format!("{} {}\n", h.dim(), h.constraints().len());
    for (a, b) in h.constraints() {
        let row: Vec<String> = a.iter().chain(std::iter::once(b)).map(|x| format!("{x:e}")).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn read_polytope(path: &Path) -> Result<SymmetricPolytope> {
    parse_polytope(&std::fs::read_to_string(path)?)
}

pub fn write_polytope(path: &Path, p: &SymmetricPolytope) -> Result<()> {
    Ok(std::fs::write(path, format_polytope(p))?)
}

pub fn read_halfspaces(path: &Path) -> Result<HalfspacePolytope> {
    parse_halfspaces(&std::fs::read_to_string(path)?)
}

pub fn write_halfspaces(path: &Path, h: &HalfspacePolytope) -> Result<()> {
    Ok(std::fs::write(path, format_halfspaces(h))?)
}
