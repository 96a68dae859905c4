//! Campaigns behind the CLI subcommands. Each returns an
//! [`ExperimentReport`](crate::report::ExperimentReport) whose verdicts can be
//! recomputed from the echoed configuration.

pub mod functional;
pub mod radial;
pub mod santalo;
pub mod search;
pub mod symmetrize;
pub mod tools;

use anyhow::{bail, Result};
use jsantalo::bodies::{Body, SymmetricPolytope};
use jsantalo::measure::{santalo_ratio_from_volumes, volume_polytope, RatioResult, VolumeResult};
use jsantalo::polar::{j_polar_polytope, PolarProblem};
use jsantalo::symfun::PolarityParams;

/// `j = 1` admits symmetric slabs of unbounded volume product, so every
/// campaign refuses it.
pub fn refuse_j1(j: usize) -> Result<()> {
    if j == 1 {
        bail!("j = 1 is excluded: symmetric slabs {{|x_1 + … + x_n| ≤ 1}} satisfy E_1-polarity with unbounded volume product");
    }
    Ok(())
}

pub fn check_degrees(n: usize, j: usize, k: usize) -> Result<()> {
    refuse_j1(j)?;
    if n == 0 || k < 2 || j > k {
        bail!("need n ≥ 1 and 2 ≤ j ≤ k (got n = {n}, j = {j}, k = {k})");
    }
    Ok(())
}

/// `(others)°_j` as a V-polytope.
pub fn close_tuple(others: &[SymmetricPolytope], params: &PolarityParams) -> Result<SymmetricPolytope> {
    Ok(j_polar_polytope(&PolarProblem::new(others.to_vec(), *params)?)?)
}

/// Santaló ratio from exact polytope volumes.
pub fn exact_ratio(bodies: &[SymmetricPolytope], j: usize) -> Result<(RatioResult, Vec<VolumeResult>)> {
    let vols = bodies.iter().map(volume_polytope).collect::<jsantalo::Result<Vec<_>>>()?;
    Ok((santalo_ratio_from_volumes(&vols, bodies[0].dim(), j), vols))
}

pub fn as_bodies(ps: &[SymmetricPolytope]) -> Vec<Body> {
    ps.iter().cloned().map(Body::from).collect()
}

pub fn ids(case: usize, ps: &[SymmetricPolytope]) -> Vec<String> {
    ps.iter().enumerate().map(|(i, p)| format!("c{case}/K{}[{}v]", i + 1, p.vertices().len())).collect()
}

/// `a ≤ b` up to `σ_mult · stderr` plus a relative floor.
pub fn within(a: f64, b: f64, stderr: f64, sigma_mult: f64, tol: f64) -> bool {
    a <= b + sigma_mult * stderr + tol * b.abs().max(1.0)
}
