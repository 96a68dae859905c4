use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Result};
use jsantalo::bodies::{make_lp_ball, Body, SymmetricPolytope};
use jsantalo::linalg::Point;
use jsantalo::measure::{lp_ball_volume, volume, McConfig, VolumeResult};
use jsantalo::symfun::{big_s, PointTuple, PolarityParams};
use rayon::prelude::*;
use serde_json::json;

use super::within;
use crate::config::Config;
use crate::corpus::{random_symmetric_polytope, rng_for, unit_gaussian};
use crate::report::{CaseRecord, ExperimentReport, Verdict};

/// `sup{t > 0 : t u ∈ K}` for a unit `u`.
pub fn radial(body: &Body, u: &[f64]) -> Result<f64> {
    Ok(match body {
        Body::Oracle(o) => o.radial(u),
        Body::Polytope(p) => {
            let h = p.halfspaces()?;
            let g = h.constraints().iter().map(|(a, b)| a.iter().zip(u).map(|(x, y)| x * y).sum::<f64>() / b).fold(0.0, f64::max);
            1.0 / g
        }
    })
}

#[derive(Debug, Clone)]
pub struct RadialCheck {
    /// Largest `Π r_i(u_i) · (Σ_l Π_i |u_i(l)|^{2/k})^{k/2}` over the sample.
    pub radial_max: f64,
    /// Largest `S_{k,2/k}` of the boundary points `r_i(u_i) u_i`.
    pub polarity_max: f64,
    /// Sample tuples on which the two forms gave different verdicts.
    pub disagreements: usize,
    pub tuples: usize,
    pub witness: Vec<Point>,
}

impl RadialCheck {
    pub fn pass(&self, tol: f64) -> bool {
        self.radial_max <= 1.0 + tol
    }
}

/// Evaluates the radial condition on every tuple of the sampled directions,
/// once through radial functions and once as an `S_{k,2/k}`-polarity
/// condition on boundary points.
pub fn radial_condition(bodies: &[Body], dirs: &[Point], tol: f64) -> Result<RadialCheck> {
    let k = bodies.len();
    let p = 2.0 / k as f64;
    let params = PolarityParams::absolute(k, k, p)?.with_threshold(1.0)?;
    let r: Vec<Vec<f64>> = bodies.iter().map(|b| dirs.iter().map(|u| radial(b, u)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let m = dirs.len();
    let total = m.pow(k as u32);
    let rows: Vec<(f64, f64, bool, usize)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut sel = vec![0; k];
            for s in sel.iter_mut().rev() {
                *s = idx % m;
                idx /= m;
            }
            let prod_r: f64 = (0..k).map(|i| r[i][sel[i]]).product();
            let sum: f64 = (0..dirs[0].len()).map(|l| (0..k).map(|i| dirs[sel[i]][l].abs().powf(p)).product::<f64>()).sum();
            let radial_val = prod_r * sum.powf(k as f64 / 2.0);
            let pts: Vec<Point> = (0..k).map(|i| dirs[sel[i]].iter().map(|x| x * r[i][sel[i]]).collect()).collect();
            let s = big_s(&PointTuple::new(pts).expect("consistent tuple"), &params).expect("valid parameters");
            let agree = (radial_val <= 1.0 + tol) == (s <= 1.0 + tol);
            (radial_val, s, agree, sel.iter().fold(0, |a, &x| a * m + x))
        })
        .collect();
    let (mut radial_max, mut polarity_max, mut at) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
    for &(rv, s, _, i) in &rows {
        if rv > radial_max {
            radial_max = rv;
            at = i;
        }
        polarity_max = polarity_max.max(s);
    }
    let disagreements = rows.iter().filter(|r| !r.2).count();
    let mut sel = vec![0; k];
    for s in sel.iter_mut().rev() {
        *s = at % m;
        at /= m;
    }
    let witness = (0..k).map(|i| dirs[sel[i]].clone()).collect();
    Ok(RadialCheck { radial_max, polarity_max, disagreements, tuples: total, witness })
}

/// Seeded unit directions plus the coordinate axes and their diagonals.
pub fn sample_directions(n: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = rng_for(seed, 0xD1);
    let mut dirs: Vec<Point> = (0..n).map(|l| (0..n).map(|i| if i == l { 1.0 } else { 0.0 }).collect()).collect();
    dirs.push(vec![1.0 / (n as f64).sqrt(); n]);
    while dirs.len() < count {
        dirs.push(unit_gaussian(&mut rng, n));
    }
    dirs
}

fn volume_record(mut rec: CaseRecord, bodies: &[Body], check: &RadialCheck, cfg: &Config, n: usize, asserted: bool) -> Result<CaseRecord> {
    let mc = McConfig::new(cfg.samples, cfg.seed)?;
    let vols: Vec<VolumeResult> = bodies.iter().enumerate().map(|(i, b)| volume(b, &mc.reseeded(i as u64 + 1))).collect::<jsantalo::Result<_>>()?;
    let prod: f64 = vols.iter().map(|v| v.value).product();
    let se = prod * vols.iter().map(|v| v.rel_stderr().powi(2)).sum::<f64>().sqrt();
    let bound = lp_ball_volume(n, 2.0).powi(bodies.len() as i32);
    let holds = within(prod, bound, se, 3.0, cfg.tol);
    rec = rec
        .value("radial_max", check.radial_max)
        .value("polarity_max", check.polarity_max)
        .value("disagreements", check.disagreements as f64)
        .value("tuples", check.tuples as f64)
        .value("product", prod)
        .value("product_stderr", se)
        .value("bound", bound);
    if check.pass(cfg.tol) && asserted && (!holds || check.disagreements > 0) {
        rec.verdict = Verdict::Fail;
        rec = rec.diagnostic(if holds { "radial and polarity forms disagree" } else { "volume bound violated" });
    }
    Ok(rec.witness(&check.witness))
}

pub fn cmd_radial_condition_check(cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let s = &cfg.radial;
    if s.n == 0 || s.k < 2 {
        bail!("need n ≥ 1 and k ≥ 2");
    }
    let dirs = sample_directions(s.n, s.directions, cfg.seed);
    let mut cases = vec![];

    // the Euclidean ball tuple: equality at aligned unit vectors
    let ball: Body = make_lp_ball(s.n, 2.0, 1.0)?.into();
    let balls = vec![ball; s.k];
    let c = radial_condition(&balls, &dirs, cfg.tol)?;
    let rec = CaseRecord::check("ball-tuple", c.pass(cfg.tol) && (c.radial_max - 1.0).abs() <= 1e-9, true);
    cases.push(volume_record(rec, &balls, &c, cfg, s.n, true)?);

    // scaling the equality case breaks the condition
    let big: Body = make_lp_ball(s.n, 2.0, 1.05)?.into();
    let bigs = vec![big; s.k];
    let c = radial_condition(&bigs, &dirs, cfg.tol)?;
    let expected = 1.05f64.powi(s.k as i32);
    let rec = CaseRecord::check("scaled-ball-tuple", !c.pass(cfg.tol) && (c.radial_max - expected).abs() <= 1e-9 * expected, true);
    cases.push(volume_record(rec, &bigs, &c, cfg, s.n, false)?);

    // random polytopes rescaled so the sampled condition is tight
    let mixed: Vec<CaseRecord> = (0..s.tuples)
        .into_par_iter()
        .map(|i| -> Result<CaseRecord> {
            let mut rng = rng_for(cfg.seed, 1000 + i as u64);
            let ps: Vec<SymmetricPolytope> = (0..s.k).map(|_| random_symmetric_polytope(&mut rng, s.n, cfg.corpus.generators)).collect::<Result<_>>()?;
            let raw: Vec<Body> = ps.iter().cloned().map(Body::from).collect();
            let c0 = radial_condition(&raw, &dirs, cfg.tol)?;
            // all k slots scaled by λ multiply the radial value by λ^k
            let lambda = c0.radial_max.powf(-1.0 / s.k as f64);
            let scaled: Vec<Body> = ps.iter().map(|p| p.scaled(lambda).map(Body::from)).collect::<jsantalo::Result<_>>()?;
            let c = radial_condition(&scaled, &dirs, cfg.tol)?;
            let rec = CaseRecord::check(format!("mixed-{i}"), c.pass(cfg.tol) && c.disagreements == 0, true).value("scale", lambda);
            volume_record(rec, &scaled, &c, cfg, s.n, true)
        })
        .map(|r| r.unwrap_or_else(|e| CaseRecord::skipped("mixed", e.to_string())))
        .collect();
    cases.extend(mixed);
    let mut agg = BTreeMap::new();
    agg.insert("directions".into(), dirs.len() as f64);
    let config = json!({ "seed": cfg.seed, "samples": cfg.samples, "tol": cfg.tol, "corpus": cfg.corpus, "radial": s });
    Ok(ExperimentReport::build("radial-check", config, cases, agg, started))
}
