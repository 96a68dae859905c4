use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Result};
use jsantalo::bodies::{steiner_symmetrize, SymmetricPolytope};
use jsantalo::linalg::Point;
use jsantalo::symfun::PolarityParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{check_degrees, close_tuple, ids};
use crate::config::{Config, SymmetrizeCfg};
use crate::corpus::{random_symmetric_polytope, random_unconditional_polytope, rng_for};
use crate::report::{CaseRecord, ExperimentReport, Verdict};

const UNCONDITIONAL_TOL: f64 = 1e-7;

/// Points of `P ∩ {x_axis = r}`: edge crossings of the triangulated boundary
/// plus vertices on the hyperplane. Their hull is the section.
pub fn section_points(p: &SymmetricPolytope, axis: usize, r: f64) -> Result<Vec<Point>> {
    let hull = p.hull()?;
    let pts = hull.points();
    let mut out: Vec<Point> = pts.iter().filter(|v| v[axis] == r).cloned().collect();
    for (a, b) in hull.edges() {
        let (pa, pb) = (&pts[a], &pts[b]);
        let (da, db) = (pa[axis] - r, pb[axis] - r);
        if da * db < 0.0 {
            let t = da / (da - db);
            let mut x: Point = pa.iter().zip(pb).map(|(u, v)| u + t * (v - u)).collect();
            x[axis] = r;
            out.push(x);
        }
    }
    Ok(out)
}

/// Smallest constraint slack of `(K(r) + K(−r))/2` inside `K'` at height `r`,
/// over all pairwise midpoints of section points. `None` when a section is empty.
pub fn fiber_inclusion_slack(old: &SymmetricPolytope, new: &SymmetricPolytope, axis: usize, r: f64) -> Result<Option<f64>> {
    let up = section_points(old, axis, r)?;
    let down = section_points(old, axis, -r)?;
    if up.is_empty() || down.is_empty() {
        return Ok(None);
    }
    let h = new.halfspaces()?;
    let mut worst = f64::INFINITY;
    for a in &up {
        for b in &down {
            let mut x: Point = a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect();
            x[axis] = r;
            worst = worst.min(h.slack(&x));
        }
    }
    Ok(Some(worst))
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    /// Slot symmetrized, or the slot re-closed by the polar when `axis` is `None`.
    pub slot: usize,
    pub axis: Option<usize>,
    pub product_before: f64,
    pub product_after: f64,
    /// Smallest section-inclusion slack over the sampled heights.
    pub fiber_slack: Option<f64>,
    pub heights_checked: usize,
}

impl StepRecord {
    pub fn rel_change(&self) -> f64 {
        (self.product_after - self.product_before) / self.product_before
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainOutcome {
    pub steps: Vec<StepRecord>,
    pub initial_product: f64,
    pub final_product: f64,
    /// Largest unconditionality defect over the final tuple.
    pub final_defect: f64,
    #[serde(skip)]
    pub final_tuple: Vec<SymmetricPolytope>,
}

impl ChainOutcome {
    pub fn min_rel_change(&self) -> f64 {
        self.steps.iter().map(StepRecord::rel_change).fold(f64::INFINITY, f64::min)
    }

    pub fn min_fiber_slack(&self) -> f64 {
        self.steps.iter().filter_map(|s| s.fiber_slack).fold(f64::INFINITY, f64::min)
    }
}

fn product(t: &[SymmetricPolytope]) -> Result<f64> {
    t.iter().map(|p| Ok(p.hull()?.volume())).product()
}

fn polar_of_others(t: &[SymmetricPolytope], slot: usize, params: &PolarityParams) -> Result<SymmetricPolytope> {
    let others: Vec<SymmetricPolytope> = t.iter().enumerate().filter(|(i, _)| *i != slot).map(|(_, p)| p.clone()).collect();
    close_tuple(&others, params)
}

/// Runs the reduction on a tuple whose slot 1 is the polar of the rest.
///
/// Stage `s` symmetrizes slot `s` along axes `n−1, …, 0` (repeating sweeps
/// until it is unconditional) and re-closes slot `s+1` after every step. For
/// `j = k` every pair `(s, s+1)` is processed and slot `s+1` is first
/// enlarged to the polar of the others; otherwise only stage 0 runs.
pub fn reduction_chain(
    tuple: Vec<SymmetricPolytope>,
    params: &PolarityParams,
    heights: usize,
    max_sweeps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ChainOutcome> {
    let n = tuple[0].dim();
    if n < 2 {
        bail!("symmetrization needs n ≥ 2");
    }
    let k = tuple.len();
    let stages = if params.j == params.k { k - 1 } else { 1 };
    let mut t = tuple;
    let initial_product = product(&t)?;
    let mut steps = vec![];
    for s in 0..stages {
        if s > 0 {
            let before = product(&t)?;
            t[s + 1] = polar_of_others(&t, s + 1, params)?;
            steps.push(StepRecord { slot: s + 1, axis: None, product_before: before, product_after: product(&t)?, fiber_slack: None, heights_checked: 0 });
        }
        for _ in 0..max_sweeps.max(1) {
            for axis in (0..n).rev() {
                let before = product(&t)?;
                let mut next = t.clone();
                next[s] = steiner_symmetrize(&t[s], axis)?;
                next[s + 1] = polar_of_others(&next, s + 1, params)?;
                let top = t[s + 1].vertices().iter().map(|v| v[axis]).fold(0.0, f64::max);
                let mut worst: Option<f64> = None;
                let mut checked = 0;
                for _ in 0..heights {
                    let r = rng.random_range(0.0..1.0) * top;
                    if let Some(sl) = fiber_inclusion_slack(&t[s + 1], &next[s + 1], axis, r)? {
                        worst = Some(worst.map_or(sl, |w: f64| w.min(sl)));
                        checked += 1;
                    }
                }
                t = next;
                steps.push(StepRecord { slot: s, axis: Some(axis), product_before: before, product_after: product(&t)?, fiber_slack: worst, heights_checked: checked });
            }
            if t[s].unconditional_defect() < UNCONDITIONAL_TOL {
                break;
            }
        }
    }
    let final_defect = t.iter().map(|p| p.unconditional_defect()).fold(0.0, f64::max);
    Ok(ChainOutcome { steps, initial_product, final_product: product(&t)?, final_defect, final_tuple: t })
}

/// A tuple `(K_1, (K_1, K_3, …)°_j, K_3, …)` for the chain: slots past 1 are
/// unconditional unless `j = k`.
fn chain_tuple(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Vec<SymmetricPolytope>> {
    let s = &cfg.symmetrize;
    let params = PolarityParams::new(s.k, s.j)?;
    let m = cfg.corpus.generators;
    let mut open = vec![random_symmetric_polytope(rng, s.n, m)?];
    for _ in 2..s.k {
        open.push(if s.j == s.k {
            random_symmetric_polytope(rng, s.n, m)?
        } else {
            random_unconditional_polytope(rng, s.n, m, cfg.corpus.max_sweeps)?
        });
    }
    let closed = close_tuple(&open, &params)?;
    let mut t = vec![open[0].clone(), closed];
    t.extend(open.into_iter().skip(1));
    Ok(t)
}

pub fn chain_record(id: String, chain: &ChainOutcome, s: &SymmetrizeCfg) -> CaseRecord {
    let monotone = chain.min_rel_change() >= -s.product_slack;
    let inclusion = chain.min_fiber_slack() >= -s.section_slack;
    let unconditional = chain.final_defect < UNCONDITIONAL_TOL;
    let mut rec = CaseRecord::check(id, monotone && inclusion && unconditional, true)
        .value("initial_product", chain.initial_product)
        .value("final_product", chain.final_product)
        .value("min_rel_change", chain.min_rel_change())
        .value("min_fiber_slack", chain.min_fiber_slack())
        .value("final_defect", chain.final_defect)
        .value("steps", chain.steps.len() as f64)
        .value("heights_checked", chain.steps.iter().map(|s| s.heights_checked).sum::<usize>() as f64)
        .witness(&chain.steps);
    if !unconditional {
        rec = rec.diagnostic(format!("final tuple not unconditional (defect {:.3e})", chain.final_defect));
    }
    rec
}

pub fn cmd_symmetrize_experiment(cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let s = &cfg.symmetrize;
    check_degrees(s.n, s.j, s.k)?;
    if s.j != s.k && !s.j.is_multiple_of(2) {
        bail!("the reduction needs j = k or an even j (got j = {}, k = {})", s.j, s.k);
    }
    let params = PolarityParams::new(s.k, s.j)?;
    let cases: Vec<CaseRecord> = (0..s.chains)
        .into_par_iter()
        .map(|i| {
            let id = format!("chain-{i}");
            let mut rng = rng_for(cfg.seed, i as u64);
            let tuple = match chain_tuple(cfg, &mut rng) {
                Ok(t) => t,
                Err(e) => return CaseRecord::skipped(id, format!("corpus: {e}")),
            };
            let names = ids(i, &tuple);
            match reduction_chain(tuple, &params, s.heights, cfg.corpus.max_sweeps, &mut rng) {
                Ok(chain) => chain_record(id, &chain, s).inputs(names),
                Err(e) => CaseRecord::skipped(id, format!("reduction: {e}")),
            }
        })
        .collect();
    let done: Vec<&CaseRecord> = cases.iter().filter(|c| c.verdict != Verdict::Skipped).collect();
    let mut agg = BTreeMap::new();
    agg.insert("evaluated".into(), done.len() as f64);
    agg.insert("min_rel_change".into(), done.iter().filter_map(|c| c.values.get("min_rel_change").copied()).fold(f64::INFINITY, f64::min));
    agg.insert("min_fiber_slack".into(), done.iter().filter_map(|c| c.values.get("min_fiber_slack").copied()).fold(f64::INFINITY, f64::min));
    let config = json!({ "seed": cfg.seed, "corpus": cfg.corpus, "symmetrize": s });
    Ok(ExperimentReport::build("symmetrize", config, cases, agg, started))
}
