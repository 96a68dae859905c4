use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Result};
use jsantalo::bodies::SymmetricPolytope;
use jsantalo::linalg::Point;
use jsantalo::measure::{santalo_ratio_from_volumes, volume_mc_body, McConfig};
use jsantalo::polar::{verify_tuple_polarity, SamplerCfg, Status};
use jsantalo::symfun::PolarityParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{as_bodies, check_degrees, close_tuple, exact_ratio};
use crate::config::{Config, SearchCfg, SearchStart};
use crate::corpus::{random_symmetric_polytope, rng_for};
use crate::report::{CaseRecord, ExperimentReport, Verdict};

/// Flagging threshold in standard errors.
pub const CANDIDATE_SIGMAS: f64 = 5.0;

/// A polarity-checked tuple: open slots plus the polar closing the last one.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub tuple: Vec<SymmetricPolytope>,
    pub ratio: f64,
    pub stderr: f64,
}

/// Closes `open` with the polar and scores it, or `None` when the polar is
/// unbounded or the closed tuple fails the polarity check.
pub fn evaluate(open: &[SymmetricPolytope], params: &PolarityParams) -> Option<Evaluated> {
    let closed = close_tuple(open, params).ok()?;
    let mut tuple = open.to_vec();
    tuple.push(closed);
    let v = verify_tuple_polarity(&as_bodies(&tuple), params, &SamplerCfg::default(), 1e-9).ok()?;
    if v.status != Status::Pass {
        return None;
    }
    let (r, _) = exact_ratio(&tuple, params.j).ok()?;
    Some(Evaluated { tuple, ratio: r.value, stderr: r.stderr })
}

/// Moves one generator (and its negative) of one open slot by a Gaussian step.
fn perturb(open: &[SymmetricPolytope], rng: &mut ChaCha8Rng, step: f64) -> Option<Vec<SymmetricPolytope>> {
    let i = rng.random_range(0..open.len());
    let mut gens: Vec<Point> = open[i].half_vertices().cloned().collect();
    let v = rng.random_range(0..gens.len());
    for x in gens[v].iter_mut() {
        *x += step * rng.sample::<f64, _>(StandardNormal);
    }
    let p = SymmetricPolytope::hull_reduce(&gens).ok()?;
    if p.is_degenerate() {
        return None;
    }
    let mut out = open.to_vec();
    out[i] = p;
    Some(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchState {
    #[serde(skip)]
    pub current: Evaluated,
    #[serde(skip)]
    pub best: Evaluated,
    pub temperature: f64,
    pub step: f64,
    pub accepted: usize,
    /// Proposals dropped for an unbounded polar or a polarity failure.
    pub rejected_invalid: usize,
    pub visited: usize,
    pub start_ratio: f64,
}

impl SearchState {
    pub fn new(start: Evaluated, s: &SearchCfg) -> Self {
        Self {
            start_ratio: start.ratio,
            current: start.clone(),
            best: start,
            temperature: s.t0,
            step: s.step,
            accepted: 0,
            rejected_invalid: 0,
            visited: 1,
        }
    }

    /// One Metropolis step on `ln ratio`, then geometric cooling.
    pub fn advance(&mut self, params: &PolarityParams, rng: &mut ChaCha8Rng, s: &SearchCfg) {
        let open = &self.current.tuple[..self.current.tuple.len() - 1];
        let proposal = perturb(open, rng, self.step).and_then(|o| evaluate(&o, params));
        match proposal {
            None => self.rejected_invalid += 1,
            Some(e) => {
                self.visited += 1;
                let delta = e.ratio.ln() - self.current.ratio.ln();
                let u: f64 = rng.random();
                if delta >= 0.0 || u < (delta / self.temperature.max(1e-300)).exp() {
                    if e.ratio > self.best.ratio {
                        self.best = e.clone();
                    }
                    self.current = e;
                    self.accepted += 1;
                }
            }
        }
        self.temperature *= s.cooling;
        self.step = (self.step * s.cooling.sqrt()).max(1e-4);
    }
}

fn start_tuple(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Vec<SymmetricPolytope>> {
    let s = &cfg.search;
    (0..s.k - 1)
        .map(|_| match s.start {
            SearchStart::Ball => Ok(SymmetricPolytope::lp_ball(s.n, s.j as f64, s.ball_vertices)?),
            SearchStart::Random => random_symmetric_polytope(rng, s.n, cfg.corpus.generators),
        })
        .collect()
}

/// Monte Carlo ratio with independent seeds per slot, the second route used
/// before anything is flagged.
pub fn mc_ratio(tuple: &[SymmetricPolytope], j: usize, cfg: &McConfig) -> (f64, f64) {
    let vols: Vec<_> = as_bodies(tuple).iter().enumerate().map(|(i, b)| volume_mc_body(b, &cfg.reseeded(i as u64 + 1))).collect();
    let r = santalo_ratio_from_volumes(&vols, tuple[0].dim(), j);
    (r.value, r.stderr)
}

fn run_restart(cfg: &Config, params: &PolarityParams, index: usize) -> CaseRecord {
    let s = &cfg.search;
    let id = format!("restart-{index}");
    let mut rng = rng_for(cfg.seed, index as u64);
    let start = match start_tuple(cfg, &mut rng).map(|o| evaluate(&o, params)) {
        Ok(Some(e)) => e,
        Ok(None) => return CaseRecord::skipped(id, "start tuple has an unbounded polar or fails polarity"),
        Err(e) => return CaseRecord::skipped(id, format!("corpus: {e}")),
    };
    let mut state = SearchState::new(start, s);
    for _ in 0..s.steps {
        state.advance(params, &mut rng, s);
    }
    let best = &state.best;
    let flagged = best.ratio > 1.0 + CANDIDATE_SIGMAS * best.stderr + cfg.tol;
    let mut rec = CaseRecord::new(&id, Verdict::Reported, false)
        .value("start_ratio", state.start_ratio)
        .value("best_ratio", best.ratio)
        .value("best_stderr", best.stderr)
        .value("accepted", state.accepted as f64)
        .value("visited", state.visited as f64)
        .value("rejected_invalid", state.rejected_invalid as f64)
        .value("final_temperature", state.temperature);
    if flagged {
        let mc = McConfig::new(10 * cfg.samples, cfg.seed ^ index as u64).expect("positive sample count");
        let (r, se) = mc_ratio(&best.tuple, s.j, &mc);
        rec = rec.value("recheck_ratio", r).value("recheck_stderr", se);
        if r > 1.0 + CANDIDATE_SIGMAS * se {
            let verts: Vec<&[Point]> = best.tuple.iter().map(|p| p.vertices()).collect();
            rec.verdict = Verdict::Candidate;
            rec = rec.witness(verts).diagnostic("ratio above 1 confirmed by exact and Monte Carlo volumes");
        } else {
            rec = rec.diagnostic("exceedance not confirmed by the Monte Carlo recheck");
        }
    }
    rec
}

pub fn cmd_search_counterexample(cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let s = &cfg.search;
    check_degrees(s.n, s.j, s.k)?;
    if s.j >= s.k {
        bail!("search targets open cases j < k; j = k = {} is a proved case", s.k);
    }
    let params = PolarityParams::new(s.k, s.j)?;
    let cases: Vec<CaseRecord> = (0..s.restarts).into_par_iter().map(|i| run_restart(cfg, &params, i)).collect();
    let mut agg = BTreeMap::new();
    agg.insert(
        "best_ratio".into(),
        cases.iter().filter_map(|c| c.values.get("best_ratio").copied()).fold(f64::NEG_INFINITY, f64::max),
    );
    let config = json!({ "seed": cfg.seed, "samples": cfg.samples, "tol": cfg.tol, "corpus": cfg.corpus, "search": s });
    Ok(ExperimentReport::build("search", config, cases, agg, started))
}
