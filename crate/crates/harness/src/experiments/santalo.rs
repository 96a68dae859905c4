use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Result};
use jsantalo::bodies::SymmetricPolytope;
use jsantalo::measure::bound_constant;
use jsantalo::polar::{verify_tuple_polarity, SamplerCfg, Status};
use jsantalo::symfun::PolarityParams;
use rayon::prelude::*;
use serde_json::json;

use super::{as_bodies, check_degrees, close_tuple, exact_ratio, ids, within};
use crate::config::{Config, SantaloCase};
use crate::corpus::{random_symmetric_polytope, random_unconditional_polytope, rng_for};
use crate::report::{CaseRecord, ExperimentReport, Verdict};

/// Open slots of a case; the last slot is then closed by the polar.
fn open_slots(case: SantaloCase, cfg: &Config, index: usize) -> Result<Vec<SymmetricPolytope>> {
    let s = &cfg.verify_santalo;
    let mut rng = rng_for(cfg.seed, index as u64);
    let m = cfg.corpus.generators;
    (0..s.k - 1)
        .map(|slot| {
            let unconditional = match case {
                SantaloCase::Unconditional => true,
                // slot 0 and the closed slot are free, the rest unconditional
                SantaloCase::JEvenMixed => slot > 0,
                SantaloCase::JEqualsK | SantaloCase::General => false,
            };
            if unconditional {
                random_unconditional_polytope(&mut rng, s.n, m, cfg.corpus.max_sweeps)
            } else {
                random_symmetric_polytope(&mut rng, s.n, m)
            }
        })
        .collect()
}

fn run_case(case: SantaloCase, cfg: &Config, index: usize) -> CaseRecord {
    let s = &cfg.verify_santalo;
    let id = format!("tuple-{index}");
    let params = match PolarityParams::new(s.k, s.j) {
        Ok(p) => p,
        Err(e) => return CaseRecord::skipped(id, e.to_string()),
    };
    let mut tuple = match open_slots(case, cfg, index) {
        Ok(t) => t,
        Err(e) => return CaseRecord::skipped(id, format!("corpus: {e}")),
    };
    match close_tuple(&tuple, &params) {
        Ok(p) => tuple.push(p),
        Err(e) => return CaseRecord::skipped(id, format!("polar: {e}")),
    }
    let polarity = match verify_tuple_polarity(&as_bodies(&tuple), &params, &SamplerCfg::default(), cfg.tol) {
        Ok(v) => v,
        Err(e) => return CaseRecord::skipped(id, format!("polarity: {e}")),
    };
    let (ratio, vols) = match exact_ratio(&tuple, s.j) {
        Ok(r) => r,
        Err(e) => return CaseRecord::skipped(id, format!("volume: {e}")),
    };
    let bound = bound_constant(s.n, s.j, s.k).unwrap_or(f64::INFINITY);
    let under_one = within(ratio.value, 1.0, ratio.stderr, 3.0, cfg.tol);
    let under_bound = within(ratio.value, bound, ratio.stderr, 3.0, cfg.tol);
    let polar_ok = polarity.status == Status::Pass;
    let mut rec = if !polar_ok {
        CaseRecord::new(&id, Verdict::Fail, true).diagnostic(format!("closed tuple fails polarity: max E = {}", polarity.max_e))
    } else if case.is_theorem() {
        CaseRecord::check(&id, under_one && under_bound, true)
    } else if !under_bound {
        CaseRecord::new(&id, Verdict::Fail, true).diagnostic("ratio exceeds the bound constant")
    } else {
        CaseRecord::new(&id, Verdict::Reported, false)
    };
    rec = rec
        .inputs(ids(index, &tuple))
        .value("ratio", ratio.value)
        .value("stderr", ratio.stderr)
        .value("bound_constant", bound)
        .value("max_e", polarity.max_e)
        .value("product", vols.iter().map(|v| v.value).product());
    for (i, v) in vols.iter().enumerate() {
        rec = rec.value(&format!("volume_{}", i + 1), v.value);
    }
    rec
}

pub fn cmd_verify_santalo(cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let s = &cfg.verify_santalo;
    check_degrees(s.n, s.j, s.k)?;
    match s.case {
        SantaloCase::JEqualsK if s.j != s.k => bail!("case j-equals-k needs j = k (got j = {}, k = {})", s.j, s.k),
        SantaloCase::JEvenMixed if !s.j.is_multiple_of(2) => bail!("case j-even-mixed needs an even j (got {})", s.j),
        _ => {}
    }
    let cases: Vec<CaseRecord> = (0..s.tuples).into_par_iter().map(|i| run_case(s.case, cfg, i)).collect();
    let done: Vec<&CaseRecord> = cases.iter().filter(|c| c.verdict != Verdict::Skipped).collect();
    let mut agg = BTreeMap::new();
    let max_ratio = done.iter().filter_map(|c| c.values.get("ratio").copied()).fold(f64::NEG_INFINITY, f64::max);
    agg.insert("max_ratio".into(), max_ratio);
    agg.insert("evaluated".into(), done.len() as f64);
    agg.insert("bound_constant".into(), bound_constant(s.n, s.j, s.k)?);
    let config = json!({ "seed": cfg.seed, "tol": cfg.tol, "corpus": cfg.corpus, "verify_santalo": s });
    Ok(ExperimentReport::build("verify-santalo", config, cases, agg, started))
}
