use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Result};
use jsantalo::ball::{functional_ball_rhs, functional_ball_value, OrthoBasis};
use jsantalo::bodies::Body;
use jsantalo::functional::{
    check_function_polarity, conjectured_rhs, lift_from_bodies, EvenFunction, FunctionPolarityVerdict, FunctionSamplerCfg,
    GridFunction, RhoFunction,
};
use jsantalo::polar::{classical_polar, verify_tuple_polarity, SamplerCfg, Status};
use jsantalo::symfun::PolarityParams;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::within;
use crate::config::{Config, FunctionalCfg};
use crate::corpus::{random_symmetric_polytope, rng_for};
use crate::report::{CaseRecord, ExperimentReport, Verdict};

/// Half-width of the lattice carrying the tabulated functions.
const LATTICE_HALF_WIDTH: f64 = 5.0;

fn sampler(s: &FunctionalCfg, seed: u64) -> FunctionSamplerCfg {
    FunctionSamplerCfg { samples: s.polarity_samples, seed, side: 21, ..Default::default() }
}

fn product_of(fs: &[&dyn EvenFunction]) -> Result<f64> {
    Ok(fs.iter().map(|f| f.integral().map(|v| v.value)).product::<jsantalo::Result<f64>>()?)
}

/// `|Π∫f − Π∫f_{2h}|`, the lattice error proxy from halving the resolution.
fn coarsening_error(gs: &[GridFunction]) -> Result<f64> {
    let fine: f64 = gs.iter().map(|g| g.integral().map(|v| v.value)).product::<jsantalo::Result<f64>>()?;
    let coarse: Option<Vec<GridFunction>> = gs.iter().map(GridFunction::coarsened).collect();
    Ok(match coarse {
        Some(c) => (c.iter().map(|g| g.integral().map(|v| v.value)).product::<jsantalo::Result<f64>>()? - fine).abs(),
        None => 0.0,
    })
}

fn polarity_values(rec: CaseRecord, v: &FunctionPolarityVerdict) -> CaseRecord {
    rec.value("worst_ratio", v.worst_ratio).value("worst_excess", v.worst_excess).value("polarity_tuples", v.tuples as f64)
}

/// A body pair `(K, λK°)` and its indicator lift: the two verdicts must
/// agree, and for `λ = 1` the product is bounded by `|B_2^n|²`.
fn indicator_case(cfg: &Config, index: usize, lambda: f64) -> Result<CaseRecord> {
    let s = &cfg.functional;
    let mut rng = rng_for(cfg.seed, index as u64);
    let k_body = random_symmetric_polytope(&mut rng, s.n, cfg.corpus.generators)?;
    let polar = classical_polar(&k_body)?.scaled(lambda)?;
    let bodies: Vec<Body> = vec![k_body.into(), polar.into()];
    let params = PolarityParams::new(2, 2)?;
    let body_verdict = verify_tuple_polarity(&bodies, &params, &SamplerCfg::default(), cfg.tol)?;
    let (fs, rho) = lift_from_bodies(bodies, 2)?;
    let refs: Vec<&dyn EvenFunction> = fs.iter().map(|f| f as &dyn EvenFunction).collect();
    let fv = check_function_polarity(&refs, &rho, &params, &sampler(s, cfg.seed ^ index as u64), cfg.tol)?;
    let body_pass = body_verdict.status == Status::Pass;
    let prod = product_of(&refs)?;
    let rhs = conjectured_rhs(&rho, s.n, 2, 2)?;
    let bounded = !fv.pass || within(prod, rhs.value, rhs.error, 3.0, cfg.tol);
    let id = format!("indicator-{index}{}", if lambda != 1.0 { "-inflated" } else { "" });
    let rec = CaseRecord::check(id, body_pass == fv.pass && bounded, true)
        .value("body_pass", body_pass as u8 as f64)
        .value("function_pass", fv.pass as u8 as f64)
        .value("product", prod)
        .value("rhs", rhs.value)
        .value("lambda", lambda);
    Ok(polarity_values(rec, &fv))
}

/// `f_i = c_i exp(−Σ_l |d_il x_l|^k / k)` with `Π_i d_il = 1` and
/// `ρ = (Π c_i) e^{−t}`: polar by AM-GM, with equality of the integrals.
/// An extra Gaussian factor on `f_1` makes the bound strict.
fn exponential_case(cfg: &Config, index: usize, k: usize, damp: f64) -> Result<CaseRecord> {
    let s = &cfg.functional;
    let mut rng = rng_for(cfg.seed, 500 + index as u64);
    let n = s.n;
    let mut d = vec![vec![1.0; n]; k];
    for l in 0..n {
        for row in d.iter_mut().take(k - 1) {
            row[l] = rng.random_range(0.6..1.6);
        }
        d[k - 1][l] = 1.0 / (0..k - 1).map(|i| d[i][l]).product::<f64>();
    }
    let c: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
    let grids: Vec<GridFunction> = (0..k)
        .map(|i| {
            let (di, ci, kk) = (d[i].clone(), c[i], k as i32);
            let extra = if i == 0 { damp } else { 0.0 };
            GridFunction::from_fn(n, LATTICE_HALF_WIDTH, s.spacing, move |x| {
                let e: f64 = x.iter().zip(&di).map(|(v, dl)| (v * dl).abs().powi(kk)).sum::<f64>() / kk as f64;
                ci * (-e - extra * x.iter().map(|v| v * v).sum::<f64>()).exp()
            })
        })
        .collect::<jsantalo::Result<_>>()?;
    let rho = RhoFunction::exponential(c.iter().product())?;
    let params = PolarityParams::new(k, k)?;
    let refs: Vec<&dyn EvenFunction> = grids.iter().map(|g| g as &dyn EvenFunction).collect();
    let fv = check_function_polarity(&refs, &rho, &params, &sampler(s, cfg.seed ^ (500 + index) as u64), cfg.tol)?;
    let prod = product_of(&refs)?;
    let err = coarsening_error(&grids)?;
    let rhs = conjectured_rhs(&rho, n, k, k)?;
    let ok = fv.pass && within(prod, rhs.value, err + rhs.error, 3.0, cfg.tol);
    let rec = CaseRecord::check(format!("exponential-k{k}-{index}{}", if damp > 0.0 { "-damped" } else { "" }), ok, true)
        .value("product", prod)
        .value("quad_error", err)
        .value("rhs", rhs.value)
        .value("rel_gap", 1.0 - prod / rhs.value);
    Ok(polarity_values(rec, &fv))
}

/// Young pairs `exp(−Σ|x_l|^{p_l}/p_l)`, `exp(−Σ|y_l|^{q_l}/q_l)` with
/// conjugate exponents, polar for `ρ = e^{−t}`, `j = k = 2`.
fn young_pair(n: usize, exps: &[f64], h: f64) -> Result<Vec<GridFunction>> {
    let conj: Vec<f64> = exps.iter().map(|p| p / (p - 1.0)).collect();
    [exps.to_vec(), conj]
        .into_iter()
        .map(|e| {
            Ok(GridFunction::from_fn(n, LATTICE_HALF_WIDTH, h, move |x| {
                (-x.iter().zip(&e).map(|(v, p)| v.abs().powf(*p) / p).sum::<f64>()).exp()
            })?)
        })
        .collect()
}

fn smooth_case(cfg: &Config, index: usize) -> Result<CaseRecord> {
    let s = &cfg.functional;
    let mut rng = rng_for(cfg.seed, 700 + index as u64);
    let exps: Vec<f64> = (0..s.n).map(|_| rng.random_range(1.5..3.0)).collect();
    let grids = young_pair(s.n, &exps, s.spacing)?;
    let rho = RhoFunction::exponential(1.0)?;
    let params = PolarityParams::new(2, 2)?;
    let refs: Vec<&dyn EvenFunction> = grids.iter().map(|g| g as &dyn EvenFunction).collect();
    let fv = check_function_polarity(&refs, &rho, &params, &sampler(s, cfg.seed ^ (700 + index) as u64), cfg.tol)?;
    let prod = product_of(&refs)?;
    let err = coarsening_error(&grids)?;
    let rhs = conjectured_rhs(&rho, s.n, 2, 2)?;
    let ok = fv.pass && within(prod, rhs.value, err + rhs.error, 3.0, cfg.tol);
    let mut rec = CaseRecord::check(format!("smooth-{index}"), ok, true)
        .value("product", prod)
        .value("quad_error", err)
        .value("rhs", rhs.value);
    for (l, p) in exps.iter().enumerate() {
        rec = rec.value(&format!("p_{l}"), *p);
    }
    Ok(polarity_values(rec, &fv))
}

/// Functional Ball value at the standard basis against its bound.
fn ball_case(cfg: &Config, id: &str, grids: &[GridFunction], rho: &RhoFunction) -> Result<CaseRecord> {
    let n = grids[0].dim();
    let refs: Vec<&dyn EvenFunction> = grids.iter().map(|g| g as &dyn EvenFunction).collect();
    let v = functional_ball_value(&refs, 2, &OrthoBasis::identity(n))?;
    let rhs = functional_ball_rhs(rho, n, 2, grids.len())?;
    Ok(CaseRecord::check(id, within(v.value, rhs, v.quad_error, 3.0, cfg.tol), true)
        .value("value", v.value)
        .value("quad_error", v.quad_error)
        .value("rhs", rhs))
}

pub fn cmd_functional_suite(cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let s = &cfg.functional;
    if s.n == 0 || s.n > 3 {
        bail!("the functional suite runs in dimensions 1 to 3 (got n = {})", s.n);
    }
    let mut jobs: Vec<Box<dyn Fn() -> Result<CaseRecord> + Sync + Send + '_>> = vec![];
    if s.indicator {
        for i in 0..s.tuples {
            jobs.push(Box::new(move || indicator_case(cfg, i, 1.0)));
            jobs.push(Box::new(move || indicator_case(cfg, i, 1.02)));
        }
    }
    if s.exponential {
        for (i, k) in [2usize, 3].into_iter().enumerate() {
            jobs.push(Box::new(move || exponential_case(cfg, i, k, 0.0)));
            jobs.push(Box::new(move || exponential_case(cfg, i, k, 0.3)));
        }
    }
    if s.smooth {
        for i in 0..3 {
            jobs.push(Box::new(move || smooth_case(cfg, i)));
        }
    }
    if s.ball {
        jobs.push(Box::new(move || {
            let g = young_pair(s.n, &vec![2.0; s.n], s.spacing)?;
            ball_case(cfg, "ball-gaussian", &g, &RhoFunction::exponential(1.0)?)
        }));
        jobs.push(Box::new(move || {
            let exps: Vec<f64> = (0..s.n).map(|l| 1.6 + 0.5 * l as f64).collect();
            let g = young_pair(s.n, &exps, s.spacing)?;
            ball_case(cfg, "ball-young", &g, &RhoFunction::exponential(1.0)?)
        }));
    }
    let cases: Vec<CaseRecord> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| job().unwrap_or_else(|e| CaseRecord::skipped(format!("job-{i}"), e.to_string())))
        .collect();
    let mut agg = BTreeMap::new();
    agg.insert("evaluated".into(), cases.iter().filter(|c| c.verdict != Verdict::Skipped).count() as f64);
    let config = json!({ "seed": cfg.seed, "tol": cfg.tol, "corpus": cfg.corpus, "functional": s });
    Ok(ExperimentReport::build("functional", config, cases, agg, started))
}

