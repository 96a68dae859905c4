use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use jsantalo::ball::{ball_value_at_basis, ball_value_lj_tuple, moment_volume_check, BallOptimizer, OrthoBasis};
use jsantalo::bodies::{format_polytope, read_polytope, SymmetricPolytope};
use jsantalo::measure::{volume_mc_body, volume_polytope, McConfig};
use jsantalo::polar::{largest_body_check, verify_tuple_polarity, SamplerCfg, Status};
use jsantalo::symfun::PolarityParams;
use serde_json::json;

use super::{as_bodies, close_tuple, exact_ratio, within};
use crate::config::Config;
use crate::report::{CaseRecord, ExperimentReport, Verdict};

fn read_all(files: &[PathBuf]) -> Result<Vec<SymmetricPolytope>> {
    if files.is_empty() {
        bail!("no polytope files given");
    }
    files.iter().map(|f| read_polytope(f).with_context(|| format!("reading {}", f.display()))).collect()
}

fn names(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|f| f.display().to_string()).collect()
}

/// Closes the given `k − 1` bodies with their `j`-polar. Returns the report
/// and the polar in the polytope file format.
pub fn cmd_polar(files: &[PathBuf], j: usize, cfg: &Config) -> Result<(ExperimentReport, String)> {
    let started = Instant::now();
    let open = read_all(files)?;
    let k = open.len() + 1;
    let params = PolarityParams::new(k, j)?;
    let polar = close_tuple(&open, &params)?;
    let mut tuple = open;
    tuple.push(polar.clone());
    let verdict = verify_tuple_polarity(&as_bodies(&tuple), &params, &SamplerCfg::default(), cfg.tol)?;
    let maximal = largest_body_check(&tuple, &params, k - 1)?;
    let (ratio, vols) = exact_ratio(&tuple, j)?;
    let rec = CaseRecord::check("polar", verdict.status == Status::Pass && maximal.pass, false)
        .inputs(names(files))
        .value("polar_vertices", polar.vertices().len() as f64)
        .value("polar_volume", vols[k - 1].value)
        .value("ratio", ratio.value)
        .value("max_e", verdict.max_e)
        .value("min_slack", maximal.min_slack);
    let config = json!({ "j": j, "k": k, "files": names(files) });
    Ok((ExperimentReport::build("polar", config, vec![rec], BTreeMap::new(), started), format_polytope(&polar)))
}

/// Exact volume of each file with a Monte Carlo cross-check at `3·stderr`.
pub fn cmd_volume(files: &[PathBuf], cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let ps = read_all(files)?;
    let mc = McConfig::new(cfg.samples, cfg.seed)?;
    let cases = ps
        .iter()
        .zip(files)
        .enumerate()
        .map(|(i, (p, f))| {
            let exact = volume_polytope(p)?.value;
            let est = volume_mc_body(&p.clone().into(), &mc.reseeded(i as u64 + 1));
            let agree = (exact - est.value).abs() <= 3.0 * est.stderr + cfg.tol * exact;
            Ok(CaseRecord::check(f.display().to_string(), agree, false)
                .value("exact", exact)
                .value("mc", est.value)
                .value("mc_stderr", est.stderr)
                .value("vertices", p.vertices().len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = json!({ "seed": cfg.seed, "samples": cfg.samples, "tol": cfg.tol, "files": names(files) });
    Ok(ExperimentReport::build("volume", config, cases, BTreeMap::new(), started))
}

/// Ball functional of a tuple: minimized over bases, compared with the
/// standard basis, the `l_j`-ball value and the moment/volume inequality.
pub fn cmd_ball(files: &[PathBuf], j: usize, cfg: &Config) -> Result<ExperimentReport> {
    let started = Instant::now();
    let ps = read_all(files)?;
    let n = ps[0].dim();
    let k = ps.len();
    if j == 0 || k < 2 {
        bail!("need j ≥ 1 and at least two bodies");
    }
    let bodies = as_bodies(&ps);
    let mc = McConfig::new(cfg.samples, cfg.seed)?;
    let opt = BallOptimizer { restarts: cfg.ball.restarts, max_iter: cfg.ball.max_iter, seed: cfg.seed, ..Default::default() };
    let std = ball_value_at_basis(&bodies, j, &OrthoBasis::identity(n), &mc)?;
    let mv = moment_volume_check(&bodies, j, &opt, &mc)?;
    let min = &mv.ball;
    let reference = ball_value_lj_tuple(n, j, k);
    let unconditional = ps.iter().all(|p| p.unconditional_defect() < 1e-7);
    let below_ball = within(min.value, reference, min.stderr, 3.0, cfg.tol);
    let mut cases = vec![
        CaseRecord::check("minimized", min.value <= std.value + 3.0 * std.stderr, false)
            .inputs(names(files))
            .value("min", min.value)
            .value("min_stderr", min.stderr)
            .value("standard", std.value)
            .value("restart_spread", min.restart_spread())
            .witness(&min.basis),
        CaseRecord::check("moment-volume", mv.pass, true)
            .value("lhs", mv.lhs)
            .value("rhs", mv.rhs)
            .value("rhs_stderr", mv.rhs_stderr)
            .value("slack", mv.slack),
    ];
    // a claim only for unconditional tuples; reported otherwise
    let verdict = match (unconditional, below_ball) {
        (false, _) => Verdict::Reported,
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Fail,
    };
    cases.push(
        CaseRecord::new("below-lj-ball", verdict, false)
            .value("min", min.value)
            .value("lj_ball_value", reference)
            .value("unconditional", unconditional as u8 as f64),
    );
    let config = json!({ "seed": cfg.seed, "samples": cfg.samples, "tol": cfg.tol, "j": j, "ball": cfg.ball, "files": names(files) });
    Ok(ExperimentReport::build("ball", config, cases, BTreeMap::new(), started))
}
