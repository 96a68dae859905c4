use anyhow::{bail, Result};
use jsantalo::bodies::{unconditionalize, SymmetricPolytope};
use jsantalo::linalg::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, StandardNormal};

/// Seed of case `index` under `master`, by a splitmix64 step so that nearby
/// indices give unrelated streams.
pub fn case_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(case_seed(master, index))
}

pub fn unit_gaussian(rng: &mut ChaCha8Rng, n: usize) -> Point {
    loop {
        let g: Point = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            return g.iter().map(|x| x / r).collect();
        }
    }
}

/// Hull of `±r_i u_i` for `m` Gaussian directions `u_i` and Beta(2, 1) radii;
/// redrawn until full-dimensional.
pub fn random_symmetric_polytope(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<SymmetricPolytope> {
    let beta = Beta::new(2.0, 1.0).expect("valid Beta parameters");
    for _ in 0..100 {
        let pts: Vec<Point> = (0..m.max(1))
            .map(|_| {
                let r: f64 = rng.sample(beta);
                unit_gaussian(rng, n).into_iter().map(|x| x * r).collect()
            })
            .collect();
        if let Ok(p) = SymmetricPolytope::hull_reduce(&pts) {
            if !p.is_degenerate() {
                return Ok(p);
            }
        }
    }
    bail!("no full-dimensional polytope in 100 draws (n = {n}, m = {m})")
}

/// A random polytope made unconditional by repeated Steiner sweeps.
pub fn random_unconditional_polytope(rng: &mut ChaCha8Rng, n: usize, m: usize, max_sweeps: usize) -> Result<SymmetricPolytope> {
    let p = random_symmetric_polytope(rng, n, m)?;
    let out = unconditionalize(&p, max_sweeps)?;
    if !out.unconditional {
        bail!("unconditionalization stalled at defect {:.3e} after {} sweeps", out.defect, out.sweeps);
    }
    Ok(out.polytope)
}

/// `{|x_1 + … + x_n| ≤ 1} ∩ [−M, M]^n`.
pub fn truncated_slab(n: usize, m: f64) -> Result<SymmetricPolytope> {
    let mut cons: Vec<(Point, f64)> = vec![(vec![1.0; n], 1.0), (vec![-1.0; n], 1.0)];
    for l in 0..n {
        for s in [1.0, -1.0] {
            let mut a = vec![0.0; n];
            a[l] = s;
            cons.push((a, m));
        }
    }
    Ok(jsantalo::bodies::HalfspacePolytope::new(n, cons)?.analyzed()?.to_symmetric()?)
}
