use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::linalg::{dist, dot, norm2, sub, Point};

fn same_set(a: &[Point], b: &[Point], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|v| b.iter().any(|w| dist(v, w) <= tol))
}

fn random_ball_points(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Point> {
    (0..m)
        .map(|_| {
            let g: Point = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let r = rng.random::<f64>().powf(1.0 / n as f64) / norm2(&g);
            g.iter().map(|x| x * r).collect()
        })
        .collect()
}

fn random_polytope(seed: u64, n: usize, m: usize) -> SymmetricPolytope {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymmetricPolytope::hull_reduce(&random_ball_points(&mut rng, n, m)).unwrap()
}

// every point lying on a plane through three points that supports the whole set
fn brute_force_extreme_3d(pts: &[Point]) -> usize {
    let m = pts.len();
    let mut extreme = vec![false; m];
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let u = sub(&pts[b], &pts[a]);
                let v = sub(&pts[c], &pts[a]);
                let nrm = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let off = dot(&nrm, &pts[a]);
                let (mut pos, mut negc) = (false, false);
                for p in pts {
                    let s = dot(&nrm, p) - off;
                    pos |= s > 1e-12;
                    negc |= s < -1e-12;
                }
                if !(pos && negc) {
                    extreme[a] = true;
                    extreme[b] = true;
                    extreme[c] = true;
                }
            }
        }
    }
    extreme.iter().filter(|e| **e).count()
}

#[test]
fn lp_ball_membership() {
    let b = make_lp_ball(2, 2.0, 1.0).unwrap();
    assert!(b.member(&[0.6, 0.8]));
    assert!(!make_lp_ball(2, 1.0, 1.0).unwrap().member(&[0.6, 0.6]));
    let half = make_lp_ball(3, 0.5, 1.0).unwrap();
    assert!(half.member(&[0.25, 0.25, 0.0]));
    assert!(!half.is_convex());
    let b1 = make_lp_ball(4, 1.0, 2.0).unwrap();
    assert!((b1.outer_radius() - 2.0).abs() < 1e-15);
    assert!((b1.inner_radius() - 1.0).abs() < 1e-15);
    assert_eq!(b1.symmetry_class(), SymmetryClass::Unconditional);
    assert!(make_lp_ball(2, 0.0, 1.0).is_err());
}

#[test]
fn hull_reduce_examples() {
    let p = SymmetricPolytope::hull_reduce(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(same_set(p.vertices(), SymmetricPolytope::cross_polytope(2, 1.0).vertices(), 0.0));
    let q = SymmetricPolytope::hull_reduce(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![0.5, 0.0]]).unwrap();
    assert_eq!(q.vertices().len(), 4);
    assert!(same_set(q.vertices(), SymmetricPolytope::cube(2, 1.0).vertices(), 0.0));
    for pair in p.vertices().chunks(2) {
        assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| *a == -*b));
    }
}

#[test]
fn hull_reduce_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts = random_ball_points(&mut rng, 3, 50);
    let sym: Vec<Point> = pts.iter().flat_map(|p| [p.clone(), crate::linalg::neg(p)]).collect();
    let p = SymmetricPolytope::hull_reduce(&pts).unwrap();
    assert_eq!(p.vertices().len(), brute_force_extreme_3d(&sym));
}

#[test]
fn degenerate_input_is_flagged() {
    let p = SymmetricPolytope::hull_reduce(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
    assert!(p.is_degenerate());
    assert!(steiner_symmetrize(&p, 0).is_err());
}

#[test]
fn support_examples() {
    let c = SymmetricPolytope::cube(2, 1.0);
    assert_eq!(c.support(&[1.0, 1.0]).unwrap(), 2.0);
    assert!(c.support(&[0.0, 0.0]).is_err());
    let b2 = make_lp_ball(3, 2.0, 1.0).unwrap();
    let u = [0.48, -0.6, 0.64];
    assert!((b2.support(&u).unwrap() - 1.0).abs() < 1e-10);
    let b1 = make_lp_ball(2, 1.0, 1.0).unwrap();
    assert!((b1.support(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-10);
    let b3 = make_lp_ball(3, 3.0, 1.0).unwrap();
    let q = 1.5f64;
    let expect = (0.48f64.powf(q) + 0.6f64.powf(q) + 0.64f64.powf(q)).powf(1.0 / q);
    assert!((b3.support(&u).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn radial_examples() {
    let b2 = make_lp_ball(3, 2.0, 1.0).unwrap();
    assert!((b2.radial(&[0.0, 0.6, 0.8]) - 1.0).abs() < 1e-12);
    let b1 = make_lp_ball(2, 1.0, 1.0).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((b1.radial(&[s, s]) - s).abs() < 1e-9);
    assert!((b1.radial_bisect(&[s, s]) - s).abs() < 1e-9);
    let big = make_lp_ball(2, 2.0, 2.0).unwrap();
    assert!((big.radial_bisect(&[0.6, 0.8]) - 2.0).abs() < 1e-9);
}

#[test]
fn custom_oracle_support_is_numeric() {
    let m: Arc<MemberFn> = Arc::new(|x: &[f64]| x[0].abs() + x[1].abs() <= 1.0);
    let o = BodyOracle::custom(2, m, 0.5, 1.0, SymmetryClass::Unconditional).unwrap();
    assert!((o.support(&[1.0, 0.3]).unwrap() - 1.0).abs() < 1e-8);
    assert!((o.radial(&[0.6, 0.8]) - 1.0 / 1.4).abs() < 1e-9);
}

#[test]
fn radial_lies_on_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in [0.5, 1.0, 1.5, 2.0, 4.0] {
        let b = make_lp_ball(3, p, 1.3).unwrap();
        let lin = b.linear_image(&nalgebra::DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.2, 0.1, 0.0, 2.0])).unwrap();
        for body in [&b, &lin] {
            for _ in 0..20 {
                let g: Point = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let u: Point = g.iter().map(|x| x / norm2(&g)).collect();
                let r = body.radial(&u);
                let at = |t: f64| -> Point { u.iter().map(|x| x * t).collect() };
                assert!(body.member(&at(r - 1e-6)));
                assert!(!body.member(&at(r + 1e-6)));
            }
        }
    }
}

#[test]
fn linear_image_support_matches_polytope() {
    let m = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
    let poly = SymmetricPolytope::cross_polytope(2, 1.0).linear_image(&m).unwrap();
    let orc = make_lp_ball(2, 1.0, 1.0).unwrap().linear_image(&m).unwrap();
    for u in [[1.0, 0.0], [0.3, -0.7], [-1.0, 2.0]] {
        assert!((poly.support(&u).unwrap() - orc.support(&u).unwrap()).abs() < 1e-12);
    }
    assert!((orc.tracked_det() - 1.0).abs() < 1e-15);
}

#[test]
fn steiner_examples() {
    let cube = SymmetricPolytope::cube(2, 1.0);
    assert!(same_set(steiner_symmetrize(&cube, 1).unwrap().vertices(), cube.vertices(), 1e-12));

    let sheared =
        SymmetricPolytope::hull_reduce(&[vec![1.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.0], vec![-1.0, -2.0]]).unwrap();
    let s = steiner_symmetrize(&sheared, 1).unwrap();
    assert!(same_set(s.vertices(), cube.vertices(), 1e-12), "{:?}", s.vertices());
    let sw = unconditionalize_sweep(&sheared).unwrap();
    assert!(sw.unconditional);
    assert!(same_set(sw.polytope.vertices(), cube.vertices(), 1e-12));

    let cross = SymmetricPolytope::cross_polytope(3, 1.0);
    let sc = unconditionalize_sweep(&cross).unwrap();
    assert!(same_set(sc.polytope.vertices(), cross.vertices(), 1e-12));

    let hex = SymmetricPolytope::hull_reduce(&[vec![1.0, 0.0], vec![0.5, 0.9], vec![-0.5, 0.9]]).unwrap();
    let sh = unconditionalize_sweep(&hex).unwrap();
    assert!(sh.unconditional, "defect {}", sh.defect);
    assert!(sh.volume_rel_change() < 1e-9);
    assert_eq!(sh.sweeps, 1);
}

#[test]
fn steiner_properties_random_3d() {
    for seed in 0..4 {
        let p = random_polytope(seed, 3, 30);
        let before = p.hull().unwrap().volume();
        for axis in 0..3 {
            let s = steiner_symmetrize(&p, axis).unwrap();
            let after = s.hull().unwrap().volume();
            assert!((after - before).abs() / before < 1e-9, "seed {seed} axis {axis}: {before} vs {after}");
            assert!(s.reflection_defect(axis) <= 1e-12);
            let again = SymmetricPolytope::hull_reduce(s.vertices()).unwrap();
            assert_eq!(again.vertices().len(), s.vertices().len());
            // nearly degenerate vertices of random symmetrals are recovered to ~1e-11
            let twice = steiner_symmetrize(&s, axis).unwrap();
            assert!(same_set(twice.vertices(), s.vertices(), 1e-11));
        }
        let sw = unconditionalize_sweep(&p).unwrap();
        assert!(sw.unconditional, "seed {seed}: defect {}", sw.defect);
        assert!(sw.volume_rel_change() < 1e-9);
    }
}

#[test]
fn steiner_is_identity_on_axis_symmetric_bodies() {
    let bodies = [
        SymmetricPolytope::cube(3, 1.0),
        SymmetricPolytope::cross_polytope(3, 2.0),
        SymmetricPolytope::lp_ball(2, 1.5, 64).unwrap(),
        SymmetricPolytope::cube(2, 1.0).diagonal_image(&[2.0, 0.5]).unwrap(),
    ];
    for p in &bodies {
        for axis in 0..p.dim() {
            let s = steiner_symmetrize(p, axis).unwrap();
            assert!(same_set(s.vertices(), p.vertices(), 1e-12));
        }
    }
}

#[test]
fn diagonal_image_examples() {
    let cube = SymmetricPolytope::cube(2, 1.0);
    let same = cube.diagonal_image(&[1.0, 1.0]).unwrap();
    assert!(same_set(same.vertices(), cube.vertices(), 0.0));
    let wide = cube.diagonal_image(&[2.0, 1.0]).unwrap();
    assert_eq!(wide.hull().unwrap().volume(), 8.0);
    assert_eq!(wide.tracked_det(), 2.0);
    let p = random_polytope(11, 3, 25);
    let q = p.diagonal_image(&[2.0, 0.25, 2.0]).unwrap();
    let (a, b) = (p.hull().unwrap().volume(), q.hull().unwrap().volume());
    assert!((a - b).abs() / a < 1e-10);
    assert!(cube.diagonal_image(&[1.0, -1.0]).is_err());
}

#[test]
fn halfspace_roundtrip() {
    let p = random_polytope(5, 3, 20);
    let h = p.halfspaces().unwrap();
    let back = h.to_symmetric().unwrap();
    assert!(same_set(back.vertices(), p.vertices(), 1e-9));
    let strip = HalfspacePolytope::new(2, vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 1.0)]).unwrap().analyzed().unwrap();
    assert_eq!(strip.boundedness(), Boundedness::Unbounded);
    assert!(matches!(strip.to_symmetric(), Err(crate::GeomError::Unbounded)));
    let bad = HalfspacePolytope::new(1, vec![(vec![1.0], -1.0)]).unwrap();
    assert!(bad.is_degenerate());
}

#[test]
fn file_formats_roundtrip() {
    let p = random_polytope(9, 3, 15);
    let q = parse_polytope(&format_polytope(&p)).unwrap();
    assert!(same_set(p.vertices(), q.vertices(), 0.0));
    let half = "2 2\n1 0\n0 1\n";
    assert_eq!(parse_polytope(half).unwrap().vertices().len(), 4);
    let h = p.halfspaces().unwrap();
    let h2 = parse_halfspaces(&format_halfspaces(&h)).unwrap();
    assert_eq!(h.constraints(), h2.constraints());
    assert!(parse_polytope("2 1\n1 0 3\n").is_err());
    assert!(parse_polytope("2 3\n1 0\n").is_err());
}
