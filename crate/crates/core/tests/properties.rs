use jsantalo::ball::{ball_value_at_basis, ball_value_min, coordinate_moment_bound, BallOptimizer, OrthoBasis};
use jsantalo::bodies::{steiner_symmetrize, Body, SymmetricPolytope};
use jsantalo::functional::{conjectured_rhs, RhoFunction};
use jsantalo::measure::{moment_along, McConfig};
use jsantalo::polar::{classical_polar, j_polar_polytope, largest_body_check, PolarProblem};
use jsantalo::symfun::{big_e, maclaurin_gap, PointTuple, PolarityParams};
use proptest::prelude::*;

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

/// Symmetric polytopes from a handful of random generators, kept when full-dimensional
/// and not too thin.
fn polytope(n: usize) -> impl Strategy<Value = SymmetricPolytope> {
    prop::collection::vec(point(n), n + 1..n + 6)
        .prop_filter_map("full-dimensional", |pts| {
            let p = SymmetricPolytope::hull_reduce(&pts).ok()?;
            (!p.is_degenerate() && p.hull().ok()?.volume() > 0.05).then_some(p)
        })
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn s_j_is_symmetric_and_slot_affine(x in point(3), y in point(3), z in point(3), t in 0.1f64..3.0, j in 1usize..=3) {
        let params = PolarityParams::new(3, j).unwrap();
        let e = big_e(&PointTuple::new(vec![x.clone(), y.clone(), z.clone()]).unwrap(), &params).unwrap();
        let perm = big_e(&PointTuple::new(vec![z.clone(), x.clone(), y.clone()]).unwrap(), &params).unwrap();
        prop_assert!((e - perm).abs() <= 1e-12 * (1.0 + e.abs()));
        // each coordinate enters s_j at most once, so E_j is affine in every slot
        let e0 = big_e(&PointTuple::new(vec![vec![0.0; 3], y.clone(), z.clone()]).unwrap(), &params).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * t).collect();
        let scaled = big_e(&PointTuple::new(vec![xs, y, z]).unwrap(), &params).unwrap();
        prop_assert!((scaled - (e0 + t * (e - e0))).abs() <= 1e-10 * (1.0 + e.abs() + e0.abs()));
    }

    #[test]
    fn maclaurin_holds_for_nonnegative(r in prop::collection::vec(0.0f64..5.0, 2..6)) {
        let k = r.len();
        for j1 in 1..k {
            prop_assert!(maclaurin_gap(&r, j1, j1 + 1).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn hull_reduce_is_symmetric_with_consistent_support(p in polytope(3), u in point(3)) {
        for v in p.vertices() {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            prop_assert!(p.vertices().iter().any(|w| w == &neg));
        }
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3));
        let h = p.support(&u).unwrap();
        let brute = p.vertices().iter().map(|v| v.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((h - brute).abs() <= 1e-12 * (1.0 + h.abs()));
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert!((p.support(&neg).unwrap() - h).abs() <= 1e-12 * (1.0 + h.abs()));
    }

    #[test]
    fn steiner_preserves_volume_and_symmetrizes(p in polytope(3), axis in 0usize..3) {
        let s = steiner_symmetrize(&p, axis).unwrap();
        let (v0, v1) = (p.hull().unwrap().volume(), s.hull().unwrap().volume());
        prop_assert!((v0 - v1).abs() <= 1e-9 * v0, "{} vs {}", v0, v1);
        let scale = s.vertices().iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        prop_assert!(s.reflection_defect(axis) <= 1e-9 * scale);
    }

    #[test]
    fn volume_and_moment_homogeneity(p in polytope(2), t in 0.2f64..3.0, j in 0usize..4) {
        let q = p.scaled(t).unwrap();
        let u = [0.6, -0.8];
        let a = moment_along(&p, &u, j).unwrap().value;
        let b = moment_along(&q, &u, j).unwrap().value;
        prop_assert!((b - t.powi(2 + j as i32) * a).abs() <= 1e-10 * b);
    }

    #[test]
    fn fact_diagonal_maps_keep_the_moment_product(p in polytope(3), d0 in 0.3f64..3.0, d1 in 0.3f64..3.0, j in 1usize..4) {
        let d = [d0, d1, 1.0 / (d0 * d1)];
        let q = p.diagonal_image(&d).unwrap();
        let prod = |p: &SymmetricPolytope| -> f64 {
            (0..3).map(|m| {
                let mut e = vec![0.0; 3];
                e[m] = 1.0;
                moment_along(p, &e, j).unwrap().value.ln()
            }).sum::<f64>()
        };
        prop_assert!((prod(&p) - prod(&q)).abs() < 1e-9);
        let (geo, bound) = coordinate_moment_bound(&p, j).unwrap();
        prop_assert!(geo >= bound * (1.0 - 1e-10));
    }

    #[test]
    fn classical_polar_is_an_involution(p in polytope(2)) {
        let pp = classical_polar(&classical_polar(&p).unwrap()).unwrap();
        let scale = p.vertices().iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
        for v in p.vertices() {
            prop_assert!(pp.vertices().iter().any(|w| (w[0] - v[0]).abs() + (w[1] - v[1]).abs() < 1e-8 * scale));
        }
        prop_assert_eq!(pp.vertices().len(), p.vertices().len());
    }

    #[test]
    fn j_polar_closes_the_tuple(a in polytope(2), b in polytope(2), j in 2usize..=3) {
        let params = PolarityParams::new(3, j).unwrap();
        let problem = PolarProblem::new(vec![a.clone(), b.clone()], params).unwrap();
        let Ok(c) = j_polar_polytope(&problem) else { return Ok(()) };
        let check = largest_body_check(&[a, b, c], &params, 2).unwrap();
        prop_assert!(check.pass, "{:?}", check);
    }

    #[test]
    fn ball_min_is_below_standard_basis(a in polytope(2), b in polytope(2), j in 2usize..=3) {
        let cfg = McConfig::new(1000, 0).unwrap();
        let bodies: Vec<Body> = vec![a.into(), b.into()];
        let opt = BallOptimizer { restarts: 2, max_iter: 60, ..Default::default() };
        let min = ball_value_min(&bodies, j, &opt, &cfg).unwrap();
        let std = ball_value_at_basis(&bodies, j, &OrthoBasis::identity(2), &cfg).unwrap();
        prop_assert!(min.value <= std.value);
        prop_assert!(min.basis.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn conjectured_rhs_scales_linearly(c in 0.1f64..10.0, k in 2usize..=4) {
        let rho = RhoFunction::exponential(1.0).unwrap();
        let base = conjectured_rhs(&rho, 2, 2, k).unwrap().value;
        let scaled = conjectured_rhs(&rho.scaled(c).unwrap(), 2, 2, k).unwrap().value;
        prop_assert!((scaled - c * base).abs() <= 1e-8 * scaled);
    }

    #[test]
    fn rho_tables_invert_from_above(vals in prop::collection::vec(0.01f64..1.0, 2..8)) {
        let mut v = vals;
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v.dedup();
        prop_assume!(v.len() >= 2);
        let t: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
        let rho = RhoFunction::table(t, v.clone()).unwrap();
        prop_assert_eq!(rho.monotonicity_defect(-1.0, v.len() as f64), 0.0);
        let s = 0.5 * (v[0] + v[1]);
        let back = rho.inverse(s);
        prop_assert!(rho.eval(back) >= s - 1e-12);
        prop_assert!(rho.eval(back + 1e-6) < s);
    }
}
