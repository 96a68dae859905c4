use std::f64::consts::PI;

use super::*;
use crate::ball::{ball_value_at_basis, functional_ball_rhs, functional_ball_value, OrthoBasis};
use crate::bodies::{Body, SymmetricPolytope};
use crate::measure::{lp_ball_volume, McConfig};
use crate::symfun::PolarityParams;

fn gaussian_grid(n: usize, c: f64, l: f64, h: f64) -> GridFunction {
    ExpLp::new(n, c, 0.5, 2.0).unwrap().to_grid(l, h).unwrap()
}

#[test]
fn indicator_lift_polarity_matches_bodies() {
    let cube: Body = SymmetricPolytope::cube(2, 1.0).into();
    let cross: Body = SymmetricPolytope::cross_polytope(2, 1.0).into();
    let (fs, rho) = lift_from_bodies(vec![cube.clone(), cross], 2).unwrap();
    let refs: Vec<&dyn EvenFunction> = fs.iter().map(|f| f as &dyn EvenFunction).collect();
    let params = PolarityParams::new(2, 2).unwrap();
    let cfg = FunctionSamplerCfg { side: 21, ..Default::default() };
    let v = check_function_polarity(&refs, &rho, &params, &cfg, 1e-12).unwrap();
    assert!(v.pass && v.worst_ratio <= 1.0 && v.exhaustive, "{v:?}");

    let big: Body = SymmetricPolytope::cross_polytope(2, 1.01).into();
    let (fs, rho) = lift_from_bodies(vec![cube, big], 2).unwrap();
    let refs: Vec<&dyn EvenFunction> = fs.iter().map(|f| f as &dyn EvenFunction).collect();
    let v = check_function_polarity(&refs, &rho, &params, &cfg, 1e-12).unwrap();
    assert!(!v.pass);
    // the witness pairs a cube vertex with a cross-polytope vertex
    let w = &v.witness;
    assert!((w[0][0].abs() - 1.0).abs() < 1e-12 && (w[0][1].abs() - 1.0).abs() < 1e-12, "{w:?}");
    assert!((w[1].iter().map(|x| x.abs()).sum::<f64>() - 1.01).abs() < 1e-12, "{w:?}");
}

#[test]
fn exponential_pair_polarity_by_am_gm() {
    // f_i = c_i e^{−|x|²/2}, ρ = c_1 c_2 e^{−t}: |x|²/2 + |y|²/2 ≥ ⟨x,y⟩
    let (c1, c2) = (2.0, 0.75);
    let f1 = gaussian_grid(2, c1, 4.0, 0.125);
    let f2 = gaussian_grid(2, c2, 4.0, 0.125);
    let rho = RhoFunction::exponential(c1 * c2).unwrap();
    let params = PolarityParams::new(2, 2).unwrap();
    let cfg = FunctionSamplerCfg { samples: 50_000, seed: 3, ..Default::default() };
    let v = check_function_polarity(&[&f1, &f2], &rho, &params, &cfg, 1e-12).unwrap();
    assert!(v.pass && !v.exhaustive, "{v:?}");
    assert!(v.worst_ratio <= 1.0 + 1e-12);

    let inflated = f1.map_values(|_, v| 1.01 * v).unwrap();
    let v = check_function_polarity(&[&inflated, &f2], &rho, &params, &cfg, 1e-12).unwrap();
    assert!(!v.pass);
    assert!(v.witness.iter().all(|p| p.iter().all(|x| x.abs() < 1e-12)), "{v:?}");
    assert!((v.worst_ratio - 1.01).abs() < 1e-8);

    // 1-D: exhaustive scan of the lattice product
    let g = gaussian_grid(1, 1.0, 4.0, 0.0625);
    let v = check_function_polarity(&[&g, &g], &RhoFunction::exponential(1.0).unwrap(), &params, &cfg, 1e-12).unwrap();
    assert!(v.pass && v.exhaustive);
}

#[test]
fn conjectured_rhs_examples() {
    for (n, j, k) in [(2, 2, 2), (2, 2, 3), (2, 3, 3), (3, 2, 2)] {
        let rho = RhoFunction::indicator(crate::linalg::binomial(k, j)).unwrap();
        let r = conjectured_rhs(&rho, n, j, k).unwrap();
        let exact = lp_ball_volume(n, j as f64).powi(k as i32);
        assert!((r.value - exact).abs() <= 1e-10 * exact, "{n} {j} {k}: {} vs {exact}", r.value);
    }
    // n = 1, k = j = 2, ρ = e^{−t}: (∫ e^{−u²/2} du)² = 2π
    let rho = RhoFunction::exponential(1.0).unwrap();
    let r = conjectured_rhs(&rho, 1, 2, 2).unwrap();
    assert!((r.value - 2.0 * PI).abs() < 1e-9, "{}", r.value);
    let scaled = conjectured_rhs(&rho.scaled(3.5).unwrap(), 1, 2, 2).unwrap();
    assert!((scaled.value - 3.5 * r.value).abs() < 1e-9 * r.value);
    // too slowly decaying ρ
    assert!(matches!(
        conjectured_rhs(&RhoFunction::power(1.0, 1.0).unwrap(), 2, 2, 2),
        Err(crate::error::GeomError::Divergence(_))
    ));
}

#[test]
fn layer_cake_matches_lattice_quadrature() {
    // n = 2, k = j = 3, ρ = e^{−t}: (∫ e^{−‖u‖_3^3/3} du)^3 on a fine lattice
    let rho = RhoFunction::exponential(1.0).unwrap();
    let g = GridFunction::from_fn(2, 6.0, 0.03125, |u| (-(u[0].abs().powi(3) + u[1].abs().powi(3)) / 3.0).exp()).unwrap();
    let direct = g.integral().unwrap().value.powi(3);
    let r = conjectured_rhs(&rho, 2, 3, 3).unwrap();
    assert!((r.value - direct).abs() < 1e-6 * direct, "{} vs {direct}", r.value);
    let p = RhoFunction::power(6.0, 1.0).unwrap();
    let g = GridFunction::from_fn(2, 200.0, 0.0625, |u| p.eval(u[0] * u[0] + u[1] * u[1]).sqrt()).unwrap();
    let direct = g.integral().unwrap().value.powi(2);
    let r = conjectured_rhs(&p, 2, 2, 2).unwrap();
    assert!((r.value - direct).abs() < 1e-6 * direct, "{} vs {direct}", r.value);
}

#[test]
fn lift_products() {
    let b = SymmetricPolytope::lp_ball(2, 2.0, 4096).unwrap();
    let (fs, rho) = lift_from_bodies(vec![b.clone().into(), b.clone().into()], 2).unwrap();
    let prod: f64 = fs.iter().map(|f| f.integral().unwrap().value).product();
    let vol = b.hull().unwrap().volume();
    assert!((prod - vol * vol).abs() < 1e-12 * prod);
    assert!((prod - PI * PI).abs() < 1e-5 * prod);
    let (fs, rho2) = lift_from_bodies(vec![SymmetricPolytope::cube(2, 1.0).into(), SymmetricPolytope::cross_polytope(2, 1.0).into()], 2).unwrap();
    let prod: f64 = fs.iter().map(|f| f.integral().unwrap().value).product();
    assert!((prod - 8.0).abs() < 1e-12);
    assert_eq!(rho, rho2);
    assert!((conjectured_rhs(&rho, 2, 2, 2).unwrap().value - PI * PI).abs() < 1e-10);
}

#[test]
fn superlevel_sets() {
    let body: Body = SymmetricPolytope::cross_polytope(2, 1.0).into();
    let g = GridFunction::indicator(&body, 2.0, 0.25).unwrap();
    for r in [1e-3, 0.5, 1.0] {
        let pts = superlevel_polytope(&g, r).unwrap();
        assert_eq!(pts.len(), 41);
        assert!(pts.iter().all(|p| p[0].abs() + p[1].abs() <= 1.0 + 1e-12));
    }
    let f = GridFunction::from_fn(2, 2.0, 0.25, |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
    let disc = superlevel_polytope(&f, (-1.0f64).exp()).unwrap();
    let expected = (0..f.len()).filter(|&i| f.point(i).iter().map(|x| x * x).sum::<f64>() <= 1.0).count();
    assert_eq!(disc.len(), expected);
    let sizes: Vec<usize> = [0.9, 0.5, 0.1, 0.01].iter().map(|r| superlevel_polytope(&f, *r).unwrap().len()).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
    assert!(superlevel_polytope(&f, 0.0).is_err());
    // the interpolated crossings sit half a cell outside the lattice support
    let v = superlevel_hull_volume(&g, 0.5).unwrap();
    assert!((v - 2.0 * 1.125f64.powi(2)).abs() < 1e-12, "{v}");
}

#[test]
fn prekopa_leindler_instances() {
    let ind = Table1D::uniform(2.0, 400, |t| if t <= 1.0 { 1.0 } else { 0.0 }).unwrap();
    let r = prekopa_leindler_check(&[ind.clone(), ind.clone()], &ind, 1e-12).unwrap();
    assert!(r.hypothesis_pass && r.conclusion_pass && r.consistent, "{r:?}");
    assert!((r.lhs_integral - r.rhs_integral).abs() < 1e-12);

    let e = Table1D::uniform(30.0, 3000, |t| (-t).exp()).unwrap();
    let r = prekopa_leindler_check(&[e.clone(), e.clone(), e.clone()], &e, 1e-12).unwrap();
    assert!(r.hypothesis_pass && r.conclusion_pass, "{r:?}");
    assert!((r.rhs_integral - 1.0).abs() < 1e-3 && (r.lhs_integral - r.rhs_integral).abs() < 1e-12);

    let r = prekopa_leindler_check(&[e.clone(), e.clone()], &e.scaled(0.9), 1e-12).unwrap();
    assert!(!r.hypothesis_pass && r.consistent);
    assert!(r.worst_violation > 0.0);
    // largest gap on the diagonal at the smallest knot
    assert_eq!(r.witness[0], r.witness[1]);
}

#[test]
fn weighted_orthant_inequality() {
    // indicator lift of the Euclidean disc, C(2,2) = 1, q = 0: (π/4)² on both sides
    let disc: Body = crate::bodies::make_lp_ball(2, 2.0, 1.0).unwrap().into();
    let g = GridFunction::indicator(&disc, 1.25, 1.0 / 256.0).unwrap();
    let rho = RhoFunction::indicator(1.0).unwrap();
    let cfg = FunctionSamplerCfg { samples: 20_000, ascent_starts: 4, ..Default::default() };
    let op = OrthantParams { j: 2, p: 1.0, q: 0.0, m: 0 };
    let r = weighted_orthant_check(&[&g, &g], &rho, &op, &cfg, 1e-12).unwrap();
    let quarter = (PI / 4.0).powi(2);
    assert!((r.rhs - quarter).abs() < 1e-10, "{r:?}");
    assert!((r.lhs - quarter).abs() < 1e-2 * quarter, "{r:?}");
    assert_eq!(r.pass, Some(true), "{r:?}");

    // Gaussians with q = j = 2: equality case of the weighted inequality
    let f = gaussian_grid(2, 1.0, 8.0, 0.125);
    let rho = RhoFunction::exponential(1.0).unwrap();
    let op = OrthantParams { j: 2, p: 1.0, q: 2.0, m: 1 };
    let r = weighted_orthant_check(&[&f, &f], &rho, &op, &cfg, 1e-9).unwrap();
    assert_eq!(r.pass, Some(true), "{r:?}");
    assert!((r.lhs - r.rhs).abs() < 1e-9 * r.rhs, "{r:?}");

    // polarity failure: the inequality is not claimed
    let big = f.map_values(|_, v| 1.5 * v).unwrap();
    let r = weighted_orthant_check(&[&big, &f], &rho, &op, &cfg, 1e-9).unwrap();
    assert_eq!(r.pass, None);
    assert!(!r.polarity.witness.is_empty());
}

#[test]
fn full_space_by_orthants() {
    // even, not unconditional, below the Gaussian and hence polar
    let f = GridFunction::from_fn(2, 8.0, 0.125, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0 - 0.2 * (x[0] + x[1]).powi(2)).exp()).unwrap();
    let rho = RhoFunction::exponential(1.0).unwrap();
    let cfg = FunctionSamplerCfg { samples: 20_000, ascent_starts: 4, ..Default::default() };
    let op = OrthantParams { j: 2, p: 1.0, q: 2.0, m: 0 };
    let r = full_space_from_orthants(&[&f, &f], &rho, &op, &cfg, 1e-9).unwrap();
    assert!((r.aggregate - r.direct).abs() < 1e-8 * r.direct, "{r:?}");
    assert_eq!(r.pass, Some(true));

    // support in the first and third quadrants only
    let diag = GridFunction::from_fn(2, 4.0, 0.125, |x| if x[0] * x[1] > 0.0 { (-(x[0] * x[0] + x[1] * x[1])).exp() } else { 0.0 }).unwrap();
    let r = full_space_from_orthants(&[&diag, &diag], &rho, &op, &cfg, 1e-9).unwrap();
    let t = &r.orthant_terms[0];
    // masks 1 and 2 fold the second and fourth quadrants
    assert!(t[1] == 0.0 && t[2] == 0.0, "{t:?}");
    assert!((t[0] - t[3]).abs() < 1e-12 * t[0]);
    assert!((r.aggregate - r.direct).abs() < 1e-8 * r.direct);
}

#[test]
fn set_function_pipeline() {
    let f = gaussian_grid(2, 1.0, 6.0, 0.05);
    let rho = RhoFunction::exponential(1.0).unwrap();
    // Gaussians are the equality case: the hypothesis holds up to the
    // discretization error of the hull volumes
    let r = layer_cake_pipeline(&[&f, &f], &rho, 2, 200).unwrap();
    assert!(r.rel_gap < 0.02, "{r:?}");
    assert!(r.prekopa_leindler.hypothesis_pass && r.prekopa_leindler.conclusion_pass, "{:?}", r.prekopa_leindler);
    assert!(r.direct_product <= r.conjectured_rhs * (1.0 + 1e-9));
    let g = ExpLp::new(2, 1.0, 0.8, 2.0).unwrap().to_grid(5.0, 0.05).unwrap();
    let r = layer_cake_pipeline(&[&g, &f], &rho, 2, 200).unwrap();
    assert!(r.rel_gap < 0.02 && r.prekopa_leindler.hypothesis_pass && r.prekopa_leindler.worst_violation < 0.0, "{r:?}");
}

#[test]
fn relaxed_bound_for_symmetric_inputs() {
    let rot = OrthoBasis::from_angles(2, &[0.3]).unwrap();
    let sq = SymmetricPolytope::cube(2, 1.0).diagonal_image(&[1.5, 0.5]).unwrap().linear_image(rot.columns()).unwrap();
    let polar = crate::polar::classical_polar(&sq).unwrap();
    let (fs, rho) = lift_from_bodies(vec![sq.into(), polar.into()], 2).unwrap();
    let refs: Vec<&dyn EvenFunction> = fs.iter().map(|f| f as &dyn EvenFunction).collect();
    let r = relaxed_bound_check(&refs, &rho, 2, 1e-12).unwrap();
    assert!(r.pass && r.constant == 1.0, "{r:?}");
    assert!((r.product - 8.0).abs() < 1e-10);
}

#[test]
fn functional_ball_examples() {
    let b = SymmetricPolytope::lp_ball(2, 2.0, 2048).unwrap();
    let ind = Indicator::new(b.clone().into());
    let basis = OrthoBasis::identity(2);
    let v = functional_ball_value(&[&ind, &ind], 2, &basis).unwrap();
    let bodies: Vec<Body> = vec![b.clone().into(), b.into()];
    let direct = ball_value_at_basis(&bodies, 2, &basis, &McConfig::new(1000, 0).unwrap()).unwrap();
    assert!((v.value - direct.value).abs() < 1e-12 * v.value);

    let disc: Body = crate::bodies::make_lp_ball(2, 2.0, 1.0).unwrap().into();
    let g = GridFunction::indicator(&disc, 1.25, 1.0 / 128.0).unwrap();
    let vg = functional_ball_value(&[&g, &g], 2, &basis).unwrap();
    assert!((vg.value - PI * PI / 8.0).abs() < 2.0 * vg.quad_error.max(1e-3), "{vg:?}");

    let f1 = gaussian_grid(2, 1.0, 8.0, 0.125);
    let f2 = GridFunction::from_fn(2, 8.0, 0.125, |x| (-(x[0] * x[0] + x[1] * x[1]).powf(1.5)).exp()).unwrap();
    let tilted = OrthoBasis::from_angles(2, &[0.7]).unwrap();
    let a = functional_ball_value(&[&f1, &f2], 2, &tilted).unwrap();
    let b = functional_ball_value(&[&f2, &f1], 2, &tilted).unwrap();
    assert!(a.value.is_finite() && (a.value - b.value).abs() < 1e-12 * a.value);

    // Gaussian pair: equality in the functional Ball bound
    let g = ExpLp::new(2, 1.0, 0.5, 2.0).unwrap();
    let v = functional_ball_value(&[&g, &g], 2, &basis).unwrap();
    let rhs = functional_ball_rhs(&RhoFunction::exponential(1.0).unwrap(), 2, 2, 2).unwrap();
    assert!((v.value - 2.0 * (2.0 * PI).powi(2)).abs() < 1e-10 * v.value);
    assert!(v.value <= rhs * (1.0 + 1e-9), "{} vs {rhs}", v.value);
    // an unconditional pair inside the bound with room to spare
    let h = ExpLp::new(2, 1.0, 1.0, 2.0).unwrap();
    let v = functional_ball_value(&[&h, &h], 2, &basis).unwrap();
    assert!(v.value < rhs);
}

