use jsantalo::bodies::{steiner_symmetrize, SymmetricPolytope};
use jsantalo::polar::classical_polar;
use jsantalo::symfun::PolarityParams;
use jsantalo_harness::config::{Config, SantaloCase};
use jsantalo_harness::corpus::rng_for;
use jsantalo_harness::experiments::symmetrize::reduction_chain;
use jsantalo_harness::experiments::{functional, santalo, search, symmetrize};
use jsantalo_harness::report::Verdict;

fn area(p: &SymmetricPolytope) -> f64 {
    p.hull().unwrap().volume()
}

fn sheared_square(s: f64) -> SymmetricPolytope {
    SymmetricPolytope::hull_reduce(&[vec![1.0 + s, 1.0], vec![-1.0 + s, 1.0]]).unwrap()
}

#[test]
fn sheared_square_polar_grows_strictly() {
    let k1 = sheared_square(0.7);
    let k2 = classical_polar(&k1).unwrap();
    let sym = steiner_symmetrize(&k1, 1).unwrap();
    let k2_new = classical_polar(&sym).unwrap();
    assert!((area(&sym) - area(&k1)).abs() < 1e-12);
    assert!(area(&k2_new) > area(&k2) + 1e-3, "{} vs {}", area(&k2_new), area(&k2));
}

#[test]
fn unconditional_tuple_is_a_fixed_point() {
    let params = PolarityParams::new(2, 2).unwrap();
    let tuple = vec![SymmetricPolytope::cube(2, 1.0), SymmetricPolytope::cross_polytope(2, 1.0)];
    let chain = reduction_chain(tuple, &params, 5, 3, &mut rng_for(0, 0)).unwrap();
    assert!(chain.steps.iter().all(|s| s.rel_change().abs() < 1e-9));
    assert!((chain.final_product - 8.0).abs() < 1e-9);
}

#[test]
fn three_slot_chain_is_monotone() {
    let mut cfg = Config::default();
    cfg.symmetrize.j = 3;
    cfg.symmetrize.k = 3;
    cfg.symmetrize.chains = 4;
    let r = symmetrize::cmd_symmetrize_experiment(&cfg).unwrap();
    assert_eq!(r.summary.passed, 4, "{:?}", r.summary);
    assert!(r.summary.aggregates["min_rel_change"] >= -1e-9);
}

#[test]
fn interval_tuples_are_equality_cases() {
    let mut cfg = Config::default();
    let s = &mut cfg.verify_santalo;
    (s.case, s.n, s.j, s.k, s.tuples) = (SantaloCase::JEqualsK, 1, 3, 3, 10);
    let r = santalo::cmd_verify_santalo(&cfg).unwrap();
    for c in &r.cases {
        assert!((c.values["ratio"] - 1.0).abs() < 1e-12, "{}", c.values["ratio"]);
    }
}

#[test]
fn general_case_is_reported_not_asserted() {
    let mut cfg = Config::default();
    let s = &mut cfg.verify_santalo;
    (s.case, s.j, s.k, s.tuples) = (SantaloCase::General, 2, 3, 10);
    let r = santalo::cmd_verify_santalo(&cfg).unwrap();
    assert!(r.cases.iter().all(|c| c.verdict == Verdict::Reported && !c.asserted));
    assert!(r.summary.aggregates["max_ratio"] <= r.summary.aggregates["bound_constant"]);
}

#[test]
fn search_refuses_blocked_and_proved_parameters() {
    let mut cfg = Config::default();
    cfg.search.j = 1;
    let e = search::cmd_search_counterexample(&cfg).unwrap_err();
    assert!(e.to_string().contains("slab"));
    cfg.search.j = 3;
    assert!(search::cmd_search_counterexample(&cfg).is_err());
}

#[test]
fn search_from_the_ball_tuple_stays_below_one() {
    let mut cfg = Config::default();
    cfg.search.start = jsantalo_harness::config::SearchStart::Ball;
    cfg.search.restarts = 1;
    cfg.search.steps = 300;
    let r = search::cmd_search_counterexample(&cfg).unwrap();
    let c = &r.cases[0];
    assert!(c.values["start_ratio"] > 0.95 && c.values["start_ratio"] <= 1.0);
    assert!(c.values["best_ratio"] <= 1.0 + 1e-9);
    assert_eq!(r.summary.candidates, 0);
}

#[test]
fn indicator_lifts_match_body_verdicts() {
    let mut cfg = Config::default();
    let f = &mut cfg.functional;
    (f.exponential, f.smooth, f.ball, f.tuples) = (false, false, false, 3);
    let r = functional::cmd_functional_suite(&cfg).unwrap();
    assert_eq!(r.cases.len(), 6);
    for c in &r.cases {
        assert_eq!(c.verdict, Verdict::Pass, "{}", c.id);
        assert_eq!(c.values["body_pass"], c.values["function_pass"]);
    }
    assert!(r.cases.iter().any(|c| c.values["body_pass"] == 0.0), "inflated polars must fail");
}

#[test]
fn config_rejects_unknown_keys_and_applies_sections() {
    let cfg = Config::from_toml("seed = 7\n[search]\nsteps = 12\n").unwrap();
    assert_eq!((cfg.seed, cfg.search.steps, cfg.search.k), (7, 12, 3));
    assert!(Config::from_toml("[search]\nstep_count = 1\n").is_err());
}

#[test]
fn same_seed_gives_the_same_hash() {
    let mut cfg = Config::default();
    cfg.verify_santalo.tuples = 8;
    let a = santalo::cmd_verify_santalo(&cfg).unwrap();
    let b = santalo::cmd_verify_santalo(&cfg).unwrap();
    assert_eq!(a.hash, b.hash);
    cfg.seed = 1;
    assert_ne!(santalo::cmd_verify_santalo(&cfg).unwrap().hash, a.hash);
}
