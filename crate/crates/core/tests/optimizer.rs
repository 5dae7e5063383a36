mod common;

use std::f64::consts::FRAC_PI_2;

use fastgate::ld::LdSolver;
use fastgate::optimize::{pareto_select, run_search, sensitivity, Jitter};
use fastgate::presets;

#[test]
fn search_is_byte_deterministic_across_pool_sizes() {
    let space = common::small_space();
    let (a, b) = common::search_outputs(&space, 6, 11);
    assert_eq!(a, b);
    let (c, _) = common::search_outputs(&space, 6, 11);
    assert_eq!(a, c);
}

#[test]
fn different_seeds_explore_differently() {
    let space = common::small_space();
    let (a, _) = common::search_outputs(&space, 4, 1);
    let (b, _) = common::search_outputs(&space, 4, 2);
    assert_ne!(a, b);
}

#[test]
fn returned_solutions_respect_constraints() {
    let space = common::small_space();
    let set = run_search(&space, 6, 5).unwrap();
    assert!(!set.solutions.is_empty());
    for c in &set.solutions {
        let cfg = space.config_for(c.pulse.clone()).unwrap();
        let phase = LdSolver::new(&cfg).mean_entangling_phase(c.pulse.omega_peak);
        assert!((phase.abs() - FRAC_PI_2).abs() < 1e-6, "{phase}");
        assert!((c.gate_time() - space.gate_time).abs() < 1e-15);
        assert!(c.pulse.nu >= space.nu_range[0] && c.pulse.nu <= space.nu_range[1]);
        let max = c.pulse.segments.iter().map(|s| s.amplitude).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert!(c.pulse.segments.iter().all(|s| s.duration >= space.min_duration.unwrap_or(space.edge_time) - 1e-18));
        assert!(c.sensitivity.is_some());
    }
}

#[test]
fn impossible_screen_leaves_nothing() {
    let mut space = common::small_space();
    space.epsilon_t = 1e-12;
    let set = run_search(&space, 3, 0).unwrap();
    assert_eq!(set.screened, 0);
    assert!(set.solutions.is_empty());
}

#[test]
fn pareto_front_of_one_is_itself() {
    let space = common::small_space();
    let set = run_search(&space, 2, 3).unwrap();
    let one = vec![set.solutions[0].clone()];
    assert_eq!(pareto_select(&one), one);
}

#[test]
fn sensitivity_is_reproducible_and_positive() {
    let cfg = presets::fastest();
    let j = Jitter { draws: 20, ..Jitter::default() };
    let a = sensitivity(&cfg, &j).unwrap();
    assert_eq!(a, sensitivity(&cfg, &j).unwrap());
    assert!(a > 0.0);
}
