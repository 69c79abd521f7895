use proptest::prelude::*;

use llp::conditions::{
    alpha_bounds, common_direction, green_stability_vector, lemma_lb_check, model1_check, q_interval,
    DirectionStrategy, QuadrantInterval,
};
use llp::harness::{run_ensemble, ExperimentConfig};
use llp::llp::{red_probability, AgentSpec, CostKind, StepSize, World};
use llp::model::{Action, LoadBalancingParams, ModelSpec, QueueState, Vec2};
use llp::renewal::{estimate_alpha, estimate_drift};

fn finite_vec() -> impl Strategy<Value = Vec2> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| Vec2::new(a, b))
}

fn lb_params() -> impl Strategy<Value = LoadBalancingParams> {
    (0.05f64..5.0, 0.01f64..3.0, 0.01f64..3.0, 0.05f64..30.0, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(
        |(lambda, mu1, mu2, mu_tilde, p_r, p_g)| LoadBalancingParams { lambda, mu1, mu2, mu_tilde, p_r, p_g },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn green_vector_is_strictly_stabilizing(a in finite_vec(), b in finite_vec(), c in finite_vec()) {
        if let Some(v) = green_stability_vector(a, b, c) {
            prop_assert!(v.x1 >= 0.0 && v.x2 >= 0.0);
            prop_assert!(a.dot(v) < 0.0 && b.dot(v) < 0.0 && c.dot(v) < 0.0);
        }
    }

    #[test]
    fn maximize_dominates_fixed_directions(dr in finite_vec(), dg in finite_vec()) {
        prop_assume!(dr.norm() > 1e-6 && dg.norm() > 1e-6);
        let best = common_direction(dr, dg, DirectionStrategy::Maximize).unwrap().map_or(0.0, |d| d.rho);
        for s in [DirectionStrategy::FixedAxis1, DirectionStrategy::FixedDiagonal] {
            if let Some(d) = common_direction(dr, dg, s).unwrap() {
                prop_assert!(best >= d.rho - 1e-8, "{best} < {}", d.rho);
            }
        }
    }

    #[test]
    fn q_windows_are_ordered(a0 in 0.0f64..1.0, width in 0.0f64..1.0, rho in 1e-3f64..1.0) {
        let quadrant = QuadrantInterval { alpha0: a0, alpha1: (a0 + width).min(1.0) };
        if let Some(w) = q_interval(quadrant, rho).unwrap() {
            prop_assert!(0.0 <= w.q0 && w.q0 < w.q1 && w.q1 <= 1.0);
        }
    }

    #[test]
    fn alpha_bounds_monotone(q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0, rho in 1e-6f64..=1.0) {
        let (lo, hi) = (q1.min(q2), q1.max(q2));
        let (a, b) = alpha_bounds(lo, rho);
        let (c, d) = alpha_bounds(hi, rho);
        prop_assert!(a <= b && c <= d);
        prop_assert!(a <= c && b <= d);
    }

    #[test]
    fn drift_point_is_mean_increment(steps in prop::collection::vec(0usize..4, 1..200)) {
        let units = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        let mut x = QueueState::ORIGIN;
        let mut states = vec![x];
        let mut sum = (0i64, 0i64);
        for k in &steps {
            let (a, b) = units[*k];
            x = QueueState::new(x.x1 + a, x.x2 + b);
            sum = (sum.0 + a, sum.1 + b);
            states.push(x);
        }
        let d = estimate_drift(&states, None).unwrap();
        let h = steps.len() as f64;
        prop_assert_eq!(d.point, Vec2::new(sum.0 as f64 / h, sum.1 as f64 / h));
    }

    #[test]
    fn red_probability_is_a_probability(eps in 0.0f64..=1.0, r in -10.0f64..10.0, g in -10.0f64..10.0) {
        let a = AgentSpec::q_learning(eps, 0.5, StepSize::Constant(0.1), CostKind::LocalDelta);
        let p = red_probability(&a, [r, g]);
        prop_assert!(p >= eps / 2.0 - 1e-15 && p <= 1.0 - eps / 2.0 + 1e-15, "{p}");
    }

    #[test]
    fn alpha_estimate_in_unit_interval(reds in prop::collection::vec(any::<bool>(), 1..100)) {
        let actions: Vec<Action> = reds.iter().map(|r| if *r { Action::Red } else { Action::Green }).collect();
        let (a, se) = estimate_alpha(&actions).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && se >= 0.0);
    }
}

#[test]
fn lemma_implies_conditions_on_random_parameters() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;

    let mut runner = TestRunner::deterministic();
    let strategy = lb_params();
    let mut passes = 0;
    for _ in 0..10_000 {
        let p = strategy.new_tree(&mut runner).unwrap().current();
        let lemma = lemma_lb_check(&p).unwrap();
        if lemma.all_pass {
            passes += 1;
            let r = model1_check(&ModelSpec::LoadBalancing(p), DirectionStrategy::FixedAxis1).unwrap();
            assert!(r.all_hold(), "lemma passes but conditions fail for {p:?}: {r:?}");
        }
    }
    assert!(passes > 0);
}

#[test]
fn lemma_implies_conditions_near_reference() {
    // uniform sampling rarely satisfies all six inequalities; sample around
    // the reference point as well
    let base = LoadBalancingParams::REFERENCE;
    let mut passes = 0;
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut unif = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..10_000 {
        let jitter = |v: f64, u: f64| v * (0.7 + 0.6 * u);
        let p = LoadBalancingParams {
            lambda: jitter(base.lambda, unif()),
            mu1: jitter(base.mu1, unif()),
            mu2: jitter(base.mu2, unif()),
            mu_tilde: jitter(base.mu_tilde, unif()),
            p_r: jitter(base.p_r, unif()).min(1.0),
            p_g: jitter(base.p_g, unif()).min(1.0),
        };
        if lemma_lb_check(&p).unwrap().all_pass {
            passes += 1;
            let r = model1_check(&ModelSpec::LoadBalancing(p), DirectionStrategy::FixedAxis1).unwrap();
            assert!(r.all_hold(), "counterexample {p:?}");
        }
    }
    assert!(passes > 1000, "{passes}");
}

#[test]
fn alpha_within_bounds_for_agents_on_free_world() {
    let world = World::new(ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE), true);
    let rho = world.model.interior_drift(Action::Red).unwrap().x1;
    let agents = [
        AgentSpec::q_learning(0.1, 0.1, StepSize::Constant(0.2), CostKind::LocalDelta),
        AgentSpec::q_learning(0.5, 0.9, StepSize::Harmonic, CostKind::LocalDelta),
        AgentSpec::Coin { q: 0.3 },
        AgentSpec::FixedAction { action: Action::Green },
    ];
    for (k, agent) in agents.into_iter().enumerate() {
        let cfg = ExperimentConfig::new(world.clone(), agent, 4000, 40, 90 + k as u64);
        let per = llp::harness::map_ensemble(&cfg, |_, t| Ok(estimate_alpha(&t.actions())?.0)).unwrap();
        let n = per.len() as f64;
        let mean = per.iter().sum::<f64>() / n;
        let se = (per.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let (lo, hi) = alpha_bounds(agent.first_visit_red_probability(), rho);
        assert!(mean >= lo - 4.0 * se && mean <= hi + 4.0 * se, "{agent:?}: {mean} not in [{lo}, {hi}]");
    }
}

#[test]
fn doubling_trajectories_shrinks_standard_errors() {
    let world = World::new(ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE), false);
    let agent = AgentSpec::q_learning(0.1, 0.1, StepSize::Constant(0.2), CostKind::LocalDelta);
    let small = run_ensemble(&ExperimentConfig::new(world.clone(), agent, 2000, 200, 5)).unwrap();
    let large = run_ensemble(&ExperimentConfig::new(world, agent, 2000, 400, 6)).unwrap();
    let ratios: Vec<f64> = (1000..=2000).map(|n| large.se_l1[n] / small.se_l1[n]).collect();
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let target = std::f64::consts::FRAC_1_SQRT_2;
    assert!((avg - target).abs() <= 0.1, "{avg}");
}
