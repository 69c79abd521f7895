//! Statistical checks of the estimators against closed-form targets.

use llp::harness::{green_reference, map_ensemble, ExperimentConfig, Setting};
use llp::llp::{AgentSpec, World};
use llp::model::{Action, LoadBalancingParams, ModelSpec, Vec2};
use llp::renewal::{estimate_alpha, estimate_drift, success_time, ConeSpec};

fn lb_world(free: bool) -> World {
    World::new(ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE), free)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn coin_alpha_matches_bias() {
    let cfg = ExperimentConfig::new(lb_world(true), AgentSpec::Coin { q: 0.3 }, 20_000, 1, 404);
    let (a, se) = estimate_alpha(&cfg.trajectory(0).unwrap().actions()).unwrap();
    assert!((a - 0.3).abs() <= 4.0 * se, "{a} ± {se}");
}

#[test]
fn green_drift_on_free_world() {
    let cfg = ExperimentConfig::new(lb_world(true), AgentSpec::FixedAction { action: Action::Green }, 20_000, 40, 413);
    let pts = map_ensemble(&cfg, |_, t| Ok(estimate_drift(&t.state_path(), None)?.point)).unwrap();
    let (m1, s1) = mean_se(&pts.iter().map(|p| p.x1).collect::<Vec<_>>());
    let (m2, s2) = mean_se(&pts.iter().map(|p| p.x2).collect::<Vec<_>>());
    let target = Vec2::new(0.564103, -0.025641);
    assert!((m1 - target.x1).abs() <= 3.0 * s1 + 1e-6, "{m1} ± {s1}");
    assert!((m2 - target.x2).abs() <= 3.0 * s2 + 1e-6, "{m2} ± {s2}");
}

#[test]
fn success_times_exist_in_most_free_runs() {
    let mut cfg = Setting::I.config(10_000, 40, 395);
    cfg.world = lb_world(true);
    let cone = ConeSpec::new(Vec2::new(1.0, 1.0).normalized().unwrap(), true).unwrap();
    let found = map_ensemble(&cfg, |_, t| Ok(success_time(&t.state_path(), &cone, 1000)?.is_some())).unwrap();
    let k = found.iter().filter(|f| **f).count();
    assert!(2 * k > found.len(), "{k} of {}", found.len());
}

#[test]
fn green_reference_has_small_batch_error() {
    let cfg = Setting::I.config(100_000, 50, 508).green();
    let g = green_reference(&cfg).unwrap();
    let se = g.se.unwrap();
    assert!(g.estimate > 0.0 && se < 0.1 * g.estimate, "{} ± {se}", g.estimate);
}
