//! Escape from the origin on the reflected reference world: the green policy
//! keeps returning, while agents whose first-visit red probability lies in
//! the transience window drift away.

use llp::conditions::{model1_check, DirectionStrategy};
use llp::harness::{probe_ensemble, ExperimentConfig, Setting};
use llp::llp::{AgentSpec, World};
use llp::model::{Action, LoadBalancingParams, ModelSpec};

fn main() -> llp::Result<()> {
    let model = ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE);
    let w = model1_check(&model, DirectionStrategy::Default)?.q_window.expect("reference has a window");
    println!("window ({:.4}, {:.4})", w.q0, w.q1);
    let world = World::new(model, false);
    let agents = [
        ("green", AgentSpec::FixedAction { action: Action::Green }),
        ("coin 0.5", AgentSpec::Coin { q: 0.5 }),
        ("q-learning", Setting::I.agent()),
    ];
    for (label, agent) in agents {
        let mut cfg = ExperimentConfig::new(world.clone(), agent, 20_000, 100, 5);
        cfg.probe.burn_in = 1000;
        let p = probe_ensemble(&cfg)?;
        println!(
            "{label:<11} q={:.3} escape {:.3} ± {:.3}  mean |X_H| {:.0}",
            agent.first_visit_red_probability(),
            p.escape_fraction,
            p.escape_se,
            p.mean_final_l1
        );
    }
    Ok(())
}
