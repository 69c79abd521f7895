//! One Q-learning trajectory on the reference world, with the visited
//! environment size and the red fraction.

use llp::harness::Setting;
use llp::llp::{run_trajectory_with, RunOptions};
use llp::model::Action;

fn main() -> llp::Result<()> {
    let horizon: usize = std::env::args().nth(1).map_or(10_000, |s| s.parse().expect("horizon"));
    for setting in Setting::ALL {
        let cfg = setting.config(horizon, 1, 11);
        let (t, env) = run_trajectory_with(
            &cfg.world,
            &cfg.agent,
            cfg.x0,
            horizon,
            cfg.seed_of(0),
            RunOptions::default(),
        )?;
        let reds = t.actions().iter().filter(|a| **a == Action::Red).count();
        let x = t.final_state();
        println!(
            "{:<6} X_H=({}, {})  red {:.3}  visited {}",
            setting.label(),
            x.x1,
            x.x2,
            reds as f64 / horizon.max(1) as f64,
            env.len()
        );
    }
    Ok(())
}
