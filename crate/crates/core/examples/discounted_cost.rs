//! Discounted cost of Q-learning against the green policy on the
//! load-balancing reference world.
//!
//! cargo run --release --example discounted_cost -- [n_trajectories] [horizon] [seed]

use llp::harness::{cost_curve, Setting};

fn main() -> llp::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(100) as usize;
    let horizon = args.get(1).copied().unwrap_or(10_000) as usize;
    let seed = args.get(2).copied().unwrap_or(7);
    let grid = [0.9, 0.95, 0.97, 0.99, 0.995];
    let cfg = Setting::I.config(horizon, n, seed);
    let c = cost_curve(&cfg, &grid)?;
    println!("{:>7} {:>12} {:>9} {:>12} {:>12} {:>9} {:>10}", "gamma", "J", "se", "(1-g) J", "J green", "se", "tail bnd");
    for (k, g) in grid.iter().enumerate() {
        println!(
            "{g:>7} {:>12.4} {:>9.4} {:>12.4} {:>12.4} {:>9.4} {:>10.2e}",
            c.mean[k], c.se[k], (1.0 - g) * c.mean[k], c.green_mean[k], c.green_se[k], c.truncation_bound[k]
        );
    }
    Ok(())
}
