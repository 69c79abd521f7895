//! Renewal structure of a free coin walk: certified records, cycle gaps and
//! the drift estimate.

use llp::harness::ExperimentConfig;
use llp::llp::{AgentSpec, World};
use llp::model::{LoadBalancingParams, ModelSpec, Vec2};
use llp::renewal::{cycle_stats, default_margin, estimate_drift, project, record_times};

fn main() -> llp::Result<()> {
    let world = World::new(ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE), true);
    let horizon = 100_000;
    let cfg = ExperimentConfig::new(world, AgentSpec::Coin { q: 0.5 }, horizon, 1, 3);
    let states = cfg.trajectory(0)?.state_path();

    let path = project(&states, Vec2::new(1.0, 0.0))?;
    let records = record_times(&path, default_margin(horizon));
    let d = estimate_drift(&states, Some(&records))?;
    println!("certified records {}", records.certified.len());
    println!("drift ({:.4}, {:.4})  naive se ({:.4}, {:.4})", d.point.x1, d.point.x2, d.naive_se.x1, d.naive_se.x2);
    if let Some(hw) = d.per_cycle_ci {
        println!("cycle-ratio half widths ({:.4}, {:.4})", hw.x1, hw.x2);
    }
    let c = cycle_stats(&states, &records)?;
    let longest = c.gaps.iter().max().copied().unwrap_or(0);
    println!("cycles {}  longest gap {longest}", c.gaps.len());
    if let Some(t) = c.tail_fit {
        println!("log-survival slope {:.4}  r2 {:.3}  levels {}", t.slope, t.r_squared, t.levels);
    }
    Ok(())
}
