use llp::harness::lyapunov_probe;
use llp::model::{LoadBalancingParams, ModelSpec, Vec2};

fn main() -> llp::Result<()> {
    let model = ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE);
    for v in [Vec2::new(0.04, 1.0), Vec2::new(1.0, 1.0), Vec2::new(0.2, 1.0)] {
        let r = lyapunov_probe(&model, v, 50)?;
        println!(
            "v=({:.2}, {:.2}) interior drift {:+.4}  feasible {}  c {:?}  B {:?}",
            v.x1, v.x2, r.interior_f_drift, r.feasible, r.c, r.b
        );
    }
    Ok(())
}
