//! Region-dependent jump laws of the load-balancing model.

use llp::model::{free_jump_law, jump_law, Action, LoadBalancingParams, ModelSpec, QueueState};

fn main() -> llp::Result<()> {
    let model = ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE);
    let states = [QueueState::new(0, 0), QueueState::new(4, 0), QueueState::new(0, 4), QueueState::new(4, 4)];
    for x in states {
        for a in Action::ALL {
            let law = jump_law(&model, x, a)?;
            let parts: Vec<String> =
                law.entries().iter().map(|(s, p)| format!("({:+},{:+}):{p:.4}", s.dx1, s.dx2)).collect();
            println!("x=({},{}) {}  {}", x.x1, x.x2, a.letter(), parts.join(" "));
        }
    }
    // the free world uses the interior law everywhere
    let d = free_jump_law(&model, Action::Red)?.drift();
    println!("free red drift ({:.4}, {:.4})", d.x1, d.x2);
    Ok(())
}
