//! Stability and transience conditions for the two worked models.

use llp::conditions::{lemma_lb_check, lemma_sa_check, model1_check, DirectionStrategy};
use llp::model::{LoadBalancingParams, ModelSpec, ServerAllocationParams};

fn show(label: &str, model: &ModelSpec, strategy: DirectionStrategy) -> llp::Result<()> {
    let r = model1_check(model, strategy)?;
    println!("{label}");
    println!("  d_r = ({:.4}, {:.4})  d_g = ({:.4}, {:.4})", r.drift_red.x1, r.drift_red.x2, r.drift_green.x1, r.drift_green.x2);
    for c in &r.checks {
        println!("  [{}] {:<40} margin {:+.6}", if c.holds { "ok" } else { "--" }, c.label, c.margin);
    }
    match r.q_window {
        Some(w) => println!("  q window ({:.6}, {:.6})", w.q0, w.q1),
        None => println!("  no q window"),
    }
    Ok(())
}

fn main() -> llp::Result<()> {
    let lb = LoadBalancingParams::REFERENCE;
    let lemma = lemma_lb_check(&lb)?;
    println!("load balancing closed-form inequalities hold: {}", lemma.all_pass);
    show("load balancing", &ModelSpec::LoadBalancing(lb), DirectionStrategy::Default)?;

    for (mu, mu_tilde) in [(1.05, 22.0), (1.2, 7.0)] {
        let sa = ServerAllocationParams { lambda: 1.0, mu, mu_tilde };
        let lemma = lemma_sa_check(&sa)?;
        println!(
            "\nserver allocation mu={mu} mu~={mu_tilde}: closed form {} direct window {:?}",
            lemma.all_pass, lemma.direct_window_condition
        );
        show("", &ModelSpec::ServerAllocation(sa), DirectionStrategy::FixedDiagonal)?;
    }
    Ok(())
}
