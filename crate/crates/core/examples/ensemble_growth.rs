//! Ensemble mean of |X_n| for the four learning settings, against the green
//! reference.

use llp::harness::{green_reference, run_ensemble, Setting};

fn main() -> llp::Result<()> {
    let (h, n) = (10_000, 100);
    for s in Setting::ALL {
        let r = run_ensemble(&s.config(h, n, 21))?;
        println!(
            "{:<6} E|X_H| {:>9.2} ± {:.2}   slope on [H/2, H] {:.4}",
            s.label(),
            r.mean_l1[h],
            r.se_l1[h],
            r.mean_increment(h / 2, h)
        );
    }
    let g = green_reference(&Setting::I.config(h, n, 21).green())?;
    println!("green   long-run |X| {:.2}  se {:?}", g.estimate, g.se);
    Ok(())
}
