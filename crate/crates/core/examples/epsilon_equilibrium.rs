//! How close the courteous convention is to a subgame-perfect equilibrium:
//! the payoff ratio bound for several discount factors and the discount
//! needed for a given epsilon.

use anticoord::theory::{delta_for_epsilon, spe_payoff_ratio, BoundParams};

fn main() -> anticoord::Result<()> {
    let mut b = BoundParams::new(16, 4);
    b.expected_convergence = 50.0;
    println!("R=4 K=4 E(X)={}", b.expected_convergence);
    println!("{:>10} {:>12} {:>14} {:>14}", "delta", "ratio", "best response", "courteous");
    for delta in [0.99, 0.999, 0.9999, 0.99999] {
        b.discount = delta;
        let s = spe_payoff_ratio(&b);
        println!("{delta:>10} {:>12.6} {:>14.4} {:>14.4}", s.lower_ratio, s.best_response, s.courteous_lower);
    }

    for eps in [0.1, 0.05, 0.01] {
        b.epsilon = eps;
        match delta_for_epsilon(&b) {
            Ok(d) => println!("epsilon {eps}: delta >= {d:.6}"),
            Err(e) => println!("epsilon {eps}: {e}"),
        }
    }
    Ok(())
}
