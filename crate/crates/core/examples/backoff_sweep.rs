//! Mean discounted payoff of convention agents across back-off
//! probabilities, next to the analytical optimum.

use anticoord::experiment::{sweep_backoff, PresetOptions};
use anticoord::theory::{backoff_grid_argmin, optimal_backoff};

fn main() -> anticoord::Result<()> {
    let runs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(16);
    let opts = PresetOptions { runs, horizon: Some(20_000), ..PresetOptions::default() };
    let table = sweep_backoff(&opts)?;

    print!("{:>8}", "p");
    for r in &table.resources {
        print!(" {:>9}", format!("R=K={r}"));
    }
    println!();
    for (p, row) in table.backoffs.iter().zip(&table.payoff) {
        print!("{p:>8.4}");
        for v in row {
            print!(" {v:>9.3}");
        }
        println!();
    }
    println!("optimal p = {:.6} (grid search: {:.6})", optimal_backoff(), backoff_grid_argmin(1e-4));
    Ok(())
}
