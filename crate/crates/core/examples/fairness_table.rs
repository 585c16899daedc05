//! Jain index of every learner at R = K = 2 and 4.
//!
//! Usage: `cargo run --release --example fairness_table -- [runs] [horizon]`

use anticoord::experiment::{run_experiment, Algorithm, ExperimentSpec};
use anticoord::GameConfig;

fn main() -> anticoord::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let horizon: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(100_000);

    println!("{:<12} {:>8} {:>8}", "algorithm", "R=2", "R=4");
    for algorithm in [Algorithm::Canony, Algorithm::Exp3, Algorithm::Cexp3, Algorithm::Exp4, Algorithm::Exp4P] {
        let mut cells = Vec::new();
        for r in [2, 4] {
            let game = GameConfig::new(r * r, r, horizon, 0)?;
            let report = run_experiment(&ExperimentSpec::new(game, algorithm).with_runs(runs))?;
            cells.push(report.jain.map_or("-".to_string(), |j| format!("{j:.3}")));
        }
        println!("{:<12} {:>8} {:>8}", algorithm.name(), cells[0], cells[1]);
    }
    Ok(())
}
