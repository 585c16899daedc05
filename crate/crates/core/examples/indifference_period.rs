//! Payoffs with an undiscounted prefix of length T_ind, and the fraction of
//! populations still unsettled when it ends.

use anticoord::experiment::{run_experiment, Algorithm, ExperimentSpec};
use anticoord::theory::{indifference_tail, BoundParams};
use anticoord::GameConfig;

fn main() -> anticoord::Result<()> {
    let (n, r) = (16usize, 4usize);
    let t_ind = (r * n * n.div_ceil(r)) as u64;
    for algorithm in [Algorithm::Canony, Algorithm::CanonyStar, Algorithm::Cexp3] {
        for t in [0, t_ind] {
            let game = GameConfig::new(n, r, 200_000, 0)?.with_indifference_period(t);
            let mut spec = ExperimentSpec::new(game, algorithm).with_runs(8);
            spec.sim.payoff_tolerance = Some(1e-9);
            let rep = run_experiment(&spec)?;
            println!("{:<12} T_ind={t:<5} payoff {:>9.3} ± {:.3}", algorithm.name(), rep.payoff_mean, rep.payoff_std);
        }
    }

    for r in [2u64, 4, 8] {
        let tail = indifference_tail(&BoundParams::new(r * r, r), 200, 1.0, 0)?;
        println!(
            "R={r}: T_ind={} unsettled {:.3} (bound {:.3})",
            tail.t_ind, tail.empirical_tail, tail.theoretical_tail
        );
    }
    Ok(())
}
