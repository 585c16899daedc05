//! The four bandit learners on one small game, with a time series of
//! utilization written as CSV.

use anticoord::experiment::{emit, run_specs, Algorithm, ExperimentSpec, OutputFormat, SeriesMode};
use anticoord::GameConfig;

fn main() -> anticoord::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bandits.csv".into());
    let game = GameConfig::new(16, 4, 50_000, 11)?;
    let specs: Vec<_> = [Algorithm::Canony, Algorithm::Exp3, Algorithm::Cexp3, Algorithm::Exp4, Algorithm::Exp4P]
        .into_iter()
        .map(|a| ExperimentSpec::new(game, a).with_runs(4).with_series(SeriesMode::Log { per_decade: 10 }))
        .collect();
    let rows = run_specs(&specs)?;
    for row in &rows {
        let r = &row.report;
        println!(
            "{:<8} jain {:.3}  payoff {:>8.3}  utilization {:.3}  90% reached in {}/{} runs",
            row.algorithm.name(),
            r.jain.unwrap_or(f64::NAN),
            r.payoff_mean,
            r.utilization_final,
            r.runs_aggregated - r.unconverged_runs,
            r.runs_aggregated,
        );
    }
    for path in emit(&rows, OutputFormat::Csv, out.as_ref())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
