//! Runs one experiment or a preset grid and writes the summary as CSV or JSON.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 infeasible preset,
//! 1 anything else.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anticoord::experiment::{emit, execute, write_summary_csv, OutputFormat, RunConfig};
use clap::Parser;

#[derive(Parser, Debug)]
#[command(version, about = "Simulate repeated allocation games")]
struct Cli {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// canony, canony-star, exp3, cexp3, exp4 or exp4p
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    resources: Option<usize>,
    /// Defaults to ceil(agents / resources).
    #[arg(long)]
    contexts: Option<usize>,
    #[arg(long)]
    backoff: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    collision_cost: Option<f64>,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    t_ind: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// table1, table2, table3, fig1, fig2 or fig3
    #[arg(long)]
    preset: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Summary file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Expert set of exp4 and exp4p: fair or unrestricted.
    #[arg(long)]
    experts: Option<String>,
    /// Skip preset grid points with more agents.
    #[arg(long)]
    max_agents: Option<usize>,
}

impl Cli {
    fn flags(self) -> RunConfig {
        RunConfig {
            algorithm: self.algorithm,
            agents: self.agents,
            resources: self.resources,
            contexts: self.contexts,
            backoff: self.backoff,
            collision_cost: self.collision_cost,
            discount: self.discount,
            horizon: self.horizon,
            t_ind: self.t_ind,
            runs: self.runs,
            seed: self.seed,
            preset: self.preset,
            format: self.format,
            out: self.out,
            experts: self.experts,
            max_agents: self.max_agents,
        }
    }
}

fn run(cli: Cli) -> anticoord::Result<()> {
    let base = match &cli.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    let config = base.overridden_by(cli.flags());
    let plan = config.plan()?;
    let format = config.output_format()?;
    let rows = execute(&plan)?;
    match &config.out {
        Some(path) => {
            emit(&rows, format, path)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match format {
                OutputFormat::Csv => write_summary_csv(&rows, &mut lock)?,
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut lock, &rows)?;
                    lock.write_all(b"\n")?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
