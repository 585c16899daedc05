//! Sixteen convention agents on four resources: run one population until
//! it settles and print the schedule it converged to.

use anticoord::sim::{run_instance, AgentKind, SimOptions};
use anticoord::GameConfig;

fn main() -> anticoord::Result<()> {
    let cfg = GameConfig::new(16, 4, 10_000, 7)?;
    let opts = SimOptions::default();
    let run = run_instance(&cfg, AgentKind::Convention, &opts)?;

    println!("N={} R={} K={}", cfg.n_agents, cfg.n_resources, cfg.context_size);
    match run.convergence_full {
        Some(t) => println!("converged at step {t}"),
        None => println!("not converged within {} steps", cfg.horizon),
    }
    println!("steps simulated: {} of {}", run.steps_simulated, cfg.horizon);
    println!("final utilization: {:.3}", run.final_utilization);

    let strategies = run.strategies.as_deref().unwrap_or_default();
    for (agent, s) in strategies.iter().enumerate() {
        let claims: Vec<String> = s.claims().map(|(k, r)| format!("k{k}->r{r}")).collect();
        println!("agent {agent:2}: {}", claims.join(" "));
    }
    Ok(())
}
