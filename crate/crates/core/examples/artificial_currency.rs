//! The monitoring authority run on an artificial currency instead of a
//! success log. Fees decay every episode, and admission matches the quota.

use anticoord::monitor::{episodes_to_halve_fee, CurrencyParams, LedgerMode};
use anticoord::sim::{run_instance, AgentKind, SimOptions};
use anticoord::GameConfig;

fn main() -> anticoord::Result<()> {
    let params = CurrencyParams { initial_cash: 1.0, commission: 0.01, invalidation_interval: None };
    let cfg = GameConfig::new(9, 3, 600, 3)?;
    let opts = SimOptions {
        ledger_mode: LedgerMode::Currency(params),
        record_ledger: true,
        fast_forward: false,
        ..SimOptions::default()
    };
    let run = run_instance(&cfg, AgentKind::Convention, &opts)?;
    let quota = run_instance(&cfg, AgentKind::Convention, &SimOptions::default())?;

    println!("fees halve every {} episodes", episodes_to_halve_fee(params.commission));
    let log = run.ledger_log.as_deref().unwrap_or_default();
    for snap in log.iter().step_by(40) {
        let cash: f64 = snap.balances.iter().sum();
        println!("episode {:>4}: fees {:?} cash in circulation {cash:.4}", snap.episode, round(&snap.fees));
    }
    println!("most successes in one episode: {}", run.ledger_max_successes_per_episode);
    println!("same successes as the quota log: {}", run.successes == quota.successes);
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
