//! Hitting probabilities and times of the back-off chains, exact and by
//! Monte Carlo, plus the convergence bound against simulation.

use anticoord::sim::convention_convergence_step;
use anticoord::theory::{
    build_chain, convergence_bound, hitting_probability, hitting_time, hitting_probability_lower_bound,
    simulate_hitting_probability, simulate_hitting_time, BoundParams, ChainVariant, DtmcSpec,
};
use anticoord::GameConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anticoord::Result<()> {
    let p = 0.5;
    let y = DtmcSpec::new(ChainVariant::Y, 6, p)?;
    let x = DtmcSpec::new(ChainVariant::X, 6, p)?;
    let m = build_chain(&y)?;
    println!("Y chain, n=6, p={p}: {}x{} transition matrix", m.nrows(), m.ncols());

    let h = hitting_probability(&y, &[1])?;
    let k = hitting_time(&x, &[1])?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>3} {:>10} {:>16} {:>10} {:>16}", "i", "h_i", "h_i (mc)", "k_i", "k_i (mc)");
    for i in 2..=6 {
        let hm = simulate_hitting_probability(&y, &[1], i, 20_000, &mut rng)?;
        let km = simulate_hitting_time(&x, &[1], i, 20_000, 10_000, &mut rng)?;
        println!(
            "{i:>3} {:>10.5} {:>9.5}±{:<6.4} {:>10.4} {:>9.4}±{:<6.4}",
            h[i], hm.mean, hm.std_err, k[i], km.mean, km.std_err
        );
    }
    println!("lower bound on h_i: {:.5}", hitting_probability_lower_bound(p));

    println!();
    println!("{:>4} {:>4} {:>12} {:>12}", "R", "N", "mean steps", "bound");
    for r in [2u64, 4, 8] {
        let n = r * r;
        let mut total = 0u64;
        let runs = 32;
        for seed in 0..runs {
            let cfg = GameConfig::new(n as usize, r as usize, 1_000_000, seed)?;
            total += convention_convergence_step(&cfg, 1_000_000)?.unwrap_or(1_000_000);
        }
        let bound = convergence_bound(&BoundParams::new(n, r));
        println!("{r:>4} {n:>4} {:>12.1} {bound:>12.1}", total as f64 / runs as f64);
    }
    Ok(())
}
