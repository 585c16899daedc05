use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::sim::{run_instance, AgentKind, SimOptions};

/// Symbols shared by the convergence and equilibrium bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n_agents: u64,
    pub n_resources: u64,
    pub context_size: u64,
    pub backoff_prob: f64,
    pub discount: f64,
    pub collision_cost: f64,
    /// Expected convergence time `E(X)` in steps.
    pub expected_convergence: f64,
    pub epsilon: f64,
}

impl BoundParams {
    /// `N` agents on `R` resources with `K = ⌈N/R⌉`, `p = 2 - √2`,
    /// `δ = 0.99`, `ζ = -1`.
    pub fn new(n_agents: u64, n_resources: u64) -> Self {
        BoundParams {
            n_agents,
            n_resources,
            context_size: n_agents.div_ceil(n_resources.max(1)),
            backoff_prob: optimal_backoff(),
            discount: 0.99,
            collision_cost: -1.0,
            expected_convergence: 1.0,
            epsilon: 0.01,
        }
    }
}

/// `(K ln K + 2K) R (2 - p) / (2 (1 - p)) ((1/p) ln N + R)`.
pub fn convergence_bound(b: &BoundParams) -> f64 {
    let (n, r, k, p) = (b.n_agents as f64, b.n_resources as f64, b.context_size as f64, b.backoff_prob);
    (k * k.ln() + 2.0 * k) * r * (2.0 - p) / (2.0 * (1.0 - p)) * (n.ln() / p + r)
}

/// `N (ln⌈N/R⌉ + 1)(ln N + R)`, the bound without its back-off factor.
pub fn convergence_order(n_agents: u64, n_resources: u64) -> f64 {
    let n = n_agents as f64;
    let k = n_agents.div_ceil(n_resources) as f64;
    n * (k.ln() + 1.0) * (n.ln() + n_resources as f64)
}

/// `(2 - p) / (2 (1 - p) p)`, the back-off dependence of the bound.
pub fn backoff_objective(p: f64) -> f64 {
    (2.0 - p) / (2.0 * (1.0 - p) * p)
}

/// `2 - √2`.
pub fn optimal_backoff() -> f64 {
    2.0 - std::f64::consts::SQRT_2
}

/// Minimiser of [`backoff_objective`] over the grid `step, 2 step, ... < 1`.
pub fn backoff_grid_argmin(step: f64) -> f64 {
    let points = (1.0 / step).round() as u64;
    (1..points)
        .map(|i| i as f64 * step)
        .min_by(|a, b| backoff_objective(*a).total_cmp(&backoff_objective(*b)))
        .unwrap_or(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeBounds {
    /// `ζ (1 - δ^(E K)) + δ^E`.
    pub lower_ratio: f64,
    /// `1 / (1 - δ^K)`.
    pub best_response: f64,
    /// `(ζ (1 - δ^(E K)) + δ^E) / (1 - δ^K)`.
    pub courteous_lower: f64,
}

pub fn spe_payoff_ratio(b: &BoundParams) -> SpeBounds {
    let (d, k, e, z) = (b.discount, b.context_size as f64, b.expected_convergence, b.collision_cost);
    let lower_ratio = z * (1.0 - d.powf(e * k)) + d.powf(e);
    let episode = 1.0 - d.powf(k);
    SpeBounds { lower_ratio, best_response: 1.0 / episode, courteous_lower: lower_ratio / episode }
}

/// Grid resolution of [`delta_for_epsilon`].
pub const DELTA_GRID_STEP: f64 = 1e-6;

/// Smallest `δ₀` on the default grid with ratio `>= 1 - ε` for every grid
/// point in `[δ₀, 1)`.
pub fn delta_for_epsilon(b: &BoundParams) -> Result<f64> {
    delta_for_epsilon_on_grid(b, DELTA_GRID_STEP)
}

pub fn delta_for_epsilon_on_grid(b: &BoundParams, step: f64) -> Result<f64> {
    if !(b.epsilon > 0.0 && b.epsilon <= 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon {} not in (0, 1]", b.epsilon)));
    }
    let points = (1.0 / step).round() as u64;
    let goal = 1.0 - b.epsilon;
    let ratio = |i: u64| spe_payoff_ratio(&BoundParams { discount: i as f64 * step, ..*b }).lower_ratio;
    // scan downwards from the top of the grid
    let mut lowest_ok = None;
    for i in (1..points).rev() {
        if ratio(i) >= goal {
            lowest_ok = Some(i);
        } else {
            break;
        }
    }
    lowest_ok
        .map(|i| i as f64 * step)
        .ok_or_else(|| Error::GridLimit(format!("epsilon {} needs delta above 1 - {step}", b.epsilon)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndifferenceTail {
    pub t_ind: u64,
    /// Fraction of runs not converged within `t_ind` steps.
    pub empirical_tail: f64,
    /// `(ln⌈N/R⌉ + 1)(ln N + R) / N`.
    pub theoretical_tail: f64,
    pub runs: usize,
}

/// Runs `runs` convention populations (seeds `seed + i`) and counts those
/// not converged within `T_ind = c R N K`.
pub fn indifference_tail(b: &BoundParams, runs: usize, c: f64, seed: u64) -> Result<IndifferenceTail> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let t_ind = (c * (b.n_resources * b.n_agents * b.context_size) as f64).round() as u64;
    let base = GameConfig::custom(
        b.n_agents as usize,
        b.n_resources as usize,
        b.context_size as usize,
        b.collision_cost,
        b.discount,
        b.backoff_prob,
        t_ind.max(1),
        seed,
    )?;
    let opts = SimOptions { stop_at_convergence: true, ..SimOptions::default() };
    let converged: Vec<bool> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = base.with_seed(seed.wrapping_add(i));
            run_instance(&cfg, AgentKind::Convention, &opts).map(|r| r.convergence_full.is_some())
        })
        .collect::<Result<_>>()?;
    let missed = converged.iter().filter(|c| !**c).count();
    let n = b.n_agents as f64;
    let k = b.n_agents.div_ceil(b.n_resources) as f64;
    Ok(IndifferenceTail {
        t_ind,
        empirical_tail: missed as f64 / runs as f64,
        theoretical_tail: (k.ln() + 1.0) * (n.ln() + b.n_resources as f64) / n,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u64, r: u64, k: u64) -> BoundParams {
        BoundParams { context_size: k, ..BoundParams::new(n, r) }
    }

    #[test]
    fn bound_factor_at_single_context() {
        let b = params(1, 1, 1);
        let p = b.backoff_prob;
        // K ln K + 2K = 2, N = 1 so ln N = 0
        let expect = 2.0 * (2.0 - p) / (2.0 * (1.0 - p)) * 1.0;
        assert!((convergence_bound(&b) - expect).abs() < 1e-12);
    }

    #[test]
    fn bound_matches_order_up_to_backoff_factor() {
        // With K = ⌈N/R⌉ and N = R K the ratio to N(ln K + 1)(ln N + R)
        // lies in [f(p), 2 f(p) / p] with f(p) = (2 - p) / (2 (1 - p)).
        for p in [0.1, 0.3, optimal_backoff(), 0.8] {
            let f = (2.0 - p) / (2.0 * (1.0 - p));
            for r in [1u64, 2, 4, 16] {
                for k in [1u64, 2, 8, 64] {
                    let b = BoundParams { backoff_prob: p, ..BoundParams::new(r * k, r) };
                    let ratio = convergence_bound(&b) / convergence_order(r * k, r);
                    assert!(ratio >= f - 1e-12 && ratio <= 2.0 * f / p + 1e-12, "{ratio}");
                }
            }
        }
    }

    #[test]
    fn bound_is_monotone() {
        let base = params(64, 4, 16);
        let v = convergence_bound(&base);
        assert!(convergence_bound(&params(128, 4, 16)) > v);
        assert!(convergence_bound(&params(64, 8, 16)) > v);
        assert!(convergence_bound(&params(64, 4, 32)) > v);
    }

    #[test]
    fn backoff_sweep_of_bound_is_minimised_near_optimum() {
        // The additive R term vanishes against ln N / p for huge N.
        let step = 0.01;
        let best = (1..100)
            .map(|i| i as f64 * step)
            .min_by(|a, b| {
                let f = |p: f64| convergence_bound(&BoundParams { backoff_prob: p, ..params(u64::MAX, 1, 1) });
                f(*a).total_cmp(&f(*b))
            })
            .unwrap();
        assert!((best - optimal_backoff()).abs() <= step);
    }

    #[test]
    fn optimal_backoff_examples() {
        assert!((optimal_backoff() - 0.585_786_437_6).abs() < 1e-10);
        assert!((backoff_grid_argmin(1e-4) - optimal_backoff()).abs() <= 1e-4);
        let best = backoff_objective(optimal_backoff());
        assert!(best < backoff_objective(0.5) && best < backoff_objective(0.75));
    }

    #[test]
    fn spe_examples() {
        let b = BoundParams { collision_cost: 0.0, expected_convergence: 30.0, ..params(16, 4, 4) };
        assert!((spe_payoff_ratio(&b).lower_ratio - 0.99f64.powf(30.0)).abs() < 1e-15);
        let b = BoundParams { expected_convergence: 50.0, ..params(16, 4, 4) };
        let s = spe_payoff_ratio(&b);
        let direct = -(1.0 - 0.99f64.powi(200)) + 0.99f64.powi(50);
        assert!((s.lower_ratio - direct).abs() < 1e-12);
        assert!((s.lower_ratio + 0.261_013).abs() < 1e-5);
        assert!((s.courteous_lower / s.best_response - s.lower_ratio).abs() < 1e-12);
        // best response equals its truncated geometric sum
        let truncated: f64 = (0..20_000).map(|i| 0.99f64.powi(4 * i)).sum();
        assert!((s.best_response - truncated).abs() < 1e-9);
    }

    #[test]
    fn spe_ratio_near_one_for_patient_agents() {
        // First-order expansion: 1 - ratio ≈ E (K + 1)(1 - δ).
        for e in [1.0, 10.0, 100.0, 1000.0] {
            for k in [1u64, 4, 16] {
                let b = BoundParams {
                    discount: 1.0 - 1e-6,
                    expected_convergence: e,
                    ..params(16, 4, k)
                };
                let gap = 1.0 - spe_payoff_ratio(&b).lower_ratio;
                let first_order = e * (k as f64 + 1.0) * 1e-6;
                assert!((gap - first_order).abs() <= first_order * first_order + 1e-12, "{gap}");
            }
        }
    }

    #[test]
    fn spe_ratio_increases_with_discount() {
        // for small δ the ratio rounds to ζ
        let mut prev = f64::NEG_INFINITY;
        for i in 900..1000 {
            let b = BoundParams { discount: i as f64 / 1000.0, expected_convergence: 40.0, ..params(16, 4, 4) };
            let r = spe_payoff_ratio(&b).lower_ratio;
            assert!(r > prev);
            prev = r;
        }
    }

    /// Bisection on the (monotone) ratio, snapped up to the grid.
    fn bisect_delta(b: &BoundParams, step: f64) -> f64 {
        let f = |d: f64| spe_payoff_ratio(&BoundParams { discount: d, ..*b }).lower_ratio - (1.0 - b.epsilon);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        (hi / step).ceil() * step
    }

    #[test]
    fn delta_for_epsilon_matches_bisection() {
        let step = 1e-5;
        for (e, eps) in [(10.0, 0.1), (50.0, 0.01), (200.0, 0.05)] {
            let b = BoundParams { expected_convergence: e, epsilon: eps, ..params(16, 4, 4) };
            let d0 = delta_for_epsilon_on_grid(&b, step).unwrap();
            let ratio = |d: f64| spe_payoff_ratio(&BoundParams { discount: d, ..b }).lower_ratio;
            assert!(ratio(d0) >= 1.0 - eps);
            assert!(ratio(d0 - step) < 1.0 - eps);
            assert!((d0 - bisect_delta(&b, step)).abs() <= step * 1.01);
        }
    }

    #[test]
    fn delta_for_epsilon_edges() {
        let b = BoundParams { expected_convergence: 1.0, epsilon: 1.0, collision_cost: -1e-9, ..params(4, 2, 2) };
        assert!((delta_for_epsilon_on_grid(&b, 1e-4).unwrap() - 1e-4).abs() < 1e-12);
        let slow = BoundParams { expected_convergence: 400.0, epsilon: 0.01, ..params(16, 4, 4) };
        let fast = BoundParams { expected_convergence: 40.0, ..slow };
        assert!(delta_for_epsilon(&slow).unwrap() > delta_for_epsilon(&fast).unwrap());
        let tiny = BoundParams { expected_convergence: 1e4, epsilon: 1e-4, ..slow };
        assert!(matches!(delta_for_epsilon_on_grid(&tiny, 1e-3), Err(Error::GridLimit(_))));
        assert!(delta_for_epsilon(&BoundParams { epsilon: 0.0, ..slow }).is_err());
    }

    #[test]
    fn indifference_tail_is_a_fraction() {
        let b = params(16, 4, 4);
        let tail = indifference_tail(&b, 16, 1.0, 3).unwrap();
        assert_eq!(tail.t_ind, 256);
        assert!((0.0..=1.0).contains(&tail.empirical_tail));
        assert!(tail.theoretical_tail > 0.0);
    }
}
