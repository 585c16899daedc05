//! Efficiency and fairness measures over simulated traces.

use serde::{Deserialize, Serialize};

use crate::game::StepOutcome;

/// Jain index `(Σx)² / (N Σx²)`; `None` for an all-zero allocation.
pub fn jain_index(x: &[f64]) -> Option<f64> {
    let sum: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || sq == 0.0 {
        return None;
    }
    Some(sum * sum / (x.len() as f64 * sq))
}

/// Jain index of integer allocations, computed exactly in integers up to
/// the final division.
pub fn jain_index_counts(x: &[u64]) -> Option<f64> {
    let sum: u128 = x.iter().map(|&v| v as u128).sum();
    let sq: u128 = x.iter().map(|&v| (v as u128) * (v as u128)).sum();
    if x.is_empty() || sq == 0 {
        return None;
    }
    Some((sum as f64 * sum as f64) / (x.len() as f64 * sq as f64))
}

/// Fraction of resources with exactly one admitted accessor.
pub fn utilization(outcome: &StepOutcome) -> f64 {
    outcome.singly_accessed() as f64 / outcome.n_resources() as f64
}

/// Weight of step `t`: 1 inside the indifference period, `δ^(t - T_ind)`
/// afterwards.
#[inline]
pub fn discount_weight(t: u64, discount: f64, indifference_period: u64) -> f64 {
    if t <= indifference_period {
        1.0
    } else {
        discount.powf((t - indifference_period) as f64)
    }
}

/// `Σ_t w_t u_t` with [`discount_weight`].
pub fn discounted_payoff(payoffs: &[f64], discount: f64, indifference_period: u64) -> f64 {
    let mut w = 1.0;
    let mut total = 0.0;
    for (t, u) in payoffs.iter().enumerate() {
        if t as u64 > indifference_period {
            w *= discount;
        }
        total += w * u;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConvergenceGoal {
    /// One aligned, collision-free episode with `min(N, R·K)` successful
    /// accesses, i.e. every resource singly used at every step when the
    /// population can fill them all.
    Full,
    /// Mean utilization over the trailing `K` steps reaches the fraction.
    Fraction(f64),
}

/// Convergence step of a trace starting at time 0.
///
/// `Full` returns the first step of the first clean aligned episode;
/// `Fraction(f)` returns the last step of the first `K`-step window whose
/// mean utilization is at least `f`.
pub fn detect_convergence(
    trace: &[StepOutcome],
    context_size: usize,
    goal: ConvergenceGoal,
) -> Option<u64> {
    let mut tracker = ConvergenceTracker::new(context_size, goal);
    if let Some(first) = trace.first() {
        tracker = tracker.with_agents(first.agents.len());
    }
    trace.iter().find_map(|s| {
        tracker.observe(s.time, s.singly_accessed(), s.colliding_resources(), s.n_resources())
    })
}

/// Streaming form of [`detect_convergence`].
#[derive(Debug, Clone)]
pub struct ConvergenceTracker {
    k: usize,
    goal: ConvergenceGoal,
    n_agents: Option<usize>,
    episode_clean: bool,
    episode_sum: u64,
    window: Vec<u32>,
    window_sum: u64,
    seen: u64,
}

impl ConvergenceTracker {
    pub fn new(context_size: usize, goal: ConvergenceGoal) -> Self {
        ConvergenceTracker {
            k: context_size,
            goal,
            n_agents: None,
            episode_clean: true,
            episode_sum: 0,
            window: vec![0; context_size],
            window_sum: 0,
            seen: 0,
        }
    }

    /// Caps the successes a full episode needs at the population size.
    pub fn with_agents(mut self, n_agents: usize) -> Self {
        self.n_agents = Some(n_agents);
        self
    }

    /// Feeds step `t`; returns the convergence step once it is known.
    pub fn observe(&mut self, t: u64, singly: usize, collisions: usize, resources: usize) -> Option<u64> {
        self.seen += 1;
        let k = self.k as u64;
        match self.goal {
            ConvergenceGoal::Full => {
                if t.is_multiple_of(k) {
                    self.episode_clean = true;
                    self.episode_sum = 0;
                }
                self.episode_clean &= collisions == 0;
                self.episode_sum += singly as u64;
                let slots = resources as u64 * k;
                let needed = self.n_agents.map_or(slots, |n| slots.min(n as u64));
                (t % k == k - 1 && self.episode_clean && self.episode_sum >= needed)
                    .then(|| t + 1 - k)
            }
            ConvergenceGoal::Fraction(f) => {
                let slot = (t % k) as usize;
                self.window_sum = self.window_sum - self.window[slot] as u64 + singly as u64;
                self.window[slot] = singly as u32;
                let full = (resources as u64 * k) as f64;
                (self.seen >= k && self.window_sum as f64 >= f * full - 1e-9).then_some(t)
            }
        }
    }
}

/// Metrics aggregated over independent runs of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean utilization per recorded step.
    pub utilization_series: Vec<f64>,
    /// Mean number of colliding resources per recorded step.
    pub collision_series: Vec<f64>,
    /// Recorded step indices (series may be strided).
    pub series_steps: Vec<u64>,
    /// Successful accesses per agent, summed over runs.
    pub per_agent_success_counts: Vec<u64>,
    /// Discounted payoff per agent, averaged over runs.
    pub per_agent_discounted_payoff: Vec<f64>,
    /// Mean of the per-run Jain indices; `None` when no run allocated anything.
    pub jain: Option<f64>,
    pub jain_std: Option<f64>,
    pub payoff_mean: f64,
    pub payoff_std: f64,
    /// Mean convergence step over runs that converged.
    pub convergence_step: Option<f64>,
    pub convergence_step_std: Option<f64>,
    /// Mean convergence step with unconverged runs counted at the last
    /// step they covered.
    pub convergence_step_lower_bound: f64,
    /// Runs that did not reach the goal within the horizon.
    pub unconverged_runs: usize,
    pub utilization_final: f64,
    pub runs_aggregated: usize,
    /// Largest number of successes any agent had in one episode.
    pub max_successes_per_episode: u32,
}
