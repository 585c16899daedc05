//! One seeded game instance: agents, monitoring authority and per-run
//! measurements.
//!
//! A population of convention agents that completes one aligned episode
//! with every resource singly used at every step stays in that allocation
//! forever: accessors keep succeeding, monitors only see occupied
//! resources and nobody collides. Once such an episode is observed the
//! remaining horizon is accounted in closed form instead of being stepped
//! (see [`SimOptions::fast_forward`]).

use serde::{Deserialize, Serialize};

use crate::bandit::{BanditState, BanditVariant, ExpertSet, RewardMapping};
use crate::convention::AgentStrategy;
use crate::error::{Error, Result};
use crate::game::{context_signal, resolve_into, Action, GameConfig, Play, StepOutcome};
use crate::metrics::{ConvergenceGoal, ConvergenceTracker};
use crate::monitor::{Ledger, LedgerMode, LedgerSnapshot};
use crate::rng::{agent_stream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Convention,
    Bandit(BanditVariant),
}

/// What a bandit learns from an access attempt refused by the authority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RefusedFeedback {
    /// Update as if the access had happened: success when the observed
    /// resource was free, collision otherwise. No payoff is accrued.
    #[default]
    Counterfactual,
    /// Update the chosen arm with the realized payoff of a refusal, 0.
    Realized,
    /// No update.
    Ignore,
}

/// Experts available to the advice bandits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ExpertScope {
    /// The `R·K` single-slot schedules.
    #[default]
    Fair,
    /// Every map from contexts to actions.
    Unrestricted,
}

/// Upper limit on the unrestricted expert set.
pub const MAX_UNRESTRICTED_EXPERTS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub ledger_mode: LedgerMode,
    /// Charge `ζ` for every monitoring action in the payoff accounting.
    pub monitor_cost: bool,
    pub refused_feedback: RefusedFeedback,
    pub reward_mapping: RewardMapping,
    pub experts: ExpertScope,
    /// Horizon used to tune the bandits; defaults to the game horizon.
    pub horizon_hint: Option<u64>,
    /// Goal for [`RunOutcome::convergence_fraction`].
    pub fraction_goal: f64,
    /// Account the rest of the horizon analytically once a convention
    /// population is absorbed.
    pub fast_forward: bool,
    /// Stop once the convention population first converges.
    pub stop_at_convergence: bool,
    /// Stop once the discounted weight left in the horizon, times the
    /// largest stage payoff magnitude, drops below this value. Success
    /// counts then cover the simulated prefix only.
    pub payoff_tolerance: Option<f64>,
    pub record_trace: bool,
    pub record_ledger: bool,
    /// Start steps of the buckets over which `(singly used, colliding)`
    /// resource counts are summed; must start at 0 and increase.
    pub series_buckets: Option<Vec<u64>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            ledger_mode: LedgerMode::QuotaLog,
            monitor_cost: false,
            refused_feedback: RefusedFeedback::default(),
            reward_mapping: RewardMapping::Affine,
            experts: ExpertScope::Fair,
            horizon_hint: None,
            fraction_goal: 0.9,
            fast_forward: true,
            stop_at_convergence: false,
            payoff_tolerance: None,
            record_trace: false,
            record_ledger: false,
            series_buckets: None,
        }
    }
}

/// Per-run measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub successes: Vec<u64>,
    pub discounted_payoff: Vec<f64>,
    /// First step of the first clean aligned episode.
    pub convergence_full: Option<u64>,
    /// First step at which the trailing-episode utilization reaches the
    /// fraction goal.
    pub convergence_fraction: Option<u64>,
    /// Steps actually stepped.
    pub steps_simulated: u64,
    /// Whether `steps_simulated..horizon` was accounted analytically, with
    /// every resource singly used at every step.
    pub fast_forwarded: bool,
    /// Steps covered by the measurements.
    pub steps_covered: u64,
    /// Mean utilization over the last episode covered.
    pub final_utilization: f64,
    pub collisions_total: u64,
    /// Largest number of successes of one agent within one episode,
    /// counted from step outcomes.
    pub max_successes_per_episode: u32,
    /// The same quantity as reported by the ledger.
    pub ledger_max_successes_per_episode: u32,
    /// `(singly used, colliding)` summed per bucket over stepped steps.
    pub series: Option<Vec<(u64, u64)>>,
    pub trace: Option<Vec<StepOutcome>>,
    pub ledger_log: Option<Vec<LedgerSnapshot>>,
    /// Final strategy tables of convention agents.
    pub strategies: Option<Vec<AgentStrategy>>,
}

enum Agent {
    Convention(AgentStrategy),
    Bandit(BanditState),
}

/// Sum of discount weights over `t = start, start + step, ...` below `end`.
fn strided_weight_sum(start: u64, end: u64, step: u64, discount: f64, t_ind: u64) -> f64 {
    if start >= end {
        return 0.0;
    }
    let count = (end - start).div_ceil(step);
    // terms inside the undiscounted prefix
    let flat = if start > t_ind { 0 } else { ((t_ind - start) / step + 1).min(count) };
    let rest = count - flat;
    let mut total = flat as f64;
    if rest > 0 {
        let first = start + flat * step;
        let ratio = discount.powf(step as f64);
        let head = discount.powf((first - t_ind) as f64);
        total += head * (1.0 - ratio.powf(rest as f64)) / (1.0 - ratio);
    }
    total
}

/// Runs one instance of `cfg` with every agent of the given kind.
pub fn run_instance(cfg: &GameConfig, kind: AgentKind, opts: &SimOptions) -> Result<RunOutcome> {
    run_population(cfg, &vec![kind; cfg.n_agents], opts)
}

/// Runs one instance with an explicit kind per agent.
pub fn run_population(cfg: &GameConfig, kinds: &[AgentKind], opts: &SimOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    if kinds.len() != cfg.n_agents {
        return Err(Error::LengthMismatch { expected: cfg.n_agents, found: kinds.len() });
    }
    let n = cfg.n_agents;
    let r_count = cfg.n_resources;
    let k = cfg.context_size;
    let k64 = k as u64;
    let horizon = cfg.horizon;
    let zeta = cfg.collision_cost;
    let hint = opts.horizon_hint.unwrap_or(horizon);

    let unrestricted = match opts.experts {
        ExpertScope::Unrestricted
            if kinds.iter().any(|k| matches!(k, AgentKind::Bandit(BanditVariant::Exp4 | BanditVariant::Exp4P))) =>
        {
            Some(ExpertSet::all(r_count, k, MAX_UNRESTRICTED_EXPERTS)?)
        }
        _ => None,
    };
    let mut rngs: Vec<SimRng> = (0..n).map(|i| agent_stream(cfg.seed, i)).collect();
    let mut agents: Vec<Agent> = Vec::with_capacity(n);
    for (kind, rng) in kinds.iter().zip(rngs.iter_mut()) {
        agents.push(match kind {
            AgentKind::Convention => {
                Agent::Convention(AgentStrategy::init(k, r_count, cfg.backoff_prob, rng))
            }
            AgentKind::Bandit(v) => {
                let state = match (&unrestricted, v) {
                    (Some(set), BanditVariant::Exp4 | BanditVariant::Exp4P) => {
                        BanditState::with_experts(*v, set.clone(), hint, zeta)?
                    }
                    _ => BanditState::new(*v, r_count, k, hint, zeta),
                };
                Agent::Bandit(state.with_mapping(opts.reward_mapping))
            }
        });
    }
    let all_convention = kinds.iter().all(|k| *k == AgentKind::Convention);
    let mut ledger = Ledger::new(opts.ledger_mode, n, r_count)?;

    let mut plays = vec![Play::idle(); n];
    let mut admissions = vec![true; n];
    let mut out = StepOutcome {
        time: 0,
        context: 1,
        agents: Vec::with_capacity(n),
        accessor_counts: vec![0; r_count],
    };

    let mut successes = vec![0u64; n];
    let mut payoff = vec![0.0f64; n];
    let mut episode_successes = vec![0u32; n];
    let mut max_per_episode = 0u32;
    let mut collisions_total = 0u64;
    let mut full = ConvergenceTracker::new(k, ConvergenceGoal::Full).with_agents(n);
    // A clean episode is only absorbing when it fills every slot.
    let absorbing = all_convention && n >= r_count * k;
    let mut frac = ConvergenceTracker::new(k, ConvergenceGoal::Fraction(opts.fraction_goal));
    let mut convergence_full = None;
    let mut convergence_fraction = None;
    let buckets = opts.series_buckets.as_deref();
    if let Some(b) = buckets {
        if b.first() != Some(&0) || b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("series buckets must start at 0 and increase".into()));
        }
    }
    let mut series: Option<Vec<(u64, u64)>> = buckets.map(|b| vec![(0, 0); b.len()]);
    let mut bucket = 0usize;
    let mut next_bucket = buckets.and_then(|b| b.get(1).copied()).unwrap_or(u64::MAX);
    let mut trace = opts.record_trace.then(Vec::new);
    let mut ledger_log = opts.record_ledger.then(Vec::new);
    let mut last_window = vec![0u32; k];

    // Per-agent payoffs of the current episode, by position, for the
    // fast-forward of an absorbed population.
    let track_episode = absorbing && opts.fast_forward;
    let mut episode_payoffs: Vec<Vec<(u32, f64)>> = vec![Vec::new(); if track_episode { n } else { 0 }];
    let mut episode_success_pos: Vec<Option<u32>> = vec![None; if track_episode { n } else { 0 }];

    let max_stage = 1.0f64.max(-zeta) * if opts.monitor_cost { 2.0 } else { 1.0 };
    let mut weight = 1.0f64;
    let mut t = 0u64;
    let mut steps_covered = horizon;
    let mut fast_forwarded = false;

    while t < horizon {
        if t > cfg.indifference_period {
            weight *= cfg.discount;
        }
        let ctx = context_signal(t, k);
        let pos = (ctx - 1) as u32;

        for ((agent, rng), play) in agents.iter_mut().zip(rngs.iter_mut()).zip(plays.iter_mut()) {
            *play = match agent {
                Agent::Convention(s) => s.choose(ctx, rng),
                Agent::Bandit(b) => match b.select_arm(ctx, rng) {
                    Action::Yield => Play::idle(),
                    Action::Access(r) => Play::access(r),
                },
            };
        }
        for (i, (play, adm)) in plays.iter().zip(admissions.iter_mut()).enumerate() {
            *adm = match play.action {
                Action::Access(_) => ledger.admit(i, play.action)?,
                Action::Yield => true,
            };
        }
        resolve_into(cfg, t, &plays, &admissions, &mut out)?;

        for (i, a) in out.agents.iter().enumerate() {
            let mut u = a.payoff;
            if let (Action::Access(r), true) = (a.action, a.admitted) {
                let ok = a.payoff > 0.0;
                ledger.record(i, r, ok)?;
                if ok {
                    successes[i] += 1;
                    episode_successes[i] += 1;
                    max_per_episode = max_per_episode.max(episode_successes[i]);
                    if track_episode {
                        episode_success_pos[i] = Some(pos);
                    }
                }
            }
            if opts.monitor_cost && a.action == Action::Yield && a.observation.is_some() {
                u += zeta;
            }
            if u != 0.0 {
                payoff[i] += weight * u;
                if track_episode {
                    episode_payoffs[i].push((pos, u));
                }
            }
        }

        for ((agent, rng), a) in agents.iter_mut().zip(rngs.iter_mut()).zip(&out.agents) {
            match agent {
                Agent::Convention(s) => s.update(ctx, a, rng)?,
                Agent::Bandit(b) => match (a.action, a.admitted) {
                    (Action::Yield, _) => b.update(ctx, Action::Yield, 0.0)?,
                    (chosen, true) => b.update(ctx, chosen, a.payoff)?,
                    (chosen, false) => match opts.refused_feedback {
                        RefusedFeedback::Counterfactual => {
                            let free = a.observation.is_some_and(|o| o.free);
                            b.update(ctx, chosen, if free { 1.0 } else { zeta })?;
                        }
                        RefusedFeedback::Realized => b.update(ctx, chosen, 0.0)?,
                        RefusedFeedback::Ignore => {}
                    },
                },
            }
        }

        let singly = out.singly_accessed();
        let colliding = out.colliding_resources();
        collisions_total += colliding as u64;
        last_window[pos as usize] = singly as u32;
        if let Some(s) = series.as_mut() {
            if t >= next_bucket {
                let b = buckets.unwrap_or_default();
                while bucket + 1 < b.len() && b[bucket + 1] <= t {
                    bucket += 1;
                }
                next_bucket = b.get(bucket + 1).copied().unwrap_or(u64::MAX);
            }
            s[bucket].0 += singly as u64;
            s[bucket].1 += colliding as u64;
        }
        if convergence_fraction.is_none() {
            convergence_fraction = frac.observe(t, singly, colliding, r_count);
        }
        let newly_full = if convergence_full.is_none() {
            convergence_full = full.observe(t, singly, colliding, r_count);
            convergence_full.is_some()
        } else {
            false
        };
        if let Some(tr) = trace.as_mut() {
            tr.push(out.clone());
        }

        if ctx == k {
            for a in agents.iter_mut() {
                if let Agent::Convention(s) = a {
                    s.end_episode();
                }
            }
            ledger.end_episode();
            episode_successes.iter_mut().for_each(|c| *c = 0);
            if let Some(log) = ledger_log.as_mut() {
                log.push(ledger.snapshot());
            }
        }
        t += 1;

        if newly_full && all_convention && opts.stop_at_convergence {
            steps_covered = t;
            break;
        }
        if newly_full && absorbing
            && opts.fast_forward && t < horizon {
                // Replay the clean episode just completed until the horizon.
                let step = k64;
                let mut pos_weight = vec![0.0; k];
                let mut pos_count = vec![0u64; k];
                for (j, (w, c)) in pos_weight.iter_mut().zip(pos_count.iter_mut()).enumerate() {
                    let start = t + j as u64;
                    *w = strided_weight_sum(start, horizon, step, cfg.discount, cfg.indifference_period);
                    *c = if start < horizon { (horizon - start).div_ceil(step) } else { 0 };
                }
                for i in 0..n {
                    let tail: f64 =
                        episode_payoffs[i].iter().map(|&(p, u)| u * pos_weight[p as usize]).sum();
                    payoff[i] += tail;
                    if let Some(p) = episode_success_pos[i] {
                        successes[i] += pos_count[p as usize];
                    }
                }
                let remaining_full_episodes = (horizon - t) / step;
                if let Some(log) = ledger_log.as_mut() {
                    // Episodes replay the logged one; only the index moves.
                    let last = log.last().cloned();
                    if let Some(snap) = last {
                        for e in 1..=remaining_full_episodes {
                            let mut s = snap.clone();
                            s.episode += e;
                            log.push(s);
                        }
                    }
                }
                last_window.iter_mut().for_each(|c| *c = r_count as u32);
                fast_forwarded = true;
                break;
            }
        if track_episode && ctx == k {
            episode_payoffs.iter_mut().for_each(|v| v.clear());
            episode_success_pos.iter_mut().for_each(|p| *p = None);
        }
        if let Some(tol) = opts.payoff_tolerance {
            if t > cfg.indifference_period {
                let left = weight * cfg.discount / (1.0 - cfg.discount) * max_stage;
                if left < tol {
                    steps_covered = t;
                    break;
                }
            }
        }
    }

    let steps_simulated = if fast_forwarded { t } else { steps_covered.min(t) };
    let covered_window = steps_covered.min(k64).max(1);
    let final_utilization = if fast_forwarded {
        1.0
    } else {
        // last `covered_window` steps end at `steps_covered - 1`
        let mut sum = 0u64;
        for back in 0..covered_window {
            let step = steps_covered - 1 - back;
            sum += last_window[(step % k64) as usize] as u64;
        }
        sum as f64 / (covered_window as f64 * r_count as f64)
    };

    let strategies = all_convention.then(|| {
        agents
            .iter()
            .filter_map(|a| match a {
                Agent::Convention(s) => Some(s.clone()),
                Agent::Bandit(_) => None,
            })
            .collect()
    });

    Ok(RunOutcome {
        successes,
        discounted_payoff: payoff,
        convergence_full,
        convergence_fraction,
        steps_simulated,
        fast_forwarded,
        steps_covered,
        final_utilization,
        collisions_total,
        max_successes_per_episode: max_per_episode,
        ledger_max_successes_per_episode: ledger.max_successes_per_episode(),
        series,
        trace,
        ledger_log,
        strategies,
    })
}

/// Draws a random convention population and reports whether it
/// converges within `max_steps` (helper for Monte Carlo checks).
pub fn convention_convergence_step(cfg: &GameConfig, max_steps: u64) -> Result<Option<u64>> {
    let cfg = GameConfig { horizon: max_steps, ..*cfg };
    let opts = SimOptions { stop_at_convergence: true, ..SimOptions::default() };
    Ok(run_instance(&cfg, AgentKind::Convention, &opts)?.convergence_full)
}
