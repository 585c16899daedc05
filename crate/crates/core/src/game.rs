//! The repeated allocation game: configuration, actions, the public context
//! signal and simultaneous resolution of one time step.
//!
//! Resources are indexed `1..=R` and contexts `1..=K` throughout the public
//! API. Agents are indexed `0..N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a resource, in `1..=R`.
pub type ResourceId = usize;

/// Default back-off probability, `2 - sqrt(2)`.
pub const DEFAULT_BACKOFF: f64 = 2.0 - std::f64::consts::SQRT_2;

/// Static parameters of one game instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_agents: usize,
    pub n_resources: usize,
    pub context_size: usize,
    /// Payoff of a collision, strictly negative.
    pub collision_cost: f64,
    pub discount: f64,
    pub backoff_prob: f64,
    pub horizon: u64,
    /// Length of the undiscounted prefix; 0 disables it.
    pub indifference_period: u64,
    pub seed: u64,
}

impl GameConfig {
    /// Builds a configuration with `K = ceil(N / R)`, `ζ = -1`, `δ = 0.99`,
    /// `p = 2 - sqrt(2)` and no indifference period.
    pub fn new(n_agents: usize, n_resources: usize, horizon: u64, seed: u64) -> Result<Self> {
        if n_resources == 0 {
            return Err(Error::InvalidConfig("n_resources must be positive".into()));
        }
        let cfg = GameConfig {
            n_agents,
            n_resources,
            context_size: n_agents.div_ceil(n_resources).max(1),
            collision_cost: -1.0,
            discount: 0.99,
            backoff_prob: DEFAULT_BACKOFF,
            horizon,
            indifference_period: 0,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Free-form constructor; `K` need not equal `ceil(N / R)`
    /// (see [`GameConfig::is_default_context`]).
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        n_agents: usize,
        n_resources: usize,
        context_size: usize,
        collision_cost: f64,
        discount: f64,
        backoff_prob: f64,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = GameConfig {
            n_agents,
            n_resources,
            context_size,
            collision_cost,
            discount,
            backoff_prob,
            horizon,
            indifference_period: 0,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_indifference_period(mut self, t_ind: u64) -> Self {
        self.indifference_period = t_ind;
        self
    }

    pub fn with_backoff(mut self, p: f64) -> Result<Self> {
        self.backoff_prob = p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_discount(mut self, delta: f64) -> Result<Self> {
        self.discount = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_collision_cost(mut self, zeta: f64) -> Result<Self> {
        self.collision_cost = zeta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// True when `K = ceil(N / R)`.
    pub fn is_default_context(&self) -> bool {
        self.context_size == self.n_agents.div_ceil(self.n_resources).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_agents == 0 {
            return bad("n_agents must be positive");
        }
        if self.n_resources == 0 {
            return bad("n_resources must be positive");
        }
        if self.context_size == 0 {
            return bad("context_size must be positive");
        }
        if !(self.collision_cost < 0.0) || !self.collision_cost.is_finite() {
            return bad("collision_cost must be finite and negative");
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad("discount must lie in (0, 1)");
        }
        if !(self.backoff_prob > 0.0 && self.backoff_prob < 1.0) {
            return bad("backoff_prob must lie in (0, 1)");
        }
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        Ok(())
    }
}

/// An element of `{Y, A_1, ..., A_R}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Yield,
    Access(ResourceId),
}

impl Action {
    /// Index in `0..=R` with `Yield = 0` and `Access(r) = r`.
    #[inline]
    pub fn arm_index(self) -> usize {
        match self {
            Action::Yield => 0,
            Action::Access(r) => r,
        }
    }

    #[inline]
    pub fn from_arm_index(i: usize) -> Self {
        if i == 0 {
            Action::Yield
        } else {
            Action::Access(i)
        }
    }

    pub fn check(self, n_resources: usize) -> Result<Self> {
        match self {
            Action::Access(r) if r == 0 || r > n_resources => {
                Err(Error::ResourceOutOfRange { resource: r, n_resources })
            }
            a => Ok(a),
        }
    }
}

/// What an agent submits for one step: its action and, if it is not
/// accessing, the resource it monitors (if any).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Play {
    pub action: Action,
    pub monitor: Option<ResourceId>,
}

impl Play {
    pub fn access(r: ResourceId) -> Self {
        Play { action: Action::Access(r), monitor: None }
    }

    pub fn monitor(r: ResourceId) -> Self {
        Play { action: Action::Yield, monitor: Some(r) }
    }

    /// Yield without observing anything.
    pub fn idle() -> Self {
        Play { action: Action::Yield, monitor: None }
    }
}

/// Occupancy feedback for one resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub resource: ResourceId,
    pub free: bool,
}

/// Per-agent slice of a [`StepOutcome`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub action: Action,
    /// False when an access attempt was refused by the monitoring authority.
    pub admitted: bool,
    pub payoff: f64,
    pub observation: Option<Observation>,
}

impl AgentOutcome {
    pub fn succeeded(&self) -> bool {
        self.admitted && matches!(self.action, Action::Access(_)) && self.payoff > 0.0
    }

    pub fn collided(&self) -> bool {
        self.admitted && matches!(self.action, Action::Access(_)) && self.payoff < 0.0
    }
}

/// Record of one resolved time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub time: u64,
    pub context: usize,
    pub agents: Vec<AgentOutcome>,
    /// Admitted accessors per resource; index `r - 1`.
    pub accessor_counts: Vec<u32>,
}

impl StepOutcome {
    pub fn n_resources(&self) -> usize {
        self.accessor_counts.len()
    }

    pub fn is_free(&self, r: ResourceId) -> bool {
        self.accessor_counts[r - 1] == 0
    }

    pub fn singly_accessed(&self) -> usize {
        self.accessor_counts.iter().filter(|&&c| c == 1).count()
    }

    pub fn colliding_resources(&self) -> usize {
        self.accessor_counts.iter().filter(|&&c| c >= 2).count()
    }

    pub fn idle_resources(&self) -> usize {
        self.accessor_counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Stage payoff of one agent: 0 for yielding, 1 for a sole accessor and
/// `collision_cost` otherwise. `accessor_count` includes the agent itself.
pub fn payoff(action: Action, accessor_count: u32, collision_cost: f64) -> Result<f64> {
    match action {
        Action::Yield => Ok(0.0),
        Action::Access(r) => match accessor_count {
            0 => Err(Error::Contract(format!(
                "access to resource {r} reported with zero accessors"
            ))),
            1 => Ok(1.0),
            _ => Ok(collision_cost),
        },
    }
}

/// Public periodic signal: `(t mod K) + 1`.
#[inline]
pub fn context_signal(time: u64, context_size: usize) -> usize {
    debug_assert!(context_size >= 1);
    (time % context_size as u64) as usize + 1
}

/// Resolves simultaneous plays.
///
/// Refused access attempts do not occupy their resource; the agent instead
/// observes the resource it tried to access and receives payoff 0.
pub fn resolve_step(
    cfg: &GameConfig,
    time: u64,
    plays: &[Play],
    admissions: &[bool],
) -> Result<StepOutcome> {
    let mut out = StepOutcome {
        time,
        context: context_signal(time, cfg.context_size),
        agents: Vec::with_capacity(plays.len()),
        accessor_counts: vec![0; cfg.n_resources],
    };
    resolve_into(cfg, time, plays, admissions, &mut out)?;
    Ok(out)
}

/// Buffer-reusing form of [`resolve_step`].
pub fn resolve_into(
    cfg: &GameConfig,
    time: u64,
    plays: &[Play],
    admissions: &[bool],
    out: &mut StepOutcome,
) -> Result<()> {
    if plays.len() != admissions.len() {
        return Err(Error::LengthMismatch { expected: plays.len(), found: admissions.len() });
    }
    let r_count = cfg.n_resources;
    out.time = time;
    out.context = context_signal(time, cfg.context_size);
    out.accessor_counts.clear();
    out.accessor_counts.resize(r_count, 0);
    for (play, &admitted) in plays.iter().zip(admissions) {
        play.action.check(r_count)?;
        if let Some(m) = play.monitor {
            Action::Access(m).check(r_count)?;
        }
        if let (Action::Access(r), true) = (play.action, admitted) {
            out.accessor_counts[r - 1] += 1;
        }
    }
    out.agents.clear();
    for (play, &admitted) in plays.iter().zip(admissions) {
        let agent = match play.action {
            Action::Access(r) if admitted => AgentOutcome {
                action: play.action,
                admitted: true,
                payoff: payoff(play.action, out.accessor_counts[r - 1], cfg.collision_cost)?,
                observation: None,
            },
            Action::Access(r) => AgentOutcome {
                action: play.action,
                admitted: false,
                payoff: 0.0,
                observation: Some(Observation { resource: r, free: out.accessor_counts[r - 1] == 0 }),
            },
            Action::Yield => AgentOutcome {
                action: Action::Yield,
                admitted: true,
                payoff: 0.0,
                observation: play.monitor.map(|m| Observation {
                    resource: m,
                    free: out.accessor_counts[m - 1] == 0,
                }),
            },
        };
        out.agents.push(agent);
    }
    Ok(())
}
