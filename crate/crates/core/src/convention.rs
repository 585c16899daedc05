//! The courteous learning rule.
//!
//! Each agent keeps a table `g: context -> action`. Accessing agents that
//! collide fall back to yielding with a constant probability `p`; yielding
//! agents monitor one resource chosen uniformly at random and claim it for
//! that context when they find it free. After a success the agent stays idle
//! for the rest of the episode.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, AgentOutcome, Play, ResourceId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStrategy {
    /// `g[k - 1]` is the action for context `k`.
    pub g: Vec<Action>,
    pub accessed: bool,
    pub backoff_prob: f64,
    n_resources: usize,
}

impl AgentStrategy {
    /// Draws every entry of `g` uniformly from the `R + 1` actions.
    pub fn init<G: Rng + ?Sized>(
        context_size: usize,
        n_resources: usize,
        backoff_prob: f64,
        rng: &mut G,
    ) -> Self {
        let g = (0..context_size)
            .map(|_| Action::from_arm_index(rng.gen_range(0..=n_resources)))
            .collect();
        AgentStrategy { g, accessed: false, backoff_prob, n_resources }
    }

    /// Builds a strategy from an explicit table.
    pub fn from_table(g: Vec<Action>, n_resources: usize, backoff_prob: f64) -> Result<Self> {
        for a in &g {
            a.check(n_resources)?;
        }
        Ok(AgentStrategy { g, accessed: false, backoff_prob, n_resources })
    }

    pub fn n_resources(&self) -> usize {
        self.n_resources
    }

    pub fn context_size(&self) -> usize {
        self.g.len()
    }

    #[inline]
    pub fn action_for(&self, context: usize) -> Action {
        self.g[context - 1]
    }

    fn check_context(&self, context: usize) -> Result<()> {
        if context == 0 || context > self.g.len() {
            return Err(Error::ContextOutOfRange { context, context_size: self.g.len() });
        }
        Ok(())
    }

    /// Play for the given context. An agent that already succeeded this
    /// episode and whose table says "access" neither accesses nor monitors.
    #[inline]
    pub fn choose<G: Rng + ?Sized>(&self, context: usize, rng: &mut G) -> Play {
        match self.g[context - 1] {
            Action::Access(r) if !self.accessed => Play::access(r),
            Action::Access(_) => Play::idle(),
            Action::Yield => Play::monitor(rng.gen_range(1..=self.n_resources)),
        }
    }

    /// Checked form of [`AgentStrategy::choose`].
    pub fn choose_action<G: Rng + ?Sized>(&self, context: usize, rng: &mut G) -> Result<Play> {
        self.check_context(context)?;
        Ok(self.choose(context, rng))
    }

    /// Applies the feedback of the step in which `context` was played.
    pub fn update<G: Rng + ?Sized>(
        &mut self,
        context: usize,
        outcome: &AgentOutcome,
        rng: &mut G,
    ) -> Result<()> {
        self.check_context(context)?;
        let slot = &mut self.g[context - 1];
        match (*slot, outcome.action) {
            (Action::Access(r), Action::Access(played)) if r == played && !self.accessed => {
                if !outcome.admitted {
                    // Refused by the authority: nothing was contested.
                    return Ok(());
                }
                if outcome.collided() {
                    if rng.gen::<f64>() < self.backoff_prob {
                        *slot = Action::Yield;
                    }
                } else {
                    self.accessed = true;
                }
                Ok(())
            }
            (Action::Access(_), Action::Yield) if self.accessed => {
                if outcome.observation.is_some() || outcome.payoff != 0.0 {
                    return Err(Error::Contract("idle agent reported feedback".into()));
                }
                Ok(())
            }
            (Action::Yield, Action::Yield) => {
                if outcome.payoff != 0.0 {
                    return Err(Error::Contract("yielding agent reported a payoff".into()));
                }
                if let Some(obs) = outcome.observation {
                    if obs.free {
                        *slot = Action::Access(obs.resource);
                    }
                }
                Ok(())
            }
            (expected, got) => Err(Error::Contract(format!(
                "outcome for {got:?} does not match strategy entry {expected:?} (accessed={})",
                self.accessed
            ))),
        }
    }

    /// Clears the per-episode flag; `g` is untouched.
    pub fn end_episode(&mut self) {
        self.accessed = false;
    }

    /// Resources held, per context, in `g`.
    pub fn claims(&self) -> impl Iterator<Item = (usize, ResourceId)> + '_ {
        self.g.iter().enumerate().filter_map(|(i, a)| match a {
            Action::Access(r) => Some((i + 1, *r)),
            Action::Yield => None,
        })
    }
}
