//! Adversarial bandit baselines.
//!
//! Arms are `{Yield, Access(1), ..., Access(R)}`. Stage payoffs in
//! `[ζ, 1]` are mapped into `[0, 1]` before the exponential-weights update.
//!
//! Parameter choices follow the original tuning of each algorithm for a
//! known horizon `T`, `A` arms and `M` experts:
//!
//! * EXP3 / CEXP3: `γ = min(1, sqrt(A ln A / ((e - 1) T)))`.
//! * EXP4: `γ = min(1, sqrt(A ln M / ((e - 1) T)))`.
//! * EXP4.P: `p_min = sqrt(ln M / (A T))`, confidence term
//!   `sqrt(ln(M / δ) / (A T))` with failure probability `δ = 0.05`.

mod exp3;
mod exp4;
mod experts;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use exp3::Exp3;
pub use exp4::{AdviceRule, Exp4};
pub use experts::ExpertSet;

use crate::error::{Error, Result};
use crate::game::Action;

/// Failure probability used to tune EXP4.P.
pub const EXP4P_FAILURE_PROB: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BanditVariant {
    Exp3,
    /// One independent EXP3 instance per context value.
    Cexp3,
    Exp4,
    Exp4P,
}

/// How stage payoffs are turned into rewards in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum RewardMapping {
    /// `(u - ζ) / (1 - ζ)`: collision 0, yield `-ζ / (1 - ζ)`, success 1.
    #[default]
    Affine,
    /// Explicit rewards for the three payoff levels.
    Levels { collision: f64, yield_: f64, success: f64 },
}

impl RewardMapping {
    pub fn map(&self, payoff: f64, collision_cost: f64) -> Result<f64> {
        const EPS: f64 = 1e-12;
        if !(payoff >= collision_cost - EPS && payoff <= 1.0 + EPS) {
            return Err(Error::RewardOutOfRange(payoff));
        }
        let x = match *self {
            RewardMapping::Affine => (payoff - collision_cost) / (1.0 - collision_cost),
            RewardMapping::Levels { collision, yield_, success } => {
                if (payoff - 1.0).abs() < EPS {
                    success
                } else if payoff.abs() < EPS {
                    yield_
                } else if (payoff - collision_cost).abs() < EPS {
                    collision
                } else {
                    return Err(Error::RewardOutOfRange(payoff));
                }
            }
        };
        Ok(x.clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone)]
enum Learner {
    Single(Exp3),
    PerContext(Vec<Exp3>),
    Advice(Exp4),
}

/// Per-agent bandit state.
#[derive(Debug, Clone)]
pub struct BanditState {
    variant: BanditVariant,
    arms: usize,
    context_size: usize,
    collision_cost: f64,
    mapping: RewardMapping,
    learner: Learner,
}

impl BanditState {
    /// Tuned instance for `R` resources, `K` contexts and horizon `T`.
    /// EXP4 and EXP4.P use [`ExpertSet::fair`].
    pub fn new(
        variant: BanditVariant,
        n_resources: usize,
        context_size: usize,
        horizon_hint: u64,
        collision_cost: f64,
    ) -> Self {
        let arms = n_resources + 1;
        let learner = match variant {
            BanditVariant::Exp3 => Learner::Single(Exp3::new(arms, Exp3::tuned_gamma(arms, horizon_hint))),
            BanditVariant::Cexp3 => {
                let gamma = Exp3::tuned_gamma(arms, horizon_hint);
                Learner::PerContext(vec![Exp3::new(arms, gamma); context_size])
            }
            BanditVariant::Exp4 | BanditVariant::Exp4P => {
                return Self::with_experts(
                    variant,
                    ExpertSet::fair(n_resources, context_size),
                    horizon_hint,
                    collision_cost,
                )
                .expect("advice variants accept any expert set");
            }
        };
        BanditState {
            variant,
            arms,
            context_size,
            collision_cost,
            mapping: RewardMapping::Affine,
            learner,
        }
    }

    /// EXP4 or EXP4.P over an explicit expert set.
    pub fn with_experts(
        variant: BanditVariant,
        experts: ExpertSet,
        horizon_hint: u64,
        collision_cost: f64,
    ) -> Result<Self> {
        let arms = experts.n_resources() + 1;
        let context_size = experts.context_size();
        let rule = match variant {
            BanditVariant::Exp4 => Exp4::tuned_exp4(arms, experts.len(), horizon_hint),
            BanditVariant::Exp4P => {
                Exp4::tuned_exp4p(arms, experts.len(), horizon_hint, EXP4P_FAILURE_PROB)
            }
            _ => return Err(Error::InvalidConfig(format!("{variant:?} does not take experts"))),
        };
        Ok(BanditState {
            variant,
            arms,
            context_size,
            collision_cost,
            mapping: RewardMapping::Affine,
            learner: Learner::Advice(Exp4::new(experts, rule)),
        })
    }

    /// EXP3 or CEXP3 with a fixed exploration rate.
    pub fn with_gamma(
        variant: BanditVariant,
        n_resources: usize,
        context_size: usize,
        gamma: f64,
        collision_cost: f64,
    ) -> Result<Self> {
        let arms = n_resources + 1;
        let learner = match variant {
            BanditVariant::Exp3 => Learner::Single(Exp3::new(arms, gamma)),
            BanditVariant::Cexp3 => Learner::PerContext(vec![Exp3::new(arms, gamma); context_size]),
            _ => return Err(Error::InvalidConfig(format!("{variant:?} is tuned from experts"))),
        };
        Ok(BanditState {
            variant,
            arms,
            context_size,
            collision_cost,
            mapping: RewardMapping::Affine,
            learner,
        })
    }

    pub fn with_mapping(mut self, mapping: RewardMapping) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn variant(&self) -> BanditVariant {
        self.variant
    }

    pub fn arm_count(&self) -> usize {
        self.arms
    }

    pub fn exploration_rate(&self) -> f64 {
        match &self.learner {
            Learner::Single(e) => e.gamma(),
            Learner::PerContext(v) => v[0].gamma(),
            Learner::Advice(e) => e.exploration_rate(),
        }
    }

    /// Current weights (per arm, or per expert for the advice variants).
    pub fn weights(&self, context: usize) -> Vec<f64> {
        match &self.learner {
            Learner::Single(e) => e.weights().to_vec(),
            Learner::PerContext(v) => v[context - 1].weights().to_vec(),
            Learner::Advice(e) => e.weights(),
        }
    }

    fn check_context(&self, context: usize) -> Result<()> {
        if context == 0 || context > self.context_size {
            return Err(Error::ContextOutOfRange { context, context_size: self.context_size });
        }
        Ok(())
    }

    /// Arm distribution at `context`, indexed by [`Action::arm_index`].
    pub fn probabilities(&mut self, context: usize) -> Result<Vec<f64>> {
        self.check_context(context)?;
        Ok(match &mut self.learner {
            Learner::Single(e) => e.probabilities(),
            Learner::PerContext(v) => v[context - 1].probabilities(),
            Learner::Advice(e) => e.probabilities(context),
        })
    }

    #[inline]
    pub fn select_arm<G: Rng + ?Sized>(&mut self, context: usize, rng: &mut G) -> Action {
        let arm = match &mut self.learner {
            Learner::Single(e) => e.sample(rng),
            Learner::PerContext(v) => v[context - 1].sample(rng),
            Learner::Advice(e) => e.sample(context, rng),
        };
        Action::from_arm_index(arm)
    }

    /// Update with a stage payoff in `[ζ, 1]`.
    pub fn update(&mut self, context: usize, chosen: Action, payoff: f64) -> Result<()> {
        let x = self.mapping.map(payoff, self.collision_cost)?;
        self.update_unit(context, chosen, x)
    }

    /// Update with a reward already in `[0, 1]`.
    pub fn update_unit(&mut self, context: usize, chosen: Action, reward: f64) -> Result<()> {
        self.check_context(context)?;
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfRange(reward));
        }
        let arm = chosen.arm_index();
        if arm >= self.arms {
            return Err(Error::ResourceOutOfRange { resource: arm, n_resources: self.arms - 1 });
        }
        match &mut self.learner {
            Learner::Single(e) => e.update(arm, reward),
            Learner::PerContext(v) => v[context - 1].update(arm, reward),
            Learner::Advice(e) => e.update(context, arm, reward),
        }
        Ok(())
    }
}
