use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Action;

/// Deterministic experts, each a map from context `1..=K` to an action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertSet {
    context_size: usize,
    n_resources: usize,
    experts: Vec<Vec<Action>>,
}

impl ExpertSet {
    pub fn new(experts: Vec<Vec<Action>>, context_size: usize, n_resources: usize) -> Result<Self> {
        if experts.is_empty() {
            return Err(Error::InvalidConfig("expert set is empty".into()));
        }
        for e in &experts {
            if e.len() != context_size {
                return Err(Error::LengthMismatch { expected: context_size, found: e.len() });
            }
            for a in e {
                a.check(n_resources)?;
            }
        }
        Ok(ExpertSet { context_size, n_resources, experts })
    }

    /// The `R·K` single-slot schedules: expert `(r, k)` accesses `r` at
    /// context `k` and yields everywhere else. Assigning the experts to
    /// distinct agents gives the efficient, fair allocation.
    pub fn fair(n_resources: usize, context_size: usize) -> Self {
        let mut experts = Vec::with_capacity(n_resources * context_size);
        for k in 1..=context_size {
            for r in 1..=n_resources {
                let mut e = vec![Action::Yield; context_size];
                e[k - 1] = Action::Access(r);
                experts.push(e);
            }
        }
        ExpertSet { context_size, n_resources, experts }
    }

    /// Every deterministic map from contexts to actions, `(R + 1)^K`
    /// experts. Refused above `max_experts`.
    pub fn all(n_resources: usize, context_size: usize, max_experts: usize) -> Result<Self> {
        let arms = n_resources + 1;
        let m = (0..context_size).try_fold(1usize, |acc, _| acc.checked_mul(arms));
        let m = match m {
            Some(m) if m <= max_experts => m,
            _ => {
                return Err(Error::Infeasible(format!(
                    "{arms}^{context_size} experts exceed the limit of {max_experts}"
                )))
            }
        };
        let experts = (0..m)
            .map(|mut code| {
                (0..context_size)
                    .map(|_| {
                        let a = Action::from_arm_index(code % arms);
                        code /= arms;
                        a
                    })
                    .collect()
            })
            .collect();
        Ok(ExpertSet { context_size, n_resources, experts })
    }

    /// One constant expert per arm (yield, then each resource).
    pub fn constant_arms(n_resources: usize, context_size: usize) -> Self {
        let experts = (0..=n_resources)
            .map(|i| vec![Action::from_arm_index(i); context_size])
            .collect();
        ExpertSet { context_size, n_resources, experts }
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn context_size(&self) -> usize {
        self.context_size
    }

    pub fn n_resources(&self) -> usize {
        self.n_resources
    }

    #[inline]
    pub fn advice(&self, expert: usize, context: usize) -> Action {
        self.experts[expert][context - 1]
    }

    pub fn experts(&self) -> &[Vec<Action>] {
        &self.experts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{resolve_step, GameConfig, Play};

    #[test]
    fn fair_set_sizes() {
        let one = ExpertSet::fair(1, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one.advice(0, 1), Action::Access(1));
        assert_eq!(ExpertSet::fair(2, 2).len(), 4);
        assert_eq!(ExpertSet::fair(3, 5).len(), 15);
    }

    #[test]
    fn fair_schedules_are_efficient() {
        // One agent per expert, one full episode: every step has each
        // resource accessed exactly once.
        for (r, k) in [(1, 1), (2, 2), (3, 4), (4, 4)] {
            let set = ExpertSet::fair(r, k);
            let cfg = GameConfig::new(r * k, r, 10, 0).unwrap();
            for t in 0..k as u64 {
                let ctx = (t as usize) + 1;
                let plays: Vec<Play> = (0..set.len())
                    .map(|e| match set.advice(e, ctx) {
                        Action::Access(res) => Play::access(res),
                        Action::Yield => Play::idle(),
                    })
                    .collect();
                let out = resolve_step(&cfg, t, &plays, &vec![true; plays.len()]).unwrap();
                assert_eq!(out.singly_accessed(), r);
                assert_eq!(out.colliding_resources(), 0);
            }
        }
    }

    #[test]
    fn unrestricted_set_enumerates_every_schedule() {
        let set = ExpertSet::all(2, 2, 100).unwrap();
        assert_eq!(set.len(), 9);
        let mut seen: Vec<_> = set.experts().to_vec();
        seen.sort_by_key(|e| e.iter().map(|a| a.arm_index()).collect::<Vec<_>>());
        seen.dedup();
        assert_eq!(seen.len(), 9);
        assert!(matches!(ExpertSet::all(4, 8, 1 << 16), Err(Error::Infeasible(_))));
        assert!(ExpertSet::all(usize::MAX - 1, 3, usize::MAX).is_err());
    }

    #[test]
    fn validation() {
        assert!(ExpertSet::new(vec![], 1, 1).is_err());
        assert!(ExpertSet::new(vec![vec![Action::Access(2)]], 1, 1).is_err());
        assert!(ExpertSet::new(vec![vec![Action::Yield; 2]], 1, 1).is_err());
    }
}
