//! Monitoring authority: tracks successful accesses per episode and decides
//! whether an access attempt is admitted.
//!
//! Two bookkeeping schemes are supported. The quota log admits an agent
//! until its first success of the episode. The artificial-currency scheme
//! charges a per-resource fee, refunds all but a small commission `ξ` on
//! success and the whole fee on collision, and lowers every fee by the
//! factor `1 - ξ` after each episode. Both schemes refuse a second access
//! within one episode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, ResourceId};

/// Relative slack used when comparing a balance against a fee, so that a
/// balance that equals the fee up to rounding is still admitted.
const FEE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrencyParams {
    /// Cash issued to every agent and the initial fee of every resource (`m`).
    pub initial_cash: f64,
    /// Commission `ξ`, small and positive.
    pub commission: f64,
    /// Reissue the currency every `I` episodes.
    pub invalidation_interval: Option<u64>,
}

impl Default for CurrencyParams {
    fn default() -> Self {
        CurrencyParams { initial_cash: 1.0, commission: 1e-3, invalidation_interval: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum LedgerMode {
    #[default]
    QuotaLog,
    Currency(CurrencyParams),
}

/// Per-episode dump of the ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub episode: u64,
    pub successes: Vec<u32>,
    pub balances: Vec<f64>,
    pub fees: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    mode: LedgerMode,
    episode_success: Vec<bool>,
    successes: Vec<u32>,
    pending: Vec<Option<ResourceId>>,
    balances: Vec<f64>,
    fees: Vec<f64>,
    episode: u64,
    max_successes_per_episode: u32,
}

impl Ledger {
    pub fn new(mode: LedgerMode, n_agents: usize, n_resources: usize) -> Result<Self> {
        let cash = match mode {
            LedgerMode::QuotaLog => 0.0,
            LedgerMode::Currency(c) => {
                if !(c.initial_cash > 0.0 && c.initial_cash.is_finite()) {
                    return Err(Error::InvalidConfig("initial cash must be positive".into()));
                }
                if !(c.commission > 0.0 && c.commission < 1.0) {
                    return Err(Error::InvalidConfig("commission must lie in (0, 1)".into()));
                }
                if c.invalidation_interval == Some(0) {
                    return Err(Error::InvalidConfig("invalidation interval must be positive".into()));
                }
                c.initial_cash
            }
        };
        Ok(Ledger {
            mode,
            episode_success: vec![false; n_agents],
            successes: vec![0; n_agents],
            pending: vec![None; n_agents],
            balances: vec![cash; n_agents],
            fees: vec![cash; n_resources],
            episode: 0,
            max_successes_per_episode: 0,
        })
    }

    pub fn quota_log(n_agents: usize, n_resources: usize) -> Self {
        Self::new(LedgerMode::QuotaLog, n_agents, n_resources).expect("quota log is always valid")
    }

    pub fn mode(&self) -> LedgerMode {
        self.mode
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn balances(&self) -> &[f64] {
        &self.balances
    }

    pub fn fees(&self) -> &[f64] {
        &self.fees
    }

    pub fn has_succeeded(&self, agent: usize) -> Result<bool> {
        self.episode_success.get(agent).copied().ok_or(Error::UnknownAgent(agent))
    }

    /// Largest number of successes any agent recorded within one episode.
    pub fn max_successes_per_episode(&self) -> u32 {
        self.max_successes_per_episode
    }

    fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.episode_success.len() {
            return Err(Error::UnknownAgent(agent));
        }
        Ok(())
    }

    fn resource(&self, action: Action) -> Result<ResourceId> {
        match action {
            Action::Access(r) if r >= 1 && r <= self.fees.len() => Ok(r),
            Action::Access(r) => {
                Err(Error::ResourceOutOfRange { resource: r, n_resources: self.fees.len() })
            }
            Action::Yield => Err(Error::Contract("admission requested for a yield".into())),
        }
    }

    /// Admission decision without side effects.
    pub fn would_admit(&self, agent: usize, action: Action) -> Result<bool> {
        self.check_agent(agent)?;
        let r = self.resource(action)?;
        Ok(match self.mode {
            LedgerMode::QuotaLog => !self.episode_success[agent],
            LedgerMode::Currency(_) => {
                let fee = self.fees[r - 1];
                self.balances[agent] >= fee * (1.0 - FEE_TOLERANCE)
            }
        })
    }

    /// Decides an access attempt. When admitted, the attempt is held open
    /// until [`Ledger::record`] and, in currency mode, the fee is charged.
    pub fn admit(&mut self, agent: usize, action: Action) -> Result<bool> {
        let ok = self.would_admit(agent, action)?;
        if ok {
            let r = self.resource(action)?;
            self.pending[agent] = Some(r);
            if let LedgerMode::Currency(_) = self.mode {
                self.balances[agent] -= self.fees[r - 1];
            }
        }
        Ok(ok)
    }

    /// Closes an admitted attempt with its result.
    pub fn record(&mut self, agent: usize, resource: ResourceId, success: bool) -> Result<()> {
        self.check_agent(agent)?;
        match self.pending[agent] {
            Some(r) if r == resource => {}
            _ => {
                return Err(Error::Contract(format!(
                    "record for agent {agent} on resource {resource} without admission"
                )))
            }
        }
        self.pending[agent] = None;
        if let LedgerMode::Currency(c) = self.mode {
            let fee = self.fees[resource - 1];
            self.balances[agent] += if success { (1.0 - c.commission) * fee } else { fee };
        }
        if success {
            self.episode_success[agent] = true;
            self.successes[agent] += 1;
            self.max_successes_per_episode =
                self.max_successes_per_episode.max(self.successes[agent]);
        }
        Ok(())
    }

    /// Episode boundary: clears the success log and, in currency mode,
    /// lowers the fees (or reissues the currency every `I` episodes).
    pub fn end_episode(&mut self) {
        self.episode_success.iter_mut().for_each(|s| *s = false);
        self.successes.iter_mut().for_each(|s| *s = 0);
        self.episode += 1;
        if let LedgerMode::Currency(c) = self.mode {
            match c.invalidation_interval {
                Some(i) if self.episode.is_multiple_of(i) => {
                    self.balances.iter_mut().for_each(|b| *b = c.initial_cash);
                    self.fees.iter_mut().for_each(|f| *f = c.initial_cash);
                }
                _ => self.fees.iter_mut().for_each(|f| *f *= 1.0 - c.commission),
            }
        }
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            episode: self.episode,
            successes: self.successes.clone(),
            balances: self.balances.clone(),
            fees: self.fees.clone(),
        }
    }
}

/// Episodes after which a fee has decayed to half its value:
/// the smallest `t` with `(1 - ξ)^t <= 1/2`.
pub fn episodes_to_halve_fee(commission: f64) -> u64 {
    (0.5f64.ln() / (1.0 - commission).ln()).ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn currency(xi: f64) -> Ledger {
        let params = CurrencyParams { initial_cash: 1.0, commission: xi, invalidation_interval: None };
        Ledger::new(LedgerMode::Currency(params), 2, 2).unwrap()
    }

    #[test]
    fn quota_log_admits_until_first_success() {
        let mut l = Ledger::quota_log(2, 2);
        assert!(l.admit(0, Action::Access(1)).unwrap());
        l.record(0, 1, true).unwrap();
        assert!(l.has_succeeded(0).unwrap());
        assert!(!l.admit(0, Action::Access(2)).unwrap());
        l.end_episode();
        assert!(!l.has_succeeded(0).unwrap());
        assert!(l.admit(0, Action::Access(2)).unwrap());
    }

    #[test]
    fn collisions_do_not_use_the_quota() {
        let mut l = Ledger::quota_log(1, 1);
        for _ in 0..3 {
            assert!(l.admit(0, Action::Access(1)).unwrap());
            l.record(0, 1, false).unwrap();
        }
        assert!(!l.has_succeeded(0).unwrap());
    }

    #[test]
    fn errors() {
        let mut l = Ledger::quota_log(1, 1);
        assert!(matches!(l.admit(3, Action::Access(1)), Err(Error::UnknownAgent(3))));
        assert!(l.admit(0, Action::Yield).is_err());
        assert!(l.record(0, 1, true).is_err());
        l.admit(0, Action::Access(1)).unwrap();
        assert!(l.record(0, 2, true).is_err());
    }

    #[test]
    fn currency_success_costs_commission() {
        let mut l = currency(0.01);
        assert!(l.admit(0, Action::Access(1)).unwrap());
        l.record(0, 1, true).unwrap();
        assert!((l.balances()[0] - 0.99).abs() < 1e-15);
        assert!(!l.admit(0, Action::Access(2)).unwrap());
        assert!(l.balances().iter().zip([0.99, 1.0]).all(|(b, e)| (b - e).abs() < 1e-15));
    }

    #[test]
    fn currency_collision_is_refunded() {
        let mut l = currency(0.01);
        l.admit(1, Action::Access(2)).unwrap();
        l.record(1, 2, false).unwrap();
        assert_eq!(l.balances()[1], 1.0);
    }

    #[test]
    fn fees_decay_each_episode() {
        let mut l = currency(0.01);
        l.end_episode();
        assert_eq!(l.fees(), &[0.99, 0.99]);
        l.end_episode();
        assert!((l.fees()[0] - 0.9801).abs() < 1e-15);
    }

    #[test]
    fn one_access_per_episode_over_many_episodes() {
        let mut l = currency(1e-3);
        for _ in 0..5_000 {
            assert!(l.admit(0, Action::Access(1)).unwrap());
            l.record(0, 1, true).unwrap();
            // balance is now (1 - ξ) times every fee
            assert!(l.fees().iter().all(|&f| l.balances()[0] < f));
            assert!(!l.admit(0, Action::Access(2)).unwrap());
            l.end_episode();
        }
        assert_eq!(l.max_successes_per_episode(), 1);
    }

    #[test]
    fn invalidation_reissues_currency() {
        let params =
            CurrencyParams { initial_cash: 2.0, commission: 0.1, invalidation_interval: Some(3) };
        let mut l = Ledger::new(LedgerMode::Currency(params), 1, 1).unwrap();
        l.admit(0, Action::Access(1)).unwrap();
        l.record(0, 1, true).unwrap();
        l.end_episode();
        l.end_episode();
        assert!((l.fees()[0] - 2.0 * 0.81).abs() < 1e-12);
        l.end_episode();
        assert_eq!(l.fees(), &[2.0]);
        assert_eq!(l.balances(), &[2.0]);
    }

    #[test]
    fn halving_time() {
        // Oracle: step (1 - ξ)^t forward until it drops to one half.
        for xi in [1e-1, 1e-2, 1e-3] {
            let mut f = 1.0f64;
            let mut t = 0u64;
            while f > 0.5 {
                f *= 1.0 - xi;
                t += 1;
            }
            assert_eq!(episodes_to_halve_fee(xi), t);
        }
        assert_eq!(episodes_to_halve_fee(1e-3), 693);
        let grid = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5];
        let times: Vec<u64> = grid.iter().map(|&x| episodes_to_halve_fee(x)).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]), "{times:?}");
    }
}
