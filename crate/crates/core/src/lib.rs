//! Repeated allocation games with a monitoring authority: the courteous
//! convention learning rule, bandit baselines, metrics, Markov-chain
//! analysis and an experiment runner.

pub mod bandit;
pub mod convention;
pub mod error;
pub mod experiment;
pub mod game;
pub mod metrics;
pub mod monitor;
pub mod rng;
pub mod sim;
pub mod theory;

pub use bandit::{BanditState, BanditVariant, RewardMapping};
pub use convention::AgentStrategy;
pub use error::{Error, Result};
pub use experiment::{run_experiment, Algorithm, ExperimentSpec, OutputFormat, Preset, ReportRow};
pub use game::{Action, AgentOutcome, GameConfig, Observation, Play, StepOutcome};
pub use metrics::{jain_index, ConvergenceGoal, MetricsReport};
pub use monitor::{CurrencyParams, Ledger, LedgerMode};
pub use sim::{run_instance, AgentKind, RunOutcome, SimOptions};
