//! Batches of seeded runs, preset grids of the evaluation, and CSV/JSON
//! output.
//!
//! Run `i` of an experiment uses seed `seed + i`. Runs execute in parallel
//! and are reduced sequentially in run order, so the output does not depend
//! on the thread count.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::BanditVariant;
use crate::error::{Error, Result};
use crate::game::{GameConfig, DEFAULT_BACKOFF};
use crate::metrics::{jain_index_counts, ConvergenceGoal, MetricsReport};
use crate::sim::{run_instance, AgentKind, ExpertScope, RunOutcome, SimOptions};

pub const DEFAULT_RUNS: usize = 128;
pub const DEFAULT_HORIZON: u64 = 1_000_000;
/// Horizon of the scaling presets.
pub const FIGURE_HORIZON: u64 = 150_000_000;
/// Advice bandits with the unrestricted expert set are refused from this
/// population size on.
pub const UNRESTRICTED_AGENT_LIMIT: usize = 64;
/// Back-off grid of the courtesy sweep.
pub const BACKOFF_GRID: [f64; 5] = [0.1, 0.25, DEFAULT_BACKOFF, 0.75, 0.9];
/// `R = K` values of the table presets.
pub const TABLE_RESOURCES: [usize; 4] = [2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "canony")]
    Canony,
    /// Convention agents charged `ζ` per monitoring action.
    #[serde(rename = "canony-star")]
    CanonyStar,
    #[serde(rename = "exp3")]
    Exp3,
    #[serde(rename = "cexp3")]
    Cexp3,
    #[serde(rename = "exp4")]
    Exp4,
    #[serde(rename = "exp4p")]
    Exp4P,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Canony,
        Algorithm::CanonyStar,
        Algorithm::Exp3,
        Algorithm::Cexp3,
        Algorithm::Exp4,
        Algorithm::Exp4P,
    ];
    pub const BANDITS: [Algorithm; 4] = [Algorithm::Exp3, Algorithm::Cexp3, Algorithm::Exp4, Algorithm::Exp4P];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Canony => "canony",
            Algorithm::CanonyStar => "canony-star",
            Algorithm::Exp3 => "exp3",
            Algorithm::Cexp3 => "cexp3",
            Algorithm::Exp4 => "exp4",
            Algorithm::Exp4P => "exp4p",
        }
    }

    pub fn agent_kind(self) -> AgentKind {
        match self {
            Algorithm::Canony | Algorithm::CanonyStar => AgentKind::Convention,
            Algorithm::Exp3 => AgentKind::Bandit(BanditVariant::Exp3),
            Algorithm::Cexp3 => AgentKind::Bandit(BanditVariant::Cexp3),
            Algorithm::Exp4 => AgentKind::Bandit(BanditVariant::Exp4),
            Algorithm::Exp4P => AgentKind::Bandit(BanditVariant::Exp4P),
        }
    }

    pub fn charges_monitoring(self) -> bool {
        self == Algorithm::CanonyStar
    }

    /// Full convergence for convention agents, 90% utilization for bandits.
    pub fn default_goal(self) -> ConvergenceGoal {
        match self {
            Algorithm::Canony | Algorithm::CanonyStar => ConvergenceGoal::Full,
            _ => ConvergenceGoal::Fraction(0.9),
        }
    }

    fn takes_experts(self) -> bool {
        matches!(self, Algorithm::Exp4 | Algorithm::Exp4P)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Mean payoff over the back-off grid, `R = K ∈ {2, 4, 8, 16}`.
    Table1,
    /// Fairness of every learner, `R = K ∈ {2, 4, 8, 16}`.
    Table2,
    /// Payoffs with and without an indifference period `T_ind = RNK`.
    Table3,
    /// Utilization over time at `R = K = 4`.
    Fig1,
    /// Convergence time for increasing `R` at several `K`.
    Fig2,
    /// Convergence time for increasing `K` at several `R`.
    Fig3,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Table1, Preset::Table2, Preset::Table3, Preset::Fig1, Preset::Fig2, Preset::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{s}'")))
    }
}

/// Which utilization time series to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SeriesMode {
    #[default]
    Off,
    /// One point per step.
    Every,
    /// Buckets with log-spaced start steps, averaged within each bucket.
    Log { per_decade: u32 },
}

impl SeriesMode {
    /// Bucket start steps for a horizon.
    pub fn buckets(self, horizon: u64) -> Option<Vec<u64>> {
        match self {
            SeriesMode::Off => None,
            SeriesMode::Every => Some((0..horizon).collect()),
            SeriesMode::Log { per_decade } => {
                let mut out = vec![0u64];
                let d = per_decade.max(1) as f64;
                for i in 0.. {
                    let v = 10f64.powf(i as f64 / d);
                    if v >= horizon as f64 {
                        break;
                    }
                    let s = v.floor() as u64;
                    if s > *out.last().unwrap_or(&0) {
                        out.push(s);
                    }
                }
                out.retain(|&s| s < horizon.max(1));
                Some(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub game: GameConfig,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub output: OutputFormat,
    pub preset: Option<Preset>,
    /// Charge `ζ` per monitoring action (always on for `canony-star`).
    pub monitor_cost_enabled: bool,
    pub goal: ConvergenceGoal,
    pub series: SeriesMode,
    pub sim: SimOptions,
}

impl ExperimentSpec {
    pub fn new(game: GameConfig, algorithm: Algorithm) -> Self {
        ExperimentSpec {
            game,
            algorithm,
            runs: DEFAULT_RUNS,
            output: OutputFormat::Csv,
            preset: None,
            monitor_cost_enabled: algorithm.charges_monitoring(),
            goal: algorithm.default_goal(),
            series: SeriesMode::Off,
            sim: SimOptions::default(),
        }
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_series(mut self, series: SeriesMode) -> Self {
        self.series = series;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if let ConvergenceGoal::Fraction(f) = self.goal {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!("utilization goal {f} not in (0, 1]")));
            }
        }
        if self.series != SeriesMode::Off
            && (self.sim.payoff_tolerance.is_some() || self.sim.stop_at_convergence)
        {
            return Err(Error::InvalidConfig("a time series needs the full horizon".into()));
        }
        if self.algorithm.takes_experts()
            && self.sim.experts == ExpertScope::Unrestricted
            && self.game.n_agents >= UNRESTRICTED_AGENT_LIMIT
        {
            return Err(Error::Infeasible(format!(
                "{} with unrestricted experts is limited to fewer than {UNRESTRICTED_AGENT_LIMIT} agents",
                self.algorithm
            )));
        }
        Ok(())
    }

    fn sim_options(&self) -> SimOptions {
        let mut opts = self.sim.clone();
        opts.monitor_cost |= self.monitor_cost_enabled || self.algorithm.charges_monitoring();
        if let ConvergenceGoal::Fraction(f) = self.goal {
            opts.fraction_goal = f;
        }
        opts.series_buckets = self.series.buckets(self.game.horizon);
        opts
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Accumulates runs in run order.
struct Aggregate {
    goal: ConvergenceGoal,
    n_resources: usize,
    horizon: u64,
    buckets: Option<Vec<u64>>,
    singly: Vec<u64>,
    colliding: Vec<u64>,
    successes: Vec<u64>,
    payoff_sum: Vec<f64>,
    jain: Vec<f64>,
    payoffs: Vec<f64>,
    converged: Vec<f64>,
    censored: Vec<f64>,
    utilization: Vec<f64>,
    max_per_episode: u32,
    runs: usize,
}

impl Aggregate {
    fn new(spec: &ExperimentSpec, opts: &SimOptions) -> Self {
        let n = spec.game.n_agents;
        let b = opts.series_buckets.clone();
        let len = b.as_ref().map_or(0, |b| b.len());
        Aggregate {
            goal: spec.goal,
            n_resources: spec.game.n_resources,
            horizon: spec.game.horizon,
            buckets: b,
            singly: vec![0; len],
            colliding: vec![0; len],
            successes: vec![0; n],
            payoff_sum: vec![0.0; n],
            jain: Vec::new(),
            payoffs: Vec::new(),
            converged: Vec::new(),
            censored: Vec::new(),
            utilization: Vec::new(),
            max_per_episode: 0,
            runs: 0,
        }
    }

    fn bucket_end(&self, i: usize) -> u64 {
        let b = self.buckets.as_deref().unwrap_or_default();
        b.get(i + 1).copied().unwrap_or(self.horizon)
    }

    fn push(&mut self, run: &RunOutcome) {
        self.runs += 1;
        for (acc, s) in self.successes.iter_mut().zip(&run.successes) {
            *acc += s;
        }
        for (acc, p) in self.payoff_sum.iter_mut().zip(&run.discounted_payoff) {
            *acc += p;
        }
        if let Some(j) = jain_index_counts(&run.successes) {
            self.jain.push(j);
        }
        let n = run.discounted_payoff.len() as f64;
        self.payoffs.push(run.discounted_payoff.iter().sum::<f64>() / n);
        let step = match self.goal {
            ConvergenceGoal::Full => run.convergence_full,
            ConvergenceGoal::Fraction(_) => run.convergence_fraction,
        };
        match step {
            Some(s) => {
                self.converged.push(s as f64);
                self.censored.push(s as f64);
            }
            None => self.censored.push(run.steps_covered as f64),
        }
        self.utilization.push(run.final_utilization);
        self.max_per_episode = self.max_per_episode.max(run.max_successes_per_episode);
        if let Some(series) = &run.series {
            for (i, (s, c)) in series.iter().enumerate() {
                self.singly[i] += s;
                self.colliding[i] += c;
            }
            if run.fast_forwarded {
                // the replayed tail fills every resource at every step
                let from = run.steps_simulated;
                for i in 0..self.singly.len() {
                    let start = self.buckets.as_ref().map_or(0, |b| b[i]).max(from);
                    let end = self.bucket_end(i);
                    if end > start {
                        self.singly[i] += (end - start) * self.n_resources as u64;
                    }
                }
            }
        }
    }

    fn finish(self) -> MetricsReport {
        let runs = self.runs as f64;
        let r = self.n_resources as f64;
        let mut utilization_series = Vec::with_capacity(self.singly.len());
        let mut collision_series = Vec::with_capacity(self.singly.len());
        let series_steps = self.buckets.clone().unwrap_or_default();
        for i in 0..self.singly.len() {
            let len = (self.bucket_end(i) - series_steps[i]) as f64;
            utilization_series.push(self.singly[i] as f64 / (runs * len * r));
            collision_series.push(self.colliding[i] as f64 / (runs * len));
        }
        let (jain, jain_std) = mean_std(&self.jain);
        let (payoff_mean, payoff_std) = mean_std(&self.payoffs);
        let (conv, conv_std) = mean_std(&self.converged);
        let (lower, _) = mean_std(&self.censored);
        let defined = |v: f64| (!v.is_nan()).then_some(v);
        MetricsReport {
            utilization_series,
            collision_series,
            series_steps,
            per_agent_success_counts: self.successes,
            per_agent_discounted_payoff: self.payoff_sum.iter().map(|p| p / runs).collect(),
            jain: defined(jain),
            jain_std: defined(jain_std),
            payoff_mean,
            payoff_std,
            convergence_step: defined(conv),
            convergence_step_std: defined(conv_std),
            convergence_step_lower_bound: lower,
            unconverged_runs: self.runs - self.converged.len(),
            utilization_final: mean_std(&self.utilization).0,
            runs_aggregated: self.runs,
            max_successes_per_episode: self.max_per_episode,
        }
    }
}

/// Runs `spec.runs` instances with seeds `seed + i` and aggregates them.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MetricsReport> {
    spec.validate()?;
    let opts = spec.sim_options();
    let kind = spec.algorithm.agent_kind();
    let mut agg = Aggregate::new(spec, &opts);
    // Bound memory by holding only one chunk of outcomes at a time.
    let chunk = (4 * rayon::current_num_threads()).max(1) as u64;
    let runs = spec.runs as u64;
    let mut start = 0u64;
    while start < runs {
        let end = (start + chunk).min(runs);
        let outcomes: Vec<RunOutcome> = (start..end)
            .into_par_iter()
            .map(|i| {
                let cfg = spec.game.with_seed(spec.game.seed.wrapping_add(i));
                run_instance(&cfg, kind, &opts)
            })
            .collect::<Result<_>>()?;
        for run in &outcomes {
            agg.push(run);
        }
        start = end;
    }
    Ok(agg.finish())
}

/// One experiment's parameters and results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub game: GameConfig,
    pub runs: usize,
    pub report: MetricsReport,
}

pub fn run_specs(specs: &[ExperimentSpec]) -> Result<Vec<ReportRow>> {
    specs.iter().try_for_each(ExperimentSpec::validate)?;
    specs
        .iter()
        .map(|s| {
            Ok(ReportRow { algorithm: s.algorithm, game: s.game, runs: s.runs, report: run_experiment(s)? })
        })
        .collect()
}

/// Settings shared by every experiment of a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetOptions {
    pub runs: usize,
    pub seed: u64,
    /// Replaces the preset horizon.
    pub horizon: Option<u64>,
    /// Drops grid points with more agents.
    pub max_agents: Option<usize>,
    pub sim: SimOptions,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions { runs: DEFAULT_RUNS, seed: 0, horizon: None, max_agents: None, sim: SimOptions::default() }
    }
}

fn square_game(r: usize, k: usize, horizon: u64, seed: u64) -> Result<GameConfig> {
    GameConfig::custom(r * k, r, k, -1.0, 0.99, DEFAULT_BACKOFF, horizon, seed)
}

/// The experiments of a preset, in output order.
pub fn preset_specs(preset: Preset, opts: &PresetOptions) -> Result<Vec<ExperimentSpec>> {
    let horizon_or = |h: u64| opts.horizon.unwrap_or(h);
    let spec = |game: GameConfig, algorithm: Algorithm| {
        let mut s = ExperimentSpec::new(game, algorithm).with_runs(opts.runs);
        s.preset = Some(preset);
        s.sim = opts.sim.clone();
        s
    };
    let mut out = Vec::new();
    match preset {
        Preset::Table1 => {
            for &p in &BACKOFF_GRID {
                for &r in &TABLE_RESOURCES {
                    let game = square_game(r, r, horizon_or(DEFAULT_HORIZON), opts.seed)?.with_backoff(p)?;
                    out.push(spec(game, Algorithm::Canony));
                }
            }
        }
        Preset::Table2 => {
            let algorithms = [Algorithm::Canony, Algorithm::Exp3, Algorithm::Cexp3, Algorithm::Exp4, Algorithm::Exp4P];
            for a in algorithms {
                for &r in &TABLE_RESOURCES {
                    out.push(spec(square_game(r, r, horizon_or(DEFAULT_HORIZON), opts.seed)?, a));
                }
            }
        }
        Preset::Table3 => {
            for indifference in [false, true] {
                for a in Algorithm::ALL {
                    for &r in &TABLE_RESOURCES {
                        let mut game = square_game(r, r, horizon_or(DEFAULT_HORIZON), opts.seed)?;
                        if indifference {
                            game = game.with_indifference_period((r * r * r * r) as u64);
                        }
                        let mut s = spec(game, a);
                        // payoffs are the output; stop once the rest is negligible
                        s.sim.payoff_tolerance = s.sim.payoff_tolerance.or(Some(1e-9));
                        out.push(s);
                    }
                }
            }
        }
        Preset::Fig1 => {
            let algorithms = [Algorithm::Canony, Algorithm::Exp3, Algorithm::Cexp3, Algorithm::Exp4, Algorithm::Exp4P];
            for a in algorithms {
                let game = square_game(4, 4, horizon_or(DEFAULT_HORIZON), opts.seed)?;
                out.push(spec(game, a).with_series(SeriesMode::Log { per_decade: 50 }));
            }
        }
        Preset::Fig2 | Preset::Fig3 => {
            let outer = [2usize, 8, 32, 128];
            let inner = [2usize, 4, 8, 16, 32, 64, 128];
            for a in [Algorithm::Canony, Algorithm::Exp3] {
                for &o in &outer {
                    for &i in &inner {
                        let (r, k) = if preset == Preset::Fig2 { (i, o) } else { (o, i) };
                        let mut s = spec(square_game(r, k, horizon_or(FIGURE_HORIZON), opts.seed)?, a);
                        // nothing else is reported at this scale
                        s.sim.stop_at_convergence = a == Algorithm::Canony;
                        out.push(s);
                    }
                }
            }
        }
    }
    if let Some(max) = opts.max_agents {
        out.retain(|s| s.game.n_agents <= max);
    }
    Ok(out)
}

pub fn run_preset(preset: Preset, opts: &PresetOptions) -> Result<Vec<ReportRow>> {
    run_specs(&preset_specs(preset, opts)?)
}

/// Mean payoff per back-off value (rows) and `R = K` (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackoffTable {
    pub backoffs: Vec<f64>,
    pub resources: Vec<usize>,
    pub payoff: Vec<Vec<f64>>,
    pub rows: Vec<ReportRow>,
}

impl BackoffTable {
    pub fn get(&self, p: f64, r: usize) -> Option<f64> {
        let i = self.backoffs.iter().position(|&x| (x - p).abs() < 1e-12)?;
        let j = self.resources.iter().position(|&x| x == r)?;
        Some(self.payoff[i][j])
    }
}

/// The courtesy sweep: convention agents over [`BACKOFF_GRID`] and
/// [`TABLE_RESOURCES`].
pub fn sweep_backoff(opts: &PresetOptions) -> Result<BackoffTable> {
    let rows = run_preset(Preset::Table1, opts)?;
    let backoffs = BACKOFF_GRID.to_vec();
    let resources = TABLE_RESOURCES.to_vec();
    let mut payoff = vec![vec![f64::NAN; resources.len()]; backoffs.len()];
    for row in &rows {
        let i = backoffs.iter().position(|&p| (p - row.game.backoff_prob).abs() < 1e-12);
        let j = resources.iter().position(|&r| r == row.game.n_resources);
        if let (Some(i), Some(j)) = (i, j) {
            payoff[i][j] = row.report.payoff_mean;
        }
    }
    Ok(BackoffTable { backoffs, resources, payoff, rows })
}

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub p_backoff: f64,
    pub delta: f64,
    pub t_ind: u64,
    pub runs: usize,
    pub convergence_step_mean: Option<f64>,
    pub convergence_step_std: Option<f64>,
    pub jain_mean: Option<f64>,
    pub payoff_mean: f64,
    pub payoff_std: f64,
    pub utilization_final: f64,
}

impl From<&ReportRow> for SummaryRow {
    fn from(row: &ReportRow) -> Self {
        let g = &row.game;
        SummaryRow {
            algorithm: row.algorithm.name().to_string(),
            r: g.n_resources,
            k: g.context_size,
            n: g.n_agents,
            p_backoff: g.backoff_prob,
            delta: g.discount,
            t_ind: g.indifference_period,
            runs: row.runs,
            convergence_step_mean: row.report.convergence_step,
            convergence_step_std: row.report.convergence_step_std,
            jain_mean: row.report.jain,
            payoff_mean: row.report.payoff_mean,
            payoff_std: row.report.payoff_std,
            utilization_final: row.report.utilization_final,
        }
    }
}

/// One line of a time-series CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub step: u64,
    pub utilization_mean: f64,
    pub collisions_mean: f64,
}

pub fn write_summary_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "algorithm", "R", "K", "N", "p_backoff", "delta", "t_ind", "runs",
            "convergence_step_mean", "convergence_step_std", "jain_mean", "payoff_mean",
            "payoff_std", "utilization_final",
        ])?;
    }
    for row in rows {
        w.serialize(SummaryRow::from(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_csv<W: Write>(report: &MetricsReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "utilization_mean", "collisions_mean"])?;
    for ((step, u), c) in report.series_steps.iter().zip(&report.utilization_series).zip(&report.collision_series) {
        w.write_record([step.to_string(), u.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a time-series file; header only when the series is empty.
pub fn emit_series(report: &MetricsReport, path: &Path) -> Result<()> {
    write_series_csv(report, fs::File::create(path)?)
}

/// Path of the time-series file belonging to `row` next to `summary`.
pub fn series_path(summary: &Path, row: &ReportRow) -> PathBuf {
    let stem = summary.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let g = &row.game;
    let name = format!(
        "{stem}_series_{}_R{}_K{}_N{}_p{:.4}_tind{}.csv",
        row.algorithm, g.n_resources, g.context_size, g.n_agents, g.backoff_prob, g.indifference_period
    );
    summary.with_file_name(name)
}

/// Writes the rows to `path` and returns every file written. CSV output
/// adds one time-series file per row that recorded a series.
pub fn emit(rows: &[ReportRow], format: OutputFormat, path: &Path) -> Result<Vec<PathBuf>> {
    let mut written = vec![path.to_path_buf()];
    match format {
        OutputFormat::Json => {
            let mut f = fs::File::create(path)?;
            serde_json::to_writer_pretty(&mut f, rows)?;
            f.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            write_summary_csv(rows, fs::File::create(path)?)?;
            for row in rows.iter().filter(|r| !r.report.series_steps.is_empty()) {
                let p = series_path(path, row);
                emit_series(&row.report, &p)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_series_csv(path: &Path) -> Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_json(path: &Path) -> Result<Vec<ReportRow>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Run settings as read from a config file or the command line; every
/// field is optional so that sources can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub algorithm: Option<String>,
    pub agents: Option<usize>,
    pub resources: Option<usize>,
    pub contexts: Option<usize>,
    pub backoff: Option<f64>,
    pub collision_cost: Option<f64>,
    pub discount: Option<f64>,
    pub horizon: Option<u64>,
    pub t_ind: Option<u64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    /// `fair` or `unrestricted` expert set for exp4 and exp4p.
    pub experts: Option<String>,
    pub max_agents: Option<usize>,
}

/// What a [`RunConfig`] resolves to.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Single(ExperimentSpec),
    Preset(Preset, PresetOptions),
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// Fields set in `over` replace those of `self`.
    pub fn overridden_by(self, over: RunConfig) -> RunConfig {
        RunConfig {
            algorithm: over.algorithm.or(self.algorithm),
            agents: over.agents.or(self.agents),
            resources: over.resources.or(self.resources),
            contexts: over.contexts.or(self.contexts),
            backoff: over.backoff.or(self.backoff),
            collision_cost: over.collision_cost.or(self.collision_cost),
            discount: over.discount.or(self.discount),
            horizon: over.horizon.or(self.horizon),
            t_ind: over.t_ind.or(self.t_ind),
            runs: over.runs.or(self.runs),
            seed: over.seed.or(self.seed),
            preset: over.preset.or(self.preset),
            format: over.format.or(self.format),
            out: over.out.or(self.out),
            experts: over.experts.or(self.experts),
            max_agents: over.max_agents.or(self.max_agents),
        }
    }

    pub fn output_format(&self) -> Result<OutputFormat> {
        self.format.as_deref().map_or(Ok(OutputFormat::Csv), str::parse)
    }

    fn sim_options(&self) -> Result<SimOptions> {
        let experts = match self.experts.as_deref() {
            None | Some("fair") => ExpertScope::Fair,
            Some("unrestricted") => ExpertScope::Unrestricted,
            Some(other) => return Err(Error::InvalidConfig(format!("unknown expert set '{other}'"))),
        };
        Ok(SimOptions { experts, ..SimOptions::default() })
    }

    pub fn plan(&self) -> Result<Plan> {
        let format = self.output_format()?;
        let runs = self.runs.unwrap_or(DEFAULT_RUNS);
        let seed = self.seed.unwrap_or(0);
        let sim = self.sim_options()?;
        if let Some(name) = &self.preset {
            let preset: Preset = name.parse()?;
            let fixed = [
                ("algorithm", self.algorithm.is_some()),
                ("agents", self.agents.is_some()),
                ("resources", self.resources.is_some()),
                ("contexts", self.contexts.is_some()),
                ("backoff", self.backoff.is_some()),
                ("collision-cost", self.collision_cost.is_some()),
                ("discount", self.discount.is_some()),
                ("t-ind", self.t_ind.is_some()),
            ];
            if let Some((flag, _)) = fixed.iter().find(|(_, set)| *set) {
                return Err(Error::InvalidConfig(format!("{flag} is fixed by preset {name}")));
            }
            let opts = PresetOptions { runs, seed, horizon: self.horizon, max_agents: self.max_agents, sim };
            // surface infeasible grid points before any work starts
            for s in preset_specs(preset, &opts)? {
                let mut s = s;
                s.output = format;
                s.validate()?;
            }
            return Ok(Plan::Preset(preset, opts));
        }
        let algorithm: Algorithm = self.algorithm.as_deref().unwrap_or("canony").parse()?;
        let n = self.agents.unwrap_or(16);
        let r = self.resources.unwrap_or(4);
        if r == 0 {
            return Err(Error::InvalidConfig("resources must be at least 1".into()));
        }
        let k = self.contexts.unwrap_or_else(|| n.div_ceil(r).max(1));
        let game = GameConfig::custom(
            n,
            r,
            k,
            self.collision_cost.unwrap_or(-1.0),
            self.discount.unwrap_or(0.99),
            self.backoff.unwrap_or(DEFAULT_BACKOFF),
            self.horizon.unwrap_or(DEFAULT_HORIZON),
            seed,
        )?
        .with_indifference_period(self.t_ind.unwrap_or(0));
        let mut spec = ExperimentSpec::new(game, algorithm).with_runs(runs);
        spec.output = format;
        spec.sim = sim;
        spec.validate()?;
        Ok(Plan::Single(spec))
    }
}

/// Runs a plan.
pub fn execute(plan: &Plan) -> Result<Vec<ReportRow>> {
    match plan {
        Plan::Single(spec) => run_specs(std::slice::from_ref(spec)),
        Plan::Preset(p, opts) => run_preset(*p, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithm: Algorithm, runs: usize) -> ExperimentSpec {
        let game = GameConfig::new(8, 2, 3_000, 17).unwrap();
        ExperimentSpec::new(game, algorithm).with_runs(runs)
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.name()));
        }
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("exp5".parse::<Algorithm>().is_err());
    }

    #[test]
    fn report_means_are_means_of_runs() {
        let spec = small(Algorithm::Cexp3, 6);
        let report = run_experiment(&spec).unwrap();
        let opts = spec.sim_options();
        let mut payoffs = Vec::new();
        let mut jains = Vec::new();
        let mut utils = Vec::new();
        for i in 0..6 {
            let cfg = spec.game.with_seed(17 + i);
            let run = run_instance(&cfg, spec.algorithm.agent_kind(), &opts).unwrap();
            payoffs.push(run.discounted_payoff.iter().sum::<f64>() / 8.0);
            jains.push(jain_index_counts(&run.successes).unwrap());
            utils.push(run.final_utilization);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((report.payoff_mean - mean(&payoffs)).abs() < 1e-12);
        assert!((report.jain.unwrap() - mean(&jains)).abs() < 1e-12);
        assert!((report.utilization_final - mean(&utils)).abs() < 1e-12);
        assert_eq!(report.runs_aggregated, 6);
    }

    #[test]
    fn convention_reports_full_fairness() {
        let report = run_experiment(&small(Algorithm::Canony, 8)).unwrap();
        assert_eq!(report.unconverged_runs, 0);
        assert!((report.jain.unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(report.utilization_final, 1.0);
        assert!(report.max_successes_per_episode <= 1);
    }

    #[test]
    fn fast_forwarded_series_equals_stepped_series() {
        let mut spec = small(Algorithm::Canony, 4).with_series(SeriesMode::Log { per_decade: 10 });
        let fast = run_experiment(&spec).unwrap();
        spec.sim.fast_forward = false;
        let slow = run_experiment(&spec).unwrap();
        assert_eq!(fast.series_steps, slow.series_steps);
        for (a, b) in fast.utilization_series.iter().zip(&slow.utilization_series) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(fast.collision_series, slow.collision_series);
        assert_eq!(*fast.utilization_series.last().unwrap(), 1.0);
    }

    #[test]
    fn log_buckets() {
        let b = SeriesMode::Log { per_decade: 4 }.buckets(1000).unwrap();
        assert_eq!(b[..4], [0, 1, 3, 5]);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(*b.last().unwrap() < 1000);
        assert_eq!(SeriesMode::Every.buckets(3).unwrap(), vec![0, 1, 2]);
        assert!(SeriesMode::Off.buckets(3).is_none());
    }

    #[test]
    fn infeasible_and_invalid_specs() {
        let mut spec = ExperimentSpec::new(GameConfig::new(64, 8, 10, 0).unwrap(), Algorithm::Exp4);
        assert!(spec.validate().is_ok());
        spec.sim.experts = ExpertScope::Unrestricted;
        let err = spec.validate().unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let zero = small(Algorithm::Canony, 0);
        assert_eq!(zero.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn preset_grids() {
        let opts = PresetOptions::default();
        let t1 = preset_specs(Preset::Table1, &opts).unwrap();
        assert_eq!(t1.len(), 20);
        assert!(t1.iter().all(|s| s.game.n_agents == s.game.n_resources * s.game.context_size
            && s.game.n_resources == s.game.context_size
            && s.game.horizon == DEFAULT_HORIZON
            && s.game.discount == 0.99));
        let t3 = preset_specs(Preset::Table3, &opts).unwrap();
        assert_eq!(t3.len(), 48);
        assert!(t3.iter().any(|s| s.game.indifference_period == 16 * 256 * 16));
        let f1 = preset_specs(Preset::Fig1, &opts).unwrap();
        assert!(f1.iter().all(|s| s.game.n_agents == 16 && s.game.n_resources == 4));
        let capped = PresetOptions { max_agents: Some(1024), ..opts.clone() };
        let f3 = preset_specs(Preset::Fig3, &capped).unwrap();
        assert!(!f3.is_empty() && f3.iter().all(|s| s.game.n_agents <= 1024));
    }

    #[test]
    fn config_layers() {
        let file = RunConfig::from_toml_str("algorithm = \"exp3\"\nagents = 8\nresources = 2\nruns = 3\n").unwrap();
        let flags = RunConfig { runs: Some(5), ..Default::default() };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.runs, Some(5));
        assert_eq!(merged.algorithm.as_deref(), Some("exp3"));
        let Plan::Single(spec) = merged.plan().unwrap() else { panic!() };
        assert_eq!(spec.game.context_size, 4);
        assert!(RunConfig::from_toml_str("agentz = 3").is_err());
        let bad = RunConfig { preset: Some("table2".into()), agents: Some(4), ..Default::default() };
        assert_eq!(bad.plan().unwrap_err().exit_code(), 2);
        let infeasible = RunConfig {
            algorithm: Some("exp4".into()),
            agents: Some(64),
            resources: Some(8),
            experts: Some("unrestricted".into()),
            ..Default::default()
        };
        assert_eq!(infeasible.plan().unwrap_err().exit_code(), 3);
    }
}
