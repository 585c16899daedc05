use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainVariant {
    /// State 1 absorbing, state 0 restarts at N.
    X,
    /// States 0 and 1 absorbing.
    Y,
}

/// Number of agents still competing for one resource, each backing off
/// independently with probability `p` per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtmcSpec {
    pub variant: ChainVariant,
    pub n: usize,
    pub p: f64,
}

impl DtmcSpec {
    pub fn new(variant: ChainVariant, n: usize, p: f64) -> Result<Self> {
        let spec = DtmcSpec { variant, n, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidConfig("chain needs n >= 1".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidConfig(format!("back-off probability {} not in (0, 1)", self.p)));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.n + 1
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// Row-stochastic transition matrix over states `0..=n`.
pub fn build_chain(spec: &DtmcSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.n;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    let lf = ln_factorials(n);
    let (lp, lq) = (spec.p.ln(), (1.0 - spec.p).ln());
    match spec.variant {
        ChainVariant::X => m[(0, n)] = 1.0,
        ChainVariant::Y => m[(0, 0)] = 1.0,
    }
    m[(1, 1)] = 1.0;
    for i in 2..=n {
        for j in 0..=i {
            let ln = lf[i] - lf[j] - lf[i - j] + (i - j) as f64 * lp + j as f64 * lq;
            m[(i, j)] = ln.exp();
        }
    }
    Ok(m)
}

fn target_mask(n_states: usize, target: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n_states];
    for &s in target {
        if s >= n_states {
            return Err(Error::InvalidConfig(format!("target state {s} outside 0..{n_states}")));
        }
        mask[s] = true;
    }
    Ok(mask)
}

/// States from which some state of `goal` is reachable.
fn can_reach(m: &DMatrix<f64>, goal: &[bool]) -> Vec<bool> {
    let n = m.nrows();
    let mut reach = goal.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !reach[i] && (0..n).any(|j| reach[j] && m[(i, j)] > 0.0) {
                reach[i] = true;
                changed = true;
            }
        }
    }
    reach
}

/// Solves `(I - Q) x = b` over the listed states by LU factorization.
fn solve_restricted(m: &DMatrix<f64>, states: &[usize], b: &[f64]) -> Result<Vec<f64>> {
    let d = states.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let a = DMatrix::from_fn(d, d, |r, c| {
        let v = -m[(states[r], states[c])];
        if r == c {
            1.0 + v
        } else {
            v
        }
    });
    let rhs = DVector::from_column_slice(b);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("{d}x{d} hitting system")))?;
    Ok(x.iter().copied().collect())
}

/// Probability of ever entering `target` from each state: the minimal
/// non-negative solution of `h = P h` with `h = 1` on the target.
pub fn hitting_probability(spec: &DtmcSpec, target: &[usize]) -> Result<Vec<f64>> {
    let m = build_chain(spec)?;
    let n_states = spec.states();
    let in_target = target_mask(n_states, target)?;
    // States that cannot reach the target have probability 0; this picks
    // the minimal solution.
    let reach = can_reach(&m, &in_target);
    let free: Vec<usize> = (0..n_states).filter(|&i| reach[i] && !in_target[i]).collect();
    let b: Vec<f64> = free
        .iter()
        .map(|&i| (0..n_states).filter(|&j| in_target[j]).map(|j| m[(i, j)]).sum())
        .collect();
    let x = solve_restricted(&m, &free, &b)?;
    let mut h: Vec<f64> = in_target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for (&i, v) in free.iter().zip(x) {
        h[i] = v;
    }
    Ok(h)
}

/// Expected number of steps to enter `target` from each state;
/// `f64::INFINITY` where the target is not reached almost surely.
pub fn hitting_time(spec: &DtmcSpec, target: &[usize]) -> Result<Vec<f64>> {
    let m = build_chain(spec)?;
    let n_states = spec.states();
    let in_target = target_mask(n_states, target)?;
    let reach = can_reach(&m, &in_target);
    // A state that can reach a state which never hits the target has an
    // infinite expectation.
    let lost: Vec<bool> = reach.iter().map(|r| !r).collect();
    let doomed = can_reach(&m, &lost);
    let free: Vec<usize> = (0..n_states).filter(|&i| !doomed[i] && !in_target[i]).collect();
    let x = solve_restricted(&m, &free, &vec![1.0; free.len()])?;
    let mut k: Vec<f64> = (0..n_states)
        .map(|i| if in_target[i] { 0.0 } else { f64::INFINITY })
        .collect();
    for (&i, v) in free.iter().zip(x) {
        k[i] = v;
    }
    Ok(k)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl McEstimate {
    fn from_samples(sum: f64, sum_sq: f64, trials: usize) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        McEstimate { mean, std_err: (var / n).sqrt(), trials }
    }

    /// `|mean - value| <= z` standard errors (plus a rounding allowance).
    pub fn agrees_with(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= z * self.std_err + 1e-12
    }
}

fn sample_row<G: Rng + ?Sized>(m: &DMatrix<f64>, i: usize, rng: &mut G) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let last = m.ncols() - 1;
    for j in 0..last {
        acc += m[(i, j)];
        if u < acc {
            return j;
        }
    }
    last
}

fn is_absorbing(m: &DMatrix<f64>, i: usize) -> bool {
    m[(i, i)] == 1.0
}

/// Fraction of trajectories from `start` that enter `target` before
/// settling in an absorbing state outside it.
pub fn simulate_hitting_probability<G: Rng + ?Sized>(
    spec: &DtmcSpec,
    target: &[usize],
    start: usize,
    trials: usize,
    rng: &mut G,
) -> Result<McEstimate> {
    let m = build_chain(spec)?;
    let in_target = target_mask(spec.states(), target)?;
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut s = start;
        loop {
            if in_target[s] {
                hits += 1;
                break;
            }
            if is_absorbing(&m, s) {
                break;
            }
            s = sample_row(&m, s, rng);
        }
    }
    Ok(McEstimate::from_samples(hits as f64, hits as f64, trials))
}

/// Mean number of steps from `start` to `target`; trajectories are cut
/// after `max_steps` and an error is returned if any is.
pub fn simulate_hitting_time<G: Rng + ?Sized>(
    spec: &DtmcSpec,
    target: &[usize],
    start: usize,
    trials: usize,
    max_steps: u64,
    rng: &mut G,
) -> Result<McEstimate> {
    let m = build_chain(spec)?;
    let in_target = target_mask(spec.states(), target)?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let mut s = start;
        let mut steps = 0u64;
        while !in_target[s] {
            if steps == max_steps || is_absorbing(&m, s) {
                return Err(Error::Contract(format!("trajectory from {start} never reached the target")));
            }
            s = sample_row(&m, s, rng);
            steps += 1;
        }
        sum += steps as f64;
        sum_sq += (steps * steps) as f64;
    }
    Ok(McEstimate::from_samples(sum, sum_sq, trials))
}

/// Lower bound on `h_i` of the Y-chain for every `i >= 1`; attained at `i = 2`.
pub fn hitting_probability_lower_bound(p: f64) -> f64 {
    2.0 * (1.0 - p) / (2.0 - p)
}
