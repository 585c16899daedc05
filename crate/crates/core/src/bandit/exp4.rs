use rand::Rng;

use super::exp3::LOG_WEIGHT_FLOOR;
use super::experts::ExpertSet;

/// Update rule of an expert-advice bandit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdviceRule {
    /// `p_j = (1 - γ) q_j + γ / A`, `w_i *= exp(γ ŷ_i / A)`.
    Exp4 { gamma: f64 },
    /// `p_j = (1 - A p_min) q_j + p_min`,
    /// `w_i *= exp(p_min / 2 (ŷ_i + v̂_i sqrt(ln(M / δ) / (A T))))`.
    Exp4P { p_min: f64, confidence: f64 },
}

/// EXP4 and EXP4.P with deterministic experts.
///
/// Experts that yield at a context form one implicit group; only experts
/// that advise an access are indexed per context. Updates shift log-weights
/// relative to the yielding group, so one step costs
/// `O(accessing experts at the context)` rather than `O(M)`.
#[derive(Debug, Clone)]
pub struct Exp4 {
    arms: usize,
    rule: AdviceRule,
    experts: ExpertSet,
    /// Per context, `(expert, arm)` for experts advising an access.
    active: Vec<Vec<(u32, u32)>>,
    log_w: Vec<f64>,
    w: Vec<f64>,
    shift: f64,
    total: f64,
    updates_since_refresh: u32,
    scratch: Vec<f64>,
    cached_context: Option<usize>,
}

const REFRESH_EVERY: u32 = 4096;
const MAX_EXCESS: f64 = 300.0;

impl Exp4 {
    pub fn new(experts: ExpertSet, rule: AdviceRule) -> Self {
        let arms = experts.n_resources() + 1;
        let k = experts.context_size();
        let mut active = vec![Vec::new(); k];
        for e in 0..experts.len() {
            for (ctx, slot) in active.iter_mut().enumerate() {
                let arm = experts.advice(e, ctx + 1).arm_index();
                if arm != 0 {
                    slot.push((e as u32, arm as u32));
                }
            }
        }
        let m = experts.len();
        Exp4 {
            arms,
            rule,
            experts,
            active,
            log_w: vec![0.0; m],
            w: vec![1.0; m],
            shift: 0.0,
            total: m as f64,
            updates_since_refresh: 0,
            scratch: vec![0.0; arms],
            cached_context: None,
        }
    }

    /// `γ = min(1, sqrt(A ln M / ((e - 1) T)))`.
    pub fn tuned_exp4(arms: usize, n_experts: usize, horizon: u64) -> AdviceRule {
        let (a, m) = (arms as f64, n_experts as f64);
        let gamma =
            ((a * m.ln()) / ((std::f64::consts::E - 1.0) * horizon.max(1) as f64)).sqrt().min(1.0);
        AdviceRule::Exp4 { gamma }
    }

    /// `p_min = sqrt(ln M / (A T))` capped at `1/A`; confidence term
    /// `sqrt(ln(M / δ) / (A T))`.
    pub fn tuned_exp4p(arms: usize, n_experts: usize, horizon: u64, failure_prob: f64) -> AdviceRule {
        let (a, m, t) = (arms as f64, n_experts as f64, horizon.max(1) as f64);
        let p_min = (m.ln() / (a * t)).sqrt().min(1.0 / a);
        let confidence = ((m / failure_prob).ln() / (a * t)).sqrt();
        AdviceRule::Exp4P { p_min, confidence }
    }

    pub fn rule(&self) -> AdviceRule {
        self.rule
    }

    pub fn experts(&self) -> &ExpertSet {
        &self.experts
    }

    /// Total probability mass spread uniformly over the arms.
    pub fn exploration_rate(&self) -> f64 {
        match self.rule {
            AdviceRule::Exp4 { gamma } => gamma,
            AdviceRule::Exp4P { p_min, .. } => self.arms as f64 * p_min,
        }
    }

    /// Expert weights relative to the largest one.
    pub fn weights(&self) -> Vec<f64> {
        let max = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.log_w.iter().map(|l| (l - max).max(LOG_WEIGHT_FLOOR).exp()).collect()
    }

    fn fill_probabilities(&mut self, context: usize) {
        if self.cached_context == Some(context) {
            return;
        }
        let p = &mut self.scratch;
        p.iter_mut().for_each(|x| *x = 0.0);
        let mut active_mass = 0.0;
        for &(e, arm) in &self.active[context - 1] {
            let w = self.w[e as usize];
            p[arm as usize] += w;
            active_mass += w;
        }
        p[0] = (self.total - active_mass).max(0.0);
        let (mix, floor) = match self.rule {
            AdviceRule::Exp4 { gamma } => (1.0 - gamma, gamma / self.arms as f64),
            AdviceRule::Exp4P { p_min, .. } => (1.0 - self.arms as f64 * p_min, p_min),
        };
        let norm = p.iter().sum::<f64>();
        for x in p.iter_mut() {
            *x = mix * *x / norm + floor;
        }
        self.cached_context = Some(context);
    }

    pub fn probabilities(&mut self, context: usize) -> Vec<f64> {
        self.fill_probabilities(context);
        self.scratch.clone()
    }

    pub fn sample<G: Rng + ?Sized>(&mut self, context: usize, rng: &mut G) -> usize {
        self.fill_probabilities(context);
        let u: f64 = rng.gen();
        let last = self.arms - 1;
        let mut acc = 0.0;
        for (i, &p) in self.scratch[..last].iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        last
    }

    /// Importance-weighted update for `arm` played at `context` with
    /// reward in `[0, 1]`.
    pub fn update(&mut self, context: usize, arm: usize, reward: f64) {
        self.fill_probabilities(context);
        let probs = &self.scratch;
        let estimate = reward / probs[arm];
        // Log-weight increment of an expert advising `a`, relative to the
        // increment of the experts advising yield.
        let gain = |a: usize| -> f64 {
            match self.rule {
                AdviceRule::Exp4 { gamma } => {
                    if a == arm {
                        gamma * estimate / self.arms as f64
                    } else {
                        0.0
                    }
                }
                AdviceRule::Exp4P { p_min, confidence } => {
                    let y = if a == arm { estimate } else { 0.0 };
                    0.5 * p_min * (y + confidence / probs[a])
                }
            }
        };
        let base = gain(0);
        let mut deltas = [0.0f64; 64];
        let use_table = self.arms <= deltas.len();
        if use_table {
            for (a, d) in deltas.iter_mut().enumerate().take(self.arms) {
                *d = gain(a) - base;
            }
        }
        let mut changed = false;
        for &(e, a) in &self.active[context - 1] {
            let d = if use_table { deltas[a as usize] } else { gain(a as usize) - base };
            if d == 0.0 {
                continue;
            }
            let e = e as usize;
            self.log_w[e] += d;
            let new = (self.log_w[e] - self.shift).max(LOG_WEIGHT_FLOOR).exp();
            self.total += new - self.w[e];
            self.w[e] = new;
            changed = true;
            if self.log_w[e] - self.shift > MAX_EXCESS {
                self.updates_since_refresh = REFRESH_EVERY;
            }
        }
        if changed {
            self.cached_context = None;
            self.updates_since_refresh += 1;
            if self.updates_since_refresh >= REFRESH_EVERY {
                self.refresh();
            }
        }
    }

    /// Re-centres log-weights on their maximum and recomputes the total.
    fn refresh(&mut self) {
        let max = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.shift = max;
        let floor = max + LOG_WEIGHT_FLOOR;
        let mut total = 0.0;
        for (l, w) in self.log_w.iter_mut().zip(self.w.iter_mut()) {
            if *l < floor {
                *l = floor;
            }
            *w = (*l - max).exp();
            total += *w;
        }
        self.total = total;
        self.updates_since_refresh = 0;
        self.cached_context = None;
    }
}
