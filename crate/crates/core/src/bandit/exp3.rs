use rand::Rng;

/// Relative log-weight floor; entries further below the maximum carry no
/// probability mass at double precision anyway.
pub(crate) const LOG_WEIGHT_FLOOR: f64 = -700.0;

/// EXP3 over `arms` arms.
///
/// `p_i = (1 - γ) w_i / W + γ / A`; the chosen arm's weight is multiplied
/// by `exp(γ x̂ / A)` with `x̂ = x / p_chosen`. Weights are kept relative to
/// the current maximum, which is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3 {
    weights: Vec<f64>,
    total: f64,
    gamma: f64,
}

impl Exp3 {
    pub fn new(arms: usize, gamma: f64) -> Self {
        assert!(arms >= 1, "EXP3 needs at least one arm");
        assert!((0.0..=1.0).contains(&gamma), "exploration rate {gamma} outside [0, 1]");
        Exp3 { weights: vec![1.0; arms], total: arms as f64, gamma }
    }

    /// `γ = min(1, sqrt(A ln A / ((e - 1) T)))` for horizon `T`.
    pub fn tuned_gamma(arms: usize, horizon: u64) -> f64 {
        let a = arms as f64;
        if arms < 2 {
            return 1.0;
        }
        ((a * a.ln()) / ((std::f64::consts::E - 1.0) * horizon.max(1) as f64)).sqrt().min(1.0)
    }

    pub fn arms(&self) -> usize {
        self.weights.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn probability(&self, arm: usize) -> f64 {
        let a = self.weights.len() as f64;
        (1.0 - self.gamma) * self.weights[arm] / self.total + self.gamma / a
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.weights.len()).map(|i| self.probability(i)).collect()
    }

    #[inline]
    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> usize {
        let u: f64 = rng.gen();
        let last = self.weights.len() - 1;
        let mut acc = 0.0;
        for i in 0..last {
            acc += self.probability(i);
            if u < acc {
                return i;
            }
        }
        last
    }

    /// Importance-weighted update with a reward in `[0, 1]`.
    pub fn update(&mut self, arm: usize, reward: f64) {
        let a = self.weights.len() as f64;
        let estimate = reward / self.probability(arm);
        let gain = self.gamma * estimate / a;
        if gain == 0.0 {
            return;
        }
        let old = self.weights[arm];
        let new = old * gain.exp();
        if new > 1.0 {
            // renormalise so the largest weight is 1 again
            let floor = LOG_WEIGHT_FLOOR.exp();
            self.weights[arm] = 1.0;
            let inv = 1.0 / new;
            for (i, w) in self.weights.iter_mut().enumerate() {
                if i != arm {
                    *w = (*w * inv).max(floor);
                }
            }
            self.total = self.weights.iter().sum();
        } else {
            self.weights[arm] = new;
            self.total += new - old;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuned_gamma_formula() {
        let g = Exp3::tuned_gamma(3, 1_000_000);
        let expect = (3.0 * 3f64.ln() / ((std::f64::consts::E - 1.0) * 1e6)).sqrt();
        assert!((g - expect).abs() < 1e-15);
        assert_eq!(Exp3::tuned_gamma(5, 1), 1.0);
    }

    #[test]
    fn uniform_when_weights_equal() {
        let e = Exp3::new(5, 0.0);
        for p in e.probabilities() {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn one_step_matches_hand_computation() {
        // From uniform weights each probability is 1/A; a reward x on arm 2
        // multiplies its weight by exp(γ (x / (1/A)) / A) = exp(γ x).
        let (arms, gamma, x) = (5usize, 0.1, 0.5);
        let mut e = Exp3::new(arms, gamma);
        e.update(2, x);
        let ratio = e.weights()[2] / e.weights()[0];
        assert!((ratio - (gamma * x).exp()).abs() < 1e-12);
        let w = (gamma * x).exp();
        let total = 4.0 + w;
        let expect = (1.0 - gamma) * w / total + gamma / 5.0;
        assert!((e.probability(2) - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_leaves_weights() {
        let mut e = Exp3::new(3, 0.2);
        e.update(1, 0.0);
        assert_eq!(e.weights(), &[1.0, 1.0, 1.0]);
    }
}
