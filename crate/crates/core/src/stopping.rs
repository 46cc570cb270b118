//! Optimal stopping of progressive transmission.
//!
//! With importance-aware selection the best cumulative gain after `k` more
//! delivered slots, `G*(k)`, is the sum of the `Y0 * k` largest remaining
//! gains. It is concave in `k`, the envelope `tilde_H` is convex and
//! decreasing in `G`, so `tilde_H(G*(k)) + c0 k` is convex in `k` and the
//! minimiser is found by a one-step threshold. On a fading channel the
//! envelope is averaged over the binomial number of successful slots, which
//! keeps convexity and raises the threshold by `1 / (1 - p_o)`.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundFit, ExpBoundParams, DEFAULT_QUAD_TOL};
use crate::error::{Error, Result};
use crate::gains::GainTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingPolicy {
    /// `c0`, in nats per slot.
    pub cost_per_slot: f64,
    /// `K`, the look-ahead horizon in slots.
    pub horizon: usize,
    /// Stop as soon as the current uncertainty is at or below this.
    pub uncertainty_target: Option<f64>,
    pub bound_fit: BoundFit,
    pub quad_tol: f64,
}

impl StoppingPolicy {
    pub fn new(cost_per_slot: f64, horizon: usize) -> Result<Self> {
        let p = StoppingPolicy {
            cost_per_slot,
            horizon,
            uncertainty_target: None,
            bound_fit: BoundFit::default(),
            quad_tol: DEFAULT_QUAD_TOL,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_target(mut self, target: Option<f64>) -> Result<Self> {
        self.uncertainty_target = target;
        self.validate()?;
        Ok(self)
    }

    pub fn with_bound_fit(mut self, fit: BoundFit) -> Self {
        self.bound_fit = fit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost_per_slot.is_finite() && self.cost_per_slot > 0.0) {
            return Err(Error::InvalidPolicy(format!(
                "cost per slot must be positive, got {}",
                self.cost_per_slot
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidPolicy("horizon must be at least 1".into()));
        }
        if let Some(t) = self.uncertainty_target {
            if !(t >= 0.0) {
                return Err(Error::InvalidPolicy(format!(
                    "uncertainty target must be non-negative, got {t}"
                )));
            }
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::InvalidPolicy("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopDecision {
    /// Transmit in the current slot.
    pub transmit: bool,
    /// Planned number of further transmissions, `k*`.
    pub planned_k: usize,
    /// One-step reward `tilde_H(G*(0)) - tilde_H(G*(1))`.
    pub reward: f64,
}

/// `G*(k)`: sum of the `min(remaining, y0 * k)` largest unreceived gains.
pub fn cumulative_gain(table: &GainTable, received: &[bool], y0: usize, k: usize) -> f64 {
    table.unreceived(received).take(y0 * k).map(|n| table.gain(n)).sum()
}

/// `[G*(0), G*(1), ..., G*(horizon)]`.
pub fn gain_profile(table: &GainTable, received: &[bool], y0: usize, horizon: usize) -> Vec<f64> {
    let mut profile = Vec::with_capacity(horizon + 1);
    let mut acc = 0.0;
    profile.push(acc);
    let mut it = table.unreceived(received);
    for _ in 0..horizon {
        for n in it.by_ref().take(y0) {
            acc += table.gain(n);
        }
        profile.push(acc);
    }
    profile
}

/// Smallest `k` minimising `values[k] + c0 * k`.
pub fn horizon_argmin(values: &[f64], c0: f64) -> usize {
    let mut best = 0;
    let mut best_val = values[0];
    for (k, v) in values.iter().enumerate().skip(1) {
        let total = v + c0 * k as f64;
        if total < best_val {
            best = k;
            best_val = total;
        }
    }
    best
}

/// Gaussian-channel threshold rule on a precomputed gain profile
/// (`profile[k] = G*(k)`, `k = 0..=K`).
///
/// `planned_k` is the first `k < K` whose one-step envelope drop is at most
/// `c0`, or `K` if there is none.
pub fn stop_gaussian_on_profile(bound: &ExpBoundParams, profile: &[f64], c0: f64) -> StopDecision {
    let horizon = profile.len() - 1;
    let envelope: Vec<f64> = profile.iter().map(|&g| bound.tilde_h(g)).collect();
    if horizon == 0 {
        return StopDecision {
            transmit: false,
            planned_k: 0,
            reward: 0.0,
        };
    }
    let reward = envelope[0] - envelope[1];
    let planned_k = (0..horizon)
        .find(|&k| envelope[k] - envelope[k + 1] <= c0)
        .unwrap_or(horizon);
    StopDecision {
        transmit: reward > c0,
        planned_k,
        reward,
    }
}

pub fn stop_gaussian(
    table: &GainTable,
    received: &[bool],
    y0: usize,
    policy: &StoppingPolicy,
    bound: &ExpBoundParams,
) -> StopDecision {
    let profile = gain_profile(table, received, y0, policy.horizon);
    stop_gaussian_on_profile(bound, &profile, policy.cost_per_slot)
}

/// `C(n, k) (1 - p_o)^k p_o^(n - k)`: probability that `k` of `n` slots get
/// through.
pub fn binom_pmf(k: usize, n: usize, outage_prob: f64) -> f64 {
    assert!(k <= n, "successes exceed trials");
    let k_small = k.min(n - k);
    let mut coeff = 1.0;
    for i in 0..k_small {
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    coeff * (1.0 - outage_prob).powi(k as i32) * outage_prob.powi((n - k) as i32)
}

/// `Phi(k_tx) = sum_{k'} tilde_H(G*(k')) p(k' | k_tx)`; needs
/// `profile.len() > k_tx`.
pub fn phi_on_profile(bound: &ExpBoundParams, profile: &[f64], k_tx: usize, outage_prob: f64) -> f64 {
    (0..=k_tx)
        .map(|k| bound.tilde_h(profile[k]) * binom_pmf(k, k_tx, outage_prob))
        .sum()
}

pub fn phi(
    table: &GainTable,
    received: &[bool],
    y0: usize,
    k_tx: usize,
    outage_prob: f64,
    bound: &ExpBoundParams,
) -> f64 {
    let profile = gain_profile(table, received, y0, k_tx);
    phi_on_profile(bound, &profile, k_tx, outage_prob)
}

/// Fading-channel rule: transmit iff the one-step reward exceeds
/// `c0 / (1 - p_o)`; `planned_k` minimises `Phi(k) + c0 k` over `0..=K`.
pub fn stop_fading_on_profile(
    bound: &ExpBoundParams,
    profile: &[f64],
    c0: f64,
    outage_prob: f64,
) -> StopDecision {
    let horizon = profile.len() - 1;
    if horizon == 0 {
        return StopDecision {
            transmit: false,
            planned_k: 0,
            reward: 0.0,
        };
    }
    let reward = bound.tilde_h(profile[0]) - bound.tilde_h(profile[1]);
    let phis: Vec<f64> = (0..=horizon)
        .map(|k| phi_on_profile(bound, profile, k, outage_prob))
        .collect();
    StopDecision {
        transmit: reward > c0 / (1.0 - outage_prob),
        planned_k: horizon_argmin(&phis, c0),
        reward,
    }
}

pub fn stop_fading(
    table: &GainTable,
    received: &[bool],
    y0: usize,
    policy: &StoppingPolicy,
    outage_prob: f64,
    bound: &ExpBoundParams,
) -> StopDecision {
    let profile = gain_profile(table, received, y0, policy.horizon);
    stop_fading_on_profile(bound, &profile, policy.cost_per_slot, outage_prob)
}

/// Largest violation of `Phi(k-1) + Phi(k+1) - 2 Phi(k) >= 0` over
/// `k = 1..K-1`; zero when there is nothing to check.
pub fn convexity_violation(bound: &ExpBoundParams, profile: &[f64], outage_prob: f64) -> f64 {
    let horizon = profile.len() - 1;
    let phis: Vec<f64> = (0..=horizon)
        .map(|k| phi_on_profile(bound, profile, k, outage_prob))
        .collect();
    phis.windows(3)
        .map(|w| -(w[0] + w[2] - 2.0 * w[1]))
        .fold(0.0, f64::max)
}

pub fn convexity_check(
    table: &GainTable,
    received: &[bool],
    y0: usize,
    horizon: usize,
    outage_prob: f64,
    bound: &ExpBoundParams,
) -> f64 {
    let profile = gain_profile(table, received, y0, horizon);
    convexity_violation(bound, &profile, outage_prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::calibrate;

    fn env(c1: f64, c2: f64) -> ExpBoundParams {
        ExpBoundParams {
            delta1: 0.0,
            c1,
            c2,
            grid: vec![],
            expected: vec![],
        }
    }

    #[test]
    fn cumulative_gain_examples() {
        let t = GainTable::from_gains(vec![5.0, 3.0, 9.0, 1.0]);
        let none = vec![false; 4];
        assert_eq!(cumulative_gain(&t, &none, 2, 0), 0.0);
        assert_eq!(cumulative_gain(&t, &none, 2, 1), 14.0);
        assert_eq!(cumulative_gain(&t, &none, 2, 5), 18.0);
        let all = vec![true; 4];
        assert_eq!(gain_profile(&t, &all, 2, 3), vec![0.0; 4]);
        assert_eq!(gain_profile(&t, &none, 1, 3), vec![0.0, 9.0, 14.0, 17.0]);
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom_pmf(0, 0, 0.3), 1.0);
        assert!((binom_pmf(1, 2, 0.1) - 0.18).abs() < 1e-15);
        assert_eq!(binom_pmf(3, 3, 0.0), 1.0);
        for n in 0..=20 {
            let s: f64 = (0..=n).map(|k| binom_pmf(k, n, 0.37)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_cost_never_transmits() {
        let b = env(1.0, 0.125);
        let d = stop_gaussian_on_profile(&b, &[0.0, 5.0, 9.0, 12.0], 10.0);
        assert!(!d.transmit);
        assert_eq!(d.planned_k, 0);
    }

    #[test]
    fn free_transmission_runs_to_horizon_or_exhaustion() {
        let b = env(1.0, 0.125);
        let d = stop_gaussian_on_profile(&b, &[0.0, 5.0, 9.0, 12.0], 1e-12);
        assert!(d.transmit);
        assert_eq!(d.planned_k, 3);
        // features run out after two slots
        let d = stop_gaussian_on_profile(&b, &[0.0, 5.0, 9.0, 9.0, 9.0], 1e-12);
        assert_eq!(d.planned_k, 2);
    }

    #[test]
    fn nothing_left_plans_zero() {
        let b = env(1.0, 0.125);
        let d = stop_gaussian_on_profile(&b, &[0.0; 6], 1e-12);
        assert_eq!((d.transmit, d.planned_k), (false, 0));
        let d = stop_fading_on_profile(&b, &[0.0; 6], 1e-12, 0.2);
        assert_eq!((d.transmit, d.planned_k), (false, 0));
    }

    #[test]
    fn phi_limits() {
        let b = env(0.8, 0.1);
        let profile = [0.0, 4.0, 7.0, 9.0];
        assert_eq!(phi_on_profile(&b, &profile, 0, 0.3), 0.8);
        for k in 0..4 {
            assert!((phi_on_profile(&b, &profile, k, 0.0) - b.tilde_h(profile[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn fading_without_outage_matches_gaussian() {
        let b = calibrate(BoundFit::Fixed, 0.4, &[0.0, 6.0, 10.0, 12.5], 1e-9).unwrap();
        let profile = [0.0, 6.0, 10.0, 12.5];
        for c0 in [1e-3, 0.05, 0.2, 0.5] {
            let g = stop_gaussian_on_profile(&b, &profile, c0);
            let f = stop_fading_on_profile(&b, &profile, c0, 0.0);
            assert_eq!(g, f, "c0 = {c0}");
        }
    }

    #[test]
    fn fading_threshold_flips_at_expected_outage() {
        let b = env(1.0, 0.125);
        let profile = [0.0, 8.0, 12.0];
        let reward = 1.0 - (-1.0f64).exp();
        let c0 = 0.3;
        let flip = 1.0 - c0 / reward;
        assert!(stop_fading_on_profile(&b, &profile, c0, flip - 1e-6).transmit);
        assert!(!stop_fading_on_profile(&b, &profile, c0, flip + 1e-6).transmit);
    }

    #[test]
    fn policy_validation() {
        assert!(StoppingPolicy::new(0.0, 5).is_err());
        assert!(StoppingPolicy::new(0.1, 0).is_err());
        assert!(StoppingPolicy::new(0.1, 5).unwrap().with_target(Some(-1.0)).is_err());
    }
}
