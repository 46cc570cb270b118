//! Per-sample transmission loop and the two baseline schemes.
//!
//! Each slot the server checks the uncertainty target, picks the next
//! features, decides whether to continue, and then either receives the
//! increment or loses it to an outage. A lost increment is sent again in the
//! following slot. Every slot on air counts towards latency.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{calibrate, min_pairwise_delta, multiclass_entropy_ub, ExpBoundParams};
use crate::channel::{ChannelModel, SlotOutcome};
use crate::error::{Error, Result};
use crate::gains::{select, GainTable};
use crate::linclass::{classify, differential_distance, entropy, PartialFeatureVector};
use crate::statmodel::{GmModel, Sample};
use crate::stopping::{
    gain_profile, stop_fading_on_profile, stop_gaussian_on_profile, StopDecision, StoppingPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Importance-aware selection with per-slot optimal stopping.
    ProgressFtx,
    /// Feature count fixed before transmission from the target `h0`.
    OneShot { h0: f64 },
    /// Uniformly random selection, same stopping control as ProgressFTX.
    RandomFeatureStopping,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::ProgressFtx => "progressftx",
            SchemeKind::OneShot { .. } => "oneshot",
            SchemeKind::RandomFeatureStopping => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackSignal {
    TransmitNew(Vec<usize>),
    Retransmit,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub signal: FeedbackSignal,
    /// `None` for the closing stop signal.
    pub outcome: Option<SlotOutcome>,
    pub entropy_after: f64,
}

/// Transcript of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub slots_used: usize,
    pub features_delivered: Vec<usize>,
    pub outage_count: usize,
    pub final_label: usize,
    pub true_label: usize,
    pub final_entropy: f64,
    pub slots: Vec<SlotRecord>,
}

impl TrialLog {
    pub fn correct(&self) -> bool {
        self.final_label == self.true_label
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trial log is always serializable")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::ConfigValue(format!("bad trial record: {e}")))
    }
}

/// Server-side state between slots.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    pub pfv: PartialFeatureVector,
    /// Next slot index, starting at 1.
    pub slot: usize,
    pub pending_retx: Option<Vec<usize>>,
    pub stopped: bool,
}

impl TrialState {
    pub fn new(dim: usize) -> Self {
        TrialState {
            pfv: PartialFeatureVector::empty(dim),
            slot: 1,
            pending_retx: None,
            stopped: false,
        }
    }
}

/// Smallest `k` with `tilde_H(0, G*(k)) <= h0` on the full table, capped at
/// `ceil(N / Y0)`.
pub fn plan_one_shot(table: &GainTable, y0: usize, h0: f64, policy: &StoppingPolicy) -> Result<usize> {
    if !(h0 > 0.0) {
        return Err(Error::InvalidPolicy(format!("one-shot target must be positive, got {h0}")));
    }
    let cap = table.dim().div_ceil(y0);
    let profile = gain_profile(table, &vec![false; table.dim()], y0, cap);
    let bound = calibrate(policy.bound_fit, 0.0, &profile, policy.quad_tol)?;
    Ok(profile
        .iter()
        .position(|&g| bound.tilde_h(g) <= h0)
        .unwrap_or(cap))
}

/// Runs trials for one scheme under one channel and policy.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a GmModel,
    table: &'a GainTable,
    channel: ChannelModel,
    policy: StoppingPolicy,
    scheme: SchemeKind,
    y0: usize,
    one_shot: Vec<Vec<usize>>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        model: &'a GmModel,
        table: &'a GainTable,
        channel: ChannelModel,
        policy: StoppingPolicy,
        scheme: SchemeKind,
    ) -> Result<Self> {
        if table.dim() != model.dim() {
            return Err(Error::InvalidModel(format!(
                "gain table has {} dimensions, model has {}",
                table.dim(),
                model.dim()
            )));
        }
        policy.validate()?;
        let y0 = channel.features_per_slot()?;
        let one_shot = match scheme {
            SchemeKind::OneShot { h0 } => {
                let k = plan_one_shot(table, y0, h0, &policy)?;
                select(table, &vec![false; table.dim()], &vec![y0; k]).subsets
            }
            _ => Vec::new(),
        };
        Ok(Simulator {
            model,
            table,
            channel,
            policy,
            scheme,
            y0,
            one_shot,
        })
    }

    pub fn features_per_slot(&self) -> usize {
        self.y0
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    /// Planned one-shot subsets; empty for the other schemes.
    pub fn one_shot_plan(&self) -> &[Vec<usize>] {
        &self.one_shot
    }

    pub fn run_trial<R: Rng + ?Sized>(&self, sample: &Sample, rng: &mut R) -> Result<TrialLog> {
        let channel = self.channel;
        self.run_with(sample, rng, |r| channel.slot_outcome(r))
    }

    /// Like [`run_trial`](Self::run_trial) with the first slot outcomes
    /// given by `outcomes`; later slots are delivered.
    pub fn run_trial_scripted<R: Rng + ?Sized>(
        &self,
        sample: &Sample,
        rng: &mut R,
        outcomes: &[SlotOutcome],
    ) -> Result<TrialLog> {
        let mut script = outcomes.iter().copied();
        self.run_with(sample, rng, move |_| script.next().unwrap_or(SlotOutcome::Delivered))
    }

    fn run_with<R, F>(&self, sample: &Sample, rng: &mut R, mut outcome: F) -> Result<TrialLog>
    where
        R: Rng + ?Sized,
        F: FnMut(&mut R) -> SlotOutcome,
    {
        if sample.features.len() != self.model.dim() {
            return Err(Error::FeatureOutOfRange {
                index: sample.features.len().saturating_sub(1),
                dim: self.model.dim(),
            });
        }
        let mut state = TrialState::new(self.model.dim());
        let mut slots = Vec::new();
        let mut outages = 0;
        let mut planned = self.one_shot.iter();

        while !state.stopped {
            let indices = match state.pending_retx.take() {
                Some(indices) => {
                    slots.push(SlotRecord {
                        signal: FeedbackSignal::Retransmit,
                        outcome: None,
                        entropy_after: 0.0,
                    });
                    indices
                }
                None => match self.next_subset(&state, &mut planned, rng)? {
                    Some(indices) => {
                        slots.push(SlotRecord {
                            signal: FeedbackSignal::TransmitNew(indices.clone()),
                            outcome: None,
                            entropy_after: 0.0,
                        });
                        indices
                    }
                    None => {
                        state.stopped = true;
                        slots.push(SlotRecord {
                            signal: FeedbackSignal::Stop,
                            outcome: None,
                            entropy_after: entropy(&state.pfv, self.model)?,
                        });
                        break;
                    }
                },
            };
            let result = outcome(rng);
            match result {
                SlotOutcome::Delivered => {
                    let increment: Vec<f64> = indices.iter().map(|&n| sample.features[n]).collect();
                    state.pfv.place(&indices, &increment)?;
                }
                SlotOutcome::Outage => {
                    outages += 1;
                    state.pending_retx = Some(indices);
                }
            }
            state.slot += 1;
            let record = slots.last_mut().expect("slot record just pushed");
            record.outcome = Some(result);
            record.entropy_after = entropy(&state.pfv, self.model)?;
        }

        Ok(TrialLog {
            slots_used: state.slot - 1,
            features_delivered: state.pfv.received().to_vec(),
            outage_count: outages,
            final_label: classify(&state.pfv, self.model)?,
            true_label: sample.label,
            final_entropy: entropy(&state.pfv, self.model)?,
            slots,
        })
    }

    /// Indices to send in a fresh slot, or `None` to stop.
    fn next_subset<R: Rng + ?Sized>(
        &self,
        state: &TrialState,
        planned: &mut std::slice::Iter<'_, Vec<usize>>,
        rng: &mut R,
    ) -> Result<Option<Vec<usize>>> {
        if let SchemeKind::OneShot { .. } = self.scheme {
            return Ok(planned.next().cloned());
        }
        if state.pfv.is_complete() {
            return Ok(None);
        }
        if let Some(target) = self.policy.uncertainty_target {
            if self.current_uncertainty(&state.pfv)? <= target {
                return Ok(None);
            }
        }
        let mask = state.pfv.mask();
        let (indices, profile) = match self.scheme {
            SchemeKind::ProgressFtx => (
                select(self.table, mask, &[self.y0]).subsets.remove(0),
                gain_profile(self.table, mask, self.y0, self.policy.horizon),
            ),
            _ => {
                let remaining: Vec<usize> = (0..mask.len()).filter(|&n| !mask[n]).collect();
                let take = remaining.len().min(self.y0);
                let mut indices: Vec<usize> = index::sample(rng, remaining.len(), take)
                    .into_iter()
                    .map(|j| remaining[j])
                    .collect();
                indices.sort_unstable();
                (indices, random_gain_profile(self.table, &remaining, self.y0, self.policy.horizon))
            }
        };
        let decision = self.decide(&state.pfv, &profile)?;
        Ok(decision.transmit.then_some(indices))
    }

    fn current_uncertainty(&self, pfv: &PartialFeatureVector) -> Result<f64> {
        if self.model.classes() == 2 {
            entropy(pfv, self.model)
        } else {
            multiclass_entropy_ub(pfv, self.model)
        }
    }

    fn delta1(&self, pfv: &PartialFeatureVector) -> Result<f64> {
        if self.model.classes() == 2 {
            differential_distance(pfv, self.model, (0, 1))
        } else {
            min_pairwise_delta(pfv, self.model)
        }
    }

    /// Stopping decision on the given lookahead profile, with the envelope
    /// recalibrated for the current state.
    pub fn decide(&self, pfv: &PartialFeatureVector, profile: &[f64]) -> Result<StopDecision> {
        let bound = self.bound(pfv, profile)?;
        let c0 = self.policy.cost_per_slot;
        Ok(if self.channel.is_fading() {
            stop_fading_on_profile(&bound, profile, c0, self.channel.outage_prob())
        } else {
            stop_gaussian_on_profile(&bound, profile, c0)
        })
    }

    pub fn bound(&self, pfv: &PartialFeatureVector, profile: &[f64]) -> Result<ExpBoundParams> {
        calibrate(self.policy.bound_fit, self.delta1(pfv)?, profile, self.policy.quad_tol)
    }
}

/// Expected cumulative gain of `k` random slots: `min(rem, Y0 k)` times the
/// mean remaining gain.
pub fn random_gain_profile(table: &GainTable, remaining: &[usize], y0: usize, horizon: usize) -> Vec<f64> {
    if remaining.is_empty() {
        return vec![0.0; horizon + 1];
    }
    let mean = table.subset_gain(remaining) / remaining.len() as f64;
    (0..=horizon)
        .map(|k| (y0 * k).min(remaining.len()) as f64 * mean)
        .collect()
}

/// Aggregate over a set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trials: usize,
    pub latency_mean: f64,
    /// Standard error of the mean latency.
    pub latency_stderr: f64,
    pub accuracy: f64,
    pub entropy_mean: f64,
    /// Lost slots over slots on air; zero when nothing was sent.
    pub outage_rate: f64,
    /// Fraction of trials in which each dimension was delivered.
    pub tx_prob: Vec<f64>,
}

pub fn metrics(logs: &[TrialLog], model: &GmModel) -> Result<Metrics> {
    if logs.is_empty() {
        return Err(Error::EmptyLogs);
    }
    let n = logs.len() as f64;
    let latency_mean = logs.iter().map(|l| l.slots_used as f64).sum::<f64>() / n;
    let latency_stderr = if logs.len() > 1 {
        let ss: f64 = logs
            .iter()
            .map(|l| (l.slots_used as f64 - latency_mean).powi(2))
            .sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    let slots: usize = logs.iter().map(|l| l.slots_used).sum();
    let outages: usize = logs.iter().map(|l| l.outage_count).sum();
    let mut tx_prob = vec![0.0; model.dim()];
    for log in logs {
        for &d in &log.features_delivered {
            tx_prob[d] += 1.0;
        }
    }
    tx_prob.iter_mut().for_each(|p| *p /= n);
    Ok(Metrics {
        trials: logs.len(),
        latency_mean,
        latency_stderr,
        accuracy: logs.iter().filter(|l| l.correct()).count() as f64 / n,
        entropy_mean: logs.iter().map(|l| l.final_entropy).sum::<f64>() / n,
        outage_rate: if slots == 0 { 0.0 } else { outages as f64 / slots as f64 },
        tx_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binary(profile: &[f64]) -> GmModel {
        let half: Vec<f64> = profile.iter().map(|g| g.sqrt() / 2.0).collect();
        let neg: Vec<f64> = half.iter().map(|v| -v).collect();
        GmModel::new(vec![neg, half], vec![1.0; profile.len()]).unwrap()
    }

    fn log(slots: usize, correct: bool) -> TrialLog {
        TrialLog {
            slots_used: slots,
            features_delivered: vec![],
            outage_count: 0,
            final_label: 0,
            true_label: if correct { 0 } else { 1 },
            final_entropy: 0.5,
            slots: vec![],
        }
    }

    #[test]
    fn latency_is_the_mean_slot_count() {
        let m = binary(&[1.0]);
        let r = metrics(&[log(1, true), log(3, false)], &m).unwrap();
        assert_eq!(r.latency_mean, 2.0);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.outage_rate, 0.0);
        let r = metrics(&[log(0, true), log(0, true)], &m).unwrap();
        assert_eq!(r.latency_mean, 0.0);
        assert!(metrics(&[], &m).is_err());
    }

    #[test]
    fn target_met_before_any_slot() {
        let m = binary(&[1.0, 0.5, 0.25]);
        let t = GainTable::new(&m);
        let ch = ChannelModel::fading(1, 0.0).unwrap();
        let policy = StoppingPolicy::new(1e-6, 5)
            .unwrap()
            .with_target(Some(2f64.ln()))
            .unwrap();
        let sim = Simulator::new(&m, &t, ch, policy, SchemeKind::ProgressFtx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = m.sample(&mut rng, Some(1)).unwrap();
        let l = sim.run_trial(&s, &mut rng).unwrap();
        assert_eq!(l.slots_used, 0);
        assert_eq!(l.final_label, 0);
        assert_eq!(l.slots.len(), 1);
        assert_eq!(l.slots[0].signal, FeedbackSignal::Stop);
    }

    #[test]
    fn one_shot_limits() {
        let t = GainTable::from_gains(vec![2.0, 1.0, 0.5, 0.25, 0.1]);
        let p = StoppingPolicy::new(0.1, 5).unwrap();
        assert_eq!(plan_one_shot(&t, 2, 10.0, &p).unwrap(), 0);
        assert_eq!(plan_one_shot(&t, 2, 1e-9, &p).unwrap(), 3);
        assert!(plan_one_shot(&t, 2, 0.0, &p).is_err());
    }

    #[test]
    fn random_profile_is_linear_until_exhausted() {
        let t = GainTable::from_gains(vec![4.0, 2.0, 0.0]);
        assert_eq!(random_gain_profile(&t, &[0, 1, 2], 2, 3), vec![0.0, 4.0, 6.0, 6.0]);
        assert_eq!(random_gain_profile(&t, &[], 2, 2), vec![0.0; 3]);
    }

    #[test]
    fn json_round_trip() {
        let mut l = log(2, true);
        l.slots.push(SlotRecord {
            signal: FeedbackSignal::TransmitNew(vec![3, 1]),
            outcome: Some(SlotOutcome::Outage),
            entropy_after: 0.25,
        });
        assert_eq!(TrialLog::from_json_line(&l.to_json_line()).unwrap(), l);
        assert!(!l.to_json_line().contains('\n'));
    }
}
