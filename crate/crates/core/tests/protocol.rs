use progressftx::bounds::calibrate;
use progressftx::channel::{db_to_linear, ChannelModel, SlotOutcome};
use progressftx::gains::GainTable;
use progressftx::harness::sweep::{simulate, trial_rng};
use progressftx::protocol::{metrics, plan_one_shot, FeedbackSignal, SchemeKind, Simulator};
use progressftx::statmodel::{default_profile, GmModel};
use progressftx::stopping::{gain_profile, StoppingPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn default_model() -> GmModel {
    GmModel::synthesize(2, &default_profile(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
}

fn gaussian() -> ChannelModel {
    ChannelModel::gaussian(20_000.0, 0.01, db_to_linear(4.0), 64.0).unwrap()
}

#[test]
fn free_transmission_sends_everything() {
    let model = default_model();
    let table = GainTable::new(&model);
    let policy = StoppingPolicy::new(1e-300, 5).unwrap();
    let sim = Simulator::new(&model, &table, gaussian(), policy, SchemeKind::ProgressFtx).unwrap();
    for t in 0..20 {
        let mut rng = trial_rng(3, t);
        let s = model.sample(&mut rng, None).unwrap();
        let log = sim.run_trial(&s, &mut rng).unwrap();
        assert_eq!(log.slots_used, 8);
        assert_eq!(log.features_delivered, table.order());
        assert_eq!(log.outage_count, 0);
    }
}

#[test]
fn zero_slot_trial_at_log_two_target() {
    let model = default_model();
    let table = GainTable::new(&model);
    let policy = StoppingPolicy::new(1e-6, 5).unwrap().with_target(Some(2f64.ln())).unwrap();
    for scheme in [SchemeKind::ProgressFtx, SchemeKind::RandomFeatureStopping] {
        let sim = Simulator::new(&model, &table, gaussian(), policy, scheme).unwrap();
        let mut rng = trial_rng(1, 0);
        let s = model.sample(&mut rng, None).unwrap();
        let log = sim.run_trial(&s, &mut rng).unwrap();
        assert_eq!(log.slots_used, 0);
        assert_eq!(log.final_label, 0);
        assert!((log.final_entropy - 2f64.ln()).abs() < 1e-15);
    }
}

#[test]
fn outage_delays_but_keeps_the_sequence() {
    let model = default_model();
    let table = GainTable::new(&model);
    let channel = ChannelModel::fading(5, 0.1).unwrap();
    let policy = StoppingPolicy::new(0.01, 5).unwrap();
    let sim = Simulator::new(&model, &table, channel, policy, SchemeKind::ProgressFtx).unwrap();
    let mut rng = trial_rng(8, 0);
    let s = model.sample(&mut rng, Some(1)).unwrap();
    let clean = sim.run_trial_scripted(&s, &mut rng.clone(), &[]).unwrap();
    let lossy = sim
        .run_trial_scripted(&s, &mut rng, &[SlotOutcome::Outage, SlotOutcome::Delivered, SlotOutcome::Outage])
        .unwrap();
    assert!(clean.slots_used >= 2);
    let FeedbackSignal::TransmitNew(first) = &lossy.slots[0].signal else { panic!("slot 1 must send new features") };
    assert_eq!(lossy.slots[0].outcome, Some(SlotOutcome::Outage));
    assert_eq!(lossy.slots[1].signal, FeedbackSignal::Retransmit);
    assert_eq!(first, &table.order()[..5]);
    assert_eq!(lossy.features_delivered, clean.features_delivered);
    assert_eq!(lossy.outage_count, 2);
    assert_eq!(lossy.slots_used, clean.slots_used + 2);
    assert_eq!(lossy.final_label, clean.final_label);
}

#[test]
fn logs_are_consistent() {
    let model = default_model();
    let table = GainTable::new(&model);
    let channel = ChannelModel::fading(5, 0.3).unwrap();
    for scheme in [SchemeKind::ProgressFtx, SchemeKind::RandomFeatureStopping, SchemeKind::OneShot { h0: 0.1 }] {
        let policy = StoppingPolicy::new(0.002, 5).unwrap();
        let sim = Simulator::new(&model, &table, channel, policy, scheme).unwrap();
        for log in simulate(&sim, &model, 300, 11).unwrap() {
            let mut seen = vec![false; model.dim()];
            for &n in &log.features_delivered {
                assert!(!std::mem::replace(&mut seen[n], true), "feature {n} delivered twice");
            }
            let on_air = log.slots.iter().filter(|r| r.outcome.is_some()).count();
            assert_eq!(on_air, log.slots_used);
            let lost = log.slots.iter().filter(|r| r.outcome == Some(SlotOutcome::Outage)).count();
            assert_eq!(lost, log.outage_count);
            let sent: Vec<usize> = log
                .slots
                .iter()
                .filter_map(|r| match &r.signal {
                    FeedbackSignal::TransmitNew(v) => Some(v.clone()),
                    _ => None,
                })
                .flatten()
                .collect();
            let mut a = sent.clone();
            let mut b = log.features_delivered.clone();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b, "{scheme:?}");
        }
    }
}

#[test]
fn gaussian_latency_never_exceeds_full_transmission() {
    let model = default_model();
    let table = GainTable::new(&model);
    for c0 in [1e-6, 1e-3, 0.05] {
        let policy = StoppingPolicy::new(c0, 5).unwrap();
        let sim = Simulator::new(&model, &table, gaussian(), policy, SchemeKind::ProgressFtx).unwrap();
        assert!(simulate(&sim, &model, 200, 2).unwrap().iter().all(|l| l.slots_used <= 8));
    }
}

#[test]
fn one_shot_ignores_the_sample() {
    let model = default_model();
    let table = GainTable::new(&model);
    let policy = StoppingPolicy::new(1.0, 5).unwrap();
    let sim = Simulator::new(&model, &table, ChannelModel::fading(5, 0.2).unwrap(), policy, SchemeKind::OneShot { h0: 0.2 })
        .unwrap();
    let logs = simulate(&sim, &model, 200, 5).unwrap();
    let expected: Vec<usize> = sim.one_shot_plan().concat();
    assert!(!expected.is_empty());
    assert!(logs.iter().all(|l| l.features_delivered == expected));
    assert!(logs.iter().all(|l| l.slots_used == sim.one_shot_plan().len() + l.outage_count));
}

#[test]
fn one_shot_plan_matches_linear_search() {
    let model = default_model();
    let table = GainTable::new(&model);
    let policy = StoppingPolicy::new(1.0, 5).unwrap();
    let grid = gain_profile(&table, &[false; 40], 5, 8);
    let bound = calibrate(policy.bound_fit, 0.0, &grid, policy.quad_tol).unwrap();
    for h0 in [2.0, 1.0, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.01, 1e-4] {
        let oracle = grid.iter().position(|&g| bound.tilde_h(g) <= h0).unwrap_or(8);
        assert_eq!(plan_one_shot(&table, 5, h0, &policy).unwrap(), oracle, "h0 = {h0}");
    }
    assert_eq!(plan_one_shot(&table, 5, 1e-12, &policy).unwrap(), 8);
}

#[test]
fn top_dimension_is_sent_at_least_as_often_as_the_bottom() {
    let model = default_model();
    let table = GainTable::new(&model);
    let policy = StoppingPolicy::new(0.01, 5).unwrap();
    let sim = Simulator::new(&model, &table, gaussian(), policy, SchemeKind::ProgressFtx).unwrap();
    let m = metrics(&simulate(&sim, &model, 10_000, 6).unwrap(), &model).unwrap();
    assert!(m.tx_prob[table.order()[0]] >= m.tx_prob[table.order()[39]]);
    assert_eq!(m.tx_prob[table.order()[0]], 1.0);
}

#[test]
fn multiclass_runs_end_to_end() {
    let model = GmModel::synthesize(4, &default_profile(), &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
    let table = GainTable::new(&model);
    let policy = StoppingPolicy::new(0.01, 5).unwrap().with_target(Some(0.05)).unwrap();
    let sim = Simulator::new(&model, &table, gaussian(), policy, SchemeKind::ProgressFtx).unwrap();
    let m = metrics(&simulate(&sim, &model, 500, 4).unwrap(), &model).unwrap();
    assert!(m.latency_mean > 0.0 && m.latency_mean <= 8.0);
    assert!(m.accuracy > 0.5);
}
