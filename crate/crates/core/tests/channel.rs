use progressftx::channel::{db_to_linear, ChannelModel, SlotOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn outage_frequency_within_three_sigma() {
    let ch = ChannelModel::fading(5, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 100_000;
    let lost = (0..n).filter(|_| ch.slot_outcome(&mut rng) == SlotOutcome::Outage).count();
    let f = lost as f64 / n as f64;
    assert!((0.094..=0.106).contains(&f), "{f}");
}

#[test]
fn outage_draws_are_reproducible() {
    let ch = ChannelModel::fading(5, 0.4).unwrap();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..200).map(|_| ch.slot_outcome(&mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(draw(7), draw(7));
    assert_ne!(draw(7), draw(8));
}

#[test]
fn invalid_channels() {
    assert!(ChannelModel::fading(5, 1.0).is_err());
    assert!(ChannelModel::fading(5, -0.1).is_err());
    assert!(ChannelModel::fading(0, 0.1).is_err());
    assert!(ChannelModel::gaussian(0.0, 0.01, 2.0, 64.0).is_err());
    assert!(ChannelModel::gaussian(20_000.0, 0.01, 0.0, 64.0).is_err());
    // 1 bit/s/Hz over 20 Hz slots cannot carry a 64-bit feature
    assert!(ChannelModel::gaussian(20.0, 1.0, 1.0, 64.0).is_err());
}

#[test]
fn gaussian_rate_is_floored() {
    // 20 kHz * 0.01 s * log2(1 + 10^0.4) / 64 = 5.28...
    let ch = ChannelModel::gaussian(20_000.0, 0.01, db_to_linear(4.0), 64.0).unwrap();
    assert_eq!(ch.features_per_slot().unwrap(), 5);
    assert_eq!(ch.outage_prob(), 0.0);
    assert!(!ch.is_fading());
}
