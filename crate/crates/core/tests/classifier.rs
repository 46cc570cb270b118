use progressftx::linclass::{
    binary_entropy, classify, differential_distance, distances, entropy, posteriors, softmin,
    PartialFeatureVector,
};
use progressftx::statmodel::GmModel;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_class(dim: usize, seed: u64) -> GmModel {
    let profile: Vec<f64> = (0..dim).map(|n| 1.0 + (n as f64 * 0.37 + seed as f64).sin().abs()).collect();
    GmModel::synthesize(2, &profile, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #[test]
    fn posteriors_normalize_at_extreme_distances(delta in -700.0f64..700.0, offset in -50.0f64..50.0) {
        let p = softmin(&[offset + delta, offset]).probs;
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_is_the_posterior_entropy(delta in -700.0f64..700.0) {
        let p = softmin(&[delta, 0.0]).probs;
        let direct: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
        prop_assert!((direct - binary_entropy(delta)).abs() < 1e-12);
    }

    #[test]
    fn entropy_matches_differential_distance(seed in 0u64..500, keep in 0usize..8) {
        let model = two_class(8, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = model.sample(&mut rng, None).unwrap();
        let idx: Vec<usize> = (0..keep).collect();
        let pfv = PartialFeatureVector::from_subset(&s.features, &idx).unwrap();
        let d = differential_distance(&pfv, &model, (0, 1)).unwrap();
        prop_assert!((entropy(&pfv, &model).unwrap() - binary_entropy(d)).abs() < 1e-12);
    }

    #[test]
    fn label_is_the_most_probable_class(seed in 0u64..500, classes in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = GmModel::synthesize(classes, &[1.0, 2.0, 0.5, 3.0], &mut rng).unwrap();
        let s = model.sample(&mut rng, None).unwrap();
        let pfv = PartialFeatureVector::from_subset(&s.features, &[0, 1, 3]).unwrap();
        let p = posteriors(&pfv, &model).unwrap().probs;
        let label = classify(&pfv, &model).unwrap();
        prop_assert!(p.iter().all(|&v| v <= p[label]));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn placement_accumulates_in_arrival_order(order in Just((0..10usize).collect::<Vec<_>>()).prop_shuffle(), split in 0usize..10) {
        let full: Vec<f64> = (0..10).map(|n| n as f64 * 0.5 - 2.0).collect();
        let mut pfv = PartialFeatureVector::empty(10);
        for chunk in [&order[..split], &order[split..]] {
            let inc: Vec<f64> = chunk.iter().map(|&n| full[n]).collect();
            pfv.place(chunk, &inc).unwrap();
        }
        prop_assert_eq!(pfv.received(), &order[..]);
        prop_assert!(pfv.is_complete());
        prop_assert_eq!(pfv.dense(), &full[..]);
    }
}

#[test]
fn unreceived_coordinates_do_not_count() {
    let model = two_class(3, 1);
    let a = PartialFeatureVector::from_subset(&[0.3, 100.0, -4.0], &[0]).unwrap();
    let b = PartialFeatureVector::from_subset(&[0.3, -7.0, 9.0], &[0]).unwrap();
    assert_eq!(distances(&a, &model).unwrap(), distances(&b, &model).unwrap());
}

#[test]
fn dimension_mismatch_is_an_error() {
    let model = two_class(3, 1);
    assert!(distances(&PartialFeatureVector::empty(4), &model).is_err());
    assert!(differential_distance(&PartialFeatureVector::empty(3), &model, (0, 2)).is_err());
}
