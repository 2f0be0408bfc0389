use num_complex::Complex64;
use proptest::prelude::*;

use telepovm::analysis::{enumerate_all_branches, total_success_probability};
use telepovm::povm::{min_valid_x, DistortionVector};
use telepovm::protocol::{bell_branches, build_world_state, Channel, Payload};

fn coefficient() -> impl Strategy<Value = f64> {
    (0.1f64..1.0, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v })
}

fn channel() -> impl Strategy<Value = Channel> {
    [coefficient(), coefficient(), coefficient(), coefficient()].prop_map(|raw| Channel::normalized(raw).unwrap())
}

fn payload() -> impl Strategy<Value = Payload> {
    prop::array::uniform4((-1.0f64..1.0, -1.0f64..1.0))
        .prop_filter("non-zero", |c| c.iter().any(|(re, im)| re.abs() + im.abs() > 1e-3))
        .prop_map(|c| Payload::normalized(c.map(|(re, im)| Complex64::new(re, im))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bell_probabilities_sum_to_one(p in payload(), ch in channel()) {
        let world = build_world_state(&p, &ch).unwrap();
        let total: f64 = bell_branches(&world).unwrap().iter().map(|(_, proj)| proj.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_matches_closed_form_and_never_errs(p in payload(), ch in channel(), t in 0.0f64..=1.0) {
        let x_min = min_valid_x(&DistortionVector::from_channel(&ch));
        let x = x_min + t * (4.0 - x_min);
        let e = enumerate_all_branches(&p, &ch, x).unwrap();
        prop_assert!((e.total - total_success_probability(&ch, x).unwrap()).abs() < 1e-10);
        prop_assert!(e.min_success_fidelity().unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn best_rate_is_four_times_smallest_weight(ch in channel()) {
        let x_min = min_valid_x(&DistortionVector::from_channel(&ch));
        let smallest = ch.coefficients().iter().map(|c| c * c).fold(f64::INFINITY, f64::min);
        prop_assert!((total_success_probability(&ch, x_min).unwrap() - 4.0 * smallest).abs() < 1e-12);
    }
}
